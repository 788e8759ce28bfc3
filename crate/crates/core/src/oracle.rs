//! Finite-difference reference spectrum on a Dirichlet box.
//!
//! Second-order five-point Laplacian, centered first differences for the
//! spin-orbit block, Dirichlet data on `[-L, L]²`. Eigenvalues below the
//! discrete threshold are found by a shift-and-invert block Krylov method
//! with thick restarts on top of a sparse Cholesky factorization.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Accum, Mat, MatRef, Par, Side};
use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dispersion::{minimize_2d, Coupling};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::potential::Potential;
use crate::variational::BoundReport;
use crate::vec2::Vec2;
use crate::C64;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationConfig {
    /// box half-width L
    pub half_width: f64,
    /// interior nodes per axis
    pub n: usize,
    /// bound on ‖(H − E)ψ‖ for unit ψ, relative to max(1, |E|)
    pub resid_tol: f64,
    /// how far below the discrete threshold an eigenvalue must sit to count
    pub margin: Option<f64>,
    /// eigenpairs requested up front; defaults to 8
    pub wanted: Option<usize>,
    pub max_eigenpairs: usize,
    pub block_size: usize,
    pub max_basis: usize,
    pub max_iterations: usize,
    /// repeat on an n/2 grid and compare
    pub drift_check: bool,
    pub drift_tol: f64,
    pub seed: u64,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        DiscretizationConfig {
            half_width: 40.0,
            n: 512,
            resid_tol: 1e-8,
            margin: None,
            wanted: None,
            max_eigenpairs: 32,
            block_size: 4,
            max_basis: 48,
            max_iterations: 400,
            drift_check: true,
            drift_tol: 1e-3,
            seed: 7,
        }
    }
}

impl DiscretizationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidInput(format!("half_width must be positive, got {}", self.half_width)));
        }
        if self.n < 64 {
            return Err(Error::InvalidInput(format!("n must be at least 64, got {}", self.n)));
        }
        if !(self.resid_tol > 0.0) {
            return Err(Error::InvalidInput("resid_tol must be positive".into()));
        }
        if self.block_size < 2 {
            return Err(Error::InvalidInput("block_size must be at least 2".into()));
        }
        if self.max_eigenpairs < 2 {
            return Err(Error::InvalidInput("max_eigenpairs must be at least 2".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n as f64 + 1.0)
    }
}

/// Sparse Hermitian matrix of the discretized operator.
pub struct SpinorOperator {
    pub n: usize,
    pub half_width: f64,
    pub h: f64,
    /// nodes where a tabulated potential had no data and was set to zero
    pub outside: usize,
    pub v_min: f64,
    matrix: SparseColMat<usize, C64>,
    diag: Vec<usize>,
    symbolic: SymbolicLlt<usize>,
}

impl SpinorOperator {
    pub fn new(coupling: &Coupling, potential: &Potential, n: usize, half_width: f64) -> Result<Self> {
        let [cx, cy] = coupling.linear().ok_or_else(|| {
            Error::UnsupportedCoupling(format!("{} has no finite-difference form", coupling.name()))
        })?;
        if n < 3 {
            return Err(Error::InvalidInput(format!("grid too small: n = {n}")));
        }
        let h = 2.0 * half_width / (n as f64 + 1.0);
        let node = |i: usize| -half_width + (i as f64 + 1.0) * h;
        let idx = |i: usize, j: usize, s: usize| 2 * (i * n + j) + s;
        let lap = 1.0 / (h * h);
        let mi = C64::new(0.0, -1.0 / (2.0 * h));
        let mut outside = 0;
        let mut v_min = f64::INFINITY;
        let mut trip = Vec::with_capacity(18 * n * n);
        for i in 0..n {
            for j in 0..n {
                let (v, out) = potential.eval_lenient(Vec2::new(node(i), node(j)));
                outside += out as usize;
                v_min = v_min.min(v);
                for s in 0..2 {
                    trip.push(Triplet::new(idx(i, j, s), idx(i, j, s), C64::new(4.0 * lap + v, 0.0)));
                }
                let mut hop = |ii: usize, jj: usize, sign: f64, c: C64| {
                    for s in 0..2 {
                        trip.push(Triplet::new(idx(i, j, s), idx(ii, jj, s), C64::new(-lap, 0.0)));
                    }
                    // upper block c·P, lower block c̄·P with P = −i·(centered difference)
                    trip.push(Triplet::new(idx(i, j, 0), idx(ii, jj, 1), c * mi * sign));
                    trip.push(Triplet::new(idx(i, j, 1), idx(ii, jj, 0), c.conj() * mi * sign));
                };
                if i + 1 < n {
                    hop(i + 1, j, 1.0, cx);
                }
                if i > 0 {
                    hop(i - 1, j, -1.0, cx);
                }
                if j + 1 < n {
                    hop(i, j + 1, 1.0, cy);
                }
                if j > 0 {
                    hop(i, j - 1, -1.0, cy);
                }
            }
        }
        if outside > 0 {
            warn!("{outside} grid nodes fall outside the tabulated potential and use V = 0");
        }
        let dim = 2 * n * n;
        let matrix = SparseColMat::<usize, C64>::try_new_from_triplets(dim, dim, &trip)
            .map_err(|e| Error::Factorization(format!("sparse assembly: {e:?}")))?;
        drop(trip);
        let mut diag = Vec::with_capacity(dim);
        {
            let m = matrix.as_ref();
            let (cp, ri) = (m.col_ptr(), m.row_idx());
            for c in 0..dim {
                let pos = (cp[c]..cp[c + 1])
                    .find(|&k| ri[k] == c)
                    .ok_or_else(|| Error::Factorization("missing diagonal entry".into()))?;
                diag.push(pos);
            }
        }
        let symbolic = SymbolicLlt::try_new(matrix.symbolic(), Side::Lower)
            .map_err(|e| Error::Factorization(format!("symbolic Cholesky: {e:?}")))?;
        Ok(SpinorOperator { n, half_width, h, outside, v_min, matrix, diag, symbolic })
    }

    pub fn dim(&self) -> usize {
        2 * self.n * self.n
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 1.0) * self.h
    }

    /// y = H x, column by column.
    pub fn apply(&self, x: MatRef<'_, C64>) -> Mat<C64> {
        let m = self.matrix.as_ref();
        let (cp, ri, val) = (m.col_ptr(), m.row_idx(), m.val());
        let mut y = Mat::<C64>::zeros(x.nrows(), x.ncols());
        for k in 0..x.ncols() {
            let xc = x.col(k);
            let yc = y.col_as_slice_mut(k);
            for c in 0..self.dim() {
                let xv = xc[c];
                for p in cp[c]..cp[c + 1] {
                    yc[ri[p]] += val[p] * xv;
                }
            }
        }
        y
    }

    /// Dense copy, only sensible for small grids.
    pub fn to_dense(&self) -> CMat {
        let d = self.dim();
        let m = self.matrix.as_ref();
        let (cp, ri, val) = (m.col_ptr(), m.row_idx(), m.val());
        let mut out = Mat::<C64>::zeros(d, d);
        for c in 0..d {
            for p in cp[c]..cp[c + 1] {
                out[(ri[p], c)] = val[p];
            }
        }
        out
    }

    /// Cholesky factor of H − σ; fails when σ is not below the spectrum.
    fn factor(&self, sigma: f64) -> Result<Llt<usize, C64>> {
        let mut shifted = self.matrix.clone();
        {
            let vals = shifted.val_mut();
            for &p in &self.diag {
                vals[p].re -= sigma;
            }
        }
        Llt::try_new_with_symbolic(self.symbolic.clone(), shifted.as_ref(), Side::Lower)
            .map_err(|e| Error::Factorization(format!("H - {sigma} is not positive definite: {e:?}")))
    }
}

/// Minimum over the Brillouin zone of the lower band of the lattice symbol.
/// The box operator is a compression of the lattice one, so this bounds its spectrum from below.
pub fn lattice_kappa(coupling: &Coupling, h: f64) -> Result<f64> {
    let [cx, cy] = coupling
        .linear()
        .ok_or_else(|| Error::UnsupportedCoupling(coupling.name()))?;
    let f = |k: Vec2| -> Result<f64> {
        let (sx, sy) = ((k.x * h).sin() / h, (k.y * h).sin() / h);
        let lap = (4.0 - 2.0 * (k.x * h).cos() - 2.0 * (k.y * h).cos()) / (h * h);
        Ok(lap - (cx * sx + cy * sy).norm())
    };
    let m = 256;
    let kmax = std::f64::consts::PI / h;
    let mut samples = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            let k = Vec2::new(
                -kmax + 2.0 * kmax * (a as f64 + 0.5) / m as f64,
                -kmax + 2.0 * kmax * (b as f64 + 0.5) / m as f64,
            );
            samples.push((f(k)?, k));
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = f(Vec2::ZERO)?;
    let step = 2.0 * kmax / m as f64;
    for &(_, k) in samples.iter().take(16) {
        let (v, _) = minimize_2d(f, k, step, kmax)?;
        best = best.min(v);
    }
    Ok(best)
}

#[derive(Debug, Clone)]
struct Eigenpairs {
    values: Vec<f64>,
    vectors: Mat<C64>,
    residuals: Vec<f64>,
    /// every Ritz value of the final basis, ascending
    ritz: Vec<f64>,
    solves: usize,
    iterations: usize,
}

fn random_block(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat<C64> {
    Mat::from_fn(rows, cols, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn col_norms(z: &Mat<C64>) -> Vec<f64> {
    (0..z.ncols()).map(|j| norm(z.col_as_slice(j))).collect()
}

/// Removes the span of `basis` (orthonormal columns) from `z`; a second pass
/// runs when some column lost most of its norm.
fn project_out(z: &mut Mat<C64>, basis: MatRef<'_, C64>) {
    if basis.ncols() == 0 || z.ncols() == 0 {
        return;
    }
    let mut before = col_norms(z);
    for _ in 0..3 {
        let c = basis.adjoint() * z.as_ref();
        matmul(z.as_mut(), Accum::Add, basis, c.as_ref(), C64::new(-1.0, 0.0), Par::Seq);
        let after = col_norms(z);
        if after.iter().zip(&before).all(|(a, b)| *a > 0.5 * b) {
            return;
        }
        before = after;
    }
}

/// Orthonormalizes the columns of `z` among themselves, dropping those below
/// 1e-10 of `reference`.
fn orthonormalize(mut z: Mat<C64>, reference: &[f64]) -> Mat<C64> {
    let mut keep: Vec<usize> = Vec::new();
    for j in 0..z.ncols() {
        for _ in 0..2 {
            for &i in &keep {
                let zi = z.col_as_slice(i).to_vec();
                let c = dot(&zi, z.col_as_slice(j));
                for (x, y) in z.col_as_slice_mut(j).iter_mut().zip(&zi) {
                    *x -= c * y;
                }
            }
        }
        let nj = norm(z.col_as_slice(j));
        if nj > 1e-10 * reference[j] && nj > 0.0 {
            z.col_as_slice_mut(j).iter_mut().for_each(|x| *x /= nj);
            keep.push(j);
        }
    }
    Mat::from_fn(z.nrows(), keep.len(), |r, c| z[(r, keep[c])])
}

/// The k eigenpairs of H closest to σ from above, by block Krylov on
/// T = (H − σ)⁻¹ with thick restarts. `accept(i, E, residual)` decides when
/// the i-th Ritz pair is good enough.
///
/// Only the newest block of T·V leaves span(V), so with Z = (I − VV*)·T·Q_last
/// the Ritz residual is T y − θ y = Z s_last, and (H − E) y = −(H − σ) Z s_last / θ.
#[allow(clippy::too_many_arguments)]
fn lowest(
    op: &SpinorOperator,
    llt: &Llt<usize, C64>,
    sigma: f64,
    k: usize,
    accept: &dyn Fn(usize, f64, f64) -> bool,
    cfg: &DiscretizationConfig,
    start: Option<MatRef<'_, C64>>,
    rng: &mut ChaCha8Rng,
) -> Result<Eigenpairs> {
    let dim = op.dim();
    let k = k.min(dim);
    let b = cfg.block_size.max(2).min(dim);
    let cap = cfg.max_basis.max(2 * k + 2 * b).min(dim);
    let mut v = Mat::<C64>::zeros(dim, cap);
    let mut hm = Mat::<C64>::zeros(cap, cap);
    let mut len = 0usize;
    let mut solves = 0usize;
    let first = match start {
        Some(s) if s.ncols() >= b => s.to_owned(),
        Some(s) => {
            let extra = random_block(rng, dim, b - s.ncols());
            Mat::from_fn(dim, b, |r, c| if c < s.ncols() { s[(r, c)] } else { extra[(r, c - s.ncols())] })
        }
        None => random_block(rng, dim, b),
    };
    let reference = col_norms(&first);
    let mut q = orthonormalize(first, &reference);
    let mut converged = 0;
    for it in 0..cfg.max_iterations {
        if q.ncols() == 0 {
            let mut z = random_block(rng, dim, b);
            let reference = col_norms(&z);
            project_out(&mut z, v.as_ref().subcols(0, len));
            q = orthonormalize(z, &reference);
        }
        let nb = q.ncols().min(cap - len);
        let mut w = q.subcols(0, nb).to_owned();
        llt.solve_in_place(w.as_mut());
        solves += nb;
        v.as_mut().subcols_mut(len, nb).copy_from(q.subcols(0, nb));
        let c = v.as_ref().subcols(0, len + nb).adjoint() * w.as_ref();
        for i in 0..len + nb {
            for j in 0..nb {
                hm[(i, len + j)] = c[(i, j)];
                hm[(len + j, i)] = c[(i, j)].conj();
            }
        }
        for i in 0..nb {
            for j in i..nb {
                let avg = (c[(len + i, j)] + c[(len + j, i)].conj()) * 0.5;
                hm[(len + i, len + j)] = avg;
                hm[(len + j, len + i)] = avg.conj();
            }
        }
        len += nb;
        let reference = col_norms(&w);
        let mut z = w;
        project_out(&mut z, v.as_ref().subcols(0, len));

        let (theta, s) = linalg::eigen(&hm.as_ref().submatrix(0, 0, len, len).to_owned())?;
        // largest θ first, i.e. eigenvalues of H nearest σ from above
        let order: Vec<usize> = (0..len).rev().filter(|&i| theta[i] > 0.0).collect();
        let kk = k.min(order.len());
        let tail = Mat::from_fn(nb, kk, |r, c| s[(len - nb + r, order[c])]);
        let rt = z.as_ref() * tail.as_ref();
        let mut hr = op.apply(rt.as_ref());
        matmul(hr.as_mut(), Accum::Add, rt.as_ref(), Mat::<C64>::identity(kk, kk).as_ref(), C64::new(-sigma, 0.0), Par::Seq);
        let values: Vec<f64> = (0..kk).map(|c| sigma + 1.0 / theta[order[c]]).collect();
        let residuals: Vec<f64> = (0..kk).map(|c| norm(hr.col_as_slice(c)) / theta[order[c]]).collect();
        let ok: Vec<bool> = (0..kk).map(|c| accept(c, values[c], residuals[c])).collect();
        converged = ok.iter().filter(|&&x| x).count();
        debug!("iteration {it}: basis {len}, converged {converged}/{k}");
        if kk == k && converged == k {
            let sk = Mat::from_fn(len, kk, |r, c| s[(r, order[c])]);
            let y = v.as_ref().subcols(0, len) * sk.as_ref();
            let ritz = order.iter().map(|&i| sigma + 1.0 / theta[i]).collect();
            return Ok(Eigenpairs { values, vectors: y, residuals, ritz, solves, iterations: it + 1 });
        }
        if len + b > cap {
            let keep = (cap / 2).max(k + b).min(cap - b).min(order.len());
            let sk = Mat::from_fn(len, keep, |r, c| s[(r, order[c])]);
            let nv = v.as_ref().subcols(0, len) * sk.as_ref();
            v.as_mut().subcols_mut(0, keep).copy_from(&nv);
            hm.fill(C64::new(0.0, 0.0));
            for c in 0..keep {
                hm[(c, c)] = C64::new(theta[order[c]], 0.0);
            }
            len = keep;
        }
        q = orthonormalize(z, &reference);
    }
    Err(Error::EigensolverStall { iterations: cfg.max_iterations, converged, wanted: k })
}

/// Lowest k eigenpairs; `lower` must bound the spectrum from below. Pairs
/// that are clearly above `cut` only need a residual small enough to stay there.
fn lowest_eigenpairs(
    op: &SpinorOperator,
    lower: f64,
    k: usize,
    cut: Option<f64>,
    cfg: &DiscretizationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Eigenpairs> {
    let mut delta = 1e-3 * lower.abs().max(1.0);
    let mut sigma0 = lower - delta;
    let mut llt0 = None;
    for _ in 0..6 {
        match op.factor(sigma0) {
            Ok(l) => {
                llt0 = Some(l);
                break;
            }
            Err(e) => {
                warn!("{e}; lowering the shift");
                delta *= 10.0;
                sigma0 = lower - delta;
            }
        }
    }
    let llt0 = llt0.ok_or_else(|| Error::Factorization(format!("no positive definite shift below {lower}")))?;
    let loose = cfg.resid_tol.max(1e-6);
    let accept_a = |_: usize, e: f64, r: f64| r <= loose * e.abs().max(1.0);
    let stage = lowest(op, &llt0, sigma0, 2, &accept_a, cfg, None, rng)?;
    let e1 = stage.values[0];
    // Ritz values bound their eigenvalues from above, so this overestimates the spread
    let spread = stage.ritz.get(2).map_or(1e-3 * e1.abs().max(1.0), |e| e - e1);
    let sigma1 = e1 - (0.05 * spread).max(2.0 * stage.residuals[0]).max(1e-9 * e1.abs().max(1.0));
    let mut solves = stage.solves;
    let (sigma, llt) = if sigma1 > sigma0 {
        match op.factor(sigma1) {
            Ok(l) => (sigma1, l),
            Err(e) => {
                warn!("{e}; keeping the first shift");
                (sigma0, llt0)
            }
        }
    } else {
        (sigma0, llt0)
    };
    debug!("shift {sigma0} then {sigma} after {} iterations", stage.iterations);
    let tol = cfg.resid_tol;
    let accept_b = |_: usize, e: f64, r: f64| r <= tol * e.abs().max(1.0) || cut.is_some_and(|c| e - 2.0 * r > c);
    let mut out = lowest(op, &llt, sigma, k, &accept_b, cfg, Some(stage.vectors.as_ref()), rng)?;
    debug!("{} iterations at the second shift", out.iterations);
    solves += out.solves;
    out.solves = solves;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct Level {
    pub energy: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSpectrum {
    pub n: usize,
    pub half_width: f64,
    pub h: f64,
    /// threshold of the continuum symbol
    pub kappa: f64,
    /// ground energy of the V = 0 operator on the same grid
    pub kappa_h: f64,
    pub kappa_lattice: f64,
    pub margin: f64,
    /// eigenvalues below κ_h − margin, ascending, with multiplicity
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub levels: Vec<Level>,
    pub count: usize,
    pub distinct_count: usize,
    /// all computed eigenvalues, including those above the cut
    pub computed: Vec<f64>,
    /// false when every computed eigenvalue was below the cut, so `count` is only a lower bound
    pub complete: bool,
    /// |(E_i − κ_h) − (E_i − κ_h at n/2)| for each reported eigenvalue
    pub drift: Vec<f64>,
    pub coarse_count: Option<usize>,
    pub converged_under_refinement: Option<bool>,
    pub solves: usize,
    pub outside_nodes: usize,
}

impl OracleSpectrum {
    /// E_i − κ_h
    pub fn gaps(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e - self.kappa_h).collect()
    }
}

/// Groups ascending eigenvalues closer than tol·max(1, |E|).
pub fn group_levels(values: &[f64], tol: f64) -> Vec<Level> {
    let mut out: Vec<Level> = Vec::new();
    for &e in values {
        match out.last_mut() {
            Some(l) if (e - l.energy).abs() <= tol * e.abs().max(1.0) => l.multiplicity += 1,
            _ => out.push(Level { energy: e, multiplicity: 1 }),
        }
    }
    out
}

fn solve_on_grid(
    coupling: &Coupling,
    potential: &Potential,
    kappa: f64,
    cfg: &DiscretizationConfig,
    n: usize,
) -> Result<OracleSpectrum> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let free = SpinorOperator::new(coupling, &Potential::Zero, n, cfg.half_width)?;
    let h = free.h;
    let kappa_lattice = lattice_kappa(coupling, h)?;
    let free_pairs = lowest_eigenpairs(&free, kappa_lattice, 2, None, cfg, &mut rng)?;
    let kappa_h = free_pairs.values[0];
    drop(free);
    info!("n = {n}: κ_h = {kappa_h}, lattice κ = {kappa_lattice}");

    let op = SpinorOperator::new(coupling, potential, n, cfg.half_width)?;
    let margin = cfg.margin.unwrap_or(1e-8 * kappa_h.abs().max(1.0));
    let cut = kappa_h - margin;
    let lower = kappa_lattice + op.v_min.min(0.0);
    let mut k = cfg.wanted.unwrap_or(8).max(2).min(cfg.max_eigenpairs);
    k += k % 2;
    let mut solves = free_pairs.solves;
    let pairs = loop {
        let pairs = lowest_eigenpairs(&op, lower, k, Some(cut), cfg, &mut rng)?;
        solves += pairs.solves;
        let below = pairs.values.iter().filter(|&&e| e < cut).count();
        if below < k || k >= cfg.max_eigenpairs {
            break pairs;
        }
        k = (2 * k).min(cfg.max_eigenpairs);
        info!("all computed eigenvalues lie below the threshold, asking for {k}");
    };
    let count = pairs.values.iter().filter(|&&e| e < cut).count();
    let eigenvalues = pairs.values[..count].to_vec();
    let levels = group_levels(&eigenvalues, 1e-7);
    Ok(OracleSpectrum {
        n,
        half_width: cfg.half_width,
        h,
        kappa,
        kappa_h,
        kappa_lattice,
        margin,
        residuals: pairs.residuals[..count].to_vec(),
        distinct_count: levels.len(),
        levels,
        count,
        complete: count < pairs.values.len(),
        computed: pairs.values,
        eigenvalues,
        drift: Vec::new(),
        coarse_count: None,
        converged_under_refinement: None,
        solves,
        outside_nodes: op.outside,
    })
}

/// Discrete spectrum below the threshold for `H0 + V` on the configured grid.
pub fn solve(
    coupling: &Coupling,
    potential: &Potential,
    kappa: f64,
    cfg: &DiscretizationConfig,
) -> Result<OracleSpectrum> {
    cfg.validate()?;
    let mut fine = solve_on_grid(coupling, potential, kappa, cfg, cfg.n)?;
    if cfg.drift_check {
        let coarse = solve_on_grid(coupling, potential, kappa, cfg, cfg.n / 2)?;
        let (gf, gc) = (fine.gaps(), coarse.gaps());
        fine.drift = gf
            .iter()
            .enumerate()
            .map(|(i, g)| gc.get(i).map_or(f64::INFINITY, |c| (g - c).abs()))
            .collect();
        fine.converged_under_refinement = Some(
            coarse.count == fine.count && fine.drift.iter().all(|&d| d <= cfg.drift_tol),
        );
        fine.coarse_count = Some(coarse.count);
    }
    Ok(fine)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub n: usize,
    /// E_n − κ_h
    pub oracle_gap: f64,
    /// ν_n − κ
    pub bound_gap: f64,
    pub allowance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Validation {
    pub pass: bool,
    pub count_ok: bool,
    pub checks: Vec<BoundCheck>,
}

/// Checks E_n − κ_h ≤ ν_n − κ + tol + drift_n for each certified n, and count ≥ certified.
pub fn validate_bounds(spectrum: &OracleSpectrum, report: &BoundReport, tol: f64) -> Validation {
    let count_ok = spectrum.count >= report.certified_count;
    let checks: Vec<BoundCheck> = (0..report.certified_count.min(spectrum.count))
        .map(|i| {
            let oracle_gap = spectrum.eigenvalues[i] - spectrum.kappa_h;
            let bound_gap = report.nu[i] - report.kappa;
            let allowance = tol + spectrum.drift.get(i).copied().filter(|d| d.is_finite()).unwrap_or(0.0);
            BoundCheck { n: i + 1, oracle_gap, bound_gap, allowance, pass: oracle_gap <= bound_gap + allowance }
        })
        .collect();
    Validation { pass: count_ok && checks.iter().all(|c| c.pass), count_ok, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, l: f64) -> DiscretizationConfig {
        DiscretizationConfig { n, half_width: l, drift_check: false, ..Default::default() }
    }

    #[test]
    fn matrix_is_exactly_hermitian() {
        let c = Coupling::Mixed { alpha_r: 0.7, alpha_d: -0.4 };
        let v = Potential::Gaussian { depth: 1.0, radius: 1.0 };
        let op = SpinorOperator::new(&c, &v, 6, 3.0).unwrap();
        let d = op.to_dense();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                assert_eq!(d[(i, j)], d[(j, i)].conj());
            }
        }
    }

    #[test]
    fn matches_dense_diagonalization() {
        let c = Coupling::Rashba { alpha: 1.0 };
        let v = Potential::Gaussian { depth: 0.5, radius: 1.0 };
        let op = SpinorOperator::new(&c, &v, 10, 4.0).unwrap();
        let dense = linalg::eigenvalues(&op.to_dense()).unwrap();
        let cfg = DiscretizationConfig { block_size: 2, max_basis: 24, ..small(10, 4.0) };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lat = lattice_kappa(&c, op.h).unwrap();
        assert!(lat + op.v_min <= dense[0]);
        let got = lowest_eigenpairs(&op, lat + op.v_min, 6, None, &cfg, &mut rng).unwrap();
        for i in 0..6 {
            assert!((got.values[i] - dense[i]).abs() < 1e-9, "{i}: {} vs {}", got.values[i], dense[i]);
        }
    }

    #[test]
    fn lattice_threshold_bounds_the_free_box() {
        for c in [Coupling::Zero, Coupling::Rashba { alpha: 1.0 }, Coupling::Dresselhaus { alpha: 0.6 }] {
            let op = SpinorOperator::new(&c, &Potential::Zero, 8, 3.0).unwrap();
            let dense = linalg::eigenvalues(&op.to_dense()).unwrap();
            assert!(lattice_kappa(&c, op.h).unwrap() <= dense[0] + 1e-12);
        }
    }

    #[test]
    fn custom_coupling_is_unsupported() {
        let sym = crate::dispersion::TabulatedSymbol::from_fn(1.0, 5, |p| C64::new(p.x, 0.0)).unwrap();
        let c = Coupling::Custom(std::sync::Arc::new(sym));
        assert!(matches!(
            SpinorOperator::new(&c, &Potential::Zero, 8, 3.0),
            Err(Error::UnsupportedCoupling(_))
        ));
    }

    #[test]
    fn free_case_has_a_bound_state_on_small_grid() {
        let cfg = DiscretizationConfig { wanted: Some(4), ..small(64, 16.0) };
        let v = Potential::Gaussian { depth: 1.0, radius: 1.0 };
        let s = solve(&Coupling::Zero, &v, 0.0, &cfg).unwrap();
        assert!(s.count >= 2);
        assert_eq!(s.levels[0].multiplicity, 2);
        assert!(s.kappa_h > 0.0 && s.kappa_h < 0.05);
    }

    #[test]
    fn levels_group_kramers_pairs() {
        let l = group_levels(&[-1.0, -1.0 + 1e-12, -0.5, -0.2, -0.2], 1e-9);
        assert_eq!(l.len(), 3);
        assert_eq!(l[0].multiplicity, 2);
    }
}
