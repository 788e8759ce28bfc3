//! Rayleigh–Ritz bounds from the trial family
//!
//! ```text
//! Φ_n(x) = e^{i p_n·x} f_a(x) u_n,    u_n = lower-band spinor at the anchor p_n ∈ S,
//! ```
//!
//! For couplings linear in p every matrix element reduces to the two radial
//! transforms `G^s(q) = ∫ f_a² e^{iq·x}` and `D(q) = ∫ |∇f_a|² e^{iq·x}`, and to the
//! weighted potential transform `W^s(q) = ∫ V f_a² e^{iq·x}`.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersion::{Coupling, ExtremumSet};
use crate::error::{Error, Result};
use crate::hankel::stretched_exp_hankel;
use crate::linalg::{self, CMat};
use crate::potential::{Potential, RadialWell, TabulatedPotential};
use crate::quadrature::{composite_with_error, graded_breaks, GaussLegendre};
use crate::trial::TrialProfile;
use crate::vec2::Vec2;
use crate::C64;

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssemblyConfig {
    pub cond_max: f64,
    /// minimum anchor separation as a fraction of diam(S)
    pub sep_min_factor: f64,
    /// ∫|V| allowed outside the integration disk, relative to ∫|V|
    pub tail_tol: f64,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        Self {
            cond_max: 1e8,
            sep_min_factor: 0.05,
            tail_tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialFamily {
    pub a: f64,
    pub anchors: Vec<Vec2>,
    pub spinors: Vec<[C64; 2]>,
    #[serde(skip)]
    pub profile: TrialProfile,
}

impl TrialFamily {
    pub fn new(
        coupling: &Coupling,
        ext: &ExtremumSet,
        a: f64,
        anchors: &[Vec2],
        cfg: &AssemblyConfig,
    ) -> Result<Self> {
        let profile = TrialProfile::new(a)?;
        if anchors.is_empty() {
            return Err(Error::InvalidInput("a trial family needs at least one anchor".into()));
        }
        for p in anchors {
            let gap = coupling.lambda_minus(*p)? - ext.kappa;
            if gap.abs() > ext.tol_extremum {
                return Err(Error::InvalidInput(format!(
                    "anchor ({}, {}) is off the extremum set: λ− − κ = {gap:e}",
                    p.x, p.y
                )));
            }
        }
        let sep_min = (cfg.sep_min_factor * ext.diameter()).max(1e-12);
        for i in 0..anchors.len() {
            for j in i + 1..anchors.len() {
                if anchors[i].dist(anchors[j]) < sep_min {
                    return Err(Error::DuplicateAnchors { i, j });
                }
            }
        }
        let spinors = anchors
            .iter()
            .map(|p| coupling.lower_spinor(*p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            a,
            anchors: anchors.to_vec(),
            spinors,
            profile,
        })
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct VariationalMatrices {
    pub a: f64,
    /// ⟨Φ_m, (H0 − κ) Φ_n⟩
    pub k: CMat,
    /// ⟨Φ_m, V Φ_n⟩
    pub w: CMat,
    /// ⟨Φ_m, Φ_n⟩
    pub g: CMat,
    pub k_err: Vec<f64>,
    pub w_err: Vec<f64>,
    pub g_err: Vec<f64>,
    /// the scalar part W^s(p_n − p_m) without spinor overlaps
    pub w_scalar: CMat,
    pub kappa: f64,
    pub kappa_error: f64,
}

impl VariationalMatrices {
    pub fn n(&self) -> usize {
        self.k.nrows()
    }

    pub fn quadrature_error(&self) -> (f64, f64, f64) {
        let f = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (f(&self.k_err), f(&self.w_err), f(&self.g_err))
    }
}

/// Radial transforms of f_a² and |∇f_a|² at |q|, cached per distinct |q|.
struct ScalarTransforms {
    a: f64,
    cache: HashMap<u64, [(f64, f64); 2]>,
}

impl ScalarTransforms {
    fn new(a: f64) -> Self {
        Self { a, cache: HashMap::new() }
    }

    /// ((G^s, err), (D, err))
    fn at(&mut self, q: f64) -> Result<[(f64, f64); 2]> {
        let key = q.to_bits();
        if let Some(v) = self.cache.get(&key) {
            return Ok(*v);
        }
        let a = self.a;
        let s0 = stretched_exp_hankel(0.0, a, q)?;
        let s1 = stretched_exp_hankel(2.0 * a - 2.0, a, q)?;
        let d = 2.0 * PI * 0.25 * a * a;
        let v = [
            (2.0 * PI * s0.value, 2.0 * PI * s0.error),
            (d * s1.value, d * s1.error),
        ];
        self.cache.insert(key, v);
        Ok(v)
    }
}

fn dot(u: &[C64; 2], v: &[C64; 2]) -> C64 {
    u[0].conj() * v[0] + u[1].conj() * v[1]
}

/// Builds K, W and G for the family.
pub fn assemble_matrices(
    coupling: &Coupling,
    ext: &ExtremumSet,
    potential: &Potential,
    family: &TrialFamily,
    cfg: &AssemblyConfig,
) -> Result<VariationalMatrices> {
    let [cx, cy] = coupling
        .linear()
        .ok_or_else(|| Error::UnsupportedCoupling(coupling.name()))?;
    let n = family.len();
    let a = family.a;
    let kappa = ext.kappa;
    let mut transforms = ScalarTransforms::new(a);
    let mut wcache: HashMap<(u64, u64), (C64, f64)> = HashMap::new();

    let mut k = CMat::zeros(n, n);
    let mut w = CMat::zeros(n, n);
    let mut g = CMat::zeros(n, n);
    let mut w_scalar = CMat::zeros(n, n);
    let mut k_err = vec![0.0; n * n];
    let mut w_err = vec![0.0; n * n];
    let mut g_err = vec![0.0; n * n];

    for m in 0..n {
        for l in m..n {
            let (pm, pl) = (family.anchors[m], family.anchors[l]);
            let (um, ul) = (&family.spinors[m], &family.spinors[l]);
            let q = pl - pm;
            let [(gs, gs_err), (d, d_err)] = transforms.at(q.norm())?;
            let ov = dot(um, ul);
            let pbar = (pm + pl) * 0.5;
            let cp = cx * pbar.x + cy * pbar.y;
            let ccp = cx.conj() * pbar.x + cy.conj() * pbar.y;
            let cross = um[0].conj() * ul[1] * cp + um[1].conj() * ul[0] * ccp;
            let coef = pm.dot(pl) + 0.5 * q.norm_sqr() - kappa;

            let (kv, ke) = if m == l {
                // (λ−(p) − κ) G + D without the cancellation between the two spinor terms
                let lift = coupling.lambda_minus(pm)? - kappa;
                let scale = pm.norm_sqr() + kappa.abs();
                (
                    C64::new(lift * gs + d, 0.0),
                    lift.abs() * gs_err + d_err + 8.0 * EPS * (scale * gs.abs() + d.abs()),
                )
            } else {
                (
                    ov * (coef * gs + d) + cross * gs,
                    ov.norm() * (coef.abs() * gs_err + d_err)
                        + cross.norm() * gs_err
                        + 8.0
                            * EPS
                            * (ov.norm()
                                * ((pm.dot(pl).abs() + 0.5 * q.norm_sqr() + kappa.abs()) * gs
                                    + d.abs())
                                + cross.norm() * gs.abs()),
                )
            };
            let gv = ov * gs;
            let ge = ov.norm() * gs_err + 4.0 * EPS * gs.abs();

            let key = (q.x.to_bits(), q.y.to_bits());
            let (ws, ws_err) = match wcache.get(&key) {
                Some(v) => *v,
                None => {
                    let v = weighted_transform(potential, &family.profile, q, cfg)?;
                    wcache.insert(key, v);
                    v
                }
            };
            let wv = ov * ws;
            let we = ov.norm() * ws_err;

            let idx = m * n + l;
            let sym = l * n + m;
            k[(m, l)] = kv;
            g[(m, l)] = gv;
            w[(m, l)] = wv;
            w_scalar[(m, l)] = ws;
            k_err[idx] = ke;
            g_err[idx] = ge;
            w_err[idx] = we;
            if l != m {
                k[(l, m)] = kv.conj();
                g[(l, m)] = gv.conj();
                w[(l, m)] = wv.conj();
                let key = ((-q.x).to_bits(), (-q.y).to_bits());
                let ws_back = match wcache.get(&key) {
                    Some(v) => v.0,
                    None => {
                        let v = weighted_transform(potential, &family.profile, -q, cfg)?;
                        wcache.insert(key, v);
                        v.0
                    }
                };
                w_scalar[(l, m)] = ws_back;
                k_err[sym] = ke;
                g_err[sym] = ge;
                w_err[sym] = we;
            } else {
                k[(m, m)] = C64::new(kv.re, 0.0);
                g[(m, m)] = C64::new(gv.re, 0.0);
                w[(m, m)] = C64::new(wv.re, 0.0);
            }
        }
    }

    Ok(VariationalMatrices {
        a,
        k,
        w,
        g,
        k_err,
        w_err,
        g_err,
        w_scalar,
        kappa,
        kappa_error: ext.kappa_error,
    })
}

/// W^s(q) = ∫ V(x) f_a(x)² e^{iq·x} dx with an error estimate.
pub fn weighted_transform(
    potential: &Potential,
    profile: &TrialProfile,
    q: Vec2,
    cfg: &AssemblyConfig,
) -> Result<(C64, f64)> {
    match potential {
        Potential::Zero => Ok((C64::new(0.0, 0.0), 0.0)),
        Potential::Scaled { inner, factor } => {
            let (v, e) = weighted_transform(inner, profile, q, cfg)?;
            Ok((v * *factor, e * factor.abs()))
        }
        Potential::Tabulated(t) => Ok(tabulated_weighted(t, profile, q, Vec2::ZERO)),
        Potential::Shifted { inner, center } => match inner.as_ref() {
            Potential::Tabulated(t) => Ok(tabulated_weighted(t, profile, q, *center)),
            other => match other.radial() {
                Some(well) => shifted_radial_weighted(well, other, profile, q, *center, cfg),
                None => {
                    // nested shifts and scalings: fold the centre into the inner term
                    let (v, e) = weighted_transform_offset(other, profile, q, *center, cfg)?;
                    Ok((v, e))
                }
            },
        },
        other => match other.radial() {
            Some(well) => radial_weighted(well, other, profile, q.norm(), cfg),
            None => Err(Error::InvalidInput(format!(
                "no weighted transform for {}",
                other.name()
            ))),
        },
    }
}

fn weighted_transform_offset(
    potential: &Potential,
    profile: &TrialProfile,
    q: Vec2,
    offset: Vec2,
    cfg: &AssemblyConfig,
) -> Result<(C64, f64)> {
    match potential {
        Potential::Shifted { inner, center } => {
            weighted_transform(&Potential::Shifted { inner: inner.clone(), center: *center + offset }, profile, q, cfg)
        }
        Potential::Scaled { inner, factor } => {
            let (v, e) = weighted_transform_offset(inner, profile, q, offset, cfg)?;
            Ok((v * *factor, e * factor.abs()))
        }
        other => weighted_transform(&other.clone().shifted(offset), profile, q, cfg),
    }
}

/// Outer radius of the integration disk and the |V| mass left outside it.
fn truncation(potential: &Potential, cfg: &AssemblyConfig) -> (f64, f64) {
    let total = match potential.radial() {
        Some(RadialWell::Gaussian { depth, radius }) => 2.0 * PI * depth.abs() * radius * radius,
        Some(RadialWell::Circular { depth, radius }) => PI * depth.abs() * radius * radius,
        _ => potential.integral().value.abs(),
    };
    let tail = cfg.tail_tol * total;
    let (_, rho) = potential.support(tail.max(1e-300));
    (rho, tail)
}

fn radial_weighted(
    well: RadialWell,
    potential: &Potential,
    profile: &TrialProfile,
    q: f64,
    cfg: &AssemblyConfig,
) -> Result<(C64, f64)> {
    let (rho, tail) = truncation(potential, cfg);
    if rho == 0.0 {
        return Ok((C64::new(0.0, 0.0), 0.0));
    }
    let panels = ((q * rho / PI).ceil() as usize + 8).max(16);
    let v_of = |r: f64| match well {
        RadialWell::Zero => 0.0,
        RadialWell::Gaussian { depth, radius } => -depth * (-0.5 * r * r / (radius * radius)).exp(),
        RadialWell::Circular { depth, radius } => {
            if r < radius {
                -depth
            } else {
                0.0
            }
        }
    };
    let integrand = |r: f64| {
        let f = profile.value(r);
        2.0 * PI * v_of(r) * f * f * libm::j0(q * r) * r
    };
    let breaks = match well {
        RadialWell::Circular { radius, .. } => {
            // the disk edge is a panel boundary; nothing lies beyond it
            graded_breaks(0.0, radius, 24, panels)
        }
        _ => graded_breaks(0.0, rho, 24, panels),
    };
    let est = composite_with_error(&breaks, 24, integrand);
    Ok((C64::new(est.value, 0.0), est.error + tail + 16.0 * EPS * est.value.abs()))
}

/// Polar quadrature around the well centre, with the trial-profile cusp on a panel edge.
fn shifted_radial_weighted(
    well: RadialWell,
    potential: &Potential,
    profile: &TrialProfile,
    q: Vec2,
    center: Vec2,
    cfg: &AssemblyConfig,
) -> Result<(C64, f64)> {
    let (rho, tail) = truncation(potential, cfg);
    if rho == 0.0 {
        return Ok((C64::new(0.0, 0.0), 0.0));
    }
    let outer = match well {
        RadialWell::Circular { radius, .. } => radius,
        _ => rho,
    };
    let v_of = |r: f64| match well {
        RadialWell::Zero => 0.0,
        RadialWell::Gaussian { depth, radius } => -depth * (-0.5 * r * r / (radius * radius)).exp(),
        RadialWell::Circular { depth, radius } => {
            if r < radius {
                -depth
            } else {
                0.0
            }
        }
    };
    let d = center.norm();
    let panels = ((q.norm() * outer / PI).ceil() as usize + 8).max(16);
    let width = outer / panels as f64;
    let mut breaks: Vec<f64> = (0..=panels).map(|i| width * i as f64).collect();
    if d > 0.0 && d < outer {
        breaks.push(d);
        for k in 1..=16 {
            let h = width * 0.5f64.powi(k);
            breaks.push((d - h).max(0.0));
            breaks.push((d + h).min(outer));
        }
        breaks.sort_by(|x, y| x.total_cmp(y));
        breaks.dedup();
    }
    let run = |order: usize, n_theta: usize| -> C64 {
        let rule = GaussLegendre::new(order);
        let mut total = C64::new(0.0, 0.0);
        for win in breaks.windows(2) {
            for (r, wr) in rule.mapped(win[0], win[1]) {
                let vr = v_of(r);
                if vr == 0.0 {
                    continue;
                }
                let mut ring = C64::new(0.0, 0.0);
                for t in 0..n_theta {
                    let theta = 2.0 * PI * (t as f64 + 0.5) / n_theta as f64;
                    let x = center + Vec2::polar(r, theta);
                    let f = profile.value(x.norm());
                    ring += C64::from_polar(f * f, q.dot(x));
                }
                total += ring * (vr * r * wr * 2.0 * PI / n_theta as f64);
            }
        }
        total
    };
    let fine = run(24, 512);
    let coarse = run(16, 256);
    Ok((fine, (fine - coarse).norm() + tail + 16.0 * EPS * fine.norm()))
}

/// Trapezoid sum over the tabulation nodes (translated by `offset`).
fn tabulated_weighted(t: &TabulatedPotential, profile: &TrialProfile, q: Vec2, offset: Vec2) -> (C64, f64) {
    let g = &t.grid;
    let sum = |stride: usize| -> C64 {
        let mut total = C64::new(0.0, 0.0);
        for j in (0..g.ny).step_by(stride) {
            for i in (0..g.nx).step_by(stride) {
                let wx = if i == 0 || i + stride >= g.nx { 0.5 } else { 1.0 };
                let wy = if j == 0 || j + stride >= g.ny { 0.5 } else { 1.0 };
                let x = g.node(i, j) + offset;
                let f = profile.value(x.norm());
                total += C64::from_polar(f * f, q.dot(x))
                    * (wx * wy * (stride * stride) as f64 * g.dx * g.dy * g.at(i, j));
            }
        }
        total
    };
    let fine = sum(1);
    let error = if g.nx % 2 == 1 && g.ny % 2 == 1 {
        (fine - sum(2)).norm() / 3.0
    } else {
        f64::INFINITY
    };
    (fine, error)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub a_used: f64,
    pub kappa: f64,
    /// ν_n = κ + μ_n, ascending
    pub nu: Vec<f64>,
    /// μ_n from (K + W) u = μ G u
    pub mu: Vec<f64>,
    /// certification margin for each μ_n
    pub margins: Vec<f64>,
    pub certified_count: usize,
    pub diagnostics: BoundDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundDiagnostics {
    pub n: usize,
    pub gram_condition: f64,
    pub gram_min_eigenvalue: f64,
    pub hermiticity_defect: f64,
    pub quadrature_error_k: f64,
    pub quadrature_error_w: f64,
    pub quadrature_error_g: f64,
    pub min_k_diagonal: f64,
    /// eigenvalues of W u = μ G u, the potential-only quotient
    pub potential_only_mu: Vec<f64>,
}

/// Generalized eigenvalues of (K + W, G) and the certified count.
pub fn variational_bounds(m: &VariationalMatrices, cfg: &AssemblyConfig) -> Result<BoundReport> {
    let n = m.n();
    let mut a = m.k.clone();
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += m.w[(i, j)];
        }
    }
    let gen = linalg::generalized_eigen(&a, &m.g)?;
    let cond = gen.condition();
    if cond > cfg.cond_max {
        return Err(Error::IllConditionedGram { cond, limit: cfg.cond_max });
    }
    let (ek, ew, eg) = m.quadrature_error();
    let ea = ek + ew;
    let norm_a = linalg::frobenius(&a);
    let norm_g = linalg::frobenius(&m.g);
    let margins: Vec<f64> = gen
        .values
        .iter()
        .map(|mu| {
            let weyl = (ea + mu.abs() * eg) / gen.b_min;
            let rounding = 64.0 * EPS * (norm_a + mu.abs() * norm_g) / gen.b_min * n as f64;
            3.0 * weyl + rounding + m.kappa_error
        })
        .collect();
    let certified_count = gen
        .values
        .iter()
        .zip(&margins)
        .take_while(|(mu, margin)| **mu < -**margin)
        .count();
    let potential_only_mu = linalg::generalized_eigen(&m.w, &m.g)?.values;
    let min_k_diagonal = (0..n).map(|i| m.k[(i, i)].re).fold(f64::INFINITY, f64::min);
    let hermiticity_defect = linalg::hermiticity_defect(&m.k)
        .max(linalg::hermiticity_defect(&m.w))
        .max(linalg::hermiticity_defect(&m.g));
    Ok(BoundReport {
        a_used: m.a,
        kappa: m.kappa,
        nu: gen.values.iter().map(|mu| m.kappa + mu).collect(),
        mu: gen.values.clone(),
        margins,
        certified_count,
        diagnostics: BoundDiagnostics {
            n,
            gram_condition: cond,
            gram_min_eigenvalue: gen.b_min,
            hermiticity_defect,
            quadrature_error_k: ek,
            quadrature_error_w: ew,
            quadrature_error_g: eg,
            min_k_diagonal,
            potential_only_mu,
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub a: f64,
    pub certified_count: Option<usize>,
    pub nu: Vec<f64>,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Sweep {
    pub best: BoundReport,
    pub entries: Vec<SweepEntry>,
}

/// Runs the bounds over a descending exponent grid and keeps the best report.
pub fn sweep_exponent(
    coupling: &Coupling,
    ext: &ExtremumSet,
    potential: &Potential,
    anchors: &[Vec2],
    a_grid: &[f64],
    cfg: &AssemblyConfig,
) -> Result<Sweep> {
    if a_grid.is_empty() || a_grid.windows(2).any(|w| w[1] >= w[0]) || a_grid.iter().any(|&a| a <= 0.0) {
        return Err(Error::InvalidInput(
            "the exponent grid must be non-empty, positive and strictly descending".into(),
        ));
    }
    let mut entries = Vec::new();
    let mut best: Option<BoundReport> = None;
    let mut conditioning_only = true;
    let mut last_err = None;
    for &a in a_grid {
        let outcome = TrialFamily::new(coupling, ext, a, anchors, cfg)
            .and_then(|f| assemble_matrices(coupling, ext, potential, &f, cfg))
            .and_then(|m| variational_bounds(&m, cfg));
        match outcome {
            Ok(report) => {
                entries.push(SweepEntry {
                    a,
                    certified_count: Some(report.certified_count),
                    nu: report.nu.clone(),
                    status: "ok".into(),
                });
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let idx = report.certified_count.max(1) - 1;
                        report.certified_count > b.certified_count
                            || (report.certified_count == b.certified_count && report.mu[idx] < b.mu[idx])
                    }
                };
                if better {
                    best = Some(report);
                }
            }
            Err(e @ Error::IllConditionedGram { .. }) => {
                entries.push(SweepEntry { a, certified_count: None, nu: Vec::new(), status: e.to_string() });
                last_err = Some(e);
                break;
            }
            Err(e @ Error::QuadratureFailure { .. }) => {
                entries.push(SweepEntry { a, certified_count: None, nu: Vec::new(), status: e.to_string() });
                conditioning_only = false;
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    match best {
        Some(best) => Ok(Sweep { best, entries }),
        None if conditioning_only => Err(Error::AllGramsIllConditioned),
        None => Err(last_err.unwrap_or(Error::AllGramsIllConditioned)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{find_kappa_and_s, SearchConfig};

    fn rashba() -> (Coupling, ExtremumSet) {
        let c = Coupling::Rashba { alpha: 1.0 };
        let ext = find_kappa_and_s(&c, &SearchConfig::default()).unwrap();
        (c, ext)
    }

    #[test]
    fn single_anchor_entries() {
        let (c, ext) = rashba();
        let cfg = AssemblyConfig::default();
        let v = Potential::Gaussian { depth: 1.0, radius: 1.0 };
        for a in [2.0, 1.0, 0.5, 0.25] {
            let fam = TrialFamily::new(&c, &ext, a, &ext.anchors(1, 0.3), &cfg).unwrap();
            let m = assemble_matrices(&c, &ext, &v, &fam, &cfg).unwrap();
            let prof = TrialProfile::new(a).unwrap();
            assert!((m.g[(0, 0)].re - prof.norm_sqr()).abs() < 1e-10 * prof.norm_sqr());
            assert!((m.k[(0, 0)].re - prof.grad_norm_sqr()).abs() < 1e-8 * prof.norm_sqr());
        }
    }

    #[test]
    fn weighted_transform_of_gaussian_at_a_two() {
        // ∫ −e^{−r²/2} e^{−r²} e^{iq·x} = −(2π/3) e^{−q²/6}
        let prof = TrialProfile::new(2.0).unwrap();
        let v = Potential::Gaussian { depth: 1.0, radius: 1.0 };
        let cfg = AssemblyConfig::default();
        for q in [0.0, 0.5, 2.0] {
            let (w, err) = weighted_transform(&v, &prof, Vec2::new(q, 0.0), &cfg).unwrap();
            let exact = -(2.0 * PI / 3.0) * (-q * q / 6.0).exp();
            assert!((w.re - exact).abs() < 1e-11, "q={q}: {w} vs {exact}");
            assert!(err < 1e-8);
        }
    }

    #[test]
    fn shifted_well_matches_closed_form() {
        // a = 2: ∫ V(x − c) e^{−|x|²} e^{iq·x} for the Gaussian well is Gaussian in c and q
        let prof = TrialProfile::new(2.0).unwrap();
        let c0 = Vec2::new(0.7, -0.4);
        let v = Potential::Gaussian { depth: 1.0, radius: 1.0 }.shifted(c0);
        let q = Vec2::new(0.3, 0.5);
        let (w, _) = weighted_transform(&v, &prof, q, &AssemblyConfig::default()).unwrap();
        // completing the square: −(2π/3) exp(−|c|²/3 − q²/6 + i (q·c)/3)
        let exact = C64::from_polar(
            (2.0 * PI / 3.0) * (-c0.norm_sqr() / 3.0 - q.norm_sqr() / 6.0).exp(),
            q.dot(c0) / 3.0,
        ) * -1.0;
        assert!((w - exact).norm() < 1e-9, "{w} vs {exact}");
    }

    #[test]
    fn zero_potential_certifies_nothing() {
        let (c, ext) = rashba();
        let cfg = AssemblyConfig::default();
        let sweep = sweep_exponent(&c, &ext, &Potential::Zero, &ext.anchors(4, 0.0), &[2.0, 1.0, 0.5], &cfg).unwrap();
        for e in &sweep.entries {
            assert_eq!(e.certified_count, Some(0));
        }
        assert!(sweep.best.mu.iter().zip(&sweep.best.margins).all(|(m, e)| *m >= -e));
    }

    #[test]
    fn anchors_off_the_set_are_rejected() {
        let (c, ext) = rashba();
        let cfg = AssemblyConfig::default();
        let bad = [Vec2::new(0.6, 0.0)];
        assert!(TrialFamily::new(&c, &ext, 1.0, &bad, &cfg).is_err());
        let dup = [Vec2::new(0.5, 0.0), Vec2::new(0.5, 0.0)];
        assert!(matches!(
            TrialFamily::new(&c, &ext, 1.0, &dup, &cfg),
            Err(Error::DuplicateAnchors { .. })
        ));
    }
}
