//! The free symbol `Ĥ0(p) = [[p², A(p)], [A*(p), p²]]`, its two dispersion laws,
//! the band diagonalizer, and the search for the threshold κ and the extremum set S.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{read_csv, UniformGrid};
use crate::vec2::Vec2;
use crate::C64;

pub type Mat2 = [[C64; 2]; 2];

/// A user-supplied off-diagonal symbol.
pub trait Symbol: Send + Sync + fmt::Debug {
    fn eval(&self, p: Vec2) -> Result<C64>;
    fn name(&self) -> String;
}

/// A symbol tabulated on a uniform momentum grid (CSV header `px,py,ReA,ImA`).
#[derive(Debug, Clone)]
pub struct TabulatedSymbol {
    pub grid: UniformGrid<C64>,
    pub source: String,
}

impl TabulatedSymbol {
    pub fn from_csv(path: &Path) -> Result<Self> {
        let rows = read_csv(path, &["px", "py", "ReA", "ImA"])?;
        let rows: Vec<(f64, f64, C64)> = rows
            .into_iter()
            .map(|r| (r[0], r[1], C64::new(r[2], r[3])))
            .collect();
        Ok(Self {
            grid: UniformGrid::from_rows(&rows)?,
            source: path.display().to_string(),
        })
    }

    pub fn from_fn(
        half_width: f64,
        n: usize,
        f: impl Fn(Vec2) -> C64,
    ) -> Result<Self> {
        let step = 2.0 * half_width / (n - 1) as f64;
        let mut rows = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let p = Vec2::new(-half_width + i as f64 * step, -half_width + j as f64 * step);
                rows.push((p.x, p.y, f(p)));
            }
        }
        Ok(Self {
            grid: UniformGrid::from_rows(&rows)?,
            source: "generated".into(),
        })
    }
}

impl Symbol for TabulatedSymbol {
    fn eval(&self, p: Vec2) -> Result<C64> {
        self.grid.interpolate(p).ok_or_else(|| Error::Evaluation {
            px: p.x,
            py: p.y,
            reason: format!("outside the tabulated symbol from {}", self.source),
        })
    }

    fn name(&self) -> String {
        format!("tabulated({})", self.source)
    }
}

#[derive(Debug, Clone)]
pub enum Coupling {
    /// A ≡ 0, the free Laplacian on each spin component.
    Zero,
    /// A(p) = α(p_y + i p_x)
    Rashba { alpha: f64 },
    /// A(p) = −α(p_x + i p_y)
    Dresselhaus { alpha: f64 },
    /// A(p) = α_R(p_y + i p_x) − α_D(p_x + i p_y)
    Mixed { alpha_r: f64, alpha_d: f64 },
    Custom(Arc<dyn Symbol>),
}

impl Coupling {
    /// Coefficients (c_x, c_y) with A(p) = c_x p_x + c_y p_y, for the linear presets.
    pub fn linear(&self) -> Option<[C64; 2]> {
        let i = C64::i();
        match *self {
            Coupling::Zero => Some([C64::new(0.0, 0.0); 2]),
            Coupling::Rashba { alpha } => Some([i * alpha, C64::new(alpha, 0.0)]),
            Coupling::Dresselhaus { alpha } => Some([C64::new(-alpha, 0.0), -i * alpha]),
            Coupling::Mixed { alpha_r, alpha_d } => {
                Some([C64::new(-alpha_d, alpha_r), C64::new(alpha_r, -alpha_d)])
            }
            Coupling::Custom(_) => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Coupling::Zero => "zero".into(),
            Coupling::Rashba { alpha } => format!("rashba(alpha={alpha})"),
            Coupling::Dresselhaus { alpha } => format!("dresselhaus(alpha={alpha})"),
            Coupling::Mixed { alpha_r, alpha_d } => {
                format!("mixed(alpha_r={alpha_r}, alpha_d={alpha_d})")
            }
            Coupling::Custom(s) => s.name(),
        }
    }

    pub fn off_diagonal(&self, p: Vec2) -> Result<C64> {
        match self {
            Coupling::Custom(s) => {
                let v = s.eval(p)?;
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::Evaluation {
                        px: p.x,
                        py: p.y,
                        reason: "symbol returned a non-finite value".into(),
                    });
                }
                Ok(v)
            }
            _ => {
                let [cx, cy] = self.linear().unwrap();
                Ok(cx * p.x + cy * p.y)
            }
        }
    }

    /// `[[p², A(p)], [A*(p), p²]]`
    pub fn symbol(&self, p: Vec2) -> Result<Mat2> {
        let a = self.off_diagonal(p)?;
        let k = C64::new(p.norm_sqr(), 0.0);
        Ok([[k, a], [a.conj(), k]])
    }

    pub fn dispersion(&self, p: Vec2) -> Result<DispersionSample> {
        let gap = self.off_diagonal(p)?.norm();
        let k = p.norm_sqr();
        Ok(DispersionSample {
            p,
            lambda_plus: k + gap,
            lambda_minus: k - gap,
            gap: 2.0 * gap,
        })
    }

    pub fn lambda_minus(&self, p: Vec2) -> Result<f64> {
        Ok(p.norm_sqr() - self.off_diagonal(p)?.norm())
    }

    /// The unitary M(p) with `M Ĥ0 M* = diag(λ+, λ−)`; identity (flagged) when the gap closes.
    pub fn diagonalizer(&self, p: Vec2, eps_gap: Option<f64>) -> Result<Diagonalizer> {
        let a = self.off_diagonal(p)?;
        let eps = eps_gap.unwrap_or(1e-12 * p.norm_sqr().max(1.0));
        let abs = a.norm();
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        if abs < eps {
            return Ok(Diagonalizer {
                m: [[one, zero], [zero, one]],
                gap: abs,
                degenerate: true,
            });
        }
        let phase = a / abs;
        let s = FRAC_1_SQRT_2;
        // rows are the conjugated band vectors (A/|A|, 1)/√2 and (A/|A|, −1)/√2
        let m = [
            [phase.conj() * s, C64::new(s, 0.0)],
            [phase.conj() * s, C64::new(-s, 0.0)],
        ];
        Ok(Diagonalizer { m, gap: abs, degenerate: false })
    }

    pub fn diagonalizer_strict(&self, p: Vec2, eps_gap: Option<f64>) -> Result<Diagonalizer> {
        let d = self.diagonalizer(p, eps_gap)?;
        if d.degenerate {
            return Err(Error::DegenerateGap {
                gap: d.gap,
                eps: eps_gap.unwrap_or(1e-12 * p.norm_sqr().max(1.0)),
            });
        }
        Ok(d)
    }

    /// Smallest radius on a geometric ladder beyond which |A(p)|/p² < 1 − δ.
    pub fn growth_radius(&self, delta: f64, max_radius: f64) -> Result<GrowthCheck> {
        let limit = 1.0 - delta;
        let ratio_on = |r: f64| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for k in 0..720 {
                let p = Vec2::polar(r, 2.0 * PI * k as f64 / 720.0);
                worst = worst.max(self.off_diagonal(p)?.norm() / (r * r));
            }
            Ok(worst)
        };
        let mut r = 1e-6;
        let mut last_ratio = f64::INFINITY;
        while r <= max_radius {
            let ratio = ratio_on(r)?;
            last_ratio = ratio;
            if ratio < limit {
                // the bound has to persist over the next stretch of the ladder
                let mut holds = true;
                let mut rr = r;
                for _ in 0..8 {
                    rr *= 1.1;
                    if rr > max_radius {
                        break;
                    }
                    let q = ratio_on(rr)?;
                    if q >= limit {
                        holds = false;
                        last_ratio = q;
                        break;
                    }
                }
                if holds {
                    return Ok(GrowthCheck { radius: r, ratio, delta });
                }
            }
            r *= 1.1;
        }
        Err(Error::GrowthViolation {
            ratio: last_ratio,
            radius: max_radius,
            limit,
        })
    }

    /// Largest jump |A(p) − A(p')| between neighbours of a square sampling grid.
    pub fn continuity_modulus(&self, half_width: f64, n: usize) -> Result<f64> {
        let step = 2.0 * half_width / (n - 1) as f64;
        let at = |i: usize, j: usize| {
            self.off_diagonal(Vec2::new(-half_width + i as f64 * step, -half_width + j as f64 * step))
        };
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let v = at(i, j)?;
                if i + 1 < n {
                    worst = worst.max((at(i + 1, j)? - v).norm());
                }
                if j + 1 < n {
                    worst = worst.max((at(i, j + 1)? - v).norm());
                }
            }
        }
        Ok(worst)
    }

    /// Lower-band spinor M*(p)(0, 1)ᵀ.
    pub fn lower_spinor(&self, p: Vec2) -> Result<[C64; 2]> {
        let m = self.diagonalizer(p, None)?.m;
        Ok([m[1][0].conj(), m[1][1].conj()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionSample {
    pub p: Vec2,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Diagonalizer {
    pub m: Mat2,
    pub gap: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthCheck {
    pub radius: f64,
    pub ratio: f64,
    pub delta: f64,
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub n_angle: usize,
    pub n_radius: usize,
    pub growth_delta: f64,
    pub max_radius: f64,
    /// energy tolerance; defaults to 1e-9·max(1, |κ|)
    pub tol_extremum: Option<f64>,
    /// length tolerance for the circle fit; defaults to 1e-7·max(1, r)
    pub tol_length: Option<f64>,
    /// rotation of the polar grid
    pub angle_offset: f64,
    pub circle_min_points: usize,
    pub max_isolated: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_angle: 720,
            n_radius: 400,
            growth_delta: 0.1,
            max_radius: 1e6,
            tol_extremum: None,
            tol_length: None,
            angle_offset: 0.0,
            circle_min_points: 32,
            max_isolated: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Circle { radius: f64 },
    IsolatedPoints,
    Curve,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtremumSet {
    pub kappa: f64,
    /// rounding-level uncertainty of κ
    pub kappa_error: f64,
    pub points: Vec<Vec2>,
    pub shape: Shape,
    pub tol_extremum: f64,
    pub search_radius: f64,
    pub growth: GrowthCheck,
    pub coverage_min: f64,
    pub curvature: Option<QuadraticConstant>,
}

impl ExtremumSet {
    pub fn diameter(&self) -> f64 {
        match self.shape {
            Shape::Circle { radius } => 2.0 * radius,
            _ => {
                let mut d: f64 = 0.0;
                for (i, p) in self.points.iter().enumerate() {
                    for q in &self.points[i + 1..] {
                        d = d.max(p.dist(*q));
                    }
                }
                d
            }
        }
    }

    /// Distance from p to the extremum set.
    pub fn distance(&self, p: Vec2) -> f64 {
        match self.shape {
            Shape::Circle { radius } => (p.norm() - radius).abs(),
            _ => self
                .points
                .iter()
                .map(|q| p.dist(*q))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Anchor placement: equal angles on a circle, all isolated points, farthest-point
    /// sampling on a curve.
    pub fn anchors(&self, n: usize, phase: f64) -> Vec<Vec2> {
        match self.shape {
            Shape::Circle { radius } => (0..n)
                .map(|k| Vec2::polar(radius, phase + 2.0 * PI * k as f64 / n as f64))
                .collect(),
            Shape::IsolatedPoints => self.points.iter().take(n).copied().collect(),
            Shape::Curve => farthest_point_sample(&self.points, n),
        }
    }

    /// Number of anchors the set can host.
    pub fn capacity(&self, n_max: usize) -> usize {
        match self.shape {
            Shape::IsolatedPoints => self.points.len().min(n_max),
            _ => n_max,
        }
    }
}

pub fn farthest_point_sample(points: &[Vec2], n: usize) -> Vec<Vec2> {
    if points.is_empty() || n == 0 {
        return Vec::new();
    }
    let mut chosen = vec![points[0]];
    let mut dist: Vec<f64> = points.iter().map(|p| p.dist(points[0])).collect();
    while chosen.len() < n.min(points.len()) {
        let (k, &d) = dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        if d == 0.0 {
            break;
        }
        chosen.push(points[k]);
        for (i, p) in points.iter().enumerate() {
            dist[i] = dist[i].min(p.dist(points[k]));
        }
    }
    chosen
}

/// Locates κ = inf λ− and the set S where it is attained.
pub fn find_kappa_and_s(coupling: &Coupling, cfg: &SearchConfig) -> Result<ExtremumSet> {
    let growth = coupling.growth_radius(cfg.growth_delta, cfg.max_radius)?;
    let radius = growth.radius;
    let (na, nr) = (cfg.n_angle.max(8), cfg.n_radius.max(4));
    let dr = radius / nr as f64;
    let dtheta = 2.0 * PI / na as f64;

    // polar grid, index (ir, it) with ir = 0 the origin row
    let values: Vec<f64> = (0..=nr)
        .into_par_iter()
        .map(|ir| -> Result<Vec<f64>> {
            (0..na)
                .map(|it| {
                    let p = Vec2::polar(ir as f64 * dr, cfg.angle_offset + it as f64 * dtheta);
                    coupling.lambda_minus(p)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let at = |ir: usize, it: usize| values[ir * na + it % na];

    let mut candidates: Vec<(f64, Vec2)> = Vec::new();
    for ir in 0..=nr {
        for it in 0..na {
            let v = at(ir, it);
            let slack = 1e-12 * (1.0 + v.abs());
            let mut is_min = true;
            for dir in [-1i64, 0, 1] {
                let jr = ir as i64 + dir;
                if jr < 0 || jr > nr as i64 {
                    continue;
                }
                for dit in [-1i64, 0, 1] {
                    if dir == 0 && dit == 0 {
                        continue;
                    }
                    let jt = (it as i64 + dit).rem_euclid(na as i64) as usize;
                    if at(jr as usize, jt) < v - slack {
                        is_min = false;
                    }
                }
            }
            if is_min {
                candidates.push((v, Vec2::polar(ir as f64 * dr, cfg.angle_offset + it as f64 * dtheta)));
            }
            if ir == 0 {
                break;
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.truncate(4096);

    let scale = radius.max(1e-6);
    let step0 = dr.max(dtheta * radius);
    let mut refined: Vec<(f64, Vec2)> = candidates
        .par_iter()
        .map(|&(_, p)| refine(coupling, p, step0, scale))
        .collect::<Result<Vec<_>>>()?;

    // a shifted grid must not undercut the refined minimum
    let mut coverage_min = f64::INFINITY;
    for pass in 0..3 {
        let kappa = refined.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        let tol = cfg.tol_extremum.unwrap_or(1e-9 * kappa.abs().max(1.0));
        let offset = cfg.angle_offset + 0.5 * dtheta + pass as f64 * 0.37 * dtheta;
        let shifted: Vec<(f64, Vec2)> = (0..nr)
            .into_par_iter()
            .map(|ir| -> Result<Vec<(f64, Vec2)>> {
                (0..na)
                    .map(|it| {
                        let p = Vec2::polar((ir as f64 + 0.5) * dr, offset + it as f64 * dtheta);
                        Ok((coupling.lambda_minus(p)?, p))
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        coverage_min = shifted.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let misses: Vec<Vec2> = shifted
            .iter()
            .filter(|s| s.0 < kappa - tol)
            .map(|s| s.1)
            .take(256)
            .collect();
        if misses.is_empty() {
            break;
        }
        let extra = misses
            .par_iter()
            .map(|&p| refine(coupling, p, step0, scale))
            .collect::<Result<Vec<_>>>()?;
        refined.extend(extra);
    }

    let kappa = refined.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let tol_extremum = cfg.tol_extremum.unwrap_or(1e-9 * kappa.abs().max(1.0));
    let mut minimizers: Vec<(f64, Vec2)> = refined
        .into_iter()
        .filter(|r| r.0 <= kappa + tol_extremum)
        .collect();
    minimizers.sort_by(|a, b| a.0.total_cmp(&b.0));

    // greedy clustering; the best member represents each cluster
    let merge = 1e-5 * scale;
    let mut reps: Vec<Vec2> = Vec::new();
    for &(_, p) in &minimizers {
        if reps.iter().all(|q| q.dist(p) > merge) {
            reps.push(p);
        }
    }

    let mean_r = reps.iter().map(|p| p.norm()).sum::<f64>() / reps.len() as f64;
    let tol_length = cfg.tol_length.unwrap_or(1e-7 * mean_r.max(1.0));
    let residual = reps
        .iter()
        .map(|p| (p.norm() - mean_r).abs())
        .fold(0.0, f64::max);
    let shape = if reps.len() >= cfg.circle_min_points && residual < tol_length {
        reps.sort_by(|a, b| a.angle().total_cmp(&b.angle()));
        Shape::Circle { radius: mean_r }
    } else if reps.len() <= cfg.max_isolated {
        Shape::IsolatedPoints
    } else {
        Shape::Curve
    };
    log::debug!(
        "kappa = {kappa}, {} minimizers in {} clusters, shape {shape:?}",
        minimizers.len(),
        reps.len()
    );

    Ok(ExtremumSet {
        kappa,
        kappa_error: 8.0 * f64::EPSILON * kappa.abs().max(scale * scale),
        points: reps,
        shape,
        tol_extremum,
        search_radius: radius,
        growth,
        coverage_min,
        curvature: None,
    })
}

fn refine(coupling: &Coupling, start: Vec2, step0: f64, scale: f64) -> Result<(f64, Vec2)> {
    minimize_2d(|p| coupling.lambda_minus(p), start, step0, scale)
}

/// Damped Newton with finite-difference derivatives and a clamped Hessian.
pub(crate) fn minimize_2d(
    f: impl Fn(Vec2) -> Result<f64>,
    start: Vec2,
    step0: f64,
    scale: f64,
) -> Result<(f64, Vec2)> {
    let mut p = start;
    let mut fp = f(p)?;
    let mut trust = step0;
    let hg = 1e-6 * scale;
    let hh = 1e-4 * scale;
    for _ in 0..200 {
        let ex = Vec2::new(hg, 0.0);
        let ey = Vec2::new(0.0, hg);
        let gx = (f(p + ex)? - f(p - ex)?) / (2.0 * hg);
        let gy = (f(p + ey)? - f(p - ey)?) / (2.0 * hg);
        let ex = Vec2::new(hh, 0.0);
        let ey = Vec2::new(0.0, hh);
        let hxx = (f(p + ex)? - 2.0 * fp + f(p - ex)?) / (hh * hh);
        let hyy = (f(p + ey)? - 2.0 * fp + f(p - ey)?) / (hh * hh);
        let hxy = (f(p + ex + ey)? - f(p + ex - ey)? - f(p - ex + ey)? + f(p - ex - ey)?)
            / (4.0 * hh * hh);
        let step = newton_step(gx, gy, hxx, hxy, hyy);
        let mut step = if step.norm() > trust {
            step * (trust / step.norm())
        } else {
            step
        };
        let mut accepted = false;
        for _ in 0..40 {
            let q = p + step;
            let fq = f(q)?;
            if fq < fp {
                p = q;
                fp = fq;
                accepted = true;
                break;
            }
            step = step * 0.5;
            if step.norm() < 1e-15 * scale {
                break;
            }
        }
        if !accepted {
            break;
        }
        trust = (2.0 * step.norm()).max(1e-12 * scale).min(step0 * 4.0);
        if step.norm() < 1e-13 * scale {
            break;
        }
    }
    Ok((fp, p))
}

fn newton_step(gx: f64, gy: f64, hxx: f64, hxy: f64, hyy: f64) -> Vec2 {
    // eigen-decomposition of the symmetric 2x2 Hessian, eigenvalues clamped from below
    let tr = 0.5 * (hxx + hyy);
    let d = (0.25 * (hxx - hyy).powi(2) + hxy * hxy).sqrt();
    let (l1, l2) = (tr + d, tr - d);
    let theta = 0.5 * (2.0 * hxy).atan2(hxx - hyy);
    let (s, c) = theta.sin_cos();
    let floor = 1e-6 * l1.abs().max(1e-6);
    let (l1, l2) = (l1.max(floor), l2.max(floor));
    let g1 = c * gx + s * gy;
    let g2 = -s * gx + c * gy;
    let (d1, d2) = (-g1 / l1, -g2 / l2);
    Vec2::new(c * d1 - s * d2, s * d1 + c * d2)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadraticConstant {
    /// reported constant, the grid maximum inflated by 10%
    pub c: f64,
    pub raw_max: f64,
    pub samples: usize,
    pub c2_drift: f64,
}

/// Estimates c in `λ−(p) − κ ≤ c·dist(p, S)²` and checks that |A| is C² near S.
pub fn quadratic_constant(coupling: &Coupling, ext: &ExtremumSet) -> Result<QuadraticConstant> {
    let scale = ext.search_radius.max(ext.diameter()).max(1e-6);
    let centers: Vec<Vec2> = match ext.shape {
        Shape::Circle { radius } => (0..16)
            .map(|k| Vec2::polar(radius, 2.0 * PI * k as f64 / 16.0 + 0.1))
            .collect(),
        _ => farthest_point_sample(&ext.points, 16),
    };

    let c2_drift = c2_drift(coupling, &centers, scale)?;
    if c2_drift > 0.05 {
        return Err(Error::C2Violation { drift: c2_drift });
    }

    let mut probes: Vec<Vec2> = Vec::new();
    for &c in &centers {
        for ir in 1..=40 {
            let rho = 0.5 * scale * (ir as f64 / 40.0).powi(2);
            for it in 0..24 {
                probes.push(c + Vec2::polar(rho, 2.0 * PI * it as f64 / 24.0 + 0.05));
            }
        }
    }
    for ir in 1..=100 {
        for it in 0..200 {
            probes.push(Vec2::polar(
                1.5 * ext.search_radius * ir as f64 / 100.0,
                2.0 * PI * it as f64 / 200.0 + 0.013,
            ));
        }
    }
    let floor = 1e-3 * scale;
    let ratios = probes
        .par_iter()
        .map(|&p| -> Result<Option<f64>> {
            let d = ext.distance(p);
            if d < floor {
                return Ok(None);
            }
            Ok(Some((coupling.lambda_minus(p)? - ext.kappa) / (d * d)))
        })
        .collect::<Result<Vec<_>>>()?;
    let used: Vec<f64> = ratios.into_iter().flatten().collect();
    let raw_max = used.iter().copied().fold(0.0, f64::max);
    Ok(QuadraticConstant {
        c: 1.1 * raw_max,
        raw_max,
        samples: used.len(),
        c2_drift,
    })
}

/// Relative change of the finite-difference Hessian of |A| between steps h and h/2.
fn c2_drift(coupling: &Coupling, centers: &[Vec2], scale: f64) -> Result<f64> {
    let g = |p: Vec2| -> Result<f64> { Ok(coupling.off_diagonal(p)?.norm()) };
    let hessian = |p: Vec2, h: f64| -> Result<[f64; 3]> {
        let ex = Vec2::new(h, 0.0);
        let ey = Vec2::new(0.0, h);
        let g0 = g(p)?;
        Ok([
            (g(p + ex)? - 2.0 * g0 + g(p - ex)?) / (h * h),
            (g(p + ex + ey)? - g(p + ex - ey)? - g(p - ex + ey)? + g(p - ex - ey)?) / (4.0 * h * h),
            (g(p + ey)? - 2.0 * g0 + g(p - ey)?) / (h * h),
        ])
    };
    let mut drift: f64 = 0.0;
    for &c in centers {
        let h = 1e-2 * scale.min(c.norm().max(1e-3 * scale));
        let coarse = hessian(c, h)?;
        let fine = hessian(c, 0.5 * h)?;
        let size = coarse.iter().chain(&fine).fold(1.0f64, |m, v| m.max(v.abs()));
        for k in 0..3 {
            drift = drift.max((coarse[k] - fine[k]).abs() / size);
        }
    }
    Ok(drift)
}

/// Dispersion samples on a rectangular momentum grid, x fastest.
pub fn dispersion_table(
    coupling: &Coupling,
    px: (f64, f64, usize),
    py: (f64, f64, usize),
) -> Result<Vec<DispersionSample>> {
    let axis = |(lo, hi, n): (f64, f64, usize), k: usize| {
        if n <= 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(px.2 * py.2);
    for j in 0..py.2 {
        for i in 0..px.2 {
            out.push(coupling.dispersion(Vec2::new(axis(px, i), axis(py, j)))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn rashba_symbol_at_unit_px() {
        let m = Coupling::Rashba { alpha: 1.0 }.symbol(Vec2::new(1.0, 0.0)).unwrap();
        assert!(close(m[0][0], C64::new(1.0, 0.0)));
        assert!(close(m[0][1], C64::new(0.0, 1.0)));
        assert!(close(m[1][0], C64::new(0.0, -1.0)));
    }

    #[test]
    fn dresselhaus_symbol_at_unit_px() {
        let m = Coupling::Dresselhaus { alpha: 1.0 }
            .symbol(Vec2::new(1.0, 0.0))
            .unwrap();
        assert!(close(m[0][1], C64::new(-1.0, 0.0)));
        assert!(close(m[1][0], C64::new(-1.0, 0.0)));
    }

    #[test]
    fn mixed_gap_matches_expansion() {
        let (ar, ad) = (1.0, 1.0);
        let c = Coupling::Mixed { alpha_r: ar, alpha_d: ad };
        for t in [0.1, 0.5, 1.3] {
            let p = Vec2::new(t, -t);
            let direct = c.off_diagonal(p).unwrap().norm_sqr();
            let expanded = (ar * ar + ad * ad) * p.norm_sqr() - 4.0 * ar * ad * p.x * p.y;
            assert!((direct - expanded).abs() < 1e-13);
        }
    }

    #[test]
    fn diagonalizer_of_rashba() {
        let c = Coupling::Rashba { alpha: 1.0 };
        let p = Vec2::new(1.0, 0.0);
        let d = c.diagonalizer_strict(p, None).unwrap();
        let h = c.symbol(p).unwrap();
        let r = mat_mul(&mat_mul(&d.m, &h), &adjoint(&d.m));
        assert!(close(r[0][0], C64::new(2.0, 0.0)));
        assert!(close(r[1][1], C64::new(0.0, 0.0)));
        assert!(r[0][1].norm() < 1e-12 && r[1][0].norm() < 1e-12);
    }

    #[test]
    fn degenerate_gap_falls_back_to_identity() {
        let c = Coupling::Rashba { alpha: 1.0 };
        let d = c.diagonalizer(Vec2::ZERO, None).unwrap();
        assert!(d.degenerate);
        assert!(close(d.m[0][0], C64::new(1.0, 0.0)) && close(d.m[0][1], C64::new(0.0, 0.0)));
        assert!(matches!(
            c.diagonalizer_strict(Vec2::ZERO, None),
            Err(Error::DegenerateGap { .. })
        ));
    }

    #[test]
    fn free_case_has_single_point_at_origin() {
        let ext = find_kappa_and_s(&Coupling::Zero, &SearchConfig::default()).unwrap();
        assert!(ext.kappa.abs() < 1e-12);
        assert_eq!(ext.shape, Shape::IsolatedPoints);
        assert_eq!(ext.points.len(), 1);
        assert!(ext.points[0].norm() < 1e-6);
        let q = quadratic_constant(&Coupling::Zero, &ext).unwrap();
        assert!((q.raw_max - 1.0).abs() < 1e-9, "{q:?}");
    }

    #[test]
    fn rashba_circle() {
        let c = Coupling::Rashba { alpha: 2.0 };
        let ext = find_kappa_and_s(&c, &SearchConfig::default()).unwrap();
        assert!((ext.kappa + 1.0).abs() < 1e-10);
        match ext.shape {
            Shape::Circle { radius } => assert!((radius - 1.0).abs() < 1e-7),
            s => panic!("expected a circle, got {s:?}"),
        }
        let q = quadratic_constant(&c, &ext).unwrap();
        assert!((q.raw_max - 1.0).abs() < 1e-6, "{q:?}");
    }

    #[test]
    fn growth_violation_is_reported() {
        // |A| = 2p² violates the growth condition at every radius
        let sym = TabulatedSymbol::from_fn(4.0, 41, |p| C64::new(2.0 * p.norm_sqr(), 0.0)).unwrap();
        let c = Coupling::Custom(Arc::new(sym));
        let err = c.growth_radius(0.1, 3.0).unwrap_err();
        assert!(matches!(err, Error::GrowthViolation { .. }));
    }
}
