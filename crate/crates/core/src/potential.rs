//! Short-range wells and their Fourier transforms under
//! `V̂(p) = (2π)⁻¹ ∫ V(x) e^{-ip·x} dx`.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{read_csv, UniformGrid};
use crate::quadrature::Estimate;
use crate::vec2::Vec2;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignCertificate {
    NonPositive,
    Indefinite,
    Unknown,
}

/// A potential sampled on a uniform position grid (CSV header `x,y,V`).
#[derive(Debug, Clone)]
pub struct TabulatedPotential {
    pub grid: UniformGrid<f64>,
    pub source: String,
}

impl TabulatedPotential {
    pub fn from_csv(path: &Path) -> Result<Self> {
        let rows = read_csv(path, &["x", "y", "V"])?;
        let rows: Vec<(f64, f64, f64)> = rows.into_iter().map(|r| (r[0], r[1], r[2])).collect();
        Ok(Self {
            grid: UniformGrid::from_rows(&rows)?,
            source: path.display().to_string(),
        })
    }

    /// Samples `f` on n×n nodes covering [−half_width, half_width]².
    pub fn from_fn(half_width: f64, n: usize, f: impl Fn(Vec2) -> f64) -> Result<Self> {
        let step = 2.0 * half_width / (n - 1) as f64;
        let mut rows = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let x = Vec2::new(-half_width + i as f64 * step, -half_width + j as f64 * step);
                rows.push((x.x, x.y, f(x)));
            }
        }
        Ok(Self {
            grid: UniformGrid::from_rows(&rows)?,
            source: "generated".into(),
        })
    }

    /// Trapezoid weight of node (i, j).
    fn weight(&self, i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let wx = if i == 0 || i == g.nx - 1 { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == g.ny - 1 { 0.5 } else { 1.0 };
        wx * wy * g.dx * g.dy
    }

    fn integral(&self) -> Estimate {
        let g = &self.grid;
        let mut fine = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                fine += self.weight(i, j) * g.at(i, j);
            }
        }
        // the same rule on every other node, where the node counts allow it
        let error = if g.nx % 2 == 1 && g.ny % 2 == 1 {
            let mut coarse = 0.0;
            for j in (0..g.ny).step_by(2) {
                for i in (0..g.nx).step_by(2) {
                    let wx = if i == 0 || i == g.nx - 1 { 0.5 } else { 1.0 };
                    let wy = if j == 0 || j == g.ny - 1 { 0.5 } else { 1.0 };
                    coarse += wx * wy * 4.0 * g.dx * g.dy * g.at(i, j);
                }
            }
            (fine - coarse).abs() / 3.0
        } else {
            f64::INFINITY
        };
        Estimate { value: fine, error: error + self.boundary_mass() }
    }

    /// Mass of |V| on the outermost ring of nodes, a proxy for truncation.
    fn boundary_mass(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                if i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1 {
                    m += g.at(i, j).abs() * g.dx * g.dy;
                }
            }
        }
        m
    }

    /// Direct trapezoid sum of the transform, separable in x and y.
    fn fourier(&self, p: Vec2) -> C64 {
        let g = &self.grid;
        let ex: Vec<C64> = (0..g.nx)
            .map(|i| C64::from_polar(1.0, -p.x * (g.x0 + i as f64 * g.dx)))
            .collect();
        let mut total = C64::new(0.0, 0.0);
        for j in 0..g.ny {
            let mut row = C64::new(0.0, 0.0);
            for i in 0..g.nx {
                row += ex[i] * (self.weight(i, j) * g.at(i, j));
            }
            total += row * C64::from_polar(1.0, -p.y * (g.y0 + j as f64 * g.dy));
        }
        total / (2.0 * PI)
    }
}

#[derive(Debug, Clone)]
pub enum Potential {
    Zero,
    /// V(x) = −U exp(−|x|²/(2R²))
    Gaussian { depth: f64, radius: f64 },
    /// V(x) = −U on |x| < R
    Circular { depth: f64, radius: f64 },
    Tabulated(Arc<TabulatedPotential>),
    /// V(x − center)
    Shifted { inner: Box<Potential>, center: Vec2 },
    /// factor · V(x)
    Scaled { inner: Box<Potential>, factor: f64 },
}

impl Potential {
    pub fn name(&self) -> String {
        match self {
            Potential::Zero => "zero".into(),
            Potential::Gaussian { depth, radius } => format!("gaussian(U={depth}, R={radius})"),
            Potential::Circular { depth, radius } => format!("circular(U={depth}, R={radius})"),
            Potential::Tabulated(t) => format!("tabulated({})", t.source),
            Potential::Shifted { inner, center } => {
                format!("{} shifted by ({}, {})", inner.name(), center.x, center.y)
            }
            Potential::Scaled { inner, factor } => format!("{factor} x {}", inner.name()),
        }
    }

    pub fn shifted(self, center: Vec2) -> Self {
        Potential::Shifted { inner: Box::new(self), center }
    }

    pub fn scaled(self, factor: f64) -> Self {
        match self {
            Potential::Gaussian { depth, radius } => Potential::Gaussian { depth: depth * factor, radius },
            Potential::Circular { depth, radius } => Potential::Circular { depth: depth * factor, radius },
            Potential::Zero => Potential::Zero,
            other => Potential::Scaled { inner: Box::new(other), factor },
        }
    }

    pub fn sign_certificate(&self) -> SignCertificate {
        match self {
            Potential::Zero => SignCertificate::NonPositive,
            Potential::Gaussian { depth, .. } | Potential::Circular { depth, .. } => {
                if *depth >= 0.0 {
                    SignCertificate::NonPositive
                } else {
                    SignCertificate::Indefinite
                }
            }
            Potential::Tabulated(t) => {
                if t.grid.values.iter().all(|&v| v <= 0.0) {
                    SignCertificate::NonPositive
                } else {
                    SignCertificate::Indefinite
                }
            }
            Potential::Shifted { inner, .. } => inner.sign_certificate(),
            Potential::Scaled { inner, factor } => match inner.sign_certificate() {
                SignCertificate::NonPositive if *factor >= 0.0 => SignCertificate::NonPositive,
                SignCertificate::Unknown => SignCertificate::Unknown,
                _ => SignCertificate::Indefinite,
            },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Gaussian { depth, .. } | Potential::Circular { depth, .. } => *depth == 0.0,
            Potential::Tabulated(t) => t.grid.values.iter().all(|&v| v == 0.0),
            Potential::Shifted { inner, .. } => inner.is_zero(),
            Potential::Scaled { inner, factor } => *factor == 0.0 || inner.is_zero(),
        }
    }

    pub fn eval(&self, x: Vec2) -> Result<f64> {
        Ok(match self {
            Potential::Zero => 0.0,
            Potential::Gaussian { depth, radius } => {
                -depth * (-x.norm_sqr() / (2.0 * radius * radius)).exp()
            }
            Potential::Circular { depth, radius } => {
                if x.norm() < *radius {
                    -depth
                } else {
                    0.0
                }
            }
            Potential::Tabulated(t) => t
                .grid
                .interpolate(x)
                .ok_or(Error::OutOfExtent { x: x.x, y: x.y })?,
            Potential::Shifted { inner, center } => inner.eval(x - *center)?,
            Potential::Scaled { inner, factor } => factor * inner.eval(x)?,
        })
    }

    /// Like `eval`, but positions outside a tabulated extent read as zero (flagged).
    pub fn eval_lenient(&self, x: Vec2) -> (f64, bool) {
        match self.eval(x) {
            Ok(v) => (v, false),
            Err(_) => (0.0, true),
        }
    }

    /// ∫V dx with an error estimate (zero for closed forms).
    pub fn integral(&self) -> Estimate {
        match self {
            Potential::Zero => Estimate { value: 0.0, error: 0.0 },
            Potential::Gaussian { depth, radius } => Estimate {
                value: -2.0 * PI * depth * radius * radius,
                error: 0.0,
            },
            Potential::Circular { depth, radius } => Estimate {
                value: -PI * depth * radius * radius,
                error: 0.0,
            },
            Potential::Tabulated(t) => t.integral(),
            Potential::Shifted { inner, .. } => inner.integral(),
            Potential::Scaled { inner, factor } => {
                let e = inner.integral();
                Estimate { value: factor * e.value, error: factor.abs() * e.error }
            }
        }
    }

    /// V̂(p) = (2π)⁻¹ ∫ V(x) e^{−ip·x} dx
    pub fn fourier(&self, p: Vec2) -> C64 {
        match self {
            Potential::Zero => C64::new(0.0, 0.0),
            Potential::Gaussian { depth, radius } => {
                let r2 = radius * radius;
                C64::new(-depth * r2 * (-0.5 * r2 * p.norm_sqr()).exp(), 0.0)
            }
            Potential::Circular { depth, radius } => {
                let k = p.norm();
                let z = k * radius;
                // J1(z)/z → 1/2 − z²/16 near the origin
                let j1_over_z = if z < 1e-4 {
                    0.5 - z * z / 16.0
                } else {
                    libm::j1(z) / z
                };
                C64::new(-depth * radius * radius * j1_over_z, 0.0)
            }
            Potential::Tabulated(t) => t.fourier(p),
            Potential::Shifted { inner, center } => {
                inner.fourier(p) * C64::from_polar(1.0, -p.dot(*center))
            }
            Potential::Scaled { inner, factor } => inner.fourier(p) * *factor,
        }
    }

    pub fn min_value(&self) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Gaussian { depth, .. } | Potential::Circular { depth, .. } => (-depth).min(0.0),
            Potential::Tabulated(t) => t.grid.values.iter().copied().fold(0.0, f64::min),
            Potential::Shifted { inner, .. } => inner.min_value(),
            Potential::Scaled { inner, factor } => {
                if *factor >= 0.0 {
                    factor * inner.min_value()
                } else {
                    factor * inner.max_value()
                }
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Gaussian { depth, .. } | Potential::Circular { depth, .. } => (-depth).max(0.0),
            Potential::Tabulated(t) => t.grid.values.iter().copied().fold(0.0, f64::max),
            Potential::Shifted { inner, .. } => inner.max_value(),
            Potential::Scaled { inner, factor } => {
                if *factor >= 0.0 {
                    factor * inner.max_value()
                } else {
                    factor * inner.min_value()
                }
            }
        }
    }

    /// Centre and radius of a disk outside which ∫|V| is below `tail`.
    pub fn support(&self, tail: f64) -> (Vec2, f64) {
        match self {
            Potential::Zero => (Vec2::ZERO, 0.0),
            Potential::Gaussian { depth, radius } => {
                // ∫_{|x|>ρ} |V| = 2π|U|R² exp(−ρ²/(2R²))
                let total = 2.0 * PI * depth.abs() * radius * radius;
                let rho = if total <= tail {
                    0.0
                } else {
                    radius * (2.0 * (total / tail).ln()).sqrt()
                };
                (Vec2::ZERO, rho)
            }
            Potential::Circular { radius, .. } => (Vec2::ZERO, *radius),
            Potential::Tabulated(t) => {
                let g = &t.grid;
                let c = Vec2::new(0.5 * (g.x0 + g.x_max()), 0.5 * (g.y0 + g.y_max()));
                (c, 0.5 * Vec2::new(g.x_max() - g.x0, g.y_max() - g.y0).norm())
            }
            Potential::Shifted { inner, center } => {
                let (c, r) = inner.support(tail);
                (c + *center, r)
            }
            Potential::Scaled { inner, factor } => inner.support(tail / factor.abs().max(1e-300)),
        }
    }

    /// A radial profile V(|x|) when the potential is rotation invariant about the origin.
    pub fn radial(&self) -> Option<RadialWell> {
        match self {
            Potential::Zero => Some(RadialWell::Zero),
            Potential::Gaussian { depth, radius } => Some(RadialWell::Gaussian { depth: *depth, radius: *radius }),
            Potential::Circular { depth, radius } => Some(RadialWell::Circular { depth: *depth, radius: *radius }),
            Potential::Scaled { inner, factor } => inner.radial().map(|r| r.scaled(*factor)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum RadialWell {
    Zero,
    Gaussian { depth: f64, radius: f64 },
    Circular { depth: f64, radius: f64 },
}

impl RadialWell {
    fn scaled(self, t: f64) -> Self {
        match self {
            RadialWell::Zero => RadialWell::Zero,
            RadialWell::Gaussian { depth, radius } => RadialWell::Gaussian { depth: depth * t, radius },
            RadialWell::Circular { depth, radius } => RadialWell::Circular { depth: depth * t, radius },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_values() {
        let g = Potential::Gaussian { depth: 1.0, radius: 1.0 };
        assert_eq!(g.eval(Vec2::ZERO).unwrap(), -1.0);
        let c = Potential::Circular { depth: 2.0, radius: 1.0 };
        assert_eq!(c.eval(Vec2::new(0.5, 0.0)).unwrap(), -2.0);
        assert_eq!(c.eval(Vec2::new(1.5, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn preset_integrals_and_origin_transform() {
        let g = Potential::Gaussian { depth: 1.0, radius: 1.0 };
        assert!((g.integral().value + 2.0 * PI).abs() < 1e-14);
        assert!((g.fourier(Vec2::ZERO).re + 1.0).abs() < 1e-15);
        let c = Potential::Circular { depth: 1.0, radius: 1.0 };
        assert!((c.integral().value + PI).abs() < 1e-14);
        assert!((c.fourier(Vec2::new(1e-9, 0.0)).re + 0.5).abs() < 1e-12);
    }

    #[test]
    fn tabulated_gaussian_integral() {
        let t = TabulatedPotential::from_fn(8.0, 513, |x| -(-0.5 * x.norm_sqr()).exp()).unwrap();
        let v = Potential::Tabulated(Arc::new(t));
        let i = v.integral();
        assert!((i.value + 2.0 * PI).abs() < 1e-6, "{i:?}");
        let f = v.fourier(Vec2::new(0.7, -0.2));
        let exact = -(-0.5 * 0.53f64).exp();
        assert!((f.re - exact).abs() < 1e-8 && f.im.abs() < 1e-10, "{f}");
    }

    #[test]
    fn shift_multiplies_by_phase() {
        let g = Potential::Gaussian { depth: 0.3, radius: 1.2 };
        let x0 = Vec2::new(0.4, -1.0);
        let p = Vec2::new(0.9, 0.2);
        let s = g.clone().shifted(x0);
        let expected = g.fourier(p) * C64::from_polar(1.0, -p.dot(x0));
        assert!((s.fourier(p) - expected).norm() < 1e-15);
        assert_eq!(s.eval(x0).unwrap(), -0.3);
    }

    #[test]
    fn out_of_extent_is_an_error_or_flagged_zero() {
        let t = TabulatedPotential::from_fn(1.0, 5, |_| -1.0).unwrap();
        let v = Potential::Tabulated(Arc::new(t));
        assert!(matches!(v.eval(Vec2::new(2.0, 0.0)), Err(Error::OutOfExtent { .. })));
        assert_eq!(v.eval_lenient(Vec2::new(2.0, 0.0)), (0.0, true));
    }
}
