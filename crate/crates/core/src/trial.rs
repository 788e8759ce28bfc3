//! The trial profile `f_a(x) = exp(-|x|^a / 2)` and its radial Fourier transform.

use std::f64::consts::PI;

use libm::tgamma as gamma;

use crate::error::{Error, Result};
use crate::hankel::{self, Transform};
use crate::quadrature::{composite_with_error, Estimate, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialProfile {
    pub a: f64,
}

impl TrialProfile {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 2.0) {
            return Err(Error::InvalidInput(format!(
                "trial exponent must satisfy 0 < a <= 2, got {a}"
            )));
        }
        Ok(Self { a })
    }

    pub fn value(&self, r: f64) -> f64 {
        (-0.5 * r.abs().powf(self.a)).exp()
    }

    /// ‖f_a‖² = 2πΓ(2/a)/a
    pub fn norm_sqr(&self) -> f64 {
        2.0 * PI * gamma(2.0 / self.a) / self.a
    }

    /// ∫|∇f_a|² = πa/2
    pub fn grad_norm_sqr(&self) -> f64 {
        0.5 * PI * self.a
    }

    /// 2π ∫ |f_a'(r)|² r dr by graded radial quadrature.
    pub fn grad_norm_sqr_numeric(&self) -> Estimate {
        let a = self.a;
        radial_integral(a, 2.0 * a - 1.0, |r| {
            let d = 0.5 * a * r.powf(a - 1.0) * self.value(r);
            2.0 * PI * d * d * r
        })
    }

    /// 2π ∫ f_a(r)² r dr by graded radial quadrature.
    pub fn norm_sqr_numeric(&self) -> Estimate {
        radial_integral(self.a, 1.0, |r| {
            let f = self.value(r);
            2.0 * PI * f * f * r
        })
    }

    /// f̂_a(k) = (2π)⁻¹ ∫ f_a(x) e^{-ik·x} dx, closed form at a = 2.
    pub fn f_hat(&self, k: f64) -> Result<f64> {
        if self.a == 2.0 {
            return Ok((-0.5 * k * k).exp());
        }
        self.f_hat_numeric(k).map(|t| t.value)
    }

    /// The radial transform route, also used for a = 2 to cross-check the closed form.
    pub fn f_hat_numeric(&self, k: f64) -> Result<Transform> {
        let s = 2f64.powf(1.0 / self.a);
        let t = hankel::stretched_exp_hankel(0.0, self.a, s * k)?;
        let scale = s * s;
        Ok(Transform {
            value: scale * t.value,
            error: scale * t.error,
            route: t.route,
        })
    }

    /// ∫|f̂_a(k)|² dk over the plane, for the Plancherel check.
    pub fn f_hat_norm_sqr(&self) -> Result<Estimate> {
        // geometric panels from a small core radius outwards, power-law tail fitted at the end
        let rule = GaussLegendre::new(20);
        let k0 = 1e-3;
        let mut value = 0.0;
        let mut error = 0.0;
        let add_panel = |lo: f64, hi: f64| -> Result<(f64, f64)> {
            let mut v = 0.0;
            let mut e = 0.0;
            for (k, w) in rule.mapped(lo, hi) {
                let t = self.f_hat_numeric(k)?;
                v += w * 2.0 * PI * t.value * t.value * k;
                e += w * 2.0 * PI * 2.0 * t.value.abs() * t.error * k;
            }
            Ok((v, e))
        };
        let (v, e) = add_panel(0.0, k0)?;
        value += v;
        error += e;
        let ratio: f64 = 1.25;
        let mut lo = k0;
        let mut last = v;
        let mut prev_density = f64::NAN;
        loop {
            let hi = lo * ratio;
            let (v, e) = add_panel(lo, hi)?;
            value += v;
            error += e;
            // density g(k) = 2π f̂² k ~ C k^{-s} in the tail
            let density = v / (hi - lo);
            if hi > 10.0 && v.abs() < 1e-14 * value.abs() {
                break;
            }
            if hi > 50.0 && prev_density.is_finite() && density > 0.0 && prev_density > 0.0 {
                let s = -(density / prev_density).ln() / ratio.ln();
                if s > 1.5 {
                    let k_mid = (lo * hi).sqrt();
                    let tail = density * k_mid.powf(s) * hi.powf(1.0 - s) / (s - 1.0);
                    if tail.abs() < 1e-9 * value.abs() || hi > 1e7 {
                        value += tail;
                        error += 0.1 * tail.abs();
                        break;
                    }
                }
            }
            if hi > 1e8 {
                return Err(Error::QuadratureFailure {
                    a: self.a,
                    q: hi,
                    err: last,
                });
            }
            prev_density = density;
            last = v;
            lo = hi;
        }
        Ok(Estimate { value, error })
    }
}

/// ∫_0^∞ g(r) dr for integrands ~ r^`power` e^{-r^a} with a cusp at the origin.
fn radial_integral<F: FnMut(f64) -> f64>(a: f64, power: f64, mut g: F) -> Estimate {
    // in u = r^a the integrand is u^((power+1)/a - 1) e^{-u} du / a
    let p = (power + 1.0) / a - 1.0;
    let log_w = |u: f64| p * u.ln() - u;
    let peak_u = p.max(1.0);
    let peak = log_w(peak_u);
    let mut u_max = peak_u;
    while log_w(u_max) > peak - 46.0 {
        u_max *= 1.05;
    }
    // panels are geometric in u, mapped back to r
    let mut breaks = vec![0.0];
    let mut u = 1e-18f64.min(1e-6 * peak_u);
    while u < u_max {
        breaks.push(u.powf(1.0 / a));
        u *= 1.4;
    }
    breaks.push(u_max.powf(1.0 / a));
    composite_with_error(&breaks, 24, &mut g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_norms() {
        let f2 = TrialProfile::new(2.0).unwrap();
        assert!((f2.norm_sqr() - PI).abs() < 1e-13);
        assert!((f2.grad_norm_sqr() - PI).abs() < 1e-15);
        let f1 = TrialProfile::new(1.0).unwrap();
        assert!((f1.grad_norm_sqr() - 0.5 * PI).abs() < 1e-15);
    }

    #[test]
    fn numeric_norms_match_closed_forms() {
        for a in [0.125, 0.25, 0.5, 1.0, 2.0] {
            let f = TrialProfile::new(a).unwrap();
            let g = f.grad_norm_sqr_numeric();
            assert!((g.value - f.grad_norm_sqr()).abs() < 1e-9, "a={a}: {g:?}");
            let n = f.norm_sqr_numeric();
            assert!(
                (n.value - f.norm_sqr()).abs() < 1e-9 * f.norm_sqr(),
                "a={a}: {n:?}"
            );
        }
    }

    #[test]
    fn gaussian_transform_closed_form_and_numeric_agree() {
        let f = TrialProfile::new(2.0).unwrap();
        assert!((f.f_hat(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((f.f_hat(1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        for k in [0.0, 0.4, 1.0, 2.5, 6.0] {
            let num = f.f_hat_numeric(k).unwrap().value;
            assert!((num - (-0.5 * k * k).exp()).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn exponential_profile_transform() {
        // f_1 = e^{-r/2}: f̂ = 4 / (1 + 4k²)^{3/2}
        let f = TrialProfile::new(1.0).unwrap();
        for k in [0.0_f64, 0.3, 0.5, 1.0, 3.0] {
            let exact = 4.0 / (1.0 + 4.0 * k * k).powf(1.5);
            assert!((f.f_hat(k).unwrap() - exact).abs() < 1e-10 * exact, "k={k}");
        }
    }

    #[test]
    fn rejects_exponent_outside_range() {
        assert!(TrialProfile::new(0.0).is_err());
        assert!(TrialProfile::new(3.0).is_err());
    }
}
