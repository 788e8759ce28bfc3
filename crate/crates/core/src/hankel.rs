//! Order-zero Hankel transforms of stretched exponentials,
//!
//! ```text
//! S(beta, a; q) = ∫_0^∞ r^(beta+1) exp(-r^a) J0(q r) dr,   0 < a <= 2, beta > -2.
//! ```
//!
//! Three routes are available and the one with the smallest error estimate wins:
//!
//! * the power series in q² (convergent for a > 1, asymptotic otherwise),
//! * the inverse-power series in q^(-a) obtained by expanding exp(-r^a) and
//!   transforming term by term (convergent for a < 1, asymptotic for a > 1),
//! * composite Gauss–Legendre quadrature on graded panels, when the support
//!   of the integrand spans a manageable number of Bessel oscillations.

use std::f64::consts::PI;

use libm::lgamma as ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

const MAX_OSCILLATIONS: f64 = 2.0e5;
const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Origin,
    PowerSeries,
    InversePowerSeries,
    Quadrature,
}

#[derive(Debug, Clone, Copy)]
pub struct Transform {
    pub value: f64,
    pub error: f64,
    pub route: Route,
}

/// Value at q = 0: Γ((beta+2)/a) / a.
pub fn at_origin(beta: f64, a: f64) -> f64 {
    (ln_gamma((beta + 2.0) / a) - a.ln()).exp()
}

/// Evaluates S(beta, a; q) and fails when no route reaches the requested accuracy.
pub fn stretched_exp_hankel(beta: f64, a: f64, q: f64) -> Result<Transform> {
    if !(a > 0.0 && a <= 2.0) || beta <= -2.0 || !q.is_finite() {
        return Err(Error::InvalidInput(format!(
            "stretched exponential transform needs 0 < a <= 2 and beta > -2 (a = {a}, beta = {beta})"
        )));
    }
    let q = q.abs();
    let scale = at_origin(beta, a);
    if q == 0.0 {
        return Ok(Transform {
            value: scale,
            error: scale * 4.0 * EPS,
            route: Route::Origin,
        });
    }
    let tol = |v: f64| 1e-9 * v.abs() + 1e-14 * scale;

    let mut best = power_series(beta, a, q);
    if best.error > tol(best.value) {
        let inv = inverse_power_series(beta, a, q);
        if inv.error < best.error {
            best = inv;
        }
    }
    if best.error > tol(best.value) {
        if let Some(quad) = quadrature(beta, a, q) {
            if quad.error < best.error {
                best = quad;
            }
        }
    }
    let fail = 1e-6 * best.value.abs() + 1e-12 * scale;
    if !(best.error <= fail) || !best.value.is_finite() {
        return Err(Error::QuadratureFailure {
            a,
            q,
            err: best.error,
        });
    }
    Ok(best)
}

/// Σ_j (-1)^j (q/2)^{2j} / (j!)^2 · Γ((beta+2j+2)/a) / a
fn power_series(beta: f64, a: f64, q: f64) -> Transform {
    let convergent = a > 1.0 || (a == 1.0 && q < 1.0);
    let lq = (0.5 * q).ln();
    let mut sum = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut prev = f64::INFINITY;
    let mut tail = f64::INFINITY;
    let mut count = 0usize;
    for j in 0..2000usize {
        let jf = j as f64;
        let lt = 2.0 * jf * lq - 2.0 * ln_gamma(jf + 1.0) + ln_gamma((beta + 2.0 * jf + 2.0) / a)
            - a.ln();
        if lt > 700.0 {
            return failed(Route::PowerSeries);
        }
        let mag = lt.exp();
        if !convergent && j > 0 && mag > prev {
            break;
        }
        let t = if j % 2 == 0 { mag } else { -mag };
        sum += t;
        count += 1;
        max_abs = max_abs.max(mag);
        prev = mag;
        tail = mag;
        if convergent && j > 2 && mag < 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            tail = 0.0;
            break;
        }
    }
    Transform {
        value: sum,
        error: tail + 8.0 * EPS * max_abs * (count as f64).sqrt(),
        route: Route::PowerSeries,
    }
}

/// Σ_n (-1)^n / n! · H(beta + n a), with the generalized transform of a power
/// H(nu) = ∫ r^(nu+1) J0(q r) dr = -2^(nu+1) Γ(1+nu/2)^2 sin(π nu/2) / π · q^(-nu-2).
fn inverse_power_series(beta: f64, a: f64, q: f64) -> Transform {
    let convergent = a < 1.0 || (a == 1.0 && q > 1.0);
    let lq = q.ln();
    let mut sum = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut prev = f64::INFINITY;
    let mut tail = f64::INFINITY;
    let mut count = 0usize;
    let mut small_run = 0usize;
    for n in 0..5000usize {
        let nf = n as f64;
        let nu = beta + nf * a;
        let x = 0.5 * nu;
        let lenv = (nu + 1.0) * std::f64::consts::LN_2 + 2.0 * ln_gamma(1.0 + x)
            - ln_gamma(nf + 1.0)
            - (nu + 2.0) * lq
            - PI.ln();
        if lenv > 700.0 {
            return failed(Route::InversePowerSeries);
        }
        let env = lenv.exp();
        if !convergent && n > 0 && env > prev {
            break;
        }
        let s = sin_pi(x);
        let t = if n % 2 == 0 { -s * env } else { s * env };
        sum += t;
        count += 1;
        max_abs = max_abs.max(t.abs());
        prev = env;
        tail = env;
        if convergent && n > 4 && env < 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            small_run += 1;
            if small_run > 3 {
                tail = 0.0;
                break;
            }
        } else {
            small_run = 0;
        }
    }
    Transform {
        value: sum,
        error: tail + 8.0 * EPS * max_abs * (count as f64).sqrt(),
        route: Route::InversePowerSeries,
    }
}

fn failed(route: Route) -> Transform {
    Transform {
        value: f64::NAN,
        error: f64::INFINITY,
        route,
    }
}

/// sin(π x) with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).floor();
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    (PI * r).sin()
}

/// Graded composite Gauss–Legendre, compared against a lower order on the same panels.
fn quadrature(beta: f64, a: f64, q: f64) -> Option<Transform> {
    // In u = r^a the weight is u^p e^{-u} with p = (beta+2)/a - 1.
    let p = (beta + 2.0) / a - 1.0;
    let log_weight = |u: f64| p * u.ln() - u;
    let u_peak = p.max(1.0);
    let peak = log_weight(u_peak);
    let mut u_max = u_peak;
    while log_weight(u_max) > peak - 46.0 {
        u_max *= 1.05;
    }
    let r_max = u_max.powf(1.0 / a);
    let oscillations = q * r_max / PI;
    if oscillations > MAX_OSCILLATIONS {
        return None;
    }
    // below r_min the integrand is r^(beta+1) to relative accuracy r_min^a
    let r_min = (1e-17f64).powf(1.0 / a).max(r_max * 1e-30).min(1e-3 / q);
    let head = r_min.powf(beta + 2.0) / (beta + 2.0);

    let half_period = PI / q;
    let mut breaks = vec![r_min];
    let mut r = r_min;
    while r < r_max {
        let geometric = r * 1.3;
        let next = if geometric - r > half_period {
            r + half_period
        } else {
            geometric
        }
        .min(r_max);
        breaks.push(next);
        r = next;
    }
    let integrand = |r: f64| r.powf(beta + 1.0) * (-r.powf(a)).exp() * libm::j0(q * r);
    let fine = GaussLegendre::new(24);
    let coarse = GaussLegendre::new(16);
    let mut v_fine = 0.0;
    let mut v_coarse = 0.0;
    let mut mass = 0.0;
    for w in breaks.windows(2) {
        for (x, wt) in fine.mapped(w[0], w[1]) {
            let f = integrand(x);
            v_fine += wt * f;
            mass += wt * f.abs();
        }
        v_coarse += coarse.integrate(w[0], w[1], integrand);
    }
    let value = head + v_fine;
    Some(Transform {
        value,
        error: (v_fine - v_coarse).abs() + 16.0 * EPS * mass + head * r_min.powf(a),
        route: Route::Quadrature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // closed forms: a = 1, beta = 0 -> (1+q^2)^(-3/2); a = 2, beta = 0 -> exp(-q^2/4)/2
    #[test]
    fn matches_closed_form_for_exponential() {
        for q in [0.0, 0.1, 0.5, 0.99, 1.0, 1.3, 4.0, 25.0] {
            let t = stretched_exp_hankel(0.0, 1.0, q).unwrap();
            let exact = (1.0 + q * q).powf(-1.5);
            assert!((t.value - exact).abs() < 1e-10 * exact.max(1e-3), "q={q}: {t:?} vs {exact}");
        }
    }

    #[test]
    fn matches_closed_form_for_gaussian() {
        for q in [0.0, 0.3, 1.0, 3.0, 6.0, 10.0] {
            let t = stretched_exp_hankel(0.0, 2.0, q).unwrap();
            let exact = 0.5 * (-0.25 * q * q).exp();
            assert!((t.value - exact).abs() < 1e-12, "q={q}: {t:?} vs {exact}");
        }
    }

    #[test]
    fn routes_agree_where_they_overlap() {
        // a = 0.5: inverse series and quadrature are both usable at moderate q
        for q in [0.05, 0.3, 1.0, 3.0] {
            let s = inverse_power_series(0.0, 0.5, q);
            let quad = quadrature(0.0, 0.5, q).unwrap();
            assert!(
                (s.value - quad.value).abs() < 1e-8 * s.value.abs().max(1e-3),
                "q={q}: {s:?} {quad:?}"
            );
        }
    }

    #[test]
    fn origin_value_is_gamma_ratio() {
        assert!((at_origin(0.0, 2.0) - 0.5).abs() < 1e-15);
        assert!((at_origin(0.0, 0.5) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range_exponent() {
        assert!(stretched_exp_hankel(0.0, 2.5, 1.0).is_err());
        assert!(stretched_exp_hankel(-2.0, 1.0, 1.0).is_err());
    }
}
