//! Gauss–Legendre rules and the composite/tensor helpers built on them.

use std::f64::consts::PI;

/// An n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes from Newton iteration on P_n started at the Chebyshev-like guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Breakpoints that grade geometrically towards `a`, then run uniformly to `b`.
///
/// Used for radial integrands with an algebraic cusp at the origin.
pub fn graded_breaks(a: f64, b: f64, grading_levels: usize, uniform_panels: usize) -> Vec<f64> {
    let first = a + (b - a) / uniform_panels.max(1) as f64;
    let mut breaks = vec![a];
    for level in (1..=grading_levels).rev() {
        let x = a + (first - a) * 0.25f64.powi(level as i32);
        breaks.push(x);
    }
    for i in 1..=uniform_panels.max(1) {
        breaks.push(a + (b - a) * i as f64 / uniform_panels.max(1) as f64);
    }
    breaks
}

/// Composite rule over consecutive breakpoints.
pub fn composite<F: FnMut(f64) -> f64>(rule: &GaussLegendre, breaks: &[f64], mut f: F) -> f64 {
    breaks
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], &mut f))
        .sum()
}

/// Integral together with a crude error estimate from two rule orders.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

pub fn composite_with_error<F: FnMut(f64) -> f64>(
    breaks: &[f64],
    order: usize,
    mut f: F,
) -> Estimate {
    let fine = GaussLegendre::new(order);
    let coarse = GaussLegendre::new((order * 2) / 3);
    let v1 = composite(&fine, breaks, &mut f);
    let v0 = composite(&coarse, breaks, &mut f);
    Estimate {
        value: v1,
        error: (v1 - v0).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 40, 64] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(6);
        let v = rule.integrate(0.0, 2.0, |x| x.powi(11));
        assert!((v - 2f64.powi(12) / 12.0).abs() < 1e-10);
    }

    #[test]
    fn graded_composite_handles_sqrt_cusp() {
        let breaks = graded_breaks(0.0, 1.0, 30, 4);
        let rule = GaussLegendre::new(20);
        let v = composite(&rule, &breaks, |x| x.sqrt());
        assert!((v - 2.0 / 3.0).abs() < 1e-13);
    }
}
