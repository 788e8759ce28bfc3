//! Negative-definiteness certificates for the matrix `(V̂(p_m − p_n))` at points of S.

use serde::Serialize;

use crate::dispersion::{farthest_point_sample, ExtremumSet, Shape};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::potential::{Potential, SignCertificate};
use crate::vec2::Vec2;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NegativeDefinite,
    NegativeSemiDefinite,
    Indefinite,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefinitenessCertificate {
    pub anchors: Vec<Vec2>,
    #[serde(skip)]
    pub matrix: CMat,
    pub eigenvalues: Vec<f64>,
    pub max_eigenvalue: f64,
    pub tol_def: f64,
    pub hermiticity_defect: f64,
    pub verdict: Verdict,
}

impl DefinitenessCertificate {
    pub fn n(&self) -> usize {
        self.anchors.len()
    }
}

/// Builds `C_mn = V̂(p_m − p_n)` and classifies it.
pub fn certify(potential: &Potential, anchors: &[Vec2]) -> Result<DefinitenessCertificate> {
    let n = anchors.len();
    let scale = anchors.iter().map(|p| p.norm()).fold(1.0, f64::max);
    for i in 0..n {
        for j in i + 1..n {
            if anchors[i].dist(anchors[j]) <= 1e-12 * scale {
                return Err(Error::DuplicateAnchors { i, j });
            }
        }
    }
    let raw = linalg::from_rows(n, |m, l| potential.fourier(anchors[m] - anchors[l]));
    let hermiticity_defect = linalg::hermiticity_defect(&raw);
    let matrix = linalg::hermitian_part(&raw);
    let eigenvalues = linalg::eigenvalues(&matrix)?;
    let max_eigenvalue = eigenvalues.last().copied().unwrap_or(0.0);
    let tol_def = 1e-10 * linalg::frobenius(&matrix);
    let verdict = if max_eigenvalue < -tol_def {
        Verdict::NegativeDefinite
    } else if max_eigenvalue <= tol_def {
        Verdict::NegativeSemiDefinite
    } else {
        Verdict::Indefinite
    };
    Ok(DefinitenessCertificate {
        anchors: anchors.to_vec(),
        matrix,
        eigenvalues,
        max_eigenvalue,
        tol_def,
        hermiticity_defect,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CountPrediction {
    pub count: usize,
    pub method: String,
    pub certificate: Option<DefinitenessCertificate>,
    /// largest eigenvalue seen when nothing certifies
    pub evidence: Option<f64>,
}

/// Candidate points on S used by the greedy search.
fn candidates(ext: &ExtremumSet, n: usize) -> Vec<Vec2> {
    match ext.shape {
        Shape::Circle { .. } => ext.anchors(n, 0.0),
        Shape::IsolatedPoints => ext.points.clone(),
        Shape::Curve => farthest_point_sample(&ext.points, n),
    }
}

/// Largest N ≤ n_max with a negative-definite certificate on S.
pub fn predicted_count(
    ext: &ExtremumSet,
    potential: &Potential,
    n_max: usize,
) -> Result<CountPrediction> {
    let cap = ext.capacity(n_max);
    if cap == 0 {
        return Ok(CountPrediction { count: 0, method: "empty".into(), certificate: None, evidence: None });
    }
    if potential.sign_certificate() == SignCertificate::NonPositive && !potential.is_zero() {
        let cert = certify(potential, &ext.anchors(cap, 0.0))?;
        if cert.verdict == Verdict::NegativeDefinite {
            return Ok(CountPrediction {
                count: cap,
                method: "non-positive well".into(),
                certificate: Some(cert),
                evidence: None,
            });
        }
    }
    // greedy forward selection over at most 64 candidates
    let pool = candidates(ext, 64.min(n_max.max(1) * 8).max(cap.min(64)));
    let mut chosen: Vec<Vec2> = Vec::new();
    let mut best: Option<DefinitenessCertificate> = None;
    let mut evidence = f64::NEG_INFINITY;
    while chosen.len() < cap {
        let mut step: Option<DefinitenessCertificate> = None;
        for p in &pool {
            if chosen.iter().any(|q| q.dist(*p) == 0.0) {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(*p);
            let cert = certify(potential, &trial)?;
            if chosen.is_empty() {
                evidence = cert.max_eigenvalue;
            }
            if cert.verdict != Verdict::NegativeDefinite {
                continue;
            }
            if step.as_ref().is_none_or(|s| cert.max_eigenvalue < s.max_eigenvalue) {
                step = Some(cert);
            }
        }
        match step {
            Some(cert) => {
                chosen = cert.anchors.clone();
                best = Some(cert);
            }
            None => break,
        }
    }
    Ok(CountPrediction {
        count: chosen.len(),
        method: "greedy".into(),
        certificate: best,
        evidence: if chosen.is_empty() { Some(evidence) } else { None },
    })
}

/// Unit-modulus phases e^{−i(p_m − p_n)·x0} picked up by translating the potential.
pub fn translation_phases(anchors: &[Vec2], x0: Vec2) -> CMat {
    linalg::from_rows(anchors.len(), |m, l| {
        C64::from_polar(1.0, -(anchors[m] - anchors[l]).dot(x0))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ring(n: usize, r: f64) -> Vec<Vec2> {
        (0..n).map(|k| Vec2::polar(r, 2.0 * PI * k as f64 / n as f64 + 0.2)).collect()
    }

    #[test]
    fn gaussian_well_is_negative_definite() {
        let v = Potential::Gaussian { depth: 1.0, radius: 1.0 };
        let c = certify(&v, &ring(4, 0.5)).unwrap();
        assert_eq!(c.verdict, Verdict::NegativeDefinite);
    }

    #[test]
    fn zero_potential_is_not_certified() {
        let c = certify(&Potential::Zero, &ring(3, 0.5)).unwrap();
        assert_eq!(c.max_eigenvalue, 0.0);
        assert_ne!(c.verdict, Verdict::NegativeDefinite);
    }

    #[test]
    fn single_anchor_uses_the_mean() {
        let v = Potential::Circular { depth: 0.2, radius: 2.0 };
        let c = certify(&v, &[Vec2::new(0.3, 0.1)]).unwrap();
        assert!((c.max_eigenvalue - v.integral().value / (2.0 * PI)).abs() < 1e-14);
        assert_eq!(c.verdict, Verdict::NegativeDefinite);
    }

    #[test]
    fn duplicate_anchors_are_rejected() {
        let v = Potential::Gaussian { depth: 1.0, radius: 1.0 };
        let p = Vec2::new(0.5, 0.0);
        assert!(matches!(certify(&v, &[p, p]), Err(Error::DuplicateAnchors { i: 0, j: 1 })));
    }

    #[test]
    fn translation_is_a_unitary_congruence() {
        let v = Potential::Gaussian { depth: 0.7, radius: 1.3 };
        let anchors = ring(5, 0.8);
        let x0 = Vec2::new(1.5, -0.3);
        let a = certify(&v, &anchors).unwrap();
        let b = certify(&v.clone().shifted(x0), &anchors).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).abs() < 1e-10);
        }
        let phases = translation_phases(&anchors, x0);
        for m in 0..5 {
            for l in 0..5 {
                assert!((b.matrix[(m, l)] - a.matrix[(m, l)] * phases[(m, l)]).norm() < 1e-14);
            }
        }
    }
}
