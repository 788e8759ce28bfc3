//! Small dense Hermitian helpers on top of faer.

use faer::linalg::triangular_solve::{
    solve_lower_triangular_in_place, solve_upper_triangular_in_place,
};
use faer::{Mat, Par, Side};

use crate::error::{Error, Result};
use crate::C64;

pub type CMat = Mat<C64>;

pub fn from_rows(n: usize, f: impl Fn(usize, usize) -> C64) -> CMat {
    Mat::from_fn(n, n, f)
}

pub fn frobenius(m: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// max |m − m*| relative to max |m|
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    let mut size: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            size = size.max(m[(i, j)].norm());
        }
    }
    if size == 0.0 {
        0.0
    } else {
        worst / size
    }
}

/// The Hermitian part (m + m*)/2.
pub fn hermitian_part(m: &CMat) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let h = hermitian_part(m);
    let mut v: Vec<f64> = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Factorization(format!("dense eigenvalues: {e:?}")))?;
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(v)
}

/// Ascending eigenpairs of a Hermitian matrix; eigenvectors are the columns.
pub fn eigen(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let h = hermitian_part(m);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Factorization(format!("dense eigendecomposition: {e:?}")))?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..h.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    /// ascending μ with A u = μ B u
    pub values: Vec<f64>,
    /// B-orthonormal eigenvectors as columns
    pub vectors: CMat,
    pub b_min: f64,
    pub b_max: f64,
}

impl GeneralizedEigen {
    pub fn condition(&self) -> f64 {
        self.b_max / self.b_min
    }
}

/// Solves A u = μ B u for Hermitian A and Hermitian positive definite B.
pub fn generalized_eigen(a: &CMat, b: &CMat) -> Result<GeneralizedEigen> {
    let n = a.nrows();
    let b = hermitian_part(b);
    let b_eigs = eigenvalues(&b)?;
    let (b_min, b_max) = (b_eigs[0], b_eigs[n - 1]);
    if !(b_min > 0.0) {
        return Err(Error::IllConditionedGram {
            cond: f64::INFINITY,
            limit: f64::INFINITY,
        });
    }
    let llt = b
        .llt(Side::Lower)
        .map_err(|e| Error::Factorization(format!("Gram Cholesky: {e:?}")))?;
    let l = llt.L();
    // C = L⁻¹ (L⁻¹ A)ᴴ = L⁻¹ A L⁻ᴴ
    let mut x = hermitian_part(a);
    solve_lower_triangular_in_place(l, x.as_mut(), Par::Seq);
    let mut c = x.adjoint().to_owned();
    solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let (values, y) = eigen(&c)?;
    let mut u = y;
    solve_upper_triangular_in_place(l.adjoint(), u.as_mut(), Par::Seq);
    Ok(GeneralizedEigen { values, vectors: u, b_min, b_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generalized_problem_reduces_to_standard_for_identity() {
        let a = from_rows(3, |i, j| {
            if i == j {
                C64::new(i as f64, 0.0)
            } else {
                C64::new(0.1, 0.05 * (i as f64 - j as f64))
            }
        });
        let b = from_rows(3, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let g = generalized_eigen(&a, &b).unwrap();
        let e = eigenvalues(&a).unwrap();
        for (x, y) in g.values.iter().zip(&e) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn generalized_eigenvectors_satisfy_the_pencil() {
        let a = from_rows(3, |i, j| C64::new(1.0 / (1.0 + i as f64 + j as f64), 0.0));
        let b = from_rows(3, |i, j| {
            if i == j {
                C64::new(2.0 + i as f64, 0.0)
            } else {
                C64::new(0.3, if i < j { 0.1 } else { -0.1 })
            }
        });
        let g = generalized_eigen(&a, &b).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                let mut lhs = C64::new(0.0, 0.0);
                let mut rhs = C64::new(0.0, 0.0);
                for j in 0..3 {
                    lhs += a[(i, j)] * g.vectors[(j, k)];
                    rhs += b[(i, j)] * g.vectors[(j, k)];
                }
                assert!((lhs - rhs * g.values[k]).norm() < 1e-12);
            }
        }
    }
}
