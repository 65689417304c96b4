//! Thin wrappers over faer's dense complex factorizations.

use faer::Mat;
use faer::linalg::solvers::Solve;

use crate::error::{Error, Result};
use crate::C64;

pub type CMat = Mat<C64>;

/// LU factorization with partial pivoting plus pivot diagnostics.
pub struct Lu {
    lu: faer::linalg::solvers::PartialPivLu<C64>,
    /// Smallest |U_ii| relative to the largest entry of the factored matrix.
    pub min_pivot_rel: f64,
}

impl Lu {
    pub fn new(a: &CMat) -> Self {
        let lu = a.partial_piv_lu();
        let scale = max_abs(a).max(f64::MIN_POSITIVE);
        let u = lu.U();
        let min_pivot = (0..u.nrows().min(u.ncols())).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        Self { lu, min_pivot_rel: min_pivot / scale }
    }

    pub fn solve(&self, rhs: &CMat) -> CMat {
        self.lu.solve(rhs)
    }
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Singular values (descending) and right singular vectors (columns of V).
pub fn svd(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let s = a.svd().map_err(|e| Error::Linalg(format!("svd: {e:?}")))?;
    let sv: Vec<f64> = (0..a.nrows().min(a.ncols())).map(|i| s.S()[i].re).collect();
    Ok((sv, s.V().to_owned()))
}

pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    a.singular_values().map_err(|e| Error::Linalg(format!("svd: {e:?}")))
}

pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    a.eigenvalues().map_err(|e| Error::Linalg(format!("eigenvalues: {e:?}")))
}

/// Frobenius norm of A - A^H.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    s.sqrt()
}

/// Spectral norm.
pub fn norm2(a: &CMat) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_and_reports_pivots() {
        let a = CMat::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64 + if i == j { 5.0 } else { 0.0 }, i as f64 - j as f64));
        let b = CMat::from_fn(3, 2, |i, j| C64::new(i as f64, j as f64));
        let lu = Lu::new(&a);
        let x = lu.solve(&b);
        let r = &a * &x - &b;
        assert!(max_abs(&r) < 1e-13);
        assert!(lu.min_pivot_rel > 1e-3);
        let sing = CMat::from_fn(2, 2, |_, _| C64::new(1.0, 0.0));
        assert!(Lu::new(&sing).min_pivot_rel < 1e-14);
    }

    #[test]
    fn svd_ordering() {
        let a = CMat::from_fn(4, 2, |i, j| C64::new(if i == j { (j + 1) as f64 } else { 0.0 }, 0.0));
        let (s, v) = svd(&a).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
        assert!((v[(1, 0)].norm() - 1.0).abs() < 1e-14);
    }
}
