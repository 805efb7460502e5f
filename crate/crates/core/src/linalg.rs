//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;

use crate::novikov::NovikovSeries;
use crate::rational::Rational;
use std::collections::BTreeSet;

pub type CMatrix = Vec<Vec<Complex64>>;

fn to_dmatrix(a: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows, cols, |i, j| a[i][j])
}

pub fn singular_values(a: &[Vec<Complex64>]) -> Vec<f64> {
    if a.is_empty() || a[0].is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_dmatrix(a).singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Minimum-norm least-squares solution of `a x = b` and the residual norm
/// `‖a x − b‖`. Singular values below `1e-12·σ_max` are treated as zero.
pub fn least_squares(a: &[Vec<Complex64>], b: &[Complex64]) -> (Vec<Complex64>, f64) {
    let cols = a.first().map_or(0, |r| r.len());
    if a.is_empty() || cols == 0 {
        let res = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        return (vec![Complex64::zero(); cols], res);
    }
    let m = to_dmatrix(a);
    let rhs = nalgebra::DVector::from_column_slice(b);
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = (smax * 1e-12).max(1e-300);
    let x = svd.solve(&rhs, eps).expect("SVD has both factors");
    let residual = (&m * &x - &rhs).norm();
    (x.iter().copied().collect(), residual)
}

pub fn inverse(a: &[Vec<Complex64>]) -> Option<CMatrix> {
    let inv = to_dmatrix(a).try_inverse()?;
    Some((0..inv.nrows()).map(|i| (0..inv.ncols()).map(|j| inv[(i, j)]).collect()).collect())
}

/// Orthonormal basis (as columns) of the numerical null space of `a`, whose
/// rows all have length `cols`.
pub fn kernel(a: &[Vec<Complex64>], cols: usize, rel_tol: f64) -> Vec<Vec<Complex64>> {
    if a.is_empty() {
        return (0..cols)
            .map(|k| (0..cols).map(|i| if i == k { Complex64::new(1.0, 0.0) } else { Complex64::zero() }).collect())
            .collect();
    }
    // pad to square so the SVD exposes all right singular vectors
    let rows = a.len().max(cols);
    let padded: Vec<Vec<Complex64>> =
        (0..rows).map(|i| a.get(i).cloned().unwrap_or_else(|| vec![Complex64::zero(); cols])).collect();
    let svd = to_dmatrix(&padded).svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut basis = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= rel_tol * smax.max(1.0) {
            basis.push((0..cols).map(|i| v_t[(k, i)].conj()).collect());
        }
    }
    basis
}

pub fn mat_vec(a: &[Vec<Complex64>], x: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn max_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Applies a constant matrix to a vector of series, exponent by exponent.
pub fn apply_to_series(a: &[Vec<Complex64>], v: &[NovikovSeries]) -> Vec<NovikovSeries> {
    let d = v[0].truncation();
    let exps: BTreeSet<Rational> = v.iter().flat_map(|s| s.terms().iter().map(|(e, _)| *e)).collect();
    let mut rows: Vec<Vec<(Rational, Complex64)>> = vec![Vec::new(); a.len()];
    for e in exps {
        let coeffs: Vec<Complex64> = v.iter().map(|s| s.coefficient(&e)).collect();
        for (row, c) in rows.iter_mut().zip(mat_vec(a, &coeffs)) {
            row.push((e, c));
        }
    }
    rows.into_iter().map(|r| NovikovSeries::from_terms(r, d).expect("exponents are non-negative")).collect()
}
