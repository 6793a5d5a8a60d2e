//! Thin wrappers over the LAPACK-backed decompositions used by the
//! embedding pipeline, with the orderings and sign conventions fixed.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, EighInto, SVD, UPLO};

use crate::error::{Error, Result};

/// Symmetric eigendecomposition with eigenpairs sorted by descending
/// absolute eigenvalue; ties broken by eigenvalue sign (positive first) then
/// original index. Each eigenvector is sign-fixed so its entry of largest
/// magnitude is positive.
pub fn sym_eigen_abs_desc(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let (vals, vecs) = a
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Eigen(e.to_string()))?;
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        vals[j]
            .abs()
            .total_cmp(&vals[i].abs())
            .then_with(|| vals[j].total_cmp(&vals[i]))
            .then_with(|| i.cmp(&j))
    });
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        let mut v: Array1<f64> = vecs.column(src).to_owned();
        let mut arg = 0;
        for i in 1..n {
            if v[i].abs() > v[arg].abs() {
                arg = i;
            }
        }
        if v[arg] < 0.0 {
            v.mapv_inplace(|x| -x);
        }
        sorted_vecs.column_mut(col).assign(&v);
    }
    Ok((sorted_vals, sorted_vecs))
}

/// Eigenvalues only, by descending absolute value.
pub fn sym_eigenvalues_abs_desc(a: &Array2<f64>) -> Result<Vec<f64>> {
    let (vals, _) = a
        .clone()
        .eigh_into(UPLO::Lower)
        .map_err(|e| Error::Eigen(e.to_string()))?;
    let mut v: Vec<f64> = vals.to_vec();
    v.sort_by(|x, y| y.abs().total_cmp(&x.abs()).then_with(|| y.total_cmp(x)));
    Ok(v)
}

/// Full SVD returning (U, singular values, Vt).
pub fn svd(a: &Array2<f64>) -> Result<(Array2<f64>, Vec<f64>, Array2<f64>)> {
    let (u, s, vt) = a.svd(true, true).map_err(|e| Error::Eigen(e.to_string()))?;
    Ok((
        u.expect("requested U"),
        s.to_vec(),
        vt.expect("requested Vt"),
    ))
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    use ndarray_linalg::Cholesky;
    a.cholesky(UPLO::Lower)
        .map_err(|e| Error::Eigen(format!("not positive definite: {e}")))
}

/// Solve `L y = b` for lower-triangular `L` by forward substitution.
pub fn forward_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = b.len();
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut acc = b[i];
        for j in 0..i {
            acc -= l[[i, j]] * y[j];
        }
        y[i] = acc / l[[i, i]];
    }
    y
}

/// Log-determinant from a lower Cholesky factor.
pub fn chol_log_det(l: &Array2<f64>) -> f64 {
    (0..l.nrows()).map(|i| l[[i, i]].ln()).sum::<f64>() * 2.0
}

/// Squared Mahalanobis form `x^T a^{-1} x` via the Cholesky factor of `a`.
pub fn mahalanobis_sq(l: &Array2<f64>, x: &Array1<f64>) -> f64 {
    let y = forward_solve(l, x);
    y.iter().map(|v| v * v).sum()
}

/// Max-norm distance of `r^T r` from the identity.
pub fn orthogonality_defect(r: &Array2<f64>) -> f64 {
    let d = r.ncols();
    let gram = r.t().dot(r);
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[[i, j]] - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn eigen_ordering_and_signs() {
        // Adjacency of the triangle: eigenvalues 2, -1, -1.
        let a = arr2(&[[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]);
        let (vals, vecs) = sym_eigen_abs_desc(&a).unwrap();
        assert!((vals[0] - 2.0).abs() < 1e-12);
        assert!((vals[1] + 1.0).abs() < 1e-12);
        assert!((vals[2] + 1.0).abs() < 1e-12);
        // Leading eigenvector is the positive constant vector.
        let lead = vecs.column(0);
        for &x in lead {
            assert!((x - 1.0 / 3.0f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let a = arr2(&[
            [0.0, 1.0, 0.0, 2.0],
            [1.0, 0.0, 0.5, 0.0],
            [0.0, 0.5, 0.0, 1.0],
            [2.0, 0.0, 1.0, 0.0],
        ]);
        let (vals, vecs) = sym_eigen_abs_desc(&a).unwrap();
        let lambda = Array2::from_diag(&ndarray::Array1::from(vals.clone()));
        let back = vecs.dot(&lambda).dot(&vecs.t());
        for i in 0..4 {
            for j in 0..4 {
                assert!((back[[i, j]] - a[[i, j]]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn svd_orthogonal_factors() {
        let a = arr2(&[[3.0, 1.0], [1.0, 2.0], [0.0, 1.0]]);
        let (u, s, vt) = svd(&a).unwrap();
        assert_eq!(s.len(), 2);
        assert!(orthogonality_defect(&u) < 1e-10);
        assert!(orthogonality_defect(&vt) < 1e-10);
    }
}
