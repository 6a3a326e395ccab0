//! Thin wrappers over the dense factorizations used throughout the crate.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Thin SVD `m = U diag(s) Vᵀ`, singular values nonincreasing.
pub(crate) fn thin_svd(m: &Mat<f64>) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok((
            Mat::zeros(m.nrows(), 0),
            Vec::new(),
            Mat::zeros(m.ncols(), 0),
        ));
    }
    let svd = m
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("svd did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((svd.U().to_owned(), values, svd.V().to_owned()))
}

/// Symmetric eigendecomposition, eigenvalues ascending.
pub(crate) fn sym_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver did not converge: {e:?}")))?;
    let s = evd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

/// General (nonsymmetric) eigendecomposition. Returns the eigenvalues as
/// `(re, im)` pairs and the real and imaginary parts of the eigenvectors.
pub(crate) fn eigen(m: &Mat<f64>) -> Result<(Vec<(f64, f64)>, Mat<f64>, Mat<f64>)> {
    let evd = m
        .eigen()
        .map_err(|e| Error::Numerical(format!("eigensolver did not converge: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..s.nrows()).map(|i| (s[i].re, s[i].im)).collect();
    let re = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)].re);
    let im = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)].im);
    Ok((values, re, im))
}

/// Solve `a x = b` for square `a` by partially pivoted LU.
pub(crate) fn lu_solve(a: &Mat<f64>, b: &[f64]) -> Vec<f64> {
    use faer::linalg::solvers::Solve;
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = a.partial_piv_lu().solve(&rhs);
    (0..b.len()).map(|i| x[(i, 0)]).collect()
}

pub(crate) fn matvec(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.ncols(), x.len());
    let mut y = vec![0.0; m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        let col = m.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

/// `mᵀ x`.
pub(crate) fn matvec_t(m: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.nrows(), x.len());
    (0..m.ncols())
        .map(|j| {
            let col = m.col(j);
            let mut acc = 0.0;
            for (i, &xi) in x.iter().enumerate() {
                acc += col[i] * xi;
            }
            acc
        })
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
