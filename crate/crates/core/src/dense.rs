//! Dense kernels on top of faer: eigendecomposition, SVD-based ranks and
//! null spaces, weighted orthonormalization.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{MhdError, Result};
use crate::linalg::C64;

fn evd_err<E: std::fmt::Debug>(e: E) -> MhdError {
    MhdError::Numerical { message: format!("dense decomposition failed: {e:?}"), residual: f64::NAN }
}

/// Eigenvalues and right eigenvectors (columns) of a real square matrix.
pub fn eig(a: &Mat<f64>) -> Result<(Vec<C64>, Mat<C64>)> {
    let e = a.eigen().map_err(evd_err)?;
    let s = e.S();
    let vals = (0..a.nrows()).map(|i| s[i]).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn eigenvalues(a: &Mat<f64>) -> Result<Vec<C64>> {
    a.eigenvalues().map_err(evd_err)
}

pub fn singular_values(a: &Mat<f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values().map_err(evd_err)
}

pub fn singular_values_c(a: &Mat<C64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values().map_err(evd_err)
}

/// Number of singular values above `rel · σ_max`.
pub fn rank(sv: &[f64], rel: f64) -> usize {
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * top).count()
}

/// Orthonormal basis of the null space of `a` (columns), with singular
/// values below `rel · σ_max` counted as zero.
pub fn null_space(a: &Mat<f64>, rel: f64) -> Result<Mat<f64>> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Ok(Mat::identity(n, n));
    }
    let svd = a.svd().map_err(evd_err)?;
    let s = svd.S();
    let k = s.dim();
    let sv: Vec<f64> = (0..k).map(|i| s[i]).collect();
    let r = rank(&sv, rel);
    let v = svd.V();
    Ok(Mat::from_fn(n, n - r, |i, j| v[(i, r + j)]))
}

/// Columns spanning the same space as `v`, orthonormal in `Σ w |x|²`, rank
/// revealed with threshold `rel`.
pub fn w_orthonormalize(v: &Mat<C64>, w: &[f64], rel: f64) -> Result<Mat<C64>> {
    let (m, k) = (v.nrows(), v.ncols());
    if k == 0 {
        return Ok(Mat::zeros(m, 0));
    }
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let a = Mat::from_fn(m, k, |i, j| v[(i, j)] * sw[i]);
    let svd = a.thin_svd().map_err(evd_err)?;
    let s = svd.S();
    let sv: Vec<f64> = (0..s.dim()).map(|i| s[i].re).collect();
    let r = rank(&sv, rel);
    let u = svd.U();
    Ok(Mat::from_fn(m, r, |i, j| u[(i, j)] * (1.0 / sw[i])))
}

/// Real counterpart of [`w_orthonormalize`].
pub fn w_orthonormalize_real(v: &Mat<f64>, w: &[f64], rel: f64) -> Result<Mat<f64>> {
    let (m, k) = (v.nrows(), v.ncols());
    if k == 0 {
        return Ok(Mat::zeros(m, 0));
    }
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let a = Mat::from_fn(m, k, |i, j| v[(i, j)] * sw[i]);
    let svd = a.thin_svd().map_err(evd_err)?;
    let s = svd.S();
    let sv: Vec<f64> = (0..s.dim()).map(|i| s[i]).collect();
    let r = rank(&sv, rel);
    let u = svd.U();
    Ok(Mat::from_fn(m, r, |i, j| u[(i, j)] / sw[i]))
}

/// Square LU solve `a x = b`.
pub fn solve(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    a.partial_piv_lu().solve(b)
}

/// 2-norm condition number from singular values (infinite when singular).
pub fn condition(a: &Mat<f64>) -> Result<f64> {
    let sv = singular_values(a)?;
    if sv.is_empty() {
        return Ok(1.0);
    }
    let (mx, mn) = (sv[0], sv[sv.len() - 1]);
    Ok(if mn == 0.0 { f64::INFINITY } else { mx / mn })
}

pub fn col(a: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn col_c(a: &Mat<C64>, j: usize) -> Vec<C64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn from_cols(rows: usize, cols: &[Vec<f64>]) -> Mat<f64> {
    Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

pub fn from_cols_c(rows: usize, cols: &[Vec<C64>]) -> Mat<C64> {
    Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
}
