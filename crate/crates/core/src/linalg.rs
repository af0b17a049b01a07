//! Small numeric kernels shared by every module: a real/complex scalar trait,
//! CSR products with real matrices, weighted inner products, CG and GMRES.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use sprs::{CsMat, TriMat};

use crate::error::{MhdError, Result};

pub type C64 = Complex64;
pub type SpMat = CsMat<f64>;

pub trait Scalar:
    Copy
    + Default
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Mul<f64, Output = Self>
    + 'static
{
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn abs2(self) -> f64;
    fn re(self) -> f64;
    fn to_complex(self) -> C64;
    /// Real types keep the real part.
    fn from_complex(c: C64) -> Self;
    fn is_finite(self) -> bool;
    fn zero() -> Self {
        Self::from_real(0.0)
    }
}

impl Scalar for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn to_complex(self) -> C64 {
        C64::new(self, 0.0)
    }
    fn from_complex(c: C64) -> Self {
        c.re
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for C64 {
    fn from_real(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn to_complex(self) -> C64 {
        self
    }
    fn from_complex(c: C64) -> Self {
        c
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// `y = A x` for a real CSR matrix and real or complex `x`.
pub fn spmv<T: Scalar>(a: &SpMat, x: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); a.rows()];
    spmv_into(a, x, &mut y);
    y
}

pub fn spmv_into<T: Scalar>(a: &SpMat, x: &[T], y: &mut [T]) {
    assert_eq!(a.cols(), x.len(), "spmv: dimension mismatch");
    assert!(a.is_csr());
    let indptr = a.indptr();
    let (idx, val) = (a.indices(), a.data());
    for (r, yr) in y.iter_mut().enumerate() {
        let mut acc = T::zero();
        for p in indptr.outer_inds_sz(r) {
            acc += x[idx[p]] * val[p];
        }
        *yr = acc;
    }
}

pub fn diag(v: &[f64]) -> SpMat {
    let mut t = TriMat::new((v.len(), v.len()));
    for (i, &x) in v.iter().enumerate() {
        if x != 0.0 {
            t.add_triplet(i, i, x);
        }
    }
    t.to_csr()
}

pub fn identity(n: usize) -> SpMat {
    CsMat::eye(n)
}

pub fn zeros(rows: usize, cols: usize) -> SpMat {
    CsMat::zero((rows, cols))
}

pub fn transpose(a: &SpMat) -> SpMat {
    a.transpose_view().to_csr()
}

pub fn scale(a: &SpMat, c: f64) -> SpMat {
    a.map(|v| v * c)
}

pub fn add(a: &SpMat, b: &SpMat) -> SpMat {
    (a + b).to_csr()
}

pub fn sub(a: &SpMat, b: &SpMat) -> SpMat {
    (a - b).to_csr()
}

pub fn mul(a: &SpMat, b: &SpMat) -> SpMat {
    (a * b).to_csr()
}

/// Assemble a block matrix; `None` entries are zero blocks.
pub fn block(rows: &[Vec<Option<&SpMat>>]) -> SpMat {
    let row_sizes: Vec<usize> = rows
        .iter()
        .map(|r| r.iter().flatten().map(|m| m.rows()).next().expect("block row has no matrix"))
        .collect();
    let ncols = rows[0].len();
    let col_sizes: Vec<usize> = (0..ncols)
        .map(|c| rows.iter().filter_map(|r| r[c]).map(|m| m.cols()).next().expect("block column has no matrix"))
        .collect();
    let (nr, nc) = (row_sizes.iter().sum(), col_sizes.iter().sum());
    let mut t = TriMat::new((nr, nc));
    let mut r0 = 0;
    for (bi, r) in rows.iter().enumerate() {
        let mut c0 = 0;
        for (bj, m) in r.iter().enumerate() {
            if let Some(m) = m {
                assert_eq!((m.rows(), m.cols()), (row_sizes[bi], col_sizes[bj]), "block shape mismatch");
                for (v, (i, j)) in m.iter() {
                    t.add_triplet(r0 + i, c0 + j, *v);
                }
            }
            c0 += col_sizes[bj];
        }
        r0 += row_sizes[bi];
    }
    t.to_csr()
}

/// Weighted inner product `Σ w_i conj(a_i) b_i`.
pub fn wdot<T: Scalar>(w: &[f64], a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for i in 0..a.len() {
        acc += a[i].conj() * b[i] * w[i];
    }
    acc
}

pub fn wnorm<T: Scalar>(w: &[f64], a: &[T]) -> f64 {
    a.iter().zip(w).map(|(x, wi)| x.abs2() * wi).sum::<f64>().sqrt()
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for i in 0..a.len() {
        acc += a[i].conj() * b[i];
    }
    acc
}

pub fn norm<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.abs2()).sum::<f64>().sqrt()
}

pub fn max_abs<T: Scalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.abs2().sqrt()).fold(0.0, f64::max)
}

pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn lincomb<T: Scalar>(a: f64, x: &[T], b: f64, y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(&xi, &yi)| xi * a + yi * b).collect()
}

pub fn to_complex(x: &[f64]) -> Vec<C64> {
    x.iter().map(|&v| C64::new(v, 0.0)).collect()
}

/// Conjugate gradients for a symmetric positive semidefinite operator with a
/// consistent right-hand side. Returns the solution and the final relative
/// residual.
pub fn cg<F>(apply: F, b: &[f64], rtol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    cg_scaled(apply, b, rtol, 0.0, max_iter)
}

/// CG with residuals measured against `max(|b|, scale)`, for right-hand sides
/// that may be tiny compared to the data they came from.
pub fn cg_scaled<F>(apply: F, b: &[f64], rtol: f64, scale: f64, max_iter: usize) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b).max(scale);
    let mut x = vec![0.0; n];
    if norm(b) == 0.0 {
        return Ok((x, 0.0));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    // singular but consistent systems stall at rounding level and then drift
    // along the null space, so keep the best iterate and stop on stagnation
    let mut best = (x.clone(), rr);
    let mut stale = 0;
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= rtol * bnorm {
            return Ok((x, rr_new.sqrt() / bnorm));
        }
        if rr_new < best.1 {
            best = (x.clone(), rr_new);
            stale = 0;
        } else {
            stale += 1;
            if stale > 50 {
                break;
            }
        }
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }
    let x = best.0;
    // true residual decides
    let ax = apply(&x);
    let res = norm(&lincomb(1.0, b, -1.0, &ax)) / bnorm;
    if res <= rtol * 10.0 {
        Ok((x, res))
    } else {
        Err(MhdError::Numerical { message: "conjugate gradients did not converge".into(), residual: res })
    }
}

/// Restarted, right-preconditioned GMRES (real arithmetic).
pub fn gmres<A, M>(apply: A, precond: M, b: &[f64], rtol: f64, restart: usize, max_iter: usize) -> Result<(Vec<f64>, f64)>
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0.0));
    }
    let mut total = 0;
    let mut rel = 1.0;
    while total < max_iter {
        let ax = apply(&x);
        let r = lincomb(1.0, b, -1.0, &ax);
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= rtol {
            return Ok((x, rel));
        }
        let m = restart.min(max_iter - total).max(1);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            for _pass in 0..2 {
                for i in 0..=k {
                    let hik = dot(&v[i], &w);
                    h[i][k] += hik;
                    axpy(-hik, &v[i], &mut w);
                }
            }
            h[k + 1][k] = norm(&w);
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            let hk1 = norm(&w);
            if (g[k + 1].abs() / bnorm) <= rtol * 0.5 || hk1 == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hk1).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &z[j], &mut x);
        }
        if k_used == 0 {
            break;
        }
    }
    let ax = apply(&x);
    let res = norm(&lincomb(1.0, b, -1.0, &ax)) / bnorm;
    if res <= rtol * 10.0 {
        Ok((x, res))
    } else {
        Err(MhdError::Numerical { message: format!("GMRES stalled after {total} iterations (previous {rel:.2e})"), residual: res })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cg_and_gmres_solve_small_systems() {
        let n = 30;
        let mut t = TriMat::new((n, n));
        for i in 0..n {
            t.add_triplet(i, i, 4.0);
            if i > 0 {
                t.add_triplet(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.add_triplet(i, i + 1, -1.5);
            }
        }
        let a: SpMat = t.to_csr();
        let xs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = spmv(&a, &xs);
        let (x, _) = gmres(|v| spmv(&a, v), |v| v.to_vec(), &b, 1e-12, 10, 500).unwrap();
        assert!(norm(&lincomb(1.0, &x, -1.0, &xs)) < 1e-9);
        let s = add(&a, &transpose(&a));
        let b2 = spmv(&s, &xs);
        let (x2, _) = cg(|v| spmv(&s, v), &b2, 1e-13, 500).unwrap();
        assert!(norm(&lincomb(1.0, &x2, -1.0, &xs)) < 1e-9);
    }

    #[test]
    fn block_assembly() {
        let i2 = identity(2);
        let d = diag(&[1.0, 2.0]);
        let b = block(&[vec![Some(&i2), None], vec![Some(&d), Some(&i2)]]);
        assert_eq!(b.rows(), 4);
        let y = spmv(&b, &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(y, vec![1.0, 1.0, 1.0, 2.0]);
    }
}
