use faer::Mat;

use crate::dense;
use crate::error::{check_len, MhdError, Result};
use crate::fields::fft::{Fft2, Symbols};
use crate::fields::{DiffOps, Projector};
use crate::geometry::Grid;
use crate::linalg::{self, spmv, C64};
use crate::mhd_operators::LinearOperator;

/// The discrete solenoidal state space (pairs `(φ, ξ)` of projected fields)
/// with its trapezoid inner product.
///
/// On fully periodic grids states live in ambient coordinates and the
/// projection is the per-mode Fourier projector. On wall grids the space is
/// spanned by an explicit `W`-orthonormal basis of the fields satisfying the
/// discrete divergence and boundary constraints (no-slip for φ; zero normal
/// component and zero scalar curl for ξ).
#[derive(Debug, Clone)]
pub struct StateSpace {
    /// Nodes per component.
    pub n: usize,
    /// Ambient weights, length `4n`.
    pub w: Vec<f64>,
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Fourier { projector: Projector, sym: Symbols, fft: Fft2, grid: Grid },
    Basis { q: Mat<f64> },
}

const NULL_TOL: f64 = 1e-10;

impl StateSpace {
    pub fn new(ops: &DiffOps, projector: &Projector) -> Result<Self> {
        let g = &ops.grid;
        let n = g.len();
        let w: Vec<f64> = (0..4).flat_map(|_| ops.weights.iter().copied()).collect();
        if g.fully_periodic() {
            let inner = Inner::Fourier { projector: projector.clone(), sym: Symbols::new(g, ops.order), fft: Fft2::new(g.nx, g.ny), grid: g.clone() };
            return Ok(Self { n, w, inner });
        }
        let (ephi, exi) = wall_constraints(ops);
        let w2: Vec<f64> = ops.weights.iter().chain(&ops.weights).copied().collect();
        let qphi = weighted_null_space(&ephi, &w2)?;
        let qxi = weighted_null_space(&exi, &w2)?;
        let (a, b) = (qphi.ncols(), qxi.ncols());
        let q = Mat::from_fn(4 * n, a + b, |i, j| {
            if i < 2 * n && j < a {
                qphi[(i, j)]
            } else if i >= 2 * n && j >= a {
                qxi[(i - 2 * n, j - a)]
            } else {
                0.0
            }
        });
        Ok(Self { n, w, inner: Inner::Basis { q } })
    }

    pub fn is_fourier(&self) -> bool {
        matches!(self.inner, Inner::Fourier { .. })
    }

    pub fn dim(&self) -> usize {
        match &self.inner {
            Inner::Fourier { sym, grid, .. } => 2 * fourier_modes(sym, grid.nx).iter().map(|m| if m.1 { 1 } else { 2 }).sum::<usize>(),
            Inner::Basis { q } => q.ncols(),
        }
    }

    /// Orthogonal projection onto the space (in place, ambient coordinates).
    pub fn project(&self, x: &mut [f64]) -> Result<()> {
        check_len(4 * self.n, x.len())?;
        match &self.inner {
            Inner::Fourier { projector, .. } => {
                let h = 2 * self.n;
                projector.project_flat(&mut x[..h])?;
                projector.project_flat(&mut x[h..])
            }
            Inner::Basis { q } => {
                let c = self.coords(q, x);
                let y = q * &c;
                for (i, v) in x.iter_mut().enumerate() {
                    *v = y[(i, 0)];
                }
                Ok(())
            }
        }
    }

    fn coords(&self, q: &Mat<f64>, x: &[f64]) -> Mat<f64> {
        let wx = Mat::from_fn(x.len(), 1, |i, _| self.w[i] * x[i]);
        q.transpose() * &wx
    }

    /// `W`-orthonormal basis as dense columns of length `4n`.
    pub fn dense_basis(&self) -> Result<Mat<f64>> {
        match &self.inner {
            Inner::Basis { q } => Ok(q.clone()),
            Inner::Fourier { sym, grid, .. } => Ok(fourier_basis(grid, sym, &self.w)),
        }
    }

    /// `Π(Mx) + shift·x` for `x` in the space; equals `Ãx` for the generator
    /// and its adjoint because the space is invariant under `Π`.
    pub fn apply(&self, op: &LinearOperator, x: &[f64]) -> Result<Vec<f64>> {
        check_len(4 * self.n, x.len())?;
        check_len(op.n(), x.len())?;
        let mut y = spmv(&op.matrix, x);
        self.project(&mut y)?;
        if op.shift != 0.0 {
            linalg::axpy(op.shift, x, &mut y);
        }
        Ok(y)
    }

    /// Galerkin matrix `QᵀW(ΠÃ)Q` in the dense basis `Q`.
    pub fn galerkin(&self, op: &LinearOperator, q: &Mat<f64>) -> Result<Mat<f64>> {
        let m = q.ncols();
        let mut aq = Mat::<f64>::zeros(q.nrows(), m);
        for j in 0..m {
            let y = spmv(&op.matrix, &dense::col(q, j));
            for (i, v) in y.into_iter().enumerate() {
                aq[(i, j)] = v * self.w[i];
            }
        }
        let mut h = q.transpose() * &aq;
        for j in 0..m {
            h[(j, j)] += op.shift;
        }
        Ok(h)
    }

    pub fn wdot(&self, a: &[C64], b: &[C64]) -> C64 {
        linalg::wdot(&self.w, a, b)
    }

    pub fn wnorm<T: linalg::Scalar>(&self, a: &[T]) -> f64 {
        linalg::wnorm(&self.w, a)
    }

    /// Solver for `(sI − Ã) x = b` on the space. `diffusion = (ν, η)` sets
    /// the Fourier preconditioner on periodic grids.
    pub fn shifted_solver<'a>(&'a self, op: &'a LinearOperator, s: f64, diffusion: (f64, f64)) -> Result<ShiftedSolver<'a>> {
        let kind = match &self.inner {
            Inner::Fourier { sym, .. } => {
                let d = |c: f64| -> Vec<f64> {
                    sym.lap.iter().map(|&l| {
                        let v = s - op.shift - c * l;
                        if v.abs() > 1e-12 { 1.0 / v } else { 1.0 }
                    }).collect()
                };
                SolverKind::Gmres { inv_phi: d(diffusion.0), inv_xi: d(diffusion.1) }
            }
            Inner::Basis { q } => {
                let h = self.galerkin(op, q)?;
                let m = h.nrows();
                let a = Mat::from_fn(m, m, |i, j| if i == j { s - h[(i, j)] } else { -h[(i, j)] });
                SolverKind::Dense { lu: a.partial_piv_lu() }
            }
        };
        Ok(ShiftedSolver { space: self, op, s, kind })
    }
}

enum SolverKind {
    Gmres { inv_phi: Vec<f64>, inv_xi: Vec<f64> },
    Dense { lu: faer::linalg::solvers::PartialPivLu<f64> },
}

pub struct ShiftedSolver<'a> {
    space: &'a StateSpace,
    op: &'a LinearOperator,
    s: f64,
    kind: SolverKind,
}

pub const SHIFTED_RTOL: f64 = 1e-12;

impl ShiftedSolver<'_> {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        use faer::linalg::solvers::Solve;
        let sp = self.space;
        check_len(4 * sp.n, b.len())?;
        match (&self.kind, &sp.inner) {
            (SolverKind::Gmres { inv_phi, inv_xi }, Inner::Fourier { fft, .. }) => {
                let n = sp.n;
                let precond = |v: &[f64]| -> Vec<f64> {
                    let mut out = vec![0.0; v.len()];
                    for c in 0..4 {
                        let inv = if c < 2 { inv_phi } else { inv_xi };
                        let mut a: Vec<C64> = linalg::to_complex(&v[c * n..(c + 1) * n]);
                        fft.forward(&mut a);
                        for (z, d) in a.iter_mut().zip(inv) {
                            *z *= *d;
                        }
                        fft.inverse(&mut a);
                        for (o, z) in out[c * n..(c + 1) * n].iter_mut().zip(a) {
                            *o = z.re;
                        }
                    }
                    out
                };
                let apply = |x: &[f64]| -> Vec<f64> {
                    let ax = sp.apply(self.op, x).expect("shapes checked");
                    linalg::lincomb(self.s, x, -1.0, &ax)
                };
                let (x, _) = linalg::gmres(apply, precond, b, SHIFTED_RTOL, 80, 4000)?;
                Ok(x)
            }
            (SolverKind::Dense { lu }, Inner::Basis { q }) => {
                let c = sp.coords(q, b);
                let y = lu.solve(&c);
                let x = q * &y;
                Ok((0..x.nrows()).map(|i| x[(i, 0)]).collect())
            }
            _ => Err(MhdError::Numerical { message: "solver/space mismatch".into(), residual: f64::NAN }),
        }
    }
}

/// Constraint rows for φ (divergence, both components on walls) and for ξ
/// (divergence, normal component and scalar curl on walls), dense.
fn wall_constraints(ops: &DiffOps) -> (Mat<f64>, Mat<f64>) {
    let g = &ops.grid;
    let n = g.len();
    let div = ops.div_matrix();
    let bnodes = g.boundary_nodes();
    let mut phi_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut xi_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for r in 0..n {
        let row: Vec<(usize, f64)> = div.outer_view(r).map(|v| v.iter().map(|(j, &c)| (j, c)).collect()).unwrap_or_default();
        phi_rows.push(row.clone());
        xi_rows.push(row);
    }
    for &k in &bnodes {
        phi_rows.push(vec![(k, 1.0)]);
        phi_rows.push(vec![(n + k, 1.0)]);
        let (i, j) = g.ij(k);
        if g.on_x_wall(i) {
            xi_rows.push(vec![(k, 1.0)]);
        }
        if g.on_y_wall(j) {
            xi_rows.push(vec![(n + k, 1.0)]);
        }
        // scalar curl ∂x ξ2 − ∂y ξ1 at the wall node
        let mut row: Vec<(usize, f64)> = Vec::new();
        if let Some(v) = ops.dx.outer_view(k) {
            row.extend(v.iter().map(|(c, &a)| (n + c, a)));
        }
        if let Some(v) = ops.dy.outer_view(k) {
            row.extend(v.iter().map(|(c, &a)| (c, -a)));
        }
        xi_rows.push(row);
    }
    let dense = |rows: &[Vec<(usize, f64)>]| {
        let mut m = Mat::<f64>::zeros(rows.len(), 2 * n);
        for (r, row) in rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] += v;
            }
        }
        m
    };
    (dense(&phi_rows), dense(&xi_rows))
}

/// `W`-orthonormal basis of `{x : E x = 0}`: null space of `E W^{-1/2}`
/// mapped back by `W^{-1/2}`.
fn weighted_null_space(e: &Mat<f64>, w: &[f64]) -> Result<Mat<f64>> {
    let isw: Vec<f64> = w.iter().map(|v| 1.0 / v.sqrt()).collect();
    let scaled = Mat::from_fn(e.nrows(), e.ncols(), |i, j| e[(i, j)] * isw[j]);
    let z = dense::null_space(&scaled, NULL_TOL)?;
    if z.ncols() == 0 {
        return Err(MhdError::Resolution("constraint set leaves no admissible fields".into()));
    }
    Ok(Mat::from_fn(z.nrows(), z.ncols(), |i, j| z[(i, j)] * isw[i]))
}

/// Canonical non-null modes `(flat index, self-conjugate)` of a periodic grid.
fn fourier_modes(sym: &Symbols, nx: usize) -> Vec<(usize, bool)> {
    let n = sym.kx.len();
    let ny = n / nx;
    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let m = j * nx + i;
            let mc = ((ny - j) % ny) * nx + (nx - i) % nx;
            if m > mc || sym.is_null(m) {
                continue;
            }
            out.push((m, m == mc));
        }
    }
    out
}

/// Real Fourier basis of the solenoidal space: `cos θ·n̂`, `sin θ·n̂` with
/// `n̂ = (k̃y, −k̃x)/|k̃|` for each non-null mode pair, blocked for `(φ, ξ)`.
fn fourier_basis(grid: &Grid, sym: &Symbols, w: &[f64]) -> Mat<f64> {
    use std::f64::consts::PI;
    let n = grid.len();
    let (nx, ny) = (grid.nx, grid.ny);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (m, selfconj) in fourier_modes(sym, nx) {
        let (a, b) = (m % nx, m / nx);
        let k = sym.k2(m).sqrt();
        let (n1, n2) = (sym.ky[m] / k, -sym.kx[m] / k);
        let mut c = vec![0.0; 2 * n];
        let mut s = vec![0.0; 2 * n];
        for jj in 0..ny {
            for ii in 0..nx {
                let t = 2.0 * PI * (a as f64 * ii as f64 / nx as f64 + b as f64 * jj as f64 / ny as f64);
                let idx = grid.idx(ii, jj);
                c[idx] = t.cos() * n1;
                c[n + idx] = t.cos() * n2;
                s[idx] = t.sin() * n1;
                s[n + idx] = t.sin() * n2;
            }
        }
        cols.push(c);
        if !selfconj {
            cols.push(s);
        }
    }
    let w2 = &w[..2 * n];
    for col in cols.iter_mut() {
        let nrm = linalg::wnorm(w2, col);
        col.iter_mut().for_each(|v| *v /= nrm);
    }
    let mf = cols.len();
    Mat::from_fn(4 * n, 2 * mf, |i, j| {
        if j < mf {
            if i < 2 * n { cols[j][i] } else { 0.0 }
        } else if i >= 2 * n {
            cols[j - mf][i - 2 * n]
        } else {
            0.0
        }
    })
}
