use serde::{Deserialize, Serialize};
use sprs::TriMat;

use super::{ScalarField, VectorField2};
use crate::error::{check_len, MhdError, Result};
use crate::geometry::{BcKind, Grid};
use crate::linalg::{self, spmv, Scalar, SpMat};

/// Accuracy order of the centered stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    #[default]
    Second,
    /// Only on fully periodic grids.
    Fourth,
}

impl Order {
    /// Nodes touched on either side by a first or second derivative.
    pub fn reach(self) -> usize {
        match self {
            Order::Second => 1,
            Order::Fourth => 2,
        }
    }

    pub fn exponent(self) -> f64 {
        match self {
            Order::Second => 2.0,
            Order::Fourth => 4.0,
        }
    }
}

type Row = Vec<(usize, f64)>;

fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

fn first_1d(nodes: usize, h: f64, bc: BcKind, order: Order) -> Vec<Row> {
    (0..nodes)
        .map(|i| match bc {
            BcKind::Periodic => {
                let ii = i as isize;
                let w = |d: isize| wrap(ii + d, nodes);
                match order {
                    Order::Second => vec![(w(1), 0.5 / h), (w(-1), -0.5 / h)],
                    Order::Fourth => {
                        let c = 1.0 / (12.0 * h);
                        vec![(w(2), -c), (w(1), 8.0 * c), (w(-1), -8.0 * c), (w(-2), c)]
                    }
                }
            }
            BcKind::Wall => {
                let c = 0.5 / h;
                if i == 0 {
                    vec![(0, -3.0 * c), (1, 4.0 * c), (2, -c)]
                } else if i == nodes - 1 {
                    vec![(i, 3.0 * c), (i - 1, -4.0 * c), (i - 2, c)]
                } else {
                    vec![(i + 1, c), (i - 1, -c)]
                }
            }
        })
        .collect()
}

fn second_1d(nodes: usize, h: f64, bc: BcKind, order: Order) -> Vec<Row> {
    let c = 1.0 / (h * h);
    (0..nodes)
        .map(|i| match bc {
            BcKind::Periodic => {
                let ii = i as isize;
                let w = |d: isize| wrap(ii + d, nodes);
                match order {
                    Order::Second => vec![(w(1), c), (i, -2.0 * c), (w(-1), c)],
                    Order::Fourth => {
                        let c = c / 12.0;
                        vec![(w(2), -c), (w(1), 16.0 * c), (i, -30.0 * c), (w(-1), 16.0 * c), (w(-2), -c)]
                    }
                }
            }
            BcKind::Wall => {
                if i == 0 {
                    vec![(0, 2.0 * c), (1, -5.0 * c), (2, 4.0 * c), (3, -c)]
                } else if i == nodes - 1 {
                    vec![(i, 2.0 * c), (i - 1, -5.0 * c), (i - 2, 4.0 * c), (i - 3, -c)]
                } else {
                    vec![(i + 1, c), (i, -2.0 * c), (i - 1, c)]
                }
            }
        })
        .collect()
}

fn lift_x(grid: &Grid, rows: &[Row]) -> SpMat {
    let n = grid.len();
    let mut t = TriMat::new((n, n));
    for j in 0..grid.my {
        for (i, row) in rows.iter().enumerate() {
            for &(ii, c) in row {
                t.add_triplet(grid.idx(i, j), grid.idx(ii, j), c);
            }
        }
    }
    t.to_csr()
}

fn lift_y(grid: &Grid, rows: &[Row]) -> SpMat {
    let n = grid.len();
    let mut t = TriMat::new((n, n));
    for (j, row) in rows.iter().enumerate() {
        for i in 0..grid.mx {
            for &(jj, c) in row {
                t.add_triplet(grid.idx(i, j), grid.idx(i, jj), c);
            }
        }
    }
    t.to_csr()
}

/// Finite-difference operators on a grid, stored as sparse matrices so the
/// same stencils serve both field evaluation and operator assembly.
#[derive(Debug, Clone)]
pub struct DiffOps {
    pub grid: Grid,
    pub order: Order,
    pub dx: SpMat,
    pub dy: SpMat,
    pub dxx: SpMat,
    pub dyy: SpMat,
    /// Compact Laplacian `dxx + dyy`.
    pub lap: SpMat,
    /// Trapezoid weights per node.
    pub weights: Vec<f64>,
}

impl DiffOps {
    pub fn new(grid: &Grid, order: Order) -> Result<Self> {
        if order == Order::Fourth && !grid.fully_periodic() {
            return Err(MhdError::Config("fourth-order stencils require a fully periodic grid".into()));
        }
        let dx = lift_x(grid, &first_1d(grid.mx, grid.hx, grid.bc_x, order));
        let dy = lift_y(grid, &first_1d(grid.my, grid.hy, grid.bc_y, order));
        let dxx = lift_x(grid, &second_1d(grid.mx, grid.hx, grid.bc_x, order));
        let dyy = lift_y(grid, &second_1d(grid.my, grid.hy, grid.bc_y, order));
        let lap = linalg::add(&dxx, &dyy);
        Ok(Self { grid: grid.clone(), order, dx, dy, dxx, dyy, lap, weights: grid.weights() })
    }

    /// Fourth order on fully periodic grids, second order otherwise.
    pub fn default_for(grid: &Grid) -> Result<Self> {
        let order = if grid.fully_periodic() { Order::Fourth } else { Order::Second };
        Self::new(grid, order)
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    fn check<T>(&self, v: &[T]) -> Result<()> {
        check_len(self.n(), v.len())
    }

    pub fn gradient<T: Scalar>(&self, s: &ScalarField<T>) -> Result<VectorField2<T>> {
        self.check(&s.values)?;
        Ok(VectorField2::new(spmv(&self.dx, &s.values), spmv(&self.dy, &s.values)))
    }

    pub fn divergence<T: Scalar>(&self, v: &VectorField2<T>) -> Result<ScalarField<T>> {
        self.check(&v.u1)?;
        self.check(&v.u2)?;
        let mut d = spmv(&self.dx, &v.u1);
        linalg::axpy(T::from_real(1.0), &spmv(&self.dy, &v.u2), &mut d);
        Ok(ScalarField::new(d))
    }

    /// Scalar curl `∂x v2 − ∂y v1`.
    pub fn curl2d<T: Scalar>(&self, v: &VectorField2<T>) -> Result<ScalarField<T>> {
        self.check(&v.u1)?;
        self.check(&v.u2)?;
        let mut c = spmv(&self.dx, &v.u2);
        linalg::axpy(T::from_real(-1.0), &spmv(&self.dy, &v.u1), &mut c);
        Ok(ScalarField::new(c))
    }

    /// Vector curl of a scalar (streamfunction): `(∂y s, −∂x s)`.
    pub fn curl_scalar<T: Scalar>(&self, s: &ScalarField<T>) -> Result<VectorField2<T>> {
        self.check(&s.values)?;
        let u2: Vec<T> = spmv(&self.dx, &s.values).into_iter().map(|x| -x).collect();
        Ok(VectorField2::new(spmv(&self.dy, &s.values), u2))
    }

    pub fn laplacian<T: Scalar>(&self, s: &ScalarField<T>) -> Result<ScalarField<T>> {
        self.check(&s.values)?;
        Ok(ScalarField::new(spmv(&self.lap, &s.values)))
    }

    pub fn laplacian_vec<T: Scalar>(&self, v: &VectorField2<T>) -> Result<VectorField2<T>> {
        self.check(&v.u1)?;
        self.check(&v.u2)?;
        Ok(VectorField2 { u1: spmv(&self.lap, &v.u1), u2: spmv(&self.lap, &v.u2), bc_tag: v.bc_tag })
    }

    /// Scalar fields as a grid-shaped column (for composing sparse operators).
    pub fn vector_lap(&self) -> SpMat {
        linalg::block(&[vec![Some(&self.lap), None], vec![None, Some(&self.lap)]])
    }

    /// Divergence as an `n x 2n` matrix.
    pub fn div_matrix(&self) -> SpMat {
        linalg::block(&[vec![Some(&self.dx), Some(&self.dy)]])
    }

    /// Streamfunction curl `ψ ↦ (Dy ψ, −Dx ψ)` as a `2n x n` matrix.
    pub fn curl_matrix(&self) -> SpMat {
        let mdx = linalg::scale(&self.dx, -1.0);
        linalg::block(&[vec![Some(&self.dy)], vec![Some(&mdx)]])
    }

    /// Gradient adjoint to `-div` in the trapezoid inner products; equals the
    /// stencil gradient on periodic grids.
    pub fn pressure_gradient<T: Scalar>(&self, p: &ScalarField<T>) -> Result<VectorField2<T>> {
        self.check(&p.values)?;
        if self.grid.fully_periodic() {
            return self.gradient(p);
        }
        let wp: Vec<T> = p.values.iter().zip(&self.weights).map(|(&v, &w)| v * w).collect();
        let dxt = linalg::transpose(&self.dx);
        let dyt = linalg::transpose(&self.dy);
        let g1 = spmv(&dxt, &wp).into_iter().zip(&self.weights).map(|(v, &w)| -v * (1.0 / w)).collect();
        let g2 = spmv(&dyt, &wp).into_iter().zip(&self.weights).map(|(v, &w)| -v * (1.0 / w)).collect();
        Ok(VectorField2::new(g1, g2))
    }
}
