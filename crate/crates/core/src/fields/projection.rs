use sprs::TriMat;

use super::fft::{Fft2, Symbols};
use super::{DiffOps, VectorField2};
use crate::error::{check_len, MhdError, Result};
use crate::geometry::Grid;
use crate::linalg::{self, spmv, Scalar, SpMat, C64};

pub const CG_RTOL: f64 = 1e-13;

/// Discrete Helmholtz projection onto divergence-free fields with zero normal
/// trace, orthogonal in the trapezoid inner product.
#[derive(Debug, Clone)]
pub enum Projector {
    /// Exact per-mode projection on fully periodic grids.
    Fourier { fft: Fft2, sym: Symbols },
    /// `v − W⁻¹Eᵀ(EW⁻¹Eᵀ)⁺Ev` with constraints `E = [div; normal trace]`.
    Constrained { e: SpMat, et: SpMat, winv: Vec<f64> },
}

impl Projector {
    pub fn new(ops: &DiffOps) -> Self {
        let g = &ops.grid;
        if g.fully_periodic() {
            return Projector::Fourier { fft: Fft2::new(g.nx, g.ny), sym: Symbols::new(g, ops.order) };
        }
        let n = g.len();
        let div = ops.div_matrix();
        let normals = normal_trace_rows(g);
        let e = linalg::block(&[vec![Some(&div)], vec![Some(&normals)]]);
        let et = linalg::transpose(&e);
        let winv: Vec<f64> = ops.weights.iter().chain(&ops.weights).map(|w| 1.0 / w).collect();
        debug_assert_eq!(winv.len(), 2 * n);
        Projector::Constrained { e, et, winv }
    }

    pub fn project<T: Scalar>(&self, v: &VectorField2<T>) -> Result<VectorField2<T>> {
        let mut flat = v.flat();
        self.project_flat(&mut flat)?;
        let mut out = VectorField2::from_flat(&flat, v.bc_tag)?;
        out.bc_tag = v.bc_tag;
        Ok(out)
    }

    /// In-place projection of `[u1, u2]`.
    pub fn project_flat<T: Scalar>(&self, v: &mut [T]) -> Result<()> {
        match self {
            Projector::Fourier { fft, sym } => {
                let n = sym.kx.len();
                check_len(2 * n, v.len())?;
                let mut a: Vec<C64> = v[..n].iter().map(|x| x.to_complex()).collect();
                let mut b: Vec<C64> = v[n..].iter().map(|x| x.to_complex()).collect();
                fft.forward(&mut a);
                fft.forward(&mut b);
                for m in 0..n {
                    if sym.is_null(m) {
                        a[m] = C64::new(0.0, 0.0);
                        b[m] = C64::new(0.0, 0.0);
                        continue;
                    }
                    let k = sym.k2(m).sqrt();
                    let (n1, n2) = (sym.ky[m] / k, -sym.kx[m] / k);
                    let c = a[m] * n1 + b[m] * n2;
                    a[m] = c * n1;
                    b[m] = c * n2;
                }
                fft.inverse(&mut a);
                fft.inverse(&mut b);
                for (dst, src) in v.iter_mut().zip(a.into_iter().chain(b)) {
                    *dst = T::from_complex(src);
                }
                Ok(())
            }
            Projector::Constrained { e, et, winv } => {
                check_len(winv.len(), v.len())?;
                let parts: Vec<Vec<f64>> = if is_complex::<T>() {
                    let c: Vec<C64> = v.iter().map(|x| x.to_complex()).collect();
                    vec![c.iter().map(|z| z.re).collect(), c.iter().map(|z| z.im).collect()]
                } else {
                    vec![v.iter().map(|x| x.re()).collect()]
                };
                let mut out = Vec::with_capacity(parts.len());
                for p in parts {
                    out.push(constrained_project(e, et, winv, &p)?);
                }
                for (k, dst) in v.iter_mut().enumerate() {
                    let z = if out.len() == 2 { C64::new(out[0][k], out[1][k]) } else { C64::new(out[0][k], 0.0) };
                    *dst = T::from_complex(z);
                }
                Ok(())
            }
        }
    }
}

fn is_complex<T: Scalar>() -> bool {
    T::from_complex(C64::new(0.0, 1.0)).abs2() > 0.0
}

/// Rows selecting the normal component at every wall node (`2n` columns).
pub fn normal_trace_rows(g: &Grid) -> SpMat {
    let n = g.len();
    let mut rows = Vec::new();
    for k in g.boundary_nodes() {
        let (i, j) = g.ij(k);
        if g.on_x_wall(i) {
            rows.push(k);
        }
        if g.on_y_wall(j) {
            rows.push(n + k);
        }
    }
    let mut t = TriMat::new((rows.len(), 2 * n));
    for (r, &c) in rows.iter().enumerate() {
        t.add_triplet(r, c, 1.0);
    }
    t.to_csr()
}

fn constrained_project(e: &SpMat, et: &SpMat, winv: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let rhs = spmv(e, v);
    let apply = |y: &[f64]| {
        let t: Vec<f64> = spmv(et, y).iter().zip(winv).map(|(a, w)| a * w).collect();
        spmv(e, &t)
    };
    // E has a small left null space, so E v can carry a rounding-level
    // inconsistent part; measure against the size of v instead
    let scale = linalg::norm(v) * linalg::max_abs(&e.data().iter().map(|a| a.abs()).collect::<Vec<_>>());
    let (y, _) = linalg::cg_scaled(apply, &rhs, CG_RTOL, scale, 20 * e.rows())?;
    let corr = spmv(et, &y);
    Ok(v.iter().zip(corr.iter().zip(winv)).map(|(a, (c, w))| a - c * w).collect())
}

/// Solver for `Δp = r` with `Δ = div ∘ G`, `G` the gradient adjoint to `−div`;
/// zero-mean gauge where constants are in the kernel.
#[derive(Debug, Clone)]
pub enum PoissonSolver {
    Fourier { fft: Fft2, sym: Symbols },
    Cg { d: SpMat, dt: SpMat, wv_inv: Vec<f64>, ws: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub p: Vec<f64>,
    /// `‖Δp − r‖ / ‖r‖`.
    pub residual: f64,
}

impl PoissonSolver {
    pub fn new(ops: &DiffOps) -> Self {
        let g = &ops.grid;
        if g.fully_periodic() {
            return PoissonSolver::Fourier { fft: Fft2::new(g.nx, g.ny), sym: Symbols::new(g, ops.order) };
        }
        let d = ops.div_matrix();
        let dt = linalg::transpose(&d);
        let wv_inv = ops.weights.iter().chain(&ops.weights).map(|w| 1.0 / w).collect();
        PoissonSolver::Cg { d, dt, wv_inv, ws: ops.weights.clone() }
    }

    /// `Δp = div(G p)`.
    pub fn apply(&self, ops: &DiffOps, p: &[f64]) -> Vec<f64> {
        let g = ops.pressure_gradient(&super::ScalarField::new(p.to_vec())).expect("length checked by caller");
        ops.divergence(&g).expect("same grid").values
    }

    pub fn solve(&self, ops: &DiffOps, rhs: &[f64]) -> Result<PoissonSolution> {
        check_len(ops.n(), rhs.len())?;
        let p = match self {
            PoissonSolver::Fourier { fft, sym } => {
                let mut a: Vec<C64> = linalg::to_complex(rhs);
                fft.forward(&mut a);
                for (m, am) in a.iter_mut().enumerate() {
                    if sym.is_null(m) {
                        *am = C64::new(0.0, 0.0);
                    } else {
                        *am /= -sym.k2(m);
                    }
                }
                fft.inverse(&mut a);
                a.into_iter().map(|z| z.re).collect::<Vec<f64>>()
            }
            PoissonSolver::Cg { d, dt, wv_inv, ws } => {
                // −D W_v⁻¹ Dᵀ W_s p = r; solve for z = W_s p
                let neg: Vec<f64> = rhs.iter().map(|r| -r).collect();
                let apply = |z: &[f64]| {
                    let t: Vec<f64> = spmv(dt, z).iter().zip(wv_inv).map(|(a, w)| a * w).collect();
                    spmv(d, &t)
                };
                let (z, _) = linalg::cg(apply, &neg, CG_RTOL, 20 * ws.len())?;
                let mut p: Vec<f64> = z.iter().zip(ws).map(|(a, w)| a / w).collect();
                // gauge: remove the weighted mean when constants lie in the kernel
                let ones = vec![1.0; ws.len()];
                if linalg::max_abs(&self.apply(ops, &ones)) < 1e-10 {
                    let area: f64 = ws.iter().sum();
                    let mean = p.iter().zip(ws).map(|(a, w)| a * w).sum::<f64>() / area;
                    p.iter_mut().for_each(|x| *x -= mean);
                }
                p
            }
        };
        let lp = self.apply(ops, &p);
        let rn = linalg::norm(rhs);
        let residual = if rn == 0.0 { linalg::norm(&lp) } else { linalg::norm(&linalg::lincomb(1.0, &lp, -1.0, rhs)) / rn };
        if residual > 1e-10 {
            return Err(MhdError::Numerical { message: "Poisson solve inconsistent or unconverged".into(), residual });
        }
        Ok(PoissonSolution { p, residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{DiffOps, Order, ScalarField};
    use crate::geometry::{BcKind, DomainSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(n: usize, rng: &mut ChaCha8Rng) -> VectorField2<f64> {
        VectorField2::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    fn rel(a: &VectorField2<f64>, b: &VectorField2<f64>) -> f64 {
        linalg::norm(&a.sub(b).flat()) / linalg::norm(&b.flat()).max(1e-300)
    }

    #[test]
    fn periodic_projection_properties() {
        let g = Grid::periodic_box(2.0 * PI, 32).unwrap();
        let ops = DiffOps::new(&g, Order::Fourth).unwrap();
        let p = Projector::new(&ops);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let v = random_field(g.len(), &mut rng);
            let pv = p.project(&v).unwrap();
            let ppv = p.project(&pv).unwrap();
            assert!(rel(&ppv, &pv) < 1e-12);
            let d = ops.divergence(&pv).unwrap();
            assert!(linalg::max_abs(&d.values) < 1e-10);
        }
        let s = ScalarField::new(g.sample(|x, y| (x + y).sin() + (2.0 * x).cos() * y.sin()));
        let gs = ops.gradient(&s).unwrap();
        let pg = p.project(&gs).unwrap();
        assert!(linalg::norm(&pg.flat()) < 1e-12 * linalg::norm(&gs.flat()));
        let v = VectorField2::new(g.sample(|x, y| x.sin() * y.cos()), g.sample(|x, y| -x.cos() * y.sin()));
        // analytic div-free field is fixed up to its O(h^4) discrete divergence
        assert!(rel(&p.project(&v).unwrap(), &v) < 1e-4);
    }

    #[test]
    fn wall_projection_properties() {
        let g = Grid::new(&DomainSpec { lx: 1.0, ly: 1.0, nx: 12, ny: 12, bc_x: BcKind::Wall, bc_y: BcKind::Periodic }).unwrap();
        let ops = DiffOps::new(&g, Order::Second).unwrap();
        let p = Projector::new(&ops);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_field(g.len(), &mut rng);
        let pv = p.project(&v).unwrap();
        assert!(rel(&p.project(&pv).unwrap(), &pv) < 1e-10);
        let d = ops.divergence(&pv).unwrap();
        assert!(linalg::max_abs(&d.values) < 1e-9);
        for k in g.boundary_nodes() {
            assert!(pv.u1[k].abs() < 1e-10);
        }
        // adjoint-consistent gradients are annihilated
        let s = ScalarField::new(g.sample(|x, y| (3.0 * x).cos() + (2.0 * PI * y).sin()));
        let gs = ops.pressure_gradient(&s).unwrap();
        assert!(linalg::norm(&p.project(&gs).unwrap().flat()) < 1e-9 * linalg::norm(&gs.flat()));
    }

    #[test]
    fn poisson_periodic_and_wall() {
        let g = Grid::periodic_box(2.0 * PI, 32).unwrap();
        let ops = DiffOps::new(&g, Order::Second).unwrap();
        let solver = PoissonSolver::new(&ops);
        let v = VectorField2::new(g.sample(|x, y| (x + y).sin()), g.sample(|x, _| x.cos()));
        let r = ops.divergence(&v).unwrap().values;
        let sol = solver.solve(&ops, &r).unwrap();
        assert!(sol.residual < 1e-12);
        assert!(sol.p.iter().sum::<f64>().abs() < 1e-10);

        let gw = Grid::new(&DomainSpec { lx: 1.0, ly: 1.0, nx: 10, ny: 10, bc_x: BcKind::Wall, bc_y: BcKind::Wall }).unwrap();
        let ow = DiffOps::new(&gw, Order::Second).unwrap();
        let sw = PoissonSolver::new(&ow);
        let vw = VectorField2::new(gw.sample(|x, y| x * y), gw.sample(|x, _| x.cos()));
        let rw = ow.divergence(&vw).unwrap().values;
        assert!(sw.solve(&ow, &rw).unwrap().residual < 1e-10);
    }
}
