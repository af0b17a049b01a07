use super::equilibrium::Equilibrium;
use super::operator::{induction_matrix, oseen_matrix};
use crate::error::{check_len, Result};
use crate::fields::{DiffOps, PoissonSolver, Projector, ScalarField, StateVector, VectorField2};
use crate::linalg::{self, spmv, Scalar, C64};

/// Solve a real Poisson problem for real or complex data (real and
/// imaginary parts separately). Returns the solution and the worse residual.
pub(crate) fn poisson_solve<T: Scalar>(ops: &DiffOps, poisson: &PoissonSolver, rhs: &[T]) -> Result<(Vec<T>, f64)> {
    let re: Vec<f64> = rhs.iter().map(|v| v.re()).collect();
    let im: Vec<f64> = rhs.iter().map(|v| v.to_complex().im).collect();
    let a = poisson.solve(ops, &re)?;
    if linalg::max_abs(&im) == 0.0 {
        return Ok((a.p.iter().map(|&v| T::from_real(v)).collect(), a.residual));
    }
    let b = poisson.solve(ops, &im)?;
    let p = a.p.iter().zip(&b.p).map(|(&x, &y)| T::from_complex(C64::new(x, y))).collect();
    Ok((p, a.residual.max(b.residual)))
}

/// `−div 𝓛₁φ + div 𝓛₂ξ`.
pub fn pressure_rhs<T: Scalar>(ops: &DiffOps, s: &StateVector<T>, eq: &Equilibrium) -> Result<Vec<T>> {
    check_len(ops.n(), s.n())?;
    let div = ops.div_matrix();
    let l1 = spmv(&oseen_matrix(ops, &eq.y_e, 1.0), &s.phi.flat());
    let l2 = spmv(&oseen_matrix(ops, &eq.b_e, 1.0), &s.xi.flat());
    Ok(linalg::lincomb(-1.0, &spmv(&div, &l1), 1.0, &spmv(&div, &l2)))
}

#[derive(Debug, Clone)]
pub struct PressureSolution<T> {
    pub p: ScalarField<T>,
    /// `‖Δp + div𝓛₁φ − div𝓛₂ξ‖ / ‖div𝓛₁φ − div𝓛₂ξ‖`.
    pub residual: f64,
}

/// Pressure of a divergence-free state: `Δp = −div 𝓛₁(φ) + div 𝓛₂(ξ)`,
/// zero-mean gauge, `Δ = div ∘ G`.
pub fn pressure_from_state<T: Scalar>(ops: &DiffOps, poisson: &PoissonSolver, s: &StateVector<T>, eq: &Equilibrium) -> Result<PressureSolution<T>> {
    let rhs = pressure_rhs(ops, s, eq)?;
    if linalg::max_abs(&rhs) == 0.0 {
        return Ok(PressureSolution { p: ScalarField::zeros(ops.n()), residual: 0.0 });
    }
    let (p, residual) = poisson_solve(ops, poisson, &rhs)?;
    Ok(PressureSolution { p: ScalarField::new(p), residual })
}

/// `2 Σᵢⱼ ∂ᵢe_j ∂ⱼφᵢ`, the first-order form of `div 𝓛⁺_e φ` for
/// divergence-free `e` and `φ`.
pub fn div_oseen_identity(ops: &DiffOps, e: &VectorField2<f64>, phi: &VectorField2<f64>) -> Result<Vec<f64>> {
    check_len(ops.n(), e.len())?;
    check_len(ops.n(), phi.len())?;
    let d = [&ops.dx, &ops.dy];
    let ec = [&e.u1, &e.u2];
    let pc = [&phi.u1, &phi.u2];
    let mut out = vec![0.0; ops.n()];
    for i in 0..2 {
        for j in 0..2 {
            let a = spmv(d[i], ec[j]);
            let b = spmv(d[j], pc[i]);
            for k in 0..out.len() {
                out[k] += 2.0 * a[k] * b[k];
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EigenResidual {
    /// `(‖r_φ‖ + ‖r_ξ‖) / ‖Φ‖` in the trapezoid norm.
    pub relative: f64,
    pub pressure: ScalarField<C64>,
}

/// Residual of the over-determined eigenproblem in PDE form,
/// `−νΔφ + 𝓛₁φ − 𝓛₂ξ + ∇p = λφ`, `−ηΔξ + 𝓜₁ξ − 𝓜₂φ = λξ`, with the
/// pressure recovered from the φ-row. On periodic grids the discrete harmonic
/// part (mean and grid-scale null modes, which no periodic pressure can
/// represent) is removed from the φ-row; on wall grids boundary rows carry
/// the multipliers of the boundary conditions and are excluded.
pub fn eigen_residual(
    ops: &DiffOps,
    projector: &Projector,
    poisson: &PoissonSolver,
    eq: &Equilibrium,
    lambda: C64,
    s: &StateVector<C64>,
) -> Result<EigenResidual> {
    let n = ops.n();
    check_len(n, s.n())?;
    let phi = s.phi.flat();
    let xi = s.xi.flat();
    let lap = ops.vector_lap();
    let neg = |v: Vec<C64>| v.into_iter().map(|z| -z).collect::<Vec<_>>();

    let mut w = linalg::lincomb(-eq.nu, &spmv(&lap, &phi), 1.0, &spmv(&oseen_matrix(ops, &eq.y_e, 1.0), &phi));
    linalg::axpy(C64::new(-1.0, 0.0), &spmv(&oseen_matrix(ops, &eq.b_e, 1.0), &xi), &mut w);
    linalg::axpy(-lambda, &phi, &mut w);
    let dw = neg(spmv(&ops.div_matrix(), &w));
    let p = if linalg::max_abs(&dw) == 0.0 { vec![C64::new(0.0, 0.0); n] } else { poisson_solve(ops, poisson, &dw)?.0 };
    let gp = ops.pressure_gradient(&ScalarField::new(p.clone()))?.flat();
    let mut r1 = linalg::lincomb(1.0, &w, 1.0, &gp);

    let mut r2 = linalg::lincomb(-eq.eta, &spmv(&lap, &xi), 1.0, &spmv(&induction_matrix(ops, &eq.y_e), &xi));
    linalg::axpy(C64::new(-1.0, 0.0), &spmv(&induction_matrix(ops, &eq.b_e), &phi), &mut r2);
    linalg::axpy(-lambda, &xi, &mut r2);

    if ops.grid.fully_periodic() {
        projector.project_flat(&mut r1)?;
    } else {
        for k in ops.grid.boundary_nodes() {
            for r in [&mut r1, &mut r2] {
                r[k] = C64::new(0.0, 0.0);
                r[n + k] = C64::new(0.0, 0.0);
            }
        }
    }
    let w2: Vec<f64> = ops.weights.iter().chain(&ops.weights).copied().collect();
    let w4: Vec<f64> = w2.iter().chain(&w2).copied().collect();
    let norm = linalg::wnorm(&w4, &s.flat());
    let rel = if norm == 0.0 { 0.0 } else { (linalg::wnorm(&w2, &r1) + linalg::wnorm(&w2, &r2)) / norm };
    Ok(EigenResidual { relative: rel, pressure: ScalarField::new(p) })
}
