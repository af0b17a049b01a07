use serde::{Deserialize, Serialize};

use super::operator::advection_matrix;
use crate::error::{MhdError, Result};
use crate::fields::{apply_bc, bc::bc_violation, BcTag, DiffOps, Projector, VectorField2};
use crate::linalg::{self, spmv};

/// One streamfunction mode `ψ = a cos(kx x + ky y + phase)`; the field is
/// `(∂y ψ, −∂x ψ)`. Wavenumbers are in radians per unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamMode {
    pub amplitude: f64,
    pub kx: f64,
    pub ky: f64,
    #[serde(default)]
    pub phase: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquilibriumSpec {
    #[default]
    Zero,
    /// `y_e = (a sin(k y), 0)`, `B_e = (b sin(k y), 0)`.
    Shear {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        wavenumber: f64,
        #[serde(default)]
        magnetic: f64,
    },
    /// `y_e = a (sin x cos y, −cos x sin y)`, `B_e` the same pattern scaled by `b`.
    TaylorVortex {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        magnetic: f64,
    },
    Custom {
        #[serde(default)]
        velocity: Vec<StreamMode>,
        #[serde(default)]
        magnetic: Vec<StreamMode>,
    },
}

/// Steady state `(y_e, B_e)` with the forcings that make it exact.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub y_e: VectorField2<f64>,
    pub b_e: VectorField2<f64>,
    pub nu: f64,
    pub eta: f64,
    /// Residual of the momentum equation (pressure taken as zero).
    pub f: VectorField2<f64>,
    /// Residual of the induction equation.
    pub g: VectorField2<f64>,
    /// Largest nodal `|∇y_e| + |∇B_e|` (Frobenius norms).
    pub grad_bound: f64,
}

impl Equilibrium {
    pub fn is_zero(&self) -> bool {
        self.y_e.max_abs() == 0.0 && self.b_e.max_abs() == 0.0
    }
}

fn stream_field(ops: &DiffOps, modes: &[StreamMode]) -> VectorField2<f64> {
    let g = &ops.grid;
    let mut u1 = vec![0.0; g.len()];
    let mut u2 = vec![0.0; g.len()];
    for m in modes {
        for k in 0..g.len() {
            let (x, y) = g.coords(k);
            let s = (m.kx * x + m.ky * y + m.phase).sin();
            u1[k] -= m.amplitude * m.ky * s;
            u2[k] += m.amplitude * m.kx * s;
        }
    }
    VectorField2::new(u1, u2)
}

fn analytic_fields(ops: &DiffOps, spec: &EquilibriumSpec) -> Result<(VectorField2<f64>, VectorField2<f64>)> {
    let g = &ops.grid;
    let n = g.len();
    let bad = |what: &str| Err(MhdError::Config(format!("equilibrium parameter {what} must be finite")));
    Ok(match *spec {
        EquilibriumSpec::Zero => (VectorField2::zeros(n), VectorField2::zeros(n)),
        EquilibriumSpec::Shear { amplitude, wavenumber, magnetic } => {
            if !(amplitude.is_finite() && wavenumber.is_finite() && magnetic.is_finite()) {
                return bad("shear");
            }
            let prof = g.sample(|_, y| (wavenumber * y).sin());
            let y = VectorField2::new(prof.iter().map(|p| amplitude * p).collect(), vec![0.0; n]);
            let b = VectorField2::new(prof.iter().map(|p| magnetic * p).collect(), vec![0.0; n]);
            (y, b)
        }
        EquilibriumSpec::TaylorVortex { amplitude, magnetic } => {
            if !(amplitude.is_finite() && magnetic.is_finite()) {
                return bad("taylor_vortex");
            }
            let p1 = g.sample(|x, y| x.sin() * y.cos());
            let p2 = g.sample(|x, y| -x.cos() * y.sin());
            let sc = |c: f64| VectorField2::new(p1.iter().map(|v| c * v).collect(), p2.iter().map(|v| c * v).collect());
            (sc(amplitude), sc(magnetic))
        }
        EquilibriumSpec::Custom { ref velocity, ref magnetic } => {
            for m in velocity.iter().chain(magnetic) {
                if !(m.amplitude.is_finite() && m.kx.is_finite() && m.ky.is_finite() && m.phase.is_finite()) {
                    return bad("custom mode");
                }
            }
            (stream_field(ops, velocity), stream_field(ops, magnetic))
        }
    })
}

/// Manufacture an equilibrium: analytic divergence-free fields, boundary
/// conditions applied, projected, then forcings computed as residuals of the
/// steady system with the discrete operators.
pub fn make_equilibrium(ops: &DiffOps, projector: &Projector, spec: &EquilibriumSpec, nu: f64, eta: f64) -> Result<Equilibrium> {
    if !(nu > 0.0 && eta > 0.0 && nu.is_finite() && eta.is_finite()) {
        return Err(MhdError::Config(format!("nu and eta must be positive, got {nu}, {eta}")));
    }
    let grid = &ops.grid;
    let (y0, b0) = analytic_fields(ops, spec)?;
    let y1 = apply_bc(grid, &y0, BcTag::VelocityDirichlet)?;
    let b1 = apply_bc(grid, &b0, BcTag::MagneticTangential)?;
    let y_e = projector.project(&y1)?.tagged(BcTag::VelocityDirichlet);
    let b_e = projector.project(&b1)?.tagged(BcTag::MagneticTangential);

    let scale = 1.0f64.max(y0.max_abs()).max(b0.max_abs());
    let viol = bc_violation(grid, ops, &y_e, BcTag::VelocityDirichlet)?.max(bc_violation(grid, ops, &b_e, BcTag::MagneticTangential)?);
    if viol > 1e-8 * scale {
        return Err(MhdError::Equilibrium(format!("projection breaks the boundary conditions by {viol:.3e}")));
    }

    // f = −νΔy + (y·∇)y − (B·∇)B,  g = −ηΔB + (y·∇)B − (B·∇)y
    let n = grid.len();
    let yf = y_e.flat();
    let bf = b_e.flat();
    let adv = |e: &VectorField2<f64>, v: &[f64]| spmv(&advection_matrix(ops, e), v);
    let lap_y = ops.laplacian_vec(&y_e)?.flat();
    let lap_b = ops.laplacian_vec(&b_e)?.flat();
    let mut f = linalg::lincomb(-nu, &lap_y, 1.0, &adv(&y_e, &yf));
    linalg::axpy(-1.0, &adv(&b_e, &bf), &mut f);
    let mut gvec = linalg::lincomb(-eta, &lap_b, 1.0, &adv(&y_e, &bf));
    linalg::axpy(-1.0, &adv(&b_e, &yf), &mut gvec);

    let grad_bound = (0..n)
        .map(|k| grad_norm(ops, &y_e, k) + grad_norm(ops, &b_e, k))
        .fold(0.0, f64::max);
    if !grad_bound.is_finite() {
        return Err(MhdError::Equilibrium("non-finite gradient bound".into()));
    }
    Ok(Equilibrium {
        f: VectorField2::from_flat(&f, BcTag::VelocityDirichlet)?,
        g: VectorField2::from_flat(&gvec, BcTag::MagneticTangential)?,
        y_e,
        b_e,
        nu,
        eta,
        grad_bound,
    })
}

fn grad_norm(ops: &DiffOps, e: &VectorField2<f64>, k: usize) -> f64 {
    let row = |m: &linalg::SpMat, v: &[f64]| -> f64 {
        m.outer_view(k).map(|r| r.iter().map(|(j, c)| c * v[j]).sum()).unwrap_or(0.0)
    };
    let a = row(&ops.dx, &e.u1);
    let b = row(&ops.dy, &e.u1);
    let c = row(&ops.dx, &e.u2);
    let d = row(&ops.dy, &e.u2);
    (a * a + b * b + c * c + d * d).sqrt()
}
