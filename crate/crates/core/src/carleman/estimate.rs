use serde::{Deserialize, Serialize};

use super::{coefficients, CarlemanParams};
use crate::error::{check_len, MhdError, Result};
use crate::fields::{DiffOps, ScalarField, StateVector};
use crate::geometry::{CutoffField, RegionSet, WeightField};
use crate::linalg::{self, spmv, Scalar, C64};
use crate::mhd_operators::commutators::gradient_matrix;
use crate::mhd_operators::{commutator_forcing, Equilibrium};
use crate::mhd_operators::operator::{induction_matrix, oseen_matrix};

/// Residual of the cutoff system: each row is the χ-multiplied operator
/// applied to `(χφ, χξ, χp)` minus its commutator forcing.
#[derive(Debug, Clone)]
pub struct ChiResidual<T = C64> {
    pub phi: Vec<T>,
    pub xi: Vec<T>,
    pub p: Vec<T>,
    pub max_norm: f64,
    /// Largest magnitude among the operator terms, for relative checks.
    pub scale: f64,
}

pub fn assemble_chi_system_residual<T: Scalar>(
    ops: &DiffOps,
    s: &StateVector<T>,
    p: &ScalarField<T>,
    chi: &CutoffField,
    eq: &Equilibrium,
    lambda: T,
) -> Result<ChiResidual<T>> {
    let n = ops.n();
    check_len(n, s.n())?;
    check_len(n, p.len())?;
    let c = &chi.values;
    let cs = s.times(c);
    let cp = p.times(c);
    let (phi, xi) = (cs.phi.flat(), cs.xi.flat());
    let lap = ops.vector_lap();
    let l1 = oseen_matrix(ops, &eq.y_e, 1.0);
    let l2 = oseen_matrix(ops, &eq.b_e, 1.0);
    let m1 = induction_matrix(ops, &eq.y_e);
    let m2 = induction_matrix(ops, &eq.b_e);
    let grad = gradient_matrix(ops);
    let div = ops.div_matrix();
    let forcing = commutator_forcing(ops, chi, s, p, eq)?;

    let mut scale: f64 = 0.0;
    let mut acc = |terms: Vec<(f64, Vec<T>)>| -> Vec<T> {
        let mut out = vec![T::zero(); terms[0].1.len()];
        for (a, v) in terms {
            scale = scale.max(linalg::max_abs(&v) * a.abs());
            linalg::axpy(T::from_real(a), &v, &mut out);
        }
        out
    };
    let lam_phi: Vec<T> = phi.iter().map(|&v| v * lambda).collect();
    let lam_xi: Vec<T> = xi.iter().map(|&v| v * lambda).collect();
    let r_phi = acc(vec![
        (-eq.nu, spmv(&lap, &phi)),
        (1.0, spmv(&l1, &phi)),
        (-1.0, spmv(&l2, &xi)),
        (1.0, spmv(&grad, &cp.values)),
        (-1.0, lam_phi),
        (-1.0, forcing.f_chi.flat()),
    ]);
    let r_xi = acc(vec![
        (-eq.eta, spmv(&lap, &xi)),
        (1.0, spmv(&m1, &xi)),
        (-1.0, spmv(&m2, &phi)),
        (-1.0, lam_xi),
        (-1.0, forcing.g_chi.flat()),
    ]);
    let r_p = acc(vec![
        (1.0, spmv(&div, &spmv(&grad, &cp.values))),
        (1.0, spmv(&div, &spmv(&l1, &phi))),
        (-1.0, spmv(&div, &spmv(&l2, &xi))),
        (-1.0, forcing.t_chi.values.clone()),
    ]);
    let max_norm = linalg::max_abs(&r_phi).max(linalg::max_abs(&r_xi)).max(linalg::max_abs(&r_p));
    Ok(ChiResidual { phi: r_phi, xi: r_xi, p: r_p, max_norm, scale })
}

/// Constants left implicit by the estimate; all default to 1 except `c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateConstants {
    pub c_lambda_e: f64,
    pub c_ye_be: f64,
    /// Multiplies the Ω*-integral scaled by the inverse gradient coefficient.
    pub big_c_chi: f64,
    /// Multiplies the plain Ω*-integral.
    pub small_c_chi: f64,
    /// Calibrated `O(τ²)` bound.
    pub c2: f64,
    /// Constants of the two-term vanishing bounds.
    pub sweep_c: f64,
    pub sweep_const: f64,
}

impl Default for EstimateConstants {
    fn default() -> Self {
        Self { c_lambda_e: 1.0, c_ye_be: 1.0, big_c_chi: 1.0, small_c_chi: 1.0, c2: 0.0, sweep_c: 1.0, sweep_const: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FinalEstimate {
    pub tau: f64,
    pub lhs_grad: f64,
    pub lhs_zero: f64,
    pub lhs_pressure: f64,
    pub rhs_first: f64,
    pub rhs_second: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

fn grad2<T: Scalar>(ops: &DiffOps, v: &[T]) -> Vec<f64> {
    let dx = spmv(&ops.dx, v);
    let dy = spmv(&ops.dy, v);
    dx.iter().zip(&dy).map(|(a, b)| a.abs2() + b.abs2()).collect()
}

fn wsum(ops: &DiffOps, nodes: &[usize], e: &[f64], f: &[f64]) -> f64 {
    nodes.iter().map(|&k| ops.grid.weight(k) * e[k] * f[k]).sum()
}

/// Both sides of the final combined estimate at one τ, weights normalized by
/// `e^{-2τ max_G ψ}`.
#[allow(clippy::too_many_arguments)]
pub fn final_estimate_eval<T: Scalar>(
    ops: &DiffOps,
    s: &StateVector<T>,
    p: &ScalarField<T>,
    chi: &CutoffField,
    psi: &WeightField,
    params: &CarlemanParams,
    regions: &RegionSet,
    k: &EstimateConstants,
) -> Result<FinalEstimate> {
    let n = ops.n();
    check_len(n, s.n())?;
    check_len(n, p.len())?;
    let coef = coefficients(params)?;
    let tau = params.tau;
    let g = regions.g_nodes();
    let top = psi.max_over(&g);
    let e: Vec<f64> = psi.psi.iter().map(|&v| (2.0 * tau * (v - top)).exp()).collect();
    let cs = s.times(&chi.values);
    let cp = p.times(&chi.values);

    let comps = |st: &StateVector<T>| [st.phi.u1.clone(), st.phi.u2.clone(), st.xi.u1.clone(), st.xi.u2.clone()];
    let sum_grad = |cs: &[Vec<T>; 4]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for c in cs {
            for (o, v) in out.iter_mut().zip(grad2(ops, c)) {
                *o += v;
            }
        }
        out
    };
    let sum_abs = |cs: &[Vec<T>; 4]| -> Vec<f64> { (0..n).map(|i| cs.iter().map(|c| c[i].abs2()).sum()).collect() };
    let chi_c = comps(&cs);
    let raw_c = comps(s);
    let cg = coef.c_grad;
    let zero = coef.c_zero - k.c2 * tau * tau;

    let lhs_grad = (cg - k.c_lambda_e - k.c_ye_be / cg) * wsum(ops, &g, &e, &sum_grad(&chi_c));
    let lhs_zero = (zero - k.c_lambda_e - k.c_ye_be / cg) * wsum(ops, &g, &e, &sum_abs(&chi_c));
    let cp2: Vec<f64> = cp.values.iter().map(|v| v.abs2()).collect();
    let lhs_pressure = zero / cg * wsum(ops, &g, &e, &cp2);

    let star = &regions.omega_star;
    let u2 = sum_abs(&raw_c);
    let gu2 = sum_grad(&raw_c);
    let p2: Vec<f64> = p.values.iter().map(|v| v.abs2()).collect();
    let gp2 = grad2(ops, &p.values);
    let first: Vec<f64> = (0..n).map(|i| gp2[i] + p2[i] + u2[i]).collect();
    let second: Vec<f64> = (0..n).map(|i| gu2[i] + u2[i] + p2[i]).collect();
    let rhs_first = k.big_c_chi / cg * wsum(ops, star, &e, &first);
    let rhs_second = k.small_c_chi * wsum(ops, star, &e, &second);
    let lhs = lhs_grad + lhs_zero + lhs_pressure;
    let rhs = rhs_first + rhs_second;
    Ok(FinalEstimate { tau, lhs_grad, lhs_zero, lhs_pressure, rhs_first, rhs_second, lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-12) })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    /// `C/τ⁴·C₁ + const/τ³·C₂`
    pub bound_state: f64,
    /// `C/τ³·C₁ + const/τ²·C₂`
    pub bound_pressure: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VanishingSweep {
    /// `∫_{Ω*} |∇p|² + |p|² + |u|²`
    pub c1: f64,
    /// `∫_{Ω*} |∇u|² + |u|² + |p|²`
    pub c2: f64,
    pub omega1_state: f64,
    pub omega1_pressure: f64,
    pub rows: Vec<SweepRow>,
    pub monotone: bool,
    /// Decay exponents between consecutive τ values.
    pub state_exponents: Vec<f64>,
    pub pressure_exponents: Vec<f64>,
    pub weight_ordering_holds: bool,
}

/// Two-term vanishing bounds over a τ list for a state vanishing on ω.
pub fn tau_sweep_vanishing<T: Scalar>(
    ops: &DiffOps,
    s: &StateVector<T>,
    p: &ScalarField<T>,
    regions: &RegionSet,
    psi: &WeightField,
    tau_list: &[f64],
    k: &EstimateConstants,
) -> Result<VanishingSweep> {
    let n = ops.n();
    check_len(n, s.n())?;
    check_len(n, p.len())?;
    if tau_list.is_empty() {
        return Err(MhdError::Config("empty tau list".into()));
    }
    if tau_list.iter().any(|&t| !(t > 0.0)) || tau_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MhdError::Config("tau list must be positive and increasing".into()));
    }
    let flat = s.flat();
    let scale = linalg::max_abs(&flat).max(linalg::max_abs(&p.values));
    let on_omega = regions.omega.iter().map(|&i| {
        let a = [s.phi.u1[i], s.phi.u2[i], s.xi.u1[i], s.xi.u2[i], p.values[i]];
        a.iter().map(|v| v.abs2().sqrt()).fold(0.0, f64::max)
    });
    let worst = on_omega.fold(0.0, f64::max);
    if worst > 1e-10 * scale {
        return Err(MhdError::Precondition(format!("state does not vanish on omega: {worst:.3e}")));
    }
    let comps = [s.phi.u1.clone(), s.phi.u2.clone(), s.xi.u1.clone(), s.xi.u2.clone()];
    let u2: Vec<f64> = (0..n).map(|i| comps.iter().map(|c| c[i].abs2()).sum()).collect();
    let mut gu2 = vec![0.0; n];
    for c in &comps {
        for (o, v) in gu2.iter_mut().zip(grad2(ops, c)) {
            *o += v;
        }
    }
    let p2: Vec<f64> = p.values.iter().map(|v| v.abs2()).collect();
    let gp2 = grad2(ops, &p.values);
    let ones = vec![1.0; n];
    let star = &regions.omega_star;
    let c1 = wsum(ops, star, &ones, &(0..n).map(|i| gp2[i] + p2[i] + u2[i]).collect::<Vec<_>>());
    let c2 = wsum(ops, star, &ones, &(0..n).map(|i| gu2[i] + u2[i] + p2[i]).collect::<Vec<_>>());
    let rows: Vec<SweepRow> = tau_list
        .iter()
        .map(|&t| SweepRow {
            tau: t,
            bound_state: k.sweep_c / t.powi(4) * c1 + k.sweep_const / t.powi(3) * c2,
            bound_pressure: k.sweep_c / t.powi(3) * c1 + k.sweep_const / t.powi(2) * c2,
        })
        .collect();
    let exps = |f: &dyn Fn(&SweepRow) -> f64| -> Vec<f64> {
        rows.windows(2)
            .map(|w| {
                let (a, b) = (f(&w[0]), f(&w[1]));
                if a == 0.0 && b == 0.0 {
                    f64::INFINITY
                } else {
                    (a / b).ln() / (w[1].tau / w[0].tau).ln()
                }
            })
            .collect()
    };
    let state_exponents = exps(&|r| r.bound_state);
    let pressure_exponents = exps(&|r| r.bound_pressure);
    let monotone = rows.windows(2).all(|w| {
        (w[1].bound_state < w[0].bound_state || w[0].bound_state == 0.0) && (w[1].bound_pressure < w[0].bound_pressure || w[0].bound_pressure == 0.0)
    });
    Ok(VanishingSweep {
        c1,
        c2,
        omega1_state: wsum(ops, &regions.omega1, &ones, &u2),
        omega1_pressure: wsum(ops, &regions.omega1, &ones, &p2),
        rows,
        monotone,
        state_exponents,
        pressure_exponents,
        weight_ordering_holds: psi.ordering_holds,
    })
}
