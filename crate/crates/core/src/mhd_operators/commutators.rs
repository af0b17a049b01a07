use super::equilibrium::Equilibrium;
use super::operator::{induction_matrix, oseen_matrix};
use crate::error::{check_len, MhdError, Result};
use crate::fields::{DiffOps, ScalarField, StateVector, VectorField2};
use crate::geometry::{CutoffField, Region, RegionSet};
use crate::linalg::{self, spmv, Scalar, SpMat};

/// Forcings of the cutoff system: `F_χ` (φ-row), `G_χ` (ξ-row) and `T_χ`
/// (pressure equation).
#[derive(Debug, Clone)]
pub struct CommutatorForcing<T = f64> {
    pub f_chi: VectorField2<T>,
    pub g_chi: VectorField2<T>,
    pub t_chi: ScalarField<T>,
}

/// `A(χu) − χ(Au)` for a matrix acting on flat data made of `blocks` copies
/// of the grid.
fn comm<T: Scalar>(a: &SpMat, chi: &[f64], u: &[T]) -> Vec<T> {
    let m = chi.len();
    let times = |v: &[T]| v.iter().enumerate().map(|(k, &x)| x * chi[k % m]).collect::<Vec<T>>();
    let left = spmv(a, &times(u));
    let right = times(&spmv(a, u));
    left.into_iter().zip(right).map(|(l, r)| l - r).collect()
}

pub(crate) fn gradient_matrix(ops: &DiffOps) -> SpMat {
    if ops.grid.fully_periodic() {
        return linalg::block(&[vec![Some(&ops.dx)], vec![Some(&ops.dy)]]);
    }
    let w = &ops.weights;
    let winv: Vec<f64> = w.iter().map(|v| -1.0 / v).collect();
    let gx = linalg::mul(&linalg::mul(&linalg::diag(&winv), &linalg::transpose(&ops.dx)), &linalg::diag(w));
    let gy = linalg::mul(&linalg::mul(&linalg::diag(&winv), &linalg::transpose(&ops.dy)), &linalg::diag(w));
    linalg::block(&[vec![Some(&gx)], vec![Some(&gy)]])
}

/// Commutator forcings, each computed as a literal difference of operator
/// orderings:
///
/// * `F_χ = ν[χ,Δ]φ + [𝓛₁,χ]φ − [𝓛₂,χ]ξ + [∇,χ]p`
/// * `G_χ = η[χ,Δ]ξ + [𝓜₁,χ]ξ − [𝓜₂,χ]φ`
/// * `T_χ = [Δ,χ]p + [div𝓛₁,χ]φ − [div𝓛₂,χ]ξ`
///
/// with `[A,χ]u = A(χu) − χAu` and `[χ,Δ] = −[Δ,χ]`. The Laplacian in the
/// pressure equation is the Poisson operator `div ∘ G`.
pub fn commutator_forcing<T: Scalar>(
    ops: &DiffOps,
    chi: &CutoffField,
    s: &StateVector<T>,
    p: &ScalarField<T>,
    eq: &Equilibrium,
) -> Result<CommutatorForcing<T>> {
    let n = ops.n();
    check_len(n, chi.values.len())?;
    check_len(n, s.n())?;
    check_len(n, p.len())?;
    let c = &chi.values;
    let phi = s.phi.flat();
    let xi = s.xi.flat();
    let lap = ops.vector_lap();
    let l1 = oseen_matrix(ops, &eq.y_e, 1.0);
    let l2 = oseen_matrix(ops, &eq.b_e, 1.0);
    let m1 = induction_matrix(ops, &eq.y_e);
    let m2 = induction_matrix(ops, &eq.b_e);
    let grad = gradient_matrix(ops);
    let div = ops.div_matrix();
    let wide = linalg::mul(&div, &grad);

    let mut f = comm(&lap, c, &phi).into_iter().map(|v| v * -eq.nu).collect::<Vec<T>>();
    linalg::axpy(T::from_real(1.0), &comm(&l1, c, &phi), &mut f);
    linalg::axpy(T::from_real(-1.0), &comm(&l2, c, &xi), &mut f);
    linalg::axpy(T::from_real(1.0), &comm(&grad, c, &p.values), &mut f);

    let mut g = comm(&lap, c, &xi).into_iter().map(|v| v * -eq.eta).collect::<Vec<T>>();
    linalg::axpy(T::from_real(1.0), &comm(&m1, c, &xi), &mut g);
    linalg::axpy(T::from_real(-1.0), &comm(&m2, c, &phi), &mut g);

    let mut t = comm(&wide, c, &p.values);
    linalg::axpy(T::from_real(1.0), &comm(&linalg::mul(&div, &l1), c, &phi), &mut t);
    linalg::axpy(T::from_real(-1.0), &comm(&linalg::mul(&div, &l2), c, &xi), &mut t);

    Ok(CommutatorForcing {
        f_chi: VectorField2::from_flat(&f, s.phi.bc_tag)?,
        g_chi: VectorField2::from_flat(&g, s.xi.bc_tag)?,
        t_chi: ScalarField::new(t),
    })
}

impl<T: Scalar> CommutatorForcing<T> {
    /// Largest pointwise magnitude over all nodes.
    pub fn scale(&self) -> f64 {
        self.f_chi.max_abs().max(self.g_chi.max_abs()).max(linalg::max_abs(&self.t_chi.values))
    }

    /// Largest pointwise magnitude outside Ω*.
    pub fn leak(&self, regions: &RegionSet) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, r) in regions.labels.iter().enumerate() {
            if *r == Region::OmegaStar {
                continue;
            }
            let a = self.f_chi.u1[k].abs2() + self.f_chi.u2[k].abs2();
            let b = self.g_chi.u1[k].abs2() + self.g_chi.u2[k].abs2();
            worst = worst.max(a.sqrt()).max(b.sqrt()).max(self.t_chi.values[k].abs2().sqrt());
        }
        worst
    }
}

/// Commutator forcings with the support check: anything above `1e-12` times
/// the forcing scale outside Ω* is an error (the cutoff layers are too thin
/// for the stencils).
pub fn build_commutators<T: Scalar>(
    ops: &DiffOps,
    regions: &RegionSet,
    chi: &CutoffField,
    s: &StateVector<T>,
    p: &ScalarField<T>,
    eq: &Equilibrium,
) -> Result<CommutatorForcing<T>> {
    check_len(ops.n(), regions.labels.len())?;
    let forcing = commutator_forcing(ops, chi, s, p, eq)?;
    let leak = forcing.leak(regions);
    if leak > 1e-12 * forcing.scale() {
        return Err(MhdError::CommutatorLeak(leak));
    }
    Ok(forcing)
}

/// The Poisson operator `div ∘ G` applied to a scalar of either kind.
pub fn poisson_apply<T: Scalar>(ops: &DiffOps, p: &[T]) -> Vec<T> {
    spmv(&linalg::mul(&ops.div_matrix(), &gradient_matrix(ops)), p)
}

