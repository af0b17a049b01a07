use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::equilibrium::Equilibrium;
use crate::error::{check_len, MhdError, Result};
use crate::fields::{DiffOps, Projector, VectorField2};
use crate::linalg::{self, Scalar, SpMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpLabel {
    A1,
    A2,
    L1,
    L2,
    M1,
    M2,
    Atilde,
    AtildeAdj,
}

impl fmt::Display for OpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OpLabel::A1 => "A1",
            OpLabel::A2 => "A2",
            OpLabel::L1 => "L1",
            OpLabel::L2 => "L2",
            OpLabel::M1 => "M1",
            OpLabel::M2 => "M2",
            OpLabel::Atilde => "Atilde",
            OpLabel::AtildeAdj => "Atilde_adj",
        };
        f.write_str(s)
    }
}

/// What an operator consumes or produces, in nodes per component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// One vector field, flat length `2n`.
    Vector(usize),
    /// A stacked state `(φ, ξ)`, flat length `4n`.
    State(usize),
}

impl Shape {
    pub fn len(self) -> usize {
        match self {
            Shape::Vector(n) => 2 * n,
            Shape::State(n) => 4 * n,
        }
    }
}

/// Which output blocks (of length `2n`) pass through the Helmholtz projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowProjection {
    None,
    /// The first block only (the whole output for vector-shaped operators).
    First,
    All,
}

/// `x ↦ post(M · pre(x)) + shift · pre(x)` with `M` sparse and real.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub label: OpLabel,
    pub dom: Shape,
    pub codom: Shape,
    pub matrix: SpMat,
    pub pre_project: bool,
    pub post_project: RowProjection,
    pub shift: f64,
    pub projector: Option<Projector>,
}

impl LinearOperator {
    fn plain(label: OpLabel, shape: Shape, matrix: SpMat) -> Self {
        Self { label, dom: shape, codom: shape, matrix, pre_project: false, post_project: RowProjection::None, shift: 0.0, projector: None }
    }

    pub fn n(&self) -> usize {
        self.dom.len()
    }

    fn project_blocks<T: Scalar>(&self, v: &mut [T], which: RowProjection) -> Result<()> {
        let Some(p) = &self.projector else {
            return if which == RowProjection::None {
                Ok(())
            } else {
                Err(MhdError::Assembly(format!("{} needs a projector", self.label)))
            };
        };
        let blocks = v.len() / self.block_len();
        let count = match which {
            RowProjection::None => 0,
            RowProjection::First => 1,
            RowProjection::All => blocks,
        };
        for b in 0..count {
            let len = self.block_len();
            p.project_flat(&mut v[b * len..(b + 1) * len])?;
        }
        Ok(())
    }

    fn block_len(&self) -> usize {
        match self.dom {
            Shape::Vector(n) | Shape::State(n) => 2 * n,
        }
    }

    pub fn apply<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        check_len(self.dom.len(), x.len())?;
        let mut xin = x.to_vec();
        if self.pre_project {
            self.project_blocks(&mut xin, RowProjection::All)?;
        }
        let mut y = linalg::spmv(&self.matrix, &xin);
        self.project_blocks(&mut y, self.post_project)?;
        if self.shift != 0.0 {
            linalg::axpy(T::from_real(self.shift), &xin, &mut y);
        }
        Ok(y)
    }

    /// Coordinate-format export of the sparse part: a comment header with the
    /// label, shape, projection and shift, then `row col value` lines.
    pub fn write_coo<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "# {} rows={} cols={} nnz={} pre_project={} post_project={:?} shift={:e}",
            self.label,
            self.matrix.rows(),
            self.matrix.cols(),
            self.matrix.nnz(),
            self.pre_project,
            self.post_project,
            self.shift
        )?;
        for (v, (i, j)) in self.matrix.iter() {
            writeln!(out, "{i} {j} {v:.17e}")?;
        }
        Ok(())
    }
}

/// `(e·∇)` acting on each component of a vector field, `2n × 2n`.
pub fn advection_matrix(ops: &DiffOps, e: &VectorField2<f64>) -> SpMat {
    let adv = linalg::add(&linalg::mul(&linalg::diag(&e.u1), &ops.dx), &linalg::mul(&linalg::diag(&e.u2), &ops.dy));
    linalg::block(&[vec![Some(&adv), None], vec![None, Some(&adv)]])
}

/// `(e·∇)v + sign·(v·∇)e`.
pub fn oseen_matrix(ops: &DiffOps, e: &VectorField2<f64>, sign: f64) -> SpMat {
    let adv = advection_matrix(ops, e);
    let d = |m: &SpMat, f: &[f64]| linalg::diag(&linalg::spmv(m, f).into_iter().map(|v| sign * v).collect::<Vec<_>>());
    let zero_order = linalg::block(&[
        vec![Some(&d(&ops.dx, &e.u1)), Some(&d(&ops.dy, &e.u1))],
        vec![Some(&d(&ops.dx, &e.u2)), Some(&d(&ops.dy, &e.u2))],
    ]);
    linalg::add(&adv, &zero_order)
}

/// Curl form of the induction term, `v ↦ curl(v × e) = (Dy s, −Dx s)` with
/// `s = v1 e2 − v2 e1`. Agrees with `(e·∇)v − (v·∇)e` for divergence-free
/// `e`, `v` and is divergence-free by construction.
pub fn induction_matrix(ops: &DiffOps, e: &VectorField2<f64>) -> SpMat {
    let neg_e1: Vec<f64> = e.u1.iter().map(|v| -v).collect();
    let cross = linalg::block(&[vec![Some(&linalg::diag(&e.u2)), Some(&linalg::diag(&neg_e1))]]);
    linalg::mul(&ops.curl_matrix(), &cross)
}

fn check_finite(e: &VectorField2<f64>) -> Result<()> {
    if e.is_finite() {
        Ok(())
    } else {
        Err(MhdError::Assembly("non-finite coefficient field".into()))
    }
}

/// `𝓛⁺_e v = (e·∇)v + (v·∇)e`.
pub fn oseen_plus(ops: &DiffOps, e: &VectorField2<f64>, label: OpLabel) -> Result<LinearOperator> {
    check_len(ops.n(), e.len())?;
    check_finite(e)?;
    Ok(LinearOperator::plain(label, Shape::Vector(ops.n()), oseen_matrix(ops, e, 1.0)))
}

/// `𝓛⁻_e v = (e·∇)v − (v·∇)e` in its literal advective form.
pub fn oseen_minus(ops: &DiffOps, e: &VectorField2<f64>, label: OpLabel) -> Result<LinearOperator> {
    check_len(ops.n(), e.len())?;
    check_finite(e)?;
    Ok(LinearOperator::plain(label, Shape::Vector(ops.n()), oseen_matrix(ops, e, -1.0)))
}

/// Curl-form induction operator used inside the generator.
pub fn induction(ops: &DiffOps, e: &VectorField2<f64>, label: OpLabel) -> Result<LinearOperator> {
    check_len(ops.n(), e.len())?;
    check_finite(e)?;
    Ok(LinearOperator::plain(label, Shape::Vector(ops.n()), induction_matrix(ops, e)))
}

/// Stokes operator `A₁ = −PΔ`.
pub fn stokes(ops: &DiffOps, projector: &Projector) -> LinearOperator {
    let mut op = LinearOperator::plain(OpLabel::A1, Shape::Vector(ops.n()), linalg::scale(&ops.vector_lap(), -1.0));
    op.post_project = RowProjection::First;
    op.projector = Some(projector.clone());
    op
}

/// Magnetic operator `A₂ = −Δ`.
pub fn magnetic_laplacian(ops: &DiffOps) -> LinearOperator {
    LinearOperator::plain(OpLabel::A2, Shape::Vector(ops.n()), linalg::scale(&ops.vector_lap(), -1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorOptions {
    /// Artificial spectral shift `σ ≥ 0`.
    pub sigma: f64,
    /// Project the ξ-row as well (off by default).
    #[serde(default)]
    pub project_xi_row: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self { sigma: 0.0, project_xi_row: false }
    }
}

/// Unprojected blocks `[νL − 𝓛⁺_y, 𝓛⁺_B; 𝓜_B, ηL − 𝓜_y]`.
pub fn generator_blocks(ops: &DiffOps, eq: &Equilibrium) -> Result<SpMat> {
    check_len(ops.n(), eq.y_e.len())?;
    check_finite(&eq.y_e)?;
    check_finite(&eq.b_e)?;
    let lap = ops.vector_lap();
    let a11 = linalg::sub(&linalg::scale(&lap, eq.nu), &oseen_matrix(ops, &eq.y_e, 1.0));
    let a12 = oseen_matrix(ops, &eq.b_e, 1.0);
    let a21 = induction_matrix(ops, &eq.b_e);
    let a22 = linalg::sub(&linalg::scale(&lap, eq.eta), &induction_matrix(ops, &eq.y_e));
    let m = linalg::block(&[vec![Some(&a11), Some(&a12)], vec![Some(&a21), Some(&a22)]]);
    if m.data().iter().any(|v| !v.is_finite()) {
        return Err(MhdError::Assembly("non-finite generator entry".into()));
    }
    Ok(m)
}

/// Generator `Ã = [−νA₁ − P𝓛⁺_y, P𝓛⁺_B; 𝓜_B, −ηA₂ − 𝓜_y] + σI` on projected states.
pub fn assemble_generator(ops: &DiffOps, projector: &Projector, eq: &Equilibrium, opts: GeneratorOptions) -> Result<LinearOperator> {
    if !(opts.sigma >= 0.0 && opts.sigma.is_finite()) {
        return Err(MhdError::Config(format!("shift must be a finite nonnegative number, got {}", opts.sigma)));
    }
    let matrix = generator_blocks(ops, eq)?;
    let n = ops.n();
    Ok(LinearOperator {
        label: OpLabel::Atilde,
        dom: Shape::State(n),
        codom: Shape::State(n),
        matrix,
        pre_project: false,
        post_project: if opts.project_xi_row { RowProjection::All } else { RowProjection::First },
        shift: opts.sigma,
        projector: Some(projector.clone()),
    })
}

/// Adjoint in the trapezoid inner product restricted to projected states:
/// `Π W⁻¹AᵀW Π + σI`.
pub fn assemble_adjoint(ops: &DiffOps, projector: &Projector, eq: &Equilibrium, opts: GeneratorOptions) -> Result<LinearOperator> {
    let fwd = assemble_generator(ops, projector, eq, opts)?;
    let w: Vec<f64> = (0..4).flat_map(|_| ops.weights.iter().copied()).collect();
    let winv: Vec<f64> = w.iter().map(|v| 1.0 / v).collect();
    let at = linalg::transpose(&fwd.matrix);
    let matrix = linalg::mul(&linalg::mul(&linalg::diag(&winv), &at), &linalg::diag(&w));
    Ok(LinearOperator { label: OpLabel::AtildeAdj, matrix, pre_project: true, post_project: RowProjection::All, ..fwd })
}
