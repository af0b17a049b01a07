//! Grid functions, finite-difference operators, boundary conditions, the
//! discrete Helmholtz projection and weighted quadrature.

pub mod bc;
pub mod fft;
pub mod integrate;
pub mod io;
pub mod ops;
pub mod projection;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, MhdError, Result};
use crate::linalg::{Scalar, C64};

pub use bc::apply_bc;
pub use integrate::{weighted_norm2, Integral};
pub use ops::{DiffOps, Order};
pub use projection::{PoissonSolver, Projector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BcTag {
    #[default]
    VelocityDirichlet,
    MagneticTangential,
}

impl std::str::FromStr for BcTag {
    type Err = MhdError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "velocity_dirichlet" => Ok(BcTag::VelocityDirichlet),
            "magnetic_tangential" => Ok(BcTag::MagneticTangential),
            other => Err(MhdError::Config(format!("unknown boundary tag '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T = f64> {
    pub values: Vec<T>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![T::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Pointwise product with a real field.
    pub fn times(&self, chi: &[f64]) -> Self {
        Self::new(self.values.iter().zip(chi).map(|(&v, &c)| v * c).collect())
    }
}

/// Collocated two-component field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2<T = f64> {
    pub u1: Vec<T>,
    pub u2: Vec<T>,
    pub bc_tag: BcTag,
}

impl<T: Scalar> VectorField2<T> {
    pub fn new(u1: Vec<T>, u2: Vec<T>) -> Self {
        Self { u1, u2, bc_tag: BcTag::VelocityDirichlet }
    }

    pub fn tagged(mut self, tag: BcTag) -> Self {
        self.bc_tag = tag;
        self
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![T::zero(); n], vec![T::zero(); n])
    }

    pub fn len(&self) -> usize {
        self.u1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u1.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.u1.iter().chain(&self.u2).all(|v| v.is_finite())
    }

    pub fn flat(&self) -> Vec<T> {
        let mut v = self.u1.clone();
        v.extend_from_slice(&self.u2);
        v
    }

    pub fn from_flat(v: &[T], tag: BcTag) -> Result<Self> {
        if v.len() % 2 != 0 {
            return Err(MhdError::Shape { expected: v.len() + 1, got: v.len() });
        }
        let n = v.len() / 2;
        Ok(Self { u1: v[..n].to_vec(), u2: v[n..].to_vec(), bc_tag: tag })
    }

    pub fn times(&self, chi: &[f64]) -> Self {
        Self {
            u1: self.u1.iter().zip(chi).map(|(&v, &c)| v * c).collect(),
            u2: self.u2.iter().zip(chi).map(|(&v, &c)| v * c).collect(),
            bc_tag: self.bc_tag,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            u1: self.u1.iter().zip(&other.u1).map(|(&a, &b)| a - b).collect(),
            u2: self.u2.iter().zip(&other.u2).map(|(&a, &b)| a - b).collect(),
            bc_tag: self.bc_tag,
        }
    }

    /// Pointwise Euclidean magnitude squared.
    pub fn abs2(&self) -> Vec<f64> {
        self.u1.iter().zip(&self.u2).map(|(a, b)| a.abs2() + b.abs2()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.abs2().into_iter().fold(0.0, f64::max).sqrt()
    }
}

/// Stacked state `u = (φ, ξ)`. Flat layout: `[φ1, φ2, ξ1, ξ2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T = f64> {
    pub phi: VectorField2<T>,
    pub xi: VectorField2<T>,
}

impl<T: Scalar> StateVector<T> {
    pub fn new(phi: VectorField2<T>, xi: VectorField2<T>) -> Result<Self> {
        check_len(phi.len(), xi.len())?;
        Ok(Self { phi: phi.tagged(BcTag::VelocityDirichlet), xi: xi.tagged(BcTag::MagneticTangential) })
    }

    pub fn zeros(n: usize) -> Self {
        Self { phi: VectorField2::zeros(n), xi: VectorField2::zeros(n).tagged(BcTag::MagneticTangential) }
    }

    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn flat(&self) -> Vec<T> {
        let mut v = self.phi.flat();
        v.extend(self.xi.flat());
        v
    }

    pub fn from_flat(v: &[T]) -> Result<Self> {
        if v.len() % 4 != 0 {
            return Err(MhdError::Shape { expected: 4 * (v.len() / 4 + 1), got: v.len() });
        }
        let h = v.len() / 2;
        Ok(Self {
            phi: VectorField2::from_flat(&v[..h], BcTag::VelocityDirichlet)?,
            xi: VectorField2::from_flat(&v[h..], BcTag::MagneticTangential)?,
        })
    }

    pub fn times(&self, chi: &[f64]) -> Self {
        Self { phi: self.phi.times(chi), xi: self.xi.times(chi) }
    }
}

impl StateVector<C64> {
    pub fn re(&self) -> StateVector<f64> {
        let f = |v: &[C64]| v.iter().map(|z| z.re).collect::<Vec<_>>();
        StateVector {
            phi: VectorField2 { u1: f(&self.phi.u1), u2: f(&self.phi.u2), bc_tag: BcTag::VelocityDirichlet },
            xi: VectorField2 { u1: f(&self.xi.u1), u2: f(&self.xi.u2), bc_tag: BcTag::MagneticTangential },
        }
    }
}
