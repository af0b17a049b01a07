//! Equilibria, Oseen and induction operators, the block generator and its
//! adjoint, the pressure map and the cutoff commutator forcings.

pub mod commutators;
pub mod equilibrium;
pub mod operator;
pub mod pressure;

pub use commutators::{build_commutators, commutator_forcing, CommutatorForcing};
pub use equilibrium::{make_equilibrium, Equilibrium, EquilibriumSpec, StreamMode};
pub use operator::{
    assemble_adjoint, assemble_generator, induction, magnetic_laplacian, oseen_minus, oseen_plus, stokes, GeneratorOptions,
    LinearOperator, OpLabel, RowProjection, Shape,
};
pub use pressure::{div_oseen_identity, eigen_residual, pressure_from_state, EigenResidual, PressureSolution};
