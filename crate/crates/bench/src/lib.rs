//! Shared fixtures for the benchmarks.

use mhdlab_core::fields::{DiffOps, Projector};
use mhdlab_core::geometry::Grid;
use mhdlab_core::mhd_operators::{assemble_generator, make_equilibrium, Equilibrium, EquilibriumSpec, GeneratorOptions, LinearOperator};
use mhdlab_core::spectral::StateSpace;

pub struct Fixture {
    pub ops: DiffOps,
    pub projector: Projector,
    pub eq: Equilibrium,
    pub space: StateSpace,
    pub op: LinearOperator,
}

/// Shear equilibrium on the 2π box with `n × n` nodes.
pub fn shear_box(n: usize, sigma: f64) -> Fixture {
    let grid = Grid::periodic_box(2.0 * std::f64::consts::PI, n).expect("grid");
    let ops = DiffOps::default_for(&grid).expect("operators");
    let projector = Projector::new(&ops);
    let spec = EquilibriumSpec::Shear { amplitude: 1.0, wavenumber: 1.0, magnetic: 0.5 };
    let eq = make_equilibrium(&ops, &projector, &spec, 0.5, 0.7).expect("equilibrium");
    let space = StateSpace::new(&ops, &projector).expect("state space");
    let op = assemble_generator(&ops, &projector, &eq, GeneratorOptions { sigma, ..Default::default() }).expect("generator");
    Fixture { ops, projector, eq, space, op }
}

/// Deterministic smooth test vector of length `len`.
pub fn wave(len: usize) -> Vec<f64> {
    (0..len).map(|i| (0.37 * i as f64).sin() + 0.5 * (0.11 * i as f64).cos()).collect()
}
