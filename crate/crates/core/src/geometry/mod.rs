//! Discrete domain, nested subdomains around the control region, the cutoff χ
//! and the Carleman weight ψ.

pub mod cutoff;
pub mod grid;
pub mod regions;
pub mod weight;

pub use cutoff::{build_cutoff, CutoffField, CutoffSpec, Profile};
pub use grid::{BcKind, DomainSpec, Grid};
pub use regions::{
    build_nested_regions, BandWidths, GeometryCase, Layering, OmegaSpec, Region, RegionSet, Side,
};
pub use weight::{build_weight, WeightField};
