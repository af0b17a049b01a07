//! Numerical laboratory for the linearized incompressible 2-D MHD system.

pub mod carleman;
pub mod dense;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod linalg;
pub mod mhd_operators;
pub mod spectral;
pub mod stabilize;

pub use error::{MhdError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
