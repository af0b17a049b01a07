//! Spectrum of the linearized generator and its adjoint, the unique
//! continuation (Gram) test, actuator selection and the Kalman rank check.

pub mod eigen;
pub mod space;
pub mod ucp;

pub use eigen::{adjoint_spectrum, compute_spectrum, match_conjugate, Cluster, EigenPair, SpectrumReport, Strategy};
pub use space::{ShiftedSolver, StateSpace};
pub use ucp::{kalman_rank, ClusterView, GRAM_THRESHOLD, select_actuators, ucp_gram_test, GramMatrix, KalmanMatrix};
