//! Controllability analysis for finite-dimensional quantum control systems.
//!
//! The crate decides full controllability of a set of Hamiltonian generators
//! (through the Lie-closure dimension and, independently, through the
//! commutant of the doubled generators), produces certified upper bounds and
//! a singular-value lower bound on the distance to the nearest uncontrollable
//! system, and turns those into lower bounds on the minimal control time.
//!
//! Propagators follow the convention `dU/dt = +i H(t) U`.

pub mod commutant;
pub mod distance;
pub mod error;
pub mod lie;
pub mod linalg;
pub mod models;
pub mod random;
pub mod reproduce;
pub mod speed_limit;
pub mod system;

pub use error::{QdistError, Result};
pub use linalg::{CMatrix, HermitianOperator, ToleranceConfig};
pub use system::ControlSystem;
