//! Gaussian-process bandit optimization with expected improvement.
//!
//! - [`optimizers`]: GP-EI, Improved-GP-EI on an adaptive cover, and a
//!   cover-based UCB baseline.
//! - [`testbed`]: synthetic RKHS targets, classic benchmarks, noisy oracle.
//! - [`bench`]: the experiment harness behind the `gpei` binary.

pub mod acquisition;
pub mod bench;
pub mod error;
pub mod gp;
pub mod kernels;
pub mod optimizers;
pub mod partition;
pub mod special;
pub mod testbed;

pub use acquisition::{ei_score, omega_at, tau, ucb_score, OmegaSchedule};
pub use error::{Error, Result};
pub use gp::{GpModel, Posterior};
pub use kernels::{KernelFamily, KernelSpec};
pub use optimizers::{Algorithm, RunConfig, RunTrace, TraceRow};
pub use partition::{Cell, Cover};
pub use testbed::{NoisyOracle, Objective, RkhsFunction, StandardFunction, StandardName};
