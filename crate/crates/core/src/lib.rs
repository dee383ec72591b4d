//! Robust model-based clustering.
//!
//! The EM M-step of a mixture model is replaced by robust estimates: the
//! weighted geometric median for the centers and the weighted median
//! covariation matrix (MCM) for the scatter. The covariance used in the
//! E-step is rebuilt from the MCM by keeping its eigenvectors and solving a
//! Monte-Carlo fix-point equation for the eigenvalues.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `parallel` feature to
//! run restarts and model-selection sweeps on a rayon pool, and `serde` to
//! derive serialization for configuration and parameter types.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
// `!(x > 0.0)` is used on purpose so NaN is rejected; index loops are kept
// where several arrays are walked in step.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod location;
pub mod mixture;
pub mod recovery;
pub mod rng;
pub mod scatter;
pub mod simulation;
mod weiszfeld;

pub use data::{Dataset, Points};
pub use error::{Error, Result};
pub use linalg::{EigenPairs, SymMatrix};
pub use location::{asgd_median, weiszfeld_median, AsgdConfig, WeiszfeldConfig};
pub use mixture::{fit, select_k, Criterion, FitConfig, FitResult, MixtureParams, Responsibilities};
pub use recovery::{
    psi_u, recover_eigenvalues, robust_covariance, EmissionFamily, RecoveryConfig, RobustMoments, Solver,
};
pub use scatter::{asgd_median_mcm, weighted_mean_covariance, weiszfeld_mcm, McmEstimate};
