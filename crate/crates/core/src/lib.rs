//! Mahalanobis metric learning from proximity-comparison triplets.
//!
//! The learned matrix `X` is grown as a nonnegative combination of trace-one
//! rank-one matrices `ξξᵀ`. Each weak learner is the top eigenvector of the
//! dual-weighted constraint operator `Â = Σ u_r A_r`, its weight is found by a
//! bisection line search on the exponential loss, and the dual weights are
//! re-weighted exactly as in AdaBoost. The result is positive semidefinite by
//! construction, so no projection onto the PSD cone is ever needed.
//!
//! Modules:
//! - [`linalg`]: symmetric eigen kernels (iterative top eigenpair, dense EVD)
//! - [`constraints`]: datasets, triplet mining and factored constraint matrices
//! - [`boost`]: the trainer
//! - [`metric`]: the learned model, distances, projections and persistence
//! - [`eval`]: PCA, kNN, retrieval precision and experiment protocols
//! - [`datasets`]: file parsing, bundled benchmark sets, the circles generator
//! - [`cli`]: the command-line front end used by the `mahal-boost` binary

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boost;
pub mod cli;
pub mod constraints;
pub mod datasets;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod metric;

pub use boost::{train, TrainConfig, TrainReport};
pub use constraints::{generate_triplets, ConstraintFactors, Dataset, Triplet};
pub use error::{Error, Result};
pub use metric::MetricModel;
