//! Coresets for linear classification by ℓ1 Lewis weight sampling.
//!
//! The library builds weighted subsamples ("coresets") of a labeled data
//! matrix such that the subsampled classification loss approximates the
//! full-data loss for every parameter vector. Rows are drawn with
//! probabilities proportional to a uniform mixture with their ℓ1 Lewis
//! weights; the resulting coreset carries `1/p_i` importance weights.
//!
//! Modules:
//! - [`linalg`]: dense QR, symmetric pseudoinverse, statistical leverage scores
//! - [`weights`]: ℓ1 Lewis weights and the sampling distributions built from them
//! - [`losses`]: hinge-like loss family, weighted loss/gradient, μ complexity estimate
//! - [`coreset`]: sampling-matrix draws and coreset quality measurement
//! - [`solve`]: limited-memory quasi-Newton minimizer and the relative-loss metric
//! - [`data`]: libsvm/CSV ingestion, synthetic generators, hard-instance generator
//! - [`bench`]: seeded multi-trial experiment harness with CSV/JSON/SVG reports

pub mod bench;
pub mod coreset;
pub mod data;
pub mod error;
pub mod linalg;
pub mod losses;
pub mod plot;
pub mod rng;
pub mod solve;
pub mod weights;

pub use error::{Error, Result};
