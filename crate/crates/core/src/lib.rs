//! Iterative trimming estimators for entangled single-sample distributions.
//!
//! Every sample comes from its own distribution; all distributions share a
//! common mean (or common regression coefficients) but their noise levels
//! differ and are unknown. The estimators here alternate between keeping the
//! `⌈αn⌉` samples with the smallest loss under the current iterate and refitting
//! on that subset:
//!
//! - [`trimmed_mean::itm`] re-averages the points closest to the current mean.
//! - [`trimmed_regression::itsm`] refits least squares on the rows with the
//!   smallest squared residuals.
//!
//! The crate also ships exhaustive-search references for the trimmed loss
//! ([`oracle`]), the noise-aware oracle baselines, seeded generators for the
//! synthetic benchmark settings ([`datagen`]), empirical bound checks
//! ([`diagnostics`]) and the experiment runner behind the `entest` binary
//! ([`cli`]).

pub mod cli;
pub mod common;
pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod trimmed_mean;
pub mod trimmed_regression;

pub use common::{
    select_lowest_loss, subset_size, AlphaRegime, IterateTrace, IterationRecord, RegressionData,
    SampleSet, Subset, TieBreak, TrimConfig,
};
pub use error::{Error, Result};
pub use linalg::{Matrix, SymmetricMatrix};
pub use trimmed_mean::{itm, MeanEstimate};
pub use trimmed_regression::{itsm, BetaEstimate, ItsmOptions};
