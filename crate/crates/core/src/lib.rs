//! Poisson CP decomposition (CP-APR) anomaly detection for SCADA-style
//! message streams.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the numerical
//! pipeline end to end:
//!
//! * [`tensor`]: sparse COO count tensors.
//! * [`record`], [`encoding`], [`binning`], [`schema`]: turning analog-scan
//!   messages into tensor coordinates.
//! * [`cpapr`]: the multiplicative-update Poisson CP fit, rate
//!   reconstruction and rank-1 fusion smoothing.
//! * [`scoring`]: Poisson tail p-values per message.
//! * [`baselines`]: KL-NMF and PCA comparison models.
//! * [`simulator`]: benign traffic generation and labeled attack injection.
//! * [`eval`]: ROC/PR curves, AUCs and the rank sweep.
//!
//! File formats, artifacts and the command-line front end live in the
//! `gridtensor` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod binning;
pub mod cpapr;
pub mod encoding;
mod error;
pub mod eval;
mod linalg;
pub mod record;
pub mod schema;
pub mod scoring;
pub mod simulator;
pub mod special;
pub mod tensor;

pub use error::{Error, Result};

pub use binning::TimeBinning;
pub use cpapr::{FitOptions, FitReport, KruskalModel, SmoothedModel};
pub use encoding::{DimensionEncoder, EncoderSet};
pub use eval::EvaluationReport;
pub use record::{Label, MessageRecord};
pub use schema::{Mode, SchemaKind, TensorSchema, ValueKind};
pub use scoring::{Outcome, ScoredMessage};
pub use tensor::SparseTensor;
