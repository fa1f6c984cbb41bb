//! File formats, artifacts and the command-line pipeline around
//! [`gridtensor_core`].
//!
//! * [`logs`]: CSV and JSON-lines message logs.
//! * [`coo`]: the text form of sparse tensors.
//! * [`artifacts`]: versioned JSON envelopes for builds, models, baselines,
//!   profiles and sweeps.
//! * [`output`]: score tables, curves and metrics.
//! * [`config`]: the TOML pipeline config.
//! * [`pipeline`]: the steps behind each command.
//! * [`experiment`]: the scaled synthetic replication.

pub mod artifacts;
pub mod config;
pub mod coo;
mod error;
pub mod experiment;
pub mod logs;
pub mod output;
pub mod pipeline;

pub use error::{Error, Result};
pub use gridtensor_core;
