//! JSON artifacts. Every file is an envelope
//! `{"format_version": 1, "kind": ..., "payload": ...}`; loaders reject
//! other versions and kinds.

use std::fs;
use std::path::{Path, PathBuf};

use gridtensor_core::baselines::{NmfDetector, PcaDetector};
use gridtensor_core::eval::SweepResult;
use gridtensor_core::scoring::TensorDetector;
use gridtensor_core::simulator::SystemProfile;
use gridtensor_core::{EncoderSet, FitOptions, TensorSchema, TimeBinning};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub trait Artifact: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

/// What `build` produced: the tensor lives next to this file in COO text
/// form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildManifest {
    pub schema: TensorSchema,
    pub encoders: EncoderSet,
    pub binning: Option<TimeBinning>,
    pub target_bins: usize,
    pub tensor_file: PathBuf,
    /// The training log, as given on the command line.
    pub input: PathBuf,
    pub ingested: usize,
    pub skipped_first_occurrence: usize,
    pub out_of_vocabulary: usize,
}

impl Artifact for BuildManifest {
    const KIND: &'static str = "build";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub detector: TensorDetector,
    pub rank: usize,
    /// Final KL objective of the rank-R fit.
    pub objective: f64,
    pub fit_options: FitOptions,
    pub sweep: Option<SweepResult>,
}

impl Artifact for ModelArtifact {
    const KIND: &'static str = "model";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselinesArtifact {
    pub nmf_ixp: NmfDetector,
    pub nmf_ixc: NmfDetector,
    pub pca: PcaDetector,
}

impl Artifact for BaselinesArtifact {
    const KIND: &'static str = "baselines";
}

impl Artifact for SystemProfile {
    const KIND: &'static str = "profile";
}

impl Artifact for SweepResult {
    const KIND: &'static str = "sweep";
}

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    format_version: u32,
    kind: &'a str,
    payload: &'a T,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    format_version: u32,
    kind: String,
    payload: serde_json::Value,
}

pub fn to_json<T: Artifact>(value: &T) -> Result<String> {
    let env = EnvelopeOut {
        format_version: FORMAT_VERSION,
        kind: T::KIND,
        payload: value,
    };
    serde_json::to_string_pretty(&env)
        .map_err(|e| Error::Data(format!("serializing {}: {e}", T::KIND)))
}

pub fn from_json<T: Artifact>(text: &str, path: &Path) -> Result<T> {
    let bad = |message: String| Error::Artifact {
        path: path.to_path_buf(),
        message,
    };
    let env: EnvelopeIn =
        serde_json::from_str(text).map_err(|e| bad(format!("not an artifact: {e}")))?;
    if env.format_version != FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            env.format_version
        )));
    }
    if env.kind != T::KIND {
        return Err(bad(format!(
            "expected a {} artifact, found {}",
            T::KIND,
            env.kind
        )));
    }
    serde_json::from_value(env.payload)
        .map_err(|e| bad(format!("malformed {} payload: {e}", T::KIND)))
}

pub fn save<T: Artifact>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load<T: Artifact>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text, path)
}
