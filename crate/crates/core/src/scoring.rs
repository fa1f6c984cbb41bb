//! Per-message anomaly scores. Lower p-value means more anomalous.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::binning::TimeBinning;
use crate::cpapr::SmoothedModel;
use crate::encoding::EncoderSet;
use crate::record::{delta_times, MessageRecord};
use crate::schema::{encode, Encoded, TensorSchema};
use crate::special::poisson_tail;
use crate::{Error, Result};

/// Count tested for every message: each message is one new occurrence.
pub const TESTED_COUNT: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Outcome {
    /// Poisson tail under a fitted rate.
    Scored { rate: f64, p_value: f64 },
    /// Subspace residual with its pseudo p-value `1 / (1 + residual)`.
    Residual { residual: f64, p_value: f64 },
    /// A field value never seen in training. Scored as p = 0.
    OutOfVocabulary,
    /// First message to its RTU under a time-bearing model; not scored.
    NoDelta,
}

impl Outcome {
    pub fn p_value(&self) -> Option<f64> {
        match *self {
            Outcome::Scored { p_value, .. } | Outcome::Residual { p_value, .. } => Some(p_value),
            Outcome::OutOfVocabulary => Some(0.0),
            Outcome::NoDelta => None,
        }
    }

    pub fn is_oov(&self) -> bool {
        matches!(self, Outcome::OutOfVocabulary)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMessage {
    /// Position in the scored input.
    pub row: usize,
    pub record: MessageRecord,
    pub index: Option<Vec<usize>>,
    pub outcome: Outcome,
}

impl ScoredMessage {
    pub fn p_value(&self) -> Option<f64> {
        self.outcome.p_value()
    }
}

/// Anything that turns a record (plus its per-RTU inter-arrival time) into
/// an outcome.
pub trait Scorer {
    fn score_record(
        &self,
        record: &MessageRecord,
        delta: Option<u64>,
    ) -> Result<(Option<Vec<usize>>, Outcome)>;
}

/// A fused tensor model together with the encoders and binning it was
/// trained with.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TensorDetector {
    pub schema: TensorSchema,
    pub model: SmoothedModel,
    pub encoders: EncoderSet,
    pub binning: Option<TimeBinning>,
}

impl TensorDetector {
    pub fn new(
        schema: TensorSchema,
        model: SmoothedModel,
        encoders: EncoderSet,
        binning: Option<TimeBinning>,
    ) -> Result<Self> {
        let shape = schema.shape(&encoders, binning.as_ref())?;
        if shape != model.shape() {
            return Err(Error::ShapeMismatch {
                left: shape,
                right: model.shape(),
            });
        }
        Ok(Self {
            schema,
            model,
            encoders,
            binning,
        })
    }
}

impl Scorer for TensorDetector {
    fn score_record(
        &self,
        record: &MessageRecord,
        delta: Option<u64>,
    ) -> Result<(Option<Vec<usize>>, Outcome)> {
        score_message(
            &self.model,
            &self.schema,
            &self.encoders,
            self.binning.as_ref(),
            record,
            delta,
        )
    }
}

pub fn score_message(
    model: &SmoothedModel,
    schema: &TensorSchema,
    encoders: &EncoderSet,
    binning: Option<&TimeBinning>,
    record: &MessageRecord,
    delta: Option<u64>,
) -> Result<(Option<Vec<usize>>, Outcome)> {
    record.validate()?;
    match encode(schema, encoders, binning, record, delta)? {
        Encoded::OutOfVocabulary => Ok((None, Outcome::OutOfVocabulary)),
        Encoded::NoDelta => Ok((None, Outcome::NoDelta)),
        Encoded::Index(index) => {
            let rate = model.rate(&index)?;
            let p_value = poisson_tail(TESTED_COUNT, rate)?;
            Ok((Some(index), Outcome::Scored { rate, p_value }))
        }
    }
}

/// Scores every record, computing inter-arrival times within `records`.
/// Output order matches input order.
pub fn score_batch<S: Scorer + ?Sized>(
    scorer: &S,
    records: &[MessageRecord],
) -> Result<Vec<ScoredMessage>> {
    let deltas = delta_times(records);
    records
        .iter()
        .zip(deltas)
        .enumerate()
        .map(|(row, (record, delta))| {
            let (index, outcome) =
                scorer
                    .score_record(record, delta)
                    .map_err(|e| Error::AtRecord {
                        index: row,
                        source: Box::new(e),
                    })?;
            Ok(ScoredMessage {
                row,
                record: record.clone(),
                index,
                outcome,
            })
        })
        .collect()
}

/// `(p_value, is_anomalous)` pairs for labeled, scored messages.
pub fn labeled_scores(scored: &[ScoredMessage]) -> Vec<(f64, bool)> {
    scored
        .iter()
        .filter_map(|s| Some((s.p_value()?, s.record.label?.is_anomalous())))
        .collect()
}
