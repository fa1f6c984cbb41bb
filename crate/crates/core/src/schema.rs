//! Tensor layouts over message fields and tensor construction.

use alloc::format;
use alloc::vec::Vec;

use crate::binning::TimeBinning;
use crate::encoding::EncoderSet;
use crate::record::{delta_times, MessageRecord};
use crate::tensor::SparseTensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    Rtu,
    Points,
    Channel,
    DeltaTime,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Rtu => "rtu",
            Mode::Points => "points",
            Mode::Channel => "channel",
            Mode::DeltaTime => "delta_time",
        }
    }

    pub fn is_categorical(self) -> bool {
        self != Mode::DeltaTime
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ValueKind {
    Count,
    Binary,
}

/// Named layouts. `RtuPoints` and `RtuChannel` are the matrix layouts used
/// by the NMF baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SchemaKind {
    #[cfg_attr(feature = "serde", serde(rename = "IPT"))]
    Ipt,
    #[cfg_attr(feature = "serde", serde(rename = "IPCT"))]
    Ipct,
    #[cfg_attr(feature = "serde", serde(rename = "IPC"))]
    Ipc,
    #[cfg_attr(feature = "serde", serde(rename = "IxP"))]
    RtuPoints,
    #[cfg_attr(feature = "serde", serde(rename = "IxC"))]
    RtuChannel,
}

impl SchemaKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemaKind::Ipt => "IPT",
            SchemaKind::Ipct => "IPCT",
            SchemaKind::Ipc => "IPC",
            SchemaKind::RtuPoints => "IxP",
            SchemaKind::RtuChannel => "IxC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "IPT" => Some(SchemaKind::Ipt),
            "IPCT" => Some(SchemaKind::Ipct),
            "IPC" => Some(SchemaKind::Ipc),
            "IXP" => Some(SchemaKind::RtuPoints),
            "IXC" => Some(SchemaKind::RtuChannel),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TensorSchema {
    pub kind: SchemaKind,
    pub modes: Vec<Mode>,
    pub value: ValueKind,
}

impl TensorSchema {
    pub fn new(kind: SchemaKind) -> Self {
        use Mode::*;
        let (modes, value) = match kind {
            SchemaKind::Ipt => (alloc::vec![Rtu, Points, DeltaTime], ValueKind::Count),
            SchemaKind::Ipct => (
                alloc::vec![Rtu, Points, Channel, DeltaTime],
                ValueKind::Count,
            ),
            SchemaKind::Ipc => (alloc::vec![Rtu, Points, Channel], ValueKind::Binary),
            SchemaKind::RtuPoints => (alloc::vec![Rtu, Points], ValueKind::Binary),
            SchemaKind::RtuChannel => (alloc::vec![Rtu, Channel], ValueKind::Binary),
        };
        Self { kind, modes, value }
    }

    pub fn ipt() -> Self {
        Self::new(SchemaKind::Ipt)
    }

    pub fn ipct() -> Self {
        Self::new(SchemaKind::Ipct)
    }

    pub fn ipc() -> Self {
        Self::new(SchemaKind::Ipc)
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn has_time(&self) -> bool {
        self.modes.contains(&Mode::DeltaTime)
    }

    /// Tensor shape implied by fitted encoders and binning.
    pub fn shape(
        &self,
        encoders: &EncoderSet,
        binning: Option<&TimeBinning>,
    ) -> Result<Vec<usize>> {
        self.modes
            .iter()
            .map(|&m| match m {
                Mode::DeltaTime => binning.map(TimeBinning::bin_count).ok_or_else(|| {
                    Error::SchemaMismatch(format!("schema {} needs a time binning", self.name()))
                }),
                m => encoders.require(m).map(|e| e.len()),
            })
            .collect()
    }
}

/// Where one record lands in a schema's index space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Encoded {
    Index(Vec<usize>),
    OutOfVocabulary,
    /// Time-bearing schema, but this is the first message seen for its RTU.
    NoDelta,
}

/// Vocabulary is checked before the time mode, so an unseen token is
/// reported even for an RTU's first message.
pub fn encode(
    schema: &TensorSchema,
    encoders: &EncoderSet,
    binning: Option<&TimeBinning>,
    record: &MessageRecord,
    delta: Option<u64>,
) -> Result<Encoded> {
    let Some(partial) = encoders.encode_record(record, &schema.modes)? else {
        return Ok(Encoded::OutOfVocabulary);
    };
    let mut index = Vec::with_capacity(partial.len());
    for (slot, &mode) in partial.into_iter().zip(&schema.modes) {
        match slot {
            Some(i) => index.push(i),
            None => {
                debug_assert_eq!(mode, Mode::DeltaTime);
                let Some(delta) = delta else {
                    return Ok(Encoded::NoDelta);
                };
                let binning = binning.ok_or_else(|| {
                    Error::SchemaMismatch(format!("schema {} needs a time binning", schema.name()))
                })?;
                index.push(binning.bin_of(delta));
            }
        }
    }
    Ok(Encoded::Index(index))
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub tensor: SparseTensor,
    pub encoders: EncoderSet,
    pub binning: Option<TimeBinning>,
    /// Records that entered the tensor.
    pub ingested: usize,
    /// First-occurrence records excluded from a time-bearing tensor.
    pub skipped_first_occurrence: usize,
    /// Input positions of records carrying tokens unseen by the supplied
    /// encoders.
    pub out_of_vocabulary: Vec<usize>,
}

/// Accumulates `records` into a tensor under `schema`.
///
/// Without `encoders` the vocabulary is fitted from the records that enter
/// the tensor, so every slice of the result holds a nonzero. Without
/// `binning` a time-bearing schema fits `target_bins` quantile bins.
pub fn build_tensor(
    records: &[MessageRecord],
    schema: &TensorSchema,
    encoders: Option<&EncoderSet>,
    binning: Option<&TimeBinning>,
    target_bins: usize,
) -> Result<BuildOutput> {
    let deltas = delta_times(records);
    let time = schema.has_time();
    let eligible: Vec<usize> = (0..records.len())
        .filter(|&i| !time || deltas[i].is_some())
        .collect();

    let encoders = match encoders {
        Some(e) => e.clone(),
        None => EncoderSet::fit(&schema.modes, eligible.iter().map(|&i| &records[i]))?,
    };
    let binning = match (time, binning) {
        (false, _) => None,
        (true, Some(b)) => Some(b.clone()),
        (true, None) => {
            let ds: Vec<u64> = eligible.iter().filter_map(|&i| deltas[i]).collect();
            Some(TimeBinning::fit(&ds, target_bins)?)
        }
    };
    let shape = schema.shape(&encoders, binning.as_ref())?;

    let mut entries = Vec::with_capacity(records.len());
    let mut skipped = 0;
    let mut oov = Vec::new();
    for (i, record) in records.iter().enumerate() {
        match encode(schema, &encoders, binning.as_ref(), record, deltas[i])? {
            Encoded::Index(idx) => entries.push((idx, 1.0)),
            Encoded::OutOfVocabulary => oov.push(i),
            Encoded::NoDelta => skipped += 1,
        }
    }
    let ingested = entries.len();
    let mut tensor = SparseTensor::from_entries(&shape, entries)?;
    if schema.value == ValueKind::Binary {
        tensor = tensor.to_binary();
        if tensor.nnz() > 0 {
            tensor = tensor.inflate_binary()?;
        }
    }
    Ok(BuildOutput {
        tensor,
        encoders,
        binning,
        ingested,
        skipped_first_occurrence: skipped,
        out_of_vocabulary: oov,
    })
}
