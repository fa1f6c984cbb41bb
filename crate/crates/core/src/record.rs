//! Analog-scan request records and per-RTU inter-arrival times.

use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Label {
    Benign,
    Anomalous,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Anomalous => "anomalous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "benign" => Some(Label::Benign),
            "anomalous" => Some(Label::Anomalous),
            _ => None,
        }
    }

    pub fn is_anomalous(self) -> bool {
        self == Label::Anomalous
    }
}

/// One SCADA analog-scan request.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MessageRecord {
    pub timestamp_ms: u64,
    pub rtu_id: String,
    pub points_requested: u32,
    pub channel: String,
    pub label: Option<Label>,
}

impl MessageRecord {
    pub fn new(
        timestamp_ms: u64,
        rtu_id: impl Into<String>,
        points_requested: u32,
        channel: impl Into<String>,
    ) -> Result<Self> {
        let record = Self {
            timestamp_ms,
            rtu_id: rtu_id.into(),
            points_requested,
            channel: channel.into(),
            label: None,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_requested < 1 {
            return Err(Error::InvalidRecord(
                "points_requested must be at least 1".into(),
            ));
        }
        if self.rtu_id.is_empty() {
            return Err(Error::InvalidRecord("rtu_id is empty".into()));
        }
        if self.channel.is_empty() {
            return Err(Error::InvalidRecord("channel is empty".into()));
        }
        Ok(())
    }
}

/// Stable permutation that orders `records` by timestamp.
pub fn timestamp_order(records: &[MessageRecord]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| records[i].timestamp_ms);
    order
}

/// Milliseconds since the previous message to the same RTU, aligned with
/// the input order. The first message per RTU gets `None`.
pub fn delta_times(records: &[MessageRecord]) -> Vec<Option<u64>> {
    let mut last: alloc::collections::BTreeMap<&str, u64> = Default::default();
    let mut out = alloc::vec![None; records.len()];
    for i in timestamp_order(records) {
        let r = &records[i];
        out[i] = last
            .insert(r.rtu_id.as_str(), r.timestamp_ms)
            .map(|prev| r.timestamp_ms - prev);
    }
    out
}

/// Sorts records by timestamp (stable) and pairs each with its per-RTU
/// inter-arrival time.
pub fn compute_delta_times(records: &[MessageRecord]) -> Vec<(MessageRecord, Option<u64>)> {
    let deltas = delta_times(records);
    timestamp_order(records)
        .into_iter()
        .map(|i| (records[i].clone(), deltas[i]))
        .collect()
}
