//! Categorical dimension encoders fitted on training records.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::record::MessageRecord;
use crate::schema::Mode;
use crate::{Error, Result};

/// Bijection between the distinct training tokens of one mode and
/// `0..len()`.
///
/// Tokens are ordered numerically when every token is a decimal integer
/// and lexicographically otherwise, so the layout never depends on record
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "EncoderRepr", into = "EncoderRepr"))]
pub struct DimensionEncoder {
    mode: Mode,
    tokens: Vec<String>,
    lookup: BTreeMap<String, usize>,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct EncoderRepr {
    mode: Mode,
    tokens: Vec<String>,
}

#[cfg(feature = "serde")]
impl From<EncoderRepr> for DimensionEncoder {
    fn from(r: EncoderRepr) -> Self {
        Self::from_ordered(r.mode, r.tokens)
    }
}

#[cfg(feature = "serde")]
impl From<DimensionEncoder> for EncoderRepr {
    fn from(e: DimensionEncoder) -> Self {
        EncoderRepr {
            mode: e.mode,
            tokens: e.tokens,
        }
    }
}

impl DimensionEncoder {
    pub fn fit<I, S>(mode: Mode, tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let distinct: BTreeSet<String> =
            tokens.into_iter().map(|s| s.as_ref().to_string()).collect();
        if distinct.is_empty() {
            return Err(Error::EmptyInput("no tokens to encode"));
        }
        let mut tokens: Vec<String> = distinct.into_iter().collect();
        if tokens.iter().all(|t| t.parse::<u64>().is_ok()) {
            tokens.sort_by_key(|t| t.parse::<u64>().unwrap_or(0));
        }
        Ok(Self::from_ordered(mode, tokens))
    }

    /// Uses `tokens` in the given order. Later duplicates are ignored.
    pub fn from_ordered(mode: Mode, tokens: Vec<String>) -> Self {
        let mut lookup = BTreeMap::new();
        let mut kept = Vec::with_capacity(tokens.len());
        for t in tokens {
            if !lookup.contains_key(&t) {
                lookup.insert(t.clone(), kept.len());
                kept.push(t);
            }
        }
        Self {
            mode,
            tokens: kept,
            lookup,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, token: &str) -> Option<usize> {
        self.lookup.get(token).copied()
    }

    pub fn decode(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }
}

/// The categorical field of `record` that feeds `mode`. Returns `None` for
/// the time mode.
pub fn token_of(record: &MessageRecord, mode: Mode) -> Option<String> {
    match mode {
        Mode::Rtu => Some(record.rtu_id.clone()),
        Mode::Points => Some(record.points_requested.to_string()),
        Mode::Channel => Some(record.channel.clone()),
        Mode::DeltaTime => None,
    }
}

/// Encoders for the categorical modes of one schema, in schema order.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EncoderSet {
    encoders: Vec<DimensionEncoder>,
}

impl EncoderSet {
    pub fn new(encoders: Vec<DimensionEncoder>) -> Self {
        Self { encoders }
    }

    /// Fits one encoder per categorical mode in `modes` from `records`.
    pub fn fit<'a, I>(modes: &[Mode], records: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a MessageRecord> + Clone,
    {
        let mut encoders = Vec::new();
        for &mode in modes.iter().filter(|m| m.is_categorical()) {
            let tokens = records
                .clone()
                .into_iter()
                .filter_map(|r| token_of(r, mode));
            encoders.push(DimensionEncoder::fit(mode, tokens)?);
        }
        Ok(Self { encoders })
    }

    pub fn get(&self, mode: Mode) -> Option<&DimensionEncoder> {
        self.encoders.iter().find(|e| e.mode() == mode)
    }

    pub fn require(&self, mode: Mode) -> Result<&DimensionEncoder> {
        self.get(mode)
            .ok_or_else(|| Error::SchemaMismatch(format!("no encoder for mode {}", mode.name())))
    }

    pub fn encoders(&self) -> &[DimensionEncoder] {
        &self.encoders
    }

    /// Encodes the categorical fields of `record` for `modes`. `Ok(None)`
    /// means at least one token was never seen in training.
    pub fn encode_record(
        &self,
        record: &MessageRecord,
        modes: &[Mode],
    ) -> Result<Option<Vec<Option<usize>>>> {
        let mut out = Vec::with_capacity(modes.len());
        for &mode in modes {
            match token_of(record, mode) {
                Some(token) => match self.require(mode)?.encode(&token) {
                    Some(i) => out.push(Some(i)),
                    None => return Ok(None),
                },
                None => out.push(None),
            }
        }
        Ok(Some(out))
    }
}
