//! Benign traffic generation and labeled anomaly injection.
//!
//! A [`SystemProfile`] summarises historical traffic: which
//! `(rtu, points, channel)` triples occur and how often, and the
//! inter-arrival times of each RTU. Benign streams are resampled from it,
//! and anomalies are injected at three levels of adversary knowledge.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::record::{delta_times, Label, MessageRecord};
use crate::{Error, Result};

/// 2020-02-01T00:00:00Z, the default origin of generated streams.
pub const DEFAULT_START_MS: u64 = 1_580_515_200_000;

/// Resampling budget per injected anomaly.
const MAX_ATTEMPTS: usize = 100_000;

/// Used when no inter-arrival time was ever observed.
const FALLBACK_DELTA_MS: u64 = 1_000;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TripleCount {
    pub rtu_id: String,
    pub points_requested: u32,
    pub channel: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RtuProfile {
    pub rtu_id: String,
    pub messages: u64,
    /// Positive inter-arrival times observed for this RTU, in input order.
    pub delta_samples: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemProfile {
    /// Sorted by `(rtu_id, points_requested, channel)`.
    pub triples: Vec<TripleCount>,
    pub rtus: Vec<String>,
    pub points: Vec<u32>,
    pub channels: Vec<String>,
    /// Sorted by `rtu_id`, one entry per element of `rtus`.
    pub per_rtu: Vec<RtuProfile>,
}

impl SystemProfile {
    pub fn learn(records: &[MessageRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyInput("profile needs at least one record"));
        }
        let mut counts: BTreeMap<(&str, u32, &str), u64> = BTreeMap::new();
        let mut per_rtu: BTreeMap<&str, RtuProfile> = BTreeMap::new();
        let mut points = BTreeSet::new();
        let mut channels = BTreeSet::new();
        for (r, delta) in records.iter().zip(delta_times(records)) {
            r.validate()?;
            *counts
                .entry((&r.rtu_id, r.points_requested, &r.channel))
                .or_default() += 1;
            points.insert(r.points_requested);
            channels.insert(r.channel.clone());
            let entry = per_rtu.entry(&r.rtu_id).or_insert_with(|| RtuProfile {
                rtu_id: r.rtu_id.clone(),
                messages: 0,
                delta_samples: Vec::new(),
            });
            entry.messages += 1;
            if let Some(d) = delta.filter(|&d| d > 0) {
                entry.delta_samples.push(d);
            }
        }
        let triples = counts
            .into_iter()
            .map(|((rtu, points_requested, channel), count)| TripleCount {
                rtu_id: rtu.to_string(),
                points_requested,
                channel: channel.to_string(),
                count,
            })
            .collect();
        Ok(Self {
            triples,
            rtus: per_rtu.keys().map(|s| s.to_string()).collect(),
            points: points.into_iter().collect(),
            channels: channels.into_iter().collect(),
            per_rtu: per_rtu.into_values().collect(),
        })
    }

    pub fn contains_triple(&self, rtu_id: &str, points_requested: u32, channel: &str) -> bool {
        self.triples
            .binary_search_by(|t| {
                (t.rtu_id.as_str(), t.points_requested, t.channel.as_str()).cmp(&(
                    rtu_id,
                    points_requested,
                    channel,
                ))
            })
            .is_ok()
    }

    pub fn contains(&self, record: &MessageRecord) -> bool {
        self.contains_triple(&record.rtu_id, record.points_requested, &record.channel)
    }

    /// Distinct `(rtu, channel)` pairs in use, sorted.
    pub fn rtu_channel_pairs(&self) -> Vec<(&str, &str)> {
        let set: BTreeSet<(&str, &str)> = self
            .triples
            .iter()
            .map(|t| (t.rtu_id.as_str(), t.channel.as_str()))
            .collect();
        set.into_iter().collect()
    }

    pub fn total_messages(&self) -> u64 {
        self.triples.iter().map(|t| t.count).sum()
    }

    /// Fraction of all messages addressed to `rtu_id`.
    pub fn share(&self, rtu_id: &str) -> f64 {
        let total = self.total_messages();
        self.rtu(rtu_id)
            .map_or(0.0, |r| r.messages as f64 / total as f64)
    }

    pub fn rtu(&self, rtu_id: &str) -> Option<&RtuProfile> {
        self.per_rtu
            .binary_search_by(|r| r.rtu_id.as_str().cmp(rtu_id))
            .ok()
            .map(|i| &self.per_rtu[i])
    }
}

/// Convenience alias for [`SystemProfile::learn`].
pub fn learn_profile(records: &[MessageRecord]) -> Result<SystemProfile> {
    SystemProfile::learn(records)
}

/// Resamples `n` benign messages from `profile`.
///
/// Each message draws a triple from the empirical triple frequencies and
/// advances its RTU's clock by one of that RTU's observed inter-arrival
/// times. RTUs without samples borrow from the pooled samples. The result is
/// sorted by timestamp and labeled benign.
pub fn generate_benign(
    profile: &SystemProfile,
    n: usize,
    start_ms: u64,
    seed: u64,
) -> Result<Vec<MessageRecord>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let weights: Vec<u64> = profile.triples.iter().map(|t| t.count).collect();
    let picker = WeightedIndex::new(&weights)
        .map_err(|e| Error::InvalidOption(format!("profile has no usable triple weights: {e}")))?;
    let pooled: Vec<u64> = profile
        .per_rtu
        .iter()
        .flat_map(|r| r.delta_samples.iter().copied())
        .collect();
    let fallback = [FALLBACK_DELTA_MS];
    let samples_of = |rtu: &str| -> &[u64] {
        match profile.rtu(rtu) {
            Some(r) if !r.delta_samples.is_empty() => &r.delta_samples,
            _ if !pooled.is_empty() => &pooled,
            _ => &fallback,
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clocks: BTreeMap<&str, u64> = BTreeMap::new();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let t = &profile.triples[picker.sample(&mut rng)];
        let samples = samples_of(&t.rtu_id);
        let delta = *samples.choose(&mut rng).expect("non-empty sample set");
        let clock = clocks
            .entry(&t.rtu_id)
            .or_insert_with(|| start_ms + rng.random_range(0..delta));
        *clock += delta;
        out.push(MessageRecord {
            timestamp_ms: *clock,
            rtu_id: t.rtu_id.clone(),
            points_requested: t.points_requested,
            channel: t.channel.clone(),
            label: Some(Label::Benign),
        });
    }
    out.sort_by_key(|r| r.timestamp_ms);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Scenario {
    /// Fields drawn from the protocol's value ranges; channel from those in use.
    Blackbox,
    /// Each field drawn from its observed values, ignoring which combinations occur.
    Greybox1,
    /// A real `(rtu, channel)` pair with an observed but wrong points value.
    Greybox2,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Blackbox, Scenario::Greybox1, Scenario::Greybox2];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Blackbox => "blackbox",
            Scenario::Greybox1 => "greybox1",
            Scenario::Greybox2 => "greybox2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s.trim()))
    }
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValueRange {
    pub min: u32,
    pub max: u32,
}

impl ValueRange {
    pub const fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: u32) -> bool {
        (self.min..=self.max).contains(&v)
    }

    pub fn len(&self) -> u64 {
        if self.max < self.min {
            0
        } else {
            u64::from(self.max - self.min) + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub benign_messages: usize,
    pub anomalies: usize,
    /// Protocol address range for RTU ids, rendered as decimal tokens.
    pub rtu_range: ValueRange,
    pub points_range: ValueRange,
    pub start_ms: u64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Blackbox,
            benign_messages: 13_000,
            anomalies: 100,
            rtu_range: ValueRange::new(0, 255),
            points_range: ValueRange::new(1, 64),
            start_ms: DEFAULT_START_MS,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, benign_messages: usize, anomalies: usize, seed: u64) -> Self {
        Self {
            scenario,
            benign_messages,
            anomalies,
            seed,
            ..Self::default()
        }
    }

    /// Checks the counts, the ranges, and that the ranges cover the
    /// profile's observed values. Non-numeric RTU ids are outside any
    /// address range and are not checked.
    pub fn validate(&self, profile: &SystemProfile) -> Result<()> {
        if self.anomalies == 0 {
            return Err(Error::InvalidOption(
                "anomaly count must be at least 1".into(),
            ));
        }
        if self.anomalies >= self.benign_messages {
            return Err(Error::InvalidOption(format!(
                "anomaly count {} must be below the benign count {}",
                self.anomalies, self.benign_messages
            )));
        }
        if self.rtu_range.is_empty() || self.points_range.is_empty() {
            return Err(Error::InvalidOption(
                "protocol ranges must be non-empty".into(),
            ));
        }
        if self.points_range.min == 0 {
            return Err(Error::InvalidOption(
                "points range must start at 1 or above".into(),
            ));
        }
        if let Some(p) = profile
            .points
            .iter()
            .find(|&&p| !self.points_range.contains(p))
        {
            return Err(Error::InvalidOption(format!(
                "observed points value {p} lies outside the points range"
            )));
        }
        for rtu in &profile.rtus {
            if let Ok(v) = rtu.parse::<u32>() {
                if !self.rtu_range.contains(v) {
                    return Err(Error::InvalidOption(format!(
                        "observed RTU {rtu} lies outside the address range"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Number of triples an attacker could draw that are not in the profile.
fn out_of_profile_space(profile: &SystemProfile, config: &ScenarioConfig) -> u64 {
    let known = profile.triples.len() as u64;
    let candidates = match config.scenario {
        Scenario::Blackbox => {
            // observed triples with non-numeric or out-of-range RTUs cannot be drawn
            let drawable = profile
                .triples
                .iter()
                .filter(|t| {
                    t.rtu_id
                        .parse::<u32>()
                        .is_ok_and(|v| v.to_string() == t.rtu_id && config.rtu_range.contains(v))
                })
                .count() as u64;
            let space =
                config.rtu_range.len() * config.points_range.len() * profile.channels.len() as u64;
            return space - drawable;
        }
        Scenario::Greybox1 => {
            profile.rtus.len() as u64 * profile.points.len() as u64 * profile.channels.len() as u64
        }
        Scenario::Greybox2 => {
            profile.rtu_channel_pairs().len() as u64 * profile.points.len() as u64
        }
    };
    candidates - known
}

fn draw_fields(
    rng: &mut ChaCha8Rng,
    profile: &SystemProfile,
    pairs: &[(&str, &str)],
    config: &ScenarioConfig,
) -> (String, u32, String) {
    match config.scenario {
        Scenario::Blackbox => {
            let rtu = rng.random_range(config.rtu_range.min..=config.rtu_range.max);
            let p = rng.random_range(config.points_range.min..=config.points_range.max);
            let ch = profile.channels.choose(rng).expect("profile has channels");
            (rtu.to_string(), p, ch.clone())
        }
        Scenario::Greybox1 => {
            let rtu = profile.rtus.choose(rng).expect("profile has RTUs");
            let p = *profile.points.choose(rng).expect("profile has points");
            let ch = profile.channels.choose(rng).expect("profile has channels");
            (rtu.clone(), p, ch.clone())
        }
        Scenario::Greybox2 => {
            let &(rtu, ch) = pairs.choose(rng).expect("profile has pairs");
            let p = *profile.points.choose(rng).expect("profile has points");
            (rtu.to_string(), p, ch.to_string())
        }
    }
}

/// Adds `config.anomalies` labeled anomalies to `benign`.
///
/// Anomaly timestamps are uniform over the benign stream's time span, so
/// they carry no timing signal of their own. Every injected triple is
/// outside the profile; draws that land inside it are discarded and
/// redrawn. Unlabeled input records are labeled benign. The output is
/// stably sorted by timestamp.
pub fn inject_anomalies(
    benign: &[MessageRecord],
    profile: &SystemProfile,
    config: &ScenarioConfig,
) -> Result<Vec<MessageRecord>> {
    if config.anomalies == 0 {
        return Err(Error::InvalidOption(
            "anomaly count must be at least 1".into(),
        ));
    }
    if config.rtu_range.is_empty() || config.points_range.is_empty() {
        return Err(Error::InvalidOption(
            "protocol ranges must be non-empty".into(),
        ));
    }
    if out_of_profile_space(profile, config) == 0 {
        return Err(Error::Unsatisfiable(format!(
            "{}: every drawable triple already occurs in the profile",
            config.scenario.name()
        )));
    }
    let lo = benign
        .iter()
        .map(|r| r.timestamp_ms)
        .min()
        .unwrap_or(config.start_ms);
    let hi = benign
        .iter()
        .map(|r| r.timestamp_ms)
        .max()
        .unwrap_or(config.start_ms);
    let pairs = profile.rtu_channel_pairs();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut out: Vec<MessageRecord> = benign
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.label.get_or_insert(Label::Benign);
            r
        })
        .collect();
    out.reserve(config.anomalies);
    for _ in 0..config.anomalies {
        let mut drawn = None;
        for _ in 0..MAX_ATTEMPTS {
            let (rtu, p, ch) = draw_fields(&mut rng, profile, &pairs, config);
            if !profile.contains_triple(&rtu, p, &ch) {
                drawn = Some((rtu, p, ch));
                break;
            }
        }
        let (rtu_id, points_requested, channel) = drawn.ok_or_else(|| {
            Error::Unsatisfiable(format!(
                "{}: no out-of-profile triple after {MAX_ATTEMPTS} draws",
                config.scenario.name()
            ))
        })?;
        out.push(MessageRecord {
            timestamp_ms: rng.random_range(lo..=hi),
            rtu_id,
            points_requested,
            channel,
            label: Some(Label::Anomalous),
        });
    }
    out.sort_by_key(|r| r.timestamp_ms);
    Ok(out)
}

/// Benign resampling plus injection, as one labeled test stream.
pub fn simulate(profile: &SystemProfile, config: &ScenarioConfig) -> Result<Vec<MessageRecord>> {
    config.validate(profile)?;
    let benign = generate_benign(
        profile,
        config.benign_messages,
        config.start_ms,
        config.seed,
    )?;
    inject_anomalies(&benign, profile, config)
}

/// Shape of a synthetic plant used as stand-in historical traffic.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PlantConfig {
    pub rtus: usize,
    pub points_values: usize,
    pub channels: usize,
    /// Most point blocks any one RTU polls.
    pub max_blocks_per_rtu: usize,
    /// Chance that an RTU polls one more block than it needs to.
    pub extra_block_probability: f64,
    pub messages: usize,
    /// Polling period range per RTU, in milliseconds.
    pub period_ms: ValueRange,
    /// Spread of each inter-arrival time in log space: the period is scaled
    /// by `exp(u)` with `u` uniform on `[-jitter, jitter]`.
    pub jitter: f64,
    pub rtu_range: ValueRange,
    pub points_range: ValueRange,
    pub start_ms: u64,
    pub seed: u64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            rtus: 24,
            points_values: 22,
            channels: 9,
            max_blocks_per_rtu: 3,
            extra_block_probability: 0.1,
            messages: 20_000,
            period_ms: ValueRange::new(2_000, 30_000),
            jitter: 1.0,
            rtu_range: ValueRange::new(0, 255),
            points_range: ValueRange::new(1, 64),
            start_ms: DEFAULT_START_MS,
            seed: 0,
        }
    }
}

/// Historical traffic from a synthetic plant.
///
/// RTU ids are distinct decimal addresses from `rtu_range`. Each RTU sits
/// on one channel (every channel gets at least one RTU) and polls one to
/// `max_blocks_per_rtu` point blocks in rotation, with its own period and
/// log-uniform jitter. Every points value is used by some RTU, and most
/// RTUs poll a single block. Returns
/// exactly `messages` records sorted by timestamp, unlabeled.
pub fn synthetic_history(config: &PlantConfig) -> Result<Vec<MessageRecord>> {
    let bad = |m: &str| Err(Error::InvalidOption(m.into()));
    if config.rtus == 0
        || config.points_values == 0
        || config.channels == 0
        || config.max_blocks_per_rtu == 0
    {
        return bad("plant dimensions must be positive");
    }
    if config.channels > config.rtus {
        return bad("every channel needs at least one RTU");
    }
    if config.points_values > config.rtus * config.max_blocks_per_rtu {
        return bad("too many points values for the RTUs to poll");
    }
    if (config.rtu_range.len() as usize) < config.rtus
        || (config.points_range.len() as usize) < config.points_values
    {
        return bad("protocol ranges are too small for the plant");
    }
    if config.points_range.min == 0 || config.period_ms.is_empty() || config.period_ms.min == 0 {
        return bad("points and periods must be positive");
    }
    if !(0.0..=5.0).contains(&config.jitter)
        || !(0.0..=1.0).contains(&config.extra_block_probability)
    {
        return bad("jitter must lie in [0, 5] and the extra block probability in [0, 1]");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut addresses: Vec<u32> = (config.rtu_range.min..=config.rtu_range.max).collect();
    addresses.shuffle(&mut rng);
    let mut point_values: Vec<u32> = (config.points_range.min..=config.points_range.max).collect();
    point_values.shuffle(&mut rng);
    point_values.truncate(config.points_values);

    struct Rtu {
        id: String,
        channel: String,
        blocks: Vec<u32>,
        period: u64,
    }
    let mut rtus: Vec<Rtu> = addresses[..config.rtus]
        .iter()
        .enumerate()
        .map(|(i, a)| Rtu {
            id: a.to_string(),
            channel: format!("CH{}", i % config.channels + 1),
            blocks: Vec::new(),
            period: u64::from(rng.random_range(config.period_ms.min..=config.period_ms.max)),
        })
        .collect();
    // round-robin first so every points value is used, then top up at random
    for (k, &p) in point_values.iter().enumerate() {
        rtus[k % config.rtus].blocks.push(p);
    }
    for rtu in &mut rtus {
        let mut target = rtu.blocks.len().max(1);
        while target < config.max_blocks_per_rtu.min(point_values.len())
            && rng.random_bool(config.extra_block_probability)
        {
            target += 1;
        }
        while rtu.blocks.len() < target {
            let p = *point_values.choose(&mut rng).expect("non-empty");
            if !rtu.blocks.contains(&p) {
                rtu.blocks.push(p);
            }
        }
    }

    // run long enough that the expected total slightly exceeds the target
    // mean of exp(u), u ~ U[-j, j], is sinh(j) / j
    let stretch = if config.jitter > 0.0 {
        libm::sinh(config.jitter) / config.jitter
    } else {
        1.0
    };
    let rate: f64 = rtus.iter().map(|r| 1.0 / (r.period as f64 * stretch)).sum();
    let horizon =
        (config.messages as f64 * 1.1 / rate) as u64 + 2 * u64::from(config.period_ms.max);
    let mut out = Vec::new();
    for rtu in &rtus {
        let mut clock = config.start_ms + rng.random_range(0..rtu.period);
        let mut block = 0;
        while clock <= config.start_ms + horizon {
            out.push(MessageRecord {
                timestamp_ms: clock,
                rtu_id: rtu.id.clone(),
                points_requested: rtu.blocks[block],
                channel: rtu.channel.clone(),
                label: None,
            });
            block = (block + 1) % rtu.blocks.len();
            let scale = libm::exp(config.jitter * (2.0 * rng.random::<f64>() - 1.0));
            clock += ((rtu.period as f64 * scale) as u64).max(1);
        }
    }
    out.sort_by_key(|r| r.timestamp_ms);
    out.truncate(config.messages);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(t: u64, rtu: &str, points: u32, ch: &str) -> MessageRecord {
        MessageRecord::new(t, rtu, points, ch).unwrap()
    }

    fn plant() -> (Vec<MessageRecord>, SystemProfile) {
        let history = synthetic_history(&PlantConfig::default()).unwrap();
        let profile = SystemProfile::learn(&history).unwrap();
        (history, profile)
    }

    fn is_sorted(records: &[MessageRecord]) -> bool {
        records
            .windows(2)
            .all(|w| w[0].timestamp_ms <= w[1].timestamp_ms)
    }

    #[test]
    fn repeated_triple_is_one_profile_entry() {
        let p = SystemProfile::learn(&[rec(0, "A", 4, "C"), rec(500, "A", 4, "C")]).unwrap();
        assert_eq!(p.triples.len(), 1);
        assert_eq!(p.triples[0].count, 2);
        assert_eq!(p.per_rtu[0].delta_samples, vec![500]);
        assert!(p.contains_triple("A", 4, "C"));
        assert!(!p.contains_triple("A", 5, "C"));
    }

    #[test]
    fn empty_history_rejected() {
        assert!(matches!(
            SystemProfile::learn(&[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn plant_matches_requested_vocabulary() {
        let (history, profile) = plant();
        assert_eq!(history.len(), 20_000);
        assert!(is_sorted(&history));
        assert_eq!(profile.rtus.len(), 24);
        assert_eq!(profile.points.len(), 22);
        assert_eq!(profile.channels.len(), 9);
        for t in &profile.triples {
            assert!(profile.rtus.contains(&t.rtu_id));
            assert!(profile.points.contains(&t.points_requested));
            assert!(profile.channels.contains(&t.channel));
        }
        for r in &profile.per_rtu {
            assert!(!r.delta_samples.is_empty());
            assert!(r.delta_samples.iter().all(|&d| d > 0));
        }
        // one channel per RTU
        assert_eq!(profile.rtu_channel_pairs().len(), 24);
        assert_eq!(synthetic_history(&PlantConfig::default()).unwrap(), history);
    }

    #[test]
    fn plant_config_errors() {
        let c = PlantConfig {
            channels: 30,
            ..PlantConfig::default()
        };
        assert!(synthetic_history(&c).is_err());
        let c = PlantConfig {
            rtu_range: ValueRange::new(0, 10),
            ..PlantConfig::default()
        };
        assert!(synthetic_history(&c).is_err());
    }

    #[test]
    fn zero_benign_is_empty() {
        let (_, profile) = plant();
        assert!(generate_benign(&profile, 0, DEFAULT_START_MS, 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn benign_shares_track_profile() {
        let (_, profile) = plant();
        let n = 10_000;
        let stream = generate_benign(&profile, n, DEFAULT_START_MS, 11).unwrap();
        assert_eq!(stream.len(), n);
        assert!(is_sorted(&stream));
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &stream {
            assert!(profile.contains(r));
            assert_eq!(r.label, Some(Label::Benign));
            *counts.entry(&r.rtu_id).or_default() += 1;
        }
        for rtu in &profile.rtus {
            let got = counts.get(rtu.as_str()).copied().unwrap_or(0) as f64 / n as f64;
            assert!(
                (got - profile.share(rtu)).abs() <= 0.03,
                "{rtu}: {got} vs {}",
                profile.share(rtu)
            );
        }
        assert_eq!(
            generate_benign(&profile, n, DEFAULT_START_MS, 11).unwrap(),
            stream
        );
        assert_ne!(
            generate_benign(&profile, n, DEFAULT_START_MS, 12).unwrap(),
            stream
        );
    }

    #[test]
    fn benign_deltas_come_from_profile() {
        let (_, profile) = plant();
        let stream = generate_benign(&profile, 2_000, DEFAULT_START_MS, 3).unwrap();
        for (r, d) in stream.iter().zip(delta_times(&stream)) {
            if let Some(d) = d {
                assert!(profile.rtu(&r.rtu_id).unwrap().delta_samples.contains(&d));
            }
        }
    }

    fn check_stream(
        stream: &[MessageRecord],
        profile: &SystemProfile,
        config: &ScenarioConfig,
    ) -> Vec<MessageRecord> {
        assert_eq!(stream.len(), config.benign_messages + config.anomalies);
        assert!(is_sorted(stream));
        let anomalies: Vec<_> = stream
            .iter()
            .filter(|r| r.label == Some(Label::Anomalous))
            .cloned()
            .collect();
        assert_eq!(anomalies.len(), config.anomalies);
        for a in &anomalies {
            assert!(!profile.contains(a));
        }
        anomalies
    }

    #[test]
    fn blackbox_draws_protocol_values_and_known_channels() {
        let (_, profile) = plant();
        let config = ScenarioConfig::new(Scenario::Blackbox, 3_000, 200, 5);
        let stream = simulate(&profile, &config).unwrap();
        let anomalies = check_stream(&stream, &profile, &config);
        let benign: Vec<_> = stream
            .iter()
            .filter(|r| r.label == Some(Label::Benign))
            .collect();
        let (lo, hi) = (
            benign[0].timestamp_ms,
            benign[benign.len() - 1].timestamp_ms,
        );
        for a in &anomalies {
            assert!(config.rtu_range.contains(a.rtu_id.parse().unwrap()));
            assert!(config.points_range.contains(a.points_requested));
            assert!(profile.channels.contains(&a.channel));
            assert!((lo..=hi).contains(&a.timestamp_ms));
        }
        // most draws land outside the observed vocabulary
        let unseen = anomalies
            .iter()
            .filter(|a| !profile.rtus.contains(&a.rtu_id))
            .count();
        assert!(unseen > 150);
    }

    #[test]
    fn greybox1_uses_observed_values_only() {
        let (_, profile) = plant();
        let config = ScenarioConfig::new(Scenario::Greybox1, 3_000, 200, 6);
        let stream = simulate(&profile, &config).unwrap();
        for a in check_stream(&stream, &profile, &config) {
            assert!(profile.rtus.contains(&a.rtu_id));
            assert!(profile.points.contains(&a.points_requested));
            assert!(profile.channels.contains(&a.channel));
        }
    }

    #[test]
    fn greybox2_keeps_real_rtu_channel_pairs() {
        let (_, profile) = plant();
        let config = ScenarioConfig::new(Scenario::Greybox2, 3_000, 200, 7);
        let stream = simulate(&profile, &config).unwrap();
        let pairs = profile.rtu_channel_pairs();
        for a in check_stream(&stream, &profile, &config) {
            assert!(pairs.contains(&(a.rtu_id.as_str(), a.channel.as_str())));
            assert!(profile.points.contains(&a.points_requested));
        }
    }

    #[test]
    fn table_scale_counts_are_exact() {
        let (_, profile) = plant();
        for (scenario, total, anomalous) in [
            (Scenario::Blackbox, 130_029, 1_009),
            (Scenario::Greybox1, 129_873, 1_000),
        ] {
            let config = ScenarioConfig::new(scenario, total - anomalous, anomalous, 1);
            let stream = simulate(&profile, &config).unwrap();
            assert_eq!(stream.len(), total);
            let n = stream
                .iter()
                .filter(|r| r.label == Some(Label::Anomalous))
                .count();
            assert_eq!(n, anomalous);
        }
    }

    #[test]
    fn unsatisfiable_scenarios_error() {
        // both RTUs already use every observed points/channel combination
        let full = vec![
            rec(0, "1", 4, "C"),
            rec(1, "2", 4, "C"),
            rec(2, "1", 8, "C"),
            rec(3, "2", 8, "C"),
        ];
        let profile = SystemProfile::learn(&full).unwrap();
        for scenario in [Scenario::Greybox1, Scenario::Greybox2] {
            let config = ScenarioConfig::new(scenario, 10, 1, 0);
            let benign = generate_benign(&profile, 10, DEFAULT_START_MS, 0).unwrap();
            assert!(matches!(
                inject_anomalies(&benign, &profile, &config),
                Err(Error::Unsatisfiable(_))
            ));
        }
        let config = ScenarioConfig {
            rtu_range: ValueRange::new(1, 2),
            points_range: ValueRange::new(4, 4),
            ..ScenarioConfig::new(Scenario::Blackbox, 10, 1, 0)
        };
        let tiny = SystemProfile::learn(&full[..2]).unwrap();
        assert!(matches!(
            inject_anomalies(&[], &tiny, &config),
            Err(Error::Unsatisfiable(_))
        ));
    }

    #[test]
    fn config_validation() {
        let (_, profile) = plant();
        let mut c = ScenarioConfig::new(Scenario::Blackbox, 100, 100, 0);
        assert!(c.validate(&profile).is_err());
        c.anomalies = 0;
        assert!(c.validate(&profile).is_err());
        c.anomalies = 10;
        assert!(c.validate(&profile).is_ok());
        c.points_range = ValueRange::new(1, 2);
        assert!(c.validate(&profile).is_err());
        c.points_range = ValueRange::new(5, 1);
        assert!(c.validate(&profile).is_err());
    }

    #[test]
    fn unlabeled_input_is_labeled_benign() {
        let (history, profile) = plant();
        let config = ScenarioConfig::new(Scenario::Greybox1, 500, 5, 2);
        let out = inject_anomalies(&history[..500], &profile, &config).unwrap();
        assert!(out.iter().all(|r| r.label.is_some()));
        assert_eq!(
            inject_anomalies(&history[..500], &profile, &config).unwrap(),
            out
        );
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::parse(s.name()), Some(s));
        }
        assert_eq!(Scenario::parse("whitebox"), None);
    }
}
