//! Density-adaptive binning of inter-arrival times.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Bins over `[0, +inf)` given by strictly increasing left edges. The first
/// edge is always 0 and the last bin is right-open.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeBinning {
    edges: Vec<u64>,
}

impl TimeBinning {
    pub fn from_edges(edges: Vec<u64>) -> Result<Self> {
        if edges.first() != Some(&0) {
            return Err(Error::InvalidOption(
                "time bin edges must start at 0".into(),
            ));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidOption(
                "time bin edges must be strictly increasing".into(),
            ));
        }
        Ok(Self { edges })
    }

    /// Equal-frequency bins: candidate edges sit at the empirical quantiles
    /// `k / target_bins`; duplicates, and edges that would leave the first
    /// bin empty, are merged away.
    pub fn fit(deltas: &[u64], target_bins: usize) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::EmptyInput("no inter-arrival times to bin"));
        }
        if target_bins == 0 {
            return Err(Error::InvalidOption(
                "target_bins must be at least 1".into(),
            ));
        }
        let mut sorted = deltas.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let mut edges = alloc::vec![0u64];
        for k in 1..target_bins {
            let pos = k * n / target_bins;
            let candidate = sorted[pos];
            if candidate > sorted[0] && candidate > *edges.last().unwrap_or(&0) {
                edges.push(candidate);
            }
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[u64] {
        &self.edges
    }

    pub fn bin_count(&self) -> usize {
        self.edges.len()
    }

    pub fn bin_of(&self, delta_ms: u64) -> usize {
        self.edges.partition_point(|&e| e <= delta_ms) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn degenerate_distribution_gives_one_bin() {
        let b = TimeBinning::fit(&[1000; 50], 10).unwrap();
        assert_eq!(b.bin_count(), 1);
        assert_eq!(b.bin_of(0), 0);
        assert_eq!(b.bin_of(u64::MAX), 0);
    }

    #[test]
    fn uniform_sample_splits_evenly() {
        let deltas: Vec<u64> = (1..=1000).collect();
        let b = TimeBinning::fit(&deltas, 10).unwrap();
        assert_eq!(b.bin_count(), 10);
        // oracle: count sample members per bin against the 10% quantile grid
        let mut counts = vec![0usize; 10];
        for &d in &deltas {
            counts[b.bin_of(d)] += 1;
        }
        for c in counts {
            assert!((90..=110).contains(&c), "bin holds {c}");
        }
    }

    #[test]
    fn empty_deltas_rejected() {
        assert!(TimeBinning::fit(&[], 4).is_err());
        assert!(TimeBinning::fit(&[1], 0).is_err());
    }

    #[test]
    fn from_edges_validates() {
        assert!(TimeBinning::from_edges(vec![0, 5, 5]).is_err());
        assert!(TimeBinning::from_edges(vec![1, 5]).is_err());
        let b = TimeBinning::from_edges(vec![0, 5, 10]).unwrap();
        assert_eq!(b.bin_of(4), 0);
        assert_eq!(b.bin_of(5), 1);
        assert_eq!(b.bin_of(10_000), 2);
    }

    proptest! {
        #[test]
        fn every_bin_nonempty_and_monotone(deltas in proptest::collection::vec(0u64..5000, 1..300), target in 1usize..40) {
            let b = TimeBinning::fit(&deltas, target).unwrap();
            prop_assert!(b.bin_count() >= 1 && b.bin_count() <= target);
            let mut counts = vec![0usize; b.bin_count()];
            for &d in &deltas {
                counts[b.bin_of(d)] += 1;
            }
            prop_assert!(counts.iter().all(|&c| c >= 1));
            let mut sorted = deltas.clone();
            sorted.sort_unstable();
            for w in sorted.windows(2) {
                prop_assert!(b.bin_of(w[0]) <= b.bin_of(w[1]));
            }
        }
    }
}
