//! PCA on one-hot message features, scored by subspace reconstruction
//! residual.
//!
//! Feature layout: one-hot blocks for rtu, points, channel and time bin, in
//! that order, each in encoder token order. Unseen tokens leave their block
//! all zero.

use alloc::vec;
use alloc::vec::Vec;

use crate::binning::TimeBinning;
use crate::encoding::EncoderSet;
use crate::linalg::symmetric_eigen;
use crate::record::{delta_times, MessageRecord};
use crate::schema::Mode;
use crate::scoring::{Outcome, Scorer};
use crate::{Error, Result};

pub const DEFAULT_VARIANCE_TARGET: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `k` orthonormal rows of length `mean.len()`.
    components: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
}

impl PcaModel {
    /// Fits from dense feature rows.
    pub fn fit_matrix(rows: &[Vec<f64>], variance_target: f64) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.len() < 2 || dim == 0 {
            return Err(Error::EmptyInput(
                "PCA needs at least two non-empty feature rows",
            ));
        }
        let mut sum = vec![0.0; dim];
        let mut outer = vec![0.0; dim * dim];
        for row in rows {
            if row.len() != dim {
                return Err(Error::InvalidShape(alloc::format!(
                    "feature row of length {} (expected {dim})",
                    row.len()
                )));
            }
            for (i, &a) in row.iter().enumerate() {
                sum[i] += a;
                if a != 0.0 {
                    for (j, &b) in row.iter().enumerate() {
                        outer[i * dim + j] += a * b;
                    }
                }
            }
        }
        Self::from_scatter(rows.len(), &sum, &outer, variance_target)
    }

    fn from_scatter(n: usize, sum: &[f64], outer: &[f64], variance_target: f64) -> Result<Self> {
        if !(variance_target > 0.0 && variance_target <= 1.0) {
            return Err(Error::InvalidOption(alloc::format!(
                "variance target {variance_target} not in (0, 1]"
            )));
        }
        let dim = sum.len();
        let nf = n as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                cov[i * dim + j] = (outer[i * dim + j] - nf * mean[i] * mean[j]) / (nf - 1.0);
            }
        }
        let (values, vectors) = symmetric_eigen(&cov, dim);
        let values: Vec<f64> = values.into_iter().map(|v| v.max(0.0)).collect();
        let total: f64 = values.iter().sum();
        let top = values.first().copied().unwrap_or(0.0);
        if total.is_nan() || total <= 1e-12 {
            return Err(Error::Degenerate("all feature rows are identical".into()));
        }
        let feature_rank = values.iter().filter(|&&v| v > 1e-10 * top).count();
        let mut k = 0;
        let mut acc = 0.0;
        while k < feature_rank && acc < variance_target * total * (1.0 - 1e-12) {
            acc += values[k];
            k += 1;
        }
        let k = k.max(1);
        Ok(Self {
            mean,
            components: vectors.into_iter().take(k).collect(),
            explained_variance: values.into_iter().take(k).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Squared norm of the centred vector outside the component subspace.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let centred: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        let norm: f64 = centred.iter().map(|v| v * v).sum();
        let projected: f64 = self
            .components
            .iter()
            .map(|c| {
                let d: f64 = c.iter().zip(&centred).map(|(a, b)| a * b).sum();
                d * d
            })
            .sum();
        (norm - projected).max(0.0)
    }
}

/// Maps the residual onto `(0, 1]` so lower means more anomalous.
pub fn pseudo_p(residual: f64) -> f64 {
    1.0 / (1.0 + residual)
}

/// Encoders and binning that define the one-hot layout.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureLayout {
    pub encoders: EncoderSet,
    pub binning: TimeBinning,
}

const BLOCKS: [Mode; 3] = [Mode::Rtu, Mode::Points, Mode::Channel];

impl FeatureLayout {
    pub fn new(encoders: EncoderSet, binning: TimeBinning) -> Result<Self> {
        for m in BLOCKS {
            encoders.require(m)?;
        }
        Ok(Self { encoders, binning })
    }

    pub fn dim(&self) -> usize {
        BLOCKS
            .iter()
            .map(|&m| self.encoders.get(m).map_or(0, |e| e.len()))
            .sum::<usize>()
            + self.binning.bin_count()
    }

    /// Positions of the hot features. Without an inter-arrival time the
    /// record is unscored (`None`) unless some field value is unseen, in
    /// which case the time block stays empty, as the tensor models score
    /// unseen values before checking the time.
    pub fn hot(&self, record: &MessageRecord, delta: Option<u64>) -> Option<Vec<usize>> {
        let mut hot = Vec::with_capacity(4);
        let mut unseen = false;
        let mut offset = 0;
        for m in BLOCKS {
            let enc = self.encoders.get(m)?;
            if let Some(token) = crate::encoding::token_of(record, m) {
                match enc.encode(&token) {
                    Some(i) => hot.push(offset + i),
                    None => unseen = true,
                }
            }
            offset += enc.len();
        }
        match delta {
            Some(d) => hot.push(offset + self.binning.bin_of(d)),
            None if unseen => {}
            None => return None,
        }
        Some(hot)
    }

    pub fn dense(&self, hot: &[usize]) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for &h in hot {
            x[h] = 1.0;
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PcaDetector {
    pub layout: FeatureLayout,
    pub model: PcaModel,
}

/// Fits PCA over one-hot features of the training records that have an
/// inter-arrival time.
pub fn pca_fit(
    records: &[MessageRecord],
    encoders: &EncoderSet,
    binning: &TimeBinning,
    variance_target: f64,
) -> Result<PcaDetector> {
    let layout = FeatureLayout::new(encoders.clone(), binning.clone())?;
    let dim = layout.dim();
    let mut sum = vec![0.0; dim];
    let mut outer = vec![0.0; dim * dim];
    let mut n = 0usize;
    for (record, delta) in records.iter().zip(delta_times(records)) {
        if delta.is_none() {
            continue;
        }
        let Some(hot) = layout.hot(record, delta) else {
            continue;
        };
        n += 1;
        for &i in &hot {
            sum[i] += 1.0;
            for &j in &hot {
                outer[i * dim + j] += 1.0;
            }
        }
    }
    if n < 2 {
        return Err(Error::EmptyInput(
            "PCA needs at least two training records with inter-arrival times",
        ));
    }
    let model = PcaModel::from_scatter(n, &sum, &outer, variance_target)?;
    Ok(PcaDetector { layout, model })
}

pub fn pca_score(
    detector: &PcaDetector,
    record: &MessageRecord,
    delta: Option<u64>,
) -> Result<(Option<Vec<usize>>, Outcome)> {
    record.validate()?;
    let Some(hot) = detector.layout.hot(record, delta) else {
        return Ok((None, Outcome::NoDelta));
    };
    let residual = detector.model.residual(&detector.layout.dense(&hot));
    Ok((
        Some(hot),
        Outcome::Residual {
            residual,
            p_value: pseudo_p(residual),
        },
    ))
}

impl Scorer for PcaDetector {
    fn score_record(
        &self,
        record: &MessageRecord,
        delta: Option<u64>,
    ) -> Result<(Option<Vec<usize>>, Outcome)> {
        pca_score(self, record, delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{build_tensor, TensorSchema};

    #[test]
    fn single_varying_feature() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![1.0, 0.0, 1.0, (i % 2) as f64])
            .collect();
        let m = PcaModel::fit_matrix(&rows, 0.95).unwrap();
        assert_eq!(m.k(), 1);
        let c = &m.components()[0];
        assert!((c[3].abs() - 1.0).abs() < 1e-12);
        assert!(c[..3].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn two_feature_analytic_eigenvectors() {
        // points (t, t) + (s, -s) with var(t) = 4 var(s): covariance [[a, b], [b, a]]
        let mut rows = Vec::new();
        for &t in &[-2.0, 2.0] {
            for &s in &[-1.0, 1.0] {
                rows.push(vec![t + s, t - s]);
            }
        }
        let m = PcaModel::fit_matrix(&rows, 1.0).unwrap();
        assert_eq!(m.k(), 2);
        // cov = [[20/3, 12/3], [12/3, 20/3]] -> eigenvalues 32/3, 8/3
        assert!((m.explained_variance()[0] - 32.0 / 3.0).abs() < 1e-9);
        assert!((m.explained_variance()[1] - 8.0 / 3.0).abs() < 1e-9);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let c0 = &m.components()[0];
        assert!((c0[0].abs() - h).abs() < 1e-6 && (c0[1].abs() - h).abs() < 1e-6);
        assert!(c0[0] * c0[1] > 0.0);
        let c1 = &m.components()[1];
        assert!(c1[0] * c1[1] < 0.0);
        let gram: f64 = c0.iter().zip(c1).map(|(a, b)| a * b).sum();
        assert!(gram.abs() < 1e-8);
    }

    #[test]
    fn full_rank_reconstructs_training_rows() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i % 3) as f64, (i % 4) as f64, ((i * 7) % 5) as f64])
            .collect();
        let m = PcaModel::fit_matrix(&rows, 1.0).unwrap();
        assert_eq!(m.k(), 3);
        for r in &rows {
            assert!(m.residual(r) < 1e-9);
        }
        assert_eq!(m.residual(m.mean()), 0.0);
        assert_eq!(pseudo_p(m.residual(m.mean())), 1.0);
    }

    #[test]
    fn in_subspace_scores_zero() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64, 2.0 * i as f64, 0.0])
            .collect();
        let m = PcaModel::fit_matrix(&rows, 0.95).unwrap();
        assert_eq!(m.k(), 1);
        assert!(m.residual(&[20.0, 40.0, 0.0]) < 1e-9);
        assert!(m.residual(&[20.0, 40.0, 1.0]) > 0.5);
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let rows = vec![vec![1.0, 0.0]; 5];
        assert!(matches!(
            PcaModel::fit_matrix(&rows, 0.95),
            Err(Error::Degenerate(_))
        ));
        assert!(PcaModel::fit_matrix(&rows[..1], 0.95).is_err());
    }

    fn detector() -> (PcaDetector, Vec<MessageRecord>) {
        let records: Vec<_> = (0..300u64)
            .map(|t| {
                let rtu = ["A", "B", "C"][(t % 3) as usize];
                MessageRecord::new(
                    t * 100 + (t % 7) * 13,
                    rtu,
                    4 + (t % 3) as u32 * 4,
                    ["X", "Y"][(t % 2) as usize],
                )
                .unwrap()
            })
            .collect();
        let built = build_tensor(&records, &TensorSchema::ipct(), None, None, 5).unwrap();
        let det = pca_fit(
            &records,
            &built.encoders,
            built.binning.as_ref().unwrap(),
            0.95,
        )
        .unwrap();
        (det, records)
    }

    #[test]
    fn oov_feature_scores_higher() {
        let (det, records) = detector();
        let r = &records[10];
        let mut odd = r.clone();
        odd.rtu_id = "UNSEEN".into();
        let (_, a) = pca_score(&det, r, Some(100)).unwrap();
        let (_, b) = pca_score(&det, &odd, Some(100)).unwrap();
        let (Outcome::Residual { residual: ra, .. }, Outcome::Residual { residual: rb, .. }) =
            (a, b)
        else {
            panic!("expected residual outcomes");
        };
        assert!(rb > ra);
        assert!(b.p_value().unwrap() < a.p_value().unwrap());
    }

    #[test]
    fn components_orthonormal() {
        let (det, _) = detector();
        let c = det.model.components();
        for i in 0..c.len() {
            for j in 0..c.len() {
                let g: f64 = c[i].iter().zip(&c[j]).map(|(a, b)| a * b).sum();
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
        let (_, first) =
            pca_score(&det, &MessageRecord::new(0, "A", 4, "X").unwrap(), None).unwrap();
        assert_eq!(first, Outcome::NoDelta);
    }

    #[test]
    fn unseen_first_message_is_scored() {
        let (det, _) = detector();
        let odd = MessageRecord::new(0, "UNSEEN", 4, "X").unwrap();
        let (_, outcome) = pca_score(&det, &odd, None).unwrap();
        let Outcome::Residual { residual, .. } = outcome else {
            panic!("expected a residual, got {outcome:?}");
        };
        let known = MessageRecord::new(0, "A", 4, "X").unwrap();
        let (_, seen) = pca_score(&det, &known, Some(100)).unwrap();
        assert!(residual > 0.0);
        assert!(outcome.p_value().unwrap() < seen.p_value().unwrap());
    }
}
