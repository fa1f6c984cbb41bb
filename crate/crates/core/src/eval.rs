//! ROC and precision-recall evaluation of p-value scores, and rank
//! selection by validation PR AUC.
//!
//! Lower p-values rank as more anomalous. Thresholds are swept over the
//! distinct p-values; tied scores move as one block, which gives ties half
//! credit in the ROC area. PR AUC uses the step (average precision) rule.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::binning::TimeBinning;
use crate::cpapr::{fit, fit_with_report, fuse, FitOptions};
use crate::encoding::EncoderSet;
use crate::record::{delta_times, MessageRecord};
use crate::schema::{encode, Encoded, TensorSchema};
use crate::scoring::TESTED_COUNT;
use crate::special::poisson_tail;
use crate::tensor::SparseTensor;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationReport {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub roc: Vec<(f64, f64)>,
    /// `(recall, precision)`, one point per distinct threshold.
    pub pr: Vec<(f64, f64)>,
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub anomalies: usize,
    pub benign: usize,
}

/// Builds ROC and PR curves from `(p_value, is_anomalous)` pairs.
pub fn roc_pr(scores: &[(f64, bool)]) -> Result<EvaluationReport> {
    let positives = scores.iter().filter(|s| s.1).count();
    let negatives = scores.len() - positives;
    if positives == 0 {
        return Err(Error::SingleClass("anomalous"));
    }
    if negatives == 0 {
        return Err(Error::SingleClass("benign"));
    }
    if let Some(&(p, _)) = scores.iter().find(|s| s.0.is_nan()) {
        return Err(Error::InvalidOption(alloc::format!(
            "score {p} is not a number"
        )));
    }

    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (pos, neg) = (positives as f64, negatives as f64);
    let mut roc = alloc::vec![(0.0, 0.0)];
    let mut pr = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut roc_auc, mut pr_auc) = (0.0, 0.0);
    let (mut prev_fpr, mut prev_tpr) = (0.0, 0.0);

    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let tpr = tp as f64 / pos;
        let fpr = fp as f64 / neg;
        roc_auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        let precision = tp as f64 / (tp + fp) as f64;
        pr_auc += (tpr - prev_tpr) * precision;
        roc.push((fpr, tpr));
        pr.push((tpr, precision));
        prev_fpr = fpr;
        prev_tpr = tpr;
    }

    Ok(EvaluationReport {
        roc,
        pr,
        roc_auc: roc_auc.clamp(0.0, 1.0),
        pr_auc: pr_auc.clamp(0.0, 1.0),
        anomalies: positives,
        benign: negatives,
    })
}

/// `{1..=50} ∪ {55, 60, .., 100}`.
pub fn default_rank_grid() -> Vec<usize> {
    (1..=50).chain((55..=100).step_by(5)).collect()
}

/// One validation message in encoded form; `index: None` marks an
/// out-of-vocabulary message, which always scores p = 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationItem {
    pub index: Option<Vec<usize>>,
    pub anomalous: bool,
}

/// Encodes a labeled stream for [`rank_sweep`]. First messages without an
/// inter-arrival time are dropped under time-bearing schemas, matching how
/// they are left unscored.
pub fn validation_items(
    schema: &TensorSchema,
    encoders: &EncoderSet,
    binning: Option<&TimeBinning>,
    records: &[MessageRecord],
) -> Result<Vec<ValidationItem>> {
    let mut items = Vec::with_capacity(records.len());
    for (i, (record, delta)) in records.iter().zip(delta_times(records)).enumerate() {
        let at = |e| Error::AtRecord {
            index: i,
            source: Box::new(e),
        };
        let label = record.label.ok_or_else(|| {
            at(Error::InvalidRecord(
                "validation records must be labeled".into(),
            ))
        })?;
        let index = match encode(schema, encoders, binning, record, delta).map_err(at)? {
            Encoded::Index(idx) => Some(idx),
            Encoded::OutOfVocabulary => None,
            Encoded::NoDelta => continue,
        };
        items.push(ValidationItem {
            index,
            anomalous: label.is_anomalous(),
        });
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepResult {
    pub best_rank: usize,
    pub best_pr_auc: f64,
    /// `(rank, pr_auc, final objective)` in grid order.
    pub per_rank: Vec<(usize, f64, f64)>,
}

/// Fits, fuses and scores `validation` for every rank in `grid`, keeping
/// the rank with the highest PR AUC (smallest rank on ties).
pub fn rank_sweep(
    tensor: &SparseTensor,
    validation: &[ValidationItem],
    grid: &[usize],
    options: &FitOptions,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidOption("rank grid is empty".into()));
    }
    let rank1 = fit(tensor, 1, options)?;
    let mut per_rank = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for &rank in grid {
        let at = |e| Error::AtRank {
            rank,
            source: Box::new(e),
        };
        let report = fit_with_report(tensor, rank, options).map_err(at)?;
        let objective = report.final_objective();
        let model = fuse(rank1.clone(), report.model).map_err(at)?;
        let scores = validation
            .iter()
            .map(|v| {
                let p = match &v.index {
                    None => 0.0,
                    Some(idx) => poisson_tail(TESTED_COUNT, model.rate(idx)?)?,
                };
                Ok((p, v.anomalous))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(at)?;
        let pr_auc = roc_pr(&scores).map_err(at)?.pr_auc;
        per_rank.push((rank, pr_auc, objective));
        let better = match best {
            None => true,
            Some((best_rank, best_auc)) => {
                pr_auc > best_auc || (pr_auc == best_auc && rank < best_rank)
            }
        };
        if better {
            best = Some((rank, pr_auc));
        }
    }
    let (best_rank, best_pr_auc) = best.expect("grid is non-empty");
    Ok(SweepResult {
        best_rank,
        best_pr_auc,
        per_rank,
    })
}
