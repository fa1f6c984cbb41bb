//! KL-NMF on a two-mode count matrix, scored with the same Poisson tail and
//! rank-1 fusion as the tensor models.
//!
//! A two-mode Kruskal model is an NMF: `W = theta_1 * diag(weights)` and
//! `H = theta_2^T`, and the CP-APR updates reduce to the KL multiplicative
//! updates.

use alloc::vec::Vec;

use crate::cpapr::{self, FitOptions, KruskalModel, DEFAULT_FUSION_WEIGHTS};
use crate::encoding::EncoderSet;
use crate::record::MessageRecord;
use crate::schema::{encode, Encoded, TensorSchema};
use crate::scoring::{Outcome, Scorer, TESTED_COUNT};
use crate::special::poisson_tail;
use crate::tensor::{check_index, SparseTensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NmfModel {
    rank: usize,
    rows: usize,
    cols: usize,
    /// `rows x rank`, row-major.
    w: Vec<f64>,
    /// `rank x cols`, row-major.
    h: Vec<f64>,
    /// Rank-1 companion `w1 (rows)` and `h1 (cols)`.
    w1: Vec<f64>,
    h1: Vec<f64>,
    fusion: (f64, f64),
}

impl NmfModel {
    fn from_kruskal(model: &KruskalModel) -> (Vec<f64>, Vec<f64>) {
        let rank = model.rank();
        let (a, b) = (&model.factors()[0], &model.factors()[1]);
        let mut w = Vec::with_capacity(a.rows() * rank);
        for i in 0..a.rows() {
            for r in 0..rank {
                w.push(a.get(i, r) * model.weights()[r]);
            }
        }
        let mut h = Vec::with_capacity(rank * b.rows());
        for r in 0..rank {
            for j in 0..b.rows() {
                h.push(b.get(j, r));
            }
        }
        (w, h)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Fused rate `0.1 * (w1 h1)[i, j] + 0.9 * (W H)[i, j]`.
    pub fn rate(&self, row: usize, col: usize) -> Result<f64> {
        check_index(&[self.rows, self.cols], &[row, col])?;
        let wh: f64 = (0..self.rank)
            .map(|r| self.w[row * self.rank + r] * self.h[r * self.cols + col])
            .sum();
        let (a, b) = self.fusion;
        Ok(a * self.w1[row] * self.h1[col] + b * wh)
    }
}

/// Fits rank `rank` and the rank-1 companion on a two-mode tensor.
pub fn nmf_fit(matrix: &SparseTensor, rank: usize, options: &FitOptions) -> Result<NmfModel> {
    if matrix.order() != 2 {
        return Err(Error::InvalidShape(alloc::format!(
            "NMF needs a 2-mode matrix, got order {}",
            matrix.order()
        )));
    }
    let full = cpapr::fit(matrix, rank, options)?;
    let one = cpapr::fit(matrix, 1, options)?;
    if !one.is_strictly_positive() {
        return Err(Error::NonPositiveRate(
            "rank-1 NMF companion has a zero entry".into(),
        ));
    }
    let (w, h) = NmfModel::from_kruskal(&full);
    let (w1, h1) = NmfModel::from_kruskal(&one);
    Ok(NmfModel {
        rank,
        rows: matrix.shape()[0],
        cols: matrix.shape()[1],
        w,
        h,
        w1,
        h1,
        fusion: DEFAULT_FUSION_WEIGHTS,
    })
}

/// Default decomposition ranks for the two matrix layouts.
pub const RTU_POINTS_RANK: usize = 24;
pub const RTU_CHANNEL_RANK: usize = 14;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NmfDetector {
    pub schema: TensorSchema,
    pub model: NmfModel,
    pub encoders: EncoderSet,
}

impl NmfDetector {
    pub fn name(&self) -> &'static str {
        match self.schema.kind {
            crate::SchemaKind::RtuChannel => "nmf_ixc",
            _ => "nmf_ixp",
        }
    }
}

impl Scorer for NmfDetector {
    fn score_record(
        &self,
        record: &MessageRecord,
        _delta: Option<u64>,
    ) -> Result<(Option<Vec<usize>>, Outcome)> {
        nmf_score(&self.model, &self.schema, &self.encoders, record)
    }
}

pub fn nmf_score(
    model: &NmfModel,
    schema: &TensorSchema,
    encoders: &EncoderSet,
    record: &MessageRecord,
) -> Result<(Option<Vec<usize>>, Outcome)> {
    record.validate()?;
    match encode(schema, encoders, None, record, None)? {
        Encoded::Index(idx) => {
            let rate = model.rate(idx[0], idx[1])?;
            let p_value = poisson_tail(TESTED_COUNT, rate)?;
            Ok((Some(idx), Outcome::Scored { rate, p_value }))
        }
        Encoded::OutOfVocabulary => Ok((None, Outcome::OutOfVocabulary)),
        Encoded::NoDelta => Err(Error::SchemaMismatch(
            "NMF layouts have no time mode".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::build_tensor;

    fn all_cells(rows: usize, cols: usize) -> Vec<[usize; 2]> {
        (0..rows)
            .flat_map(|i| (0..cols).map(move |j| [i, j]))
            .collect()
    }

    #[test]
    fn constant_matrix_rank_one() {
        let m = SparseTensor::from_entries(&[3, 3], all_cells(3, 3).into_iter().map(|c| (c, 2.0)))
            .unwrap();
        let model = nmf_fit(&m, 1, &FitOptions::default()).unwrap();
        for [i, j] in all_cells(3, 3) {
            assert!((model.rate(i, j).unwrap() - 2.0).abs() < 0.01);
        }
    }

    #[test]
    fn rejects_non_matrix() {
        let t = SparseTensor::from_entries(&[2, 2, 2], [([0, 0, 0], 1.0)]).unwrap();
        assert!(nmf_fit(&t, 1, &FitOptions::default()).is_err());
    }

    #[test]
    fn default_ranks() {
        assert_eq!(RTU_POINTS_RANK, 24);
        assert_eq!(RTU_CHANNEL_RANK, 14);
    }

    #[test]
    fn deterministic() {
        let entries = [
            ([0, 1], 3.0),
            ([2, 4], 1.0),
            ([3, 0], 2.0),
            ([1, 2], 5.0),
            ([0, 3], 1.0),
        ];
        let m = SparseTensor::from_entries(&[4, 5], entries).unwrap();
        let opts = FitOptions::default().with_seed(5);
        assert_eq!(
            nmf_fit(&m, 3, &opts).unwrap(),
            nmf_fit(&m, 3, &opts).unwrap()
        );
    }

    #[test]
    fn objective_non_increasing_against_dense_oracle() {
        let entries = [
            ([0, 1], 3.0),
            ([2, 4], 1.0),
            ([3, 0], 2.0),
            ([1, 2], 5.0),
            ([4, 4], 1.0),
            ([0, 0], 2.0),
        ];
        let m = SparseTensor::from_entries(&[5, 5], entries).unwrap();
        let report = cpapr::fit_with_report(&m, 2, &FitOptions::default()).unwrap();
        for w in report.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        let model = report.model.clone();
        let dense: f64 = all_cells(5, 5)
            .into_iter()
            .map(|c| {
                let lam = model.rate(&c).unwrap();
                let x = m.lookup(&c).unwrap();
                lam - if x > 0.0 { x * libm::log(lam) } else { 0.0 }
            })
            .sum();
        assert!((dense - report.final_objective()).abs() < 1e-8);
    }

    #[test]
    fn scoring_rules() {
        let records: Vec<_> = (0..60u64)
            .map(|t| {
                MessageRecord::new(
                    t,
                    ["A", "B", "C", "D", "E", "F"][(t % 6) as usize],
                    4 * (1 + (t % 6) as u32),
                    "C",
                )
                .unwrap()
            })
            .collect();
        let schema = TensorSchema::new(crate::SchemaKind::RtuPoints);
        let built = build_tensor(&records, &schema, None, None, 1).unwrap();
        let model = nmf_fit(&built.tensor, 6, &FitOptions::default()).unwrap();
        let det = NmfDetector {
            schema,
            model,
            encoders: built.encoders,
        };
        let (_, oov) = det
            .score_record(&MessageRecord::new(0, "Q", 4, "C").unwrap(), None)
            .unwrap();
        assert_eq!(oov, Outcome::OutOfVocabulary);
        let (_, normal) = det.score_record(&records[0], None).unwrap();
        let (_, odd) = det
            .score_record(&MessageRecord::new(0, "A", 8, "C").unwrap(), None)
            .unwrap();
        assert!(normal.p_value().unwrap() > 0.99);
        assert!(odd.p_value().unwrap() < normal.p_value().unwrap());
        let rate = match normal {
            Outcome::Scored { rate, p_value } => {
                assert!((p_value - (1.0 - libm::exp(-rate))).abs() < 1e-15);
                rate
            }
            _ => unreachable!(),
        };
        assert!(rate > 0.0);
    }
}
