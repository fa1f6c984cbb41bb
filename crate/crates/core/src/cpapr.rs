//! Poisson CP decomposition fitted by alternating multiplicative updates
//! (CP-APR), Poisson rate reconstruction, and rank-1 fusion smoothing.
//!
//! The model is `lambda[i] = sum_r weight[r] * prod_d factor_d[i_d, r]` with
//! every factor column summing to one. Fitting minimises the Poisson
//! negative log-likelihood (KL divergence up to a constant)
//!
//! ```text
//! f(M) = sum_cells lambda - sum_nonzeros x * ln(lambda)
//! ```
//!
//! one mode at a time. For mode `n` the other factors are held fixed and
//! the weights are absorbed into `B = A_n * diag(weights)`. Each inner step
//! computes `Phi = (X_(n) ./ max(B * Pi^T, eps)) * Pi`, where `Pi` is the
//! Khatri-Rao product of the other factors restricted to the stored
//! coordinates, and sets `B <- B .* Phi`. Because the other columns sum to
//! one, `1 - Phi` is the gradient and `min(B, 1 - Phi)` the KKT residual.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::{check_index, SparseTensor};
use crate::{Error, Result};

/// Dense row-major `rows x cols` non-negative matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FactorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "factor data has {} entries, expected {rows} x {cols}",
                data.len()
            )));
        }
        if let Some(&v) = data.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidOption(format!(
                "factor entry {v} is not a finite non-negative value"
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }
}

/// Weighted sum of rank-one tensors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KruskalModel {
    weights: Vec<f64>,
    factors: Vec<FactorMatrix>,
}

impl KruskalModel {
    pub fn new(weights: Vec<f64>, factors: Vec<FactorMatrix>) -> Result<Self> {
        let rank = weights.len();
        if rank == 0 {
            return Err(Error::InvalidRank(0));
        }
        if factors.len() < 2 {
            return Err(Error::InvalidShape(format!(
                "model needs at least 2 modes, got {}",
                factors.len()
            )));
        }
        if let Some(f) = factors.iter().find(|f| f.cols != rank || f.rows == 0) {
            return Err(Error::InvalidShape(format!(
                "factor is {} x {}, expected rank {rank} with at least one row",
                f.rows, f.cols
            )));
        }
        if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidOption(format!(
                "weight {w} is not a finite non-negative value"
            )));
        }
        Ok(Self { weights, factors })
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(FactorMatrix::rows).collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn factors(&self) -> &[FactorMatrix] {
        &self.factors
    }

    /// Poisson rate at `index`.
    pub fn rate(&self, index: &[usize]) -> Result<f64> {
        check_index(&self.shape(), index)?;
        Ok(self.rate_unchecked(index))
    }

    pub(crate) fn rate_unchecked(&self, index: &[usize]) -> f64 {
        (0..self.rank())
            .map(|r| {
                self.factors
                    .iter()
                    .zip(index)
                    .fold(self.weights[r], |acc, (f, &i)| acc * f.get(i, r))
            })
            .sum()
    }

    /// Sum of the rate over every cell, `sum_r w_r prod_d colsum_d[r]`.
    pub fn total_rate(&self) -> f64 {
        let sums: Vec<Vec<f64>> = self.factors.iter().map(FactorMatrix::column_sums).collect();
        (0..self.rank())
            .map(|r| sums.iter().fold(self.weights[r], |acc, s| acc * s[r]))
            .sum()
    }

    /// Poisson negative log-likelihood without the `ln(x!)` constant,
    /// touching only the stored entries of `tensor`.
    pub fn objective(&self, tensor: &SparseTensor) -> f64 {
        let log_term: f64 = tensor
            .iter()
            .map(|(coord, x)| x * libm::log(self.rate_unchecked(coord)))
            .sum();
        self.total_rate() - log_term
    }

    /// True when every weight and factor entry is strictly positive, which
    /// makes the rate positive at every cell.
    pub fn is_strictly_positive(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
            && self.factors.iter().all(|f| f.data.iter().all(|&v| v > 0.0))
    }
}

/// Solver controls.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FitOptions {
    pub max_outer_iterations: usize,
    pub inner_iterations: usize,
    /// Stop once the largest KKT violation across modes is at most this.
    pub tolerance: f64,
    /// Shift applied to inadmissible zeros.
    pub kappa: f64,
    /// Entries below this with `Phi > 1` count as inadmissible zeros.
    pub kappa_tolerance: f64,
    /// Floor on model values in the `X ./ (B Pi^T)` division.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_outer_iterations: 200,
            inner_iterations: 10,
            tolerance: 1e-4,
            kappa: 1e-2,
            kappa_tolerance: 1e-10,
            epsilon: 1e-10,
            seed: 0,
        }
    }
}

impl FitOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iterations == 0 || self.inner_iterations == 0 {
            return Err(Error::InvalidOption(
                "iteration counts must be positive".into(),
            ));
        }
        let positive = [
            ("tolerance", self.tolerance),
            ("kappa", self.kappa),
            ("kappa_tolerance", self.kappa_tolerance),
            ("epsilon", self.epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidOption(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: KruskalModel,
    /// Objective after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub converged: bool,
    pub kkt_violation: f64,
}

impl FitReport {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(f64::NAN)
    }
}

pub fn fit(tensor: &SparseTensor, rank: usize, options: &FitOptions) -> Result<KruskalModel> {
    fit_with_report(tensor, rank, options).map(|r| r.model)
}

pub fn fit_with_report(
    tensor: &SparseTensor,
    rank: usize,
    options: &FitOptions,
) -> Result<FitReport> {
    if tensor.nnz() == 0 {
        return Err(Error::EmptyTensor);
    }
    if rank < 1 {
        return Err(Error::InvalidRank(rank));
    }
    options.validate()?;

    let shape = tensor.shape().to_vec();
    let order = shape.len();
    let nnz = tensor.nnz();

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut factors: Vec<FactorMatrix> = shape
        .iter()
        .map(|&n| {
            // (0, 1] so every entry starts strictly positive
            let data = (0..n * rank).map(|_| 1.0 - rng.random::<f64>()).collect();
            let mut f = FactorMatrix {
                rows: n,
                cols: rank,
                data,
            };
            normalize_columns(&mut f);
            f
        })
        .collect();
    let mut weights = vec![tensor.total() / rank as f64; rank];

    let mut phi_last: Vec<Option<FactorMatrix>> = vec![None; order];
    let mut pi = vec![0.0; nnz * rank];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut kkt = f64::INFINITY;
    let mut outer = 0;

    while outer < options.max_outer_iterations {
        let mut max_kkt = 0.0f64;
        for n in 0..order {
            // inadmissible zeros: tiny entries the gradient wants to grow
            let mut unshifted = None;
            if outer > 0 {
                if let Some(phi) = &phi_last[n] {
                    let saved = factors[n].clone();
                    let mut hit = false;
                    for (a, &p) in factors[n].data.iter_mut().zip(&phi.data) {
                        if *a < options.kappa_tolerance && p > 1.0 {
                            *a += options.kappa;
                            hit = true;
                        }
                    }
                    if hit {
                        unshifted = Some(saved);
                    }
                }
            }

            let mut step = update_mode(tensor, &factors, &weights, n, options, &mut pi);
            if let Some(saved) = unshifted {
                // the shift is not a majorization step, so keep it only when it does not cost objective
                let mut before = KruskalModel {
                    weights: weights.clone(),
                    factors: factors.clone(),
                };
                before.factors[n] = saved.clone();
                let mut after = KruskalModel {
                    weights: step.weights.clone(),
                    factors: factors.clone(),
                };
                after.factors[n] = step.factor.clone();
                if after.objective(tensor) > before.objective(tensor) {
                    factors[n] = saved;
                    step = update_mode(tensor, &factors, &weights, n, options, &mut pi);
                }
            }
            factors[n] = step.factor;
            weights = step.weights;
            phi_last[n] = Some(step.phi);
            max_kkt = max_kkt.max(step.kkt);
        }
        outer += 1;
        kkt = max_kkt;
        let model = KruskalModel {
            weights: weights.clone(),
            factors: factors.clone(),
        };
        trace.push(model.objective(tensor));
        if max_kkt <= options.tolerance {
            converged = true;
            break;
        }
    }

    Ok(FitReport {
        model: KruskalModel { weights, factors },
        objective_trace: trace,
        outer_iterations: outer,
        converged,
        kkt_violation: kkt,
    })
}

struct ModeStep {
    factor: FactorMatrix,
    weights: Vec<f64>,
    phi: FactorMatrix,
    kkt: f64,
}

/// Inner multiplicative iterations on mode `n`, returning the renormalized factor and new weights.
fn update_mode(
    tensor: &SparseTensor,
    factors: &[FactorMatrix],
    weights: &[f64],
    n: usize,
    options: &FitOptions,
    pi: &mut [f64],
) -> ModeStep {
    let rank = weights.len();
    let rows = factors[n].rows;
    let values = tensor.values();
    let mut b = factors[n].clone();
    for row in b.data.chunks_exact_mut(rank) {
        for (v, w) in row.iter_mut().zip(weights) {
            *v *= w;
        }
    }

    khatri_rao_rows(tensor, factors, n, pi);

    let mut phi = FactorMatrix::zeros(rows, rank);
    let mut mode_kkt = 0.0;
    for _ in 0..options.inner_iterations {
        compute_phi(tensor, n, &b, pi, values, options.epsilon, &mut phi);
        mode_kkt = b
            .data
            .iter()
            .zip(&phi.data)
            .map(|(&bv, &p)| libm::fabs(bv.min(1.0 - p)))
            .fold(0.0, f64::max);
        if mode_kkt < options.tolerance {
            break;
        }
        for (bv, p) in b.data.iter_mut().zip(&phi.data) {
            *bv *= p;
        }
    }

    let weights = b.column_sums();
    for row in b.data.chunks_exact_mut(rank) {
        for (v, &w) in row.iter_mut().zip(&weights) {
            *v = if w > 0.0 { *v / w } else { 0.0 };
        }
    }
    for (r, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            // dead component: keep columns stochastic, rate is unaffected
            let uniform = 1.0 / rows as f64;
            for i in 0..rows {
                b.data[i * rank + r] = uniform;
            }
        }
    }
    ModeStep {
        factor: b,
        weights,
        phi,
        kkt: mode_kkt,
    }
}

fn normalize_columns(f: &mut FactorMatrix) {
    let sums = f.column_sums();
    for row in f.data.chunks_exact_mut(f.cols) {
        for (v, s) in row.iter_mut().zip(&sums) {
            if *s > 0.0 {
                *v /= s;
            }
        }
    }
}

/// Row `k` of `pi` is the elementwise product over modes `m != skip` of
/// `factors[m].row(coord_k[m])`.
fn khatri_rao_rows(tensor: &SparseTensor, factors: &[FactorMatrix], skip: usize, pi: &mut [f64]) {
    let rank = factors[0].cols;
    for (k, (coord, _)) in tensor.iter().enumerate() {
        let out = &mut pi[k * rank..(k + 1) * rank];
        out.fill(1.0);
        for (m, f) in factors.iter().enumerate() {
            if m == skip {
                continue;
            }
            for (o, v) in out.iter_mut().zip(f.row(coord[m])) {
                *o *= v;
            }
        }
    }
}

fn compute_phi(
    tensor: &SparseTensor,
    mode: usize,
    b: &FactorMatrix,
    pi: &[f64],
    values: &[f64],
    epsilon: f64,
    phi: &mut FactorMatrix,
) {
    let rank = b.cols;
    phi.data.fill(0.0);
    for (k, (coord, _)) in tensor.iter().enumerate() {
        let i = coord[mode];
        let pi_row = &pi[k * rank..(k + 1) * rank];
        let model: f64 = b.row(i).iter().zip(pi_row).map(|(x, y)| x * y).sum();
        let ratio = values[k] / model.max(epsilon);
        let out = &mut phi.data[i * rank..(i + 1) * rank];
        for (o, p) in out.iter_mut().zip(pi_row) {
            *o += ratio * p;
        }
    }
}

/// Rank-1 and rank-R models mixed as `w1 * lambda_1 + wr * lambda_R`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmoothedModel {
    rank1: KruskalModel,
    rank_r: KruskalModel,
    w1: f64,
    wr: f64,
}

pub const DEFAULT_FUSION_WEIGHTS: (f64, f64) = (0.1, 0.9);

/// Fuses with the default `(0.1, 0.9)` weights.
pub fn fuse(rank1: KruskalModel, rank_r: KruskalModel) -> Result<SmoothedModel> {
    let (w1, wr) = DEFAULT_FUSION_WEIGHTS;
    fuse_weighted(rank1, rank_r, w1, wr)
}

pub fn fuse_weighted(
    rank1: KruskalModel,
    rank_r: KruskalModel,
    w1: f64,
    wr: f64,
) -> Result<SmoothedModel> {
    if !(w1 > 0.0 && wr > 0.0) || libm::fabs(w1 + wr - 1.0) > 1e-12 {
        return Err(Error::InvalidOption(format!(
            "fusion weights must be positive and sum to 1, got ({w1}, {wr})"
        )));
    }
    if rank1.shape() != rank_r.shape() {
        return Err(Error::ShapeMismatch {
            left: rank1.shape(),
            right: rank_r.shape(),
        });
    }
    if rank1.rank() != 1 {
        return Err(Error::InvalidOption(format!(
            "smoothing model has rank {}, expected 1",
            rank1.rank()
        )));
    }
    if !rank1.is_strictly_positive() {
        return Err(Error::NonPositiveRate(
            "rank-1 model has a zero weight or factor entry, so some rate would be zero".into(),
        ));
    }
    Ok(SmoothedModel {
        rank1,
        rank_r,
        w1,
        wr,
    })
}

impl SmoothedModel {
    pub fn rank1(&self) -> &KruskalModel {
        &self.rank1
    }

    pub fn rank_r(&self) -> &KruskalModel {
        &self.rank_r
    }

    pub fn rank(&self) -> usize {
        self.rank_r.rank()
    }

    pub fn weights(&self) -> (f64, f64) {
        (self.w1, self.wr)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.rank_r.shape()
    }

    pub fn rate(&self, index: &[usize]) -> Result<f64> {
        check_index(&self.shape(), index)?;
        Ok(
            self.w1 * self.rank1.rate_unchecked(index)
                + self.wr * self.rank_r.rate_unchecked(index),
        )
    }
}

/// Fits rank 1 and rank `rank` on the same tensor and fuses them.
pub fn fit_smoothed(
    tensor: &SparseTensor,
    rank: usize,
    options: &FitOptions,
) -> Result<(SmoothedModel, FitReport)> {
    let rank1 = fit(tensor, 1, options)?;
    let report = fit_with_report(tensor, rank, options)?;
    let model = fuse(rank1, report.model.clone())?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn all_cells(shape: &[usize]) -> Vec<Vec<usize>> {
        let mut cells = vec![vec![]];
        for &n in shape {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    (0..n).map(move |i| {
                        let mut c = c.clone();
                        c.push(i);
                        c
                    })
                })
                .collect();
        }
        cells
    }

    fn dense_objective(model: &KruskalModel, tensor: &SparseTensor) -> f64 {
        all_cells(tensor.shape())
            .iter()
            .map(|c| {
                let lam = dense_rate(model, c);
                let x = tensor.lookup(c).unwrap();
                if x > 0.0 {
                    lam - x * libm::log(lam)
                } else {
                    lam
                }
            })
            .sum()
    }

    fn dense_rate(model: &KruskalModel, c: &[usize]) -> f64 {
        let mut total = 0.0;
        for r in 0..model.rank() {
            let mut p = model.weights()[r];
            for (d, &i) in c.iter().enumerate() {
                p *= model.factors()[d].get(i, r);
            }
            total += p;
        }
        total
    }

    #[test]
    fn zero_shift_never_raises_objective() {
        // without the safeguard the shift raised the objective by 5e-3 at iteration 39
        let t = random_tensor(&[5, 2, 3, 5], 648);
        let opts = FitOptions {
            max_outer_iterations: 60,
            ..FitOptions::default().with_seed(648)
        };
        let r = fit_with_report(&t, 3, &opts).unwrap();
        for w in r.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    fn random_tensor(shape: &[usize], seed: u64) -> SparseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<_> = all_cells(shape)
            .into_iter()
            .filter_map(|c| {
                let v: f64 = if rng.random::<f64>() < 0.4 {
                    rng.random_range(1..6) as f64
                } else {
                    0.0
                };
                (v > 0.0).then_some((c, v))
            })
            .collect();
        let mut t = SparseTensor::from_entries(shape, entries).unwrap();
        if t.nnz() == 0 {
            t = SparseTensor::from_entries(shape, [(vec![0; shape.len()], 1.0)]).unwrap();
        }
        t
    }

    #[test]
    fn constant_tensor_rank_one() {
        let cells = all_cells(&[3, 3, 3]);
        let t = SparseTensor::from_entries(&[3, 3, 3], cells.iter().map(|c| (c.as_slice(), 4.0)))
            .unwrap();
        let m = fit(&t, 1, &FitOptions::default()).unwrap();
        for c in &cells {
            assert!((m.rate(c).unwrap() - 4.0).abs() < 0.01);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let t = random_tensor(&[5, 4, 3], 7);
        let opts = FitOptions::default().with_seed(11);
        let a = fit(&t, 3, &opts).unwrap();
        let b = fit(&t, 3, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn objective_non_increasing_random_5x4x3() {
        let t = random_tensor(&[5, 4, 3], 3);
        let r = fit_with_report(&t, 3, &FitOptions::default()).unwrap();
        for w in r.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        let dense = dense_objective(&r.model, &t);
        assert!((dense - r.final_objective()).abs() < 1e-8);
    }

    #[test]
    fn columns_normalized_after_fit() {
        let t = random_tensor(&[6, 5, 4], 9);
        let m = fit(&t, 4, &FitOptions::default()).unwrap();
        for f in m.factors() {
            for s in f.column_sums() {
                assert!((s - 1.0).abs() < 1e-9);
            }
        }
        assert!((m.total_rate() - m.weights().iter().sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn fit_errors() {
        let empty = SparseTensor::empty(&[2, 2]).unwrap();
        assert_eq!(
            fit(&empty, 1, &FitOptions::default()).unwrap_err(),
            Error::EmptyTensor
        );
        let t = random_tensor(&[2, 2], 1);
        assert_eq!(
            fit(&t, 0, &FitOptions::default()).unwrap_err(),
            Error::InvalidRank(0)
        );
        let bad = FitOptions {
            tolerance: 0.0,
            ..FitOptions::default()
        };
        assert!(fit(&t, 1, &bad).is_err());
    }

    #[test]
    fn uniform_factors_reconstruct() {
        let half = FactorMatrix::from_rows(2, 1, vec![0.5, 0.5]).unwrap();
        let m = KruskalModel::new(vec![8.0], vec![half.clone(), half.clone(), half]).unwrap();
        for c in all_cells(&[2, 2, 2]) {
            assert_eq!(m.rate(&c).unwrap(), 1.0);
        }
        assert!(m.rate(&[2, 0, 0]).is_err());
    }

    #[test]
    fn rank_two_matches_dense_sum() {
        let a =
            FactorMatrix::from_rows(4, 2, vec![0.1, 0.4, 0.2, 0.3, 0.3, 0.2, 0.4, 0.1]).unwrap();
        let b = FactorMatrix::from_rows(4, 2, vec![0.25, 0.5, 0.25, 0.0, 0.25, 0.5, 0.25, 0.0])
            .unwrap();
        let c =
            FactorMatrix::from_rows(4, 2, vec![0.7, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.7]).unwrap();
        let m = KruskalModel::new(vec![3.0, 5.0], vec![a, b, c]).unwrap();
        let mut total = 0.0;
        for cell in all_cells(&[4, 4, 4]) {
            let oracle = dense_rate(&m, &cell);
            assert!((m.rate(&cell).unwrap() - oracle).abs() < 1e-15);
            total += oracle;
        }
        assert!((total - 8.0).abs() < 1e-12);
    }

    fn positive_rank1(shape: &[usize], weight: f64) -> KruskalModel {
        let factors = shape
            .iter()
            .map(|&n| FactorMatrix::from_rows(n, 1, vec![1.0 / n as f64; n]).unwrap())
            .collect();
        KruskalModel::new(vec![weight], factors).unwrap()
    }

    #[test]
    fn fuse_arithmetic() {
        // rank-1 rate 2 everywhere on 2x2: weight 8; rank-R rate 1: weight 4
        let m = fuse(positive_rank1(&[2, 2], 8.0), positive_rank1(&[2, 2], 4.0)).unwrap();
        assert!((m.rate(&[1, 0]).unwrap() - 1.1).abs() < 1e-15);
    }

    #[test]
    fn fuse_floor_when_rank_r_vanishes() {
        let zero = FactorMatrix::from_rows(2, 1, vec![1.0, 0.0]).unwrap();
        let one = FactorMatrix::from_rows(2, 1, vec![1.0, 0.0]).unwrap();
        let rank_r = KruskalModel::new(vec![1.0], vec![zero, one]).unwrap();
        let m = fuse(positive_rank1(&[2, 2], 1.6), rank_r).unwrap();
        let rate = m.rate(&[1, 1]).unwrap();
        assert!((rate - 0.04).abs() < 1e-15);
        assert!(rate > 0.0);
    }

    #[test]
    fn fuse_rejections() {
        let a = positive_rank1(&[2, 2], 1.0);
        assert!(fuse_weighted(a.clone(), a.clone(), 1.0, 0.0).is_err());
        assert!(fuse_weighted(a.clone(), a.clone(), 0.2, 0.9).is_err());
        assert!(matches!(
            fuse(a.clone(), positive_rank1(&[2, 3], 1.0)),
            Err(Error::ShapeMismatch { .. })
        ));
        let zero = FactorMatrix::from_rows(2, 1, vec![1.0, 0.0]).unwrap();
        let bad = KruskalModel::new(vec![1.0], vec![zero.clone(), zero]).unwrap();
        assert!(matches!(fuse(bad, a), Err(Error::NonPositiveRate(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_and_sparse_equals_dense(
            shape in proptest::collection::vec(2usize..=5, 3..=4),
            rank in 1usize..=4,
            seed in 0u64..1000,
        ) {
            let t = random_tensor(&shape, seed);
            let opts = FitOptions { max_outer_iterations: 60, ..FitOptions::default().with_seed(seed) };
            let r = fit_with_report(&t, rank, &opts).unwrap();
            for w in r.objective_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
            }
            if t.cell_count() <= 500.0 {
                let dense = dense_objective(&r.model, &t);
                prop_assert!((dense - r.final_objective()).abs() < 1e-8);
            }
            for f in r.model.factors() {
                for s in f.column_sums() {
                    prop_assert!((s - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
