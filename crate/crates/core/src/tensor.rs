//! Sparse non-negative count tensors in coordinate (COO) format.
//!
//! Coordinates are stored flattened (`order` indices per entry) in sorted
//! lexicographic order. Zeros are implicit and never stored.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SparseTensor {
    shape: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseTensor {
    /// Builds a tensor from `(index, count)` pairs, summing duplicates and
    /// dropping coordinates whose total is zero.
    pub fn from_entries<I, C>(shape: &[usize], entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (C, f64)>,
        C: AsRef<[usize]>,
    {
        validate_shape(shape)?;
        let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (index, count) in entries {
            let index = index.as_ref();
            check_index(shape, index)?;
            if !count.is_finite() || count < 0.0 {
                return Err(Error::InvalidCount(count));
            }
            if count == 0.0 {
                continue;
            }
            *merged.entry(index.to_vec()).or_insert(0.0) += count;
        }
        let mut indices = Vec::with_capacity(merged.len() * shape.len());
        let mut values = Vec::with_capacity(merged.len());
        for (index, value) in merged {
            if value > 0.0 {
                indices.extend_from_slice(&index);
                values.push(value);
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            indices,
            values,
        })
    }

    pub fn empty(shape: &[usize]) -> Result<Self> {
        Self::from_entries(shape, core::iter::empty::<(&[usize], f64)>())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Coordinate of the `k`-th stored entry.
    pub fn coord(&self, k: usize) -> &[usize] {
        let d = self.order();
        &self.indices[k * d..(k + 1) * d]
    }

    /// Iterates over `(coordinate, value)` in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        self.indices
            .chunks_exact(self.order())
            .zip(self.values.iter().copied())
    }

    /// Total number of cells, as `f64` to avoid overflow on wide shapes.
    pub fn cell_count(&self) -> f64 {
        self.shape.iter().map(|&n| n as f64).product()
    }

    pub fn density(&self) -> f64 {
        self.nnz() as f64 / self.cell_count()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn lookup(&self, index: &[usize]) -> Result<f64> {
        check_index(&self.shape, index)?;
        let d = self.order();
        let found = binary_search_coords(&self.indices, d, index);
        Ok(found.map_or(0.0, |k| self.values[k]))
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    /// Inflation factor `round(cells / nnz)` used by [`inflate_binary`](Self::inflate_binary).
    pub fn inflation_factor(&self) -> Result<f64> {
        if self.nnz() == 0 {
            return Err(Error::EmptyTensor);
        }
        Ok(libm::round(self.cell_count() / self.nnz() as f64).max(1.0))
    }

    /// Scales a binary tensor so its mean over all cells is close to one.
    pub fn inflate_binary(&self) -> Result<Self> {
        if let Some(&v) = self.values.iter().find(|&&v| v != 1.0) {
            return Err(Error::NotBinary(v));
        }
        let c = self.inflation_factor()?;
        Ok(Self {
            shape: self.shape.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        })
    }

    /// Keeps the support and replaces every stored value with one.
    pub fn to_binary(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            indices: self.indices.clone(),
            values: alloc::vec![1.0; self.values.len()],
        }
    }

    /// True when every slice along every mode holds at least one stored entry.
    pub fn every_slice_nonzero(&self) -> bool {
        (0..self.order()).all(|d| {
            let mut seen = alloc::vec![false; self.shape[d]];
            for (coord, _) in self.iter() {
                seen[coord[d]] = true;
            }
            seen.into_iter().all(|s| s)
        })
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.len() < 2 {
        return Err(Error::InvalidShape(format!(
            "order must be at least 2, got {}",
            shape.len()
        )));
    }
    if let Some(d) = shape.iter().position(|&n| n == 0) {
        return Err(Error::InvalidShape(format!("mode {d} has size 0")));
    }
    Ok(())
}

pub(crate) fn check_index(shape: &[usize], index: &[usize]) -> Result<()> {
    if index.len() != shape.len() {
        return Err(Error::OrderMismatch {
            expected: shape.len(),
            got: index.len(),
        });
    }
    for (mode, (&value, &size)) in index.iter().zip(shape).enumerate() {
        if value >= size {
            return Err(Error::IndexOutOfBounds { mode, value, size });
        }
    }
    Ok(())
}

fn binary_search_coords(indices: &[usize], order: usize, target: &[usize]) -> Option<usize> {
    let n = indices.len() / order;
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        match indices[mid * order..(mid + 1) * order].cmp(target) {
            core::cmp::Ordering::Less => lo = mid + 1,
            core::cmp::Ordering::Greater => hi = mid,
            core::cmp::Ordering::Equal => return Some(mid),
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn empty_entries() {
        let t = SparseTensor::empty(&[2, 2]).unwrap();
        assert_eq!(t.nnz(), 0);
        assert_eq!(t.density(), 0.0);
    }

    #[test]
    fn duplicates_merge() {
        let t =
            SparseTensor::from_entries(&[2, 2, 2], [([0, 0, 0], 1.0), ([0, 0, 0], 2.0)]).unwrap();
        assert_eq!(t.nnz(), 1);
        assert_eq!(t.coord(0), &[0, 0, 0]);
        assert_eq!(t.lookup(&[0, 0, 0]).unwrap(), 3.0);
    }

    #[test]
    fn zeros_are_dropped() {
        let t = SparseTensor::from_entries(&[2, 2], [([1, 1], 0.0), ([0, 1], 2.0)]).unwrap();
        assert_eq!(t.nnz(), 1);
    }

    #[test]
    fn out_of_bounds_names_mode_and_value() {
        let err = SparseTensor::from_entries(&[2, 3], [([1, 3], 1.0)]).unwrap_err();
        assert_eq!(
            err,
            Error::IndexOutOfBounds {
                mode: 1,
                value: 3,
                size: 3
            }
        );
        let t = SparseTensor::empty(&[2, 3]).unwrap();
        assert!(t.lookup(&[2, 0]).is_err());
        assert!(t.lookup(&[0, 0, 0]).is_err());
    }

    #[test]
    fn order_one_rejected() {
        assert!(SparseTensor::empty(&[4]).is_err());
        assert!(SparseTensor::empty(&[4, 0]).is_err());
    }

    #[test]
    fn lookup_stored_and_unstored() {
        let t = SparseTensor::from_entries(&[3, 3], [([1, 2], 3.0)]).unwrap();
        assert_eq!(t.lookup(&[1, 2]).unwrap(), 3.0);
        assert_eq!(t.lookup(&[2, 1]).unwrap(), 0.0);
    }

    #[test]
    fn ipt_scale_density() {
        // 24 x 22 x 4283 with 40,706 stored entries
        let shape = [24usize, 22, 4283];
        let mut entries = Vec::new();
        let mut k = 0usize;
        'outer: for i in 0..24 {
            for j in 0..22 {
                for t in 0..4283 {
                    if (i * 7 + j * 13 + t * 31) % 55 == 0 {
                        entries.push(([i, j, t], 1.0));
                        k += 1;
                        if k == 40_706 {
                            break 'outer;
                        }
                    }
                }
            }
        }
        let t = SparseTensor::from_entries(&shape, entries).unwrap();
        assert_eq!(t.nnz(), 40_706);
        assert_eq!(t.cell_count(), 2_261_424.0);
        assert!((t.density() - 0.018).abs() < 0.0005);
    }

    #[test]
    fn inflate_half_percent_density() {
        // 200 cells, one stored: density 0.5%
        let t = SparseTensor::from_entries(&[10, 20], [([3, 4], 1.0)]).unwrap();
        let inflated = t.inflate_binary().unwrap();
        assert_eq!(inflated.values(), &[200.0]);
        assert_eq!(inflated.total() / inflated.cell_count(), 1.0);
    }

    #[test]
    fn inflate_dense_is_identity() {
        let entries: Vec<_> = (0..2)
            .flat_map(|i| (0..3).map(move |j| ([i, j], 1.0)))
            .collect();
        let t = SparseTensor::from_entries(&[2, 3], entries).unwrap();
        assert_eq!(t.inflate_binary().unwrap(), t);
    }

    #[test]
    fn inflate_two_by_two() {
        let t = SparseTensor::from_entries(&[2, 2], [([0, 1], 1.0)]).unwrap();
        let inflated = t.inflate_binary().unwrap();
        assert_eq!(inflated.values(), &[4.0]);
        assert_eq!(inflated.total() / inflated.cell_count(), 1.0);
    }

    #[test]
    fn inflate_rejects_counts_and_empty() {
        let t = SparseTensor::from_entries(&[2, 2], [([0, 1], 2.0)]).unwrap();
        assert_eq!(t.inflate_binary().unwrap_err(), Error::NotBinary(2.0));
        let e = SparseTensor::empty(&[2, 2]).unwrap();
        assert_eq!(e.inflate_binary().unwrap_err(), Error::EmptyTensor);
    }

    fn entries_strategy() -> impl Strategy<Value = (Vec<usize>, Vec<(Vec<usize>, u8)>)> {
        proptest::collection::vec(1usize..=6, 2..=3).prop_flat_map(|shape| {
            let coord = shape.iter().map(|&n| 0..n).collect::<Vec<_>>();
            let entries = proptest::collection::vec((coord, 0u8..4), 0..40);
            (Just(shape), entries)
        })
    }

    proptest! {
        #[test]
        fn lookup_matches_dense_brute_force((shape, entries) in entries_strategy()) {
            let t = SparseTensor::from_entries(&shape, entries.iter().map(|(c, v)| (c.as_slice(), *v as f64))).unwrap();
            let mut dense = vec![0.0f64; shape.iter().product()];
            let flat = |c: &[usize]| c.iter().zip(&shape).fold(0, |acc, (&i, &n)| acc * n + i);
            for (c, v) in &entries {
                dense[flat(c)] += *v as f64;
            }
            let mut idx = vec![0usize; shape.len()];
            for (cell, &expected) in dense.iter().enumerate() {
                let mut rem = cell;
                for d in (0..shape.len()).rev() {
                    idx[d] = rem % shape[d];
                    rem /= shape[d];
                }
                prop_assert_eq!(t.lookup(&idx).unwrap(), expected);
            }
            let nnz = dense.iter().filter(|&&v| v > 0.0).count();
            prop_assert_eq!(t.nnz(), nnz);
            prop_assert!((0.0..=1.0).contains(&t.density()));
            prop_assert!(t.values().iter().all(|&v| v > 0.0));
        }

        #[test]
        fn inflation_preserves_support((shape, entries) in entries_strategy()) {
            let t = SparseTensor::from_entries(&shape, entries.iter().map(|(c, v)| (c.as_slice(), *v as f64))).unwrap().to_binary();
            prop_assume!(t.nnz() > 0);
            let inflated = t.inflate_binary().unwrap();
            let a: Vec<_> = t.iter().map(|(c, _)| c.to_vec()).collect();
            let b: Vec<_> = inflated.iter().map(|(c, _)| c.to_vec()).collect();
            prop_assert_eq!(a, b);
            let mean = inflated.total() / inflated.cell_count();
            prop_assert!((0.5..=1.5).contains(&mean));
        }
    }
}
