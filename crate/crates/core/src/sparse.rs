//! Sparse vectors with sorted indices.
//!
//! Region vectors and bag-of-n-gram features are overwhelmingly sparse: a
//! region of size `p` touches at most `p` of the `p * |V|` coordinates. All
//! layers that consume them iterate over the stored components only, so
//! nothing downstream ever materializes the full dimension.

use crate::error::{Error, Result};

/// Sparse vector over a fixed-dimension space.
///
/// Invariants: indices are strictly increasing, every index is `< dim`, and
/// stored values are nonzero. Values may be negative (NB-weighted features).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    /// The zero vector of dimension `dim`.
    pub fn empty(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a vector from unsorted `(index, value)` pairs. Duplicate
    /// indices are summed; zero results are dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut pairs: Vec<(usize, f64)> = pairs.into_iter().collect();
        pairs.sort_unstable_by_key(|&(i, _)| i);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if i >= dim {
                return Err(Error::config(format!(
                    "sparse index {i} out of bounds for dimension {dim}"
                )));
            }
            if indices.last() == Some(&i) {
                *values.last_mut().unwrap() += v;
                if values.last() == Some(&0.0) {
                    indices.pop();
                    values.pop();
                }
            } else if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        Ok(SparseVector {
            dim,
            indices,
            values,
        })
    }

    /// Builds a vector from components already in strictly increasing index
    /// order with nonzero values. Checked in debug builds only; the region
    /// enumerators uphold this by construction.
    pub fn from_sorted(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(indices.len(), values.len());
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(indices.iter().all(|&i| i < dim));
        debug_assert!(values.iter().all(|&v| v != 0.0));
        SparseVector {
            dim,
            indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored (nonzero) components.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Applies `f` to every stored value, dropping components that map to
    /// zero.
    pub fn map_values(mut self, f: impl Fn(f64) -> f64) -> Self {
        for v in &mut self.values {
            *v = f(*v);
        }
        let mut i = 0;
        while i < self.values.len() {
            if self.values[i] == 0.0 {
                self.indices.remove(i);
                self.values.remove(i);
            } else {
                i += 1;
            }
        }
        self
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_pairs_sorts_and_merges() {
        let v = SparseVector::from_pairs(10, vec![(7, 1.0), (2, 2.0), (7, 3.0)]).unwrap();
        assert_eq!(v.indices(), &[2, 7]);
        assert_eq!(v.values(), &[2.0, 4.0]);
    }

    #[test]
    fn from_pairs_drops_cancelled_components() {
        let v = SparseVector::from_pairs(4, vec![(1, 2.0), (1, -2.0), (3, 1.0)]).unwrap();
        assert_eq!(v.indices(), &[3]);
    }

    #[test]
    fn from_pairs_rejects_out_of_bounds() {
        assert!(SparseVector::from_pairs(3, vec![(3, 1.0)]).is_err());
    }

    #[test]
    fn dot_dense_matches_naive() {
        let v = SparseVector::from_pairs(5, vec![(0, 1.5), (4, -2.0)]).unwrap();
        let d = [2.0, 1.0, 1.0, 1.0, 3.0];
        assert_eq!(v.dot_dense(&d), 1.5 * 2.0 + (-2.0) * 3.0);
    }

    #[test]
    fn map_values_drops_zeros() {
        let v = SparseVector::from_pairs(5, vec![(1, 1.0), (2, 2.0)]).unwrap();
        let v = v.map_values(|x| if x > 1.5 { 0.0 } else { x });
        assert_eq!(v.indices(), &[1]);
    }
}
