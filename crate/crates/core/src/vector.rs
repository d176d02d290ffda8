// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Sparse term-weight vectors.

use alloc::vec::Vec;

use crate::error::{Error, Result};

pub type TermId = u32;

/// A document or query as `(term, weight)` pairs.
///
/// Terms are strictly increasing and every stored weight is finite and
/// strictly positive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    terms: Vec<TermId>,
    weights: Vec<f64>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from unordered pairs. Zero weights are dropped,
    /// negative or non-finite weights and repeated terms are rejected.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (TermId, f64)>,
    {
        let mut entries: Vec<(TermId, f64)> = Vec::new();
        for (term, weight) in pairs {
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidWeight { term, weight });
            }
            if weight > 0.0 {
                entries.push((term, weight));
            } else {
                // zero weights still count for duplicate detection
                entries.push((term, 0.0));
            }
        }
        entries.sort_unstable_by_key(|e| e.0);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::DuplicateTerm(pair[0].0));
            }
        }
        let (terms, weights) = entries.into_iter().filter(|e| e.1 > 0.0).unzip();
        Ok(Self { terms, weights })
    }

    /// Builds a vector from entries already sorted by strictly increasing
    /// term with positive weights. Panics in debug builds otherwise.
    pub fn from_sorted(terms: Vec<TermId>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(terms.len(), weights.len());
        debug_assert!(terms.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(weights.iter().all(|w| *w > 0.0 && w.is_finite()));
        Self { terms, weights }
    }

    pub fn nnz(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[TermId] {
        &self.terms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, f64)> + '_ {
        self.terms.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn weight(&self, term: TermId) -> Option<f64> {
        self.terms.binary_search(&term).ok().map(|i| self.weights[i])
    }

    pub fn max_weight(&self) -> Option<f64> {
        self.weights.iter().copied().reduce(f64::max)
    }

    /// Keeps only entries satisfying `keep`.
    pub fn retain(&self, mut keep: impl FnMut(TermId, f64) -> bool) -> Self {
        let (terms, weights) = self.iter().filter(|&(t, w)| keep(t, w)).unzip();
        Self { terms, weights }
    }
}
