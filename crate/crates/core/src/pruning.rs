// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Static pruning of vectors and collections.
//!
//! Document-centric top pooling keeps the highest-weighted entries of each
//! vector. Term-centric quantile pruning keeps the highest-weighted
//! fraction of every posting list, and value-threshold pruning drops every
//! entry below a fixed weight.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::corpus::{Collection, CollectionStats};
use crate::error::{Error, Result};
use crate::vector::SparseVector;

pub const DEFAULT_DOC_CAP: usize = 128;
pub const DEFAULT_QUERY_CAP: usize = 32;

/// Document-centric sweep sizes.
pub const DOC_TOPK_PRESETS: [usize; 5] = [4, 8, 16, 32, 64];
pub const QUERY_TOPK_PRESET: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PruneStrategy {
    DocTopK(usize),
    QueryTopK(usize),
    /// Keep the top `ceil(q * len)` postings of every term, `q` in `[0, 1]`.
    TermQuantile(f64),
    /// Drop entries with weight strictly below the threshold.
    ValueThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneConfig {
    pub strategy: PruneStrategy,
    pub doc_cap: usize,
    pub query_cap: usize,
}

impl PruneConfig {
    pub fn new(strategy: PruneStrategy) -> Self {
        Self {
            strategy,
            doc_cap: DEFAULT_DOC_CAP,
            query_cap: DEFAULT_QUERY_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.strategy {
            PruneStrategy::DocTopK(0) | PruneStrategy::QueryTopK(0) => {
                Err(Error::InvalidConfig("top-k pruning size must be at least 1"))
            }
            PruneStrategy::TermQuantile(q) if !(0.0..=1.0).contains(&q) => {
                Err(Error::InvalidConfig("quantile must lie in [0, 1]"))
            }
            PruneStrategy::ValueThreshold(t) if !(t >= 0.0 && t.is_finite()) => Err(Error::InvalidConfig(
                "threshold must be a finite non-negative number",
            )),
            _ if self.doc_cap == 0 || self.query_cap == 0 => {
                Err(Error::InvalidConfig("pruning caps must be at least 1"))
            }
            _ => Ok(()),
        }
    }
}

/// Result of pruning a collection. `emptied` lists the docids left without
/// entries; they stay in the docid space.
#[derive(Debug, Clone, PartialEq)]
pub struct Pruned {
    pub collection: Collection,
    pub emptied: Vec<u32>,
}

/// Orders by weight descending, then term ascending.
fn by_weight_then_term(a: &(u32, f64), b: &(u32, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Keeps the `k` highest-weighted entries of `v`; equal weights keep the
/// lower term first. `k >= nnz` is the identity and `k == 0` yields the
/// empty vector.
pub fn prune_vector_topk(v: &SparseVector, k: usize) -> SparseVector {
    if k >= v.nnz() {
        return v.clone();
    }
    let mut entries: Vec<(u32, f64)> = v.iter().collect();
    entries.sort_unstable_by(by_weight_then_term);
    entries.truncate(k);
    entries.sort_unstable_by_key(|e| e.0);
    let (terms, weights) = entries.into_iter().unzip();
    SparseVector::from_sorted(terms, weights)
}

/// Number of postings kept out of `len` at quantile `q`; never zero for a
/// non-empty list.
pub fn quantile_keep(len: usize, q: f64) -> usize {
    if len == 0 {
        return 0;
    }
    let x = q * len as f64;
    let nearest = libm::round(x);
    // q * len is often an integer up to one ulp of noise
    let kept = if libm::fabs(x - nearest) <= 1e-9 * len as f64 {
        nearest
    } else {
        libm::ceil(x)
    };
    (kept as usize).clamp(1, len)
}

pub fn prune_collection(c: &Collection, cfg: &PruneConfig) -> Result<Pruned> {
    cfg.validate()?;
    let vectors: Vec<SparseVector> = match cfg.strategy {
        PruneStrategy::DocTopK(k) => {
            let k = k.min(cfg.doc_cap);
            c.vectors().iter().map(|v| prune_vector_topk(v, k)).collect()
        }
        PruneStrategy::QueryTopK(k) => {
            let k = k.min(cfg.query_cap);
            c.vectors().iter().map(|v| prune_vector_topk(v, k)).collect()
        }
        PruneStrategy::ValueThreshold(t) => c.vectors().iter().map(|v| v.retain(|_, w| w >= t)).collect(),
        PruneStrategy::TermQuantile(q) => term_quantile(c, q),
    };
    let emptied = vectors
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_empty())
        .map(|(d, _)| d as u32)
        .collect();
    Ok(Pruned {
        collection: c.with_vectors(vectors),
        emptied,
    })
}

fn term_quantile(c: &Collection, q: f64) -> Vec<SparseVector> {
    let vocab = c
        .vectors()
        .iter()
        .filter_map(|v| v.terms().last())
        .max()
        .map_or(0, |t| *t as usize + 1);
    // postings[t] = (doc, weight, position within doc)
    let mut postings: Vec<Vec<(u32, f64, u32)>> = vec![Vec::new(); vocab];
    for (d, v) in c.vectors().iter().enumerate() {
        for (pos, (t, w)) in v.iter().enumerate() {
            postings[t as usize].push((d as u32, w, pos as u32));
        }
    }
    let mut keep: Vec<Vec<bool>> = c.vectors().iter().map(|v| vec![false; v.nnz()]).collect();
    for mut list in postings {
        let n = quantile_keep(list.len(), q);
        list.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(d, _, pos) in &list[..n] {
            keep[d as usize][pos as usize] = true;
        }
    }
    c.vectors()
        .iter()
        .zip(keep)
        .map(|(v, flags)| {
            let mut i = 0;
            v.retain(|_, _| {
                i += 1;
                flags[i - 1]
            })
        })
        .collect()
}

/// Which average a lexical-size prune reads from the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Documents,
    Queries,
}

/// `min(round(avg), cap)`, at least 1. Halves round away from zero.
pub fn lexical_size(avg_terms: f64, cap: usize) -> usize {
    (libm::round(avg_terms) as usize).clamp(1, cap.max(1))
}

/// Top-pools every vector to the collection's average size, capped.
pub fn lexical_prune(c: &Collection, stats: &CollectionStats, side: Side, cap: usize) -> Collection {
    let avg = match side {
        Side::Documents => stats.avg_doc_terms,
        Side::Queries => stats.avg_query_terms,
    };
    let k = lexical_size(avg, cap);
    c.with_vectors(c.vectors().iter().map(|v| prune_vector_topk(v, k)).collect())
}
