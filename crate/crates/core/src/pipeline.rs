// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Two-step retrieval pipelines.
//!
//! The approximate step searches the pruned index with a top-pooled query
//! and saturated scoring. The rescoring step scores only the resulting
//! candidates, with the original query against the full vectors.
//! [`gt_search`] swaps the approximate step for BM25, as in guided
//! traversal.

use crate::error::{Error, Result};
use crate::index::{ForwardIndex, InvertedIndex};
use crate::pruning::prune_vector_topk;
use crate::retrieval::{
    search, search_filtered, search_filtered_inverted, Algorithm, ScoredList, SearchParams, DEFAULT_K,
};
use crate::scoring::{Bm25Params, Scorer, K1};
use crate::vector::SparseVector;

/// Where candidate documents are rescored.
#[derive(Debug, Clone, Copy)]
pub enum RescoreSource<'a> {
    /// Exact, unquantized vectors.
    Forward(&'a ForwardIndex),
    /// The full inverted index, walked with docid skipping; quantized
    /// scores.
    Inverted(&'a InvertedIndex),
}

impl RescoreSource<'_> {
    fn num_docs(&self) -> u32 {
        match self {
            RescoreSource::Forward(f) => f.num_docs(),
            RescoreSource::Inverted(i) => i.num_docs(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TwoStepConfig<'a> {
    pub approx: &'a InvertedIndex,
    pub rescore: RescoreSource<'a>,
    /// First-stage depth.
    pub candidates: usize,
    /// Number of final results.
    pub k: usize,
    pub k1: K1,
    /// Top-pooling size of the first-stage query; `None` keeps it whole.
    pub query_prune_k: Option<usize>,
    pub algorithm: Algorithm,
}

impl<'a> TwoStepConfig<'a> {
    /// Defaults: 100 candidates, 100 results, `k1 = 100`, query pooled to
    /// 5 terms, Block-Max WAND.
    pub fn new(approx: &'a InvertedIndex, rescore: RescoreSource<'a>) -> Self {
        Self {
            approx,
            rescore,
            candidates: DEFAULT_K,
            k: DEFAULT_K,
            k1: K1::default(),
            query_prune_k: Some(crate::pruning::QUERY_TOPK_PRESET),
            algorithm: Algorithm::BlockMaxWand,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.candidates == 0 {
            return Err(Error::InvalidConfig("k and candidates must be at least 1"));
        }
        if self.query_prune_k == Some(0) {
            return Err(Error::InvalidConfig("query pruning size must be at least 1"));
        }
        if self.approx.num_docs() != self.rescore.num_docs() {
            return Err(Error::InvalidConfig(
                "approximate and rescoring indexes do not share a docid space",
            ));
        }
        self.k1.validate()?;
        Ok(())
    }

    fn first_stage_query(&self, q: &SparseVector) -> SparseVector {
        match self.query_prune_k {
            Some(k) => prune_vector_topk(q, k),
            None => q.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TwoStepResult {
    pub first_stage: ScoredList,
    pub rescored: ScoredList,
}

pub fn two_step_search(q: &SparseVector, cfg: &TwoStepConfig<'_>) -> Result<TwoStepResult> {
    run(q, cfg, Scorer::Saturated(cfg.k1))
}

/// BM25 over the approximate index selects candidates; rescoring is the
/// same as [`two_step_search`].
pub fn gt_search(q: &SparseVector, cfg: &TwoStepConfig<'_>, bm25: Bm25Params) -> Result<TwoStepResult> {
    run(q, cfg, Scorer::Bm25(bm25.validate()?))
}

fn run(q: &SparseVector, cfg: &TwoStepConfig<'_>, scorer: Scorer) -> Result<TwoStepResult> {
    cfg.validate()?;
    let pruned = cfg.first_stage_query(q);
    let params = SearchParams::new(cfg.candidates, cfg.algorithm, scorer);
    let first_stage = search(&pruned, cfg.approx, &params)?;
    if first_stage.is_empty() {
        return Ok(TwoStepResult {
            first_stage,
            rescored: ScoredList::default(),
        });
    }
    let candidates = first_stage.docs();
    let rescored = rescore(q, &cfg.rescore, &candidates, cfg.k)?;
    Ok(TwoStepResult {
        first_stage,
        rescored,
    })
}

/// Scores `candidates` with the full query and keeps the best `k`.
pub fn rescore(
    q: &SparseVector,
    source: &RescoreSource<'_>,
    candidates: &[crate::index::DocId],
    k: usize,
) -> Result<ScoredList> {
    match source {
        RescoreSource::Forward(fwd) => search_filtered(q, fwd, candidates, k),
        RescoreSource::Inverted(idx) => search_filtered_inverted(q, idx, candidates, k, &Scorer::Dot),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CollectionBuilder;
    use crate::index::DEFAULT_BLOCK_SIZE;
    use crate::retrieval::{search_exhaustive, Hit};

    fn fixture() -> (InvertedIndex, ForwardIndex) {
        let mut b = CollectionBuilder::new();
        b.push("d0", [("a", 1.0), ("b", 0.2)]).unwrap();
        b.push("d1", [("a", 2.0)]).unwrap();
        b.push("d2", [("b", 3.0), ("c", 0.5)]).unwrap();
        b.push("d3", [("a", 0.4), ("c", 4.0)]).unwrap();
        let c = b.finish();
        (
            InvertedIndex::build(&c, DEFAULT_BLOCK_SIZE, 8).unwrap(),
            ForwardIndex::build(&c),
        )
    }

    #[test]
    fn defaults() {
        let (idx, fwd) = fixture();
        let cfg = TwoStepConfig::new(&idx, RescoreSource::Forward(&fwd));
        assert_eq!(cfg.k, 100);
        assert_eq!(cfg.candidates, 100);
        assert_eq!(cfg.k1, K1::Finite(100.0));
        assert_eq!(cfg.query_prune_k, Some(5));
    }

    #[test]
    fn rescoring_reorders_candidates() {
        let (idx, fwd) = fixture();
        // first stage sees only "a": d1 > d0 > d3; full query prefers d3
        let q = SparseVector::from_pairs([(0, 1.0), (2, 2.0)]).unwrap();
        let mut cfg = TwoStepConfig::new(&idx, RescoreSource::Forward(&fwd));
        cfg.query_prune_k = Some(1);
        cfg.candidates = 3;
        let r = two_step_search(&q, &cfg).unwrap();
        assert_eq!(r.first_stage.docs(), vec![3, 2]);
        assert_eq!(
            r.rescored.hits,
            vec![
                Hit {
                    doc: 3,
                    score: 0.4 + 8.0
                },
                Hit { doc: 2, score: 1.0 }
            ]
        );
    }

    #[test]
    fn approximation_disabled_matches_full_search() {
        let (idx, fwd) = fixture();
        let q = SparseVector::from_pairs([(0, 1.0), (1, 0.5), (2, 0.3)]).unwrap();
        let mut cfg = TwoStepConfig::new(&idx, RescoreSource::Inverted(&idx));
        cfg.k1 = K1::Infinite;
        cfg.query_prune_k = None;
        let r = two_step_search(&q, &cfg).unwrap();
        let full = search_exhaustive(&q, &idx, 100, &Scorer::Dot);
        assert_eq!(r.rescored.hits, full.hits);

        cfg.rescore = RescoreSource::Forward(&fwd);
        let r = two_step_search(&q, &cfg).unwrap();
        assert_eq!(r.rescored.docs(), full.docs());
    }

    #[test]
    fn empty_first_stage_is_not_an_error() {
        let (idx, fwd) = fixture();
        let q = SparseVector::from_pairs([(99, 1.0)]).unwrap();
        let cfg = TwoStepConfig::new(&idx, RescoreSource::Forward(&fwd));
        let r = two_step_search(&q, &cfg).unwrap();
        assert!(r.rescored.is_empty());
    }

    #[test]
    fn gt_rescores_exactly_the_bm25_candidates() {
        let (idx, fwd) = fixture();
        let q = SparseVector::from_pairs([(0, 1.0), (2, 1.0)]).unwrap();
        let mut cfg = TwoStepConfig::new(&idx, RescoreSource::Forward(&fwd));
        cfg.candidates = 2;
        let r = gt_search(&q, &cfg, Bm25Params::default()).unwrap();
        let bm25 = search_exhaustive(&q, &idx, 2, &Scorer::Bm25(Bm25Params::default()));
        assert_eq!(r.first_stage.hits, bm25.hits);
        let mut final_docs = r.rescored.docs();
        final_docs.sort();
        let mut cand = bm25.docs();
        cand.sort();
        assert_eq!(final_docs, cand);
    }

    #[test]
    fn mismatched_docid_spaces_are_rejected() {
        let (idx, _) = fixture();
        let fwd = ForwardIndex::from_vectors(vec![SparseVector::new()]);
        let cfg = TwoStepConfig::new(&idx, RescoreSource::Forward(&fwd));
        assert!(two_step_search(&SparseVector::new(), &cfg).is_err());
    }
}
