// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Rescoring restricted to a candidate set.

use alloc::vec::Vec;

use super::{finish, prepare, CanonicalScore, ScoredList, SearchStats, TopK};
use crate::error::{Error, Result};
use crate::index::{DocId, ForwardIndex, InvertedIndex};
use crate::scoring::{score_dot, Scorer};
use crate::vector::SparseVector;

fn sorted_candidates(candidates: &[DocId], num_docs: u32) -> Result<Vec<DocId>> {
    let mut docs = candidates.to_vec();
    docs.sort_unstable();
    docs.dedup();
    if let Some(&doc) = docs.last().filter(|d| **d >= num_docs) {
        return Err(Error::DocOutOfRange { doc, num_docs });
    }
    Ok(docs)
}

/// Exact dot product of the full query against each candidate's full
/// vector. Candidates sharing no term with the query score 0.0.
pub fn search_filtered(
    q: &SparseVector,
    fwd: &ForwardIndex,
    candidates: &[DocId],
    k: usize,
) -> Result<ScoredList> {
    let docs = sorted_candidates(candidates, fwd.num_docs())?;
    let mut topk = TopK::new(k);
    let mut touched = 0;
    for &d in &docs {
        let v = fwd.get(d)?;
        touched += v.nnz() as u64;
        topk.push(d, score_dot(q, v));
    }
    Ok(ScoredList {
        hits: topk.into_sorted(),
        stats: SearchStats {
            postings_touched: touched,
            docs_fully_scored: docs.len() as u64,
        },
    })
}

/// Candidate rescoring by walking the inverted index, skipping to each
/// candidate docid in turn. Scores come from quantized impacts.
pub fn search_filtered_inverted(
    q: &SparseVector,
    idx: &InvertedIndex,
    candidates: &[DocId],
    k: usize,
    scorer: &Scorer,
) -> Result<ScoredList> {
    let docs = sorted_candidates(candidates, idx.num_docs())?;
    let mut cursors = prepare(q, idx, scorer);
    let mut acc = CanonicalScore::new(cursors.len());
    let mut topk = TopK::new(k);
    for &d in &docs {
        for c in cursors.iter_mut() {
            c.next_geq(d);
        }
        let score = acc.score_at(&cursors, d, idx);
        topk.push(d, score);
    }
    Ok(finish(topk, &cursors, docs.len() as u64))
}
