// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Top-k document-at-a-time query evaluation.
//!
//! Every algorithm ranks by score descending with ties broken by lower
//! docid, and computes a document's final score by summing term
//! contributions in query-term order. Dynamic-pruning algorithms therefore
//! return bit-identical hit lists to [`search_exhaustive`].

mod cursor;
mod exhaustive;
mod filtered;
mod maxscore;
mod topk;
mod wand;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::index::{DocId, InvertedIndex};
use crate::scoring::{Scorer, TermScorer};
use crate::vector::SparseVector;

pub use exhaustive::search_exhaustive;
pub use filtered::{search_filtered, search_filtered_inverted};
pub use maxscore::search_maxscore;
pub use topk::TopK;
pub use wand::{search_bmw, search_wand};

pub const DEFAULT_K: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Exhaustive,
    MaxScore,
    Wand,
    BlockMaxWand,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Exhaustive,
        Algorithm::MaxScore,
        Algorithm::Wand,
        Algorithm::BlockMaxWand,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exhaustive => "exhaustive",
            Algorithm::MaxScore => "maxscore",
            Algorithm::Wand => "wand",
            Algorithm::BlockMaxWand => "bmw",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exhaustive" | "daat" => Ok(Algorithm::Exhaustive),
            "maxscore" => Ok(Algorithm::MaxScore),
            "wand" => Ok(Algorithm::Wand),
            "bmw" | "block-max-wand" | "blockmaxwand" => Ok(Algorithm::BlockMaxWand),
            _ => Err(Error::InvalidConfig(
                "algorithm must be exhaustive, maxscore, wand or bmw",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    pub k: usize,
    pub algorithm: Algorithm,
    pub scorer: Scorer,
    /// Restricts evaluation to these docids (sorted or not).
    pub filter: Option<Vec<DocId>>,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            algorithm: Algorithm::BlockMaxWand,
            scorer: Scorer::Dot,
            filter: None,
        }
    }
}

impl SearchParams {
    pub fn new(k: usize, algorithm: Algorithm, scorer: Scorer) -> Self {
        Self {
            k,
            algorithm,
            scorer,
            filter: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub doc: DocId,
    pub score: f64,
}

/// Work counters of one query evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub postings_touched: u64,
    pub docs_fully_scored: u64,
}

impl core::ops::AddAssign for SearchStats {
    fn add_assign(&mut self, rhs: Self) {
        self.postings_touched += rhs.postings_touched;
        self.docs_fully_scored += rhs.docs_fully_scored;
    }
}

/// Ranked results, best first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoredList {
    pub hits: Vec<Hit>,
    pub stats: SearchStats,
}

impl ScoredList {
    pub fn docs(&self) -> Vec<DocId> {
        self.hits.iter().map(|h| h.doc).collect()
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }
}

/// Runs the configured algorithm, or a filtered walk when a filter is set.
pub fn search(q: &SparseVector, idx: &InvertedIndex, p: &SearchParams) -> Result<ScoredList> {
    if p.k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1"));
    }
    if let Some(filter) = &p.filter {
        return search_filtered_inverted(q, idx, filter, p.k, &p.scorer);
    }
    Ok(match p.algorithm {
        Algorithm::Exhaustive => search_exhaustive(q, idx, p.k, &p.scorer),
        Algorithm::MaxScore => search_maxscore(q, idx, p.k, &p.scorer),
        Algorithm::Wand => search_wand(q, idx, p.k, &p.scorer),
        Algorithm::BlockMaxWand => search_bmw(q, idx, p.k, &p.scorer),
    })
}

/// Query terms that have postings, in term order, with their scorers.
pub(crate) fn prepare<'a>(
    q: &SparseVector,
    idx: &'a InvertedIndex,
    scorer: &Scorer,
) -> Vec<cursor::Cursor<'a>> {
    q.iter()
        .filter_map(|(t, w)| {
            let list = idx.posting_list(t)?;
            if list.is_empty() {
                return None;
            }
            Some((list, TermScorer::new(scorer, w, list.len(), idx)))
        })
        .enumerate()
        .map(|(slot, (list, ts))| cursor::Cursor::new(list, slot, ts, idx.block_size()))
        .collect()
}

/// Sums contributions of cursors positioned on `doc` in query-term order.
pub(crate) struct CanonicalScore {
    slots: Vec<f64>,
}

impl CanonicalScore {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            slots: alloc::vec![0.0; n],
        }
    }

    pub(crate) fn set(&mut self, slot: usize, value: f64) {
        self.slots[slot] = value;
    }

    /// Sums and clears the slots. Unset slots hold +0.0, which leaves the
    /// running sum unchanged.
    pub(crate) fn take(&mut self) -> f64 {
        let mut s = 0.0;
        for v in self.slots.iter_mut() {
            s += *v;
            *v = 0.0;
        }
        s
    }

    pub(crate) fn score_at(
        &mut self,
        cursors: &[cursor::Cursor<'_>],
        doc: DocId,
        idx: &InvertedIndex,
    ) -> f64 {
        for c in cursors {
            if c.doc() == doc {
                self.set(c.slot(), c.score(idx));
            }
        }
        self.take()
    }
}

/// True when a document whose score is at most `estimate` cannot enter a
/// heap whose entry threshold is `threshold`.
#[inline]
pub(crate) fn prunable(estimate: f64, threshold: f64) -> bool {
    estimate * (1.0 + crate::scoring::BOUND_SLACK) <= threshold
}

pub(crate) fn finish(topk: TopK, cursors: &[cursor::Cursor<'_>], docs_fully_scored: u64) -> ScoredList {
    ScoredList {
        hits: topk.into_sorted(),
        stats: SearchStats {
            postings_touched: cursors.iter().map(cursor::Cursor::touched).sum(),
            docs_fully_scored,
        },
    }
}
