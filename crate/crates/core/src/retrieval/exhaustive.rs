// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

use super::cursor::END;
use super::{finish, prepare, CanonicalScore, ScoredList, TopK};
use crate::index::InvertedIndex;
use crate::scoring::Scorer;
use crate::vector::SparseVector;

/// Scores every document that contains at least one query term.
pub fn search_exhaustive(q: &SparseVector, idx: &InvertedIndex, k: usize, scorer: &Scorer) -> ScoredList {
    let mut cursors = prepare(q, idx, scorer);
    let mut acc = CanonicalScore::new(cursors.len());
    let mut topk = TopK::new(k);
    let mut scored = 0;
    loop {
        let doc = cursors.iter().map(|c| c.doc()).min().unwrap_or(END);
        if doc == END {
            break;
        }
        let score = acc.score_at(&cursors, doc, idx);
        scored += 1;
        topk.push(doc, score);
        for c in cursors.iter_mut().filter(|c| c.doc() == doc) {
            c.next();
        }
    }
    finish(topk, &cursors, scored)
}
