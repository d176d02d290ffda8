// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

use alloc::vec::Vec;

use super::cursor::END;
use super::{finish, prepare, prunable, CanonicalScore, ScoredList, TopK};
use crate::index::InvertedIndex;
use crate::scoring::Scorer;
use crate::vector::SparseVector;

/// MaxScore: lists sorted by bound ascending; the prefix whose cumulative
/// bound cannot beat the threshold is non-essential and only probed for
/// documents found in the essential lists.
pub fn search_maxscore(q: &SparseVector, idx: &InvertedIndex, k: usize, scorer: &Scorer) -> ScoredList {
    let mut cursors = prepare(q, idx, scorer);
    cursors.sort_by(|a, b| a.bound().total_cmp(&b.bound()).then(a.slot().cmp(&b.slot())));
    let prefix: Vec<f64> = cursors
        .iter()
        .scan(0.0, |sum, c| {
            *sum += c.bound();
            Some(*sum)
        })
        .collect();
    let n = cursors.len();
    let mut acc = CanonicalScore::new(n);
    let mut topk = TopK::new(k);
    let mut threshold = topk.threshold();
    let mut essential = 0;
    let mut scored = 0;

    while essential < n {
        let doc = cursors[essential..].iter().map(|c| c.doc()).min().unwrap_or(END);
        if doc == END {
            break;
        }
        let mut partial = 0.0;
        for c in &cursors[essential..] {
            if c.doc() == doc {
                let s = c.score(idx);
                acc.set(c.slot(), s);
                partial += s;
            }
        }
        let mut complete = true;
        for i in (0..essential).rev() {
            if prunable(partial + prefix[i], threshold) {
                complete = false;
                break;
            }
            let c = &mut cursors[i];
            c.next_geq(doc);
            if c.doc() == doc {
                let s = c.score(idx);
                acc.set(c.slot(), s);
                partial += s;
            }
        }
        let score = acc.take();
        if complete {
            scored += 1;
            if topk.push(doc, score) {
                let t = topk.threshold();
                if t != threshold {
                    threshold = t;
                    while essential < n && prunable(prefix[essential], threshold) {
                        essential += 1;
                    }
                }
            }
        }
        for c in cursors[essential..].iter_mut().filter(|c| c.doc() == doc) {
            c.next();
        }
    }
    finish(topk, &cursors, scored)
}
