// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

use super::cursor::{Cursor, END};
use super::{finish, prepare, prunable, CanonicalScore, ScoredList, TopK};
use crate::index::{DocId, InvertedIndex};
use crate::scoring::Scorer;
use crate::vector::SparseVector;

pub fn search_wand(q: &SparseVector, idx: &InvertedIndex, k: usize, scorer: &Scorer) -> ScoredList {
    run(q, idx, k, scorer, false)
}

/// Block-Max WAND: WAND pivoting followed by a shallow check of the
/// per-block bounds around the pivot.
pub fn search_bmw(q: &SparseVector, idx: &InvertedIndex, k: usize, scorer: &Scorer) -> ScoredList {
    run(q, idx, k, scorer, true)
}

fn sort_by_doc(cursors: &mut [Cursor<'_>]) {
    // lists are few and mostly sorted after each step
    for i in 1..cursors.len() {
        let mut j = i;
        while j > 0 && cursors[j - 1].doc() > cursors[j].doc() {
            cursors.swap(j - 1, j);
            j -= 1;
        }
    }
}

/// Index of the first cursor at which the cumulative bound may beat the
/// threshold.
fn find_pivot(cursors: &[Cursor<'_>], threshold: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (i, c) in cursors.iter().enumerate() {
        if c.doc() == END {
            return None;
        }
        acc += c.bound();
        if !prunable(acc, threshold) {
            return Some(i);
        }
    }
    None
}

fn run(q: &SparseVector, idx: &InvertedIndex, k: usize, scorer: &Scorer, block_max: bool) -> ScoredList {
    let mut cursors = prepare(q, idx, scorer);
    let mut acc = CanonicalScore::new(cursors.len());
    let mut topk = TopK::new(k);
    let mut scored = 0;

    loop {
        sort_by_doc(&mut cursors);
        let threshold = topk.threshold();
        let Some(pivot) = find_pivot(&cursors, threshold) else {
            break;
        };
        let pivot_doc = cursors[pivot].doc();
        // every cursor already on the pivot document takes part
        let last = pivot
            + cursors[pivot + 1..]
                .iter()
                .take_while(|c| c.doc() == pivot_doc)
                .count();

        if block_max {
            let mut bound = 0.0;
            let mut skip_to: DocId = cursors.get(last + 1).map_or(END, Cursor::doc);
            for c in &cursors[..=last] {
                let (b, last_doc) = c.shallow_block(pivot_doc);
                bound += b;
                skip_to = skip_to.min(last_doc.saturating_add(1));
            }
            if prunable(bound, threshold) {
                debug_assert!(skip_to > pivot_doc);
                for c in &mut cursors[..=last] {
                    c.next_geq(skip_to);
                }
                continue;
            }
        }

        if cursors[0].doc() == pivot_doc {
            let score = acc.score_at(&cursors[..=last], pivot_doc, idx);
            scored += 1;
            topk.push(pivot_doc, score);
            for c in &mut cursors[..=last] {
                c.next();
            }
        } else {
            for c in &mut cursors[..pivot] {
                c.next_geq(pivot_doc);
            }
        }
    }
    finish(topk, &cursors, scored)
}
