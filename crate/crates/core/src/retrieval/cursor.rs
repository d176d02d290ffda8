// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

use crate::index::{DocId, InvertedIndex, PostingList};
use crate::scoring::TermScorer;

/// Docid past the end of every posting list.
pub(crate) const END: DocId = DocId::MAX;

/// Forward-only iterator over one posting list.
pub(crate) struct Cursor<'a> {
    list: &'a PostingList,
    pos: usize,
    slot: usize,
    scorer: TermScorer,
    bound: f64,
    block_size: usize,
    touched: u64,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(list: &'a PostingList, slot: usize, scorer: TermScorer, block_size: usize) -> Self {
        let bound = scorer.bound(list.max_impact());
        Self {
            list,
            pos: 0,
            slot,
            scorer,
            bound,
            block_size,
            touched: u64::from(!list.is_empty()),
        }
    }

    #[inline]
    pub(crate) fn doc(&self) -> DocId {
        self.list.doc_ids().get(self.pos).copied().unwrap_or(END)
    }

    #[inline]
    pub(crate) fn slot(&self) -> usize {
        self.slot
    }

    /// Upper bound of this term's contribution over the whole list.
    #[inline]
    pub(crate) fn bound(&self) -> f64 {
        self.bound
    }

    pub(crate) fn touched(&self) -> u64 {
        self.touched
    }

    #[inline]
    pub(crate) fn score(&self, idx: &InvertedIndex) -> f64 {
        let doc = self.doc();
        let len = if self.scorer.needs_doc_len() {
            idx.doc_len(doc)
        } else {
            0
        };
        self.scorer.score(self.list.impacts()[self.pos], len)
    }

    #[inline]
    pub(crate) fn next(&mut self) {
        if self.pos < self.list.len() {
            self.pos += 1;
            if self.pos < self.list.len() {
                self.touched += 1;
            }
        }
    }

    /// Moves to the first posting with docid `>= target`, skipping whole
    /// blocks by their last docid.
    pub(crate) fn next_geq(&mut self, target: DocId) {
        if self.doc() >= target {
            return;
        }
        let blocks = self.list.blocks();
        let first = self.pos / self.block_size;
        let b = first + blocks[first..].partition_point(|bm| bm.last_doc < target);
        if b == blocks.len() {
            self.pos = self.list.len();
            return;
        }
        let start = (b * self.block_size).max(self.pos);
        let end = ((b + 1) * self.block_size).min(self.list.len());
        let docs = &self.list.doc_ids()[start..end];
        self.pos = start + docs.partition_point(|d| *d < target);
        self.touched += 1;
    }

    /// Block containing the first posting `>= target`, without moving the
    /// cursor: `(bound of that block, its last docid)`. Past the end of the
    /// list this is `(0, END)`.
    pub(crate) fn shallow_block(&self, target: DocId) -> (f64, DocId) {
        let blocks = self.list.blocks();
        let first = (self.pos / self.block_size).min(blocks.len());
        let b = first + blocks[first..].partition_point(|bm| bm.last_doc < target);
        match blocks.get(b) {
            Some(bm) => (self.scorer.bound(bm.max_impact), bm.last_doc),
            None => (0.0, END),
        }
    }
}
