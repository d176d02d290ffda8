// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Impact-quantized inverted index with max-score and block-max metadata,
//! and the exact forward index used for rescoring.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{Collection, Lexicon};
use crate::error::{Error, Result};
use crate::vector::{SparseVector, TermId};

pub type DocId = u32;

pub const DEFAULT_BLOCK_SIZE: usize = 64;
pub const DEFAULT_QUANT_BITS: u8 = 8;

/// Maximum impact of one block of postings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockMax {
    pub last_doc: DocId,
    pub max_impact: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostingList {
    doc_ids: Vec<DocId>,
    impacts: Vec<u8>,
    max_impact: u8,
    blocks: Vec<BlockMax>,
}

impl PostingList {
    /// Builds a list from strictly increasing docids and their impacts,
    /// computing max and block metadata.
    pub fn new(doc_ids: Vec<DocId>, impacts: Vec<u8>, block_size: usize) -> Self {
        assert_eq!(doc_ids.len(), impacts.len());
        debug_assert!(doc_ids.windows(2).all(|w| w[0] < w[1]));
        assert!(block_size > 0);
        let blocks = doc_ids
            .chunks(block_size)
            .zip(impacts.chunks(block_size))
            .map(|(docs, imps)| BlockMax {
                last_doc: *docs.last().unwrap(),
                max_impact: imps.iter().copied().max().unwrap(),
            })
            .collect();
        let max_impact = impacts.iter().copied().max().unwrap_or(0);
        Self {
            doc_ids,
            impacts,
            max_impact,
            blocks,
        }
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[DocId] {
        &self.doc_ids
    }

    pub fn impacts(&self) -> &[u8] {
        &self.impacts
    }

    pub fn max_impact(&self) -> u8 {
        self.max_impact
    }

    pub fn blocks(&self) -> &[BlockMax] {
        &self.blocks
    }

    pub fn impact_of(&self, doc: DocId) -> Option<u8> {
        self.doc_ids.binary_search(&doc).ok().map(|i| self.impacts[i])
    }
}

/// Linear quantizer mapping `(0, max_weight]` onto `1..=2^bits - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    scale: f64,
    levels: u32,
}

impl Quantizer {
    pub fn new(max_weight: f64, bits: u8) -> Result<Self> {
        if !(1..=8).contains(&bits) {
            return Err(Error::InvalidConfig("quantization bits must be in 1..=8"));
        }
        if !(max_weight > 0.0 && max_weight.is_finite()) {
            return Err(Error::InvalidConfig("maximum weight must be positive and finite"));
        }
        let levels = (1u32 << bits) - 1;
        Ok(Self {
            scale: max_weight / levels as f64,
            levels,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Round-half-up, clamped so a positive weight never maps to 0.
    pub fn quantize(&self, weight: f64) -> u8 {
        let level = libm::floor(weight / self.scale + 0.5);
        (level as u32).clamp(1, self.levels) as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    postings: Vec<PostingList>,
    num_docs: u32,
    quant_scale: f64,
    block_size: usize,
    doc_names: Vec<String>,
    lexicon: Lexicon,
    doc_lens: Vec<u32>,
    avg_doc_len: f64,
}

impl InvertedIndex {
    /// Builds the index with global-max linear quantization.
    pub fn build(c: &Collection, block_size: usize, quant_bits: u8) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::EmptyCollection);
        }
        if block_size == 0 {
            return Err(Error::InvalidConfig("block size must be at least 1"));
        }
        let max_weight = c
            .vectors()
            .iter()
            .filter_map(SparseVector::max_weight)
            .reduce(f64::max)
            .ok_or(Error::NothingToIndex)?;
        let quantizer = Quantizer::new(max_weight, quant_bits)?;
        let vocab = c.lexicon().corpus_size();
        let mut docs: Vec<Vec<DocId>> = vec![Vec::new(); vocab];
        let mut imps: Vec<Vec<u8>> = vec![Vec::new(); vocab];
        for (d, v) in c.vectors().iter().enumerate() {
            for (t, w) in v.iter() {
                let t = t as usize;
                if t >= vocab {
                    return Err(Error::InvalidConfig("document term outside the corpus lexicon"));
                }
                docs[t].push(d as DocId);
                imps[t].push(quantizer.quantize(w));
            }
        }
        let postings = docs
            .into_iter()
            .zip(imps)
            .map(|(d, i)| PostingList::new(d, i, block_size))
            .collect();
        Self::from_parts(
            postings,
            c.len() as u32,
            quantizer.scale(),
            block_size,
            c.ids().to_vec(),
            c.lexicon().corpus_view(),
        )
    }

    /// Assembles an index from stored parts, validating invariants and
    /// recomputing the derived document lengths.
    pub fn from_parts(
        postings: Vec<PostingList>,
        num_docs: u32,
        quant_scale: f64,
        block_size: usize,
        doc_names: Vec<String>,
        lexicon: Lexicon,
    ) -> Result<Self> {
        if !(quant_scale > 0.0 && quant_scale.is_finite()) {
            return Err(Error::InvalidConfig("quantization scale must be positive"));
        }
        if doc_names.len() != num_docs as usize {
            return Err(Error::InvalidConfig("document name count differs from num_docs"));
        }
        if postings.len() != lexicon.len() {
            return Err(Error::InvalidConfig(
                "posting list count differs from lexicon size",
            ));
        }
        let mut doc_lens = vec![0u32; num_docs as usize];
        for list in &postings {
            for &d in list.doc_ids() {
                if d >= num_docs {
                    return Err(Error::DocOutOfRange { doc: d, num_docs });
                }
                doc_lens[d as usize] += 1;
            }
        }
        let total: u64 = doc_lens.iter().map(|l| *l as u64).sum();
        let avg_doc_len = if num_docs == 0 {
            0.0
        } else {
            total as f64 / num_docs as f64
        };
        Ok(Self {
            postings,
            num_docs,
            quant_scale,
            block_size,
            doc_names,
            lexicon,
            doc_lens,
            avg_doc_len,
        })
    }

    pub fn num_docs(&self) -> u32 {
        self.num_docs
    }

    pub fn quant_scale(&self) -> f64 {
        self.quant_scale
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn vocab_size(&self) -> usize {
        self.postings.len()
    }

    pub fn postings(&self) -> &[PostingList] {
        &self.postings
    }

    /// `None` for terms outside the indexed vocabulary.
    pub fn posting_list(&self, term: TermId) -> Option<&PostingList> {
        self.postings.get(term as usize)
    }

    pub fn doc_names(&self) -> &[String] {
        &self.doc_names
    }

    pub fn doc_name(&self, doc: DocId) -> Option<&str> {
        self.doc_names.get(doc as usize).map(String::as_str)
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Number of postings of a document.
    pub fn doc_len(&self, doc: DocId) -> u32 {
        self.doc_lens[doc as usize]
    }

    pub fn doc_lens(&self) -> &[u32] {
        &self.doc_lens
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn min_doc_len(&self) -> u32 {
        self.doc_lens
            .iter()
            .copied()
            .filter(|l| *l > 0)
            .min()
            .unwrap_or(0)
    }

    pub fn total_postings(&self) -> usize {
        self.postings.iter().map(PostingList::len).sum()
    }

    pub fn dequantize(&self, impact: u8) -> f64 {
        impact as f64 * self.quant_scale
    }
}

/// Exact docid -> vector map used by the rescoring step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardIndex {
    vectors: Vec<SparseVector>,
}

impl ForwardIndex {
    pub fn build(c: &Collection) -> Self {
        Self {
            vectors: c.vectors().to_vec(),
        }
    }

    pub fn from_vectors(vectors: Vec<SparseVector>) -> Self {
        Self { vectors }
    }

    pub fn num_docs(&self) -> u32 {
        self.vectors.len() as u32
    }

    pub fn get(&self, doc: DocId) -> Result<&SparseVector> {
        self.vectors.get(doc as usize).ok_or(Error::DocOutOfRange {
            doc,
            num_docs: self.num_docs(),
        })
    }

    pub fn vectors(&self) -> &[SparseVector] {
        &self.vectors
    }
}
