// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Collections of sparse vectors, their term lexicon, summary statistics and
//! relevance judgments.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vector::{SparseVector, TermId};

/// Bidirectional term string <-> id map.
///
/// Ids below [`Lexicon::corpus_size`] were assigned while loading the
/// document collection. Ids at or above it were assigned later (query-only
/// terms) and have no postings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    terms: Vec<String>,
    ids: BTreeMap<String, TermId>,
    corpus_size: usize,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a lexicon from its id-ordered term list. All terms are
    /// treated as corpus terms.
    pub fn from_terms(terms: Vec<String>) -> Result<Self> {
        let mut ids = BTreeMap::new();
        for (i, t) in terms.iter().enumerate() {
            if ids.insert(t.clone(), i as TermId).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("duplicate lexicon term {t:?}"),
                });
            }
        }
        let corpus_size = terms.len();
        Ok(Self {
            terms,
            ids,
            corpus_size,
        })
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Returns the corpus-only view (query-only ids dropped).
    pub fn corpus_view(&self) -> Self {
        let terms = self.terms[..self.corpus_size].to_vec();
        let ids = self
            .ids
            .iter()
            .filter(|(_, id)| (**id as usize) < self.corpus_size)
            .map(|(t, id)| (t.clone(), *id))
            .collect();
        Self {
            terms,
            ids,
            corpus_size: self.corpus_size,
        }
    }

    fn get_or_insert(&mut self, term: &str) -> (TermId, bool) {
        if let Some(id) = self.ids.get(term) {
            return (*id, false);
        }
        let id = self.terms.len() as TermId;
        self.terms.push(term.to_string());
        self.ids.insert(term.to_string(), id);
        (id, true)
    }
}

/// A set of identified sparse vectors sharing one lexicon. The position of
/// a vector is its internal docid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Collection {
    ids: Vec<String>,
    vectors: Vec<SparseVector>,
    lexicon: Lexicon,
    oov_terms: Vec<TermId>,
}

impl Collection {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vectors(&self) -> &[SparseVector] {
        &self.vectors
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// Term ids created for terms unknown to the lexicon supplied at load
    /// time. Empty when the collection built its own lexicon.
    pub fn oov_terms(&self) -> &[TermId] {
        &self.oov_terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SparseVector)> {
        self.ids.iter().map(String::as_str).zip(self.vectors.iter())
    }

    /// Same ids and lexicon, new vectors. Used by the pruning strategies.
    pub fn with_vectors(&self, vectors: Vec<SparseVector>) -> Self {
        assert_eq!(vectors.len(), self.vectors.len());
        Self {
            ids: self.ids.clone(),
            vectors,
            lexicon: self.lexicon.clone(),
            oov_terms: self.oov_terms.clone(),
        }
    }

    pub fn into_parts(self) -> (Vec<String>, Vec<SparseVector>, Lexicon) {
        (self.ids, self.vectors, self.lexicon)
    }
}

/// Incremental collection construction with id uniqueness and lexicon
/// mapping.
#[derive(Debug, Default)]
pub struct CollectionBuilder {
    ids: Vec<String>,
    seen: BTreeSet<String>,
    vectors: Vec<SparseVector>,
    lexicon: Lexicon,
    extend_corpus: bool,
    oov_terms: Vec<TermId>,
}

impl CollectionBuilder {
    /// A builder that grows its own lexicon; every term becomes a corpus term.
    pub fn new() -> Self {
        Self {
            extend_corpus: true,
            ..Self::default()
        }
    }

    /// A builder mapping terms through an existing corpus lexicon. Unknown
    /// terms get fresh ids past the corpus vocabulary and are reported by
    /// [`Collection::oov_terms`].
    pub fn with_lexicon(lexicon: Lexicon) -> Self {
        Self {
            lexicon,
            extend_corpus: false,
            ..Self::default()
        }
    }

    pub fn push<'a, I>(&mut self, id: &str, entries: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        if self.seen.contains(id) {
            return Err(Error::DuplicateDocId(id.to_string()));
        }
        let mut pairs = Vec::new();
        for (term, weight) in entries {
            let (tid, fresh) = self.lexicon.get_or_insert(term);
            if fresh && !self.extend_corpus {
                self.oov_terms.push(tid);
            }
            pairs.push((tid, weight));
        }
        let vector = SparseVector::from_pairs(pairs)?;
        self.seen.insert(id.to_string());
        self.ids.push(id.to_string());
        self.vectors.push(vector);
        Ok(())
    }

    pub fn finish(mut self) -> Collection {
        if self.extend_corpus {
            self.lexicon.corpus_size = self.lexicon.terms.len();
        }
        Collection {
            ids: self.ids,
            vectors: self.vectors,
            lexicon: self.lexicon,
            oov_terms: self.oov_terms,
        }
    }
}

/// Average and maximum vector sizes of a document (and optionally query)
/// collection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectionStats {
    pub avg_doc_terms: f64,
    pub avg_query_terms: f64,
    pub num_docs: usize,
    pub vocab_size: usize,
    pub max_doc_terms: usize,
}

impl CollectionStats {
    /// Computes statistics over vector nonzeros. `avg_query_terms` is 0 when
    /// no query collection is given.
    pub fn compute(docs: &Collection, queries: Option<&Collection>) -> Result<Self> {
        let avg_doc_terms = mean_nnz(docs)?;
        let avg_query_terms = match queries {
            Some(q) => mean_nnz(q)?,
            None => 0.0,
        };
        let max_doc_terms = docs.vectors.iter().map(SparseVector::nnz).max().unwrap_or(0);
        Ok(Self {
            avg_doc_terms,
            avg_query_terms,
            num_docs: docs.len(),
            vocab_size: docs.lexicon.corpus_size(),
            max_doc_terms,
        })
    }
}

fn mean_nnz(c: &Collection) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let total: usize = c.vectors.iter().map(SparseVector::nnz).sum();
    Ok(total as f64 / c.len() as f64)
}

/// Graded relevance judgments keyed by query then document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses TREC qrels text (`qid iter docid grade`). Blank lines are
    /// skipped; a repeated `(qid, docid)` keeps the last grade.
    pub fn parse(text: &str) -> Result<Self> {
        let mut qrels = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            }
            let grade: i64 = fields[3]
                .parse()
                .map_err(|_| err(format!("invalid grade {:?}", fields[3])))?;
            if grade < 0 {
                return Err(err(format!("negative grade {grade}")));
            }
            let grade = u32::try_from(grade).map_err(|_| err(format!("grade {grade} too large")))?;
            qrels.insert(fields[0], fields[2], grade);
        }
        Ok(qrels)
    }

    pub fn insert(&mut self, qid: &str, doc: &str, grade: u32) {
        self.judgments
            .entry(qid.to_string())
            .or_default()
            .insert(doc.to_string(), grade);
    }

    pub fn grade(&self, qid: &str, doc: &str) -> Option<u32> {
        self.judgments.get(qid)?.get(doc).copied()
    }

    pub fn query(&self, qid: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(qid)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn contains_query(&self, qid: &str) -> bool {
        self.judgments.contains_key(qid)
    }

    pub fn num_queries(&self) -> usize {
        self.judgments.len()
    }

    pub fn len(&self) -> usize {
        self.judgments.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}
