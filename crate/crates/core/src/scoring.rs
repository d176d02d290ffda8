// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Scoring functions: plain dot product, saturated term re-weighting and
//! BM25.
//!
//! The saturated score of a document is
//! `sum_t B(t,q) * (k1 + 1) * TF(t,d) / (TF(t,d) + k1)` with `b = 0`. It
//! degenerates to the dot product as `k1` grows and to the sum of matching
//! query weights at `k1 = 0`.

use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::index::{DocId, InvertedIndex};
use crate::vector::SparseVector;

pub const DEFAULT_K1: f64 = 100.0;

/// The saturation parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum K1 {
    Finite(f64),
    Infinite,
}

impl K1 {
    /// Sweep values for the saturation trade-off curves.
    pub const SWEEP: [K1; 4] = [
        K1::Finite(10.0),
        K1::Finite(100.0),
        K1::Finite(400.0),
        K1::Infinite,
    ];

    pub fn validate(self) -> Result<Self> {
        match self {
            K1::Finite(k) if !(k >= 0.0 && k.is_finite()) => Err(Error::InvalidConfig(
                "k1 must be a finite non-negative number or inf",
            )),
            _ => Ok(self),
        }
    }
}

impl Default for K1 {
    fn default() -> Self {
        K1::Finite(DEFAULT_K1)
    }
}

impl fmt::Display for K1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            K1::Finite(k) => write!(f, "{k}"),
            K1::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for K1 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "INF" | "infinity" | "Infinity" | "∞" => Ok(K1::Infinite),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig("k1 must be a number or inf"))
                .and_then(|k| K1::Finite(k).validate()),
        }
    }
}

/// `(k1 + 1) * tf / (tf + k1)`; identity at `k1 = inf`, and 1 for any
/// positive `tf` at `k1 = 0`.
#[inline]
pub fn saturate(tf: f64, k1: K1) -> f64 {
    match k1 {
        K1::Infinite => tf,
        _ if tf <= 0.0 => 0.0,
        K1::Finite(k) => (k + 1.0) * tf / (tf + k),
    }
}

/// Walks the shared terms of two vectors in term order.
fn for_shared(a: &SparseVector, b: &SparseVector, mut f: impl FnMut(f64, f64)) {
    let (at, aw) = (a.terms(), a.weights());
    let (bt, bw) = (b.terms(), b.weights());
    let (mut i, mut j) = (0, 0);
    while i < at.len() && j < bt.len() {
        match at[i].cmp(&bt[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                f(aw[i], bw[j]);
                i += 1;
                j += 1;
            }
        }
    }
}

pub fn score_dot(q: &SparseVector, d: &SparseVector) -> f64 {
    let mut s = 0.0;
    for_shared(q, d, |qw, dw| s += qw * dw);
    s
}

pub fn score_saturated(q: &SparseVector, d: &SparseVector, k1: K1) -> f64 {
    let mut s = 0.0;
    for_shared(q, d, |qw, tf| s += qw * saturate(tf, k1));
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn validate(self) -> Result<Self> {
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(Error::InvalidConfig("BM25 k1 must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidConfig("BM25 b must lie in [0, 1]"));
        }
        Ok(self)
    }

    /// Term-frequency component with length normalization.
    #[inline]
    pub fn tf_part(&self, tf: f64, doc_len: f64, avg_doc_len: f64) -> f64 {
        if tf <= 0.0 {
            return 0.0;
        }
        let norm = if avg_doc_len > 0.0 {
            1.0 - self.b + self.b * doc_len / avg_doc_len
        } else {
            1.0
        };
        tf * (self.k1 + 1.0) / (tf + self.k1 * norm)
    }
}

/// `ln((N - df + 0.5) / (df + 0.5) + 1)`
#[inline]
pub fn bm25_idf(num_docs: u32, df: usize) -> f64 {
    let n = num_docs as f64;
    let df = df as f64;
    libm::log((n - df + 0.5) / (df + 0.5) + 1.0)
}

/// BM25 of an indexed document for the term set of `q` (query weights are
/// ignored). Quantized impacts act as term frequencies and document length
/// is the document's posting count.
pub fn score_bm25(q: &SparseVector, doc: DocId, idx: &InvertedIndex, p: &Bm25Params) -> f64 {
    let dl = idx.doc_len(doc) as f64;
    let mut s = 0.0;
    for &t in q.terms() {
        let Some(list) = idx.posting_list(t) else {
            continue;
        };
        if let Some(impact) = list.impact_of(doc) {
            let idf = bm25_idf(idx.num_docs(), list.len());
            s += idf * p.tf_part(impact as f64, dl, idx.avg_doc_len());
        }
    }
    s
}

/// Scoring function used by query evaluation over an inverted index.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum Scorer {
    #[default]
    Dot,
    Saturated(K1),
    Bm25(Bm25Params),
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scorer::Dot => f.write_str("dot"),
            Scorer::Saturated(k1) => write!(f, "sat:{k1}"),
            Scorer::Bm25(p) => write!(f, "bm25:{}:{}", p.k1, p.b),
        }
    }
}

impl FromStr for Scorer {
    type Err = Error;

    /// `dot`, `sat:<k1>` (or `sat` for the default k1), `bm25`,
    /// `bm25:<k1>:<b>`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        match (parts.next(), parts.next(), parts.next()) {
            (Some("dot"), None, _) => Ok(Scorer::Dot),
            (Some("sat"), None, _) => Ok(Scorer::Saturated(K1::default())),
            (Some("sat"), Some(k), None) => Ok(Scorer::Saturated(k.parse()?)),
            (Some("bm25"), None, _) => Ok(Scorer::Bm25(Bm25Params::default())),
            (Some("bm25"), Some(k1), Some(b)) => {
                let k1 = k1.parse().map_err(|_| Error::InvalidConfig("bad BM25 k1"))?;
                let b = b.parse().map_err(|_| Error::InvalidConfig("bad BM25 b"))?;
                Ok(Scorer::Bm25(Bm25Params { k1, b }.validate()?))
            }
            _ => Err(Error::InvalidConfig(
                "scorer must be dot, sat[:k1] or bm25[:k1:b]",
            )),
        }
    }
}

/// Relative inflation applied to every upper bound so that bounds dominate
/// realized scores despite floating-point rounding.
pub(crate) const BOUND_SLACK: f64 = 1e-9;

/// Per-query-term scoring closure over quantized postings.
#[derive(Debug, Clone, Copy)]
pub struct TermScorer {
    kind: TermKind,
}

#[derive(Debug, Clone, Copy)]
enum TermKind {
    Dot {
        weight: f64,
        scale: f64,
    },
    Saturated {
        weight: f64,
        scale: f64,
        k1: K1,
    },
    Bm25 {
        idf: f64,
        params: Bm25Params,
        avg_doc_len: f64,
        min_doc_len: f64,
    },
}

impl TermScorer {
    pub fn new(scorer: &Scorer, query_weight: f64, df: usize, idx: &InvertedIndex) -> Self {
        let scale = idx.quant_scale();
        let kind = match *scorer {
            Scorer::Dot => TermKind::Dot {
                weight: query_weight,
                scale,
            },
            Scorer::Saturated(k1) => TermKind::Saturated {
                weight: query_weight,
                scale,
                k1,
            },
            Scorer::Bm25(params) => TermKind::Bm25 {
                idf: bm25_idf(idx.num_docs(), df),
                params,
                avg_doc_len: idx.avg_doc_len(),
                min_doc_len: idx.min_doc_len() as f64,
            },
        };
        Self { kind }
    }

    /// Score contribution of one posting.
    #[inline]
    pub fn score(&self, impact: u8, doc_len: u32) -> f64 {
        match self.kind {
            TermKind::Dot { weight, scale } => weight * (impact as f64 * scale),
            TermKind::Saturated { weight, scale, k1 } => weight * saturate(impact as f64 * scale, k1),
            TermKind::Bm25 {
                idf,
                params,
                avg_doc_len,
                ..
            } => idf * params.tf_part(impact as f64, doc_len as f64, avg_doc_len),
        }
    }

    /// An upper bound on [`TermScorer::score`] over every posting whose
    /// impact is at most `max_impact`.
    #[inline]
    pub fn bound(&self, max_impact: u8) -> f64 {
        let raw = match self.kind {
            TermKind::Bm25 {
                idf,
                params,
                avg_doc_len,
                min_doc_len,
            } => idf * params.tf_part(max_impact as f64, min_doc_len, avg_doc_len),
            _ => self.score(max_impact, 0),
        };
        raw * (1.0 + BOUND_SLACK)
    }

    pub fn needs_doc_len(&self) -> bool {
        matches!(self.kind, TermKind::Bm25 { .. })
    }
}
