// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Deterministic synthetic corpora with Zipf-distributed terms and weights,
//! shaped like learned sparse vectors: documents with tens of expanded
//! terms, short queries drawn from a source document, and judgments from
//! exact full-vector scores.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use twostep_core::{scoring::score_dot, Collection, CollectionBuilder, Qrels};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub num_docs: usize,
    pub num_queries: usize,
    pub vocab: usize,
    pub avg_doc_terms: usize,
    pub avg_query_terms: usize,
    /// Exponent of the term-popularity distribution.
    pub term_skew: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            num_docs: 5000,
            num_queries: 100,
            vocab: 2000,
            avg_doc_terms: 60,
            avg_query_terms: 12,
            term_skew: 1.05,
            seed: 42,
        }
    }
}

pub struct SynthCorpus {
    pub docs: Collection,
    pub queries: Collection,
    pub qrels: Qrels,
}

fn term_name(t: usize) -> String {
    format!("t{t}")
}

/// Samples `n` distinct terms with Zipf-distributed weights.
fn sample_vector(
    rng: &mut ChaCha8Rng,
    terms: &Zipf<f64>,
    weights: &Zipf<f64>,
    n: usize,
    vocab: usize,
) -> Vec<(String, f64)> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < n * 20 {
        attempts += 1;
        let t = (terms.sample(rng) as usize - 1).min(vocab - 1);
        if !seen.insert(t) {
            continue;
        }
        // heavy-tailed weights, quantized to 1/100 so ties occur
        let r = weights.sample(rng);
        let w = (300.0 / r + rng.random_range(0.0..20.0)).round() / 100.0;
        out.push((term_name(t), w.max(0.01)));
    }
    out
}

pub fn generate(p: &SynthParams) -> Result<SynthCorpus> {
    if p.num_docs == 0 || p.vocab == 0 || p.avg_doc_terms == 0 || p.avg_query_terms == 0 {
        return Err(Error::Invalid("synthetic corpus sizes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let terms = Zipf::new(p.vocab as f64, p.term_skew).map_err(|e| Error::Invalid(e.to_string()))?;
    let weights = Zipf::new(64.0, 1.1).map_err(|e| Error::Invalid(e.to_string()))?;

    let mut builder = CollectionBuilder::new();
    for d in 0..p.num_docs {
        let lo = (p.avg_doc_terms / 2).max(1);
        let n = rng.random_range(lo..=p.avg_doc_terms * 3 / 2);
        let v = sample_vector(&mut rng, &terms, &weights, n, p.vocab);
        builder.push(&format!("D{d}"), v.iter().map(|(t, w)| (t.as_str(), *w)))?;
    }
    let docs = builder.finish();

    let mut qb = CollectionBuilder::with_lexicon(docs.lexicon().clone());
    let mut sources = Vec::with_capacity(p.num_queries);
    for q in 0..p.num_queries {
        let src = rng.random_range(0..docs.len());
        let lo = (p.avg_query_terms / 2).max(1);
        let n = rng.random_range(lo..=p.avg_query_terms * 3 / 2);
        let doc = &docs.vectors()[src];
        let mut entries: Vec<(String, f64)> = Vec::new();
        for (t, w) in doc.iter() {
            if entries.len() * 2 >= n {
                break;
            }
            if rng.random_bool(0.4) {
                let jitter = rng.random_range(0.5..1.5);
                entries.push((
                    docs.lexicon().term(t).unwrap().to_string(),
                    (w * jitter * 100.0).round() / 100.0 + 0.01,
                ));
            }
        }
        for (t, w) in sample_vector(&mut rng, &terms, &weights, n - entries.len().min(n), p.vocab) {
            if !entries.iter().any(|e| e.0 == t) {
                entries.push((t, w));
            }
        }
        qb.push(&format!("Q{q}"), entries.iter().map(|(t, w)| (t.as_str(), *w)))?;
        sources.push(src);
    }
    let queries = qb.finish();

    let mut qrels = Qrels::new();
    for ((qid, q), src) in queries.iter().zip(sources) {
        let mut scored: Vec<(usize, f64)> = docs
            .vectors()
            .iter()
            .enumerate()
            .map(|(d, v)| (d, score_dot(q, v)))
            .filter(|(d, s)| *s > 0.0 && *d != src)
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        qrels.insert(qid, &docs.ids()[src], 2);
        for (d, _) in scored.iter().take(2) {
            qrels.insert(qid, &docs.ids()[*d], 1);
        }
    }
    Ok(SynthCorpus { docs, queries, qrels })
}

/// Renders qrels in TREC format, sorted by query then document.
pub fn qrels_to_trec(q: &Qrels) -> String {
    let mut out = String::new();
    for qid in q.query_ids() {
        for (doc, grade) in q.query(qid).unwrap() {
            out.push_str(&format!("{qid} 0 {doc} {grade}\n"));
        }
    }
    out
}
