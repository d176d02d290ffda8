// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};

/// Ranked `(doc_id, score)` lists per query, best first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFile {
    queries: BTreeMap<String, Vec<(String, f64)>>,
}

impl RunFile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the ranking of a query. Docids must be unique.
    pub fn insert(&mut self, qid: &str, ranking: Vec<(String, f64)>) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (doc, _) in &ranking {
            if !seen.insert(doc.as_str()) {
                return Err(Error::Parse {
                    line: 0,
                    message: format!("document {doc:?} ranked twice for query {qid:?}"),
                });
            }
        }
        self.queries.insert(qid.to_string(), ranking);
        Ok(())
    }

    pub fn get(&self, qid: &str) -> Option<&[(String, f64)]> {
        self.queries.get(qid).map(Vec::as_slice)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.queries.keys().map(String::as_str)
    }

    pub fn contains_query(&self, qid: &str) -> bool {
        self.queries.contains_key(qid)
    }

    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[(String, f64)])> {
        self.queries.iter().map(|(q, r)| (q.as_str(), r.as_slice()))
    }

    /// Parses `qid Q0 docid rank score tag` lines; each query is ordered by
    /// its rank column.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: BTreeMap<String, Vec<(u64, String, f64, usize)>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: i + 1, message };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", f.len())));
            }
            let rank: u64 = f[3]
                .parse()
                .map_err(|_| err(format!("invalid rank {:?}", f[3])))?;
            let score: f64 = f[4]
                .parse()
                .map_err(|_| err(format!("invalid score {:?}", f[4])))?;
            rows.entry(f[0].to_string())
                .or_default()
                .push((rank, f[2].to_string(), score, i + 1));
        }
        let mut run = Self::new();
        for (qid, mut list) in rows {
            list.sort_by_key(|r| r.0);
            let mut seen = BTreeSet::new();
            for pair in list.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(Error::Parse {
                        line: pair[1].3,
                        message: format!("rank {} repeated for query {qid:?}", pair[1].0),
                    });
                }
            }
            for r in &list {
                if !seen.insert(r.1.clone()) {
                    return Err(Error::Parse {
                        line: r.3,
                        message: format!("document {:?} ranked twice for query {qid:?}", r.1),
                    });
                }
            }
            run.queries
                .insert(qid, list.into_iter().map(|r| (r.1, r.2)).collect());
        }
        Ok(run)
    }

    /// Renders TREC run lines with ranks from 1.
    pub fn to_trec(&self, tag: &str) -> String {
        let mut out = String::new();
        for (qid, list) in &self.queries {
            for (rank, (doc, score)) in list.iter().enumerate() {
                let _ = writeln!(out, "{qid} Q0 {doc} {} {score} {tag}", rank + 1);
            }
        }
        out
    }
}
