// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Ranking effectiveness metrics.
//!
//! Queries are evaluated over the judged set: every query in the qrels gets
//! a value, a judged query missing from the run scores 0. Run queries
//! without judgments are excluded and listed in the report.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::RunFile;
use crate::corpus::Qrels;

/// nDCG gain as a function of the relevance grade.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Gain {
    /// `gain = grade` (trec_eval's `ndcg_cut`).
    #[default]
    Linear,
    /// `gain = 2^grade - 1`.
    Exponential,
}

impl Gain {
    fn of(self, grade: u32) -> f64 {
        match self {
            Gain::Linear => grade as f64,
            Gain::Exponential => libm::exp2(grade as f64) - 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub mean: f64,
    pub per_query: BTreeMap<String, f64>,
    /// Run queries with no judgments.
    pub excluded: Vec<String>,
    /// Judged queries with no document of grade >= 1.
    pub no_relevant: Vec<String>,
}

fn evaluate(
    run: &RunFile,
    qrels: &Qrels,
    mut per_query: impl FnMut(&[(String, f64)], &BTreeMap<String, u32>) -> f64,
) -> MetricReport {
    let mut report = MetricReport::default();
    for qid in qrels.query_ids() {
        let judged = qrels.query(qid).expect("listed query");
        if !judged.values().any(|g| *g >= 1) {
            report.no_relevant.push(qid.to_string());
        }
        let ranking = run.get(qid).unwrap_or(&[]);
        report
            .per_query
            .insert(qid.to_string(), per_query(ranking, judged));
    }
    report.excluded = run
        .query_ids()
        .filter(|q| !qrels.contains_query(q))
        .map(str::to_string)
        .collect();
    if !report.per_query.is_empty() {
        report.mean = report.per_query.values().sum::<f64>() / report.per_query.len() as f64;
    }
    report
}

fn grade(judged: &BTreeMap<String, u32>, doc: &str) -> u32 {
    judged.get(doc).copied().unwrap_or(0)
}

/// Mean reciprocal rank of the first document with grade >= 1.
pub fn mrr_at(run: &RunFile, qrels: &Qrels, cutoff: usize) -> MetricReport {
    evaluate(run, qrels, |ranking, judged| {
        ranking
            .iter()
            .take(cutoff)
            .position(|(d, _)| grade(judged, d) >= 1)
            .map_or(0.0, |i| 1.0 / (i + 1) as f64)
    })
}

/// nDCG with discount `1 / log2(rank + 1)`; the ideal ranking sorts the
/// judged grades descending. Queries without relevant documents score 0.
pub fn ndcg_at(run: &RunFile, qrels: &Qrels, cutoff: usize, gain: Gain) -> MetricReport {
    evaluate(run, qrels, |ranking, judged| {
        let dcg: f64 = ranking
            .iter()
            .take(cutoff)
            .enumerate()
            .map(|(i, (d, _))| gain.of(grade(judged, d)) / libm::log2(i as f64 + 2.0))
            .sum();
        let mut ideal: Vec<u32> = judged.values().copied().collect();
        ideal.sort_unstable_by(|a, b| b.cmp(a));
        let idcg: f64 = ideal
            .iter()
            .take(cutoff)
            .enumerate()
            .map(|(i, g)| gain.of(*g) / libm::log2(i as f64 + 2.0))
            .sum();
        if idcg > 0.0 {
            dcg / idcg
        } else {
            0.0
        }
    })
}

/// Fraction of queries with a document of grade >= 1 in the top `cutoff`.
pub fn success_at(run: &RunFile, qrels: &Qrels, cutoff: usize) -> MetricReport {
    evaluate(run, qrels, |ranking, judged| {
        let hit = ranking.iter().take(cutoff).any(|(d, _)| grade(judged, d) >= 1);
        if hit {
            1.0
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(lines: &[(&str, &[&str])]) -> RunFile {
        let mut r = RunFile::new();
        for (q, docs) in lines {
            let n = docs.len();
            r.insert(
                q,
                docs.iter()
                    .enumerate()
                    .map(|(i, d)| (d.to_string(), (n - i) as f64))
                    .collect(),
            )
            .unwrap();
        }
        r
    }

    #[test]
    fn mrr_examples() {
        let qrels = Qrels::parse("q1 0 c 1\nq2 0 a 1\nq3 0 b 1\n").unwrap();
        let r = run(&[("q1", &["a", "b", "c"]), ("q2", &["a"]), ("q3", &["x", "b"])]);
        let rep = mrr_at(&r, &qrels, 10);
        assert_eq!(rep.per_query["q1"], 1.0 / 3.0);
        assert_eq!(rep.per_query["q2"], 1.0);
        assert_eq!(rep.per_query["q3"], 0.5);

        let qrels = Qrels::parse("q1 0 a 1\nq2 0 b 1\n").unwrap();
        let r = run(&[("q1", &["a"]), ("q2", &["x", "b"])]);
        assert_eq!(mrr_at(&r, &qrels, 10).mean, 0.75);

        let deep: Vec<String> = (0..11).map(|i| alloc::format!("n{i}")).collect();
        let names: Vec<&str> = deep.iter().map(String::as_str).collect();
        let qrels = Qrels::parse("q1 0 n10 1\n").unwrap();
        assert_eq!(mrr_at(&run(&[("q1", &names)]), &qrels, 10).mean, 0.0);
    }

    #[test]
    fn unjudged_run_queries_are_excluded() {
        let qrels = Qrels::parse("q1 0 a 1\n").unwrap();
        let r = run(&[("q1", &["a"]), ("q9", &["a"])]);
        let rep = mrr_at(&r, &qrels, 10);
        assert_eq!(rep.excluded, vec!["q9".to_string()]);
        assert_eq!(rep.mean, 1.0);
    }

    #[test]
    fn ndcg_examples() {
        let qrels = Qrels::parse("q 0 a 2\nq 0 b 1\nq 0 c 0\n").unwrap();
        assert_eq!(
            ndcg_at(&run(&[("q", &["a", "b", "c"])]), &qrels, 10, Gain::Linear).mean,
            1.0
        );

        // relevant at ranks 1 and 3
        let qrels = Qrels::parse("q 0 a 1\nq 0 c 1\n").unwrap();
        let v = ndcg_at(&run(&[("q", &["a", "b", "c"])]), &qrels, 10, Gain::Linear).mean;
        assert!((v - 0.919_720_789_148_187_6).abs() < 1e-12, "{v}");

        // judged but absent from run
        let rep = ndcg_at(&RunFile::new(), &qrels, 10, Gain::Linear);
        assert_eq!(rep.per_query["q"], 0.0);
    }

    #[test]
    fn ndcg_without_relevant_documents_is_zero_and_counted() {
        let qrels = Qrels::parse("q 0 a 0\n").unwrap();
        let rep = ndcg_at(&run(&[("q", &["a"])]), &qrels, 10, Gain::Exponential);
        assert_eq!(rep.mean, 0.0);
        assert_eq!(rep.no_relevant, vec!["q".to_string()]);
    }

    #[test]
    fn success_cutoff() {
        let qrels = Qrels::parse("q1 0 e 1\nq2 0 f 1\n").unwrap();
        let r = run(&[
            ("q1", &["a", "b", "c", "d", "e"]),
            ("q2", &["a", "b", "c", "d", "e", "f"]),
        ]);
        let rep = success_at(&r, &qrels, 5);
        assert_eq!(rep.per_query["q1"], 1.0);
        assert_eq!(rep.per_query["q2"], 0.0);
        let r = run(&[("q1", &["e"]), ("q2", &["f"])]);
        assert_eq!(success_at(&r, &qrels, 5).mean, 1.0);
    }
}
