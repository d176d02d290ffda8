// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Per-query latency and work measurement.
//!
//! Every query is run `warmup` times untimed, then timed `repetitions`
//! times; a query's latency is the mean of its repetitions. Work counters
//! are deterministic and come from the last repetition.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;
use twostep_core::pipeline::{gt_search, two_step_search, TwoStepConfig};
use twostep_core::retrieval::{search, ScoredList, SearchParams, SearchStats};
use twostep_core::{Bm25Params, InvertedIndex, SparseVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchOptions {
    pub warmup: usize,
    pub repetitions: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            warmup: 2,
            repetitions: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    /// Mean latency of each query in milliseconds, in query order.
    pub samples_ms: Vec<f64>,
    pub avg_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
    pub min_ms: f64,
    pub work: SearchStats,
}

/// The `ceil(p * n)`-th smallest sample (1-based).
pub fn percentile(samples: &[f64], p: f64) -> f64 {
    assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

impl LatencyReport {
    pub fn from_samples(samples_ms: Vec<f64>, work: SearchStats) -> Result<Self> {
        if samples_ms.is_empty() {
            return Err(Error::Invalid("cannot benchmark zero queries".into()));
        }
        let avg_ms = samples_ms.iter().sum::<f64>() / samples_ms.len() as f64;
        Ok(Self {
            avg_ms,
            median_ms: percentile(&samples_ms, 0.5),
            p99_ms: percentile(&samples_ms, 0.99),
            min_ms: percentile(&samples_ms, 0.0),
            work,
            samples_ms,
        })
    }

    /// `avg_ms / baseline.avg_ms`.
    pub fn normalized_to(&self, baseline: &LatencyReport) -> f64 {
        self.avg_ms / baseline.avg_ms
    }
}

/// Times `run` over every query. Returns the report and the results of the
/// final timed pass.
pub fn run_bench<Q>(
    queries: &[Q],
    opts: BenchOptions,
    mut run: impl FnMut(&Q) -> Result<ScoredList>,
) -> Result<(LatencyReport, Vec<ScoredList>)> {
    if queries.is_empty() {
        return Err(Error::Invalid("cannot benchmark zero queries".into()));
    }
    let reps = opts.repetitions.max(1);
    for _ in 0..opts.warmup {
        for q in queries {
            std::hint::black_box(run(q)?);
        }
    }
    let mut totals = vec![0.0; queries.len()];
    let mut last = Vec::new();
    for rep in 0..reps {
        let keep = rep + 1 == reps;
        for (i, q) in queries.iter().enumerate() {
            let start = Instant::now();
            let result = std::hint::black_box(run(q)?);
            totals[i] += start.elapsed().as_secs_f64() * 1e3;
            if keep {
                last.push(result);
            }
        }
    }
    let mut work = SearchStats::default();
    for r in &last {
        work += r.stats;
    }
    let samples = totals.into_iter().map(|t| t / reps as f64).collect();
    Ok((LatencyReport::from_samples(samples, work)?, last))
}

/// What a benchmark row evaluates.
#[derive(Clone, Copy)]
pub enum Workload<'a> {
    TwoStep(TwoStepConfig<'a>),
    Gt(TwoStepConfig<'a>, Bm25Params),
    Single(&'a InvertedIndex, &'a SearchParams),
}

impl Workload<'_> {
    /// Runs one query; work counters cover both stages of a pipeline.
    pub fn run(&self, q: &SparseVector) -> Result<ScoredList> {
        let r = match self {
            Workload::TwoStep(cfg) => two_step_search(q, cfg)?,
            Workload::Gt(cfg, p) => gt_search(q, cfg, *p)?,
            Workload::Single(idx, params) => return Ok(search(q, idx, params)?),
        };
        let mut out = r.rescored;
        out.stats += r.first_stage.stats;
        Ok(out)
    }
}

/// Descriptive columns of a sweep row.
#[derive(Debug, Clone)]
pub struct SweepConfig<'a> {
    pub name: String,
    pub algorithm: String,
    pub k1: String,
    pub doc_prune: String,
    pub query_prune: String,
    pub workload: Workload<'a>,
}

impl std::fmt::Debug for Workload<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Workload::TwoStep(_) => f.write_str("TwoStep"),
            Workload::Gt(..) => f.write_str("Gt"),
            Workload::Single(..) => f.write_str("Single"),
        }
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "config",
    "algorithm",
    "k1",
    "doc_prune",
    "query_prune",
    "avg_ms",
    "p99_ms",
    "postings_touched",
    "docs_fully_scored",
    "norm_vs_baseline",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub config: String,
    pub algorithm: String,
    pub k1: String,
    pub doc_prune: String,
    pub query_prune: String,
    pub avg_ms: f64,
    pub p99_ms: f64,
    pub postings_touched: u64,
    pub docs_fully_scored: u64,
    pub norm_vs_baseline: f64,
}

/// Benchmarks each configuration over `queries`. Latency is normalized by
/// the row named `baseline`, or by the first row when absent.
pub fn sweep(
    configs: &[SweepConfig<'_>],
    queries: &[SparseVector],
    opts: BenchOptions,
    baseline: Option<&str>,
) -> Result<Vec<BenchRow>> {
    let mut reports = Vec::with_capacity(configs.len());
    for c in configs {
        let (report, _) = run_bench(queries, opts, |q| c.workload.run(q))?;
        reports.push(report);
    }
    let base = match baseline {
        Some(name) => configs
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::Invalid(format!("baseline configuration {name:?} not in sweep")))?,
        None => 0,
    };
    Ok(configs
        .iter()
        .zip(&reports)
        .map(|(c, r)| BenchRow {
            config: c.name.clone(),
            algorithm: c.algorithm.clone(),
            k1: c.k1.clone(),
            doc_prune: c.doc_prune.clone(),
            query_prune: c.query_prune.clone(),
            avg_ms: r.avg_ms,
            p99_ms: r.p99_ms,
            postings_touched: r.work.postings_touched,
            docs_fully_scored: r.work.docs_fully_scored,
            norm_vs_baseline: r.normalized_to(&reports[base]),
        })
        .collect())
}

/// Writes rows as CSV; the header is written even with no rows.
pub fn write_csv(out: impl Write, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let csv_err = |e: csv::Error| Error::Invalid(format!("writing CSV: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("writing CSV: {e}")))
}
