// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Command-line interface.
//!
//! Every flag can also be set through `TWOSTEP_<FLAG>` or a `--config`
//! file; see [`crate::config`].

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use twostep_core::eval::{
    intersection_at, mean_and_half_width, mrr_at, ndcg_at, paired_ttest, success_at, Gain, MetricReport,
};
use twostep_core::pipeline::{gt_search, two_step_search, RescoreSource, TwoStepConfig};
use twostep_core::pruning::{
    lexical_size, prune_collection, PruneConfig, PruneStrategy, DEFAULT_DOC_CAP, DEFAULT_QUERY_CAP,
};
use twostep_core::retrieval::search;
use twostep_core::{
    Algorithm, Bm25Params, Collection, CollectionStats, ForwardIndex, InvertedIndex, RunFile, ScoredList,
    Scorer, SearchParams, SparseVector, K1,
};

use crate::bench::{sweep, write_csv, BenchOptions, SweepConfig, Workload};
use crate::error::Error;
use crate::store::{index_size_report, load_index, save_index, SizeReport, StoredIndex};
use crate::synth::{generate, qrels_to_trec, SynthParams};
use crate::{jsonl, trec};

#[derive(Debug, Parser)]
#[command(name = "twostep", version, about = "Two-step learned sparse retrieval")]
pub struct Cli {
    /// `key = value` file whose entries act as environment defaults.
    #[arg(long, global = true, env = "TWOSTEP_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for per-query parallelism [default: available cores;
    /// bench always uses 1].
    #[arg(long, global = true, env = "TWOSTEP_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus, queries and judgments.
    Synth(SynthArgs),
    /// Build the pruned approximate index and the full index.
    Index(IndexArgs),
    /// Statically prune a vector file.
    Prune(PruneArgs),
    /// Single-step search over one index.
    Search(SearchArgs),
    /// Approximate search on the pruned index, then exact rescoring.
    TwoStep(TwoStepArgs),
    /// BM25 candidate selection, then exact rescoring.
    Gt(GtArgs),
    /// nDCG, MRR and Success of a run, optionally tested against a baseline.
    Eval(EvalArgs),
    /// Intersection of a run's top results with a reference run.
    Intersect(IntersectArgs),
    /// Latency and work sweep.
    Bench(BenchArgs),
}

/// Static document pruning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DocPrune {
    /// Top-k at the average vector size, capped.
    Lexical,
    TopK(usize),
    Quantile(f64),
    Threshold(f64),
    None,
}

impl FromStr for DocPrune {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |v: &str| v.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
        match s {
            "lexical" => Ok(DocPrune::Lexical),
            "none" | "full" => Ok(DocPrune::None),
            _ => {
                if let Some(q) = s.strip_prefix("quantile:") {
                    Ok(DocPrune::Quantile(num(q)?))
                } else if let Some(t) = s.strip_prefix("threshold:") {
                    Ok(DocPrune::Threshold(num(t)?))
                } else {
                    match s.parse::<usize>() {
                        Ok(k) if k > 0 => Ok(DocPrune::TopK(k)),
                        _ => Err(format!(
                            "{s:?}: expected lexical, none, a positive size, quantile:Q or threshold:T"
                        )),
                    }
                }
            }
        }
    }
}

impl fmt::Display for DocPrune {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocPrune::Lexical => f.write_str("lexical"),
            DocPrune::TopK(k) => write!(f, "{k}"),
            DocPrune::Quantile(q) => write!(f, "quantile:{q}"),
            DocPrune::Threshold(t) => write!(f, "threshold:{t}"),
            DocPrune::None => f.write_str("none"),
        }
    }
}

/// Top pooling of first-stage queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryPrune {
    TopK(usize),
    Lexical,
    None,
}

impl FromStr for QueryPrune {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lexical" => Ok(QueryPrune::Lexical),
            "none" | "full" => Ok(QueryPrune::None),
            _ => match s.parse::<usize>() {
                Ok(k) if k > 0 => Ok(QueryPrune::TopK(k)),
                _ => Err(format!("{s:?}: expected lexical, none or a positive size")),
            },
        }
    }
}

impl fmt::Display for QueryPrune {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryPrune::TopK(k) => write!(f, "{k}"),
            QueryPrune::Lexical => f.write_str("lexical"),
            QueryPrune::None => f.write_str("none"),
        }
    }
}

impl QueryPrune {
    fn resolve(self, queries: &Collection) -> Option<usize> {
        match self {
            QueryPrune::TopK(k) => Some(k),
            QueryPrune::None => None,
            QueryPrune::Lexical => {
                let total: usize = queries.vectors().iter().map(SparseVector::nnz).sum();
                let avg = total as f64 / queries.len().max(1) as f64;
                Some(lexical_size(avg, DEFAULT_QUERY_CAP))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RescoreKind {
    /// Exact scores from the stored full vectors.
    Forward,
    /// Quantized scores from the full inverted index.
    Inverted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GainKind {
    /// gain = grade
    Linear,
    /// gain = 2^grade - 1
    Exponential,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for docs.jsonl, queries.jsonl and qrels.txt.
    #[arg(long, env = "TWOSTEP_OUT_DIR")]
    pub out_dir: PathBuf,
    #[arg(long, env = "TWOSTEP_NUM_DOCS", default_value_t = 5000)]
    pub num_docs: usize,
    #[arg(long, env = "TWOSTEP_NUM_QUERIES", default_value_t = 100)]
    pub num_queries: usize,
    #[arg(long, env = "TWOSTEP_VOCAB", default_value_t = 2000)]
    pub vocab: usize,
    #[arg(long, env = "TWOSTEP_AVG_DOC_TERMS", default_value_t = 60)]
    pub avg_doc_terms: usize,
    #[arg(long, env = "TWOSTEP_AVG_QUERY_TERMS", default_value_t = 12)]
    pub avg_query_terms: usize,
    #[arg(long, env = "TWOSTEP_SEED", default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Document vectors (JSON lines).
    #[arg(long, env = "TWOSTEP_DOCS")]
    pub docs: PathBuf,
    /// Query vectors, for reporting query statistics.
    #[arg(long, env = "TWOSTEP_QUERIES")]
    pub queries: Option<PathBuf>,
    #[arg(long, env = "TWOSTEP_OUT_APPROX")]
    pub out_approx: PathBuf,
    #[arg(long, env = "TWOSTEP_OUT_FULL")]
    pub out_full: PathBuf,
    /// lexical, none, a top-k size, quantile:Q or threshold:T.
    #[arg(long, env = "TWOSTEP_DOC_PRUNE", default_value = "lexical")]
    pub doc_prune: DocPrune,
    /// Upper limit on top-k document sizes.
    #[arg(long, env = "TWOSTEP_DOC_CAP", default_value_t = DEFAULT_DOC_CAP)]
    pub doc_cap: usize,
    #[arg(long, env = "TWOSTEP_BLOCK_SIZE", default_value_t = twostep_core::index::DEFAULT_BLOCK_SIZE)]
    pub block_size: usize,
    #[arg(long, env = "TWOSTEP_QUANT_BITS", default_value_t = twostep_core::index::DEFAULT_QUANT_BITS)]
    pub quant_bits: u8,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[arg(long, env = "TWOSTEP_INPUT")]
    pub input: PathBuf,
    #[arg(long, env = "TWOSTEP_OUT")]
    pub out: PathBuf,
    /// lexical, none, a top-k size, quantile:Q or threshold:T.
    #[arg(long, env = "TWOSTEP_STRATEGY", default_value = "lexical")]
    pub strategy: DocPrune,
    /// Upper limit on top-k sizes (32 suits queries).
    #[arg(long, env = "TWOSTEP_CAP", default_value_t = DEFAULT_DOC_CAP)]
    pub cap: usize,
}

#[derive(Debug, Args)]
pub struct RunOutput {
    /// TREC run file to write.
    #[arg(long, env = "TWOSTEP_OUT")]
    pub out: PathBuf,
    /// Run tag in the last column.
    #[arg(long, env = "TWOSTEP_TAG", default_value = "twostep")]
    pub tag: String,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, env = "TWOSTEP_INDEX")]
    pub index: PathBuf,
    #[arg(long, env = "TWOSTEP_QUERIES")]
    pub queries: PathBuf,
    #[arg(long, env = "TWOSTEP_K", default_value_t = 100)]
    pub k: usize,
    /// exhaustive, maxscore, wand or bmw.
    #[arg(long, env = "TWOSTEP_ALGORITHM", default_value = "bmw")]
    pub algorithm: Algorithm,
    /// dot, sat[:K1] or bm25[:K1:B].
    #[arg(long, env = "TWOSTEP_SCORER", default_value = "dot")]
    pub scorer: Scorer,
    /// Query top pooling: a size, lexical or none.
    #[arg(long, env = "TWOSTEP_QUERY_K", default_value = "none")]
    pub query_k: QueryPrune,
    #[command(flatten)]
    pub output: RunOutput,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, env = "TWOSTEP_QUERIES")]
    pub queries: PathBuf,
    /// Index searched by the first step.
    #[arg(long, env = "TWOSTEP_APPROX_INDEX")]
    pub approx_index: PathBuf,
    /// Full index used for rescoring.
    #[arg(long, env = "TWOSTEP_RESCORE_INDEX")]
    pub rescore_index: PathBuf,
    /// Number of final results.
    #[arg(long, env = "TWOSTEP_K", default_value_t = 100)]
    pub k: usize,
    /// First-step depth.
    #[arg(long, env = "TWOSTEP_CANDIDATES", default_value_t = 100)]
    pub candidates: usize,
    /// exhaustive, maxscore, wand or bmw.
    #[arg(long, env = "TWOSTEP_ALGORITHM", default_value = "bmw")]
    pub algorithm: Algorithm,
    #[arg(long, env = "TWOSTEP_RESCORE", value_enum, default_value_t = RescoreKind::Forward)]
    pub rescore: RescoreKind,
}

#[derive(Debug, Args)]
pub struct TwoStepArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Saturation constant of the first step; `inf` scores by dot product.
    #[arg(long, env = "TWOSTEP_K1", default_value = "100")]
    pub k1: K1,
    /// First-step query top pooling: a size, lexical or none.
    #[arg(long, env = "TWOSTEP_QUERY_K", default_value = "5")]
    pub query_k: QueryPrune,
    #[command(flatten)]
    pub output: RunOutput,
}

#[derive(Debug, Args)]
pub struct GtArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, env = "TWOSTEP_BM25_K1", default_value_t = 0.9)]
    pub bm25_k1: f64,
    #[arg(long, env = "TWOSTEP_BM25_B", default_value_t = 0.4)]
    pub bm25_b: f64,
    /// First-step query top pooling: a size, lexical or none.
    #[arg(long, env = "TWOSTEP_QUERY_K", default_value = "none")]
    pub query_k: QueryPrune,
    #[command(flatten)]
    pub output: RunOutput,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, env = "TWOSTEP_RUN")]
    pub run: PathBuf,
    #[arg(long, env = "TWOSTEP_QRELS")]
    pub qrels: PathBuf,
    /// Run compared against with a paired t-test.
    #[arg(long, env = "TWOSTEP_BASELINE")]
    pub baseline: Option<PathBuf>,
    /// Dataset name in the CSV output.
    #[arg(long, env = "TWOSTEP_DATASET", default_value = "default")]
    pub dataset: String,
    /// Comma-separated metric@cutoff list.
    #[arg(long, env = "TWOSTEP_METRICS", default_value = "ndcg@10,mrr@10,success@5")]
    pub metrics: String,
    #[arg(long, env = "TWOSTEP_GAIN", value_enum, default_value_t = GainKind::Linear)]
    pub gain: GainKind,
    /// Significance level of the t-test.
    #[arg(long, env = "TWOSTEP_ALPHA", default_value_t = twostep_core::eval::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// CSV file to write (`metric,dataset,value,ci_low,ci_high`).
    #[arg(long, env = "TWOSTEP_CSV")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IntersectArgs {
    /// Reference run, usually full search.
    #[arg(long, env = "TWOSTEP_REFERENCE")]
    pub reference: PathBuf,
    #[arg(long, env = "TWOSTEP_CANDIDATE")]
    pub candidate: PathBuf,
    #[arg(long, env = "TWOSTEP_REF_DEPTH", default_value_t = 10)]
    pub ref_depth: usize,
    /// Comma-separated candidate depths.
    #[arg(long, env = "TWOSTEP_CAND_DEPTH", default_value = "10")]
    pub cand_depth: String,
    #[arg(long, env = "TWOSTEP_DATASET", default_value = "default")]
    pub dataset: String,
    /// CSV file to write (`metric,dataset,value,ci_low,ci_high`).
    #[arg(long, env = "TWOSTEP_CSV")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, env = "TWOSTEP_QUERIES")]
    pub queries: PathBuf,
    /// Pruned index to sweep; repeatable.
    #[arg(long, env = "TWOSTEP_APPROX_INDEX", value_delimiter = ',', required = true)]
    pub approx_index: Vec<PathBuf>,
    #[arg(long, env = "TWOSTEP_RESCORE_INDEX")]
    pub rescore_index: PathBuf,
    /// Comma-separated saturation constants.
    #[arg(
        long,
        env = "TWOSTEP_K1",
        value_delimiter = ',',
        default_value = "10,100,400,inf"
    )]
    pub k1: Vec<K1>,
    /// Comma-separated algorithms.
    #[arg(
        long,
        env = "TWOSTEP_ALGORITHM",
        value_delimiter = ',',
        default_value = "maxscore,wand,bmw"
    )]
    pub algorithm: Vec<Algorithm>,
    #[arg(long, env = "TWOSTEP_QUERY_K", default_value = "5")]
    pub query_k: QueryPrune,
    #[arg(long, env = "TWOSTEP_K", default_value_t = 100)]
    pub k: usize,
    #[arg(long, env = "TWOSTEP_CANDIDATES", default_value_t = 100)]
    pub candidates: usize,
    /// Add guided-traversal rows (BM25 on the full index, then rescoring).
    #[arg(long, env = "TWOSTEP_GT", default_value_t = false)]
    pub gt: bool,
    /// Add single-step dot-product rows on the full index.
    #[arg(long, env = "TWOSTEP_FULL", default_value_t = false)]
    pub full: bool,
    #[arg(long, env = "TWOSTEP_WARMUP", default_value_t = 2)]
    pub warmup: usize,
    #[arg(long, env = "TWOSTEP_REPETITIONS", default_value_t = 5)]
    pub repetitions: usize,
    /// Configuration latency is normalized by [default: the first row].
    #[arg(long, env = "TWOSTEP_BASELINE")]
    pub baseline: Option<String>,
    /// CSV file to write.
    #[arg(long, env = "TWOSTEP_OUT")]
    pub out: PathBuf,
}

/// Fails with a not-found error naming the first missing path.
fn require(paths: &[&Path]) -> crate::Result<()> {
    for p in paths {
        if !p.exists() {
            return Err(Error::Io {
                path: p.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "not found"),
            });
        }
    }
    Ok(())
}

fn create_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = match (&cli.command, cli.threads) {
        (Command::Bench(_), _) => 1,
        (_, Some(n)) => n,
        (_, None) => 0,
    };
    // a second initialization (as in tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Index(a) => cmd_index(a),
        Command::Prune(a) => cmd_prune(a),
        Command::Search(a) => cmd_search(a),
        Command::TwoStep(a) => cmd_two_step(a),
        Command::Gt(a) => cmd_gt(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Intersect(a) => cmd_intersect(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<()> {
    let corpus = generate(&SynthParams {
        num_docs: a.num_docs,
        num_queries: a.num_queries,
        vocab: a.vocab,
        avg_doc_terms: a.avg_doc_terms,
        avg_query_terms: a.avg_query_terms,
        seed: a.seed,
        ..SynthParams::default()
    })?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    jsonl::write_vectors(&a.out_dir.join("docs.jsonl"), &corpus.docs)?;
    jsonl::write_vectors(&a.out_dir.join("queries.jsonl"), &corpus.queries)?;
    let qrels = a.out_dir.join("qrels.txt");
    fs::write(&qrels, qrels_to_trec(&corpus.qrels)).map_err(|e| Error::Io {
        path: qrels,
        source: e,
    })?;
    println!(
        "wrote {} documents and {} queries to {}",
        corpus.docs.len(),
        corpus.queries.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn prune_docs(
    docs: &Collection,
    stats: &CollectionStats,
    how: DocPrune,
    cap: usize,
) -> anyhow::Result<(Collection, String)> {
    let strategy = match how {
        DocPrune::None => return Ok((docs.clone(), "full".into())),
        DocPrune::Lexical => PruneStrategy::DocTopK(lexical_size(stats.avg_doc_terms, cap)),
        DocPrune::TopK(k) => PruneStrategy::DocTopK(k),
        DocPrune::Quantile(q) => PruneStrategy::TermQuantile(q),
        DocPrune::Threshold(t) => PruneStrategy::ValueThreshold(t),
    };
    let label = match strategy {
        PruneStrategy::DocTopK(k) => format!("top{}", k.min(cap)),
        _ => how.to_string(),
    };
    let cfg = PruneConfig {
        doc_cap: cap,
        ..PruneConfig::new(strategy)
    };
    let pruned = prune_collection(docs, &cfg)?;
    if !pruned.emptied.is_empty() {
        eprintln!(
            "warning: pruning left {} documents without terms",
            pruned.emptied.len()
        );
    }
    Ok((pruned.collection, label))
}

fn print_size(name: &str, r: &SizeReport) {
    println!(
        "{name}: postings_bytes={} metadata_bytes={} forward_bytes={} total_bytes={}",
        r.postings, r.metadata, r.forward, r.total
    );
}

fn cmd_index(a: IndexArgs) -> anyhow::Result<()> {
    let mut inputs = vec![a.docs.as_path()];
    inputs.extend(a.queries.as_deref());
    require(&inputs)?;
    let docs = jsonl::load_vectors(&a.docs, None)?;
    let queries = match &a.queries {
        Some(q) => Some(jsonl::load_vectors(q, Some(docs.lexicon()))?),
        None => None,
    };
    let stats = CollectionStats::compute(&docs, queries.as_ref())?;
    let (approx, label) = prune_docs(&docs, &stats, a.doc_prune, a.doc_cap)?;

    let full_inv = InvertedIndex::build(&docs, a.block_size, a.quant_bits)?;
    let approx_inv = InvertedIndex::build(&approx, a.block_size, a.quant_bits)?;
    save_index(&a.out_full, &full_inv, &ForwardIndex::build(&docs), Some("full"))?;
    save_index(
        &a.out_approx,
        &approx_inv,
        &ForwardIndex::build(&approx),
        Some(&label),
    )?;

    let mut line = format!(
        "docs={} vocab={} avg_doc_terms={:.3} max_doc_terms={} lexical_doc_size={}",
        stats.num_docs,
        stats.vocab_size,
        stats.avg_doc_terms,
        stats.max_doc_terms,
        lexical_size(stats.avg_doc_terms, a.doc_cap)
    );
    if queries.is_some() {
        line += &format!(
            " avg_query_terms={:.3} lexical_query_size={}",
            stats.avg_query_terms,
            lexical_size(stats.avg_query_terms, DEFAULT_QUERY_CAP)
        );
    }
    println!("{line} doc_prune={label}");
    print_size("approx", &index_size_report(&a.out_approx)?);
    print_size("full", &index_size_report(&a.out_full)?);
    Ok(())
}

fn cmd_prune(a: PruneArgs) -> anyhow::Result<()> {
    require(&[&a.input])?;
    let c = jsonl::load_vectors(&a.input, None)?;
    let stats = CollectionStats::compute(&c, None)?;
    let (pruned, label) = prune_docs(&c, &stats, a.strategy, a.cap)?;
    create_parent(&a.out)?;
    jsonl::write_vectors(&a.out, &pruned)?;
    println!("pruned {} vectors ({label}) to {}", pruned.len(), a.out.display());
    Ok(())
}

fn load_queries(path: &Path, idx: &InvertedIndex) -> anyhow::Result<Collection> {
    let q = jsonl::load_vectors(path, Some(idx.lexicon()))?;
    if !q.oov_terms().is_empty() {
        eprintln!(
            "warning: {} query terms are not in the index vocabulary",
            q.oov_terms().len()
        );
    }
    Ok(q)
}

/// Runs every query in parallel; results keep query order.
fn run_queries<F>(queries: &Collection, f: F) -> anyhow::Result<Vec<ScoredList>>
where
    F: Fn(&SparseVector) -> twostep_core::Result<ScoredList> + Sync + Send,
{
    Ok(queries
        .vectors()
        .par_iter()
        .map(f)
        .collect::<twostep_core::Result<Vec<_>>>()?)
}

fn write_results(
    out: &RunOutput,
    queries: &Collection,
    idx: &InvertedIndex,
    results: &[ScoredList],
) -> anyhow::Result<()> {
    let mut run = RunFile::new();
    for (qid, r) in queries.ids().iter().zip(results) {
        let ranking = r
            .hits
            .iter()
            .map(|h| (idx.doc_name(h.doc).unwrap_or("?").to_string(), h.score))
            .collect();
        run.insert(qid, ranking)?;
    }
    create_parent(&out.out)?;
    trec::write_run(&out.out, &run, &out.tag)?;
    let work = results
        .iter()
        .fold(twostep_core::SearchStats::default(), |mut acc, r| {
            acc += r.stats;
            acc
        });
    println!(
        "queries={} postings_touched={} docs_fully_scored={} out={}",
        queries.len(),
        work.postings_touched,
        work.docs_fully_scored,
        out.out.display()
    );
    Ok(())
}

fn cmd_search(a: SearchArgs) -> anyhow::Result<()> {
    require(&[&a.index, &a.queries])?;
    let idx = load_index(&a.index)?;
    let queries = load_queries(&a.queries, &idx.inverted)?;
    let params = SearchParams::new(a.k, a.algorithm, a.scorer);
    let prune_k = a.query_k.resolve(&queries);
    let results = run_queries(&queries, |q| {
        let q = match prune_k {
            Some(k) => twostep_core::pruning::prune_vector_topk(q, k),
            None => q.clone(),
        };
        search(&q, &idx.inverted, &params)
    })?;
    write_results(&a.output, &queries, &idx.inverted, &results)
}

/// Loads both indexes and checks they share documents and vocabulary.
fn load_pair(approx: &Path, full: &Path) -> anyhow::Result<(StoredIndex, StoredIndex)> {
    let a = load_index(approx)?;
    let f = load_index(full)?;
    if a.inverted.doc_names() != f.inverted.doc_names() {
        return Err(Error::Invalid(format!(
            "{} and {} index different documents",
            approx.display(),
            full.display()
        ))
        .into());
    }
    if a.inverted.lexicon() != f.inverted.lexicon() {
        return Err(Error::Invalid(format!(
            "{} and {} have different vocabularies",
            approx.display(),
            full.display()
        ))
        .into());
    }
    Ok((a, f))
}

fn pipeline_config<'a>(
    p: &PipelineArgs,
    approx: &'a StoredIndex,
    full: &'a StoredIndex,
) -> TwoStepConfig<'a> {
    let rescore = match p.rescore {
        RescoreKind::Forward => RescoreSource::Forward(&full.forward),
        RescoreKind::Inverted => RescoreSource::Inverted(&full.inverted),
    };
    TwoStepConfig {
        candidates: p.candidates,
        k: p.k,
        algorithm: p.algorithm,
        ..TwoStepConfig::new(&approx.inverted, rescore)
    }
}

fn cmd_two_step(a: TwoStepArgs) -> anyhow::Result<()> {
    let p = &a.pipeline;
    require(&[&p.queries, &p.approx_index, &p.rescore_index])?;
    let (approx, full) = load_pair(&p.approx_index, &p.rescore_index)?;
    let queries = load_queries(&p.queries, &full.inverted)?;
    let cfg = TwoStepConfig {
        k1: a.k1,
        query_prune_k: a.query_k.resolve(&queries),
        ..pipeline_config(p, &approx, &full)
    };
    cfg.validate()?;
    let results = run_queries(&queries, |q| Ok(two_step_search(q, &cfg)?.rescored))?;
    write_results(&a.output, &queries, &full.inverted, &results)
}

fn cmd_gt(a: GtArgs) -> anyhow::Result<()> {
    let p = &a.pipeline;
    require(&[&p.queries, &p.approx_index, &p.rescore_index])?;
    let (approx, full) = load_pair(&p.approx_index, &p.rescore_index)?;
    let queries = load_queries(&p.queries, &full.inverted)?;
    let cfg = TwoStepConfig {
        query_prune_k: a.query_k.resolve(&queries),
        ..pipeline_config(p, &approx, &full)
    };
    cfg.validate()?;
    let bm25 = Bm25Params {
        k1: a.bm25_k1,
        b: a.bm25_b,
    }
    .validate()?;
    let results = run_queries(&queries, |q| Ok(gt_search(q, &cfg, bm25)?.rescored))?;
    write_results(&a.output, &queries, &full.inverted, &results)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Metric {
    Ndcg(usize),
    Mrr(usize),
    Success(usize),
}

impl Metric {
    fn parse(s: &str) -> crate::Result<Self> {
        let bad = || {
            Error::Invalid(format!(
                "unknown metric {s:?}; expected ndcg@N, mrr@N or success@N"
            ))
        };
        let (name, cutoff) = s.trim().split_once('@').ok_or_else(bad)?;
        let cutoff: usize = cutoff.parse().map_err(|_| bad())?;
        if cutoff == 0 {
            return Err(bad());
        }
        match name {
            "ndcg" => Ok(Metric::Ndcg(cutoff)),
            "mrr" => Ok(Metric::Mrr(cutoff)),
            "success" => Ok(Metric::Success(cutoff)),
            _ => Err(bad()),
        }
    }

    fn evaluate(self, run: &RunFile, qrels: &twostep_core::Qrels, gain: Gain) -> MetricReport {
        match self {
            Metric::Ndcg(c) => ndcg_at(run, qrels, c, gain),
            Metric::Mrr(c) => mrr_at(run, qrels, c),
            Metric::Success(c) => success_at(run, qrels, c),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Ndcg(c) => write!(f, "ndcg@{c}"),
            Metric::Mrr(c) => write!(f, "mrr@{c}"),
            Metric::Success(c) => write!(f, "success@{c}"),
        }
    }
}

/// One `metric,dataset,value,ci_low,ci_high` row.
struct CsvRow {
    metric: String,
    value: f64,
    ci_low: f64,
    ci_high: f64,
}

fn write_metric_csv(path: &Path, dataset: &str, rows: &[CsvRow]) -> anyhow::Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["metric", "dataset", "value", "ci_low", "ci_high"])?;
    for r in rows {
        w.write_record([
            r.metric.clone(),
            dataset.to_string(),
            format!("{:.6}", r.value),
            format!("{:.6}", r.ci_low),
            format!("{:.6}", r.ci_high),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn check_judged(run: &RunFile, qrels: &twostep_core::Qrels, path: &Path) -> crate::Result<()> {
    let unjudged: Vec<String> = run
        .query_ids()
        .filter(|q| !qrels.contains_query(q))
        .map(str::to_string)
        .collect();
    if unjudged.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "{}: queries without judgments: {}",
            path.display(),
            unjudged.join(", ")
        )))
    }
}

fn cmd_eval(a: EvalArgs) -> anyhow::Result<()> {
    let mut inputs = vec![a.run.as_path(), a.qrels.as_path()];
    inputs.extend(a.baseline.as_deref());
    require(&inputs)?;
    let metrics = a
        .metrics
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Metric::parse)
        .collect::<crate::Result<Vec<_>>>()?;
    let gain = match a.gain {
        GainKind::Linear => Gain::Linear,
        GainKind::Exponential => Gain::Exponential,
    };
    let qrels = trec::load_qrels(&a.qrels)?;
    let run = trec::load_run(&a.run)?;
    check_judged(&run, &qrels, &a.run)?;
    let baseline = match &a.baseline {
        Some(b) => {
            let r = trec::load_run(b)?;
            check_judged(&r, &qrels, b)?;
            Some(r)
        }
        None => None,
    };

    let mut rows = Vec::new();
    println!(
        "{:<12} {:<12} {:>9} {:>9} {:>9}",
        "metric", "dataset", "value", "ci_low", "ci_high"
    );
    for m in &metrics {
        let report = m.evaluate(&run, &qrels, gain);
        let (mean, half) = mean_and_half_width(report.per_query.values().copied());
        let row = CsvRow {
            metric: m.to_string(),
            value: mean,
            ci_low: mean - half,
            ci_high: mean + half,
        };
        println!(
            "{:<12} {:<12} {:>9.4} {:>9.4} {:>9.4}",
            row.metric, a.dataset, row.value, row.ci_low, row.ci_high
        );
        rows.push(row);
        if let Some(base) = &baseline {
            let b = m.evaluate(base, &qrels, gain);
            let before: Vec<f64> = b.per_query.values().copied().collect();
            let after: Vec<f64> = report.per_query.values().copied().collect();
            let t = paired_ttest(&before, &after, a.alpha)?;
            println!(
                "  vs baseline: delta={:+.4} t={:.4} p={:.6} n={} -> {}",
                t.mean_delta, t.t_statistic, t.p_value, t.n, t.verdict
            );
        }
    }
    if let Some(csv) = &a.csv {
        write_metric_csv(csv, &a.dataset, &rows)?;
    }
    Ok(())
}

fn cmd_intersect(a: IntersectArgs) -> anyhow::Result<()> {
    require(&[&a.reference, &a.candidate])?;
    let depths = a
        .cand_depth
        .split(',')
        .map(|d| match d.trim().parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(Error::Invalid(format!("invalid candidate depth {d:?}"))),
        })
        .collect::<crate::Result<Vec<_>>>()?;
    if a.ref_depth == 0 {
        bail!(Error::Invalid("reference depth must be at least 1".into()));
    }
    let reference = trec::load_run(&a.reference)?;
    let candidate = trec::load_run(&a.candidate)?;
    let mut rows = Vec::new();
    for d in depths {
        let r = intersection_at(&reference, &candidate, a.ref_depth, d)?;
        let metric = format!("intersection@{d}");
        println!(
            "{metric:<18} {:<12} {:>8.3} [{:.3}, {:.3}]",
            a.dataset, r.mean, r.ci_low, r.ci_high
        );
        rows.push(CsvRow {
            metric,
            value: r.mean,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
        });
    }
    if let Some(csv) = &a.csv {
        write_metric_csv(csv, &a.dataset, &rows)?;
    }
    Ok(())
}

fn index_label(idx: &StoredIndex, path: &Path) -> String {
    idx.meta.label.clone().unwrap_or_else(|| {
        path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        )
    })
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<()> {
    let mut inputs = vec![a.queries.as_path(), a.rescore_index.as_path()];
    inputs.extend(a.approx_index.iter().map(PathBuf::as_path));
    require(&inputs)?;
    let full = load_index(&a.rescore_index)?;
    let mut approx = Vec::with_capacity(a.approx_index.len());
    for p in &a.approx_index {
        let (idx, _) = load_pair(p, &a.rescore_index)?;
        approx.push((index_label(&idx, p), idx));
    }
    let queries = load_queries(&a.queries, &full.inverted)?;
    let query_prune = a.query_k.resolve(&queries);
    let rescore = RescoreSource::Forward(&full.forward);
    let full_params: Vec<SearchParams> = a
        .algorithm
        .iter()
        .map(|alg| SearchParams::new(a.k, *alg, Scorer::Dot))
        .collect();

    let mut configs = Vec::new();
    for (label, idx) in &approx {
        for k1 in &a.k1 {
            for alg in &a.algorithm {
                let cfg = TwoStepConfig {
                    candidates: a.candidates,
                    k: a.k,
                    k1: *k1,
                    query_prune_k: query_prune,
                    algorithm: *alg,
                    ..TwoStepConfig::new(&idx.inverted, rescore)
                };
                cfg.validate()?;
                configs.push(SweepConfig {
                    name: format!("{label}/k1={k1}/{alg}"),
                    algorithm: alg.to_string(),
                    k1: k1.to_string(),
                    doc_prune: label.clone(),
                    query_prune: a.query_k.to_string(),
                    workload: Workload::TwoStep(cfg),
                });
            }
        }
    }
    if a.gt {
        for alg in &a.algorithm {
            let cfg = TwoStepConfig {
                candidates: a.candidates,
                k: a.k,
                query_prune_k: None,
                algorithm: *alg,
                ..TwoStepConfig::new(&full.inverted, rescore)
            };
            configs.push(SweepConfig {
                name: format!("gt/{alg}"),
                algorithm: alg.to_string(),
                k1: "bm25".into(),
                doc_prune: "full".into(),
                query_prune: "none".into(),
                workload: Workload::Gt(cfg, Bm25Params::default()),
            });
        }
    }
    if a.full {
        for p in &full_params {
            configs.push(SweepConfig {
                name: format!("full/{}", p.algorithm),
                algorithm: p.algorithm.to_string(),
                k1: "inf".into(),
                doc_prune: "full".into(),
                query_prune: "none".into(),
                workload: Workload::Single(&full.inverted, p),
            });
        }
    }
    let opts = BenchOptions {
        warmup: a.warmup,
        repetitions: a.repetitions,
    };
    let rows = sweep(&configs, queries.vectors(), opts, a.baseline.as_deref())?;
    create_parent(&a.out)?;
    let file = fs::File::create(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    write_csv(std::io::BufWriter::new(file), &rows)?;
    for r in &rows {
        println!(
            "{:<32} avg_ms={:.4} p99_ms={:.4} postings_touched={} docs_fully_scored={} norm={:.3}",
            r.config, r.avg_ms, r.p99_ms, r.postings_touched, r.docs_fully_scored, r.norm_vs_baseline
        );
    }
    Ok(())
}

/// Exit status for an error: 2 for input and usage errors, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let input = err.chain().any(|e| {
        e.downcast_ref::<Error>().is_some_and(Error::is_input_error)
            || e.downcast_ref::<twostep_core::Error>().is_some()
    });
    if input {
        2
    } else {
        1
    }
}
