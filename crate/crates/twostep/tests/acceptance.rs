// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if
//! any fails. Every randomized check is seeded.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use statrs::distribution::{ContinuousCDF, StudentsT};

use twostep::store::{index_size_report, load_index, save_index};
use twostep::synth::{generate, SynthParams};
use twostep_core::eval::{intersection_at, mrr_at, ndcg_at, paired_ttest, success_at, Gain};
use twostep_core::pipeline::{two_step_search, RescoreSource, TwoStepConfig};
use twostep_core::pruning::{prune_collection, prune_vector_topk, PruneConfig, PruneStrategy};
use twostep_core::retrieval::{search, search_filtered};
use twostep_core::scoring::{saturate, score_dot, score_saturated};
use twostep_core::{
    Algorithm, Bm25Params, Collection, CollectionBuilder, ForwardIndex, InvertedIndex, Qrels, RunFile,
    Scorer, SearchParams, SparseVector, K1,
};

const BLOCK: usize = 64;

struct Suite {
    failed: Vec<&'static str>,
}

impl Suite {
    fn report(&mut self, id: &'static str, name: &str, ok: bool, detail: String, start: Instant) {
        let status = if ok { "PASS" } else { "FAIL" };
        println!(
            "{status} {id:<3} {name}: {detail} ({:.1}s)",
            start.elapsed().as_secs_f64()
        );
        if !ok {
            self.failed.push(id);
        }
    }
}

/// Random collection with Zipf-distributed term ids and weights. Weights
/// are rounded to hundredths so that score ties occur.
/// Sizes are drawn from the given ranges.
fn zipf_corpus(
    rng: &mut ChaCha8Rng,
    num_docs: RangeInclusive<usize>,
    vocab: RangeInclusive<usize>,
    avg_terms: RangeInclusive<usize>,
) -> Collection {
    let num_docs = rng.random_range(num_docs);
    let vocab = rng.random_range(vocab);
    let avg_terms = rng.random_range(avg_terms);
    let terms = Zipf::new(vocab as f64, 1.1).unwrap();
    let weights = Zipf::new(200.0, 1.3).unwrap();
    let mut b = CollectionBuilder::new();
    for d in 0..num_docs {
        let n = rng.random_range(1..=avg_terms * 2);
        let mut entries = BTreeMap::new();
        for _ in 0..n {
            let t = terms.sample(rng) as usize - 1;
            let w = (weights.sample(rng) * rng.random_range(0.5..1.0_f64) * 10.0).round() / 100.0;
            entries.insert(format!("t{t}"), w.max(0.01));
        }
        b.push(&format!("d{d}"), entries.iter().map(|(t, w)| (t.as_str(), *w)))
            .unwrap();
    }
    b.finish()
}

/// Random query over the collection's vocabulary, popular terms favored.
fn zipf_query(rng: &mut ChaCha8Rng, c: &Collection, nnz: RangeInclusive<usize>) -> SparseVector {
    let nnz = rng.random_range(nnz);
    let vocab = c.lexicon().len();
    let terms = Zipf::new(vocab as f64, 0.8).unwrap();
    let mut entries = BTreeMap::new();
    while entries.len() < nnz.min(vocab) {
        let t = terms.sample(rng) as u32 - 1;
        entries.insert(t, (rng.random_range(0.01..3.0_f64) * 100.0).round() / 100.0);
    }
    SparseVector::from_pairs(entries).unwrap()
}

fn scorers() -> Vec<Scorer> {
    let mut s = vec![Scorer::Dot];
    s.extend(K1::SWEEP.iter().map(|k| Scorer::Saturated(*k)));
    s.push(Scorer::Bm25(Bm25Params::default()));
    s
}

fn all_docs(n: u32) -> Vec<u32> {
    (0..n).collect()
}

fn c1_dynamic_pruning(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 1000;
    let mut mismatches = 0;
    let mut comparisons = 0;
    for trial in 0..trials {
        let num_docs = if trial % 50 == 0 { 5000..=5000 } else { 20..=1500 };
        let c = zipf_corpus(&mut rng, num_docs, 10..=2000, 2..=40);
        let idx = InvertedIndex::build(&c, BLOCK, 8).unwrap();
        let q = zipf_query(&mut rng, &c, 1..=32);
        let k = *[1, 10, 100].choose(&mut rng).unwrap();
        for scorer in scorers() {
            let oracle = search(&q, &idx, &SearchParams::new(k, Algorithm::Exhaustive, scorer)).unwrap();
            for alg in [Algorithm::MaxScore, Algorithm::Wand, Algorithm::BlockMaxWand] {
                let got = search(&q, &idx, &SearchParams::new(k, alg, scorer)).unwrap();
                comparisons += 1;
                if got.hits != oracle.hits {
                    mismatches += 1;
                    if mismatches <= 3 {
                        eprintln!("C1 mismatch: trial {trial} {alg} {scorer} k={k}");
                    }
                }
            }
        }
    }
    suite.report(
        "C1",
        "dynamic-pruning exactness",
        mismatches == 0,
        format!("{trials} trials, {comparisons} hit lists compared to exhaustive, {mismatches} mismatches"),
        start,
    );
}

fn c2_two_step_exactness(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let corpora = 200;
    let mut mismatches = 0;
    for _ in 0..corpora {
        let c = zipf_corpus(&mut rng, 20..=2000, 20..=2000, 20..=20);
        let idx = InvertedIndex::build(&c, BLOCK, 8).unwrap();
        let q = zipf_query(&mut rng, &c, 1..=32);
        let cfg = TwoStepConfig {
            candidates: 10,
            k: 10,
            k1: K1::Infinite,
            query_prune_k: Some(q.nnz()),
            algorithm: *[Algorithm::MaxScore, Algorithm::Wand, Algorithm::BlockMaxWand]
                .choose(&mut rng)
                .unwrap(),
            ..TwoStepConfig::new(&idx, RescoreSource::Inverted(&idx))
        };
        let pipeline = two_step_search(&q, &cfg).unwrap().rescored;
        let single = search(
            &q,
            &idx,
            &SearchParams::new(10, Algorithm::Exhaustive, Scorer::Dot),
        )
        .unwrap();
        if pipeline.hits != single.hits {
            mismatches += 1;
        }
    }
    suite.report(
        "C2",
        "two-step exactness",
        mismatches == 0,
        format!("{corpora} corpora, {mismatches} top-10 mismatches"),
        start,
    );
}

fn c3_recovery_law(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut premise, mut violations, mut instances) = (0, 0, 0);
    for _ in 0..60 {
        let c = zipf_corpus(&mut rng, 200..=2000, 100..=2000, 30..=30);
        let keep = *[8, 16, 32].choose(&mut rng).unwrap();
        let pruned = prune_collection(&c, &PruneConfig::new(PruneStrategy::DocTopK(keep))).unwrap();
        let approx = InvertedIndex::build(&pruned.collection, BLOCK, 8).unwrap();
        let fwd = ForwardIndex::build(&c);
        let everything = all_docs(fwd.num_docs());
        for _ in 0..5 {
            instances += 1;
            let q = zipf_query(&mut rng, &c, 1..=32);
            let cfg = TwoStepConfig {
                k: 10,
                k1: *K1::SWEEP.choose(&mut rng).unwrap(),
                ..TwoStepConfig::new(&approx, RescoreSource::Forward(&fwd))
            };
            let full = search_filtered(&q, &fwd, &everything, 10).unwrap();
            let result = two_step_search(&q, &cfg).unwrap();
            let first: BTreeSet<u32> = result.first_stage.docs().into_iter().collect();
            if full.hits.iter().all(|h| first.contains(&h.doc)) {
                premise += 1;
                if result.rescored.hits != full.hits {
                    violations += 1;
                }
            }
        }
    }
    suite.report(
        "C3",
        "rescoring recovery law",
        violations == 0 && premise >= 50,
        format!("{instances} instances, premise held on {premise}, {violations} violations"),
        start,
    );
}

fn c4_saturation(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_inf: f64 = 0.0;
    let mut worst_zero: f64 = 0.0;
    for _ in 0..2000 {
        let c = zipf_corpus(&mut rng, 2..=2, 200..=200, 30..=30);
        let q = zipf_query(&mut rng, &c, 1..=32);
        let d = &c.vectors()[0];
        worst_inf = worst_inf.max((score_saturated(&q, d, K1::Infinite) - score_dot(&q, d)).abs());
        let matching: f64 = q
            .iter()
            .filter(|(t, _)| d.weight(*t).is_some())
            .map(|(_, w)| w)
            .sum();
        worst_zero = worst_zero.max((score_saturated(&q, d, K1::Finite(0.0)) - matching).abs());
    }
    let pairs = 1_000_000;
    let mut bound_violations = 0;
    for i in 0..pairs {
        // impacts are at least 1; integral half the time
        let tf = if i % 2 == 0 {
            rng.random_range(1..=255) as f64
        } else {
            1.0 + rng.random::<f64>() * 10f64.powi(rng.random_range(0..7))
        };
        let k1 = match i % 3 {
            0 => rng.random::<f64>() * 10.0,
            1 => rng.random::<f64>() * 1000.0,
            _ => 10f64.powf(rng.random_range(-6.0..8.0)),
        };
        let s = saturate(tf, K1::Finite(k1));
        if s > tf.min(k1 + 1.0) {
            bound_violations += 1;
        }
    }
    suite.report(
        "C4",
        "saturation identities",
        worst_inf <= 1e-12 && worst_zero <= 1e-12 && bound_violations == 0,
        format!(
            "max |sat(inf)-dot| = {worst_inf:.1e}, max |sat(0)-sum q| = {worst_zero:.1e}, \
             bound violated on {bound_violations}/{pairs} pairs"
        ),
        start,
    );
}

fn run_of(rankings: &[(String, Vec<(String, f64)>)]) -> RunFile {
    let mut r = RunFile::new();
    for (qid, list) in rankings {
        r.insert(qid, list.clone()).unwrap();
    }
    r
}

fn random_run(rng: &mut ChaCha8Rng, queries: usize, pool: usize, depth: usize) -> RunFile {
    let mut r = RunFile::new();
    for q in 0..queries {
        let mut docs: Vec<usize> = (0..pool).collect();
        docs.shuffle(rng);
        let n = rng.random_range(0..=depth.min(pool));
        let list = docs[..n]
            .iter()
            .enumerate()
            .map(|(i, d)| (format!("d{d}"), (n - i) as f64))
            .collect();
        r.insert(&format!("q{q}"), list).unwrap();
    }
    r
}

fn c5_intersection(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = true;
    let mut notes = Vec::new();

    let mut identical = true;
    let mut monotone = true;
    for _ in 0..200 {
        let a = random_run(&mut rng, 20, 60, 40);
        let b = random_run(&mut rng, 20, 60, 60);
        identical &= intersection_at(&a, &a, 10, 10).unwrap().mean == 100.0;
        let mut prev = -1.0;
        for depth in [1, 2, 5, 10, 20, 50, 100] {
            let m = intersection_at(&a, &b, 10, depth).unwrap().mean;
            monotone &= m >= prev;
            prev = m;
        }
    }
    ok &= identical && monotone;
    notes.push(format!(
        "identical runs 100: {identical}, monotone in depth: {monotone}"
    ));

    let synth = generate(&SynthParams {
        num_docs: 5000,
        num_queries: 100,
        seed: 11,
        ..SynthParams::default()
    })
    .unwrap();
    let full = InvertedIndex::build(&synth.docs, BLOCK, 8).unwrap();
    let params = SearchParams::new(10, Algorithm::BlockMaxWand, Scorer::Dot);
    let mut reference = Vec::new();
    for (qid, q) in synth.queries.iter() {
        let hits = search(q, &full, &params).unwrap();
        reference.push((
            qid.to_string(),
            hits.hits
                .iter()
                .map(|h| (format!("{}", h.doc), h.score))
                .collect(),
        ));
    }
    let reference = run_of(&reference);
    let mut means = Vec::new();
    for keep in [Some(4), Some(8), Some(16), Some(32), Some(64), None] {
        let approx = match keep {
            Some(k) => {
                let p = prune_collection(&synth.docs, &PruneConfig::new(PruneStrategy::DocTopK(k))).unwrap();
                InvertedIndex::build(&p.collection, BLOCK, 8).unwrap()
            }
            None => full.clone(),
        };
        let cfg = TwoStepConfig {
            k: 10,
            candidates: 100,
            k1: K1::Infinite,
            query_prune_k: None,
            ..TwoStepConfig::new(&approx, RescoreSource::Inverted(&full))
        };
        let mut run = Vec::new();
        for (qid, q) in synth.queries.iter() {
            let r = two_step_search(q, &cfg).unwrap().rescored;
            run.push((
                qid.to_string(),
                r.hits.iter().map(|h| (format!("{}", h.doc), h.score)).collect(),
            ));
        }
        means.push(intersection_at(&reference, &run_of(&run), 10, 10).unwrap().mean);
    }
    let full_exact = *means.last().unwrap() == 100.0;
    let shaped = means.windows(2).all(|w| w[0] <= w[1] + 1.0);
    ok &= full_exact && shaped;
    notes.push(format!(
        "sweep 4,8,16,32,64,full -> {}",
        means
            .iter()
            .map(|m| format!("{m:.1}"))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    suite.report("C5", "intersection behavior", ok, notes.join("; "), start);
}

fn is_subset(a: &SparseVector, b: &SparseVector) -> bool {
    a.iter().all(|(t, w)| b.weight(t) == Some(w))
}

/// Every entry dropped from `v` weighs at most the lightest kept entry.
fn dropped_never_outweighs_kept(v: &SparseVector, kept: &SparseVector) -> bool {
    let lightest = kept.weights().iter().copied().fold(f64::INFINITY, f64::min);
    v.iter()
        .filter(|(t, _)| kept.weight(*t).is_none())
        .all(|(_, w)| w <= lightest)
}

fn c6_pruning_laws(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = 0;
    let vectors = 10_000;
    for _ in 0..vectors {
        let nnz = rng.random_range(0..=200);
        let mut entries = BTreeMap::new();
        for _ in 0..nnz {
            // coarse weights force ties
            entries.insert(
                rng.random_range(0..5000u32),
                rng.random_range(1..=20) as f64 / 4.0,
            );
        }
        let v = SparseVector::from_pairs(entries).unwrap();
        let k1 = rng.random_range(1..=150);
        let k2 = rng.random_range(k1..=160);
        let p1 = prune_vector_topk(&v, k1);
        let p2 = prune_vector_topk(&v, k2);
        let laws = [
            prune_vector_topk(&p1, k1) == p1,
            is_subset(&p1, &p2) && is_subset(&p2, &v),
            prune_vector_topk(&p2, k1) == p1,
            prune_vector_topk(&v, v.nnz()) == v,
            p1.nnz() == k1.min(v.nnz()),
            dropped_never_outweighs_kept(&v, &p1),
        ];
        let t1 = rng.random_range(0.0..5.0);
        let t2 = rng.random_range(t1..6.0);
        let r1 = v.retain(|_, w| w >= t1);
        let r2 = v.retain(|_, w| w >= t2);
        let thresh = [
            is_subset(&r2, &r1),
            r1.retain(|_, w| w >= t1) == r1,
            v.retain(|_, w| w >= 0.0) == v,
        ];
        if laws.iter().chain(&thresh).any(|ok| !ok) {
            failures += 1;
        }
    }
    // collection-level strategies
    let mut coll_failures = 0;
    for _ in 0..50 {
        let c = zipf_corpus(&mut rng, 300..=300, 500..=500, 20..=20);
        let prune = |s| prune_collection(&c, &PruneConfig::new(s)).unwrap().collection;
        let qa = rng.random_range(0.0..1.0);
        let qb = rng.random_range(qa..=1.0);
        let (pa, pb) = (
            prune(PruneStrategy::TermQuantile(qa)),
            prune(PruneStrategy::TermQuantile(qb)),
        );
        let nested = pa
            .vectors()
            .iter()
            .zip(pb.vectors())
            .all(|(a, b)| is_subset(a, b));
        let identity =
            prune(PruneStrategy::TermQuantile(1.0)) == c && prune(PruneStrategy::DocTopK(100_000)) == c;
        if !(nested && identity) {
            coll_failures += 1;
        }
    }
    suite.report(
        "C6",
        "pruning laws",
        failures == 0 && coll_failures == 0,
        format!("{vectors} vectors: {failures} failures; 50 collections (quantile nesting, identity): {coll_failures} failures"),
        start,
    );
}

/// Metrics computed from TREC text, independent of the library evaluator.
mod reference_eval {
    use std::collections::HashMap;

    pub struct Judged {
        pub grades: HashMap<String, HashMap<String, u32>>,
    }

    pub fn qrels(text: &str) -> Judged {
        let mut grades: HashMap<String, HashMap<String, u32>> = HashMap::new();
        for line in text.lines() {
            let f: Vec<&str> = line.split_whitespace().collect();
            grades
                .entry(f[0].into())
                .or_default()
                .insert(f[2].into(), f[3].parse().unwrap());
        }
        Judged { grades }
    }

    pub fn run(text: &str) -> HashMap<String, Vec<String>> {
        let mut rows: HashMap<String, Vec<(usize, String)>> = HashMap::new();
        for line in text.lines() {
            let f: Vec<&str> = line.split_whitespace().collect();
            rows.entry(f[0].into())
                .or_default()
                .push((f[3].parse().unwrap(), f[2].into()));
        }
        rows.into_iter()
            .map(|(q, mut r)| {
                r.sort();
                (q, r.into_iter().map(|x| x.1).collect())
            })
            .collect()
    }

    fn mean(judged: &Judged, f: impl Fn(&str, &HashMap<String, u32>) -> f64) -> f64 {
        let total: f64 = judged.grades.iter().map(|(q, g)| f(q, g)).sum();
        total / judged.grades.len() as f64
    }

    pub fn ndcg(run: &HashMap<String, Vec<String>>, judged: &Judged, cutoff: usize) -> f64 {
        mean(judged, |q, g| {
            let empty = Vec::new();
            let ranked = run.get(q).unwrap_or(&empty);
            let mut dcg = 0.0;
            for (i, d) in ranked.iter().enumerate().take(cutoff) {
                dcg += *g.get(d).unwrap_or(&0) as f64 / ((i + 2) as f64).log2();
            }
            let mut ideal: Vec<u32> = g.values().copied().collect();
            ideal.sort_by(|a, b| b.cmp(a));
            let mut idcg = 0.0;
            for (i, x) in ideal.iter().enumerate().take(cutoff) {
                idcg += *x as f64 / ((i + 2) as f64).log2();
            }
            if idcg == 0.0 {
                0.0
            } else {
                dcg / idcg
            }
        })
    }

    pub fn mrr(run: &HashMap<String, Vec<String>>, judged: &Judged, cutoff: usize) -> f64 {
        mean(judged, |q, g| {
            for (i, d) in run.get(q).into_iter().flatten().enumerate().take(cutoff) {
                if g.get(d).is_some_and(|x| *x > 0) {
                    return 1.0 / (i + 1) as f64;
                }
            }
            0.0
        })
    }

    pub fn success(run: &HashMap<String, Vec<String>>, judged: &Judged, cutoff: usize) -> f64 {
        mean(judged, |q, g| {
            let found = run
                .get(q)
                .into_iter()
                .flatten()
                .take(cutoff)
                .any(|d| g.get(d).is_some_and(|x| *x > 0));
            found as u8 as f64
        })
    }
}

fn c7_metric_oracles(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let nq = rng.random_range(1..=30);
        let mut qrels_text = String::new();
        for q in 0..nq {
            for _ in 0..rng.random_range(1..=15) {
                let doc = rng.random_range(0..40);
                qrels_text += &format!("q{q} 0 d{doc} {}\n", rng.random_range(0..=3));
            }
        }
        // last duplicate wins in both evaluators; deduplicate up front
        let mut seen = BTreeMap::new();
        for line in qrels_text.lines() {
            let f: Vec<&str> = line.split_whitespace().collect();
            seen.insert((f[0].to_string(), f[2].to_string()), f[3].to_string());
        }
        let qrels_text: String = seen
            .iter()
            .map(|((q, d), g)| format!("{q} 0 {d} {g}\n"))
            .collect();
        let run = random_run(&mut rng, nq + 3, 40, 30);
        let run_text = run.to_trec("ref");
        let qrels = Qrels::parse(&qrels_text).unwrap();
        let parsed = RunFile::parse(&run_text).unwrap();
        let judged = reference_eval::qrels(&qrels_text);
        let ranked = reference_eval::run(&run_text);
        let pairs = [
            (
                ndcg_at(&parsed, &qrels, 10, Gain::Linear).mean,
                reference_eval::ndcg(&ranked, &judged, 10),
            ),
            (
                mrr_at(&parsed, &qrels, 10).mean,
                reference_eval::mrr(&ranked, &judged, 10),
            ),
            (
                success_at(&parsed, &qrels, 5).mean,
                reference_eval::success(&ranked, &judged, 5),
            ),
        ];
        for (a, b) in pairs {
            worst = worst.max((a - b).abs());
        }
    }
    let mut worst_p: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(3..=60);
        let shift = rng.random_range(-0.2..0.2);
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = a
            .iter()
            .map(|x| x + shift + rng.random_range(-0.3..0.3))
            .collect();
        let t = paired_ttest(&a, &b, 0.01).unwrap();
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).unwrap();
        let p = 2.0 * (1.0 - dist.cdf(t.t_statistic.abs()));
        worst_p = worst_p.max((t.p_value - p).abs());
    }
    suite.report(
        "C7",
        "metric oracles",
        worst <= 1e-4 && worst_p <= 1e-6,
        format!("50 run/qrels pairs max metric diff {worst:.1e}; 100 t-tests max p diff {worst_p:.1e}"),
        start,
    );
}

fn c8_round_trip(suite: &mut Suite) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let tmp = tempfile::tempdir().unwrap();
    let (mut unequal, mut quant_bad, mut size_bad) = (0, 0, 0);
    let mut checked = 0u64;
    for i in 0..100 {
        let c = zipf_corpus(&mut rng, 1..=800, 1..=1500, 25..=25);
        let block = rng.random_range(1..=128);
        let idx = InvertedIndex::build(&c, block, 8).unwrap();
        let fwd = ForwardIndex::build(&c);
        let dir = tmp.path().join(format!("full{i}"));
        save_index(&dir, &idx, &fwd, None).unwrap();
        let loaded = load_index(&dir).unwrap();
        if loaded.inverted != idx || loaded.forward != fwd {
            unequal += 1;
        }

        let scale = idx.quant_scale();
        for (d, v) in c.vectors().iter().enumerate() {
            for (t, w) in v.iter() {
                let impact = idx
                    .posting_list(t)
                    .and_then(|p| p.impact_of(d as u32))
                    .unwrap_or(0);
                checked += 1;
                if impact == 1 && w < scale / 2.0 {
                    continue;
                }
                if impact == 0 || (idx.dequantize(impact) - w).abs() > scale / 2.0 * (1.0 + 1e-12) {
                    quant_bad += 1;
                }
            }
        }

        let keep = rng.random_range(1..=30);
        let p = prune_collection(&c, &PruneConfig::new(PruneStrategy::DocTopK(keep))).unwrap();
        let pdir = tmp.path().join(format!("pruned{i}"));
        save_index(
            &pdir,
            &InvertedIndex::build(&p.collection, block, 8).unwrap(),
            &ForwardIndex::build(&p.collection),
            None,
        )
        .unwrap();
        let (full_size, pruned_size) = (
            index_size_report(&dir).unwrap(),
            index_size_report(&pdir).unwrap(),
        );
        if pruned_size.total > full_size.total || pruned_size.postings > full_size.postings {
            size_bad += 1;
        }
    }
    suite.report(
        "C8",
        "index round trip and quantization",
        unequal == 0 && quant_bad == 0 && size_bad == 0,
        format!(
            "100 indexes: {unequal} unequal after reload; {quant_bad}/{checked} weights off by more than scale/2; \
             {size_bad} pruned indexes larger than full"
        ),
        start,
    );
}

fn c9_work_reduction(suite: &mut Suite) {
    let start = Instant::now();
    let synth = generate(&SynthParams {
        num_docs: 5000,
        num_queries: 100,
        seed: 9,
        ..SynthParams::default()
    })
    .unwrap();
    let idx = InvertedIndex::build(&synth.docs, BLOCK, 8).unwrap();
    let (mut bad, mut runs) = (0, 0);
    let (mut bmw_total, mut ex_total) = (0u64, 0u64);
    for scorer in [Scorer::Dot, Scorer::Saturated(K1::default())] {
        for k in [10, 100] {
            for q in synth.queries.vectors() {
                let ex = search(q, &idx, &SearchParams::new(k, Algorithm::Exhaustive, scorer)).unwrap();
                let bmw = search(q, &idx, &SearchParams::new(k, Algorithm::BlockMaxWand, scorer)).unwrap();
                runs += 1;
                bmw_total += bmw.stats.docs_fully_scored;
                ex_total += ex.stats.docs_fully_scored;
                if bmw.hits != ex.hits || bmw.stats.docs_fully_scored > ex.stats.docs_fully_scored {
                    bad += 1;
                }
            }
        }
    }
    suite.report(
        "C9",
        "work reduction",
        bad == 0,
        format!(
            "{runs} queries: {bad} violations; docs fully scored BMW {bmw_total} vs exhaustive {ex_total}"
        ),
        start,
    );
}

/// Relative paths and contents of every file under `dir`.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Bench CSV without the wall-clock columns.
fn bench_counters(bytes: &[u8]) -> String {
    const TIMING: [&str; 3] = ["avg_ms", "p99_ms", "norm_vs_baseline"];
    let text = String::from_utf8_lossy(bytes);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let keep: Vec<usize> = (0..header.len())
        .filter(|i| !TIMING.contains(&header[*i]))
        .collect();
    std::iter::once(header.join(","))
        .chain(lines.map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            keep.iter().map(|i| f[*i]).collect::<Vec<_>>().join(",")
        }))
        .collect::<Vec<_>>()
        .join("\n")
}

fn c10_determinism(suite: &mut Suite) {
    let start = Instant::now();
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../repro/desk.sh");
    let tmp = tempfile::tempdir().unwrap();
    let mut snaps = Vec::new();
    let mut failure = None;
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new("bash")
            .arg(&script)
            .arg(&out)
            .env("BIN", env!("CARGO_BIN_EXE_twostep"))
            .stdout(std::process::Stdio::null())
            .status();
        match status {
            Ok(s) if s.success() => snaps.push(snapshot(&out)),
            other => failure = Some(format!("desk.sh run {run} failed: {other:?}")),
        }
    }
    let (ok, detail) = match failure {
        Some(f) => (false, f),
        None => {
            let (a, b) = (&snaps[0], &snaps[1]);
            let mut differing: Vec<&String> = Vec::new();
            for name in a.keys().chain(b.keys()).collect::<BTreeSet<_>>() {
                let same = match (a.get(name), b.get(name)) {
                    (Some(x), Some(y)) if name.ends_with("bench.csv") => {
                        bench_counters(x) == bench_counters(y)
                    }
                    (Some(x), Some(y)) => x == y,
                    _ => false,
                };
                if !same {
                    differing.push(name);
                }
            }
            let runs = a.keys().filter(|k| k.ends_with(".trec")).count();
            let csvs = a.keys().filter(|k| k.ends_with(".csv")).count();
            (
                differing.is_empty(),
                format!(
                    "{} files ({runs} runs, {csvs} CSVs) compared, {} differ{}",
                    a.len(),
                    differing.len(),
                    if differing.is_empty() {
                        String::new()
                    } else {
                        format!(": {differing:?}")
                    }
                ),
            )
        }
    };
    suite.report("C10", "end-to-end determinism", ok, detail, start);
}

fn main() {
    let mut suite = Suite { failed: Vec::new() };
    c1_dynamic_pruning(&mut suite);
    c2_two_step_exactness(&mut suite);
    c3_recovery_law(&mut suite);
    c4_saturation(&mut suite);
    c5_intersection(&mut suite);
    c6_pruning_laws(&mut suite);
    c7_metric_oracles(&mut suite);
    c8_round_trip(&mut suite);
    c9_work_reduction(&mut suite);
    c10_determinism(&mut suite);
    if suite.failed.is_empty() {
        println!("acceptance: all 10 criteria passed");
    } else {
        println!(
            "acceptance: {} failed: {}",
            suite.failed.len(),
            suite.failed.join(", ")
        );
        std::process::exit(1);
    }
}
