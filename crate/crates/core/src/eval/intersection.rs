// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::RunFile;
use crate::error::{Error, Result};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionReport {
    /// Mean percentage over queries, in `[0, 100]`.
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub per_query: BTreeMap<String, f64>,
}

/// Percentage of each query's reference top-`ref_depth` found in the
/// candidate top-`cand_depth`, averaged over queries, with a 99% normal
/// confidence interval.
///
/// A reference list shorter than `ref_depth` is compared on its own
/// length; an empty reference list counts as fully recovered.
pub fn intersection_at(
    reference: &RunFile,
    candidate: &RunFile,
    ref_depth: usize,
    cand_depth: usize,
) -> Result<IntersectionReport> {
    let mut missing: Vec<String> = reference
        .query_ids()
        .filter(|q| !candidate.contains_query(q))
        .chain(candidate.query_ids().filter(|q| !reference.contains_query(q)))
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::MissingQueries(missing));
    }
    let mut per_query = BTreeMap::new();
    for (qid, ref_list) in reference.iter() {
        let cand: BTreeSet<&str> = candidate
            .get(qid)
            .unwrap_or(&[])
            .iter()
            .take(cand_depth)
            .map(|(d, _)| d.as_str())
            .collect();
        let top: Vec<&str> = ref_list.iter().take(ref_depth).map(|(d, _)| d.as_str()).collect();
        let value = if top.is_empty() {
            100.0
        } else {
            let found = top.iter().filter(|d| cand.contains(*d)).count();
            100.0 * found as f64 / top.len() as f64
        };
        per_query.insert(qid.to_string(), value);
    }
    let (mean, half) = mean_and_half_width(per_query.values().copied());
    Ok(IntersectionReport {
        mean,
        ci_low: mean - half,
        ci_high: mean + half,
        per_query,
    })
}

/// Mean and `Z_99 * s / sqrt(n)` half-width with the sample standard
/// deviation; half-width 0 below two samples.
pub fn mean_and_half_width(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, Z_99 * libm::sqrt(var / n as f64))
}
