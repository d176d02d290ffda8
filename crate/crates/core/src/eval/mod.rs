// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Effectiveness metrics, the approximation intersection metric and
//! significance testing.

mod intersection;
mod metrics;
mod run;
mod ttest;

pub use intersection::{intersection_at, mean_and_half_width, IntersectionReport, Z_99};
pub use metrics::{mrr_at, ndcg_at, success_at, Gain, MetricReport};
pub use run::RunFile;
pub use ttest::{
    incomplete_beta, paired_ttest, student_t_two_sided, SignificanceCounts, SignificanceReport, TTest,
    Verdict, DEFAULT_ALPHA,
};
