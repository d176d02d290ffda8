// SPDX-License-Identifier: Apache-2.0
// SPDX-FileCopyrightText: Copyright The twostep Authors

//! Two-sided paired Student t-test and significance counting across
//! datasets.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Better,
    Worse,
    Indistinguishable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Better => "better",
            Verdict::Worse => "worse",
            Verdict::Indistinguishable => "indistinguishable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub n: usize,
    /// Mean of `b - a`.
    pub mean_delta: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub verdict: Verdict,
}

/// Paired t-test of `b` against `a` with `n - 1` degrees of freedom.
///
/// Zero-variance deltas: an all-zero delta is indistinguishable (`t = 0`,
/// `p = 1`); a constant nonzero delta has `t = ±inf`, `p = 0` and a verdict
/// following its sign.
pub fn paired_ttest(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidConfig("a paired t-test needs at least two pairs"));
    }
    let deltas: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mean = deltas.iter().sum::<f64>() / n as f64;
    let var = deltas.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1) as f64;
    let (t, p) = if var == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        }
    } else {
        let t = mean / libm::sqrt(var / n as f64);
        (t, student_t_two_sided(t, (n - 1) as f64))
    };
    let verdict = if p <= alpha && mean > 0.0 {
        Verdict::Better
    } else if p <= alpha && mean < 0.0 {
        Verdict::Worse
    } else {
        Verdict::Indistinguishable
    };
    Ok(TTest {
        n,
        mean_delta: mean,
        t_statistic: t,
        p_value: p,
        verdict,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    const MAX_ITER: usize = 1000;

    let guard = |v: f64| if libm::fabs(v) < TINY { TINY } else { v };
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let step = d * c;
        h *= step;
        if libm::fabs(step - 1.0) < EPS {
            break;
        }
    }
    h
}

/// How often a system was at least as good as, better than, or worse than
/// its baseline across datasets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SignificanceCounts {
    /// Not significantly worse.
    pub at_least_as_good: usize,
    pub better: usize,
    pub worse: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignificanceReport {
    pub datasets: Vec<(String, TTest)>,
}

impl SignificanceReport {
    pub fn push(&mut self, dataset: &str, test: TTest) {
        self.datasets.push((String::from(dataset), test));
    }

    pub fn counts(&self) -> SignificanceCounts {
        let mut c = SignificanceCounts::default();
        for (_, t) in &self.datasets {
            match t.verdict {
                Verdict::Better => {
                    c.better += 1;
                    c.at_least_as_good += 1;
                }
                Verdict::Worse => c.worse += 1,
                Verdict::Indistinguishable => c.at_least_as_good += 1,
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_are_indistinguishable() {
        let a = [0.1, 0.5, 0.3];
        let t = paired_ttest(&a, &a, DEFAULT_ALPHA).unwrap();
        assert_eq!(t.verdict, Verdict::Indistinguishable);
        assert_eq!((t.t_statistic, t.p_value), (0.0, 1.0));
    }

    #[test]
    fn constant_positive_delta_is_better() {
        let a = [0.0, 1.0, 2.0, 3.0];
        let b = [1.0, 2.0, 3.0, 4.0];
        let t = paired_ttest(&a, &b, DEFAULT_ALPHA).unwrap();
        assert_eq!(t.verdict, Verdict::Better);
        assert!(t.p_value < DEFAULT_ALPHA);
        assert_eq!(t.t_statistic, f64::INFINITY);
        let t = paired_ttest(&b, &a, DEFAULT_ALPHA).unwrap();
        assert_eq!(t.verdict, Verdict::Worse);
    }

    #[test]
    fn matches_reference_values() {
        // reference: scipy.stats.ttest_1samp
        let d = [0.3, -0.1, 0.4, 0.2, 0.1];
        let zeros = [0.0; 5];
        let t = paired_ttest(&zeros, &d, DEFAULT_ALPHA).unwrap();
        assert!((t.t_statistic - 2.092_457_497_388_746_6).abs() < 1e-9);
        assert!((t.p_value - 0.104_539_999_778_375_53).abs() < 1e-9);
        assert_eq!(t.verdict, Verdict::Indistinguishable);
        assert!((t.mean_delta - 0.18).abs() < 1e-15);
    }

    #[test]
    fn input_errors() {
        assert!(paired_ttest(&[1.0], &[1.0], 0.01).is_err());
        assert_eq!(
            paired_ttest(&[1.0, 2.0], &[1.0], 0.01),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        );
    }

    #[test]
    fn incomplete_beta_endpoints_and_symmetry() {
        assert_eq!(incomplete_beta(2.0, 3.0, 0.0), 0.0);
        assert_eq!(incomplete_beta(2.0, 3.0, 1.0), 1.0);
        // I_x(a,b) = 1 - I_{1-x}(b,a)
        let v = incomplete_beta(2.5, 0.5, 0.3) + incomplete_beta(0.5, 2.5, 0.7);
        assert!((v - 1.0).abs() < 1e-12);
        // I_x(1,1) = x
        assert!((incomplete_beta(1.0, 1.0, 0.42) - 0.42).abs() < 1e-14);
    }

    #[test]
    fn counts_across_datasets() {
        let mk = |verdict| TTest {
            n: 10,
            mean_delta: 0.0,
            t_statistic: 0.0,
            p_value: 1.0,
            verdict,
        };
        let mut r = SignificanceReport::default();
        r.push("a", mk(Verdict::Better));
        r.push("b", mk(Verdict::Indistinguishable));
        r.push("c", mk(Verdict::Worse));
        assert_eq!(
            r.counts(),
            SignificanceCounts {
                at_least_as_good: 2,
                better: 1,
                worse: 1
            }
        );
    }
}
