//! Multi-seed experiment statistics: mean ± std summaries and two-tailed
//! t-tests for the strategy comparison table.
//!
//! Welch's unequal-variance test is the default; a paired variant on matched
//! seeds is available for sensitivity analysis. The Student-t survival
//! function is evaluated through the regularized incomplete beta function.

use crate::special::reg_inc_beta;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {needed} values, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("paired test requires equal-length samples")]
    UnpairedLengths,
}

/// One metric's values across independent runs of one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSamples {
    pub strategy: String,
    pub metric: String,
    pub values: Vec<f64>,
}

/// Arithmetic mean and Bessel-corrected sample standard deviation.
pub fn summarize(values: &[f64]) -> Result<(f64, f64), StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewSamples {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}

/// Result of a two-tailed t-test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    /// Set when both samples had zero variance and the p-value follows the
    /// documented degenerate convention.
    pub degenerate: bool,
}

/// Two-sided p-value of a Student-t statistic with `df` degrees of freedom:
/// p = I_{df/(df+t²)}(df/2, 1/2).
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of
/// freedom.
///
/// Degenerate convention: if both samples have zero variance, p = 1 for equal
/// means and p = 0 otherwise, with the result flagged.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    let (mean_a, sd_a) = summarize(a)?;
    let (mean_b, sd_b) = summarize(b)?;
    let var_a = sd_a * sd_a;
    let var_b = sd_b * sd_b;
    let na = a.len() as f64;
    let nb = b.len() as f64;
    if var_a == 0.0 && var_b == 0.0 {
        return Ok(if mean_a == mean_b {
            TTestResult {
                t: 0.0,
                df: na + nb - 2.0,
                p: 1.0,
                degenerate: true,
            }
        } else {
            TTestResult {
                t: if mean_a > mean_b {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                df: na + nb - 2.0,
                p: 0.0,
                degenerate: true,
            }
        });
    }
    let se2 = var_a / na + var_b / nb;
    let t = (mean_a - mean_b) / se2.sqrt();
    let df = se2 * se2
        / ((var_a / na).powi(2) / (na - 1.0) + (var_b / nb).powi(2) / (nb - 1.0));
    Ok(TTestResult {
        t,
        df,
        p: student_t_two_sided_p(t, df),
        degenerate: false,
    })
}

/// Paired t-test on matched observations (e.g. matched seeds): one-sample
/// test of the differences against zero, df = n − 1.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::UnpairedLengths);
    }
    let diffs: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| x - y).collect();
    let (mean_d, sd_d) = summarize(&diffs)?;
    let n = diffs.len() as f64;
    let df = n - 1.0;
    if sd_d == 0.0 {
        return Ok(TTestResult {
            t: if mean_d == 0.0 {
                0.0
            } else if mean_d > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            df,
            p: if mean_d == 0.0 { 1.0 } else { 0.0 },
            degenerate: true,
        });
    }
    let t = mean_d / (sd_d / n.sqrt());
    Ok(TTestResult {
        t,
        df,
        p: student_t_two_sided_p(t, df),
        degenerate: false,
    })
}

/// Significance markers of the comparison table: `***` below 0.001, `*`
/// below 0.05, empty otherwise.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}
