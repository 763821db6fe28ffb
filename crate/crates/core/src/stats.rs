//! Streaming paired differences and the paired Student's t-test used to
//! eliminate candidates.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{contract, Result};

/// Welford accumulator over paired differences `a_j - b_j`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairedAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl PairedAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_diffs(diffs: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = Self::new();
        for d in diffs {
            acc.push_diff(d);
        }
        acc
    }

    pub fn push(&mut self, a: f64, b: f64) {
        self.push_diff(a - b);
    }

    pub fn push_diff(&mut self, d: f64) {
        self.count += 1;
        let delta = d - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (d - self.mean);
    }

    /// Combines two accumulators (Chan et al. parallel update).
    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let (na, nb, n) = (self.count as f64, other.count as f64, count as f64);
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Negates every difference (swaps the roles of `a` and `b`).
    pub fn swapped(&self) -> Self {
        Self {
            count: self.count,
            mean: -self.mean,
            m2: self.m2,
        }
    }
}

/// `P(T > x)` for Student's t with `df` degrees of freedom.
pub fn student_t_sf(x: f64, df: f64) -> Result<f64> {
    if !df.is_finite() || df < 1.0 {
        return Err(contract(format!("degrees of freedom must be >= 1, got {df}")));
    }
    if x.is_nan() {
        return Err(contract("t statistic is NaN"));
    }
    if x == 0.0 {
        return Ok(0.5);
    }
    if x.is_infinite() {
        return Ok(if x > 0.0 { 0.0 } else { 1.0 });
    }
    let tail = 0.5 * beta_reg(0.5 * df, 0.5, df / (df + x * x));
    Ok(if x > 0.0 { tail } else { 1.0 - tail })
}

/// Which alternative the paired t-test evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    /// `H1: mean difference > 0`.
    #[default]
    OneSided,
    /// `H1: mean difference != 0`.
    TwoSided,
}

/// p-value for the paired differences in `diffs`, with
/// `t = mean / (sd / sqrt(n))` and `n - 1` degrees of freedom.
///
/// With zero variance the test is degenerate: one-sided gives `p = 1` when
/// `mean <= 0` and `p = 0` otherwise; two-sided gives `p = 1` only when
/// `mean == 0`.
pub fn paired_ttest_pvalue(diffs: &PairedAccumulator, sidedness: Sidedness) -> Result<f64> {
    let n = diffs.count();
    if n < 2 {
        return Err(contract(format!("paired t-test needs >= 2 differences, got {n}")));
    }
    let mean = diffs.mean();
    let var = diffs.variance();
    if var <= 0.0 {
        let p = match sidedness {
            Sidedness::OneSided => {
                if mean <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Sidedness::TwoSided => {
                if mean == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        };
        return Ok(p);
    }
    let t = mean / (var / n as f64).sqrt();
    let df = (n - 1) as f64;
    let p = match sidedness {
        Sidedness::OneSided => student_t_sf(t, df)?,
        Sidedness::TwoSided => (2.0 * student_t_sf(t.abs(), df)?).min(1.0),
    };
    Ok(p)
}
