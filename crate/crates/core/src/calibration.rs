//! Confidence estimates and calibration measurement.
//!
//! Two confidence measures are supported: a temperature-scaled softmax over
//! the final weighted scores (valid only when every class was fully scored),
//! and a Platt-scaled function of the number of denoiser calls the pruned
//! classifier spent on an example.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

/// Default number of reliability bins.
pub const DEFAULT_BINS: usize = 10;

/// Softmax temperature over scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureModel {
    pub tau: f64,
}

impl TemperatureModel {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(contract(format!("temperature must be finite and > 0, got {tau}")));
        }
        Ok(Self { tau })
    }
}

/// `confidence(n) = sigmoid(-n / tau + beta)`. `tau = +inf` gives a
/// constant confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattModel {
    pub tau: f64,
    pub beta: f64,
}

impl PlattModel {
    pub fn new(tau: f64, beta: f64) -> Result<Self> {
        if tau.is_nan() || tau <= 0.0 || !beta.is_finite() {
            return Err(contract(format!("Platt model needs tau > 0 and finite beta, got ({tau}, {beta})")));
        }
        Ok(Self { tau, beta })
    }

    /// Builds the model from the log-odds `slope * n + intercept`.
    fn from_logit(line: LogitLine) -> Result<Self> {
        if line.slope > 0.0 {
            return Err(contract(format!(
                "fitted confidence increases with the call count (slope {}); no tau > 0 fits",
                line.slope
            )));
        }
        let tau = if line.slope == 0.0 { f64::INFINITY } else { -1.0 / line.slope };
        Self::new(tau, line.intercept)
    }
}

/// `p_k ∝ exp(-s_k / tau)`, computed with max-subtraction.
pub fn score_softmax_probs(scores: &[(usize, f64)], tau: f64) -> Result<Vec<(usize, f64)>> {
    if scores.is_empty() {
        return Err(contract("softmax over an empty score set"));
    }
    TemperatureModel::new(tau)?;
    if scores.iter().any(|(_, s)| !s.is_finite()) {
        return Err(contract("scores must be finite"));
    }
    let logits: Vec<f64> = scores.iter().map(|(_, s)| -s / tau).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(scores.iter().zip(exps).map(|(&(k, _), e)| (k, e / z)).collect())
}

/// `1 / (1 + exp(n / tau - beta))`.
pub fn platt_confidence(model: &PlattModel, n: f64) -> f64 {
    sigmoid(-n / model.tau + model.beta)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// A held-out example for temperature fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredExample {
    pub scores: Vec<(usize, f64)>,
    pub true_class: usize,
}

fn log_softmax_true(ex: &ScoredExample, inv_tau: f64) -> f64 {
    let max = ex
        .scores
        .iter()
        .map(|(_, s)| -s * inv_tau)
        .fold(f64::NEG_INFINITY, f64::max);
    let lse = max
        + ex
            .scores
            .iter()
            .map(|(_, s)| (-s * inv_tau - max).exp())
            .sum::<f64>()
            .ln();
    let s_true = ex
        .scores
        .iter()
        .find(|(k, _)| *k == ex.true_class)
        .map(|(_, s)| *s)
        .expect("validated");
    -s_true * inv_tau - lse
}

/// Mean negative log-likelihood of the true classes at temperature `tau`.
pub fn temperature_nll(examples: &[ScoredExample], tau: f64) -> f64 {
    let inv = 1.0 / tau;
    -examples.iter().map(|e| log_softmax_true(e, inv)).sum::<f64>() / examples.len() as f64
}

/// Golden-section search for `tau` on `log tau ∈ [-10, 10]`.
pub fn fit_temperature(heldout: &[ScoredExample]) -> Result<TemperatureModel> {
    if heldout.is_empty() {
        return Err(contract("temperature fit needs held-out examples"));
    }
    let mut classes = std::collections::BTreeSet::new();
    for ex in heldout {
        if ex.scores.iter().any(|(_, s)| !s.is_finite()) {
            return Err(contract("scores must be finite"));
        }
        if !ex.scores.iter().any(|(k, _)| *k == ex.true_class) {
            return Err(contract(format!("true class {} has no score", ex.true_class)));
        }
        classes.extend(ex.scores.iter().map(|(k, _)| *k));
    }
    if classes.len() < 2 {
        return Err(contract("temperature fit needs at least two classes"));
    }
    let nll = |log_tau: f64| temperature_nll(heldout, log_tau.exp());
    let log_tau = golden_section_min(nll, -10.0, 10.0, 1e-6);
    // The search only sees the bracket; never return worse than tau = 1.
    let tau = if nll(log_tau) <= nll(0.0) { log_tau.exp() } else { 1.0 };
    TemperatureModel::new(tau)
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Log-odds `slope * n + intercept` of a one-feature logistic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitLine {
    pub slope: f64,
    pub intercept: f64,
}

impl LogitLine {
    pub fn log_odds(&self, n: f64) -> f64 {
        self.slope * n + self.intercept
    }
}

/// Mean logistic negative log-likelihood of `correct` given `line`.
pub fn logistic_nll(data: &[(f64, bool)], line: &LogitLine) -> f64 {
    data.iter()
        .map(|&(n, y)| {
            let z = line.log_odds(n);
            if y {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum::<f64>()
        / data.len() as f64
}

/// Fits `P(correct | n) = sigmoid(slope * n + intercept)` by full-batch
/// gradient descent on the mean logistic loss, to gradient norm 1e-8.
///
/// The call counts are standardized internally; the returned line is in
/// the original units.
pub fn fit_logit_line(data: &[(f64, bool)]) -> Result<LogitLine> {
    let positives = data.iter().filter(|d| d.1).count();
    if positives == 0 || positives == data.len() {
        return Err(contract(
            "Platt fit needs both correct and incorrect examples",
        ));
    }
    if data.iter().any(|d| !d.0.is_finite()) {
        return Err(contract("call counts must be finite"));
    }
    let m = data.len() as f64;
    let mean = data.iter().map(|d| d.0).sum::<f64>() / m;
    let sd = (data.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / m).sqrt();
    let scale = if sd > 0.0 { sd } else { 1.0 };
    let z: Vec<(f64, bool)> = data.iter().map(|&(n, y)| ((n - mean) / scale, y)).collect();

    let loss = |a: f64, b: f64| logistic_nll(&z, &LogitLine { slope: a, intercept: b });
    let grad = |a: f64, b: f64| {
        let (mut ga, mut gb) = (0.0, 0.0);
        for &(x, y) in &z {
            let r = sigmoid(a * x + b) - if y { 1.0 } else { 0.0 };
            ga += r * x;
            gb += r;
        }
        (ga / m, gb / m)
    };

    let (mut a, mut b) = (0.0, 0.0);
    let mut f = loss(a, b);
    let mut step = 1.0;
    for _ in 0..1_000_000 {
        let (ga, gb) = grad(a, b);
        let g2 = ga * ga + gb * gb;
        if g2.sqrt() < 1e-8 {
            break;
        }
        let mut accepted = false;
        while step > 1e-16 {
            let (na, nb) = (a - step * ga, b - step * gb);
            let nf = loss(na, nb);
            if nf <= f - 1e-4 * step * g2 {
                (a, b, f) = (na, nb, nf);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step = (step * 2.0).min(64.0);
    }
    let slope = a / scale;
    Ok(LogitLine {
        slope,
        intercept: b - slope * mean,
    })
}

/// Platt scaling of the call count: `(n, correct)` pairs to `(tau, beta)`.
pub fn fit_platt(heldout: &[(f64, bool)]) -> Result<PlattModel> {
    PlattModel::from_logit(fit_logit_line(heldout)?)
}

/// One reliability-diagram bin over `[lo, hi)` (the last bin is closed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    /// `None` for empty bins.
    pub mean_conf: Option<f64>,
    pub accuracy: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub bins: Vec<ReliabilityBin>,
    pub ece: f64,
}

/// Equal-width reliability bins and the expected calibration error
/// `Σ_b (n_b / N) |acc_b - conf_b|` over occupied bins.
pub fn reliability_and_ece(
    confidences: &[f64],
    correct: &[bool],
    n_bins: usize,
) -> Result<ReliabilityReport> {
    if confidences.is_empty() {
        return Err(contract("reliability needs at least one prediction"));
    }
    if confidences.len() != correct.len() {
        return Err(contract(format!(
            "{} confidences but {} outcomes",
            confidences.len(),
            correct.len()
        )));
    }
    if n_bins == 0 {
        return Err(contract("need at least one bin"));
    }
    let mut sums = vec![(0.0f64, 0usize, 0usize); n_bins];
    for (&c, &y) in confidences.iter().zip(correct) {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Domain(format!("confidence {c} outside [0, 1]")));
        }
        let b = ((c * n_bins as f64).floor() as usize).min(n_bins - 1);
        sums[b].0 += c;
        sums[b].1 += usize::from(y);
        sums[b].2 += 1;
    }
    let total = confidences.len() as f64;
    let mut ece = 0.0;
    let bins = sums
        .iter()
        .enumerate()
        .map(|(i, &(conf_sum, hits, count))| {
            let (lo, hi) = (i as f64 / n_bins as f64, (i + 1) as f64 / n_bins as f64);
            if count == 0 {
                return ReliabilityBin { lo, hi, mean_conf: None, accuracy: None, count };
            }
            let conf = conf_sum / count as f64;
            let acc = hits as f64 / count as f64;
            ece += count as f64 / total * (acc - conf).abs();
            ReliabilityBin {
                lo,
                hi,
                mean_conf: Some(conf),
                accuracy: Some(acc),
                count,
            }
        })
        .collect();
    Ok(ReliabilityReport { bins, ece })
}
