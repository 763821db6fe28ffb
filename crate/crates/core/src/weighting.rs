//! Timestep weighting functions `w_t` and the learned 20-bucket weighting.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::{check_time, sq_dist, Condition, NoiseSchedule, ScoreModel};
use crate::error::{check_dim, contract, Error, Result};

/// Number of timestep buckets in the learned weighting.
pub const NUM_BUCKETS: usize = 20;
/// Width of one bucket.
pub const BUCKET_WIDTH: f64 = 0.05;
/// Simple and VDM weights evaluate the SNR no closer to `t = 0` than this.
pub const SNR_TIME_FLOOR: f64 = 1e-4;
/// Default decay rate of the heuristic weighting `exp(-λ t)`.
pub const DEFAULT_HEURISTIC_LAMBDA: f64 = 7.0;

/// Anything that assigns a weight to a timestep.
pub trait TimestepWeight {
    fn weight(&self, schedule: NoiseSchedule, t: f64) -> f64;
}

impl<W: TimestepWeight + ?Sized> TimestepWeight for &W {
    fn weight(&self, schedule: NoiseSchedule, t: f64) -> f64 {
        (**self).weight(schedule, t)
    }
}

/// The weighting variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightingSpec {
    /// `w_t = snr(t)`.
    Simple,
    /// `w_t = |snr'(t)|`.
    Vdm,
    /// `w_t = exp(-lambda t)`.
    Heuristic { lambda: f64 },
    /// `w_t = v[bucket(t)]`.
    Learned { weights: Vec<f64> },
}

impl Default for WeightingSpec {
    fn default() -> Self {
        WeightingSpec::Heuristic {
            lambda: DEFAULT_HEURISTIC_LAMBDA,
        }
    }
}

impl WeightingSpec {
    pub fn heuristic(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(contract(format!("heuristic lambda must be > 0, got {lambda}")));
        }
        Ok(WeightingSpec::Heuristic { lambda })
    }

    pub fn learned(weights: Vec<f64>) -> Result<Self> {
        if weights.len() != NUM_BUCKETS {
            return Err(contract(format!(
                "learned weighting needs exactly {NUM_BUCKETS} values, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(contract("learned weights must be finite"));
        }
        Ok(WeightingSpec::Learned { weights })
    }

    /// True for weightings fitted with labels.
    pub fn is_supervised(&self) -> bool {
        matches!(self, WeightingSpec::Learned { .. })
    }

    /// `w_t`, range-checked.
    pub fn eval(&self, schedule: NoiseSchedule, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.weight(schedule, t))
    }

    /// Parses `simple | vdm | heuristic[:<lambda>] | learned:<path>`, loading
    /// learned weights from disk.
    pub fn parse(arg: &str) -> Result<Self> {
        let (name, param) = match arg.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (arg, None),
        };
        match (name.trim().to_ascii_lowercase().as_str(), param) {
            ("simple", None) => Ok(WeightingSpec::Simple),
            ("vdm", None) => Ok(WeightingSpec::Vdm),
            ("heuristic", None) => Ok(WeightingSpec::default()),
            ("heuristic", Some(p)) => {
                let lambda = p
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("heuristic lambda {p:?}: {e}")))?;
                Self::heuristic(lambda)
            }
            ("learned", Some(path)) => read_learned_weights(path),
            _ => Err(Error::Parse(format!(
                "unknown weighting {arg:?}; expected simple | vdm | heuristic:<lambda> | learned:<path>"
            ))),
        }
    }
}

impl TimestepWeight for WeightingSpec {
    fn weight(&self, schedule: NoiseSchedule, t: f64) -> f64 {
        match self {
            WeightingSpec::Simple => schedule.snr_unchecked(t.max(SNR_TIME_FLOOR)),
            WeightingSpec::Vdm => schedule.snr_derivative_abs(t.max(SNR_TIME_FLOOR)),
            WeightingSpec::Heuristic { lambda } => (-lambda * t).exp(),
            WeightingSpec::Learned { weights } => weights[bucket_of(t)],
        }
    }
}

impl fmt::Display for WeightingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightingSpec::Simple => f.write_str("simple"),
            WeightingSpec::Vdm => f.write_str("vdm"),
            WeightingSpec::Heuristic { lambda } => write!(f, "heuristic:{lambda}"),
            WeightingSpec::Learned { .. } => f.write_str("learned"),
        }
    }
}

impl FromStr for WeightingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn bucket_of(t: f64) -> usize {
    ((t / BUCKET_WIDTH).floor().max(0.0) as usize).min(NUM_BUCKETS - 1)
}

/// `floor(t / 0.05)`, with `t = 1` mapped to the last bucket.
pub fn bucket_index(t: f64) -> Result<usize> {
    check_time(t)?;
    Ok(bucket_of(t))
}

/// Reads 20 newline-separated decimal floats.
pub fn read_learned_weights(path: impl AsRef<Path>) -> Result<WeightingSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let weights = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .map_err(|e| Error::Parse(format!("{}: bad weight {l:?}: {e}", path.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    WeightingSpec::learned(weights)
}

/// Writes weights one per line, shortest round-trip representation.
pub fn format_learned_weights(weights: &[f64]) -> String {
    let mut out = String::new();
    for w in weights {
        out.push_str(&format!("{w}\n"));
    }
    out
}

/// Per-bucket mean squared error for one (example, class) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketedScores {
    pub values: [f64; NUM_BUCKETS],
    pub counts: [u32; NUM_BUCKETS],
}

impl Default for BucketedScores {
    fn default() -> Self {
        Self {
            values: [0.0; NUM_BUCKETS],
            counts: [0; NUM_BUCKETS],
        }
    }
}

impl BucketedScores {
    pub fn from_means(values: [f64; NUM_BUCKETS]) -> Self {
        Self {
            values,
            counts: [1; NUM_BUCKETS],
        }
    }

    /// Folds one score at time `t` into its bucket's running mean.
    pub fn add(&mut self, t: f64, sq_error: f64) {
        let i = bucket_of(t);
        self.counts[i] += 1;
        self.values[i] += (sq_error - self.values[i]) / self.counts[i] as f64;
    }

    /// `Σ_i v_i b_i`; empty buckets contribute nothing.
    pub fn weighted_sum(&self, v: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(&self.counts)
            .zip(v)
            .filter(|((_, &c), _)| c > 0)
            .map(|((b, _), v)| v * b)
            .sum()
    }

    fn value(&self, i: usize) -> f64 {
        if self.counts[i] > 0 {
            self.values[i]
        } else {
            0.0
        }
    }
}

/// Scores `x0` against every condition with `per_bucket` draws per bucket,
/// `t` stratified uniformly within each bucket and `(t, x_t)` shared across
/// classes.
pub fn bucketed_scores<M: ScoreModel, R: Rng + ?Sized>(
    x0: &[f64],
    labels: &[Condition],
    model: &M,
    schedule: NoiseSchedule,
    per_bucket: usize,
    rng: &mut R,
) -> Result<Vec<BucketedScores>> {
    check_dim(model.dim(), x0.len())?;
    let mut out = vec![BucketedScores::default(); labels.len()];
    let mut x_hat = vec![0.0; x0.len()];
    for i in 0..NUM_BUCKETS {
        for _ in 0..per_bucket {
            let t = ((i as f64 + rng.random::<f64>()) * BUCKET_WIDTH).min(1.0);
            let noised = schedule.sample_forward(x0, t, rng)?;
            for (cond, scores) in labels.iter().zip(out.iter_mut()) {
                model.denoise_into(&noised.data, t, cond, &mut x_hat);
                scores.add(t, sq_dist(x0, &x_hat));
            }
        }
    }
    Ok(out)
}

/// Settings for [`learn_weights`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub initial_step: f64,
}

impl Default for LearnOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-6,
            initial_step: 1.0,
        }
    }
}

fn check_training_set(ledgers: &[Vec<BucketedScores>], labels: &[usize]) -> Result<usize> {
    if ledgers.is_empty() {
        return Err(contract("learn_weights needs at least one example"));
    }
    if ledgers.len() != labels.len() {
        return Err(contract(format!(
            "{} ledgers but {} labels",
            ledgers.len(),
            labels.len()
        )));
    }
    let k = ledgers[0].len();
    if k == 0 {
        return Err(contract("empty label set"));
    }
    let mut covered = [false; NUM_BUCKETS];
    for (scores, &y) in ledgers.iter().zip(labels) {
        if scores.len() != k {
            return Err(contract("every example must be scored against the same label set"));
        }
        if y >= k {
            return Err(contract(format!("label {y} outside label set of size {k}")));
        }
        for s in scores {
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(contract("non-finite bucketed score"));
            }
            for (c, &n) in covered.iter_mut().zip(&s.counts) {
                *c |= n > 0;
            }
        }
    }
    if let Some(i) = covered.iter().position(|c| !c) {
        return Err(contract(format!("bucket {i} has no scores in any example")));
    }
    Ok(k)
}

fn class_probs(v: &[f64], scores: &[BucketedScores], probs: &mut Vec<f64>) -> f64 {
    probs.clear();
    probs.extend(scores.iter().map(|s| -s.weighted_sum(v)));
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for p in probs.iter_mut() {
        *p = (*p - max).exp();
        z += *p;
    }
    for p in probs.iter_mut() {
        *p /= z;
    }
    max + z.ln()
}

/// `p_v(y = k | x) = softmax_k(-Σ_i v_i b_i(x, k))`.
pub fn learned_class_probabilities(v: &[f64], scores: &[BucketedScores]) -> Vec<f64> {
    let mut probs = Vec::with_capacity(scores.len());
    class_probs(v, scores, &mut probs);
    probs
}

/// Mean log-likelihood of `labels` under `p_v`.
pub fn log_likelihood(v: &[f64], ledgers: &[Vec<BucketedScores>], labels: &[usize]) -> f64 {
    let mut probs = Vec::new();
    let total: f64 = ledgers
        .iter()
        .zip(labels)
        .map(|(scores, &y)| {
            let lse = class_probs(v, scores, &mut probs);
            -scores[y].weighted_sum(v) - lse
        })
        .sum();
    total / ledgers.len() as f64
}

/// Gradient of [`log_likelihood`]: `mean_x Σ_k p_k (b(x,k) - b(x,y))`.
pub fn log_likelihood_gradient(
    v: &[f64],
    ledgers: &[Vec<BucketedScores>],
    labels: &[usize],
) -> [f64; NUM_BUCKETS] {
    let mut grad = [0.0; NUM_BUCKETS];
    let mut probs = Vec::new();
    for (scores, &y) in ledgers.iter().zip(labels) {
        class_probs(v, scores, &mut probs);
        for (p, s) in probs.iter().zip(scores) {
            for (i, g) in grad.iter_mut().enumerate() {
                *g += p * (s.value(i) - scores[y].value(i));
            }
        }
    }
    let n = ledgers.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    grad
}

/// Fits the 20 bucket weights by maximum likelihood.
///
/// Full-batch gradient ascent from the all-ones vector with a backtracking
/// step, stopping when the gradient norm falls below `opts.grad_tol` or
/// after `opts.max_iters` iterations.
pub fn learn_weights(
    ledgers: &[Vec<BucketedScores>],
    labels: &[usize],
    opts: &LearnOptions,
) -> Result<Vec<f64>> {
    check_training_set(ledgers, labels)?;
    let mut v = vec![1.0; NUM_BUCKETS];
    let mut ll = log_likelihood(&v, ledgers, labels);
    let mut step = opts.initial_step;
    for _ in 0..opts.max_iters {
        let grad = log_likelihood_gradient(&v, ledgers, labels);
        let norm2: f64 = grad.iter().map(|g| g * g).sum();
        if norm2.sqrt() < opts.grad_tol {
            break;
        }
        // Armijo backtracking, then let the step grow again.
        let mut accepted = false;
        while step > 1e-300 {
            let cand: Vec<f64> = v.iter().zip(&grad).map(|(x, g)| x + step * g).collect();
            let cand_ll = log_likelihood(&cand, ledgers, labels);
            if cand_ll >= ll + 1e-4 * step * norm2 {
                v = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step *= 2.0;
    }
    Ok(v)
}

/// Fraction of examples whose argmin of `Σ v_i b_i` matches the label
/// (ties to the lowest class index).
pub fn bucketed_accuracy(v: &[f64], ledgers: &[Vec<BucketedScores>], labels: &[usize]) -> f64 {
    if ledgers.is_empty() {
        return 0.0;
    }
    let hits = ledgers
        .iter()
        .zip(labels)
        .filter(|(scores, &y)| {
            crate::world::argmin_by_key(scores.iter().map(|s| s.weighted_sum(v))) == y
        })
        .count();
    hits as f64 / ledgers.len() as f64
}
