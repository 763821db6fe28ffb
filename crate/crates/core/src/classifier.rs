//! The classification engine.
//!
//! A class is scored by the weighted squared error of the denoiser's
//! prediction of `x_0` from a noised copy `x_t`; the predicted class is the
//! argmin of the Monte Carlo mean of those scores. Three strategies are
//! provided:
//!
//! * naive: an independent `(t, x_t)` draw for every class and sample;
//! * shared: one `(t, x_t)` draw per round, scored against every class;
//! * pruned: shared rounds with successive elimination of candidates whose
//!   mean score is significantly worse than the current best, judged by a
//!   paired t-test on the per-round weighted scores.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{sq_dist, Condition, NoiseSchedule, NoisedObservation, Observation, ScoreModel};
use crate::error::{check_dim, contract, Result};
use crate::rng::episode_rng;
use crate::stats::{paired_ttest_pvalue, PairedAccumulator, Sidedness};
use crate::weighting::{TimestepWeight, WeightingSpec};

/// One score: a class's squared error at a round's `(t, x_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub round: usize,
    pub t: f64,
    pub w_t: f64,
    pub class_id: usize,
    pub sq_error: f64,
}

/// The outcome of one shared-noise round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundScores {
    pub noised: NoisedObservation,
    pub weight: f64,
    /// `(class_id, squared error)` in candidate order.
    pub errors: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default)]
struct ClassTrack {
    class_id: usize,
    weighted: Vec<f64>,
    sum: f64,
    /// Differences against the current best class.
    paired: PairedAccumulator,
}

impl ClassTrack {
    fn new(class_id: usize) -> Self {
        Self {
            class_id,
            ..Self::default()
        }
    }

    fn push(&mut self, weighted_score: f64) {
        self.weighted.push(weighted_score);
        self.sum += weighted_score;
    }

    fn mean(&self) -> f64 {
        self.sum / self.weighted.len() as f64
    }
}

/// Everything scored during one classification episode.
#[derive(Debug, Clone, Default)]
pub struct ScoresLedger {
    records: Vec<ScoreRecord>,
    /// One draw per shared round; empty for naive episodes.
    draws: Vec<NoisedObservation>,
    tracks: Vec<ClassTrack>,
}

impl ScoresLedger {
    fn new(labels: &[Condition]) -> Self {
        Self {
            records: Vec::new(),
            draws: Vec::new(),
            tracks: labels.iter().map(|c| ClassTrack::new(c.class_id)).collect(),
        }
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    /// Shared-round noise draws, indexed by `round - 1`.
    pub fn draws(&self) -> &[NoisedObservation] {
        &self.draws
    }

    /// Number of scores held for `class_id`.
    pub fn count(&self, class_id: usize) -> usize {
        self.track(class_id).map_or(0, |t| t.weighted.len())
    }

    /// Per-round weighted scores `w_t * err` for `class_id`.
    pub fn weighted_scores(&self, class_id: usize) -> &[f64] {
        self.track(class_id).map_or(&[], |t| t.weighted.as_slice())
    }

    fn track(&self, class_id: usize) -> Option<&ClassTrack> {
        self.tracks.iter().find(|t| t.class_id == class_id)
    }

    fn record(&mut self, idx: usize, round: usize, t: f64, w_t: f64, sq_error: f64) {
        let track = &mut self.tracks[idx];
        track.push(w_t * sq_error);
        self.records.push(ScoreRecord {
            round,
            t,
            w_t,
            class_id: track.class_id,
            sq_error,
        });
    }
}

/// `(1/n) Σ_j w_{t_j} err_j` over the class's scores.
pub fn aggregate_weighted(ledger: &ScoresLedger, class_id: usize) -> Result<f64> {
    match ledger.track(class_id) {
        Some(t) if !t.weighted.is_empty() => Ok(t.mean()),
        _ => Err(contract(format!("class {class_id} has no scores"))),
    }
}

/// A class's final weighted mean score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class_id: usize,
    pub score: f64,
}

/// A class removed from the candidate set, and the round it happened in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Elimination {
    pub class_id: usize,
    pub round: usize,
}

/// The result of classifying one example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class_id: usize,
    pub n_rounds: usize,
    pub model_calls: usize,
    /// Weighted mean scores of the classes still in play at the end.
    pub final_scores: Vec<ClassScore>,
    pub eliminations: Vec<Elimination>,
}

/// Prediction plus the scores behind it.
#[derive(Debug, Clone)]
pub struct Classification {
    pub prediction: Prediction,
    pub ledger: ScoresLedger,
}

/// Hyperparameters of the pruned classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruningConfig {
    pub min_scores: usize,
    pub max_scores: usize,
    pub cutoff_pval: f64,
    pub sidedness: Sidedness,
}

impl Default for PruningConfig {
    fn default() -> Self {
        Self {
            min_scores: 20,
            max_scores: 2000,
            cutoff_pval: 2e-3,
            sidedness: Sidedness::OneSided,
        }
    }
}

impl PruningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_scores < 1 || self.min_scores > self.max_scores {
            return Err(contract(format!(
                "need 1 <= min_scores ({}) <= max_scores ({})",
                self.min_scores, self.max_scores
            )));
        }
        if !(self.cutoff_pval > 0.0 && self.cutoff_pval < 1.0) {
            return Err(contract(format!("cutoff_pval must lie in (0, 1), got {}", self.cutoff_pval)));
        }
        Ok(())
    }
}

/// How noise is drawn across classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    #[default]
    Shared,
    Independent,
}

/// A classification strategy with its budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Method {
    Naive { n_per_class: usize },
    Shared { n_rounds: usize },
    Pruned(PruningConfig),
}

/// Run-level classifier settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub min_scores: usize,
    pub max_scores: usize,
    pub cutoff_pval: f64,
    pub sidedness: Sidedness,
    pub weighting: WeightingSpec,
    pub noise_mode: NoiseMode,
    pub pruning: bool,
    /// Rounds (shared) or samples per class (independent) when pruning is off.
    pub n_rounds: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        let p = PruningConfig::default();
        Self {
            min_scores: p.min_scores,
            max_scores: p.max_scores,
            cutoff_pval: p.cutoff_pval,
            sidedness: p.sidedness,
            weighting: WeightingSpec::default(),
            noise_mode: NoiseMode::Shared,
            pruning: true,
            n_rounds: p.max_scores,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    pub fn pruning_config(&self) -> PruningConfig {
        PruningConfig {
            min_scores: self.min_scores,
            max_scores: self.max_scores,
            cutoff_pval: self.cutoff_pval,
            sidedness: self.sidedness,
        }
    }

    /// The strategy these settings select.
    pub fn method(&self) -> Result<Method> {
        let method = match (self.pruning, self.noise_mode) {
            (true, NoiseMode::Shared) => Method::Pruned(self.pruning_config()),
            (true, NoiseMode::Independent) => {
                return Err(contract(
                    "pruning compares paired scores and requires shared noise",
                ))
            }
            (false, NoiseMode::Shared) => Method::Shared { n_rounds: self.n_rounds },
            (false, NoiseMode::Independent) => Method::Naive {
                n_per_class: self.n_rounds,
            },
        };
        method.validate()?;
        Ok(method)
    }
}

impl Method {
    pub fn validate(&self) -> Result<()> {
        match self {
            Method::Naive { n_per_class: 0 } => Err(contract("n_per_class must be >= 1")),
            Method::Shared { n_rounds: 0 } => Err(contract("n_rounds must be >= 1")),
            Method::Pruned(cfg) => cfg.validate(),
            _ => Ok(()),
        }
    }
}

fn check_labels(labels: &[Condition]) -> Result<()> {
    if labels.is_empty() {
        return Err(contract("label set is empty"));
    }
    let mut seen = HashSet::new();
    for c in labels {
        if !seen.insert(c.class_id) {
            return Err(contract(format!("duplicate class id {}", c.class_id)));
        }
    }
    Ok(())
}

/// Lower score wins; equal scores go to the lower class id.
fn better(a: (f64, usize), b: (f64, usize)) -> bool {
    match a.0.partial_cmp(&b.0) {
        Some(Ordering::Less) => true,
        Some(Ordering::Equal) => a.1 < b.1,
        _ => false,
    }
}

/// A denoiser, schedule and weighting bundled for scoring.
#[derive(Debug, Clone, Copy)]
pub struct Engine<M, W> {
    pub model: M,
    pub schedule: NoiseSchedule,
    pub weighting: W,
}

impl<M: ScoreModel, W: TimestepWeight> Engine<M, W> {
    pub fn new(model: M, schedule: NoiseSchedule, weighting: W) -> Self {
        Self {
            model,
            schedule,
            weighting,
        }
    }

    fn check_input(&self, x0: &[f64]) -> Result<()> {
        check_dim(self.model.dim(), x0.len())
    }

    /// Draws one `(t, x_t)` and scores every candidate against it.
    pub fn score_round<R: Rng + ?Sized>(
        &self,
        x0: &[f64],
        candidates: &[&Condition],
        rng: &mut R,
    ) -> Result<RoundScores> {
        if candidates.is_empty() {
            return Err(contract("score_round needs at least one candidate"));
        }
        self.check_input(x0)?;
        let t: f64 = rng.random();
        let noised = self.schedule.sample_forward(x0, t, rng)?;
        let weight = self.weighting.weight(self.schedule, t);
        let mut x_hat = vec![0.0; x0.len()];
        let errors = candidates
            .iter()
            .map(|c| {
                self.model.denoise_into(&noised.data, t, c, &mut x_hat);
                (c.class_id, sq_dist(x0, &x_hat))
            })
            .collect();
        Ok(RoundScores {
            noised,
            weight,
            errors,
        })
    }

    /// Independent `(t, x_t)` for every class and sample.
    pub fn classify_naive<R: Rng + ?Sized>(
        &self,
        x0: &[f64],
        labels: &[Condition],
        n_per_class: usize,
        rng: &mut R,
    ) -> Result<Classification> {
        check_labels(labels)?;
        self.check_input(x0)?;
        Method::Naive { n_per_class }.validate()?;
        let mut ledger = ScoresLedger::new(labels);
        let mut x_hat = vec![0.0; x0.len()];
        for round in 1..=n_per_class {
            for (idx, cond) in labels.iter().enumerate() {
                let t: f64 = rng.random();
                let noised = self.schedule.sample_forward(x0, t, rng)?;
                let w = self.weighting.weight(self.schedule, t);
                self.model.denoise_into(&noised.data, t, cond, &mut x_hat);
                ledger.record(idx, round, t, w, sq_dist(x0, &x_hat));
            }
        }
        Ok(finish_unpruned(ledger, n_per_class, labels.len() * n_per_class))
    }

    /// One shared `(t, x_t)` per round over the full label set.
    pub fn classify_shared<R: Rng + ?Sized>(
        &self,
        x0: &[f64],
        labels: &[Condition],
        n_rounds: usize,
        rng: &mut R,
    ) -> Result<Classification> {
        check_labels(labels)?;
        Method::Shared { n_rounds }.validate()?;
        let candidates: Vec<&Condition> = labels.iter().collect();
        let mut ledger = ScoresLedger::new(labels);
        for round in 1..=n_rounds {
            let scores = self.score_round(x0, &candidates, rng)?;
            for (idx, &(_, err)) in scores.errors.iter().enumerate() {
                ledger.record(idx, round, scores.noised.time, scores.weight, err);
            }
            ledger.draws.push(scores.noised);
        }
        Ok(finish_unpruned(ledger, n_rounds, labels.len() * n_rounds))
    }

    /// Predictions of the naive (`independent = true`) or shared strategy at
    /// every budget in `checkpoints` (ascending), from a single pass. Each
    /// entry equals the prediction of a separate run at that budget with the
    /// same `rng` state, since both strategies consume randomness in rounds.
    pub fn unpruned_checkpoints<R: Rng + ?Sized>(
        &self,
        x0: &[f64],
        labels: &[Condition],
        independent: bool,
        checkpoints: &[usize],
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        check_labels(labels)?;
        self.check_input(x0)?;
        if checkpoints.first().is_some_and(|&c| c == 0)
            || checkpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(contract("checkpoints must be positive and strictly increasing"));
        }
        let candidates: Vec<&Condition> = labels.iter().collect();
        let mut sums = vec![0.0; labels.len()];
        let mut x_hat = vec![0.0; x0.len()];
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut next = checkpoints.iter().peekable();
        let last = checkpoints.last().copied().unwrap_or(0);
        for round in 1..=last {
            if independent {
                for (idx, cond) in labels.iter().enumerate() {
                    let t: f64 = rng.random();
                    let noised = self.schedule.sample_forward(x0, t, rng)?;
                    let w = self.weighting.weight(self.schedule, t);
                    self.model.denoise_into(&noised.data, t, cond, &mut x_hat);
                    sums[idx] += w * sq_dist(x0, &x_hat);
                }
            } else {
                let scores = self.score_round(x0, &candidates, rng)?;
                for (sum, &(_, err)) in sums.iter_mut().zip(&scores.errors) {
                    *sum += scores.weight * err;
                }
            }
            if next.peek() == Some(&&round) {
                next.next();
                let mut best: Option<(f64, usize)> = None;
                for (sum, cond) in sums.iter().zip(labels) {
                    let key = (sum / round as f64, cond.class_id);
                    if best.is_none_or(|b| better(key, b)) {
                        best = Some(key);
                    }
                }
                out.push(best.expect("label set is nonempty").1);
            }
        }
        Ok(out)
    }

    /// Shared-noise scoring with successive elimination of candidates.
    pub fn classify_pruned<R: Rng + ?Sized>(
        &self,
        x0: &[f64],
        labels: &[Condition],
        config: &PruningConfig,
        rng: &mut R,
    ) -> Result<Classification> {
        check_labels(labels)?;
        config.validate()?;
        self.check_input(x0)?;
        let mut ledger = ScoresLedger::new(labels);
        let mut alive: Vec<usize> = (0..labels.len()).collect();
        let mut eliminations = Vec::new();
        let mut best = 0usize;
        let mut paired_against: Option<usize> = None;
        let mut n = 0usize;
        let mut model_calls = 0usize;

        while alive.len() > 1 && n < config.max_scores {
            n += 1;
            let candidates: Vec<&Condition> = alive.iter().map(|&i| &labels[i]).collect();
            let scores = self.score_round(x0, &candidates, rng)?;
            model_calls += candidates.len();
            for (&idx, &(_, err)) in alive.iter().zip(&scores.errors) {
                ledger.record(idx, n, scores.noised.time, scores.weight, err);
            }
            ledger.draws.push(scores.noised);

            best = alive
                .iter()
                .copied()
                .reduce(|a, b| {
                    let (ta, tb) = (&ledger.tracks[a], &ledger.tracks[b]);
                    if better((tb.mean(), tb.class_id), (ta.mean(), ta.class_id)) {
                        b
                    } else {
                        a
                    }
                })
                .expect("alive is nonempty");

            // Paired differences (candidate - best) over the rounds so far.
            if paired_against == Some(best) {
                let reference = *ledger.tracks[best].weighted.last().expect("scored this round");
                for &idx in &alive {
                    let track = &mut ledger.tracks[idx];
                    let last = *track.weighted.last().expect("scored this round");
                    track.paired.push(last, reference);
                }
            } else {
                let reference = ledger.tracks[best].weighted.clone();
                for &idx in &alive {
                    let track = &mut ledger.tracks[idx];
                    track.paired = PairedAccumulator::from_diffs(
                        track.weighted.iter().zip(&reference).map(|(a, b)| a - b),
                    );
                }
                paired_against = Some(best);
            }

            if n >= config.min_scores {
                let mut kept = Vec::with_capacity(alive.len());
                for &idx in &alive {
                    if idx != best {
                        let p = paired_ttest_pvalue(&ledger.tracks[idx].paired, config.sidedness)?;
                        if p < config.cutoff_pval {
                            eliminations.push(Elimination {
                                class_id: labels[idx].class_id,
                                round: n,
                            });
                            continue;
                        }
                    }
                    kept.push(idx);
                }
                alive = kept;
            }
        }

        let final_scores = alive
            .iter()
            .filter(|&&i| !ledger.tracks[i].weighted.is_empty())
            .map(|&i| ClassScore {
                class_id: ledger.tracks[i].class_id,
                score: ledger.tracks[i].mean(),
            })
            .collect();
        let prediction = Prediction {
            class_id: labels[best].class_id,
            n_rounds: n,
            model_calls,
            final_scores,
            eliminations,
        };
        Ok(Classification { prediction, ledger })
    }

    /// Dispatches on `method`.
    pub fn classify<R: Rng + ?Sized>(
        &self,
        x0: &[f64],
        labels: &[Condition],
        method: &Method,
        rng: &mut R,
    ) -> Result<Classification> {
        match *method {
            Method::Naive { n_per_class } => self.classify_naive(x0, labels, n_per_class, rng),
            Method::Shared { n_rounds } => self.classify_shared(x0, labels, n_rounds, rng),
            Method::Pruned(ref cfg) => self.classify_pruned(x0, labels, cfg, rng),
        }
    }
}

impl<M: ScoreModel + Sync, W: TimestepWeight + Sync> Engine<M, W> {
    /// Classifies every observation, example `i` drawing from the episode
    /// stream `(seed, i)`. Output order follows input order.
    pub fn classify_all(
        &self,
        observations: &[Observation],
        labels: &[Condition],
        method: &Method,
        seed: u64,
    ) -> Result<Vec<Prediction>> {
        check_labels(labels)?;
        method.validate()?;
        observations
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let mut rng = episode_rng(seed, i as u64);
                Ok(self.classify(&x.data, labels, method, &mut rng)?.prediction)
            })
            .collect()
    }
}

fn finish_unpruned(ledger: ScoresLedger, n_rounds: usize, model_calls: usize) -> Classification {
    let mut best: Option<(f64, usize)> = None;
    for track in &ledger.tracks {
        let key = (track.mean(), track.class_id);
        if best.is_none_or(|b| better(key, b)) {
            best = Some(key);
        }
    }
    let final_scores = ledger
        .tracks
        .iter()
        .map(|t| ClassScore {
            class_id: t.class_id,
            score: t.mean(),
        })
        .collect();
    let prediction = Prediction {
        class_id: best.expect("label set is nonempty").1,
        n_rounds,
        model_calls,
        final_scores,
        eliminations: Vec::new(),
    };
    Classification { prediction, ledger }
}

/// A strategy family swept by [`efficiency_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Naive,
    Pruned,
    Shared,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Naive => "naive",
            Strategy::Pruned => "pruned",
            Strategy::Shared => "shared",
        }
    }

    /// The method this strategy runs at `budget`: samples per class (naive),
    /// rounds (shared) or `max_scores` (pruned, with `min_scores` capped at
    /// the budget).
    pub fn method(self, budget: usize, pruning: &PruningConfig) -> Method {
        match self {
            Strategy::Naive => Method::Naive { n_per_class: budget },
            Strategy::Shared => Method::Shared { n_rounds: budget },
            Strategy::Pruned => Method::Pruned(PruningConfig {
                min_scores: pruning.min_scores.min(budget),
                max_scores: budget,
                ..*pruning
            }),
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" | "independent" => Ok(Strategy::Naive),
            "shared" => Ok(Strategy::Shared),
            "pruned" | "shared+pruned" => Ok(Strategy::Pruned),
            other => Err(crate::Error::Parse(format!(
                "unknown strategy {other:?}; expected naive | shared | pruned"
            ))),
        }
    }
}

/// One point of an accuracy-versus-cost curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub strategy: Strategy,
    pub budget: usize,
    pub accuracy: f64,
    pub mean_calls: f64,
}

/// Accuracy and mean model calls per (strategy, budget); zero budgets are
/// skipped and rows are sorted by strategy name, then budget.
pub fn efficiency_curve<M: ScoreModel + Sync, W: TimestepWeight + Sync>(
    engine: &Engine<M, W>,
    dataset: &[(usize, Observation)],
    labels: &[Condition],
    sweeps: &[(Strategy, Vec<usize>)],
    pruning: &PruningConfig,
    seed: u64,
) -> Result<Vec<EfficiencyRow>> {
    if dataset.is_empty() {
        return Err(contract("efficiency curve needs a nonempty dataset"));
    }
    let observations: Vec<Observation> = dataset.iter().map(|(_, x)| x.clone()).collect();
    let mut rows = Vec::new();
    for (strategy, budgets) in sweeps {
        let mut budgets: Vec<usize> = budgets.iter().copied().filter(|&b| b > 0).collect();
        budgets.sort_unstable();
        budgets.dedup();
        if *strategy == Strategy::Pruned {
            for &budget in &budgets {
                let method = strategy.method(budget, pruning);
                let preds = engine.classify_all(&observations, labels, &method, seed)?;
                rows.push(summarize(*strategy, budget, dataset, &preds));
            }
            continue;
        }
        check_labels(labels)?;
        let independent = *strategy == Strategy::Naive;
        let per_example: Vec<Vec<usize>> = observations
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let mut rng = episode_rng(seed, i as u64);
                engine.unpruned_checkpoints(&x.data, labels, independent, &budgets, &mut rng)
            })
            .collect::<Result<_>>()?;
        for (j, &budget) in budgets.iter().enumerate() {
            let hits = dataset
                .iter()
                .zip(&per_example)
                .filter(|((y, _), p)| *y == p[j])
                .count();
            rows.push(EfficiencyRow {
                strategy: *strategy,
                budget,
                accuracy: hits as f64 / dataset.len() as f64,
                mean_calls: (labels.len() * budget) as f64,
            });
        }
    }
    rows.sort_by(|a, b| {
        a.strategy
            .name()
            .cmp(b.strategy.name())
            .then(a.budget.cmp(&b.budget))
    });
    rows.dedup_by(|a, b| a.strategy == b.strategy && a.budget == b.budget);
    Ok(rows)
}

fn summarize(
    strategy: Strategy,
    budget: usize,
    dataset: &[(usize, Observation)],
    preds: &[Prediction],
) -> EfficiencyRow {
    let n = dataset.len() as f64;
    let hits = dataset
        .iter()
        .zip(preds)
        .filter(|((y, _), p)| *y == p.class_id)
        .count();
    let calls: usize = preds.iter().map(|p| p.model_calls).sum();
    EfficiencyRow {
        strategy,
        budget,
        accuracy: hits as f64 / n,
        mean_calls: calls as f64 / n,
    }
}

/// The cheapest mean-call count at which `strategy` reaches `target`
/// accuracy, if any row does.
pub fn calls_to_accuracy(rows: &[EfficiencyRow], strategy: Strategy, target: f64) -> Option<f64> {
    rows.iter()
        .filter(|r| r.strategy == strategy && r.accuracy >= target)
        .map(|r| r.mean_calls)
        .reduce(f64::min)
}
