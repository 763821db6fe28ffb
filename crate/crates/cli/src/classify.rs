//! `classify` and `efficiency`.

use std::io::Write;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use diffcls_core::io::ScoresCsvWriter;
use diffcls_core::rng::episode_rng;
use diffcls_core::{
    efficiency_curve, ClassScore, ClassifierConfig, Elimination, Engine, NoiseSchedule, Prediction, Strategy,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::common::{parse_budgets, ClassifierArgs, DataArgs};
use crate::output::{write_jsonl, OutDir};

/// Examples classified per batch when score ledgers are written.
const LEDGER_BATCH: usize = 64;

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// Also dump every score to scores.csv.
    #[arg(long)]
    pub scores_csv: bool,
}

/// One line of predictions.jsonl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub example: usize,
    pub label: usize,
    pub class_id: usize,
    pub correct: bool,
    pub n_rounds: usize,
    pub model_calls: usize,
    pub final_scores: Vec<ClassScore>,
    pub eliminations: Vec<Elimination>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ClassifierConfig,
    pub method: String,
    /// False when the weighting was fit to labeled data.
    pub zero_shot: bool,
    pub num_examples: usize,
    pub num_classes: usize,
    pub accuracy: Option<f64>,
    pub mean_model_calls: Option<f64>,
    pub median_model_calls: Option<f64>,
}

pub fn run_classify(args: &ClassifyArgs, out: &OutDir) -> Result<()> {
    let start = Instant::now();
    out.write_manifest("classify", args)?;
    let loaded = args.data.load()?;
    let config = args.classifier.config();
    let method = config.method()?;
    let schedule = NoiseSchedule::Cosine;
    let engine = Engine::new(loaded.world.denoiser(schedule), schedule, &config.weighting);

    let mut preds = out.writer("predictions.jsonl")?;
    let mut scores = if args.scores_csv {
        Some(ScoresCsvWriter::new(out.writer("scores.csv")?)?)
    } else {
        None
    };
    let mut calls = Vec::with_capacity(loaded.examples.len());
    let mut hits = 0usize;
    let batch = if scores.is_some() { LEDGER_BATCH } else { loaded.examples.len().max(1) };
    for (b, chunk) in loaded.examples.chunks(batch).enumerate() {
        let offset = b * batch;
        let results = chunk
            .par_iter()
            .enumerate()
            .map(|(j, (_, x))| {
                let mut rng = episode_rng(config.seed, (offset + j) as u64);
                let c = engine.classify(&x.data, &loaded.labels, &method, &mut rng)?;
                let records = if args.scores_csv { c.ledger.records().to_vec() } else { Vec::new() };
                Ok((c.prediction, records))
            })
            .collect::<diffcls_core::Result<Vec<_>>>()?;
        let mut lines = Vec::with_capacity(results.len());
        for (j, (p, records)) in results.into_iter().enumerate() {
            let example = offset + j;
            if let Some(w) = scores.as_mut() {
                w.write(example, &records)?;
            }
            let label = chunk[j].0;
            hits += usize::from(p.class_id == label);
            calls.push(p.model_calls);
            lines.push(prediction_line(example, label, p));
        }
        write_jsonl(&mut preds, lines)?;
    }
    preds.flush()?;
    if let Some(w) = scores {
        w.finish()?;
    }

    let n = calls.len();
    let report = RunReport {
        method: method_name(&config),
        zero_shot: !config.weighting.is_supervised(),
        num_examples: n,
        num_classes: loaded.labels.len(),
        accuracy: (n > 0).then(|| hits as f64 / n as f64),
        mean_model_calls: (n > 0).then(|| calls.iter().sum::<usize>() as f64 / n as f64),
        median_model_calls: median(&mut calls),
        config,
    };
    out.write_json("report.json", &report)?;
    out.write_json(
        "timing.json",
        &serde_json::json!({ "wall_clock_seconds": start.elapsed().as_secs_f64() }),
    )?;
    Ok(())
}

fn prediction_line(example: usize, label: usize, p: Prediction) -> PredictionLine {
    PredictionLine {
        example,
        label,
        class_id: p.class_id,
        correct: p.class_id == label,
        n_rounds: p.n_rounds,
        model_calls: p.model_calls,
        final_scores: p.final_scores,
        eliminations: p.eliminations,
    }
}

fn method_name(config: &ClassifierConfig) -> String {
    match (config.pruning, config.noise_mode) {
        (true, _) => "pruned",
        (false, diffcls_core::NoiseMode::Shared) => "shared",
        (false, diffcls_core::NoiseMode::Independent) => "naive",
    }
    .to_string()
}

fn median(values: &mut [usize]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2] as f64
    } else {
        (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0
    })
}

#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct Budgets(pub Vec<usize>);

fn budgets(s: &str) -> Result<Budgets, String> {
    parse_budgets(s).map(Budgets)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EfficiencyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Samples per class for independent noise.
    #[arg(long, default_value = "1,2,5,10,20,50,100,200,500,1000,2000", value_parser = budgets)]
    pub naive_budgets: Budgets,
    /// Rounds for shared noise.
    #[arg(long, default_value = "1,2,5,10,20,50,100,200,500,1000,2000", value_parser = budgets)]
    pub shared_budgets: Budgets,
    /// max_scores values for shared noise with pruning.
    #[arg(long, default_value = "20,50,100,200,500,1000,2000", value_parser = budgets)]
    pub pruned_budgets: Budgets,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
}

pub fn run_efficiency(args: &EfficiencyArgs, out: &OutDir) -> Result<()> {
    let start = Instant::now();
    out.write_manifest("efficiency", args)?;
    let loaded = args.data.load()?;
    let config = args.classifier.config();
    let pruning = config.pruning_config();
    pruning.validate()?;
    let schedule = NoiseSchedule::Cosine;
    let engine = Engine::new(loaded.world.denoiser(schedule), schedule, &config.weighting);
    let sweeps = vec![
        (Strategy::Naive, args.naive_budgets.0.clone()),
        (Strategy::Shared, args.shared_budgets.0.clone()),
        (Strategy::Pruned, args.pruned_budgets.0.clone()),
    ];
    let rows = efficiency_curve(&engine, &loaded.examples, &loaded.labels, &sweeps, &pruning, config.seed)?;
    let mut text = String::from("strategy,budget,accuracy,mean_calls\n");
    for r in &rows {
        text.push_str(&format!("{},{},{},{}\n", r.strategy.name(), r.budget, r.accuracy, r.mean_calls));
    }
    out.write_text("efficiency.csv", &text)?;
    out.write_json(
        "timing.json",
        &serde_json::json!({ "wall_clock_seconds": start.elapsed().as_secs_f64() }),
    )?;
    Ok(())
}
