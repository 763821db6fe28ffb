//! `calibrate`: confidence models fit on a held-out split of a finished run.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use diffcls_core::calibration::{
    fit_platt, fit_temperature, platt_confidence, reliability_and_ece, score_softmax_probs, PlattModel,
    ScoredExample, DEFAULT_BINS,
};
use diffcls_core::rng::{stream_rng, Stream};
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::classify::{PredictionLine, RunReport};
use crate::output::OutDir;

/// Scale of the uncalibrated call-count confidence `sigmoid(-n / scale)`.
pub const BASELINE_CALL_SCALE: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationMethod {
    /// Platt scaling for pruned runs, temperature scaling otherwise.
    Auto,
    Temperature,
    Platt,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CalibrateArgs {
    /// Output directory of a `classify` run.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long, value_enum, default_value_t = CalibrationMethod::Auto)]
    pub method: CalibrationMethod,
    /// Fraction of examples held out for fitting.
    #[arg(long, default_value_t = 0.2)]
    pub split_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run_calibrate(args: &CalibrateArgs, out: &OutDir) -> Result<()> {
    out.write_manifest("calibrate", args)?;
    if !(args.split_fraction > 0.0 && args.split_fraction < 1.0) {
        bail!("--split-fraction must lie strictly between 0 and 1, got {}", args.split_fraction);
    }
    let report_path = args.run.join("report.json");
    let report: RunReport = serde_json::from_str(
        &fs::read_to_string(&report_path).with_context(|| format!("reading {}", report_path.display()))?,
    )
    .with_context(|| format!("parsing {}", report_path.display()))?;
    let preds_path = args.run.join("predictions.jsonl");
    let preds: Vec<PredictionLine> = fs::read_to_string(&preds_path)
        .with_context(|| format!("reading {}", preds_path.display()))?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .with_context(|| format!("parsing {}", preds_path.display()))?;

    let pruned = report.config.pruning;
    let method = match args.method {
        CalibrationMethod::Auto if pruned => CalibrationMethod::Platt,
        CalibrationMethod::Auto => CalibrationMethod::Temperature,
        m => m,
    };
    if method == CalibrationMethod::Temperature && pruned {
        bail!(
            "temperature scaling needs every class's score and is not compatible with the class \
             pruning used by this run; rerun with --pruning off or calibrate with --method platt"
        );
    }

    let n = preds.len();
    let n_fit = (args.split_fraction * n as f64).round() as usize;
    if n_fit == 0 || n_fit >= n {
        bail!("a split fraction of {} leaves {n_fit} of {n} examples for fitting", args.split_fraction);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(args.seed, Stream::Splits, 0));
    let (fit_idx, eval_idx) = order.split_at(n_fit);
    let mut fit_idx = fit_idx.to_vec();
    let mut eval_idx = eval_idx.to_vec();
    fit_idx.sort_unstable();
    eval_idx.sort_unstable();
    let correct: Vec<bool> = eval_idx.iter().map(|&i| preds[i].correct).collect();

    let summary = match method {
        CalibrationMethod::Platt => {
            let data: Vec<(f64, bool)> = fit_idx
                .iter()
                .map(|&i| (preds[i].model_calls as f64, preds[i].correct))
                .collect();
            let model = fit_platt(&data)?;
            let baseline = PlattModel::new(BASELINE_CALL_SCALE, 0.0)?;
            let conf = |m: &PlattModel| -> Vec<f64> {
                eval_idx.iter().map(|&i| platt_confidence(m, preds[i].model_calls as f64)).collect()
            };
            let calibrated = reliability_and_ece(&conf(&model), &correct, args.bins)?;
            let raw = reliability_and_ece(&conf(&baseline), &correct, args.bins)?;
            out.write_json("reliability_platt.json", &calibrated)?;
            out.write_json("reliability_baseline.json", &raw)?;
            serde_json::json!({
                "method": "platt",
                "tau": finite_or_null(model.tau),
                "beta": model.beta,
                "ece": calibrated.ece,
                "baseline": { "tau": BASELINE_CALL_SCALE, "beta": 0.0, "ece": raw.ece },
            })
        }
        _ => {
            let scored = |i: usize| -> Result<ScoredExample> {
                let p = &preds[i];
                if p.final_scores.len() != report.num_classes {
                    bail!("example {} has {} class scores, expected {}", p.example, p.final_scores.len(), report.num_classes);
                }
                Ok(ScoredExample {
                    scores: p.final_scores.iter().map(|s| (s.class_id, s.score)).collect(),
                    true_class: p.label,
                })
            };
            let fit: Vec<ScoredExample> = fit_idx.iter().map(|&i| scored(i)).collect::<Result<_>>()?;
            let model = fit_temperature(&fit)?;
            let conf = |tau: f64| -> Result<Vec<f64>> {
                eval_idx
                    .iter()
                    .map(|&i| {
                        let ex = scored(i)?;
                        let probs = score_softmax_probs(&ex.scores, tau)?;
                        let pred = preds[i].class_id;
                        Ok(probs.iter().find(|(k, _)| *k == pred).map_or(0.0, |(_, p)| *p))
                    })
                    .collect()
            };
            let calibrated = reliability_and_ece(&conf(model.tau)?, &correct, args.bins)?;
            let raw = reliability_and_ece(&conf(1.0)?, &correct, args.bins)?;
            out.write_json("reliability_temperature.json", &calibrated)?;
            out.write_json("reliability_baseline.json", &raw)?;
            serde_json::json!({
                "method": "temperature",
                "tau": model.tau,
                "ece": calibrated.ece,
                "baseline": { "tau": 1.0, "ece": raw.ece },
            })
        }
    };
    out.write_json(
        "calibration.json",
        &serde_json::json!({
            "run_config": report.config,
            "seed": args.seed,
            "split_fraction": args.split_fraction,
            "fit_examples": fit_idx.len(),
            "eval_examples": eval_idx.len(),
            "result": summary,
        }),
    )?;
    Ok(())
}

fn finite_or_null(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
