//! Flags and loading shared by the classification subcommands.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use diffcls_core::io::{read_dataset_file, read_world};
use diffcls_core::{
    label_set, ClassifierConfig, Condition, GaussianWorld, NoiseMode, Observation, Sidedness,
    WeightingSpec,
};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseArg {
    Shared,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SidednessArg {
    OneSided,
    TwoSided,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassifierArgs {
    /// Rounds every candidate is scored before elimination starts.
    #[arg(long, default_value_t = 20)]
    pub min_scores: usize,
    /// Round budget of the pruned classifier.
    #[arg(long, default_value_t = 2000)]
    pub max_scores: usize,
    /// Candidates whose paired t-test p-value falls below this are dropped.
    #[arg(long, default_value_t = 2e-3)]
    pub cutoff_pval: f64,
    #[arg(long, value_enum, default_value_t = SidednessArg::OneSided)]
    pub sidedness: SidednessArg,
    /// simple | vdm | heuristic[:lambda] | learned:<path>
    #[arg(long, default_value = "heuristic:7", value_parser = parse_weighting)]
    #[serde(serialize_with = "serialize_display")]
    pub weighting: WeightingSpec,
    #[arg(long, value_enum, default_value_t = NoiseArg::Shared)]
    pub noise_mode: NoiseArg,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    pub pruning: Switch,
    /// Rounds (shared) or samples per class (independent) with pruning off.
    #[arg(long, default_value_t = 2000)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_weighting(s: &str) -> Result<WeightingSpec, String> {
    WeightingSpec::parse(s).map_err(|e| e.to_string())
}

fn serialize_display<S: serde::Serializer>(w: &WeightingSpec, s: S) -> Result<S::Ok, S::Error> {
    match w {
        // Echo the weights themselves so the run does not depend on the file.
        WeightingSpec::Learned { .. } => w.serialize(s),
        other => s.serialize_str(&other.to_string()),
    }
}

impl ClassifierArgs {
    pub fn config(&self) -> ClassifierConfig {
        ClassifierConfig {
            min_scores: self.min_scores,
            max_scores: self.max_scores,
            cutoff_pval: self.cutoff_pval,
            sidedness: match self.sidedness {
                SidednessArg::OneSided => Sidedness::OneSided,
                SidednessArg::TwoSided => Sidedness::TwoSided,
            },
            weighting: self.weighting.clone(),
            noise_mode: match self.noise_mode {
                NoiseArg::Shared => NoiseMode::Shared,
                NoiseArg::Independent => NoiseMode::Independent,
            },
            pruning: self.pruning == Switch::On,
            n_rounds: self.rounds,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// World JSON providing the class means and the denoiser.
    #[arg(long)]
    pub world: PathBuf,
    /// Labeled dataset CSV.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Optional label names, one per line, in class order.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Only the first this many examples are used.
    #[arg(long, default_value_t = 4096)]
    pub max_examples: usize,
}

pub struct Loaded {
    pub world: GaussianWorld,
    pub labels: Vec<Condition>,
    pub examples: Vec<(usize, Observation)>,
}

impl DataArgs {
    /// Reads and cross-checks the world, labels and dataset.
    pub fn load(&self) -> Result<Loaded> {
        let world = read_world(&self.world).with_context(|| format!("reading world {}", self.world.display()))?;
        let k = world.num_classes();
        let names: Vec<String> = match &self.labels {
            Some(path) => fs::read_to_string(path)
                .with_context(|| format!("reading labels {}", path.display()))?
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect(),
            None => diffcls_core::default_label_names(k),
        };
        if names.len() != k {
            bail!("{} label names for a world with {k} classes", names.len());
        }
        let labels = label_set(&names)?;
        let mut data = read_dataset_file(&self.dataset)
            .with_context(|| format!("reading dataset {}", self.dataset.display()))?;
        if data.dim != world.dim {
            bail!(
                "dataset has dimension {} but the world has dimension {}",
                data.dim,
                world.dim
            );
        }
        if let Some((y, _)) = data.rows.iter().find(|(y, _)| *y >= k) {
            bail!("dataset label {y} is outside the world's {k} classes");
        }
        data.rows.truncate(self.max_examples);
        Ok(Loaded {
            world,
            labels,
            examples: data.rows,
        })
    }
}

/// Parses a comma-separated list of budgets.
pub fn parse_budgets(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<usize>().map_err(|e| format!("bad budget {p:?}: {e}")))
        .collect()
}
