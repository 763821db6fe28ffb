//! `gen-world` and `binding-gen`.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use diffcls_core::binding::{evaluate_binary, generate_examples, BagOfAttributesScorer, Scene, TaskKind};
use diffcls_core::io::{world_to_json, write_dataset};
use diffcls_core::{ClusteredSpec, WorldSpec};
use serde::Serialize;

use crate::output::{write_jsonl, OutDir};

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenWorldArgs {
    /// Number of classes K.
    #[arg(long, required_unless_present = "benchmark")]
    pub classes: Option<usize>,
    /// Feature dimension d.
    #[arg(long, required_unless_present = "benchmark")]
    pub dim: Option<usize>,
    /// Within-class standard deviation s.
    #[arg(long, default_value_t = 1.0)]
    pub std: f64,
    /// Minimum pairwise distance between means, in units of s.
    #[arg(long, required_unless_present = "benchmark")]
    pub separation: Option<f64>,
    /// Per-coordinate spread of candidate means, in units of separation * s.
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    /// Use the clustered K = 100 efficiency benchmark world instead.
    #[arg(long, conflicts_with_all = ["classes", "dim", "separation"])]
    pub benchmark: bool,
    /// Number of dataset examples.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run_gen_world(args: &GenWorldArgs, out: &OutDir) -> Result<()> {
    out.write_manifest("gen-world", args)?;
    let world = if args.benchmark {
        ClusteredSpec {
            seed: args.seed,
            ..ClusteredSpec::benchmark()
        }
        .generate()?
    } else {
        let mut spec = WorldSpec::new(
            args.classes.expect("required by clap"),
            args.dim.expect("required by clap"),
            args.std,
            args.separation.expect("required by clap"),
            args.seed,
        );
        spec.spread = args.spread;
        spec.generate()?
    };
    out.write_text("world.json", &world_to_json(&world)?)?;
    let rows = world.sample_dataset(args.n, args.seed)?;
    write_dataset(out.writer("dataset.csv")?, world.dim, &rows)?;
    Ok(())
}

fn parse_task(s: &str) -> Result<TaskKind, String> {
    s.parse::<TaskKind>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BindingArgs {
    /// Control "Shape", binding "Color|Shape" or pair "Shape,Size".
    #[arg(long, value_parser = parse_task)]
    #[serde(serialize_with = "serialize_task")]
    pub task: TaskKind,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the reference scene (small yellow sphere left, large gray cube
    /// right) for every example, or a scene read from a JSON file.
    #[arg(long)]
    pub scene: Option<SceneArg>,
    /// Score the examples with the bag-of-attributes engine scorer.
    #[arg(long)]
    pub evaluate: bool,
}

fn serialize_task<S: serde::Serializer>(t: &TaskKind, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_string())
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum SceneArg {
    Reference,
    File(PathBuf),
}

impl std::str::FromStr for SceneArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(if s == "reference" { SceneArg::Reference } else { SceneArg::File(s.into()) })
    }
}

impl SceneArg {
    fn load(&self) -> Result<Scene> {
        match self {
            SceneArg::Reference => Ok(Scene::reference()),
            SceneArg::File(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let scene: Scene = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
                scene.validate()?;
                Ok(scene)
            }
        }
    }
}

pub fn run_binding(args: &BindingArgs, out: &OutDir) -> Result<()> {
    out.write_manifest("binding-gen", args)?;
    let scene = args.scene.as_ref().map(SceneArg::load).transpose()?;
    let examples = generate_examples(&args.task, args.n, args.seed, scene.as_ref())?;
    let mut w = out.writer("tasks.jsonl")?;
    write_jsonl(&mut w, &examples)?;
    std::io::Write::flush(&mut w)?;
    if args.evaluate {
        let eval = evaluate_binary(&examples, &BagOfAttributesScorer::new(args.seed))?;
        out.write_json(
            "evaluation.json",
            &serde_json::json!({
                "task": args.task.to_string(),
                "seed": args.seed,
                "scorer": "bag-of-attributes",
                "result": eval,
            }),
        )?;
    }
    Ok(())
}
