use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use diffcls_core::io::{read_dataset_file, read_world};
use diffcls_core::rng::episode_rng;
use diffcls_core::{default_label_names, label_set, Engine, NoiseSchedule, WeightingSpec};
use serde_json::Value;

fn diffcls(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffcls"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = diffcls(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

fn lines(path: PathBuf) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn gen_world(root: &Path, args: &[&str]) -> (PathBuf, PathBuf) {
    let dir = root.join("world");
    let mut full = vec!["gen-world"];
    full.extend_from_slice(args);
    ok(&dir, &full);
    (dir.join("world.json"), dir.join("dataset.csv"))
}

#[test]
fn gen_world_respects_separation_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["gen-world", "--classes", "2", "--dim", "1", "--separation", "10", "--n", "20", "--seed", "3"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&a, &args);
    ok(&b, &args);
    for f in ["world.json", "dataset.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let world = read_world(a.join("world.json")).unwrap();
    assert!((world.means[0][0] - world.means[1][0]).abs() >= 10.0 * world.std);
}

#[test]
fn generated_labels_match_bayes_at_separation_8() {
    let tmp = tempfile::tempdir().unwrap();
    let (w, d) = gen_world(tmp.path(), &["--classes", "10", "--dim", "8", "--separation", "8", "--n", "2000", "--seed", "5"]);
    let world = read_world(w).unwrap();
    let data = read_dataset_file(d).unwrap();
    let agree = data
        .rows
        .iter()
        .filter(|(y, x)| world.bayes_classify(&x.data).unwrap() == *y)
        .count() as f64
        / data.rows.len() as f64;
    assert!(agree >= 0.99, "{agree}");
}

#[test]
fn infeasible_separation_fails_with_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("w");
    let o = diffcls(
        &out,
        &["gen-world", "--classes", "50", "--dim", "1", "--separation", "10", "--spread", "0.5", "--n", "5"],
    );
    assert!(!o.status.success());
    let marker = fs::read_to_string(out.join("FAILED")).unwrap();
    assert!(marker.contains("could not place mean"), "{marker}");
}

#[test]
fn default_flags_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let (w, d) = gen_world(tmp.path(), &["--classes", "5", "--dim", "4", "--separation", "3", "--n", "40", "--seed", "1"]);
    let out = tmp.path().join("run");
    ok(&out, &["classify", "--world", w.to_str().unwrap(), "--dataset", d.to_str().unwrap()]);
    let report = json(out.join("report.json"));
    let cfg = &report["config"];
    assert_eq!(cfg["min_scores"], 20);
    assert_eq!(cfg["max_scores"], 2000);
    assert_eq!(cfg["cutoff_pval"], 0.002);
    assert_eq!(cfg["weighting"]["kind"], "heuristic");
    assert_eq!(cfg["weighting"]["lambda"], 7.0);
    assert_eq!(cfg["pruning"], true);
    assert_eq!(report["zero_shot"], true);
    assert_eq!(report["num_examples"], 40);

    let preds = lines(out.join("predictions.jsonl"));
    assert_eq!(preds.len(), 40);
    let hits = preds.iter().filter(|p| p["correct"] == true).count();
    assert_eq!(report["accuracy"].as_f64().unwrap(), hits as f64 / 40.0);
    for p in &preds {
        assert!(p["n_rounds"].as_u64().unwrap() <= 2000);
    }
    assert!(out.join("timing.json").exists());
    assert!(out.join("manifest.json").exists());
    assert!(!out.join("FAILED").exists());
}

#[test]
fn pruning_off_matches_core_shared_classifier() {
    let tmp = tempfile::tempdir().unwrap();
    let (w, d) = gen_world(tmp.path(), &["--classes", "6", "--dim", "4", "--separation", "1", "--n", "30", "--seed", "2"]);
    let out = tmp.path().join("run");
    ok(
        &out,
        &[
            "classify", "--world", w.to_str().unwrap(), "--dataset", d.to_str().unwrap(), "--pruning", "off",
            "--noise-mode", "shared", "--rounds", "25", "--seed", "9",
        ],
    );
    let world = read_world(&w).unwrap();
    let data = read_dataset_file(&d).unwrap();
    let labels = label_set(&default_label_names(6)).unwrap();
    let engine = Engine::new(world.denoiser(NoiseSchedule::Cosine), NoiseSchedule::Cosine, WeightingSpec::default());
    let preds = lines(out.join("predictions.jsonl"));
    for (i, (_, x)) in data.rows.iter().enumerate() {
        let expected = engine.classify_shared(&x.data, &labels, 25, &mut episode_rng(9, i as u64)).unwrap();
        assert_eq!(preds[i]["class_id"], expected.prediction.class_id);
        assert_eq!(preds[i]["model_calls"], 150);
        let scores: Vec<f64> = preds[i]["final_scores"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s["score"].as_f64().unwrap())
            .collect();
        let core: Vec<f64> = expected.prediction.final_scores.iter().map(|s| s.score).collect();
        assert_eq!(scores, core);
    }
    assert_eq!(json(out.join("report.json"))["method"], "shared");
}

#[test]
fn scores_csv_has_one_row_per_score() {
    let tmp = tempfile::tempdir().unwrap();
    let (w, d) = gen_world(tmp.path(), &["--classes", "3", "--dim", "2", "--separation", "1", "--n", "5", "--seed", "2"]);
    let out = tmp.path().join("run");
    ok(
        &out,
        &[
            "classify", "--world", w.to_str().unwrap(), "--dataset", d.to_str().unwrap(), "--pruning", "off",
            "--rounds", "4", "--scores-csv",
        ],
    );
    let text = fs::read_to_string(out.join("scores.csv")).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("example,round,t,w_t,class_id,sq_error"));
    assert_eq!(rows.count(), 5 * 4 * 3);
}

#[test]
fn empty_dataset_gives_an_empty_report() {
    let tmp = tempfile::tempdir().unwrap();
    let (w, _) = gen_world(tmp.path(), &["--classes", "3", "--dim", "2", "--separation", "1", "--n", "5"]);
    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "label,f0,f1\n").unwrap();
    let out = tmp.path().join("run");
    ok(&out, &["classify", "--world", w.to_str().unwrap(), "--dataset", empty.to_str().unwrap()]);
    let report = json(out.join("report.json"));
    assert_eq!(report["num_examples"], 0);
    assert!(report["accuracy"].is_null());
    assert_eq!(fs::read_to_string(out.join("predictions.jsonl")).unwrap(), "");
}

#[test]
fn dimension_mismatch_fails_before_scoring() {
    let tmp = tempfile::tempdir().unwrap();
    let (w, _) = gen_world(tmp.path(), &["--classes", "3", "--dim", "2", "--separation", "1", "--n", "5"]);
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "label,f0,f1,f2\n0,1,2,3\n").unwrap();
    let out = tmp.path().join("run");
    let o = diffcls(&out, &["classify", "--world", w.to_str().unwrap(), "--dataset", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("dimension 3 but the world has dimension 2"));
    assert!(out.join("FAILED").exists());
    assert!(!out.join("predictions.jsonl").exists());
}

#[test]
fn learned_weighting_is_flagged_as_supervised() {
    let tmp = tempfile::tempdir().unwrap();
    let (w, d) = gen_world(tmp.path(), &["--classes", "3", "--dim", "2", "--separation", "2", "--n", "6"]);
    let weights = tmp.path().join("v.txt");
    fs::write(&weights, "0.5\n".repeat(20)).unwrap();
    let out = tmp.path().join("run");
    let spec = format!("learned:{}", weights.display());
    ok(
        &out,
        &["classify", "--world", w.to_str().unwrap(), "--dataset", d.to_str().unwrap(), "--weighting", &spec],
    );
    let report = json(out.join("report.json"));
    assert_eq!(report["zero_shot"], false);
    assert_eq!(report["config"]["weighting"]["weights"].as_array().unwrap().len(), 20);
}

#[test]
fn efficiency_table_format() {
    let tmp = tempfile::tempdir().unwrap();
    let (w, d) = gen_world(tmp.path(), &["--classes", "4", "--dim", "3", "--separation", "2", "--n", "12"]);
    let out = tmp.path().join("eff");
    ok(
        &out,
        &[
            "efficiency", "--world", w.to_str().unwrap(), "--dataset", d.to_str().unwrap(), "--naive-budgets",
            "5,0,2", "--shared-budgets", "3,1", "--pruned-budgets", "30,20",
        ],
    );
    let text = fs::read_to_string(out.join("efficiency.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "strategy,budget,accuracy,mean_calls");
    let keys: Vec<(String, usize)> = rows[1..]
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[0].to_string(), f[1].parse().unwrap())
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys.len(), 6, "zero budget dropped");
    assert!(rows.contains(&"naive,2,") || rows.iter().any(|r| r.starts_with("naive,2,") && r.ends_with(",8")));
}

#[test]
fn calibration_errors_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let (w, d) = gen_world(tmp.path(), &["--classes", "10", "--dim", "8", "--separation", "1", "--n", "300", "--seed", "4"]);
    let pruned = tmp.path().join("pruned");
    ok(&pruned, &["classify", "--world", w.to_str().unwrap(), "--dataset", d.to_str().unwrap()]);

    let out = tmp.path().join("cal");
    let o = diffcls(&out, &["calibrate", "--run", pruned.to_str().unwrap(), "--method", "temperature"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not compatible with the class pruning"));
    assert!(out.join("FAILED").exists());

    let o = diffcls(&out, &["calibrate", "--run", pruned.to_str().unwrap(), "--split-fraction", "0"]);
    assert!(!o.status.success());

    ok(&out, &["calibrate", "--run", pruned.to_str().unwrap()]);
    assert!(!out.join("FAILED").exists(), "marker cleared by a successful run");
    let platt = json(out.join("reliability_platt.json"));
    let baseline = json(out.join("reliability_baseline.json"));
    assert_eq!(platt["bins"].as_array().unwrap().len(), 10);
    let total: u64 = platt["bins"].as_array().unwrap().iter().map(|b| b["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 240);
    assert!(platt["ece"].as_f64().unwrap() <= baseline["ece"].as_f64().unwrap());

    let shared = tmp.path().join("shared");
    ok(
        &shared,
        &["classify", "--world", w.to_str().unwrap(), "--dataset", d.to_str().unwrap(), "--pruning", "off", "--rounds", "30"],
    );
    let out = tmp.path().join("cal-t");
    ok(&out, &["calibrate", "--run", shared.to_str().unwrap()]);
    let summary = json(out.join("calibration.json"));
    assert_eq!(summary["result"]["method"], "temperature");
    assert!(out.join("reliability_temperature.json").exists());
}

#[test]
fn binding_usage_error_lists_valid_kinds() {
    let tmp = tempfile::tempdir().unwrap();
    let o = diffcls(tmp.path(), &["binding-gen", "--task", "Size|Size", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Valid kinds"));
}

#[test]
fn binding_reference_scene_golden_prompts() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("Color|Shape", "A yellow sphere.", "A gray sphere."),
        ("Shape,Size", "A small sphere and a large cube.", "A large sphere and a small cube."),
        (
            "Color,Size",
            "A small yellow object and a large gray object.",
            "A large yellow object and a small gray object.",
        ),
        ("Color|Position", "On the right is a gray object.", "On the right is a yellow object."),
    ];
    for (task, pos, neg) in cases {
        let out = tmp.path().join(task.replace(['|', ','], "_"));
        ok(&out, &["binding-gen", "--task", task, "--n", "20", "--seed", "1", "--scene", "reference"]);
        let examples = lines(out.join("tasks.jsonl"));
        assert_eq!(examples.len(), 20);
        assert!(
            examples.iter().any(|e| e["positive"] == pos && e["negative"] == neg),
            "{task}: no {pos:?} vs {neg:?}"
        );
        assert!(examples.iter().all(|e| e["task"] == task));
    }
}

#[test]
fn binding_determinism_and_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["binding-gen", "--task", "Color|Shape", "--n", "3", "--seed", "1", "--evaluate"];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&a, &args);
    ok(&b, &args);
    for f in ["tasks.jsonl", "evaluation.json", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let eval = json(a.join("evaluation.json"));
    assert_eq!(eval["result"]["n"], 3);
}

#[test]
fn out_dir_defaults_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_diffcls"))
        .env("DIFFCLS_OUT_DIR", &dir)
        .args(["binding-gen", "--task", "Shape", "--n", "2"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.join("tasks.jsonl").exists());
}
