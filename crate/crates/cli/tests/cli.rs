use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use renyi_core::samplers::{sample, DistributionSpec};

fn renyi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renyi")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_sample(path: &Path, spec: &DistributionSpec, n: usize, seed: u64) {
    let ps = sample(spec, n, seed).unwrap();
    let mut text = String::new();
    for p in ps.iter() {
        text += &p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        text.push('\n');
    }
    fs::write(path, text).unwrap();
}

const FAST_CAL: [&str; 4] = ["--n-cal", "20000", "--reps", "4"];

#[test]
fn calibrate_is_deterministic() {
    let args = ["calibrate", "--d", "2", "--alpha", "0.5", "--S", "1,2", "--n-cal", "5000", "--reps", "3"];
    let a = renyi(&args);
    let b = renyi(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert!(v["mean"].as_f64().unwrap() > 0.0, "{v}");
}

#[test]
fn calibrate_cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("gamma.jsonl");
    let cache = cache.to_str().unwrap();
    let args = ["calibrate", "--d", "3", "--p", "0.9", "--S", "2", "--n-cal", "3000", "--reps", "2", "--cache", cache];
    let a = stdout_json(&renyi(&args));
    let b = stdout_json(&renyi(&args));
    assert_eq!(a, b);
    assert_eq!(fs::read_to_string(cache).unwrap().lines().count(), 1);
}

#[test]
fn invalid_alpha_is_a_usage_error() {
    let out = renyi(&["calibrate", "--d", "2", "--alpha", "1.2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("alpha"));
}

#[test]
fn entropy_of_uniform_sample() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("u.csv");
    write_sample(&input, &DistributionSpec::uniform_cube(3, 1.0), 2000, 1);
    let mut args = vec!["entropy", "--input", input.to_str().unwrap()];
    args.extend(FAST_CAL);
    let v = stdout_json(&renyi(&args));
    assert!(v["value"].as_f64().unwrap().abs() < 0.2, "{v}");
    assert_eq!(v["n"], 2000);
    assert_eq!(v["d"], 3);
}

#[test]
fn fixed_gamma_and_analytic_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("u.csv");
    write_sample(&input, &DistributionSpec::uniform_cube(2, 1.0), 500, 2);
    let path = input.to_str().unwrap();
    let v = stdout_json(&renyi(&["entropy", "--input", path, "--gamma", "1.0"]));
    assert!(v["value"].as_f64().unwrap().is_finite());
    let v = stdout_json(&renyi(&["entropy", "--input", path, "--S", "2", "--analytic-gamma"]));
    assert!(v["value"].as_f64().unwrap().abs() < 0.3, "{v}");
    let out = renyi(&["entropy", "--input", path, "--S", "1,2", "--analytic-gamma"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_input_files() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let out = renyi(&["entropy", "--input", empty.to_str().unwrap(), "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("no data"));

    let ragged = dir.path().join("ragged.csv");
    fs::write(&ragged, "a,b\n1,2\n3,4\n5\n").unwrap();
    let out = renyi(&["mi", "--input", ragged.to_str().unwrap(), "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));

    let out = renyi(&["entropy", "--input", dir.path().join("missing.csv").to_str().unwrap(), "--gamma", "1"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn mi_of_duplicated_column() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("dup.csv");
    let ps = sample(&DistributionSpec::uniform_cube(1, 1.0), 1000, 3).unwrap();
    let text: String = ps.iter().map(|p| format!("{},{}\n", p[0], p[0])).collect();
    fs::write(&input, text).unwrap();
    let mut args = vec!["mi", "--input", input.to_str().unwrap()];
    args.extend(FAST_CAL);
    let v = stdout_json(&renyi(&args));
    assert!(v["value"].as_f64().unwrap() > 1.0, "{v}");
    let warnings = v["warnings"].as_array().unwrap();
    assert!(warnings.iter().any(|w| w.as_str().unwrap().contains("d >= 3")));
}

#[test]
fn quick_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("diag.json");
    let start = std::time::Instant::now();
    let out = renyi(&["diagnostics", "--quick", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(start.elapsed().as_secs() < 30);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["exact"]["pass"], true, "{report}");

    let grid = dir.path().join("grid.json");
    fs::write(&grid, r#"{"exact": {"instances": 3}}"#).unwrap();
    let out = renyi(&["diagnostics", "--grid", grid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn small_rate_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("rate.json");
    fs::write(
        &config,
        r#"{
            "setups": [
                {"name": "u3", "distribution": {"kind": "uniform_cube", "d": 3, "side": 1.0}},
                {"name": "g20", "distribution": {"kind": "random_gaussian", "d": 20, "condition_cap": 10.0, "cov_seed": 2},
                 "calibration": {"n_cal": 500, "reps": 2}}
            ],
            "n_grid": [100, 200],
            "runs": 2,
            "neighbor_sets": [[1, 2, 3]]
        }"#,
    )
    .unwrap();
    let out_csv = dir.path().join("rate.csv");
    let mut args = vec!["rate-experiment", "--config", config.to_str().unwrap(), "--out", out_csv.to_str().unwrap()];
    args.extend(FAST_CAL);
    let out = renyi(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let mut rdr = csv::Reader::from_path(&out_csv).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["setup", "n", "run", "estimator", "estimate", "truth", "abs_error", "note"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    // u3: 2 n × 2 runs × (NN + histogram); g20: 2 × 2 NN plus one infeasibility note
    assert_eq!(rows.len(), 8 + 4 + 1);
    assert!(rows.iter().any(|r| &r[0] == "g20" && &r[3] == "histogram" && r[7].contains("infeasible")));
    assert!(dir.path().join("rate_summary.csv").exists());
}

#[test]
fn isa_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("isa.json");
    fs::write(
        &config,
        r#"{
            "subspace_dim": 2, "num_sources": 2, "n": 600, "alpha": 0.99, "neighbors": [1, 2, 3],
            "sources": [{"kind": "wireframe2d", "shape_id": 0}, {"kind": "wireframe2d", "shape_id": 3}]
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("isa_out");
    let mut args = vec!["isa", "--config", config.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()];
    args.extend(FAST_CAL);
    let out = renyi(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    let sol: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("solution.json")).unwrap()).unwrap();
    assert_eq!(sol["blocks"].as_array().unwrap().len(), 2);
    let norms = fs::read_to_string(out_dir.join("block_norms.csv")).unwrap();
    assert_eq!(norms.lines().count(), 3);
}
