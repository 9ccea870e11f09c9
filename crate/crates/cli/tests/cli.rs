use std::path::Path;
use std::process::{Command, Output};

use localopt_cli::commands::{sweep_rows, ResultRow};
use localopt_cli::output::read_trace_csv;
use localopt_cli::ExperimentSpec;
use localopt_core::problems::make_random_quadratic;
use localopt_core::Vector;
use serde_json::Value;
use tempfile::TempDir;

const CONFIG: &str = r#"{
    "name": "cli-test",
    "problem": {"dim": 6, "problem_seed": 3},
    "run": {"nodes": 3, "local_steps": 4, "rounds": 25, "inner_lr": 0.01,
            "outer": {"kind": "plain", "gamma": 1.2}, "sigma": 0.4, "seed": 5}
}"#;

fn localopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_localopt"))
        .args(args)
        .env_remove("LOCALOPT_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn with_sweep(sweep: &str) -> String {
    CONFIG.replace("\"run\"", &format!("\"sweep\": {sweep}, \"seeds\": [1, 2], \"run\""))
}

#[test]
fn run_is_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", CONFIG);
    let mut outputs = Vec::new();
    for (sub, threads) in [("a", "1"), ("b", "3")] {
        let out = dir.path().join(sub);
        let o = localopt(&[
            "--threads",
            threads,
            "run",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(out.join("trace.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert!(text.starts_with("round,loss_x,loss_avg,dist_sq,delta_norm,drift_max,g1_sq_sum,g2_sq_sum,cos_sim_mean\n"));
    assert!(!text.contains('\r'));
}

#[test]
fn invalid_momentum_reports_the_key() {
    let dir = TempDir::new().unwrap();
    let text = CONFIG.replace(
        "\"kind\": \"plain\", \"gamma\": 1.2",
        "\"kind\": \"momentum\", \"gamma\": 1.0, \"mu\": 1.2",
    );
    let cfg = write_config(dir.path(), "bad.json", &text);
    let out = dir.path().join("out");
    let o = localopt(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["key"], "mu");
    assert!(!out.join("trace.csv").exists());
}

#[test]
fn unknown_key_is_a_schema_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        &CONFIG.replace("\"seed\": 5", "\"seed\": 5, \"speed\": 1"),
    );
    let o = localopt(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["key"], "run.speed");
}

#[test]
fn divergence_exits_with_error_json() {
    let dir = TempDir::new().unwrap();
    let text = CONFIG
        .replace("\"inner_lr\": 0.01", "\"inner_lr\": 50.0")
        .replace("\"rounds\": 25", "\"rounds\": 400");
    let cfg = write_config(dir.path(), "div.json", &text);
    let out = dir.path().join("o");
    let o = localopt(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "diverged");
    assert!(err["round"].is_u64());
    assert!(!out.join("trace.csv").exists());
}

#[test]
fn trace_csv_round_trips_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let spec = ExperimentSpec::from_json(CONFIG).unwrap();
    let (result, _) = localopt_cli::commands::execute_run(&spec).unwrap();
    localopt_cli::commands::cmd_run(&spec, dir.path()).unwrap();
    let parsed = read_trace_csv(&dir.path().join("trace.csv")).unwrap();
    assert_eq!(parsed.len(), result.traces.len());
    for ((round, values), t) in parsed.iter().zip(&result.traces) {
        assert_eq!(*round, t.round);
        let expected = [
            t.loss_x,
            t.loss_running_avg,
            t.dist_sq,
            t.delta_norm,
            t.drift_max,
            t.grad_sq_sum_avg,
            t.grad_sq_sum_local,
            t.cos_sim_mean,
        ];
        for (a, b) in values.iter().zip(expected) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn noiseless_summary_matches_the_map_oracle() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &CONFIG.replace("\"sigma\": 0.4", "\"sigma\": 0.0"),
    );
    let out = dir.path().join("o");
    assert!(localopt(&["run", "--config", &cfg, "--out", out.to_str().unwrap()])
        .status
        .success());
    let summary = json(&out.join("summary.json"));

    let p = make_random_quadratic(6, 3).unwrap();
    let map = p.expected_round_map(0.01, 1.2, 4).unwrap();
    let mut e: Vector = -p.minimizer();
    for _ in 0..25 {
        e = &map * e;
    }
    let expected = p.loss(&(e + p.minimizer())).unwrap();
    let got = summary["final_loss"].as_f64().unwrap();
    assert!((got - expected).abs() <= 1e-10 * expected.abs());
}

#[test]
fn sweep_rows_are_canonical_and_thread_independent() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.json",
        &with_sweep(r#"{"gamma": [0.5, 1.0, 1.5], "sigma": [0.1, 1.0]}"#),
    );
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(threads);
        let o = localopt(&[
            "--threads",
            threads,
            "sweep",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        files.push(std::fs::read_to_string(out.join("results.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);

    let mut reader = csv::Reader::from_reader(files[0].as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(header, ResultRow::HEADER.to_vec());
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3 * 2 * 2);
    let keys: Vec<(f64, f64, u64)> = rows
        .iter()
        .map(|r| {
            (
                r[col("gamma")].parse().unwrap(),
                r[col("sigma")].parse().unwrap(),
                r[col("seed")].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(keys[0], (0.5, 0.1, 1));
    assert_eq!(keys[1], (0.5, 0.1, 2));
    assert_eq!(keys[2], (0.5, 1.0, 1));
    assert_eq!(keys[4], (1.0, 0.1, 1));
    assert_eq!(keys[11], (1.5, 1.0, 2));
}

#[test]
fn single_cell_sweep_equals_run() {
    let spec = ExperimentSpec::from_json(CONFIG).unwrap();
    let rows = sweep_rows(&spec).unwrap();
    assert_eq!(rows.len(), 1);
    let (_, summary) = localopt_cli::commands::execute_run(&spec).unwrap();
    assert_eq!(rows[0].status, "ok");
    assert_eq!(rows[0].final_loss.to_bits(), summary.final_loss.to_bits());
    assert_eq!(rows[0].avg_local_loss.to_bits(), summary.avg_local_loss.to_bits());
}

#[test]
fn sweep_records_failures_per_row() {
    let spec = ExperimentSpec::from_json(
        &with_sweep(r#"{"inner_lr": [0.01, 50.0]}"#).replace("\"rounds\": 25", "\"rounds\": 400"),
    )
    .unwrap();
    let rows = sweep_rows(&spec).unwrap();
    let status: Vec<&str> = rows.iter().map(|r| r.status).collect();
    assert_eq!(status, ["ok", "ok", "diverged", "diverged"]);
    assert!(rows[2].final_loss.is_nan());
}

#[test]
fn noiseless_tune_picks_the_capped_step() {
    let o = localopt(&[
        "tune",
        "--distance",
        "3",
        "--smoothness",
        "2",
        "--sigma",
        "0",
        "--local-steps",
        "8",
        "--rounds",
        "10",
        "--grid-check",
        "50",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["winner"], "A");
    assert_eq!(v["eta"].as_f64().unwrap(), 1.0 / 8.0);
    assert_eq!(v["gamma"].as_f64().unwrap(), 1.0);
    assert_eq!(v["grid_check"]["passed"], true);
}

#[test]
fn bound_flags_violated_constraint() {
    let base = [
        "bound",
        "--distance",
        "1",
        "--smoothness",
        "1",
        "--sigma",
        "1",
        "--local-steps",
        "2",
        "--rounds",
        "1",
    ];
    let run = |eta: &str| {
        let mut args = base.to_vec();
        args.extend(["--eta", eta, "--gamma", "1.5", "--theorem", "plain"]);
        let o = localopt(&args);
        assert!(o.status.success());
        serde_json::from_slice::<Value>(&o.stdout).unwrap()
    };
    assert_eq!(run("0.5")["plain"]["constraint_ok"], false);
    let ok = run("0.1");
    assert_eq!(ok["plain"]["constraint_ok"], true);
    assert!(ok.get("momentum").is_none());
}

#[test]
fn diagnose_writes_reports() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", CONFIG);
    let out = dir.path().join("d");
    let o = localopt(&["diagnose", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("diagnose.json"));
    assert!(report["g1_rms"].as_f64().unwrap() <= report["g2_rms"].as_f64().unwrap() + 1e-12);
    let drift = std::fs::read_to_string(out.join("drift.csv")).unwrap();
    assert_eq!(drift.lines().count(), 1 + 25 * 5);
}
