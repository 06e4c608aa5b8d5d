use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn npp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npp")).args(args).output().unwrap()
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name).to_str().unwrap().to_owned()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn generate_is_deterministic_and_loadable() {
    let args = ["generate", "--grid", "3", "--commodities", "2", "--seed", "5"];
    let a = npp(&args);
    let b = npp(&args);
    assert_eq!(a.stdout, b.stdout);
    let inst = npp::instance::parse(std::str::from_utf8(&a.stdout).unwrap()).unwrap();
    assert_eq!(inst.node_count(), 9);
    assert_eq!(inst.num_commodities(), 2);
}

#[test]
fn generate_reads_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"tolled_fraction": 0.5}"#).unwrap();
    let out = npp(&["generate", "--grid", "3", "--commodities", "1", "--seed", "1", "--config", cfg.to_str().unwrap()]);
    let inst = npp::instance::parse(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(inst.num_tolled(), 12);
    std::fs::write(&cfg, r#"{"bogus": 1}"#).unwrap();
    let out = npp(&["generate", "--grid", "3", "--commodities", "1", "--seed", "1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(65));
}

#[test]
fn classify_reports_weak_case() {
    let v = json(&npp(&["classify", &data("example3.json"), "--w", "1,1"]));
    assert_eq!(v["strength"], "weak");
    let v = json(&npp(&["classify", &data("example3.json"), "--w", "1,2"]));
    assert_eq!(v["strength"], "strong");
}

#[test]
fn plot_emits_csv_grid() {
    let out = npp(&["plot", &data("example3.json"), "--box", "0:8,0:8", "--resolution", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t_1,t_2,k,w_1,w_2"));
    // Nine toll points, each with two commodity rows and one aggregate row.
    assert_eq!(lines.count(), 27);
}

#[test]
fn solve_methods_agree_on_example3() {
    let file = data("example3.json");
    for method in ["enum", "milp", "oracle"] {
        let v = json(&npp(&["solve", &file, "--method", method]));
        assert_eq!(v["revenue"], 14, "{method}");
    }
    let v = json(&npp(&["solve", &file, "--method", "milp", "--cuts", "1"]));
    assert_eq!(v["revenue"], 14);
    assert_eq!(v["status"], "optimal");
}

#[test]
fn limits_and_errors_map_to_exit_codes() {
    let file = data("example3.json");
    let out = npp(&["solve", &file, "--method", "milp", "--time-limit", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_lenient(&out)["status"], "time-limit");
    assert_eq!(npp(&["solve", &file, "--method", "single-toll"]).status.code(), Some(65));
    assert_eq!(npp(&["solve", &file]).status.code(), Some(64));
    assert_eq!(npp(&["frobnicate"]).status.code(), Some(64));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"nodes\": 2,").unwrap();
    let out = npp(&["paths", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

fn json_lenient(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn bench_summary_is_recomputable() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("runs");
    let out = npp(&[
        "bench",
        "--L-list",
        "3",
        "--N-list",
        "0,1",
        "--seeds",
        "1,2",
        "--commodities",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let summary = json(&out);
    let rows = summary.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let n = row["N"].as_u64().unwrap();
        let runs: Vec<Value> = [1, 2]
            .iter()
            .map(|s| {
                let text = std::fs::read_to_string(out_dir.join(format!("run_L3_N{n}_seed{s}.json"))).unwrap();
                serde_json::from_str(&text).unwrap()
            })
            .collect();
        let solved = runs.iter().filter(|r| r["report"]["status"] == "optimal").count();
        assert_eq!(row["solved"], solved);
        let mean: f64 = runs.iter().map(|r| r["report"]["millis"].as_f64().unwrap()).sum::<f64>() / 2.0;
        assert!((row["mean_millis"].as_f64().unwrap() - mean).abs() < 1e-9);
    }
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, summary);
}
