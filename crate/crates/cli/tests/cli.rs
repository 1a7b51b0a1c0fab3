use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_congested"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_MAB: &str = r#"{
  "mode": "mab",
  "horizon": 2500,
  "replications": { "count": 3, "base_seed": 7 },
  "baselines": ["ucb1", "greedy"],
  "mab": { "mu": [1.0, 0.6], "window": 1, "congestion": { "row": [1.0, 0.5] } }
}"#;

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "mab.json", SMALL_MAB);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run(&["run-mab", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["run-mab", "--config", &cfg, "--out", b.to_str().unwrap(), "--jobs", "1"]).status.success());
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    assert_eq!(ta.len(), 1 + 3 * 3 + 3);
    assert_eq!(ta, tb);
}

#[test]
fn trace_header_and_thinning_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "mab.json", SMALL_MAB);
    let thin = tmp.path().join("thin");
    let full = tmp.path().join("full");
    assert!(run(&["run-mab", "--config", &cfg, "--out", thin.to_str().unwrap(), "--thin"]).status.success());
    assert!(run(&["run-mab", "--config", &cfg, "--out", full.to_str().unwrap(), "--no-thin"]).status.success());
    let rep = |d: &Path| std::fs::read_to_string(d.join("window_1/carmab/rep_0000.csv")).unwrap();
    let full_text = rep(&full);
    assert_eq!(
        full_text.lines().next().unwrap(),
        "t,action,reward_observed,reward_mean,comparator_mean,cum_regret_noisy,cum_regret_mean,avg_regret_mean,episode"
    );
    assert_eq!(full_text.lines().count(), 2501);
    let thin_text = rep(&thin);
    assert!(thin_text.lines().count() < 2501);
    assert!(thin_text.lines().last().unwrap().starts_with("2500,"));
    let agg = std::fs::read_to_string(thin.join("window_1/carmab_aggregate.csv")).unwrap();
    assert_eq!(agg.lines().count(), thin_text.lines().count());
}

#[test]
fn metadata_records_hash_and_seed_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "mab.json", SMALL_MAB);
    let out = tmp.path().join("o");
    assert!(run(&["run-mab", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "100"]).status.success());
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["base_seed"], 100);
    assert_eq!(meta["windows"][0]["reps"][2]["seed"], 102);
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
    assert!(meta["rng"].as_str().unwrap().to_lowercase().contains("chacha8"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write(tmp.path(), "u.json", &SMALL_MAB.replace("\"horizon\"", "\"horizn\""));
    let out = run(&["run-mab", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));

    let cfg = write(tmp.path(), "mab.json", SMALL_MAB);
    assert_eq!(run(&["run-st", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(run(&["run-mab", "--config", &cfg, "--jobs", "0"]).status.code(), Some(2));
}

#[test]
fn missing_files_exit_3() {
    assert_eq!(run(&["run-mab", "--config", "/nonexistent/cfg.json"]).status.code(), Some(3));
    let tmp = tempfile::tempdir().unwrap();
    let st = write(
        tmp.path(),
        "st.json",
        r#"{"mode":"st","horizon":10,"st":{"vertices":2,"edges_csv":"missing.csv","source":0,"sink":1,"window":1}}"#,
    );
    assert_eq!(run(&["run-st", "--config", &st]).status.code(), Some(3));
}

#[test]
fn oracle_reports_canonical_gain() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "o.json",
        r#"{"mode":"oracle","horizon":1000,"mab":{"mu":[1.0,0.6],"window":1,"congestion":{"row":[1.0,0.5]},"initial_history":[1]}}"#,
    );
    let out = run(&["oracle", "--config", &cfg]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["rho"], 0.8);
    assert_eq!(v[0]["cycle_actions"], serde_json::json!([1, 0]));
}

#[test]
fn check_passes_and_lists_case_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"mode":"check","check":{"cases":30,"coverage_replications":10}}"#,
    );
    let out = run(&["check", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
    for p in v["properties"].as_array().unwrap() {
        assert!(p["cases"].as_u64().unwrap() > 0);
    }
    assert!(tmp.path().join("check_report.json").exists());
}

#[test]
fn routing_and_contextual_commands_run() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "edges.csv", "from,to,mu\n0,1,0.5\n1,3,0.5\n0,2,0.3\n2,3,0.3\n");
    let st = write(
        tmp.path(),
        "st.json",
        r#"{"mode":"st","horizon":500,"st":{"vertices":4,"edges_csv":"edges.csv","source":0,"sink":3,"window":1}}"#,
    );
    let out = tmp.path().join("st");
    assert!(run(&["run-st", "--config", &st, "--out", out.to_str().unwrap()]).status.success());
    assert!(out.join("window_1/carmab_st/rep_0000.csv").exists());

    let cb = write(
        tmp.path(),
        "cb.json",
        r#"{"mode":"cb-known","horizon":300,"baselines":["random"],
            "cb":{"n_arms":3,"window":2,"dim":4,"contexts":"uniform_normalized"}}"#,
    );
    let out = tmp.path().join("cb");
    assert!(run(&["run-cb", "--config", &cb, "--out", out.to_str().unwrap()]).status.success());
    assert!(out.join("window_2/random_aggregate.csv").exists());
}
