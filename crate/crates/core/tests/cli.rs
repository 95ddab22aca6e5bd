use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vesonet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vesonet"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn small_scenario(dir: &Path) {
    let o = vesonet(
        &["gen-scenario", "--out", "s", "--grid", "3", "--consumers", "8", "--providers", "4", "--rsus", "1"],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let p = dir.join("s/scenario.json");
    let text = fs::read_to_string(&p).unwrap().replace("\"run_length\": 500", "\"run_length\": 120");
    fs::write(p, text).unwrap();
}

#[test]
fn generated_scenario_validates_runs_and_audits() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_scenario(d);
    assert_eq!(code(&vesonet(&["validate", "--config", "s/scenario.json"], d)), 0);
    let o = vesonet(&["run", "--config", "s/scenario.json", "--out", "r", "--seed", "9"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("metric,value\n"));
    for f in ["events.csv", "metrics.csv"] {
        assert!(d.join("r").join(f).exists());
    }
    let a = vesonet(&["audit", "r/events.csv", "--metrics", "r/metrics.csv"], d);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));

    let m = fs::read_to_string(d.join("r/metrics.csv")).unwrap();
    let tampered: String = m
        .lines()
        .map(|l| if l.starts_with("requests,") { "requests,999999".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(d.join("bad_metrics.csv"), tampered).unwrap();
    let a = vesonet(&["audit", "r/events.csv", "--metrics", "bad_metrics.csv"], d);
    assert_eq!(code(&a), 3);
    assert!(String::from_utf8_lossy(&a.stderr).contains("requests"));

    let o = vesonet(&["run", "--config", "s/scenario.json", "--out", "r2", "--seed", "9"], d);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(d.join("r/events.csv")).unwrap(), fs::read(d.join("r2/events.csv")).unwrap());
}

#[test]
fn invalid_configs_exit_one_with_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(
        d.join("bad.json"),
        r#"{"epsilon_s": -1, "alpha": 2, "rsus": [{"segment": 5000, "offset_m": 0}]}"#,
    )
    .unwrap();
    let o = vesonet(&["validate", "--config", "bad.json"], d);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    for field in ["epsilon_s", "alpha", "rsus[0].segment"] {
        assert!(err.contains(field), "{err}");
    }
    fs::write(d.join("broken.json"), "{\n  \"epsilon_s\": 1,\n  oops\n}").unwrap();
    let o = vesonet(&["validate", "--config", "broken.json"], d);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.json:3:"));
    assert_eq!(code(&vesonet(&["run", "--config", "bad.json", "--out", "x"], d)), 1);
    assert_eq!(code(&vesonet(&["run", "--config", "missing.json", "--out", "x"], d)), 2);
    assert_eq!(code(&vesonet(&["sweep", "--config", "bad.json"], d)), 1);
}

#[test]
fn gen_log_is_deterministic_and_trains() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    for out in ["a", "b"] {
        let o = vesonet(&["gen-log", "--out", out, "--users", "60", "--items", "40", "--seed", "3"], d);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(d.join("a/log.csv")).unwrap(), fs::read(d.join("b/log.csv")).unwrap());
    assert!(fs::read_to_string(d.join("a/labels.csv")).unwrap().starts_with("kind,id,cluster\n"));
    let o = vesonet(&["train-embed", "--log", "a/log.csv", "--out", "e", "--dimension", "8", "--epochs", "2"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(d.join("e/embeddings.csv").exists());
}

#[test]
fn toy_rl_training_writes_curve_and_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let o = vesonet(&["train-rl", "--out", "rl", "--steps", "300", "--seed", "2"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("greedy_accuracy,"));
    let curve = fs::read_to_string(d.join("rl/curve.csv")).unwrap();
    assert!(curve.starts_with("step,loss,epsilon,mean_reward\n"));
    assert!(d.join("rl/checkpoint.csv").exists());
}

#[test]
fn sweep_writes_long_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_scenario(d);
    let o = vesonet(
        &[
            "sweep", "--config", "s/scenario.json", "--out", "sw", "--axis", "rsu_count", "--values", "0,1",
            "--jobs", "2", "--policy", "baseline",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.join("sw/sweep.csv")).unwrap();
    assert!(csv.contains("rsu_count,0,baseline_no_reroute,delivery_rate,"));
    assert!(!csv.contains(",vesonet,"));
    assert_eq!(code(&vesonet(&["sweep", "--config", "s/scenario.json", "--out", "sw", "--axis", "rsu_count", "--values", "1"], d)), 1);
}

#[test]
fn audit_flags_hop_limit_and_malformed_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let head = "tick,event_type,request_id,content_id,vehicle_from,vehicle_to,hops,bytes_remaining\n";
    fs::write(
        d.join("hops.csv"),
        format!("{head}0,run_start,30000,,vesonet,,15,1000\n1,request,1,4,0,,,\n2,interest_forward,1,4,0,3,16,\n"),
    )
    .unwrap();
    let o = vesonet(&["audit", "hops.csv"], d);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("hop count 16"));
    fs::write(d.join("bad.csv"), format!("{head}1,request,1,4,0,,,\n2,nope,,,,,,\n")).unwrap();
    let o = vesonet(&["audit", "bad.csv"], d);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}
