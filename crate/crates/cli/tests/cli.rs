use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn suptest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suptest")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run_cfg(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    suptest(&args)
}

/// Data rows of a CSV artifact (comment and header skipped), split on commas.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash: "));
    lines.next().unwrap();
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn dirac_law_gives_unit_expectations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema":1,"law":{"kind":"finite","support":[0],"probs":[1]},"test":{"kind":"split_max"},"ranks":{"from":1,"to":32}}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(run_cfg("eval-test", &cfg, &out, &[]).status.code(), Some(0));
    let rows = csv_rows(&out.join("eval_test.csv"));
    assert_eq!(rows.len(), 32);
    for r in rows {
        assert_eq!(r[1], "1");
    }
}

#[test]
fn geometric_first_row_is_one_third() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema":1,"law":{"kind":"geometric","p":0.5},"test":{"kind":"split_max"},"ranks":{"from":1,"to":64}}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(run_cfg("eval-test", &cfg, &out, &[]).status.code(), Some(0));
    let rows = csv_rows(&out.join("eval_test.csv"));
    assert_eq!(rows.len(), 64);
    // P(X₁ = X₂) = Σ_k 4^{-(k+1)} = (1/4)/(1 − 1/4)
    let first: f64 = rows[0][1].parse().unwrap();
    assert!((first - 1.0 / 3.0).abs() <= 1e-12, "{first}");
}

#[test]
fn tv_demo_reports_union_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema":1,"base":{"kind":"finite","support":[0,1,2,3,4],"probs":[0.2,0.2,0.2,0.2,0.2]},"deltas":[0.01],"n":50}"#,
    );
    let out = dir.path().join("out");
    assert_eq!(run_cfg("tv-demo", &cfg, &out, &[]).status.code(), Some(0));
    let rows = csv_rows(&out.join("tv_demo.csv"));
    assert_eq!(rows[0][4], "0.5");
    let tv: f64 = rows[0][1].parse().unwrap();
    assert!((tv - 0.01).abs() < 1e-10);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let unknown = write_config(dir.path(), "a.json", r#"{"schema":1,"laws":[],"colour":"red"}"#);
    assert_eq!(run_cfg("classify", &unknown, &out, &[]).status.code(), Some(2));
    let schema = write_config(dir.path(), "b.json", r#"{"schema":2,"laws":[]}"#);
    assert_eq!(run_cfg("classify", &schema, &out, &[]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(run_cfg("classify", &missing, &out, &[]).status.code(), Some(2));
    let bad_law = write_config(
        dir.path(),
        "d.json",
        r#"{"schema":1,"law":{"kind":"finite","support":[0,1],"probs":[0.5,0.6]},"test":{"kind":"split_max"},"ranks":[1]}"#,
    );
    assert_eq!(run_cfg("eval-test", &bad_law, &out, &[]).status.code(), Some(2));
    let bad_alpha = write_config(dir.path(), "e.json", r#"{"schema":1,"test":{"kind":"split_max"},"alpha":1.5,"ranks":3}"#);
    assert_eq!(run_cfg("build-adversary", &bad_alpha, &out, &[]).status.code(), Some(2));
}

#[test]
fn level_violation_exits_three_with_finding() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schema":1,"test":{"kind":"split_max"},"alpha":0.05,"ranks":5}"#);
    let out = dir.path().join("out");
    assert_eq!(run_cfg("build-adversary", &cfg, &out, &[]).status.code(), Some(3));
    let finding: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("finding.json")).unwrap()).unwrap();
    assert_eq!(finding["result"]["kind"], "level_violation");
    assert_eq!(finding["result"]["rank"], 2);
    assert_eq!(manifest(&out)["status"], "level_violation");
    assert!(!out.join("schedule.json").exists());
}

#[test]
fn fresh_schedule_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let build = write_config(dir.path(), "b.json", r#"{"schema":1,"test":{"kind":"dual_split_max"},"alpha":0.05,"ranks":4}"#);
    let built = dir.path().join("built");
    assert_eq!(run_cfg("build-adversary", &build, &built, &[]).status.code(), Some(0));
    // Relative schedule path resolves against the config's directory.
    let verify = write_config(dir.path(), "v.json", r#"{"schema":1,"schedule":"built/schedule.json"}"#);
    let out = dir.path().join("verified");
    let o = run_cfg("verify-adversary", &verify, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("verify.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[10] == "true"));
}

#[test]
fn failed_verification_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let build =
        write_config(dir.path(), "b.json", r#"{"schema":1,"test":{"kind":"constant","value":0.3},"alpha":0.3,"ranks":5}"#);
    assert_eq!(run_cfg("build-adversary", &build, &dir.path().join("built"), &[]).status.code(), Some(0));
    let verify = write_config(
        dir.path(),
        "v.json",
        r#"{"schema":1,"schedule":"built/schedule.json","test":{"kind":"constant","value":0.95}}"#,
    );
    let out = dir.path().join("verified");
    assert_eq!(run_cfg("verify-adversary", &verify, &out, &[]).status.code(), Some(3));
    let finding: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("finding.json")).unwrap()).unwrap();
    assert_eq!(finding["result"]["kind"], "verification_failure");
    assert_eq!(finding["result"]["rank"], 4);
}

#[test]
fn every_artifact_carries_the_hash_and_seed_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema":1,"seed":5,"law":{"kind":"pushforward","base":{"kind":"finite","support":[0,1],"probs":[0.5,0.5]},"injection":"one_over_k_plus_2"},"depth":8}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run_cfg("simulate-tsirelson", &cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run_cfg("simulate-tsirelson", &cfg, &b, &["--seed", "6"]).status.code(), Some(0));
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["seed"], 5);
    assert_eq!(mb["seed"], 6);
    assert_ne!(ma["config_hash"], mb["config_hash"]);
    let hash = ma["config_hash"].as_str().unwrap();
    let path = fs::read_to_string(a.join("path.csv")).unwrap();
    assert_eq!(path.lines().next().unwrap(), format!("# config_hash: {hash}"));
    assert_eq!(csv_rows(&a.join("path.csv")).len(), 9);
    assert_ne!(path, fs::read_to_string(b.join("path.csv")).unwrap());
}

#[test]
fn classify_and_part_two_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema":1,"laws":[{"kind":"finite","atoms":[{"value":0.25,"prob":0.5},{"value":0.5,"prob":0.5}]},{"kind":"finite","atoms":[{"num":1,"den":4,"prob":0.5},{"num":3,"den":4,"prob":0.5}]}]}"#,
    );
    let out = dir.path().join("c");
    assert_eq!(run_cfg("classify", &cfg, &out, &[]).status.code(), Some(0));
    let rows = csv_rows(&out.join("classify.csv"));
    assert_eq!(rows[0][1], "not_classifiable");
    assert_eq!(rows[1][1..], ["case2", "2", "1", "4"]);

    let p2 = write_config(
        dir.path(),
        "p.json",
        r#"{"schema":1,"test":{"kind":"constant","value":0.2},"alpha":0.1,"ranks":6,"part_two":{"alpha_prime":0.5}}"#,
    );
    let out = dir.path().join("p");
    assert_eq!(run_cfg("build-adversary", &p2, &out, &[]).status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("part_two.json")).unwrap()).unwrap();
    assert_eq!(v["result"]["outcome"], "finite_witness");
    assert_eq!(v["result"]["rank"], 4);
}
