//! End-to-end CLI contract: exit codes, output formats, and determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sensdyn"))
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("sensdyn-cli-test-{name}-{}.toml", std::process::id()));
    fs::write(&path, body).unwrap();
    path
}

const SHIFT_RPS: &str = r#"
seed = 42

[system.shift]
sidedness = "one-sided"
probabilities = ["1/2", "1/2"]

[experiment.check-rps]
a = 1.5
delta = "1/2"
trials = 200
"#;

#[test]
fn successful_run_exits_zero_with_json_document() {
    let cfg = write_config("rps-ok", SHIFT_RPS);
    let out: Output = bin().args(["check-rps", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["experiment"], "check-rps");
    assert_eq!(doc["config"]["seed"], 42);
    assert_eq!(doc["payload"]["passed"], true);
    assert!(doc["wall_time_ms"].is_u64());
}

#[test]
fn csv_format_emits_one_row_per_trial() {
    let cfg = write_config("rps-csv", SHIFT_RPS);
    let out = bin().args(["check-rps", "--format", "csv", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,distance,neg_log_ball,bound,first_sensitive_time,passed,excluded"
    );
    assert_eq!(lines.count(), 200);
}

#[test]
fn out_flag_writes_the_file() {
    let cfg = write_config("rps-out", SHIFT_RPS);
    let out_path = std::env::temp_dir().join(format!("sensdyn-cli-out-{}.json", std::process::id()));
    let out = bin()
        .args(["check-rps", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(doc["payload"]["passed"], true);
}

#[test]
fn seed_override_changes_sampled_trials() {
    let cfg = write_config("rps-seed", SHIFT_RPS);
    let base = bin().args(["check-rps", "--config"]).arg(&cfg).output().unwrap();
    let same = bin().args(["check-rps", "--seed", "42", "--config"]).arg(&cfg).output().unwrap();
    let other = bin().args(["check-rps", "--seed", "43", "--config"]).arg(&cfg).output().unwrap();
    let payload = |o: &Output| {
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["payload"].clone()
    };
    assert_eq!(payload(&base), payload(&same));
    assert_ne!(payload(&base), payload(&other));
}

#[test]
fn config_errors_exit_two() {
    // missing file
    let out = bin().args(["check-rps", "--config", "/nonexistent/x.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // malformed TOML / missing seed
    let cfg = write_config("bad-toml", "[system.shift]\nsidedness = \"one-sided\"\n");
    let out = bin().args(["check-rps", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // unknown key
    let cfg = write_config("unknown-key", &format!("{SHIFT_RPS}\nbogus = 1\n"));
    let out = bin().args(["check-rps", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // experiment kind does not match the subcommand
    let cfg = write_config("kind-mismatch", SHIFT_RPS);
    let out = bin().args(["entropy", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("check-rps"));

    // structurally invalid system (non-normalized probabilities)
    let cfg = write_config(
        "bad-probs",
        r#"
seed = 1

[system.shift]
sidedness = "one-sided"
probabilities = ["1/2", "1/3"]

[experiment.rate]
"#,
    );
    let out = bin().args(["rate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn incapacity_exits_three() {
    // a rank-one witness search too shallow to find a stage below delta
    let cfg = write_config(
        "incapacity",
        r#"
seed = 1

[system.rank-one]
initial-width = "2/3"

[[system.rank-one.cycle]]
cuts = 3
spacers = [0, 1, 0]

[experiment.witness-rankone-failure]
a = 1.0
delta = "1/1000000000"
search-cap = 2
"#,
    );
    let out = bin().args(["witness", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn witness_subcommand_accepts_both_witness_kinds() {
    let cfg = write_config(
        "witness-shift",
        r#"
seed = 1

[system.shift]
sidedness = "two-sided"
probabilities = ["1/2", "1/2"]

[experiment.witness-rps-failure]
a = 2.0
delta = "1/2"
"#,
    );
    let out = bin().args(["witness", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["payload"]["verified"], true);
}

#[test]
fn paper_suite_is_byte_deterministic() {
    let dir = std::env::temp_dir();
    let one = dir.join(format!("sensdyn-suite-one-{}.json", std::process::id()));
    let two = dir.join(format!("sensdyn-suite-two-{}.json", std::process::id()));
    for path in [&one, &two] {
        let out = bin().args(["paper-suite", "--seed", "31415", "--out"]).arg(path).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        // the summary table goes to stderr
        assert!(String::from_utf8_lossy(&out.stderr).contains("entries ok"));
    }
    let a = fs::read(&one).unwrap();
    let b = fs::read(&two).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "suite payloads differ between identical runs");
}
