use std::path::Path;
use std::process::{Command, Output};

use eswap::cli::emit::parse_csv;
use eswap::cli::{Mode, EXIT_CONFIG, EXIT_IO, EXIT_OK};

fn eswap(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_eswap"));
    cmd.args(args).env_remove("ESWAP_SEED");
    if let Some(s) = seed_env {
        cmd.env("ESWAP_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const SMALL: &[&str] = &["--q-min", "0.1", "--q-max", "0.9", "--q-steps", "5", "--shots", "1024"];

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run_strs(args: &[String], seed_env: Option<&str>) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    eswap(&refs, seed_env)
}

#[test]
fn same_seed_gives_byte_identical_csv() {
    for fig in ["fig1", "fig2"] {
        let mut args = with(&[fig], SMALL);
        args.extend(["--seed", "11"].map(String::from));
        let a = run_strs(&args, None);
        let b = run_strs(&args, None);
        assert_eq!(code(&a), EXIT_OK, "{}", String::from_utf8_lossy(&a.stderr));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{fig} output differs between identical runs");
    }
}

#[test]
fn different_seed_changes_sim_rows_only() {
    let args = with(&["fig1"], SMALL);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let a = parse_csv(&String::from_utf8(run_strs(&with(&argv, &["--seed", "1"]), None).stdout).unwrap()).unwrap();
    let b = parse_csv(&String::from_utf8(run_strs(&with(&argv, &["--seed", "2"]), None).stdout).unwrap()).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        if x.mode == Mode::Theory {
            assert_eq!(x, y);
        }
    }
    assert!(a.rows.iter().zip(&b.rows).any(|(x, y)| x.mode != Mode::Theory && x.value != y.value));
}

#[test]
fn seed_flag_beats_environment_which_sets_default() {
    let args = with(&["fig2", "--mode", "ideal_sim"], SMALL);
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let flag7 = run_strs(&with(&argv, &["--seed", "7"]), None).stdout;
    let env7 = run_strs(&args, Some("7")).stdout;
    let env8_flag7 = run_strs(&with(&argv, &["--seed", "7"]), Some("8")).stdout;
    let env8 = run_strs(&args, Some("8")).stdout;
    assert_eq!(flag7, env7);
    assert_eq!(flag7, env8_flag7);
    assert_ne!(flag7, env8);
    let bad = run_strs(&args, Some("not-a-number"));
    assert_eq!(code(&bad), EXIT_CONFIG);
}

#[test]
fn template_round_trips_through_config_flag() {
    let dir = tempfile::tempdir().unwrap();
    let template = dir.path().join("eswap.toml");
    let out = eswap(&["emit-config-template", "--out", template.to_str().unwrap()], None);
    assert_eq!(code(&out), EXIT_OK);
    let text = std::fs::read_to_string(&template).unwrap();
    assert!(text.contains("[sweep]") && text.contains("[noise]"));

    let csv = dir.path().join("fig1.csv");
    let out = eswap(
        &["fig1", "--config", template.to_str().unwrap(), "--mode", "theory", "--out", csv.to_str().unwrap()],
        None,
    );
    assert_eq!(code(&out), EXIT_OK, "{}", String::from_utf8_lossy(&out.stderr));
    let table = parse_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(table.len(), 21 * 3);
}

#[test]
fn json_output_mirrors_csv() {
    let csv = eswap(&["fig2", "--mode", "theory", "--q-steps", "3"], None);
    let json = eswap(&["fig2", "--mode", "theory", "--q-steps", "3", "--format", "json"], None);
    let table = parse_csv(&String::from_utf8(csv.stdout).unwrap()).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), table.len());
    for (r, j) in table.rows.iter().zip(rows) {
        assert_eq!(j["quantity"], r.quantity.as_str());
        assert_eq!(j["value"].as_f64().unwrap(), r.value);
    }
}

#[test]
fn config_errors_exit_2_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[sweep]\nq_min = 0.0\nq_stepz = 4\n").unwrap();
    let out = eswap(&["fig1", "--config", path.to_str().unwrap()], None);
    assert_eq!(code(&out), EXIT_CONFIG);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("q_stepz") && err.contains("line 3"), "{err}");

    assert_eq!(code(&eswap(&["fig1", "--q-min", "-0.5"], None)), EXIT_CONFIG);
    assert_eq!(code(&eswap(&["fig1", "--mode", "quantum"], None)), EXIT_CONFIG);
    assert_eq!(code(&eswap(&["verify", "--suite", "nonsense"], None)), EXIT_CONFIG);
}

#[test]
fn io_errors_exit_4() {
    let missing = Path::new("/nonexistent-dir/out.csv");
    assert_eq!(code(&eswap(&["fig1", "--mode", "theory", "--out", missing.to_str().unwrap()], None)), EXIT_IO);
    assert_eq!(code(&eswap(&["fig1", "--config", "/nonexistent-dir/c.toml"], None)), EXIT_IO);
}

#[test]
fn verify_reports_worst_case_and_passes() {
    let out = eswap(&["verify", "--suite", "swap_oracle", "--trials", "50", "--seed", "3"], None);
    assert_eq!(code(&out), EXIT_OK);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS") && text.contains("seed"), "{text}");

    let out = eswap(&["verify", "--suite", "ccr", "--trials", "10", "--json"], None);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["suite"], "ccr");
    assert!(v["checks"][0]["worst"].as_f64().unwrap() < 1e-10);
}
