use std::fs;
use std::path::{Path, PathBuf};

use fmpower_cli::{run, EXIT_DATA, EXIT_LIMIT, EXIT_OK, EXIT_USAGE};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/small")
}

fn fmpower(args: &[&str]) -> i32 {
    let mut argv = vec!["fmpower", "--log-level", "error"];
    argv.extend_from_slice(args);
    run(argv)
}

fn summary_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in summary"))
        .to_string()
}

#[test]
fn build_writes_the_fixed_constant() {
    let out = tempfile::tempdir().unwrap();
    let fx = fixture();
    let code = fmpower(&[
        "build", "--scenario", fx.to_str().unwrap(), "--model", "milp", "--bigm", "fixed:1e40",
        "--out", out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let lp = fs::read_to_string(out.path().join("models/model.lp")).unwrap();
    assert!(lp.contains("1e40 s_r"));
    assert!(lp.contains("\nBinaries\n"));
    assert!(out.path().join("manifest.txt").exists());
    assert!(!out.path().join("solutions").exists());
}

#[test]
fn lp_model_has_no_binaries() {
    let out = tempfile::tempdir().unwrap();
    let fx = fixture();
    let code = fmpower(&["build", "--scenario", fx.to_str().unwrap(), "--model", "lp", "--out", out.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let lp = fs::read_to_string(out.path().join("models/model.lp")).unwrap();
    assert!(!lp.contains("Binaries"));
}

#[test]
fn solve_reports_gap_within_target() {
    let out = tempfile::tempdir().unwrap();
    let fx = fixture();
    let code = fmpower(&["solve", "--scenario", fx.to_str().unwrap(), "--gap", "1.0", "--out", out.path().to_str().unwrap()]);
    let summary = fs::read_to_string(out.path().join("solutions/stage1_summary.txt")).unwrap();
    let status = summary_value(&summary, "status");
    if code == EXIT_OK {
        assert!(status == "optimal" || status == "gap_reached", "{status}");
        let gap: f64 = summary_value(&summary, "gap_percent").parse().unwrap();
        assert!(gap <= 1.0);
    } else {
        assert_eq!(code, EXIT_LIMIT);
        assert_eq!(status, "iteration_limit");
    }
}

#[test]
fn iteration_limit_exits_three_after_writing() {
    let out = tempfile::tempdir().unwrap();
    let fx = fixture();
    let code = fmpower(&[
        "solve", "--scenario", fx.to_str().unwrap(), "--model", "lp", "--iteration-limit", "1",
        "--out", out.path().to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_LIMIT);
    let summary = fs::read_to_string(out.path().join("solutions/stage1_summary.txt")).unwrap();
    assert_eq!(summary_value(&summary, "status"), "iteration_limit");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(fmpower(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(fmpower(&["solve", "--gap", "lots"]), EXIT_USAGE);
    assert_eq!(fmpower(&["solve", "--bigm", "huge"]), EXIT_USAGE);
    assert_eq!(fmpower(&["solve", "--jobs", "0", "--preset", "tiny"]), EXIT_USAGE);
    assert_eq!(fmpower(&["eval", "--efficiency", "1.5", "--preset", "tiny"]), EXIT_USAGE);
    assert_eq!(fmpower(&["--help"]), EXIT_OK);
}

#[test]
fn data_errors_exit_two() {
    let out = tempfile::tempdir().unwrap();
    let missing = out.path().join("nowhere");
    assert_eq!(
        fmpower(&["coverage", "--scenario", missing.to_str().unwrap(), "--out", out.path().to_str().unwrap()]),
        EXIT_DATA
    );
    let bad = out.path().join("factors.csv");
    fs::write(&bad, "transmitter_id,y\n999,0.5\n").unwrap();
    assert_eq!(
        fmpower(&["eval", "--preset", "tiny", "--factors", bad.to_str().unwrap(), "--out", out.path().to_str().unwrap()]),
        EXIT_DATA
    );
}

#[test]
fn eval_accepts_power_factors_from_stage2() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fx = fixture();
    assert_eq!(
        fmpower(&["stage2", "--scenario", fx.to_str().unwrap(), "--model", "lp", "--out", a.path().to_str().unwrap()]),
        EXIT_OK
    );
    let factors = a.path().join("solutions/power_factors.csv");
    assert_eq!(
        fmpower(&["eval", "--scenario", fx.to_str().unwrap(), "--factors", factors.to_str().unwrap(), "--out", b.path().to_str().unwrap()]),
        EXIT_OK
    );
    assert_eq!(
        fmpower(&["eval", "--scenario", fx.to_str().unwrap(), "--model", "lp", "--out", a.path().to_str().unwrap()]),
        EXIT_OK
    );
    for f in ["summary.csv", "networks.csv", "energy.csv"] {
        assert_eq!(fs::read(a.path().join("eval").join(f)).unwrap(), fs::read(b.path().join("eval").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn rerun_reproduces_a_pipeline() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(fmpower(&["pipeline", "--preset", "tiny", "--seed", "3", "--model", "lp", "--out", a.path().to_str().unwrap()]), EXIT_OK);
    let manifest = a.path().join("manifest.txt");
    assert_eq!(fmpower(&["rerun", "--manifest", manifest.to_str().unwrap(), "--out", b.path().to_str().unwrap()]), EXIT_OK);
    for f in ["models/model.lp", "solutions/stage1.sol", "solutions/stage2.sol", "eval/summary.csv", "scenario/links.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let text = fs::read_to_string(&manifest).unwrap();
    for key in ["command = pipeline", "seed = 3", "model = lp", "bigm = fixed:1e40", "gap = 1", "jobs = 1", "node-limit = 200000"] {
        assert!(text.contains(key), "{key}");
    }
}
