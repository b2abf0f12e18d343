//! End-to-end runs of the `demandrec` binary.

use std::path::Path;
use std::process::{Command, Output};

use demandrec::data::{ingest_categories, ingest_purchases, IngestOptions};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_demandrec"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn report_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing from {text}"))
        .parse()
        .unwrap()
}

const SMALL: &[&str] = &[
    "--set",
    "synth_m=80",
    "--set",
    "synth_n=90",
    "--set",
    "synth_l=70",
    "--set",
    "synth_r=3",
];

#[test]
fn default_synth_files_ingest_back() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth"]);
    let ing =
        ingest_purchases(&dir.path().join("purchases.csv"), IngestOptions::default()).unwrap();
    ingest_categories(&dir.path().join("categories.csv"), &ing.items).unwrap();
    assert!(dir.path().join("synth.config").exists());
}

#[test]
fn ground_truth_lists_ten_step_durations() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "synth",
            "--set",
            "synth_m=1000",
            "--set",
            "synth_n=1000",
            "--set",
            "synth_r=10",
            "--set",
            "synth_l=40",
        ],
    );
    let text = std::fs::read_to_string(dir.path().join("ground_truth.txt")).unwrap();
    assert!(
        text.contains("d_true = 10 20 30 40 50 60 70 80 90 100"),
        "{text}"
    );
}

#[test]
fn same_seed_same_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    ok(a.path(), &["synth", "--seed", "5"]);
    ok(b.path(), &["synth", "--seed", "5"]);
    ok(c.path(), &["synth", "--seed", "6"]);
    let read = |d: &Path| std::fs::read(d.join("purchases.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_ne!(read(a.path()), read(c.path()));
}

#[test]
fn train_recovers_noiseless_durations() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &[&["synth"], SMALL].concat());
    let out = ok(dir.path(), &["train", "--set", "outer_iters=5"]);
    assert!(report_value(&out, "duration_error") < 0.05, "{out}");
    for f in [
        "model.bin",
        "train.log",
        "test.log",
        "categories.dense",
        "users.ids",
        "items.ids",
        "fit_report.txt",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn single_outer_iteration() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &[&["synth"], SMALL].concat());
    ok(dir.path(), &["train", "--set", "outer_iters=1"]);
    let report = std::fs::read_to_string(dir.path().join("fit_report.txt")).unwrap();
    let rows: Vec<&str> = report
        .lines()
        .skip(1)
        .take_while(|l| !l.contains('='))
        .collect();
    assert_eq!(rows.len(), 2, "{report}");
}

fn final_objective(dir: &Path) -> f64 {
    let report = std::fs::read_to_string(dir.join("fit_report.txt")).unwrap();
    let last = report
        .lines()
        .skip(1)
        .take_while(|l| !l.contains('='))
        .last()
        .unwrap()
        .to_string();
    last.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn warm_start_does_not_raise_objective() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &[&["synth"], SMALL].concat());
    ok(dir.path(), &["train", "--set", "outer_iters=2"]);
    let before = final_objective(dir.path());
    ok(
        dir.path(),
        &[
            "train",
            "--set",
            "outer_iters=2",
            "--set",
            "warm_start=true",
        ],
    );
    let after = final_objective(dir.path());
    assert!(after <= before * (1.0 + 1e-8), "{before} -> {after}");
}

#[test]
fn evaluate_is_deterministic_and_durations_never_help_time_metric() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &[&["synth"], SMALL].concat());
    ok(dir.path(), &["train", "--set", "outer_iters=3"]);
    let a = ok(dir.path(), &["evaluate", "--set", "item_sample_size=20"]);
    let b = ok(dir.path(), &["evaluate", "--set", "item_sample_size=20"]);
    assert_eq!(a, b);
    for key in ["category_rank_pct", "time_error_pct", "item_rank_pct"] {
        let v = report_value(&a, key);
        assert!((0.0..=100.0).contains(&v), "{key} = {v}");
    }
    // Positive durations only remove predicted slots, so the time error with
    // the learned durations can never be below the zero-duration error.
    let zero = ok(
        dir.path(),
        &[
            "evaluate",
            "--set",
            "item_sample_size=20",
            "--set",
            "zero_durations=true",
        ],
    );
    assert!(report_value(&a, "time_error_pct") >= report_value(&zero, "time_error_pct"));
}

#[test]
fn recommend_lists_requested_items() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &[&["synth"], SMALL].concat());
    ok(dir.path(), &["train", "--set", "outer_iters=2"]);
    let user = std::fs::read_to_string(dir.path().join("users.ids"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    let out = ok(
        dir.path(),
        &[
            "recommend",
            "--set",
            &format!("user={user}"),
            "--set",
            "top_n=4",
        ],
    );
    assert_eq!(out.lines().count(), 5, "{out}");
    let scores: Vec<f64> = out
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn rank_demo_writes_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["rank-demo", "--seed", "3"]);
    assert!(
        out.contains("form utility 10, purchase intention 50"),
        "{out}"
    );
    let csv = std::fs::read_to_string(dir.path().join("spectra.csv")).unwrap();
    assert_eq!(csv.lines().count(), 51);
}

#[test]
fn errors_carry_a_code_prefix() {
    let dir = tempfile::tempdir().unwrap();
    for (args, code) in [
        (vec!["train", "--set", "bogus=1"], "E_CONFIG"),
        (vec!["train"], "E_IO"),
        (vec!["evaluate"], "E_IO"),
        (vec!["train", "--set", "eta=2"], "E_CONFIG"),
    ] {
        let out = run(dir.path(), &args);
        assert!(!out.status.success());
        let err = String::from_utf8(out.stderr).unwrap();
        let line = err.lines().last().unwrap();
        assert!(
            line.starts_with(&format!("error[{code}]: ")),
            "{args:?}: {err}"
        );
    }
}

#[test]
fn help_lists_every_key_with_default() {
    let out = Command::new(env!("CARGO_BIN_EXE_demandrec"))
        .arg("--help")
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for key in [
        "eta",
        "lambda",
        "tau",
        "gamma",
        "max_rank",
        "tol",
        "seed",
        "test_fraction",
        "synth_obs_prob",
        "demo_rank",
        "warm_start",
    ] {
        let line = text
            .lines()
            .find(|l| l.trim_start().starts_with(&format!("{key} ")))
            .unwrap_or_else(|| panic!("{key}"));
        assert!(line.contains("[default: "), "{line}");
    }
}
