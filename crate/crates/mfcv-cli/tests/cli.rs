//! End-to-end checks of the `mfcv` binary: flag handling, exit codes, file
//! artifacts, and the stable stdout summary tokens.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mfcv(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfcv"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().expect("temp dir")
}

/// generate + estimate on a short clean recording, returning the run path.
fn generate_and_estimate(dir: &Path, profile: &str, noise: &str) -> std::path::PathBuf {
    let out = mfcv(
        &[
            "generate",
            "--duration",
            "2",
            "--delay-profile",
            profile,
            "--noise",
            noise,
            "--seed",
            "7",
            "--out",
            "rec.csv",
        ],
        dir,
    );
    assert!(out.status.success(), "generate failed: {}", stderr(&out));
    let out = mfcv(
        &["estimate", "--input", "rec.csv", "--out", "run.json"],
        dir,
    );
    assert!(out.status.success(), "estimate failed: {}", stderr(&out));
    dir.join("run.json")
}

#[test]
fn generate_row_count_matches_duration_times_rate() {
    let dir = tempdir();
    let out = mfcv(
        &[
            "generate",
            "--duration",
            "34",
            "--rate",
            "2200",
            "--delay-profile",
            "ramp:10:13",
            "--noise",
            "0.02",
            "--seed",
            "7",
            "--out",
            "rec.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("rec.csv")).unwrap();
    // Header plus 34 x 2200 sample rows.
    assert_eq!(text.lines().count(), 1 + 74_800);
    assert!(text.starts_with("t,chA,chB\n"));
}

#[test]
fn generate_is_deterministic_per_seed() {
    let dir = tempdir();
    for name in ["a.csv", "b.csv"] {
        let out = mfcv(
            &[
                "generate",
                "--duration",
                "1",
                "--delay-profile",
                "constant:11",
                "--noise",
                "0.05",
                "--seed",
                "42",
                "--out",
                name,
            ],
            dir.path(),
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn truncated_ramp_spec_is_a_usage_error() {
    let dir = tempdir();
    let out = mfcv(
        &[
            "generate",
            "--delay-profile",
            "ramp:10",
            "--out",
            "rec.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ramp"), "{}", stderr(&out));
    assert!(!dir.path().join("rec.csv").exists());
}

#[test]
fn estimate_summary_reports_clean_delay_exactly() {
    let dir = tempdir();
    generate_and_estimate(dir.path(), "constant:11", "0");
    let out = mfcv(
        &["estimate", "--input", "rec.csv", "--out", "run.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let line = stdout(&out);
    assert!(line.contains("mean=5.000"), "summary: {line}");
    assert!(line.contains("sd=0.000"), "summary: {line}");
    assert!(line.contains("slope="), "summary: {line}");
}

#[test]
fn estimate_rejects_zero_window_as_usage_error() {
    let dir = tempdir();
    let out = mfcv(
        &[
            "estimate",
            "--input",
            "rec.csv",
            "--window",
            "0",
            "--out",
            "run.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_fails_and_names_the_path() {
    let dir = tempdir();
    let out = mfcv(
        &["estimate", "--input", "absent.csv", "--out", "run.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("absent.csv"), "{}", stderr(&out));
}

#[test]
fn report_writes_document_and_plot_data() {
    let dir = tempdir();
    generate_and_estimate(dir.path(), "constant:11", "0");
    let out = mfcv(
        &[
            "report",
            "--series",
            "run.json",
            "--out",
            "report.txt",
            "--plot",
            "plot.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("[configuration]"));
    assert!(report.contains("[status counts]"));
    assert!(report.contains("[literature comparison]"));
    let plot = fs::read_to_string(dir.path().join("plot.csv")).unwrap();
    assert!(plot.starts_with("second,mean_ms,sd_ms,n_valid\n"));
    assert_eq!(plot.lines().count(), 1 + 2);
}

#[test]
fn compare_prints_one_verdict_per_literature_row() {
    let dir = tempdir();
    generate_and_estimate(dir.path(), "constant:12", "0");
    let out = mfcv(&["compare", "--series", "run.json"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    // Clean delay 12 gives 55/12 = 4.58 m/s, inside the widest intervals.
    assert!(text.contains("grand_mean=4.583333"), "{text}");
    for label in [
        "Proposed",
        "Koutsos2016",
        "Marco2017",
        "Xu2017",
        "Ye2015",
        "Farina2004",
    ] {
        assert!(text.contains(label), "missing {label}: {text}");
    }
    assert!(text.contains("inside"), "{text}");
    assert!(text.contains("outside"), "{text}");
}

#[test]
fn compare_fails_on_a_series_without_estimates() {
    let dir = tempdir();
    // A quiet recording: every window is excluded as low-amplitude, so the
    // series has no defined means to compare.
    let mut csv = String::from("t,chA,chB\n");
    for k in 0..4400 {
        csv.push_str(&format!("{},0.01,0.01\n", k as f64 / 2200.0));
    }
    fs::write(dir.path().join("rec.csv"), csv).unwrap();
    let out = mfcv(
        &["estimate", "--input", "rec.csv", "--out", "run.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("mean=none"));

    let out = mfcv(&["compare", "--series", "run.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nothing to compare"), "{}", stderr(&out));
}

#[test]
fn malformed_series_file_fails_cleanly() {
    let dir = tempdir();
    fs::write(dir.path().join("run.json"), "{ not json").unwrap();
    let out = mfcv(
        &["report", "--series", "run.json", "--out", "report.txt"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("report.txt").exists());
}
