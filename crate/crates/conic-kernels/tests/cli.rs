//! End-to-end tests that spawn the CLI binary and inspect exit codes and
//! output files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_conic-kernels")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .current_dir(dir)
        .env_remove("CONIC_KERNELS_SEED")
        .output()
        .expect("failed to spawn the CLI binary")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("CLI terminated by signal")
}

fn write_libsvm_file(path: &Path, rows: &[(i32, Vec<f64>)]) {
    let mut text = String::new();
    for (label, features) in rows {
        text.push_str(&label.to_string());
        for (i, v) in features.iter().enumerate() {
            text.push_str(&format!(" {}:{}", i + 1, v));
        }
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

/// Two well-separated 3-dimensional blobs, 20 samples per class.
fn blobs() -> Vec<(i32, Vec<f64>)> {
    let mut rows = Vec::new();
    for i in 0..20 {
        let jitter = 0.01 * i as f64;
        rows.push((1, vec![2.0 + jitter, 2.0 - jitter, 0.5 + jitter]));
        rows.push((-1, vec![-2.0 - jitter, -2.0 + jitter, -0.5 - jitter]));
    }
    rows
}

/// Positives on a small circle around the origin, negatives on a large one.
fn rings() -> Vec<(i32, Vec<f64>)> {
    let mut rows = Vec::new();
    for i in 0..16 {
        let angle = std::f64::consts::TAU * i as f64 / 16.0;
        rows.push((1, vec![0.4 * angle.cos(), 0.4 * angle.sin()]));
        rows.push((-1, vec![2.0 * angle.cos(), 2.0 * angle.sin()]));
    }
    rows
}

/// Positives on the innermost and outermost circles, negatives in between:
/// neither distance ordering around the origin can hold.
fn interleaved_rings() -> Vec<(i32, Vec<f64>)> {
    let mut rows = Vec::new();
    for i in 0..12 {
        let angle = std::f64::consts::TAU * i as f64 / 12.0;
        rows.push((1, vec![0.4 * angle.cos(), 0.4 * angle.sin()]));
        rows.push((-1, vec![1.2 * angle.cos(), 1.2 * angle.sin()]));
        rows.push((1, vec![2.5 * angle.cos(), 2.5 * angle.sin()]));
    }
    rows
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .collect()
}

struct TempDir {
    path: PathBuf,
}

impl TempDir {
    fn new(tag: &str) -> Self {
        let path = std::env::temp_dir().join(format!(
            "conic-kernels-cli-{tag}-{}",
            std::process::id()
        ));
        std::fs::create_dir_all(&path).unwrap();
        TempDir { path }
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.path);
    }
}

// ---------------------------------------------------------------------------

#[test]
fn bench_writes_csv_and_markdown_reports() {
    let dir = TempDir::new("bench");
    let train = dir.path.join("blobs.libsvm");
    write_libsvm_file(&train, &blobs());

    let output = run_in(
        &dir.path,
        &[
            "bench",
            "--data",
            "blobs.libsvm",
            "--methods",
            "lin,phi_2_1",
            "--folds",
            "3",
            "--grid-C",
            "1",
            "--out",
            "report.csv",
            "--markdown",
            "report.md",
        ],
    );
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));

    let report = std::fs::read_to_string(dir.path.join("report.csv")).unwrap();
    assert!(report.contains("# seed: 42"), "report:\n{report}");
    let lines = data_lines(&report);
    assert_eq!(
        lines[0],
        "dataset,method,p,accuracy,train_seconds,gridsearch_seconds,chosen_C,chosen_gamma,chosen_q,seed"
    );
    assert_eq!(lines.len(), 3, "header plus one row per method:\n{report}");
    assert!(lines[1].starts_with("blobs,lin,"));
    assert!(lines[2].starts_with("blobs,phi_2_1,2,"));
    for line in &lines[1..] {
        let accuracy: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(accuracy, 100.0, "blobs are trivially separable: {line}");
    }

    let markdown = std::fs::read_to_string(dir.path.join("report.md")).unwrap();
    assert!(markdown.contains("| dataset |"), "markdown:\n{markdown}");
    assert!(markdown.contains("blobs"));
}

#[test]
fn bench_scores_a_held_out_test_file() {
    let dir = TempDir::new("bench-test");
    let train = dir.path.join("train.libsvm");
    write_libsvm_file(&train, &blobs());
    let test = dir.path.join("test.libsvm");
    write_libsvm_file(
        &test,
        &[(1, vec![2.2, 1.8, 0.6]), (-1, vec![-2.2, -1.8, -0.6])],
    );

    let output = run_in(
        &dir.path,
        &[
            "bench",
            "--data",
            "train.libsvm",
            "--test",
            "test.libsvm",
            "--methods",
            "lin",
            "--grid-C",
            "1",
            "--out",
            "report.csv",
        ],
    );
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let report = std::fs::read_to_string(dir.path.join("report.csv")).unwrap();
    let lines = data_lines(&report);
    assert_eq!(lines.len(), 2);
    let accuracy: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert_eq!(accuracy, 100.0);
}

#[test]
fn bench_rejects_an_unknown_method_token() {
    let dir = TempDir::new("bench-bad-method");
    let train = dir.path.join("blobs.libsvm");
    write_libsvm_file(&train, &blobs());

    let output = run_in(
        &dir.path,
        &[
            "bench",
            "--data",
            "blobs.libsvm",
            "--methods",
            "frobnicate",
            "--out",
            "report.csv",
        ],
    );
    assert_eq!(code(&output), 2);
    assert!(
        stderr(&output).contains("frobnicate"),
        "stderr: {}",
        stderr(&output)
    );
    assert!(!dir.path.join("report.csv").exists());
}

#[test]
fn bench_seed_comes_from_the_environment_when_not_given() {
    let dir = TempDir::new("bench-seed-env");
    let train = dir.path.join("blobs.libsvm");
    write_libsvm_file(&train, &blobs());

    let output = Command::new(binary())
        .args([
            "bench",
            "--data",
            "blobs.libsvm",
            "--methods",
            "lin",
            "--folds",
            "3",
            "--grid-C",
            "1",
            "--out",
            "report.csv",
        ])
        .current_dir(&dir.path)
        .env("CONIC_KERNELS_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let report = std::fs::read_to_string(dir.path.join("report.csv")).unwrap();
    assert!(report.contains("# seed: 7"), "report:\n{report}");
    let lines = data_lines(&report);
    assert!(lines[1].ends_with(",7"), "seed column: {}", lines[1]);
}

#[test]
fn separability_certifies_ring_data_and_exits_zero() {
    let dir = TempDir::new("sep-rings");
    let data = dir.path.join("rings.libsvm");
    write_libsvm_file(&data, &rings());

    let output = run_in(
        &dir.path,
        &["separability", "--data", "rings.libsvm", "--map", "1"],
    );
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("separable: true"), "stdout:\n{text}");
    assert!(text.contains("witness-weights:"), "stdout:\n{text}");
}

#[test]
fn separability_rejects_interleaved_rings_with_exit_one() {
    let dir = TempDir::new("sep-interleaved");
    let data = dir.path.join("interleaved.libsvm");
    write_libsvm_file(&data, &interleaved_rings());

    let output = run_in(
        &dir.path,
        &["separability", "--data", "interleaved.libsvm", "--map", "1"],
    );
    assert_eq!(code(&output), 1, "stdout: {}", stdout(&output));
    assert!(stdout(&output).contains("separable: false"));
}

#[test]
fn separability_treats_a_wrong_dimension_anchor_file_as_a_data_error() {
    let dir = TempDir::new("sep-bad-anchor");
    let data = dir.path.join("rings.libsvm");
    write_libsvm_file(&data, &rings());
    std::fs::write(dir.path.join("anchors.csv"), "0.0,0.0,0.0,0.0\n").unwrap();

    let output = run_in(
        &dir.path,
        &[
            "separability",
            "--data",
            "rings.libsvm",
            "--map",
            "1",
            "--anchors",
            "file:anchors.csv",
        ],
    );
    assert_eq!(code(&output), 2, "stdout: {}", stdout(&output));
    assert!(!stderr(&output).is_empty());
}

#[test]
fn map_identity_round_trips_the_dataset() {
    let dir = TempDir::new("map-identity");
    let data = dir.path.join("blobs.libsvm");
    let rows = blobs();
    write_libsvm_file(&data, &rows);

    let output = run_in(
        &dir.path,
        &[
            "map",
            "--data",
            "blobs.libsvm",
            "--map",
            "identity",
            "--out",
            "mapped.libsvm",
        ],
    );
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));

    let text = std::fs::read_to_string(dir.path.join("mapped.libsvm")).unwrap();
    assert!(text.starts_with('#'), "config header expected:\n{text}");
    let lines = data_lines(&text);
    assert_eq!(lines.len(), rows.len());
    for (line, (label, features)) in lines.iter().zip(&rows) {
        let mut fields = line.split_whitespace();
        assert_eq!(fields.next().unwrap(), label.to_string());
        for (i, expected) in features.iter().enumerate() {
            let field = fields.next().unwrap();
            let (index, value) = field.split_once(':').unwrap();
            assert_eq!(index, (i + 1).to_string());
            assert!((value.parse::<f64>().unwrap() - expected).abs() < 1e-12);
        }
        assert!(fields.next().is_none());
    }
}

#[test]
fn map_single_distance_appends_the_anchor_distance_column() {
    let dir = TempDir::new("map-single");
    let data = dir.path.join("blobs.libsvm");
    let rows = blobs();
    write_libsvm_file(&data, &rows);
    std::fs::write(dir.path.join("anchors.csv"), "1.0,1.0,1.0\n").unwrap();

    let output = run_in(
        &dir.path,
        &[
            "map",
            "--data",
            "blobs.libsvm",
            "--map",
            "1",
            "--p",
            "1",
            "--anchors",
            "file:anchors.csv",
            "--out",
            "mapped.libsvm",
        ],
    );
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));

    let text = std::fs::read_to_string(dir.path.join("mapped.libsvm")).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines.len(), rows.len());
    for (line, (_, features)) in lines.iter().zip(&rows) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(fields.len(), 1 + features.len() + 1, "line: {line}");
        let appended: f64 = fields.last().unwrap().split_once(':').unwrap().1.parse().unwrap();
        let expected: f64 = features.iter().map(|v| (v - 1.0).abs()).sum();
        assert!(
            (appended - expected).abs() < 1e-10,
            "appended {appended} vs distance {expected}"
        );
    }
}

#[test]
fn approx_compare_sweeps_dimensions_and_skips_oversized_landmark_counts() {
    let dir = TempDir::new("approx");
    let data = dir.path.join("blobs.libsvm");
    write_libsvm_file(&data, &blobs());

    let output = run_in(
        &dir.path,
        &[
            "approx-compare",
            "--data",
            "blobs.libsvm",
            "--dims",
            "4,64",
            "--out",
            "sweep.csv",
        ],
    );
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));
    // 40 samples at holdout 0.7 leave 28 training rows, so nystrom:64 is
    // skipped with a warning while rff:64 still runs.
    assert!(
        stderr(&output).contains("skipping nystrom:64"),
        "stderr: {}",
        stderr(&output)
    );

    let text = std::fs::read_to_string(dir.path.join("sweep.csv")).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "method,D,accuracy,train_seconds");
    let methods: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        methods,
        vec!["lin", "phi_2_1", "phi_1_d", "rbf", "rff:4", "rff:64", "nystrom:4"]
    );
}

#[test]
fn approx_compare_full_rank_landmarks_match_the_exact_kernel() {
    let dir = TempDir::new("approx-exact");
    let data = dir.path.join("blobs.libsvm");
    write_libsvm_file(&data, &blobs());

    // 28 training rows at holdout 0.7; 28 landmarks reconstruct the exact
    // Gram, so the nystrom row must match the rbf row on separated blobs.
    let output = run_in(
        &dir.path,
        &[
            "approx-compare",
            "--data",
            "blobs.libsvm",
            "--dims",
            "28",
            "--gamma",
            "0.5",
            "--out",
            "sweep.csv",
        ],
    );
    assert_eq!(code(&output), 0, "stderr: {}", stderr(&output));

    let text = std::fs::read_to_string(dir.path.join("sweep.csv")).unwrap();
    let mut rbf = None;
    let mut nystrom = None;
    for line in data_lines(&text) {
        let fields: Vec<&str> = line.split(',').collect();
        match fields[0] {
            "rbf" => rbf = Some(fields[2].parse::<f64>().unwrap()),
            "nystrom:28" => nystrom = Some(fields[2].parse::<f64>().unwrap()),
            _ => {}
        }
    }
    assert_eq!(rbf, Some(100.0), "sweep:\n{text}");
    assert_eq!(nystrom, Some(100.0), "sweep:\n{text}");
}

#[test]
fn help_exits_zero() {
    let dir = TempDir::new("help");
    let output = run_in(&dir.path, &["--help"]);
    assert_eq!(code(&output), 0);
    assert!(stdout(&output).contains("bench"));
}
