//! End-to-end checks of the command surface and the exit-code contract:
//! 0 ok, 1 domain failure, 2 parse/usage, 3 non-convergence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

static DIR_SEQ: AtomicUsize = AtomicUsize::new(0);

fn fixture(name: &str) -> String {
    format!(
        "{}/../core/fixtures/{name}.json",
        env!("CARGO_MANIFEST_DIR")
    )
}

fn scratch_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "mwg-cli-test-{}-{}",
        std::process::id(),
        DIR_SEQ.fetch_add(1, Ordering::SeqCst)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn mwg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mwg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn write(path: &Path, contents: &str) {
    std::fs::write(path, contents).unwrap();
}

#[test]
fn validate_clean_fixture_exits_zero() {
    for name in ["DOUBLE", "CANTOR", "TWOV"] {
        let out = mwg(&["validate", &fixture(name)]);
        assert_eq!(exit_code(&out), 0, "{name}: {out:?}");
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert!(stdout.contains("certified contraction ratio"));
    }
}

#[test]
fn validate_sink_exits_one_with_findings() {
    let dir = scratch_dir();
    let sink = dir.join("SINK.json");
    write(
        &sink,
        r#"{
            "vertices": ["v", "w"],
            "edges": [
                {"id": "0", "s": "v", "r": "v", "map": {"A": [[0.5]], "b": [0.0]}},
                {"id": "1", "s": "v", "r": "w", "map": {"A": [[0.5]], "b": [0.0]}}
            ],
            "spaces": {"v": {"box": [[0.0, 1.0]]}, "w": {"box": [[0.0, 1.0]]}}
        }"#,
    );
    let out = mwg(&["validate", sink.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 1);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("sink: w"), "{stderr}");
}

#[test]
fn validate_malformed_json_exits_two() {
    let dir = scratch_dir();
    let bad = dir.join("BAD.json");
    write(&bad, "{ not json");
    let out = mwg(&["validate", bad.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    let missing = dir.join("NOPE.json");
    let out = mwg(&["validate", missing.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn attractor_writes_clouds_and_summary() {
    let dir = scratch_dir();
    let out_dir = dir.join("cantor-out");
    let out = mwg(&[
        "attractor",
        &fixture("CANTOR"),
        "--tol",
        "1e-4",
        "--eps",
        "1e-4",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let summary = std::fs::read_to_string(out_dir.join("summary.json")).unwrap();
    assert!(summary.contains("\"residual\""));
    assert!(summary.contains("\"iterations\""));
    assert!(summary.contains("\"certified_bound\""));
    let residual: f64 = summary
        .lines()
        .find(|l| l.contains("residual") && !l.contains("certified"))
        .and_then(|l| l.split(':').nth(1))
        .map(|v| v.trim().trim_end_matches(',').parse().unwrap())
        .unwrap();
    assert!(residual <= 1e-4);

    let cloud = std::fs::read_to_string(out_dir.join("v.csv")).unwrap();
    assert!(cloud.starts_with("x0\n"));
    // Every point lies in one of the two outer thirds.
    for line in cloud.lines().skip(1) {
        let x: f64 = line.parse().unwrap();
        assert!(x <= 1.0 / 3.0 + 1e-3 || x >= 2.0 / 3.0 - 1e-3, "{x}");
    }
}

#[test]
fn attractor_json_format() {
    let dir = scratch_dir();
    let out_dir = dir.join("json-out");
    let out = mwg(&[
        "attractor",
        &fixture("DOUBLE"),
        "--tol",
        "1e-2",
        "--eps",
        "1e-2",
        "--out",
        out_dir.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let cloud = std::fs::read_to_string(out_dir.join("v.json")).unwrap();
    let points: Vec<Vec<f64>> = serde_json::from_str(cloud.trim()).unwrap();
    assert!(!points.is_empty());
    assert!(points.iter().all(|p| (0.0..=1.0).contains(&p[0])));
}

#[test]
fn attractor_non_convergence_exits_three() {
    let dir = scratch_dir();
    let out = mwg(&[
        "attractor",
        &fixture("DOUBLE"),
        "--tol",
        "1e-9",
        "--max-iter",
        "1",
        "--out",
        dir.join("x").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3, "{out:?}");
}

#[test]
fn code_prints_binary_point() {
    let mut path_arg = String::from("1");
    for _ in 0..19 {
        path_arg.push_str(",0");
    }
    let out = mwg(&["code", &fixture("DOUBLE"), "--path", &path_arg]);
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        stdout,
        "point: 5.0000000000000000e-1\nbound: 9.5367431640625000e-7\n"
    );
}

#[test]
fn code_cantor_fixed_point() {
    let out = mwg(&["code", &fixture("CANTOR"), "--path", "0,0,0,0,0,0"]);
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.starts_with("point: 0.0000000000000000e0\n"),
        "{stdout}"
    );
}

#[test]
fn code_rejects_non_composable_path() {
    let out = mwg(&["code", &fixture("TWOV"), "--path", "a,a"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn ia_converge_table_respects_bounds() {
    let out = mwg(&[
        "ia-converge",
        &fixture("DOUBLE"),
        "--fn",
        "x0",
        "--kmax",
        "8",
    ]);
    assert_eq!(exit_code(&out), 0, "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("k,gap,bound,hom_defect"));
    let mut rows = 0;
    for line in lines {
        let cells: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|c| c.parse().unwrap())
            .collect();
        assert!(cells[0] <= cells[1], "gap above bound in `{line}`");
        rows += 1;
    }
    assert_eq!(rows, 7);
}

#[test]
fn ia_converge_constant_function_has_zero_gaps() {
    let out = mwg(&[
        "ia-converge",
        &fixture("CANTOR"),
        "--fn",
        "0.5",
        "--kmax",
        "4",
    ]);
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    for line in stdout.lines().skip(1) {
        let gap: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(gap, 0.0);
    }
}

#[test]
fn ia_converge_kmax_zero_is_usage_error() {
    let out = mwg(&[
        "ia-converge",
        &fixture("DOUBLE"),
        "--fn",
        "x0",
        "--kmax",
        "0",
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn ck_check_fixtures_pass() {
    for name in ["DOUBLE", "TWOV"] {
        let out = mwg(&["ck-check", &fixture(name)]);
        assert_eq!(exit_code(&out), 0);
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert!(stdout.contains("ck identities: ok"));
        assert!(stdout.contains("condition (L): ok"));
    }
}

#[test]
fn ck_check_single_loop_notes_condition_l() {
    let dir = scratch_dir();
    let loop_file = dir.join("LOOP.json");
    write(
        &loop_file,
        r#"{
            "vertices": ["v"],
            "edges": [{"id": "0", "s": "v", "r": "v", "map": {"A": [[0.5]], "b": [0.0]}}],
            "spaces": {"v": {"box": [[0.0, 1.0]]}}
        }"#,
    );
    let out = mwg(&["ck-check", loop_file.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0, "identities still pass");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("ck identities: ok"));
    assert!(stdout.contains("condition (L): fails"), "{stdout}");
}

#[test]
fn w1_measure_files() {
    let dir = scratch_dir();
    let d0 = dir.join("d0.json");
    let d1 = dir.join("d1.json");
    let mix = dir.join("mix.json");
    let half = dir.join("half.json");
    write(&d0, r#"{"support": [[0.0]], "weights": [1.0]}"#);
    write(&d1, r#"{"support": [[1.0]], "weights": [1.0]}"#);
    write(
        &mix,
        r#"{"support": [[0.0], [1.0]], "weights": [0.5, 0.5]}"#,
    );
    write(&half, r#"{"support": [[0.5]], "weights": [1.0]}"#);

    let out = mwg(&["w1", d0.to_str().unwrap(), d1.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "1.0000000000000000e0\n"
    );

    let out = mwg(&["w1", d0.to_str().unwrap(), d0.to_str().unwrap()]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "0.0000000000000000e0\n"
    );

    let out = mwg(&["w1", mix.to_str().unwrap(), half.to_str().unwrap()]);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "5.0000000000000000e-1\n"
    );
}

#[test]
fn chaos_stays_in_box() {
    let out = mwg(&[
        "chaos",
        &fixture("DOUBLE"),
        "--vertex",
        "v",
        "--n",
        "500",
        "--seed",
        "11",
    ]);
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    for line in stdout.lines().skip(1) {
        let x: f64 = line.parse().unwrap();
        assert!((-1e-12..=1.0 + 1e-12).contains(&x));
    }
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let out = mwg(&["frobnicate"]);
    assert_eq!(exit_code(&out), 2);
}
