use std::path::PathBuf;
use std::process::Command;

use clap::Parser;
use prodramsey::cli::{run, Cli};
use serde_json::Value;

fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../schemas")
        .join(format!("{name}.schema.json"));
    let raw: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&raw).expect("schema compiles")
}

fn run_args(args: &[&str]) -> String {
    let mut argv = vec!["prodramsey", "--no-cache"];
    argv.extend_from_slice(args);
    let cli = Cli::try_parse_from(argv).expect("arguments parse");
    run(&cli).expect("command succeeds").body
}

fn assert_valid(name: &str, body: &str) -> Value {
    let v: Value = serde_json::from_str(body).expect("output is JSON");
    let s = schema(name);
    if let Err(errors) = s.validate(&v) {
        let msgs: Vec<String> = errors
            .map(|e| format!("{e} at {}", e.instance_path))
            .collect();
        panic!("{name} output violates schema: {msgs:?}\n{body}");
    }
    v
}

#[test]
fn every_subcommand_matches_its_schema() {
    let cases: &[(&str, &[&str])] = &[
        ("matrix", &["matrix", "--r", "3"]),
        ("quotient", &["quotient", "--r", "5"]),
        ("spectrum", &["spectrum", "--r", "5"]),
        ("spectrum", &["spectrum", "--r", "2"]),
        (
            "spectrum",
            &["spectrum", "--r", "6", "--crosscheck", "1e-6"],
        ),
        ("psd", &["psd", "--r", "5"]),
        ("bound", &["bound", "--r", "3", "--s", "4"]),
        (
            "bound",
            &["bound", "--r", "2", "--s", "2", "--method", "exhaustive"],
        ),
        ("guaranteed", &["guaranteed", "--dims", "3,3"]),
        (
            "guaranteed",
            &["guaranteed", "--dims", "3,7", "--symmetry", "off"],
        ),
        ("scan", &["scan", "--d", "2", "--max", "5,5"]),
        ("scan", &["scan", "--d", "2", "--max", "4,4", "--detail"]),
        ("identities", &["identities", "--max-n", "8"]),
    ];
    for (name, args) in cases {
        assert_valid(name, &run_args(args));
    }
}

#[test]
fn bound_reports_unbounded_for_zero_t() {
    let v = assert_valid("bound", &run_args(&["bound", "--r", "2", "--s", "2"]));
    assert_eq!(v["t"], 0);
    assert_eq!(v["third"], "unbounded");
}

#[test]
fn guaranteed_3x7_has_no_witness() {
    let v = assert_valid("guaranteed", &run_args(&["guaranteed", "--dims", "3,7"]));
    assert_eq!(v["guaranteed"], true);
    assert!(v.get("witness").is_none());
}

#[test]
fn csv_and_pretty_formats_render() {
    let csv = run_args(&["--format", "csv", "matrix", "--r", "2"]);
    assert_eq!(csv.lines().next(), Some("S,0,1,2,3"));
    assert_eq!(csv.lines().count(), 5);
    let pretty = run_args(&["--format", "pretty", "spectrum", "--r", "4"]);
    assert!(pretty.contains("trace 48 (expected 48)"));
    let table = run_args(&["--format", "csv", "identities", "--max-n", "4"]);
    assert!(table.starts_with("identity,checked,failures\n"));
}

#[test]
fn spectrum_cache_hit_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let go = || {
        let cli =
            Cli::try_parse_from(["prodramsey", "--cache-dir", d, "spectrum", "--r", "7"]).unwrap();
        run(&cli).unwrap().body
    };
    let cold = go();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    let warm = go();
    assert_eq!(cold, warm);
}

#[test]
fn basis_csv_has_one_row_per_vector() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("basis.csv");
    run_args(&[
        "spectrum",
        "--r",
        "4",
        "--basis-csv",
        path.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 1 + 16);
    assert!(text.lines().all(|l| l.split(',').count() == 2 + 16));
}

fn exit_code(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_prodramsey"))
        .arg("--no-cache")
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(exit_code(&["identities", "--max-n", "3"]), 0);
    assert_eq!(exit_code(&["matrix", "--r", "20"]), 3);
    assert_eq!(exit_code(&["--dense-cap", "15", "matrix", "--r", "2"]), 2);
    assert_eq!(exit_code(&["--threads", "0", "matrix", "--r", "2"]), 2);
    assert_eq!(exit_code(&["bound", "--r", "1", "--s", "2"]), 2);
    assert_eq!(
        exit_code(&[
            "bound",
            "--r",
            "4",
            "--s",
            "9",
            "--method",
            "exhaustive",
            "--budget",
            "10"
        ]),
        3
    );
    assert_eq!(exit_code(&["nonsense"]), 2);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    let status = Command::new(env!("CARGO_BIN_EXE_prodramsey"))
        .args(["quotient", "--r", "3", "--out", path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert_valid("quotient", &std::fs::read_to_string(path).unwrap());
}
