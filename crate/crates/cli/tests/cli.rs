use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lth_cli::config::{DatasetRef, ExperimentConfig};
use lth_cli::records::{read_all, write_jsonl, RecordLine};
use lth_cli::report::tickets;
use lth_cli::execute_driver;
use lth_core::lth::Mode;
use lth_core::{BuiltinDataset, Family};

fn lth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lth")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = lth(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = s(&out);
    assert_eq!(lth(&["run", "--dataset", "nope", "--model", "mvqc", "--mode", "weak-iterative", "--out", out]).status.code(), Some(2));
    assert_eq!(lth(&["run", "--dataset", "iris", "--mode", "weak-iterative", "--out", out]).status.code(), Some(2));
    assert_eq!(lth(&["run", "--dataset", "iris", "--model", "bvqc", "--mode", "weak-iterative", "--out", out]).status.code(), Some(2));
    assert_eq!(lth(&["run", "--dataset", "iris2", "--model", "snn", "--mode", "weak-oneshot", "--ratios", "0.5,0.2", "--out", out]).status.code(), Some(2));
    assert_eq!(lth(&["run", "--dataset", "iris2", "--model", "snn", "--mode", "strong-ea", "--population", "3", "--out", out]).status.code(), Some(2));
    assert_eq!(lth(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn iterative_run_writes_one_row_per_level_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&["run", "--dataset", "iris2", "--model", "snn", "--mode", "weak-iterative", "--seeds", "0-2", "--epochs", "4", "--rw-threshold", "60", "--out", s(&out)]);
    // 144 prunable: 144, 116, 93, 75, 60 -> stops at 60
    let rows = csv_rows(&out.join("summary.csv"));
    assert_eq!(rows.len(), 3 * 4);
    for seed in 0..3 {
        let counts: Vec<&str> = rows.iter().filter(|r| r[3] == seed.to_string()).map(|r| r[5].as_str()).collect();
        assert_eq!(counts, ["144", "116", "93", "75"]);
        assert!(out.join(format!("records/seed-{seed}.jsonl")).is_file());
    }

    let curve = dir.path().join("curve.csv");
    ok(&["plot-data", "--kind", "weak-curve", s(&out), "--out", s(&curve)]);
    assert_eq!(csv_rows(&curve).len(), 3 * 4 * 4 * 2);

    let table = dir.path().join("tickets.csv");
    ok(&["summarize", s(&out), "--out", s(&table)]);
    let t = csv_rows(&table);
    assert_eq!(t.len(), 1);
    assert_eq!(&t[0][..5], ["iris2", "snn", "weak-iterative", "3", "4"]);

    // the written config reproduces the run byte for byte
    let again = dir.path().join("again");
    ok(&["run", "--config", s(&out.join("config.json")), "--out", s(&again)]);
    assert_eq!(fs::read(out.join("summary.csv")).unwrap(), fs::read(again.join("summary.csv")).unwrap());
    assert_eq!(
        fs::read(out.join("records/seed-1.jsonl")).unwrap(),
        fs::read(again.join("records/seed-1.jsonl")).unwrap()
    );

    // refuses to mix into an existing run
    assert_eq!(lth(&["run", "--config", s(&out.join("config.json")), "--out", s(&out)]).status.code(), Some(2));
}

#[test]
fn single_unpruned_run_summarizes_to_full_percent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&["run", "--dataset", "iris2", "--model", "bvqc", "--mode", "weak-iterative", "--seeds", "4", "--epochs", "3", "--rw-threshold", "1000", "--out", s(&out)]);
    let table = dir.path().join("t.csv");
    ok(&["summarize", s(&out), "--out", s(&table)]);
    let t = csv_rows(&table);
    assert_eq!(t[0][4], "1");
    assert_eq!(t[0][6], "100");
}

#[test]
fn empty_inputs() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lth(&["summarize", s(dir.path())]).status.code(), Some(1));
    let table = dir.path().join("p.csv");
    ok(&["plot-data", "--kind", "ea-trace", s(dir.path()), "--out", s(&table)]);
    assert_eq!(
        fs::read_to_string(&table).unwrap(),
        "dataset,model,seed,generation,best_accuracy,mean_accuracy,remaining_count,remaining_percent\n"
    );
}

#[test]
fn ea_trace_and_mixed_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let ea = dir.path().join("ea");
    ok(&["run", "--dataset", "iris2", "--model", "snn", "--mode", "strong-ea", "--seeds", "0,1", "--generations", "5", "--population", "8", "--out", s(&ea)]);
    let trace = dir.path().join("trace.csv");
    ok(&["plot-data", "--kind", "ea-trace", s(&ea), "--out", s(&trace)]);
    let rows = csv_rows(&trace);
    assert_eq!(rows.len(), 2 * 6);
    assert_eq!(rows[5][3], "5");

    let weak = dir.path().join("weak");
    ok(&["run", "--dataset", "iris2", "--model", "snn", "--mode", "weak-oneshot", "--seeds", "0", "--epochs", "2", "--ratios", "0.5", "--out", s(&weak)]);
    let mixed = lth(&["plot-data", "--kind", "weak-curve", s(&ea), s(&weak)]);
    assert_eq!(mixed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&mixed.stderr).contains("do not match"));
}

#[test]
fn records_round_trip_into_identical_tickets() {
    let mut c = ExperimentConfig::defaults(DatasetRef::Builtin(BuiltinDataset::Iris2), Family::Mvqc, Mode::WeakOneshot);
    c.seeds = vec![0, 1];
    c.train.epochs = 3;
    c.ratios = vec![0.5, 0.75];
    let lines = execute_driver(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_jsonl(&dir.path().join("all.jsonl"), &lines).unwrap();
    let back: Vec<RecordLine> = read_all(&[dir.path().to_path_buf()]).unwrap();
    assert_eq!(back, lines);
    assert_eq!(tickets(&back).unwrap(), tickets(&lines).unwrap());
}
