use std::path::Path;
use std::process::{Command, Output};

use hla_core::eval::{LatencyReport, ScenarioReport};
use hla_core::session::{load_replay, write_replay, ReplayRecord};

fn hla(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hla")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn utility_dump_matches_the_golden_files() {
    assert_eq!(stdout(&hla(&["utility", "--map", "quick"])), golden("utility_quick.txt"));
    assert_eq!(
        stdout(&hla(&["utility", "--map", "ring", "--seed", "3"])),
        golden("utility_ring_seed3.txt")
    );
}

#[test]
fn utility_dump_lists_the_whole_catalog() {
    let out = stdout(&hla(&["utility"]));
    assert_eq!(out.lines().count(), 3 + 21);
    assert!(out.contains("Chop Onion                 yes        0.5000"));
}

#[test]
fn latency_bench_writes_records_and_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().to_str().unwrap();
    let out = stdout(&hla(&[
        "bench-latency", "--agent", "HLA", "--agent", "NEA", "--delay-ms", "500", "--results", results, "--jobs", "2",
    ]));
    let rows: Vec<LatencyReport> = read_rows(&dir.path().join("latency/records.jsonl"));
    assert_eq!(rows.len(), 2);
    assert!((rows[1].t_a_ms.mean - 500.0).abs() < 1e-6, "NEA acts once per call");
    assert_eq!(std::fs::read_to_string(dir.path().join("latency/table.txt")).unwrap(), out);
}

#[test]
fn scenario_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().to_str().unwrap();
    let args = ["scenario", "--agent", "FMOA", "--kind", "no-command", "--repeats", "2", "--results", results];
    let first = stdout(&hla(&args));
    assert_eq!(stdout(&hla(&args)), first);
    let rows: Vec<ScenarioReport> = read_rows(&dir.path().join("scenario/records.jsonl"));
    assert_eq!(rows[0].scores.len(), 2);
    assert_eq!(rows[0].scores[0], rows[0].scores[1]);
}

#[test]
fn played_games_replay_and_tampering_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().to_str().unwrap();
    stdout(&hla(&["play", "--agent", "SMOA", "--seconds", "20", "--say", "1:Chop 2 onions", "--results", results]));
    let log = dir.path().join("games/SMOA-quick-0.jsonl");
    let check = stdout(&hla(&["replay", log.to_str().unwrap()]));
    assert!(check.contains("matches final record"));

    let mut records = load_replay(&log).unwrap();
    for r in records.iter_mut() {
        if let ReplayRecord::Final { score, .. } = r {
            *score += 1;
        }
    }
    let bad = dir.path().join("bad.jsonl");
    write_replay(&bad, &records).unwrap();
    let out = hla(&["replay", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not match"));

    // The dump can look at any tick of the game.
    let at = stdout(&hla(&["utility", "--replay", log.to_str().unwrap(), "--tick", "10"]));
    assert!(at.starts_with("Quick tick 10 "));
}

#[test]
fn behavior_reads_logs_back() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().to_str().unwrap();
    let played = stdout(&hla(&["behavior", "--agent", "HLA", "--repeats", "2", "--results", results]));
    let rounds = dir.path().join("behavior/rounds");
    assert_eq!(std::fs::read_dir(&rounds).unwrap().count(), 2);
    let other = tempfile::tempdir().unwrap();
    let again = stdout(&hla(&[
        "behavior",
        rounds.to_str().unwrap(),
        "--results",
        other.path().to_str().unwrap(),
    ]));
    assert_eq!(played, again);
}

#[test]
fn bad_flags_are_usage_errors() {
    let out = hla(&["scenario", "--agent", "GPT7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("GPT7"));
    assert_eq!(hla(&["play", "--map", "moon"]).status.code(), Some(1));
    assert_eq!(hla(&["scenario", "--persona", "genius"]).status.code(), Some(2));
}

#[test]
fn backend_files_choose_the_personas() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("backend.toml");
    std::fs::write(&file, "[slow]\nkind = \"scripted\"\npersona = \"literal\"\n").unwrap();
    let results = dir.path().join("out");
    let out = stdout(&hla(&[
        "complex",
        "--agent",
        "HLA",
        "--challenge",
        "ambiguity",
        "--attempts",
        "1",
        "--backend",
        file.to_str().unwrap(),
        "--results",
        results.to_str().unwrap(),
    ]));
    // A literal reader cannot resolve "again".
    assert!(out.contains("0.00"), "{out}");
}
