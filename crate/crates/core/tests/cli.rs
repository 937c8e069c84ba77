use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
corpus_dialogues = 40
sl_epochs = 2
il_episodes = 50
rl_episodes = 30
eval_dialogues = 10
";

fn tod(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_tod"))
        .current_dir(dir)
        .args(["--config", "run.toml"])
        .args(args)
        .output()
        .expect("spawn tod");
    out
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = tod(dir, args);
    assert!(out.status.success(), "tod {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn workspace(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

#[test]
fn corpus_generation_is_reproducible() {
    let dir = workspace(SMALL);
    let d = dir.path();
    ok(d, &["gen-kb"]);
    ok(d, &["gen-corpus", "--n", "25"]);
    let first = fs::read(d.join("run/corpus.jsonl")).unwrap();
    ok(d, &["gen-corpus", "--n", "25"]);
    assert_eq!(fs::read(d.join("run/corpus.jsonl")).unwrap(), first);
    ok(d, &["gen-corpus", "--n", "25", "--seed", "8"]);
    assert_ne!(fs::read(d.join("run/corpus.jsonl")).unwrap(), first);
}

#[test]
fn every_stage_runs_and_emits_a_well_formed_curve() {
    let dir = workspace(SMALL);
    let d = dir.path();
    ok(d, &["gen-kb"]);
    ok(d, &["gen-corpus"]);
    ok(d, &["train-sl"]);
    let report = ok(d, &["eval-corpus", "--model", "sl"]);
    for field in ["joint", "num_tickets", "movie", "theater", "date", "time"] {
        assert!(report.contains(field), "eval-corpus report lacks {field}:\n{report}");
    }
    ok(d, &["train-il", "--episodes", "50"]);
    assert!(d.join("run/checkpoints/sl+il50.json").exists());
    ok(d, &["train-rl", "--from", "sl+il50", "--episodes", "30"]);
    ok(d, &["train-rl", "--from", "sl", "--episodes", "30", "--mode", "policy_only"]);
    assert!(d.join("run/checkpoints/sl+rl_policy.json").exists());
    let eval = ok(d, &["eval-interactive", "--model", "sl+il50+rl", "--n", "10"]);
    assert!(eval.contains("success"), "{eval}");
    ok(d, &["emit-curves", "--model", "sl+il50+rl", "--out", "curve.csv"]);

    let csv = fs::read_to_string(d.join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("episode_count,success_rate,mean_turns,dst_joint,mean_return"));
    let mut last = 0;
    let mut rows = 0;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 5, "{line}");
        let episodes: usize = cells[0].parse().unwrap();
        assert!(episodes > last, "episode counts not increasing: {line}");
        last = episodes;
        let success: f64 = cells[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&success));
        let turns: f64 = cells[2].parse().unwrap();
        assert!(turns.is_nan() || (1.0..=15.0).contains(&turns));
        let joint: f64 = cells[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&joint));
        let ret: f64 = cells[4].parse().unwrap();
        assert!((-15.0..=14.0).contains(&ret));
        rows += 1;
    }
    assert!(rows > 0);
    assert_eq!(last, 30);

    ok(d, &["emit-curves", "--model", "sl+il50"]);
    assert!(d.join("run/out/sl+il50.curve.csv").exists());
}

#[test]
fn failures_exit_nonzero_with_a_message() {
    let dir = workspace(SMALL);
    let d = dir.path();
    let out = tod(d, &["train-sl"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("kb.tsv"));

    assert!(!tod(d, &["frobnicate"]).status.success());

    fs::write(d.join("run.toml"), "sl_epochs = 2\nlearning_rat = 0.1\n").unwrap();
    let out = tod(d, &["gen-kb"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("learning_rat") && err.contains('2'), "{err}");
}
