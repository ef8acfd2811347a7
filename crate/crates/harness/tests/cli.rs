use std::fs;
use std::path::Path;
use std::process::Command;

use tamp_core::actions::GroundAction;
use tamp_core::llm::render_response;

fn tamp(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tamp")).args(args).output().unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let (ok, _, err) = tamp(&[
        "run",
        "--scenario",
        "setting1-easy,setting1-medium",
        "--variant",
        "llm3-backtrack,scratch",
        "--backend",
        "heuristic",
        "--trials",
        "2",
        "--out",
        p(&out),
    ]);
    assert!(ok, "{err}");
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "scenario,variant,trials,sr_percent,mean_llm,mean_mp");
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines[1..].iter().all(|l| l.contains(",2,100.0,1.00,")));
    let trials = fs::read_to_string(out.join("trials.jsonl")).unwrap();
    assert_eq!(trials.lines().count(), 8);
    assert!(trials.contains("\"wall_time\""));
    let iters = fs::read_to_string(out.join("iterations.jsonl")).unwrap();
    assert_eq!(iters.lines().count(), 8);
    assert!(iters.contains("\"prompt_digest\""));

    let (ok, csv, _) = tamp(&["report", "--trials", p(&out.join("trials.jsonl"))]);
    assert!(ok);
    assert_eq!(csv, summary);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "format = 1\nscenarios = [\"setting1-easy\"]\ntrials = 3\nbackend = \"heuristic\"\n").unwrap();
    let (ok, stdout, err) = tamp(&["run", "--config", p(&cfg), "--trials", "1"]);
    assert!(ok, "{err}");
    assert!(stdout.contains("setting1-easy,llm3-backtrack,1,100.0,"), "{stdout}");
}

#[test]
fn replay_backend_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("replay.jsonl");
    let bad = render_response(
        "stack",
        &[
            GroundAction::pick("red_box"),
            GroundAction::place("red_box", 0.5, 0.0, 0.0),
            GroundAction::pick("blue_box"),
            GroundAction::place("blue_box", 0.5, 0.0, 0.0),
        ],
    );
    let line = serde_json::to_string(&bad).unwrap();
    fs::write(&script, format!("{line}\n").repeat(20)).unwrap();
    let backend = format!("replay:{}", p(&script));
    let (ok, stdout, err) = tamp(&["run", "--backend", &backend, "--trials", "2", "--variant", "llm3-scratch"]);
    assert!(ok, "{err}");
    assert!(stdout.contains("setting1-easy,llm3-scratch,2,0.0,20.00,"), "{stdout}");
}

#[test]
fn gen_scenario_round_trips_into_run() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("hard.toml");
    let (ok, _, err) = tamp(&["gen-scenario", "--scenario", "setting2-large", "--seed", "3", "--out", p(&file)]);
    assert!(ok, "{err}");
    assert!(fs::read_to_string(&file).unwrap().starts_with("format = 1"));
    let (ok, stdout, err) = tamp(&["run", "--scenario", p(&file), "--trials", "1"]);
    assert!(ok, "{err}");
    assert!(stdout.contains("setting2-large,llm3-backtrack,1,100.0,"), "{stdout}");
}

#[test]
fn param_study_prints_summary() {
    let (ok, stdout, err) = tamp(&["param-study", "--sampler", "heuristic", "--trials", "3"]);
    assert!(ok, "{err}");
    assert!(stdout.contains("heuristic,3,100.0,1.00,8.00,0.00"), "{stdout}");
}

#[test]
fn errors_exit_nonzero() {
    let (ok, _, err) = tamp(&["run", "--scenario", "setting9"]);
    assert!(!ok);
    assert!(err.contains("unknown scenario"));
    let (ok, _, _) = tamp(&["run", "--variant", "llm3"]);
    assert!(!ok);
    let (ok, _, _) = tamp(&["param-study", "--sampler", "guess"]);
    assert!(!ok);
}
