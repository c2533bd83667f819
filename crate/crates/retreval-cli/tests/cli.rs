//! End-to-end runs of the compiled binary against the scripted provider.

use std::path::Path;
use std::process::{Command, Output};

const DATASET: &str = r#"{"id":"m1","statement":"What is 6 * 7?","domain":"math","reference_answer":"42"}
{"id":"m2","statement":"What is 15 + 27?","domain":"math","reference_answer":"42"}
"#;

const SCRIPT: &str = r#"
[[rule]]
role = "complexity"
response = "complexity: 1"

[[rule]]
role = "generate"
response = """
THOUGHT 1: multiply the factors directly
THOUGHT 2: add six seven times
"""

[[rule]]
role = "self_critique"
response = """
SCORE: 0.9
RATIONALE: arithmetic is sound
"""

[[rule]]
role = "cross_score"
response = "SCORE: 0.9"

[[rule]]
role = "final_answer"
response = "42"

[[rule]]
role = "insight_extract"
response = "- compute directly"

[[rule]]
role = "judge"
response = """
score: 8
rationale: clean
"""

[[rule]]
response = "a filler step"
"#;

fn retreval(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retreval"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(output: &Output, what: &str) {
    assert!(
        output.status.success(),
        "{what} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn run_judge_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("dataset.jsonl"), DATASET).unwrap();
    std::fs::write(dir.path().join("script.toml"), SCRIPT).unwrap();

    let run = retreval(
        dir.path(),
        &[
            "run",
            "--dataset",
            "dataset.jsonl",
            "--methods",
            "retreval,react",
            "--out-dir",
            "out",
            "--script",
            "script.toml",
            "--sequential",
        ],
    );
    assert_ok(&run, "run");
    assert!(String::from_utf8_lossy(&run.stdout).contains("4 completed"));
    assert!(dir.path().join("out/manifest.json").exists());
    assert!(dir.path().join("out/retreval/m1.trace.json").exists());
    assert!(dir.path().join("out/memory.toml").exists());

    // rerun resumes: everything skipped
    let rerun = retreval(
        dir.path(),
        &[
            "run",
            "--dataset",
            "dataset.jsonl",
            "--methods",
            "retreval,react",
            "--out-dir",
            "out",
            "--script",
            "script.toml",
            "--sequential",
        ],
    );
    assert_ok(&rerun, "rerun");
    assert!(String::from_utf8_lossy(&rerun.stdout).contains("4 skipped"));

    let judge = retreval(
        dir.path(),
        &[
            "judge",
            "--results-dir",
            "out",
            "--task-type",
            "math",
            "--script",
            "script.toml",
        ],
    );
    assert_ok(&judge, "judge");
    assert!(dir.path().join("out/verdicts.json").exists());
    assert!(dir.path().join("out/judge.trace.json").exists());

    let report = retreval(
        dir.path(),
        &[
            "report",
            "--verdicts",
            "out/verdicts.json",
            "--out-dir",
            "report",
        ],
    );
    assert_ok(&report, "report");
    let text = std::fs::read_to_string(dir.path().join("report/report.txt")).unwrap();
    assert!(text.contains("## math summary"));
    assert!(text.contains("retreval"));
    assert!(dir.path().join("report/summary.csv").exists());
    assert!(dir.path().join("report/histogram.csv").exists());
}

#[test]
fn gen_creative_is_seed_stable() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.jsonl", "b.jsonl"] {
        let out = retreval(
            dir.path(),
            &["gen-creative", "--count", "4", "--seed", "9", "--out", name],
        );
        assert_ok(&out, "gen-creative");
    }
    let a = std::fs::read_to_string(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 4);
    assert!(a.contains("four coherent, creative sentences"));
}

#[test]
fn run_requires_endpoint_or_script() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("dataset.jsonl"), DATASET).unwrap();
    let out = retreval(
        dir.path(),
        &["run", "--dataset", "dataset.jsonl", "--out-dir", "out"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--endpoint or --script"));
}
