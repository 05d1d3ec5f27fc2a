//! Exit-code and stream contracts of the `gemini` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gemini() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gemini"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rotating_frame() -> PathBuf {
    configs_dir().join("rotating_frame.yaml")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process exited normally")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn validate_ok_is_exit_zero_and_silent_stdout() {
    let out = gemini().arg("validate").arg(rotating_frame()).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn validate_missing_file_is_exit_one() {
    let out = gemini().arg("validate").arg("no/such/config.yaml").output().unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn validate_unknown_command_is_exit_two_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.yaml");
    std::fs::write(&path, "description:\n  - Phantom: {}\n").unwrap();
    let out = gemini().arg("validate").arg(&path).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("Phantom"));
}

#[test]
fn run_zero_iterations_is_a_usage_error() {
    let out = gemini()
        .args(["run"])
        .arg(rotating_frame())
        .args(["--iterations", "0"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 64);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = gemini().args(["run", "--not-a-flag"]).output().unwrap();
    assert_eq!(code(&out), 64);
}

#[test]
fn help_is_exit_zero() {
    let out = gemini().arg("--help").output().unwrap();
    assert_eq!(code(&out), 0);
    assert!(!out.stdout.is_empty());
}

#[test]
fn run_twice_writes_byte_identical_logs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for path in [&a, &b] {
        let out = gemini()
            .arg("run")
            .arg(rotating_frame())
            .args(["--iterations", "5", "--log"])
            .arg(path)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn runtime_error_is_exit_four_with_iteration_number() {
    // UpdateTime without any Time entity fails on the first iteration.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("no_clock.yaml");
    std::fs::write(
        &path,
        "commands:\n  UpdateTime: {kind: processor, module: gemini.processors.update_time}\ndescription:\n  - UpdateTime: {}\n",
    )
    .unwrap();
    let out = gemini().arg("run").arg(&path).args(["--iterations", "2"]).output().unwrap();
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("iteration 1"));
}

#[test]
fn record_then_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let golden = dir.path().join("golden.csv");
    let out = gemini()
        .arg("record")
        .arg(rotating_frame())
        .args(["--iterations", "4", "--golden"])
        .arg(&golden)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = gemini().arg("check").arg(rotating_frame()).arg("--golden").arg(&golden).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn re_recording_notes_the_replacement() {
    let dir = tempfile::tempdir().unwrap();
    let golden = dir.path().join("golden.csv");
    for iterations in ["3", "5"] {
        let out = gemini()
            .arg("record")
            .arg(rotating_frame())
            .args(["--iterations", iterations, "--golden"])
            .arg(&golden)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        if iterations == "5" {
            assert!(stderr(&out).contains("replacing existing golden"));
        }
    }
    // The replacement now covers 5 iterations.
    let text = std::fs::read_to_string(&golden).unwrap();
    assert!(text.lines().any(|l| l.split(',').nth(1) == Some("5")));
}

#[test]
fn unwritable_golden_path_is_exit_three() {
    let out = gemini()
        .arg("record")
        .arg(rotating_frame())
        .args(["--iterations", "2", "--golden", "/nonexistent-dir/golden.csv"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn check_after_edit_is_exit_five_with_a_diff() {
    let dir = tempfile::tempdir().unwrap();
    let golden = dir.path().join("golden.csv");
    let out = gemini()
        .arg("record")
        .arg(rotating_frame())
        .args(["--iterations", "3", "--golden"])
        .arg(&golden)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);

    let edited = std::fs::read_to_string(rotating_frame())
        .unwrap()
        .replace("increment_step: 0.1", "increment_step: 0.2");
    let edited_path = dir.path().join("edited.yaml");
    std::fs::write(&edited_path, edited).unwrap();

    let diff_csv = dir.path().join("diff.csv");
    let out = gemini()
        .arg("check")
        .arg(&edited_path)
        .arg("--golden")
        .arg(&golden)
        .arg("--diff-out")
        .arg(&diff_csv)
        .output()
        .unwrap();
    assert_eq!(code(&out), 5);
    let err = stderr(&out);
    assert!(err.contains("currentTime"), "{err}");
    // machine-readable diff lands in the file, not on stdout
    assert!(out.stdout.is_empty());
    let diff = std::fs::read_to_string(&diff_csv).unwrap();
    assert!(diff.lines().count() > 1);
    assert!(diff.starts_with("status,entity,iteration,component,attribute"));
}

#[test]
fn build_errors_take_precedence_over_check() {
    let dir = tempfile::tempdir().unwrap();
    let golden = dir.path().join("golden.csv");
    std::fs::write(&golden, "entity,iteration,component,attribute,hash\n").unwrap();
    let broken = dir.path().join("broken.yaml");
    std::fs::write(&broken, "description:\n  - Ghost: {}\n").unwrap();
    let out = gemini().arg("check").arg(&broken).arg("--golden").arg(&golden).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn graph_output_is_deterministic_and_contains_the_time_cycle() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.dot"), dir.path().join("b.dot"));
    for path in [&a, &b] {
        let out = gemini().arg("graph").arg(rotating_frame()).arg("--out").arg(path).output().unwrap();
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let text_a = std::fs::read(&a).unwrap();
    assert_eq!(text_a, std::fs::read(&b).unwrap());
    let text = String::from_utf8(text_a).unwrap();
    assert!(text.contains("\"clock/Time\" -> \"UpdateTime\""));
    assert!(text.contains("\"UpdateTime\" -> \"clock/Time\""));
    assert!(text.contains("style=rounded"));
}

#[test]
fn graph_of_invalid_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.yaml");
    std::fs::write(&broken, "description:\n  - Ghost: {}\n").unwrap();
    let out_path = dir.path().join("graph.dot");
    let out = gemini().arg("graph").arg(&broken).arg("--out").arg(&out_path).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(!out_path.exists());
}

#[test]
fn seed_env_var_reseeds_stochastic_components() {
    let dir = tempfile::tempdir().unwrap();
    let harbor = configs_dir().join("harbor.yaml");
    let run_with = |seed: Option<&str>, log: &Path| -> Output {
        let mut cmd = gemini();
        cmd.arg("run").arg(&harbor).args(["--iterations", "3", "--log"]).arg(log);
        cmd.env_remove("GEMINI_SEED");
        if let Some(s) = seed {
            cmd.env("GEMINI_SEED", s);
        }
        cmd.output().unwrap()
    };

    let baseline = dir.path().join("baseline.csv");
    let reseeded = dir.path().join("reseeded.csv");
    let reseeded_again = dir.path().join("reseeded2.csv");

    let out = run_with(None, &baseline);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run_with(Some("99"), &reseeded);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("GEMINI_SEED=99 overrides 1 seed attribute(s)"));
    let out = run_with(Some("99"), &reseeded_again);
    assert_eq!(code(&out), 0);

    let base = std::fs::read(&baseline).unwrap();
    let re = std::fs::read(&reseeded).unwrap();
    assert_ne!(base, re, "override must change the stochastic stream");
    assert_eq!(re, std::fs::read(&reseeded_again).unwrap());
}

#[test]
fn invalid_seed_env_var_is_a_usage_error() {
    let out = gemini()
        .arg("run")
        .arg(rotating_frame())
        .args(["--iterations", "1"])
        .env("GEMINI_SEED", "banana")
        .output()
        .unwrap();
    assert_eq!(code(&out), 64);
}
