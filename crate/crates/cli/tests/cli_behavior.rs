//! Behavior of the installed binary: exit codes, artifact layout,
//! determinism, and agreement between the simulator and the replay tool.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crosslight"))
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name))
        .unwrap_or_else(|e| panic!("reading {}: {e}", dir.join(name).display()))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawning crosslight");
    assert!(
        out.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn sim_run_writes_all_artifacts_and_repeats_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(bin().args(["sim", "run", "--seed", "11"]).arg("--out").arg(&a));
    run_ok(bin().args(["sim", "run", "--seed", "11"]).arg("--out").arg(&b));
    for name in ["metrics.csv", "events.jsonl", "commands.jsonl", "manifest.json"] {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs between reruns");
    }
    let manifest = read(&a, "manifest.json");
    for needle in ["\"command\": \"sim run\"", "\"config_digest\"", "metrics.csv"] {
        assert!(manifest.contains(needle), "manifest missing {needle}");
    }

    let c = dir.path().join("c");
    run_ok(bin().args(["sim", "run", "--seed", "12"]).arg("--out").arg(&c));
    assert_ne!(
        read(&a, "manifest.json"),
        read(&c, "manifest.json"),
        "different seeds must change the config digest"
    );
}

#[test]
fn shipped_default_config_matches_builtin_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok(bin().args(["sim", "run"]).arg("--out").arg(&a));
    run_ok(
        bin()
            .args(["sim", "run", "--config"])
            .arg(repo_config("scenario_default.toml"))
            .arg("--out")
            .arg(&b),
    );
    assert_eq!(read(&a, "metrics.csv"), read(&b, "metrics.csv"));
    assert_eq!(read(&a, "manifest.json"), read(&b, "manifest.json"));
}

#[test]
fn replaying_sim_events_reproduces_the_sim_command_log() {
    let dir = tempfile::tempdir().unwrap();
    let sim_out = dir.path().join("sim");
    run_ok(bin().args(["sim", "run", "--seed", "5"]).arg("--out").arg(&sim_out));

    let replay_out = dir.path().join("replay");
    run_ok(
        bin()
            .args(["controller", "replay", "--events"])
            .arg(sim_out.join("events.jsonl"))
            .arg("--config")
            .arg(repo_config("controller_default.toml"))
            .arg("--out")
            .arg(&replay_out),
    );
    assert_eq!(
        read(&sim_out, "commands.jsonl"),
        read(&replay_out, "commands.jsonl"),
        "replay must agree with the simulator byte for byte"
    );
}

#[test]
fn out_dir_env_var_is_the_default_destination() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_env");
    run_ok(
        bin()
            .args(["sim", "run", "--seed", "3"])
            .env("CROSSLIGHT_OUT_DIR", &out)
            .current_dir(dir.path()),
    );
    assert!(out.join("metrics.csv").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn selfcheck_exit_codes_follow_the_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(
        bin()
            .args(["kernels", "selfcheck", "--cases", "25"])
            .arg("--out")
            .arg(dir.path().join("ok")),
    );
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
    let report = read(&dir.path().join("ok"), "selfcheck.txt");
    assert!(report.contains("all 10 properties passed"));

    let failing = bin()
        .args(["kernels", "selfcheck", "--cases", "5", "--inject-failure"])
        .arg("--out")
        .arg(dir.path().join("bad"))
        .output()
        .unwrap();
    assert_eq!(failing.status.code(), Some(1));
    let text = String::from_utf8_lossy(&failing.stdout).to_string();
    assert!(text.contains("FAIL injected_failure"));
}

#[test]
fn config_errors_name_the_problem_and_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let base = std::fs::read_to_string(repo_config("scenario_default.toml")).unwrap();
    std::fs::write(&bad, format!("{base}\nextra_knob = 1\n")).unwrap();
    let out = bin()
        .args(["sim", "run", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(stderr.contains("extra_knob"), "stderr was: {stderr}");

    let out = bin()
        .args(["sim", "ablate-n", "--n-values", "5..1"])
        .arg("--out")
        .arg(dir.path().join("y"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dataset_pipeline_round_trips_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels/autumn");
    std::fs::create_dir_all(&labels).unwrap();
    std::fs::write(labels.join("one.txt"), "1 0.5 0.5 0.2 0.3\n7 0.25 0.25 0.1 0.1\n").unwrap();
    std::fs::write(dir.path().join("labels/two.txt"), "11 0.5 0.5 0.5 0.5\n").unwrap();
    let names = dir.path().join("names.txt");
    std::fs::write(
        &names,
        crosslight_control::domain::ObjectClass::names_file_contents(),
    )
    .unwrap();

    let stats_out = dir.path().join("stats");
    run_ok(
        bin()
            .args(["dataset", "stats", "--labels"])
            .arg(dir.path().join("labels"))
            .arg("--names")
            .arg(&names)
            .arg("--out")
            .arg(&stats_out),
    );
    let stats = read(&stats_out, "stats.csv");
    assert!(stats.contains("1,person_with_wheelchair,1"));
    assert!(stats.contains("7,person_with_bicycle,1"));
    assert!(stats.contains("11,car,1"));
    assert!(stats.contains("# season autumn: 2 records over 1 images"));

    let (s1, s2) = (dir.path().join("s1"), dir.path().join("s2"));
    for out in [&s1, &s2] {
        run_ok(
            bin()
                .args(["dataset", "split", "--labels"])
                .arg(dir.path().join("labels"))
                .arg("--names")
                .arg(&names)
                .args(["--ratio", "0.5", "--seed", "7"])
                .arg("--out")
                .arg(out),
        );
    }
    assert_eq!(read(&s1, "train.txt"), read(&s2, "train.txt"));
    assert_eq!(read(&s1, "eval.txt"), read(&s2, "eval.txt"));
    let ids: Vec<String> = format!("{}{}", read(&s1, "train.txt"), read(&s1, "eval.txt"))
        .lines()
        .map(str::to_string)
        .collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(sorted, vec!["autumn/one".to_string(), "two".to_string()]);

    // Perfect predictions: echo the denormalized ground truth back.
    let records = crosslight_metrics::load_annotation_dir(
        &dir.path().join("labels"),
        &crosslight_control::domain::ObjectClass::names_file_contents(),
    )
    .unwrap();
    let gts =
        crosslight_metrics::ground_truth_from_annotations(&records, 640.0, 512.0).unwrap();
    let preds: Vec<crosslight_metrics::Prediction> = gts
        .iter()
        .map(|g| {
            crosslight_metrics::Prediction::new(g.image_id.clone(), g.class, g.bbox, 1.0).unwrap()
        })
        .collect();
    let preds_path = dir.path().join("preds.jsonl");
    std::fs::write(
        &preds_path,
        crosslight_metrics::prediction_lines_to_string(&preds),
    )
    .unwrap();

    let eval_out = dir.path().join("eval");
    run_ok(
        bin()
            .args(["dataset", "eval-ap", "--labels"])
            .arg(dir.path().join("labels"))
            .arg("--names")
            .arg(&names)
            .arg("--predictions")
            .arg(&preds_path)
            .arg("--out")
            .arg(&eval_out),
    );
    assert_eq!(
        read(&eval_out, "eval.csv"),
        "ap,ap50,ap75,ap_s,ap_l\n1.000000,1.000000,1.000000,1.000000,1.000000\n"
    );
}
