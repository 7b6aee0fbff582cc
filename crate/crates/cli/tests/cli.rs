use std::path::Path;
use std::process::{Command, Output};

use framesel_core::model::{write_probability_stack, ProbabilityStack};

fn framesel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_framesel"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn ttc_prints_hours() {
    let dir = tempfile::tempdir().unwrap();
    let out = framesel(dir.path(), &["ttc", "--N", "51363", "--b", "500", "--B", "7500"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let hours: f64 = text
        .strip_prefix("ttc: ")
        .and_then(|s| s.split(' ').next())
        .and_then(|h| h.parse().ok())
        .unwrap_or_else(|| panic!("unexpected output {text:?}"));
    assert!((hours - 197.0).abs() < 1.0, "{hours}");
}

#[test]
fn zero_cycle_budget_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = framesel(dir.path(), &["ttc", "--N", "51363", "--b", "0", "--B", "7500"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("at least 1"));
}

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(framesel(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(framesel(dir.path(), &["--version"]).status.code(), Some(0));
    assert_eq!(framesel(dir.path(), &["score", "--help"]).status.code(), Some(0));
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        framesel(dir.path(), &["ttc", "--N", "10", "--bogus"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(framesel(dir.path(), &[]).status.code(), Some(1));
}

#[test]
fn constant_stack_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let stack = ProbabilityStack::filled("flat", 64, 48, 5, 1, 0.3).unwrap();
    write_probability_stack(&stack, dir.path().join("flat.alpm")).unwrap();
    let out = framesel(dir.path(), &["score", "--stack", "flat.alpm"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("flat,"));
    let score: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(score, 0.0);
}

#[test]
fn corrupt_stack_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let stack = ProbabilityStack::filled("bad", 4, 4, 1, 1, 0.3).unwrap();
    let mut bytes = framesel_core::model::encode_stack(&stack);
    bytes[24..28].copy_from_slice(&1.5f32.to_le_bytes());
    std::fs::write(dir.path().join("bad.alpm"), bytes).unwrap();
    let out = framesel(dir.path(), &["score", "--stack", "bad.alpm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.alpm"));
    assert_eq!(
        framesel(dir.path(), &["score", "--stack", "missing.alpm"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn config_errors_carry_position() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        "{\n  \"dt1\": 15,\n  \"dt3\": 2\n}\n",
    )
    .unwrap();
    let out = framesel(
        dir.path(),
        &[
            "--config", "cfg.json", "ttc", "--N", "100", "--b", "10", "--B", "20",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cfg.json:3:"), "{}", stderr(&out));
}

#[test]
fn config_values_apply_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        "{\"cycle_budget\": 2500, \"total_budget\": 7500}\n",
    )
    .unwrap();
    let from_config = stdout(&framesel(
        dir.path(),
        &["--config", "cfg.json", "ttc", "--N", "51363"],
    ));
    assert!(from_config.contains("b=2500"), "{from_config}");
    let overridden = stdout(&framesel(
        dir.path(),
        &["--config", "cfg.json", "ttc", "--N", "51363", "--b", "50"],
    ));
    assert!(
        overridden.contains("b=50 ") && overridden.contains("K=150"),
        "{overridden}"
    );
}

#[test]
fn randomized_commands_need_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.csv"),
        "frame_id,video_id,temporal_index,score\na,,,0.5\n",
    )
    .unwrap();
    let out = framesel(
        dir.path(),
        &[
            "select",
            "--scores",
            "s.csv",
            "--b",
            "1",
            "--strategy",
            "guided-random",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(
        framesel(dir.path(), &["simulate", "--seeds", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        framesel(dir.path(), &["generate", "--out", "d"]).status.code(),
        Some(1)
    );
}

#[test]
fn pool_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("w.json"),
        "{\"num_videos\": 2, \"frames_per_video\": 40}\n",
    )
    .unwrap();
    let d = dir.path();
    assert_eq!(
        framesel(
            d,
            &[
                "generate",
                "--world-config",
                "w.json",
                "--seed",
                "2",
                "--out",
                "data"
            ]
        )
        .status
        .code(),
        Some(0)
    );
    let run = |extra: &[&str]| {
        let mut args = vec![
            "cycle",
            "run",
            "--manifest",
            "data/manifest.json",
            "--pool",
            "pool.state",
            "--b",
            "4",
            "--B",
            "8",
            "--radius",
            "2",
        ];
        args.extend_from_slice(extra);
        framesel(d, &args)
    };
    // A new pool needs a seed.
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--seed", "5", "--out", "c0.csv"]).status.code(), Some(0));
    assert_eq!(run(&["--seed", "6"]).status.code(), Some(1));
    std::fs::write(d.join("done"), "").unwrap();
    assert_eq!(
        run(&["--wait-for", "done", "--wait-timeout", "5"]).status.code(),
        Some(0)
    );
    let exhausted = run(&[]);
    assert_eq!(exhausted.status.code(), Some(2));
    assert!(stderr(&exhausted).contains("budget exhausted"));

    let training: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("training_cycle_1.json")).unwrap()).unwrap();
    assert_eq!(training["cycle"], 2);
    assert_eq!(training["frames"].as_array().unwrap().len(), 8);

    let out = framesel(d, &["report", "--pool", "pool.state", "--out", "stats.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stats = std::fs::read_to_string(d.join("stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 3);
    assert!(d.join("stats.json").exists());
}

#[test]
fn timed_out_wait_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("w.json"),
        "{\"num_videos\": 1, \"frames_per_video\": 20}\n",
    )
    .unwrap();
    framesel(
        d,
        &[
            "generate",
            "--world-config",
            "w.json",
            "--seed",
            "2",
            "--out",
            "data",
        ],
    );
    let out = framesel(
        d,
        &[
            "cycle",
            "run",
            "--manifest",
            "data/manifest.json",
            "--pool",
            "p.state",
            "--b",
            "2",
            "--B",
            "4",
            "--seed",
            "1",
            "--wait-for",
            "never",
            "--wait-timeout",
            "0",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    // The cycle itself was committed before waiting.
    assert!(d.join("p.state").exists());
}
