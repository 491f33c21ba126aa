//! The command line tool end to end: splits, runs, monitor training and
//! tabulation.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::json;

fn agentwatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agentwatch"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = agentwatch(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write(path: &Path, value: serde_json::Value) {
    std::fs::write(path, value.to_string()).unwrap();
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn split_run_train_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let env = json!({"env": "whodunit", "variant": "asymmetric", "n_suspects": 6, "turn_limit": 31});
    let rogue = json!({"kind": "rogue", "profile": {"epsilon": 0.3, "behaviors": {"hallucinate_fact": 1.0}}});
    write(
        &d.join("base.json"),
        json!({"environment": env, "agents": {"accuser": rogue}, "seed": 1}),
    );

    let manifest = d.join("manifest.json");
    let msg = ok(&[
        "gen-dataset",
        "--config",
        p(&d.join("base.json")),
        "--sizes",
        "60,30,40",
        "--seed",
        "4",
        "--out",
        p(&manifest),
    ]);
    assert!(msg.contains("train 60, validation 30, test 40"), "{msg}");

    for split in ["train", "validation", "test"] {
        let table = ok(&[
            "run",
            "--config",
            p(&d.join("base.json")),
            "--manifest",
            p(&manifest),
            "--split",
            split,
            "--output-dir",
            p(&d.join(split)),
        ]);
        assert!(table.starts_with("run"), "{table}");
        assert!(d.join(split).join("trajectories.jsonl").exists());
    }

    let model = d.join("accuser.json");
    let msg = ok(&[
        "train-monitor",
        "--train",
        p(&d.join("train/trajectories.jsonl")),
        "--validation",
        p(&d.join("validation/trajectories.jsonl")),
        "--role",
        "accuser",
        "--out",
        p(&model),
        "--worst",
        p(&d.join("worst.json")),
    ]);
    assert!(msg.contains("validation gain"), "{msg}");
    assert!(d.join("worst.json").exists());

    write(
        &d.join("reset.json"),
        json!({
            "environment": env, "agents": {"accuser": rogue}, "seed": 1,
            "monitor": {"kind": "models", "paths": [model]},
            "intervention": {"kind": "full-reset", "cap": 1},
        }),
    );
    ok(&[
        "run",
        "--config",
        p(&d.join("reset.json")),
        "--manifest",
        p(&manifest),
        "--output-dir",
        p(&d.join("reset")),
    ]);

    let csv = d.join("table.csv");
    let table = ok(&[
        "summarize",
        &format!("base={}", p(&d.join("test/report.json"))),
        &format!("reset={}", p(&d.join("reset/report.json"))),
        "--csv",
        p(&csv),
    ]);
    assert!(table.contains("base") && table.contains("reset"), "{table}");
    let csv = std::fs::read_to_string(csv).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("run,games,invalid,repetitions,success_rate"));
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    write(
        &cfg,
        json!({"environment": {"env": "whodunit", "variant": "asymmetric"}, "seed": 0}),
    );
    let out = agentwatch(&[
        "gen-dataset",
        "--config",
        p(&cfg),
        "--sizes",
        "1,2",
        "--out",
        p(&dir.path().join("m.json")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--sizes needs 3 values"));

    let out = agentwatch(&[
        "run",
        "--config",
        p(&dir.path().join("missing.json")),
        "--manifest",
        p(&cfg),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
