use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn scratch(test: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rescon-cli-{test}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn rescon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rescon"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_exit_codes() {
    let ok = rescon(&["validate", path(&fixture("tiny.json"))]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).starts_with("ok: 2 computers"));

    let missing = rescon(&["validate", "/nonexistent/model.json"]);
    assert_eq!(missing.status.code(), Some(2));

    let dir = scratch("validate");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"system\": ").unwrap();
    let out = rescon(&["validate", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn unknown_subcommand_is_an_input_error() {
    assert_eq!(rescon(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn solve_exit_codes() {
    let dir = scratch("solve");
    let report = dir.join("report.json");
    let out = rescon(&[
        "solve",
        "--model",
        path(&fixture("tiny.json")),
        "--report-out",
        path(&report),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("resilient 1"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["resilientClasses"], 1);
    assert!(json.get("timings").is_none());

    let out = rescon(&["solve", "--model", path(&fixture("unsat.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("no resilient configuration"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn quotient_modes_report_the_same_classes() {
    let runs: Vec<String> = ["off", "partial", "full"]
        .iter()
        .map(|q| {
            let out = rescon(&[
                "solve",
                "--model",
                path(&fixture("example2.json")),
                "--quotient",
                q,
                "--list-all",
            ]);
            assert_eq!(out.status.code(), Some(0));
            // Drop the timing line.
            stdout(&out)
                .lines()
                .filter(|l| !l.starts_with("generate"))
                .collect::<Vec<_>>()
                .join("\n")
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
}

#[test]
fn replay_policies() {
    let dir = scratch("replay");
    let model = fixture("example1.json");
    let policy = dir.join("policy.json");
    let solved = rescon(&[
        "solve",
        "--model",
        path(&model),
        "--policy-out",
        path(&policy),
    ]);
    assert_eq!(solved.status.code(), Some(0));

    let all = rescon(&["replay", "--model", path(&model), "--policy", path(&policy)]);
    assert_eq!(all.status.code(), Some(0));
    assert!(stdout(&all).starts_with("ok: 27 schedules from 9 roots"));

    let sched = dir.join("c0.json");
    std::fs::write(&sched, r#"[["c0"]]"#).unwrap();
    let one = rescon(&[
        "replay",
        "--model",
        path(&model),
        "--policy",
        path(&policy),
        "--schedule",
        path(&sched),
    ]);
    assert_eq!(one.status.code(), Some(0));
    assert!(stdout(&one).contains("stop planning@c1"));

    // One embedded computer may crash, not both at once.
    std::fs::write(&sched, r#"[["c0", "c1"]]"#).unwrap();
    let too_many = rescon(&[
        "replay",
        "--model",
        path(&model),
        "--policy",
        path(&policy),
        "--schedule",
        path(&sched),
    ]);
    assert_eq!(too_many.status.code(), Some(1));
    assert!(stdout(&too_many).contains("not permitted"));

    std::fs::write(&sched, r#"[["c9"]]"#).unwrap();
    let unknown = rescon(&[
        "replay",
        "--model",
        path(&model),
        "--policy",
        path(&policy),
        "--schedule",
        path(&sched),
    ]);
    assert_eq!(unknown.status.code(), Some(2));

    std::fs::write(&sched, r#"[["c0"]]"#).unwrap();
    let out_of_range = rescon(&[
        "replay",
        "--model",
        path(&model),
        "--policy",
        path(&policy),
        "--schedule",
        path(&sched),
        "--root",
        "99",
    ]);
    assert_eq!(out_of_range.status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}
