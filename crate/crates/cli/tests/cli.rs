use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use cotangent_lab_cli::{execute, parse_config, run, to_toml, Status};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cotlab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const ORBIT: &str = r#"
spec_version = 1
kind = "orbit"

[params]
class = [1]

[params.field]
n = 1
profile = { type = "cut_parabola", height = 2.0 }
"#;

#[test]
fn every_shipped_config_round_trips() {
    let mut seen = 0;
    for dir in ["acceptance", "examples"] {
        for entry in fs::read_dir(configs().join(dir)).unwrap() {
            let path = entry.unwrap().path();
            let text = fs::read_to_string(&path).unwrap();
            let config = parse_config(&text).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
            let again = parse_config(&to_toml(&config).unwrap()).unwrap();
            assert_eq!(config, again, "{}", path.display());
            seen += 1;
        }
    }
    assert!(seen >= 10);
}

#[test]
fn orbit_example_has_the_expected_action() {
    // f = 2 (1 - r²) near the orbit, so f'(r) = -1 at r = 1/4 and A = f - r f' = 1.875 + 0.25.
    let out = execute(&parse_config(ORBIT).unwrap()).unwrap();
    assert_eq!(out.status, Status::Success);
    let action = out.result["action"].as_f64().unwrap();
    assert!((action - 2.125).abs() < 1e-6, "{action}");
}

#[test]
fn csv_outputs_are_deterministic() {
    let config = parse_config(ORBIT).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&config, a.path()).unwrap();
    run(&config, b.path()).unwrap();
    let read = |d: &Path| fs::read_to_string(d.join("trajectory.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["kind"], "orbit");
    assert_eq!(summary["exit_code"], 0);
    assert!(summary["metadata"]["unix_time"].is_u64());
}

#[test]
fn schema_violations_name_the_field() {
    let unknown_kind = ORBIT.replace("kind = \"orbit\"", "kind = \"teleport\"");
    assert!(parse_config(&unknown_kind).is_err());
    let typo = ORBIT.replace("class = [1]", "clas = [1]");
    let err = format!("{:#}", parse_config(&typo).unwrap_err());
    assert!(err.contains("schema violation"), "{err}");
    let stray = format!("colour = 1\n{ORBIT}");
    let err = format!("{:#}", parse_config(&stray).unwrap_err());
    assert!(err.contains("`colour`"), "{err}");
    let version = ORBIT.replace("spec_version = 1", "spec_version = 7");
    let err = format!("{:#}", parse_config(&version).unwrap_err());
    assert!(err.contains("spec_version"), "{err}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, ORBIT).unwrap();
    let status = bin().args(["run"]).arg(&good).arg("--out").arg(dir.path().join("o1")).status().unwrap();
    assert_eq!(status.code(), Some(0));

    // Below the first crossing there is no orbit in class 1 of the sharpness profile.
    let missing = dir.path().join("missing.toml");
    fs::write(
        &missing,
        r#"
spec_version = 1
kind = "spectrum"

[params]
class = [1]

[params.field]
n = 1
profile = { type = "sharpness", m = 1.0, delta = 0.1 }
"#,
    )
    .unwrap();
    let status = bin().arg("run").arg(&missing).arg("--out").arg(dir.path().join("o2")).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let broken = dir.path().join("broken.toml");
    fs::write(&broken, "spec_version = 1\nkind = \"orbit\"\n").unwrap();
    let status = bin().arg("run").arg(&broken).status().unwrap();
    assert_eq!(status.code(), Some(1));
    assert_eq!(bin().arg("validate").arg(&broken).status().unwrap().code(), Some(1));
}

#[test]
fn list_names_every_kind() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for kind in ["orbit", "spectrum", "propagate", "theorem-a", "rotation-set", "counterexample", "capacity", "sh-table", "hofer-certify"] {
        assert!(text.lines().any(|l| l.starts_with(kind)), "{kind}");
    }
}

#[test]
fn fast_acceptance_configs_succeed() {
    for name in ["c3_counterexample", "c6_sh_table", "c6_capacity"] {
        let config = parse_config(&fs::read_to_string(configs().join(format!("acceptance/{name}.toml"))).unwrap()).unwrap();
        let out = execute(&config).unwrap();
        assert_eq!(out.status, Status::Success, "{name}: {}", out.verdict);
    }
}
