#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn corpus(rel: &str) -> String {
    root().join("corpus/sorting").join(rel).display().to_string()
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn mutrb(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_mutrb"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// `--target <sorter> --suite <sorting tests>` plus `rest`.
pub fn sorter_args(cmd: &str, sorter: &str, rest: &[&str]) -> Vec<String> {
    let mut v = vec![
        cmd.to_string(),
        "--target".into(),
        corpus(sorter),
        "--suite".into(),
        corpus("tests"),
    ];
    v.extend(rest.iter().map(|s| s.to_string()));
    v
}

pub fn run_sorter(dir: &Path, cmd: &str, sorter: &str, rest: &[&str]) -> Run {
    let args = sorter_args(cmd, sorter, rest);
    mutrb(dir, &args.iter().map(String::as_str).collect::<Vec<_>>())
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Validates `report` against `docs/schema/<command>.schema.json`.
pub fn check_schema(command: &str, report: &Value) -> Result<(), String> {
    let schema = read_json(&root().join(format!("docs/schema/{command}.schema.json")));
    let v = jsonschema::validator_for(&schema).map_err(|e| e.to_string())?;
    let errors: Vec<String> = v.iter_errors(report).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors.join("\n"))
    }
}
