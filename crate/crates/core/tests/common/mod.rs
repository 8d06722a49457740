#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;

pub fn odsg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_odsg"))
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_in(dir: &Path, args: &[&str]) -> Run {
    let out: Output = odsg().args(args).current_dir(dir).output().expect("spawn odsg");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn read_json(path: impl AsRef<Path>) -> Value {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap()
}

fn validator(name: &str) -> &'static jsonschema::Validator {
    static RESULTS: OnceLock<jsonschema::Validator> = OnceLock::new();
    static RECORDS: OnceLock<jsonschema::Validator> = OnceLock::new();
    let (cell, text) = match name {
        "results" => (&RESULTS, include_str!("../../../../docs/results.schema.json")),
        "iof_records" => (&RECORDS, include_str!("../../../../docs/iof_records.schema.json")),
        other => panic!("no schema {other}"),
    };
    cell.get_or_init(|| {
        let schema: Value = serde_json::from_str(text).unwrap();
        jsonschema::validator_for(&schema).unwrap()
    })
}

/// Panics with every violation of the documented schema.
pub fn assert_schema(name: &str, doc: &Value) {
    let errors: Vec<String> = validator(name)
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{name} schema violations:\n{}", errors.join("\n"));
}

/// Relative paths of all files under `root` with the given extension, sorted.
pub fn files_with_ext(root: &Path, ext: &str) -> Vec<std::path::PathBuf> {
    fn walk(dir: &Path, root: &Path, ext: &str, out: &mut Vec<std::path::PathBuf>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(&p, root, ext, out);
            } else if p.extension().is_some_and(|e| e == ext) {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, ext, &mut out);
    out.sort();
    out
}
