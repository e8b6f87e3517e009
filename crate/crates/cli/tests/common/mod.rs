//! Helpers for driving the `artlens` binary.

#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use serde_json::Value;

pub fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(rel: &str) -> PathBuf {
    repo().join("fixtures").join(rel)
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.stdout))
    }
}

/// A command with no inherited `ARTLENS_*` settings.
pub fn artlens() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_artlens"));
    for (k, _) in std::env::vars() {
        if k.starts_with("ARTLENS_") {
            cmd.env_remove(k);
        }
    }
    cmd
}

pub fn run_cmd(cmd: &mut Command) -> Run {
    let out = cmd.output().expect("artlens runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Runs `artlens --catalog <dir>/catalog --cache <dir>/cache --output machine <args>`.
pub fn machine(dir: &Path, args: &[&str]) -> Run {
    run_cmd(
        artlens()
            .arg("--catalog")
            .arg(dir.join("catalog"))
            .arg("--cache")
            .arg(dir.join("cache"))
            .args(["--output", "machine"])
            .args(args),
    )
}

/// Ingests the fixture collection and imports the pipeline detections.
pub fn prepare(dir: &Path) {
    let collection = fixture("collection/artworks.jsonl");
    let r = machine(dir, &["ingest", "--fixtures", collection.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let detections = fixture("detections/pipeline.jsonl");
    let r = machine(dir, &["import-detections", detections.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
}

/// Validates `doc` against one definition of the published output schema.
pub fn check_schema(definition: &str, doc: &Value) -> Result<(), String> {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/output.schema.json"))
        .map_err(|e| e.to_string())?;
    let mut schema: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    if schema["$defs"].get(definition).is_none() {
        return Err(format!("no schema definition {definition}"));
    }
    schema["$ref"] = Value::String(format!("#/$defs/{definition}"));
    let validator = jsonschema::validator_for(&schema).map_err(|e| e.to_string())?;
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(format!("{definition}: {}", errors.join("; ")))
    }
}

/// A long-running subcommand, killed on drop.
pub struct Server {
    child: Child,
    pub url: String,
}

impl Server {
    /// Starts `artlens --output machine <args> --port 0` and waits for the
    /// address line.
    pub fn start(args: &[&str]) -> Self {
        let mut child = artlens()
            .args(["--output", "machine"])
            .args(args)
            .args(["--port", "0"])
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .expect("artlens starts");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let doc: Value = serde_json::from_str(&line).unwrap_or_else(|_| panic!("no address line: {line:?}"));
        check_schema("listening", &doc).unwrap();
        Self { url: doc["listening"].as_str().unwrap().to_string(), child }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Every file under `root`, relative path to bytes.
pub fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
