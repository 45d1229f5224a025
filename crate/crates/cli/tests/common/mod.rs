//! Shared helpers for the binary tests: scratch directories, a runner for
//! the `chtn` executable, and a validator for the JSON schemas shipped in
//! `schemas/`.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value;

static COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Self-cleaning scratch directory under the system temp dir.
pub struct TempDir {
    path: PathBuf,
}

impl TempDir {
    pub fn new(tag: &str) -> TempDir {
        let unique = format!(
            "chtn-test-{tag}-{}-{}",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::SeqCst)
        );
        let path = std::env::temp_dir().join(unique);
        fs::create_dir_all(&path).expect("create scratch directory");
        TempDir { path }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn out_arg(&self) -> String {
        self.path.display().to_string()
    }

    pub fn read(&self, name: &str) -> String {
        fs::read_to_string(self.join(name))
            .unwrap_or_else(|e| panic!("read {name} in {:?}: {e}", self.path))
    }

    pub fn read_json(&self, name: &str) -> Value {
        serde_json::from_str(&self.read(name))
            .unwrap_or_else(|e| panic!("parse {name} in {:?}: {e}", self.path))
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.path);
    }
}

pub struct CmdResult {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the `chtn` binary with a clean `CHTN_OUT`, plus any extra
/// environment entries.
pub fn run_chtn_env(args: &[&str], envs: &[(&str, &str)]) -> CmdResult {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_chtn"));
    cmd.args(args).env_remove("CHTN_OUT");
    for (key, value) in envs {
        cmd.env(key, value);
    }
    let output = cmd.output().expect("run chtn binary");
    CmdResult {
        code: output.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&output.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
    }
}

pub fn run_chtn(args: &[&str]) -> CmdResult {
    run_chtn_env(args, &[])
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

/// Asserts that the JSON file conforms to the named schema from `schemas/`.
pub fn assert_schema(schema_name: &str, json_path: &Path) {
    let schema_path = schema_dir().join(schema_name);
    let schema: Value = serde_json::from_str(
        &fs::read_to_string(&schema_path)
            .unwrap_or_else(|e| panic!("read schema {schema_path:?}: {e}")),
    )
    .expect("schema parses");
    let value: Value = serde_json::from_str(
        &fs::read_to_string(json_path).unwrap_or_else(|e| panic!("read {json_path:?}: {e}")),
    )
    .unwrap_or_else(|e| panic!("parse {json_path:?}: {e}"));
    if let Err(violation) = validate(&schema, &value, "$") {
        panic!("{json_path:?} violates {schema_name}: {violation}");
    }
}

fn type_matches(ty: &str, value: &Value) -> bool {
    match ty {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        "integer" => value.as_i64().is_some() || value.as_u64().is_some(),
        "number" => value.is_number(),
        _ => false,
    }
}

/// Minimal JSON Schema checker covering the subset used by `schemas/`:
/// `type` (string or list), `enum`, `required`, `properties`,
/// `additionalProperties` (boolean), `items`, `minimum`.
pub fn validate(schema: &Value, value: &Value, path: &str) -> Result<(), String> {
    let schema = schema
        .as_object()
        .ok_or_else(|| format!("{path}: schema node is not an object"))?;

    if let Some(ty) = schema.get("type") {
        let ok = match ty {
            Value::String(t) => type_matches(t, value),
            Value::Array(options) => options
                .iter()
                .filter_map(Value::as_str)
                .any(|t| type_matches(t, value)),
            _ => return Err(format!("{path}: malformed type keyword")),
        };
        if !ok {
            return Err(format!("{path}: value {value} does not match type {ty}"));
        }
    }

    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            return Err(format!("{path}: value {value} not in enum {allowed:?}"));
        }
    }

    if let Some(minimum) = schema.get("minimum").and_then(Value::as_f64) {
        if let Some(x) = value.as_f64() {
            if x < minimum {
                return Err(format!("{path}: value {x} below minimum {minimum}"));
            }
        }
    }

    if let Some(obj) = value.as_object() {
        if let Some(required) = schema.get("required").and_then(Value::as_array) {
            for key in required.iter().filter_map(Value::as_str) {
                if !obj.contains_key(key) {
                    return Err(format!("{path}: missing required key {key:?}"));
                }
            }
        }
        let properties = schema.get("properties").and_then(Value::as_object);
        if let Some(props) = properties {
            for (key, sub) in props {
                if let Some(v) = obj.get(key) {
                    validate(sub, v, &format!("{path}.{key}"))?;
                }
            }
        }
        if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
            for key in obj.keys() {
                if properties.is_none_or(|p| !p.contains_key(key)) {
                    return Err(format!("{path}: unexpected key {key:?}"));
                }
            }
        }
    }

    if let Some(items) = value.as_array() {
        if let Some(item_schema) = schema.get("items") {
            for (idx, item) in items.iter().enumerate() {
                validate(item_schema, item, &format!("{path}[{idx}]"))?;
            }
        }
    }

    Ok(())
}

/// Parses the data rows of a two-column residual CSV.
pub fn parse_residual_csv(text: &str) -> Vec<(u64, f64)> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tick,residual"), "residual CSV header");
    lines
        .map(|line| {
            let (tick, residual) = line.split_once(',').expect("two columns");
            (tick.parse().unwrap(), residual.parse().unwrap())
        })
        .collect()
}
