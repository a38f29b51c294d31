//! Project file reading and canonical writing.
//!
//! The canonical form sorts object keys, prints every floating-point value
//! with exactly six decimals and indents with two spaces, so equal projects
//! always produce identical bytes.

use std::fmt::Write as _;

use serde_json::Value;

use super::{validate, SceneError, SceneProject};

pub fn load_project(bytes: &[u8]) -> Result<SceneProject, SceneError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| SceneError::Parse(e.to_string()))?;
    let project: SceneProject = serde_path_to_error::deserialize(value).map_err(|e| SceneError::Schema {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })?;
    let violations = validate(&project);
    if !violations.is_empty() {
        return Err(SceneError::Invariant(violations));
    }
    Ok(project)
}

pub fn save_project(p: &SceneProject) -> Vec<u8> {
    let value = serde_json::to_value(p).expect("project serializes to JSON");
    to_canonical_json(&value).into_bytes()
}

/// Render any JSON value in the canonical text form.
pub fn to_canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, depth);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(out, depth);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                indent(out, depth + 1);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*key], depth + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(out, depth);
            out.push('}');
        }
    }
}

fn write_number(out: &mut String, n: &serde_json::Number) {
    if n.is_f64() {
        let v = n.as_f64().unwrap_or(0.0);
        let text = format!("{v:.6}");
        // -0.000000 and 0.000000 are the same value
        if text.trim_start_matches('-').bytes().all(|b| b == b'0' || b == b'.') {
            out.push_str(text.trim_start_matches('-'));
        } else {
            out.push_str(&text);
        }
    } else {
        let _ = write!(out, "{n}");
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}
