//! Dotted-path access to configuration fields, e.g.
//! `reproduction.preconception.alpha_q`.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{config, Error, Result};

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Config(e.to_string()))
}

fn lookup<'a>(root: &'a mut Value, path: &str) -> Result<&'a mut Value> {
    let mut cur = root;
    for key in path.split('.') {
        cur = match cur {
            Value::Object(map) => match map.get_mut(key) {
                Some(v) => v,
                None => return config(format!("unknown parameter `{path}`: no field `{key}`")),
            },
            Value::Array(items) => {
                let i: usize = key.parse().map_err(|_| Error::Config(format!("unknown parameter `{path}`: `{key}` is not an index")))?;
                let n = items.len();
                match items.get_mut(i) {
                    Some(v) => v,
                    None => return config(format!("parameter `{path}`: index {i} out of range (len {n})")),
                }
            }
            _ => return config(format!("unknown parameter `{path}`: `{key}` has no fields")),
        };
    }
    Ok(cur)
}

/// Read a numeric field.
pub fn get_param<T: Serialize>(x: &T, path: &str) -> Result<f64> {
    let mut v = to_value(x)?;
    match lookup(&mut v, path)? {
        Value::Number(n) => Ok(n.as_f64().unwrap_or(f64::NAN)),
        Value::Bool(b) => Ok(if *b { 1.0 } else { 0.0 }),
        // a one-segment schedule reads as its level
        Value::Array(items) if items.len() == 1 && items[0].get("level").is_some() => {
            items[0]["level"].as_f64().ok_or_else(|| Error::Config(format!("`{path}` is not numeric")))
        }
        _ => config(format!("parameter `{path}` is not numeric")),
    }
}

/// Set a field from a JSON value and re-check the whole structure's types.
pub fn set_value<T: Serialize + DeserializeOwned>(x: &T, path: &str, value: Value) -> Result<T> {
    let mut v = to_value(x)?;
    let slot = lookup(&mut v, path)?;
    *slot = match &value {
        Value::Number(n) if slot.is_u64() || slot.is_i64() => {
            let f = n.as_f64().unwrap_or(f64::NAN);
            if f.fract() != 0.0 || f < 0.0 {
                return config(format!("parameter `{path}` needs a non-negative integer, got {f}"));
            }
            Value::from(f as u64)
        }
        Value::Number(n) if slot.is_boolean() => Value::Bool(n.as_f64() != Some(0.0)),
        _ => value,
    };
    serde_json::from_value(v).map_err(|e| Error::Config(format!("parameter `{path}`: {e}")))
}

pub fn set_param<T: Serialize + DeserializeOwned>(x: &T, path: &str, value: f64) -> Result<T> {
    let n = serde_json::Number::from_f64(value).ok_or_else(|| Error::Config(format!("parameter `{path}` must be finite")))?;
    set_value(x, path, Value::Number(n))
}

/// Parse `path=value` assignments; values are JSON, falling back to strings.
pub fn apply_assignments<T: Serialize + DeserializeOwned>(x: &T, assignments: &[String]) -> Result<T> {
    let mut out: T = serde_json::from_value(to_value(x)?).map_err(|e| Error::Config(e.to_string()))?;
    for a in assignments {
        let (path, raw) = a.split_once('=').ok_or_else(|| Error::Config(format!("expected path=value, got `{a}`")))?;
        let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        out = set_value(&out, path.trim(), value)?;
    }
    Ok(out)
}
