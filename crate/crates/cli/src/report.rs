//! Structured run reports. Maps are ordered, so identical inputs and seeds
//! serialize to identical bytes.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommandEcho {
    pub name: String,
    pub model: String,
    pub arguments: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    pub warnings: Vec<String>,
    pub wellposedness: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub stream_id: u64,
    /// Independent sampled units (paths or replicas), one substream each.
    pub substreams: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: CommandEcho,
    pub input_digest: String,
    pub results: BTreeMap<String, Value>,
    pub diagnostics: Diagnostics,
    pub seed: Option<SeedRecord>,
}

impl Report {
    pub fn new(name: &str, model: &str, model_bytes: &[u8]) -> Self {
        Report {
            command: CommandEcho { name: name.into(), model: model.into(), arguments: BTreeMap::new() },
            input_digest: digest(model_bytes),
            results: BTreeMap::new(),
            diagnostics: Diagnostics::default(),
            seed: None,
        }
    }

    pub fn arg(&mut self, key: &str, value: impl Into<Value>) {
        self.command.arguments.insert(key.into(), value.into());
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.into(), value.into());
    }

    pub fn warn(&mut self, message: impl ToString) {
        self.diagnostics.warnings.push(message.to_string());
    }

    pub fn wellposed(&mut self, key: &str, value: impl Into<Value>) {
        self.diagnostics.wellposedness.insert(key.into(), value.into());
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// Flat `key: value` listing for terminals.
    pub fn to_human(&self) -> String {
        let mut out = format!("{} on {}\ninput {}\n", self.command.name, self.command.model, self.input_digest);
        for (k, v) in &self.results {
            out.push_str(&format!("  {k}: {}\n", compact(v)));
        }
        for (k, v) in &self.diagnostics.wellposedness {
            out.push_str(&format!("  [well-posedness] {k}: {}\n", compact(v)));
        }
        for w in &self.diagnostics.warnings {
            out.push_str(&format!("  warning: {w}\n"));
        }
        if let Some(s) = &self.seed {
            out.push_str(&format!(
                "  seed {} stream {} ({} substreams)\n",
                s.master_seed, s.stream_id, s.substreams
            ));
        }
        out
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::Array(a) if a.len() > 12 => format!("[{} values]", a.len()),
        other => other.to_string(),
    }
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{:x}", Sha256::digest(bytes))
}

/// JSON has no infinities or NaN; those become the strings `inf`, `-inf`, `nan`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

pub fn matrix(rows: &[Vec<f64>]) -> Value {
    Value::Array(rows.iter().map(|r| nums(r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_become_strings() {
        assert_eq!(num(f64::NEG_INFINITY), Value::String("-inf".into()));
        assert_eq!(num(0.5), serde_json::json!(0.5));
    }

    #[test]
    fn reports_serialize_deterministically() {
        let mut a = Report::new("analyze", "m.json", b"{}");
        a.put("z", 1.0);
        a.put("a", nums(&[1.0, 2.0]));
        let mut b = Report::new("analyze", "m.json", b"{}");
        b.put("a", nums(&[1.0, 2.0]));
        b.put("z", 1.0);
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.input_digest.starts_with("sha256:"));
    }
}
