use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::commands::Inputs;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub timestamp: String,
    pub workers: usize,
}

impl Provenance {
    pub fn now(seed: Option<u64>) -> Self {
        Self {
            tool: "riskbound".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            timestamp: chrono::Utc::now().to_rfc3339(),
            workers: rayon::current_num_threads(),
        }
    }
}

/// Everything needed to rerun a command and check its numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub inputs: Inputs,
    pub outputs: Value,
    pub provenance: Provenance,
}

/// JSON paths at which two output trees differ.
pub fn differences(a: &Value, b: &Value) -> Vec<String> {
    let mut out = Vec::new();
    diff_into(a, b, String::from("outputs"), &mut out);
    out
}

fn diff_into(a: &Value, b: &Value, path: String, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (k, va) in x {
                match y.get(k) {
                    Some(vb) => diff_into(va, vb, format!("{path}.{k}"), out),
                    None => out.push(format!("{path}.{k}")),
                }
            }
            out.extend(
                y.keys()
                    .filter(|k| !x.contains_key(*k))
                    .map(|k| format!("{path}.{k}")),
            );
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (va, vb)) in x.iter().zip(y).enumerate() {
                diff_into(va, vb, format!("{path}[{i}]"), out);
            }
        }
        _ if a == b => {}
        _ => out.push(path),
    }
}
