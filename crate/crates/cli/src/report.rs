//! Deterministic report emission: a stable machine-readable JSON form
//! (sorted keys, exact rationals as strings) and a plain text rendering.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use ushift_core::doc::{format_rational, rational_approx};
use ushift_core::kms::Q;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Format {
    Text,
    Json,
}

pub struct Report {
    pub command: String,
    pub inputs: BTreeMap<String, String>,
    pub verdict: String,
    pub data: Value,
    pub lines: Vec<String>,
    pub exit_code: i32,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            verdict: String::new(),
            data: Value::Null,
            lines: Vec::new(),
            exit_code: 0,
        }
    }

    pub fn input(&mut self, name: &str, bytes: &[u8]) {
        self.inputs.insert(name.to_string(), digest(bytes));
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let v = json!({
                    "command": self.command,
                    "inputs": self.inputs,
                    "verdict": self.verdict,
                    "exit_code": self.exit_code,
                    "data": self.data,
                });
                let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Text => {
                let mut out = String::new();
                out.push_str(&format!("{}: {}\n", self.command, self.verdict));
                for l in &self.lines {
                    out.push_str(l);
                    out.push('\n');
                }
                out
            }
        }
    }
}

/// FNV-1a over the input bytes; enough to tie a report to its inputs.
pub fn digest(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Exact rational plus decimal approximation.
pub fn number(q: &Q) -> Value {
    json!({
        "exact": format_rational(q),
        "approx": rational_approx(q),
    })
}
