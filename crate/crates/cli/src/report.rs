use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use hypergraphon::rational::{self, Rational};

/// The exit status of a failed run.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "usage",
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            kind: "malformed_input",
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            kind: "io",
            message: message.into(),
        }
    }
}

impl From<hypergraphon::Error> for Failure {
    fn from(e: hypergraphon::Error) -> Self {
        use hypergraphon::Error::*;
        let (code, kind) = match &e {
            WorkBound { .. } => (4, "work_bound"),
            CapExceeded { .. } => (4, "cap_exceeded"),
            InvalidArgument(_) => (2, "usage"),
            Format(_) | InvalidEdge(_) | InvalidPermutation(_) | LengthMismatch { .. } => (3, "malformed_input"),
            ArityMismatch { .. } | ResolutionMismatch { .. } | ZeroArity | ArityTooLarge(_) | EmptyTarget => {
                (3, "malformed_input")
            }
            Internal(_) => (1, "internal"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

/// An input file read once: its text and digest.
pub struct Input {
    pub role: &'static str,
    pub text: String,
    pub sha256: String,
}

impl Input {
    pub fn read(role: &'static str, path: &Path) -> Result<Self, Failure> {
        let bytes = fs::read(path).map_err(|e| Failure::input(format!("cannot read {role}: {e}")))?;
        let sha256 = hex::encode(Sha256::digest(&bytes));
        let text = String::from_utf8(bytes).map_err(|_| Failure::input(format!("{role} is not UTF-8")))?;
        Ok(Input { role, text, sha256 })
    }
}

/// Everything that determines a report. Worker count is excluded on purpose:
/// results do not depend on it.
pub struct Manifest {
    pub subcommand: &'static str,
    pub inputs: Vec<(&'static str, String)>,
    pub params: Map<String, Value>,
}

impl Manifest {
    pub fn new(subcommand: &'static str, inputs: &[&Input]) -> Self {
        Manifest {
            subcommand,
            inputs: inputs.iter().map(|i| (i.role, i.sha256.clone())).collect(),
            params: Map::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.to_string(), value.into());
    }

    pub fn to_value(&self) -> Value {
        json!({
            "tool": "hypergraphon",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "inputs": self.inputs.iter().map(|(r, d)| json!({"role": r, "sha256": d})).collect::<Vec<_>>(),
            "params": Value::Object(self.params.clone()),
        })
    }
}

/// Artifact produced by a subcommand: written to `--output` when given,
/// otherwise embedded in the report.
pub enum Artifact {
    None,
    Json(String),
    Text(String),
}

pub fn rat(r: &Rational) -> Value {
    Value::String(rational::format(r))
}

/// Floats are printed with 12 significant digits.
pub fn float(x: f64) -> Value {
    Value::String(format!("{x:.11e}"))
}

pub fn big(x: u128) -> Value {
    match u64::try_from(x) {
        Ok(v) => json!(v),
        Err(_) => Value::String(x.to_string()),
    }
}

pub fn render(
    manifest: &Manifest,
    result: Value,
    artifact: Artifact,
    output: Option<&Path>,
) -> Result<String, Failure> {
    let mut report = Map::new();
    report.insert("manifest".into(), manifest.to_value());
    report.insert("result".into(), result);
    let body = match &artifact {
        Artifact::None => None,
        Artifact::Json(s) | Artifact::Text(s) => Some(s),
    };
    if let Some(body) = body {
        match output {
            Some(path) => {
                fs::write(path, body).map_err(|e| Failure::io(format!("cannot write output: {e}")))?;
                report.insert(
                    "artifact".into(),
                    json!({"sha256": hex::encode(Sha256::digest(body.as_bytes()))}),
                );
            }
            None => {
                let value = match &artifact {
                    Artifact::Json(s) => serde_json::from_str(s).expect("artifacts are valid JSON"),
                    _ => Value::String(body.clone()),
                };
                report.insert("artifact".into(), value);
            }
        }
    }
    Ok(serde_json::to_string_pretty(&Value::Object(report)).expect("report serialization") + "\n")
}

pub fn render_failure(failure: &Failure) -> String {
    let mut report = Map::new();
    report.insert(
        "error".into(),
        json!({"kind": failure.kind, "exit_code": failure.code, "message": failure.message}),
    );
    serde_json::to_string_pretty(&Value::Object(report)).expect("report serialization") + "\n"
}
