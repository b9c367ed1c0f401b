//! Config-driven pipeline driver: `gen-data`, `make-shift`, `sample`, `train`, `sweep`, `report`.
//!
//! Every command is described by one JSON object (see [`parse_config`]). Exit status is 0 on
//! success, 1 when the inputs are invalid, 2 when the run itself fails.

mod config;
mod run;

use serde_json::{json, Map, Value};
use shiftbench::FieldError;
use thiserror::Error;

pub use config::{
    parse_config, parse_value, Command, GenData, MakeShift, Report, RunConfig, Sample, Sweep, Train, COMMANDS,
};
pub use run::{dispatch, Outcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error at {}: {}", .0.path, .0.reason)]
    Validation(FieldError),
    #[error(transparent)]
    Run(#[from] shiftbench::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 1,
            CliError::Run(e) if e.is_precondition() => 1,
            CliError::Run(_) => 2,
        }
    }

    /// Single-line machine-readable record.
    pub fn record(&self) -> String {
        let v = match self {
            CliError::Parse(m) => json!({"error": "ParseError", "message": m}),
            CliError::Validation(f) => json!({"error": "ValidationError", "path": f.path, "reason": f.reason}),
            CliError::Run(e) => json!({"error": e.kind(), "message": e.to_string()}),
        };
        v.to_string()
    }
}

/// Overlays a config object on flag values. Config entries win; each key set both ways with
/// different values is returned so the caller can warn.
pub fn merge_config(flags: Map<String, Value>, config: Option<Value>) -> Result<(Value, Vec<String>), CliError> {
    let mut merged = flags;
    let mut conflicts = Vec::new();
    if let Some(cfg) = config {
        let Value::Object(cfg) = cfg else {
            return Err(CliError::Validation(FieldError::new("", "type")));
        };
        for (k, v) in cfg {
            if merged.get(&k).is_some_and(|f| *f != v) {
                conflicts.push(k.clone());
            }
            merged.insert(k, v);
        }
    }
    Ok((Value::Object(merged), conflicts))
}

/// Parses, runs and reports one invocation; returns the exit code.
pub fn run_value(v: &Value) -> i32 {
    match parse_value(v).and_then(|c| dispatch(&c)) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            0
        }
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}
