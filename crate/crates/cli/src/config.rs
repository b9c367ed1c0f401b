//! Run configuration: one JSON object per invocation, tagged by `cmd`.

use std::path::PathBuf;

use serde_json::{Map, Value};
use shiftbench::harness::{PercentMode, ReportFormat, SweepSpec};
use shiftbench::json::{self, Object};
use shiftbench::rng::digest_hex;
use shiftbench::shift::ShiftSpec;
use shiftbench::train::{
    model_kind_from_value, sampler_mode_from_value, train_config_from_value, ModelKind, SamplerMode, TrainConfig,
};
use shiftbench::FieldError;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct GenData {
    pub per_cell: usize,
    /// Attribute used as the label; the other becomes the nuisance.
    pub label: String,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MakeShift {
    pub data: PathBuf,
    pub spec: ShiftSpec,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub data: PathBuf,
    pub manifest: PathBuf,
    pub sampler: SamplerMode,
    pub draws: usize,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Train {
    pub data: PathBuf,
    pub manifest: PathBuf,
    pub model: ModelKind,
    pub sampler: SamplerMode,
    pub train: TrainConfig,
    pub out: PathBuf,
    /// Optional one-row metrics table for `report`.
    pub metrics_out: Option<PathBuf>,
    pub method: String,
    pub shift: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub data: PathBuf,
    pub sweep: SweepSpec,
    pub out: PathBuf,
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tables: Vec<PathBuf>,
    pub baseline: String,
    pub mode: PercentMode,
    pub formats: Vec<ReportFormat>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    GenData(GenData),
    MakeShift(MakeShift),
    Sample(Sample),
    Train(Train),
    Sweep(Sweep),
    Report(Report),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenData(_) => "gen-data",
            Command::MakeShift(_) => "make-shift",
            Command::Sample(_) => "sample",
            Command::Train(_) => "train",
            Command::Sweep(_) => "sweep",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Master seed; absent only for `report`, which draws no randomness.
    pub seed: Option<u64>,
    pub command: Command,
    /// Digest of the config with every path removed.
    pub spec_digest: String,
}

pub const COMMANDS: [&str; 6] = ["gen-data", "make-shift", "sample", "train", "sweep", "report"];

/// Keys naming files or directories; excluded from the digest so relocated runs match.
const PATH_KEYS: [&str; 8] = [
    "out",
    "data",
    "manifest",
    "metrics_out",
    "log",
    "tables",
    "schema",
    "dataset",
];

fn config_digest(obj: &Object) -> String {
    let mut m: Map<String, Value> = obj.clone();
    for k in PATH_KEYS {
        m.remove(k);
    }
    // serde_json's default map is ordered, so this is canonical.
    digest_hex(Value::Object(m).to_string().as_bytes())
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let v: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    parse_value(&v)
}

pub fn parse_value(v: &Value) -> Result<RunConfig, CliError> {
    parse_inner(v).map_err(CliError::Validation)
}

fn path(obj: &Object, key: &str) -> Result<PathBuf, FieldError> {
    Ok(PathBuf::from(json::req_str(obj, key, "")?))
}

fn opt_path(obj: &Object, key: &str) -> Result<Option<PathBuf>, FieldError> {
    Ok(json::opt_str(obj, key, "")?.map(PathBuf::from))
}

fn sub<T>(obj: &Object, key: &str, parse: impl Fn(&Value) -> Result<T, FieldError>) -> Result<Option<T>, FieldError> {
    json::opt(obj, key)
        .map(|v| parse(v).map_err(|e| e.under(&format!("/{key}"))))
        .transpose()
}

fn parse_inner(v: &Value) -> Result<RunConfig, FieldError> {
    let obj = json::as_object(v, "")?;
    let cmd = json::req_str(obj, "cmd", "")?;
    if !COMMANDS.contains(&cmd) {
        return Err(FieldError::new("/cmd", "enum"));
    }
    let seed = json::opt_u64(obj, "seed", "")?;
    let allowed: &[&str] = match cmd {
        "gen-data" => &["cmd", "seed", "per_cell", "label", "out"],
        "make-shift" => &["cmd", "seed", "data", "spec", "out"],
        "sample" => &["cmd", "seed", "data", "manifest", "sampler", "draws", "out"],
        "train" => &[
            "cmd",
            "seed",
            "data",
            "manifest",
            "model",
            "sampler",
            "train",
            "out",
            "metrics_out",
            "method",
            "shift",
        ],
        "sweep" => &["cmd", "seed", "data", "sweep", "out", "log"],
        _ => &["cmd", "seed", "tables", "baseline", "mode", "formats", "out"],
    };
    json::no_unknown_keys(obj, allowed, "")?;
    if cmd != "report" && seed.is_none() {
        return Err(FieldError::new("/seed", "required"));
    }

    let command = match cmd {
        "gen-data" => {
            let per_cell = json::req_usize(obj, "per_cell", "")?;
            if per_cell == 0 {
                return Err(FieldError::new("/per_cell", "range"));
            }
            let label = json::opt_str(obj, "label", "")?.unwrap_or("shape").to_string();
            if label != "shape" && label != "color" {
                return Err(FieldError::new("/label", "enum"));
            }
            Command::GenData(GenData {
                per_cell,
                label,
                out: path(obj, "out")?,
            })
        }
        "make-shift" => Command::MakeShift(MakeShift {
            data: path(obj, "data")?,
            spec: sub(obj, "spec", ShiftSpec::from_value)?.ok_or_else(|| FieldError::new("/spec", "required"))?,
            out: path(obj, "out")?,
        }),
        "sample" => Command::Sample(Sample {
            data: path(obj, "data")?,
            manifest: path(obj, "manifest")?,
            sampler: sub(obj, "sampler", sampler_mode_from_value)?.unwrap_or(SamplerMode::Reweight),
            draws: json::req_usize(obj, "draws", "")?,
            out: path(obj, "out")?,
        }),
        "train" => Command::Train(Train {
            data: path(obj, "data")?,
            manifest: path(obj, "manifest")?,
            model: sub(obj, "model", model_kind_from_value)?.unwrap_or(ModelKind::Mlp1 { hidden: 64 }),
            sampler: sub(obj, "sampler", sampler_mode_from_value)?.unwrap_or(SamplerMode::Plain),
            train: sub(obj, "train", train_config_from_value)?.unwrap_or_default(),
            out: path(obj, "out")?,
            metrics_out: opt_path(obj, "metrics_out")?,
            method: json::opt_str(obj, "method", "")?.unwrap_or("model").to_string(),
            shift: json::opt_str(obj, "shift", "")?.unwrap_or("shift").to_string(),
        }),
        "sweep" => Command::Sweep(Sweep {
            data: path(obj, "data")?,
            sweep: sub(obj, "sweep", SweepSpec::from_value)?.ok_or_else(|| FieldError::new("/sweep", "required"))?,
            out: path(obj, "out")?,
            log: opt_path(obj, "log")?,
        }),
        _ => {
            let tables = match json::req(obj, "tables", "")? {
                Value::String(s) => vec![PathBuf::from(s)],
                Value::Array(a) if !a.is_empty() => a
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        x.as_str()
                            .map(PathBuf::from)
                            .ok_or_else(|| FieldError::new(format!("/tables/{i}"), "type"))
                    })
                    .collect::<Result<_, _>>()?,
                _ => return Err(FieldError::new("/tables", "type")),
            };
            let mode = match json::opt_str(obj, "mode", "")? {
                None | Some("pooled_mean") => PercentMode::PooledMean,
                Some("mean_of_ratios") => PercentMode::MeanOfRatios,
                Some(_) => return Err(FieldError::new("/mode", "enum")),
            };
            let formats = match json::opt(obj, "formats") {
                None => vec![ReportFormat::Csv, ReportFormat::Svg, ReportFormat::Json],
                Some(f) => f
                    .as_array()
                    .filter(|a| !a.is_empty())
                    .ok_or_else(|| FieldError::new("/formats", "type"))?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        x.as_str()
                            .and_then(|s| ReportFormat::parse(s).ok())
                            .ok_or_else(|| FieldError::new(format!("/formats/{i}"), "enum"))
                    })
                    .collect::<Result<_, _>>()?,
            };
            Command::Report(Report {
                tables,
                baseline: json::req_str(obj, "baseline", "")?.to_string(),
                mode,
                formats,
                out: path(obj, "out")?,
            })
        }
    };
    Ok(RunConfig {
        seed,
        command,
        spec_digest: config_digest(obj),
    })
}
