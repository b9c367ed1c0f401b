use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};
use shiftbench_cli::{merge_config, run_value, CliError};

#[derive(Parser)]
#[command(name = "shiftbench", version, about = "Controllable distribution-shift benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON config; its keys override the matching flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the sprites dataset.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        per_cell: Option<u64>,
        /// Label attribute: shape or color.
        #[arg(long)]
        label: Option<String>,
    },
    /// Build a split manifest for a shift spec.
    MakeShift {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<String>,
        /// Shift spec as inline JSON.
        #[arg(long)]
        spec: Option<String>,
    },
    /// Write a sampled index stream.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<String>,
        #[arg(long)]
        manifest: Option<String>,
        /// Sampler as inline JSON, e.g. '{"mode":"reweight"}'.
        #[arg(long)]
        sampler: Option<String>,
        #[arg(long)]
        draws: Option<u64>,
    },
    /// Train one model on a manifest.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<String>,
        #[arg(long)]
        manifest: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        sampler: Option<String>,
        /// Training settings as inline JSON.
        #[arg(long)]
        train: Option<String>,
        #[arg(long)]
        metrics_out: Option<String>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        shift: Option<String>,
    },
    /// Run a sweep into a metrics table.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<String>,
        /// Sweep spec as inline JSON.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long)]
        log: Option<String>,
    },
    /// Aggregate metrics tables into percent-change, summary and rank reports.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1..)]
        tables: Vec<String>,
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, num_args = 1..)]
        formats: Vec<String>,
    },
}

struct Flags(Map<String, Value>);

impl Flags {
    fn new(cmd: &str, common: &Common) -> Self {
        let mut f = Flags(Map::new());
        f.0.insert("cmd".into(), Value::String(cmd.into()));
        f.num("seed", common.seed);
        f.str("out", &common.out);
        f
    }

    fn str(&mut self, key: &str, v: &Option<String>) {
        if let Some(v) = v {
            self.0.insert(key.into(), Value::String(v.clone()));
        }
    }

    fn num(&mut self, key: &str, v: Option<u64>) {
        if let Some(v) = v {
            self.0.insert(key.into(), Value::from(v));
        }
    }

    /// Inline JSON; unparsable text is passed on as a string and fails validation.
    fn json(&mut self, key: &str, v: &Option<String>) {
        if let Some(v) = v {
            let parsed = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.clone()));
            self.0.insert(key.into(), parsed);
        }
    }

    fn list(&mut self, key: &str, v: &[String]) {
        if !v.is_empty() {
            self.0
                .insert(key.into(), v.iter().cloned().map(Value::String).collect());
        }
    }
}

fn flags(cmd: &Cmd) -> (Flags, Option<PathBuf>) {
    match cmd {
        Cmd::GenData {
            common,
            per_cell,
            label,
        } => {
            let mut f = Flags::new("gen-data", common);
            f.num("per_cell", *per_cell);
            f.str("label", label);
            (f, common.config.clone())
        }
        Cmd::MakeShift { common, data, spec } => {
            let mut f = Flags::new("make-shift", common);
            f.str("data", data);
            f.json("spec", spec);
            (f, common.config.clone())
        }
        Cmd::Sample {
            common,
            data,
            manifest,
            sampler,
            draws,
        } => {
            let mut f = Flags::new("sample", common);
            f.str("data", data);
            f.str("manifest", manifest);
            f.json("sampler", sampler);
            f.num("draws", *draws);
            (f, common.config.clone())
        }
        Cmd::Train {
            common,
            data,
            manifest,
            model,
            sampler,
            train,
            metrics_out,
            method,
            shift,
        } => {
            let mut f = Flags::new("train", common);
            f.str("data", data);
            f.str("manifest", manifest);
            f.json("model", model);
            f.json("sampler", sampler);
            f.json("train", train);
            f.str("metrics_out", metrics_out);
            f.str("method", method);
            f.str("shift", shift);
            (f, common.config.clone())
        }
        Cmd::Sweep {
            common,
            data,
            sweep,
            log,
        } => {
            let mut f = Flags::new("sweep", common);
            f.str("data", data);
            f.json("sweep", sweep);
            f.str("log", log);
            (f, common.config.clone())
        }
        Cmd::Report {
            common,
            tables,
            baseline,
            mode,
            formats,
        } => {
            let mut f = Flags::new("report", common);
            f.list("tables", tables);
            f.str("baseline", baseline);
            f.str("mode", mode);
            f.list("formats", formats);
            (f, common.config.clone())
        }
    }
}

fn load(path: Option<PathBuf>) -> Result<Option<Value>, CliError> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (flags, config) = flags(&cli.command);
    let merged = load(config).and_then(|c| merge_config(flags.0, c));
    let code = match merged {
        Ok((value, conflicts)) => {
            for key in conflicts {
                eprintln!(
                    "{}",
                    serde_json::json!({"warning": "config overrides flag", "key": key})
                );
            }
            run_value(&value)
        }
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
