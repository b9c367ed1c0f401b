use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use shiftbench::data::{load_dataset, load_schema, read_manifest, write_manifest, AttributedDataset, SplitManifest};
use shiftbench::harness::{
    aggregate_mean_std, percent_change, rank_methods, render_report, run_sweep_logged, MetricsRow, MetricsTable,
    Report as ReportKind, ReportFormat,
};
use shiftbench::rng::{derive_seed, digest_hex};
use shiftbench::sampler::{write_index_stream, MixtureSampler, SamplerState, Slot};
use shiftbench::shift::{build_manifest, make_test_split};
use shiftbench::sprites::{gen_sprites, SpriteAugmenter, COLOR_ATTR, SHAPE_ATTR};
use shiftbench::train::{evaluate_top1, model_digest, train, write_model, DatasetAccess, ModelSpec, SamplerMode};
use shiftbench::{Error, FieldError, TrainedModel32};

use crate::config::{Command, GenData, MakeShift, Report, RunConfig, Sample, Sweep, Train};
use crate::CliError;

/// What a successful command reports on stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// One-line JSON summary.
    pub summary: String,
    pub written: Vec<PathBuf>,
}

pub const SCHEMA_FILE: &str = "schema.json";
pub const DATASET_FILE: &str = "dataset.csv";

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))?;
    Ok(path.to_path_buf())
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Run(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Inputs must exist before anything runs.
fn require(path: &Path, key: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Validation(FieldError::new(format!("/{key}"), "missing")))
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn load_data(dir: &Path) -> Result<AttributedDataset, CliError> {
    let schema = load_schema(&read(&dir.join(SCHEMA_FILE))?)?;
    Ok(load_dataset(&schema, &read(&dir.join(DATASET_FILE))?)?)
}

fn load_manifest(path: &Path, ds: &AttributedDataset) -> Result<SplitManifest, CliError> {
    let m = read_manifest(path)?;
    m.check_against(ds)?;
    Ok(m)
}

pub fn dispatch(config: &RunConfig) -> Result<Outcome, CliError> {
    let seed = config.seed.unwrap_or(0);
    let digest = config.spec_digest.as_str();
    match &config.command {
        Command::GenData(c) => gen_data(c, seed, digest),
        Command::MakeShift(c) => make_shift(c, seed, digest),
        Command::Sample(c) => sample(c, seed, digest),
        Command::Train(c) => train_cmd(c, seed, digest),
        Command::Sweep(c) => sweep(c, seed, digest),
        Command::Report(c) => report(c, digest),
    }
}

fn gen_data(c: &GenData, seed: u64, digest: &str) -> Result<Outcome, CliError> {
    let mut ds = gen_sprites(c.per_cell, seed)?;
    if c.label == "color" {
        ds = ds.with_roles(COLOR_ATTR, SHAPE_ATTR)?;
    }
    let csv = ds.to_csv();
    let meta = json!({
        "cmd": "gen-data",
        "per_cell": c.per_cell,
        "seed": seed,
        "label": c.label,
        "records": ds.len(),
        "dataset_digest": digest_hex(csv.as_bytes()),
        "spec_digest": digest,
    });
    let written = vec![
        write(&c.out.join(SCHEMA_FILE), ds.schema().to_json() + "\n")?,
        write(&c.out.join(DATASET_FILE), csv)?,
        write(&c.out.join("meta.json"), meta.to_string() + "\n")?,
    ];
    Ok(Outcome {
        summary: json!({"cmd": "gen-data", "records": ds.len(), "spec_digest": digest}).to_string(),
        written,
    })
}

fn make_shift(c: &MakeShift, seed: u64, digest: &str) -> Result<Outcome, CliError> {
    require(&c.data, "data")?;
    let ds = load_data(&c.data)?;
    c.spec.validate(ds.schema())?;
    let test = make_test_split(&ds, c.spec.test_per_cell, derive_seed(seed, "cli/test"))?;
    let mut m = build_manifest(&ds, &c.spec, seed, &test)?;
    m.spec_digest = digest.to_string();
    write_manifest(&m, &c.out)?;
    Ok(Outcome {
        summary: json!({
            "cmd": "make-shift",
            "kind": c.spec.kind_name(),
            "train": m.train.len(),
            "val": m.val.len(),
            "test": m.test.len(),
            "spec_digest": digest,
        })
        .to_string(),
        written: vec![c.out.clone()],
    })
}

fn sample(c: &Sample, seed: u64, digest: &str) -> Result<Outcome, CliError> {
    require(&c.data, "data")?;
    require(&c.manifest, "manifest")?;
    let ds = load_data(&c.data)?;
    let m = load_manifest(&c.manifest, &ds)?;
    let weights: Vec<f64> = m.train.iter().map(|e| e.weight).collect();
    let mut lines = Vec::with_capacity(c.draws);
    match c.sampler {
        SamplerMode::Plain | SamplerMode::Reweight => {
            let mut s = match c.sampler {
                SamplerMode::Plain => SamplerState::uniform(weights.len(), seed)?,
                _ => SamplerState::new(&weights, seed)?,
            };
            let ids: Vec<u64> = s.draw(c.draws).into_iter().map(|i| m.train[i].id).collect();
            let mut buf = BufWriter::new(Vec::new());
            write_index_stream(&mut buf, ids).map_err(|e| io_err(&c.out, e))?;
            lines.push(String::from_utf8(buf.into_inner().unwrap_or_default()).unwrap_or_default());
        }
        SamplerMode::Mixture { alpha } => {
            let schema = ds.schema();
            let aug = (alpha > 0.0)
                .then(|| SpriteAugmenter::new(&ds, m.train_ids()))
                .transpose()?;
            let grid = (schema.num_labels() as u32, schema.num_nuisance() as u32);
            let mut s = MixtureSampler::new(
                SamplerState::new(&weights, seed)?,
                aug,
                alpha,
                grid,
                derive_seed(seed, "cli/mixture"),
            )?;
            for slot in s.draw(c.draws)? {
                lines.push(match slot {
                    Slot::Real(i) => format!("{}\n", m.train[i].id),
                    Slot::Augmented(r) => format!("aug:{}:{}:{}\n", r.base_id, r.label, r.nuisance),
                });
            }
        }
    }
    let meta =
        json!({"cmd": "sample", "mode": c.sampler.name(), "draws": c.draws, "seed": seed, "spec_digest": digest});
    let written = vec![
        write(&c.out, lines.concat())?,
        write(&sidecar(&c.out), meta.to_string() + "\n")?,
    ];
    Ok(Outcome {
        summary: json!({"cmd": "sample", "draws": c.draws, "spec_digest": digest}).to_string(),
        written,
    })
}

fn train_cmd(c: &Train, seed: u64, digest: &str) -> Result<Outcome, CliError> {
    require(&c.data, "data")?;
    require(&c.manifest, "manifest")?;
    let ds = load_data(&c.data)?;
    let m = load_manifest(&c.manifest, &ds)?;
    let data = DatasetAccess::new(&ds)?;
    let spec = ModelSpec {
        kind: c.model,
        input_dim: shiftbench::train::DataAccess::input_dim(&data),
        num_classes: ds.schema().num_labels(),
    };
    let trained: TrainedModel32 = train(spec, &c.train, &m, &data, c.sampler, seed)?;
    let test_top1 = if m.test.is_empty() {
        None
    } else {
        Some(evaluate_top1(&trained.model, &m.test, &data)?)
    };
    write_model(&c.out, &trained, test_top1, digest)?;
    let mut written = vec![c.out.clone()];
    if let Some(path) = &c.metrics_out {
        let row = MetricsRow {
            method: c.method.clone(),
            shift: c.shift.clone(),
            n: 0,
            seed,
            hyper: [("learning_rate".to_string(), c.train.learning_rate)].into(),
            val_top1: trained.best_val_top1,
            test_top1: test_top1.unwrap_or(0.0),
            model_digest: model_digest(&trained.model),
        };
        written.push(write(path, MetricsTable::new(vec![row])?.to_jsonl())?);
    }
    Ok(Outcome {
        summary: json!({
            "cmd": "train",
            "steps_run": trained.steps_run,
            "best_val_top1": trained.best_val_top1,
            "test_top1": test_top1,
            "spec_digest": digest,
        })
        .to_string(),
        written,
    })
}

fn sweep(c: &Sweep, seed: u64, digest: &str) -> Result<Outcome, CliError> {
    require(&c.data, "data")?;
    let ds = load_data(&c.data)?;
    if let Some(log) = &c.log {
        if let Some(dir) = log.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
    }
    let table = run_sweep_logged::<f32>(&c.sweep, &ds, seed, c.log.as_deref())?;
    let meta = json!({"cmd": "sweep", "rows": table.len(), "seed": seed, "spec_digest": digest});
    let written = vec![
        write(&c.out, table.to_jsonl())?,
        write(&sidecar(&c.out), meta.to_string() + "\n")?,
    ];
    Ok(Outcome {
        summary: json!({"cmd": "sweep", "rows": table.len(), "spec_digest": digest}).to_string(),
        written,
    })
}

fn report(c: &Report, digest: &str) -> Result<Outcome, CliError> {
    let mut rows = Vec::new();
    for (i, t) in c.tables.iter().enumerate() {
        require(t, &format!("tables/{i}"))?;
        rows.extend(MetricsTable::from_jsonl(&read(t)?)?.rows().iter().cloned());
    }
    let table = MetricsTable::new(rows)?;
    if table.is_empty() {
        return Err(Error::MissingCell("metrics table is empty".into()).into());
    }
    let matrix = percent_change(&table, &c.baseline, c.mode)?;
    let summary = aggregate_mean_std(&table);
    let ranking = rank_methods(&table)?;

    let mut written = Vec::new();
    let mut files = serde_json::Map::new();
    for &f in &c.formats {
        let mut outputs = vec![("percent_change", render_report(ReportKind::Matrix(&matrix), f)?)];
        if f != ReportFormat::Svg {
            outputs.push(("summary", render_report(ReportKind::Summary(&summary), f)?));
            outputs.push(("ranks", render_report(ReportKind::Ranking(&ranking), f)?));
        }
        for (stem, text) in outputs {
            let name = format!("{stem}.{}", f.extension());
            files.insert(name.clone(), Value::String(digest_hex(text.as_bytes())));
            written.push(write(&c.out.join(&name), text)?);
        }
    }
    let meta =
        json!({"cmd": "report", "baseline": c.baseline, "rows": table.len(), "files": files, "spec_digest": digest});
    written.push(write(&c.out.join("meta.json"), meta.to_string() + "\n")?);
    Ok(Outcome {
        summary: json!({"cmd": "report", "rows": table.len(), "files": written.len(), "spec_digest": digest})
            .to_string(),
        written,
    })
}
