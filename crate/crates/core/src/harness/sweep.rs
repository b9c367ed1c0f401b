use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::AttributedDataset;
use crate::error::{Error, FieldError, Result};
use crate::json;
use crate::num::Scalar;
use crate::rng::derive_seed;
use crate::shift::{build_manifest, make_test_split, ShiftSpec, TestSplit};
use crate::train::{
    evaluate_top1, model_digest, model_kind_from_value, sampler_mode_from_value, train, train_config_from_value,
    transforms_from_value, DataAccess, DatasetAccess, ModelKind, ModelSpec, SamplerMode, TrainConfig, TransformConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub name: String,
    pub sampler: SamplerMode,
    pub transforms: TransformConfig,
    pub model: ModelKind,
}

/// A shift and the `N` values it is swept over. Unseen shifts take the single value 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftEntry {
    pub name: String,
    pub spec: ShiftSpec,
    pub n_values: Vec<usize>,
}

/// Hyperparameter axes. Combinations enumerate in key order with the last key varying fastest.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HyperGrid {
    axes: BTreeMap<String, Vec<f64>>,
}

pub const HYPER_KEYS: [&str; 2] = ["batch_size", "learning_rate"];

impl HyperGrid {
    pub fn new(axes: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        for (k, vals) in &axes {
            if !HYPER_KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unsupported hyperparameter {k:?}")));
            }
            if vals.is_empty() {
                return Err(Error::Config(format!("hyperparameter {k:?} has no values")));
            }
            let ok = match k.as_str() {
                "batch_size" => vals.iter().all(|&v| v >= 1.0 && v.fract() == 0.0),
                _ => vals.iter().all(|&v| v > 0.0 && v.is_finite()),
            };
            if !ok {
                return Err(Error::Config(format!("hyperparameter {k:?} has an invalid value")));
            }
        }
        Ok(HyperGrid { axes })
    }

    pub fn learning_rates(lrs: &[f64]) -> Result<Self> {
        Self::new(BTreeMap::from([("learning_rate".to_string(), lrs.to_vec())]))
    }

    pub fn combos(&self) -> Vec<BTreeMap<String, f64>> {
        let mut out = vec![BTreeMap::new()];
        for (k, vals) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|c| {
                    vals.iter().map(move |&v| {
                        let mut c = c.clone();
                        c.insert(k.clone(), v);
                        c
                    })
                })
                .collect();
        }
        out
    }

    fn apply(combo: &BTreeMap<String, f64>, base: &TrainConfig) -> TrainConfig {
        let mut c = base.clone();
        for (k, &v) in combo {
            match k.as_str() {
                "learning_rate" => c.learning_rate = v,
                "batch_size" => c.batch_size = v as usize,
                _ => unreachable!("validated in HyperGrid::new"),
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub methods: Vec<MethodSpec>,
    pub shifts: Vec<ShiftEntry>,
    pub seeds: Vec<u64>,
    pub hyper: HyperGrid,
    /// Shared training settings; per-method transforms and the hyper grid override it.
    pub train: TrainConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.shifts.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("sweep axes must be non-empty".into()));
        }
        let unique = |names: Vec<&str>| names.iter().collect::<BTreeSet<_>>().len() == names.len();
        if !unique(self.methods.iter().map(|m| m.name.as_str()).collect()) {
            return Err(Error::Config("method names must be unique".into()));
        }
        if !unique(self.shifts.iter().map(|s| s.name.as_str()).collect()) {
            return Err(Error::Config("shift names must be unique".into()));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(Error::Config("seeds must be unique".into()));
        }
        for s in &self.shifts {
            if s.n_values.is_empty() || s.n_values.iter().collect::<BTreeSet<_>>().len() != s.n_values.len() {
                return Err(Error::Config(format!(
                    "shift {:?}: n_values must be non-empty and unique",
                    s.name
                )));
            }
        }
        self.train.validate()
    }

    /// Number of table rows a full run produces.
    pub fn cell_count(&self) -> usize {
        let n: usize = self.shifts.iter().map(|s| s.n_values.len()).sum();
        self.methods.len() * n * self.seeds.len()
    }

    fn cells(&self) -> Vec<Cell<'_>> {
        let mut out = Vec::with_capacity(self.cell_count());
        for method in &self.methods {
            for shift in &self.shifts {
                for &n in &shift.n_values {
                    for &seed in &self.seeds {
                        out.push(Cell { method, shift, n, seed });
                    }
                }
            }
        }
        out
    }

    /// Parses a sweep object; error paths are relative to it.
    pub fn from_value(v: &Value) -> std::result::Result<Self, FieldError> {
        let obj = json::as_object(v, "")?;
        json::no_unknown_keys(obj, &["methods", "shifts", "seeds", "hyper", "train"], "")?;
        let array = |key: &str| {
            json::req(obj, key, "")?
                .as_array()
                .filter(|a| !a.is_empty())
                .ok_or_else(|| FieldError::new(format!("/{key}"), "type"))
        };

        let mut methods = Vec::new();
        for (i, m) in array("methods")?.iter().enumerate() {
            let path = format!("/methods/{i}");
            let o = json::as_object(m, &path)?;
            json::no_unknown_keys(o, &["name", "sampler", "model", "transforms", "transform_prob"], &path)?;
            let name = json::req_str(o, "name", &path)?.to_string();
            if methods.iter().any(|x: &MethodSpec| x.name == name) {
                return Err(FieldError::new(format!("{path}/name"), "duplicate"));
            }
            let sampler = match json::opt(o, "sampler") {
                Some(s) => sampler_mode_from_value(s).map_err(|e| e.under(&format!("{path}/sampler")))?,
                None => SamplerMode::Plain,
            };
            let model =
                model_kind_from_value(json::req(o, "model", &path)?).map_err(|e| e.under(&format!("{path}/model")))?;
            let prob = json::opt_f64(o, "transform_prob", &path)?;
            let transforms = match json::opt(o, "transforms") {
                Some(t) => transforms_from_value(t, prob).map_err(|e| e.under(&format!("{path}/transforms")))?,
                None => TransformConfig::default(),
            };
            methods.push(MethodSpec {
                name,
                sampler,
                transforms,
                model,
            });
        }

        let mut shifts = Vec::new();
        for (i, s) in array("shifts")?.iter().enumerate() {
            let path = format!("/shifts/{i}");
            let o = json::as_object(s, &path)?;
            json::no_unknown_keys(o, &["name", "spec", "n_values"], &path)?;
            let name = json::req_str(o, "name", &path)?.to_string();
            if shifts.iter().any(|x: &ShiftEntry| x.name == name) {
                return Err(FieldError::new(format!("{path}/name"), "duplicate"));
            }
            let spec =
                ShiftSpec::from_value(json::req(o, "spec", &path)?).map_err(|e| e.under(&format!("{path}/spec")))?;
            let n_values = match json::opt(o, "n_values") {
                None => vec![spec.n()],
                Some(v) => usize_list(v).map_err(|e| e.under(&format!("{path}/n_values")))?,
            };
            shifts.push(ShiftEntry { name, spec, n_values });
        }

        let seeds = match json::opt(obj, "seeds") {
            None => (0..5).collect(),
            Some(v) => usize_list(v)
                .map_err(|e| e.under("/seeds"))?
                .into_iter()
                .map(|s| s as u64)
                .collect(),
        };
        let hyper = match json::opt(obj, "hyper") {
            None => HyperGrid::default(),
            Some(h) => {
                let o = json::as_object(h, "/hyper")?;
                json::no_unknown_keys(o, &HYPER_KEYS, "/hyper")?;
                let mut axes = BTreeMap::new();
                for (k, v) in o {
                    let vals: Option<Vec<f64>> = v.as_array().and_then(|a| a.iter().map(Value::as_f64).collect());
                    match vals {
                        Some(vals) if !vals.is_empty() => {
                            axes.insert(k.clone(), vals);
                        }
                        _ => return Err(FieldError::new(format!("/hyper/{k}"), "type")),
                    }
                }
                HyperGrid::new(axes).map_err(|_| FieldError::new("/hyper", "range"))?
            }
        };
        let train = match json::opt(obj, "train") {
            None => TrainConfig::default(),
            Some(t) => train_config_from_value(t).map_err(|e| e.under("/train"))?,
        };
        let spec = SweepSpec {
            methods,
            shifts,
            seeds,
            hyper,
            train,
        };
        spec.validate().map_err(|_| FieldError::new("", "invalid"))?;
        Ok(spec)
    }
}

fn usize_list(v: &Value) -> std::result::Result<Vec<usize>, FieldError> {
    let a = v
        .as_array()
        .filter(|a| !a.is_empty())
        .ok_or_else(|| FieldError::new("", "type"))?;
    let out: Vec<usize> = a
        .iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| FieldError::new(format!("/{i}"), "type"))
        })
        .collect::<std::result::Result<_, _>>()?;
    if out.iter().collect::<BTreeSet<_>>().len() != out.len() {
        return Err(FieldError::new("", "duplicate"));
    }
    Ok(out)
}

/// One selected result per (method, shift, N, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub shift: String,
    pub n: usize,
    pub seed: u64,
    pub hyper: BTreeMap<String, f64>,
    pub val_top1: f64,
    pub test_top1: f64,
    pub model_digest: String,
}

impl MetricsRow {
    fn key(&self) -> (&str, &str, usize, u64) {
        (&self.method, &self.shift, self.n, self.seed)
    }
}

/// Rows sorted by (method, shift, N, seed), one per key.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    rows: Vec<MetricsRow>,
}

impl MetricsTable {
    pub fn new(mut rows: Vec<MetricsRow>) -> Result<Self> {
        rows.sort_by(|a, b| a.key().cmp(&b.key()));
        if let Some(w) = rows.windows(2).find(|w| w[0].key() == w[1].key()) {
            let (m, s, n, seed) = w[0].key();
            return Err(Error::Format(format!("duplicate metrics row ({m}, {s}, {n}, {seed})")));
        }
        for r in &rows {
            if !(0.0..=1.0).contains(&r.val_top1) || !(0.0..=1.0).contains(&r.test_top1) {
                return Err(Error::Format(format!(
                    "accuracy outside [0, 1] for method {}",
                    r.method
                )));
            }
        }
        Ok(MetricsTable { rows })
    }

    pub fn rows(&self) -> &[MetricsRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// JSON lines, one row per line, in table order.
    pub fn to_jsonl(&self) -> String {
        self.rows
            .iter()
            .map(|r| serde_json::to_string(r).unwrap() + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse(format!("metrics line {}: {e}", i + 1))))
            .collect::<Result<_>>()?;
        Self::new(rows)
    }
}

/// Index of the largest value, earliest on ties.
pub fn select_best(vals: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in vals.iter().enumerate() {
        if best.is_none_or(|b| v > vals[b]) {
            best = Some(i);
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
struct Cell<'a> {
    method: &'a MethodSpec,
    shift: &'a ShiftEntry,
    n: usize,
    seed: u64,
}

impl Cell<'_> {
    fn label(&self) -> String {
        format!(
            "{}/{}/n={}/seed={}",
            self.method.name, self.shift.name, self.n, self.seed
        )
    }

    fn key(&self) -> (String, String, usize, u64) {
        (self.method.name.clone(), self.shift.name.clone(), self.n, self.seed)
    }
}

/// Result of one cell: the selected row and the validation accuracy of every combination.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub row: MetricsRow,
    pub val_per_combo: Vec<f64>,
}

fn run_cell<T: Scalar, D: DataAccess>(
    spec: &SweepSpec,
    cell: Cell<'_>,
    data: &D,
    test: &TestSplit,
    master: u64,
) -> Result<CellOutcome> {
    let dataset = data.dataset();
    let coords = format!("{}/n={}/seed={}", cell.shift.name, cell.n, cell.seed);
    // Shared by every method so they see identical splits and initializations.
    let manifest = build_manifest(
        dataset,
        &cell.shift.spec.with_n(cell.n),
        derive_seed(master, &format!("sweep/manifest/{coords}")),
        test,
    )?;
    let train_seed = derive_seed(master, &format!("sweep/train/{coords}"));
    let model_spec = ModelSpec {
        kind: cell.method.model,
        input_dim: data.input_dim(),
        num_classes: dataset.schema().num_labels(),
    };
    let base = TrainConfig {
        transforms: cell.method.transforms.clone(),
        ..spec.train.clone()
    };
    let combos = spec.hyper.combos();
    let mut vals = Vec::with_capacity(combos.len());
    let mut best: Option<(usize, crate::train::TrainedModel<T>)> = None;
    for (i, combo) in combos.iter().enumerate() {
        let config = HyperGrid::apply(combo, &base);
        let trained = train::<T, D>(model_spec, &config, &manifest, data, cell.method.sampler, train_seed)?;
        vals.push(trained.best_val_top1);
        if best
            .as_ref()
            .is_none_or(|(_, b)| trained.best_val_top1 > b.best_val_top1)
        {
            best = Some((i, trained));
        }
    }
    let (idx, chosen) = best.expect("hyper grid has at least one combination");
    debug_assert_eq!(select_best(&vals), Some(idx));
    let test_top1 = evaluate_top1(&chosen.model, &manifest.test, data)?;
    Ok(CellOutcome {
        row: MetricsRow {
            method: cell.method.name.clone(),
            shift: cell.shift.name.clone(),
            n: cell.n,
            seed: cell.seed,
            hyper: combos[idx].clone(),
            val_top1: chosen.best_val_top1,
            test_top1,
            model_digest: model_digest(&chosen.model),
        },
        val_per_combo: vals,
    })
}

/// Append-only JSON-lines log of completed cells.
struct RunLog {
    file: Mutex<File>,
}

impl RunLog {
    /// Opens or creates the log, drops a torn final line, and returns the rows already present.
    fn open(path: &Path) -> Result<(RunLog, Vec<MetricsRow>)> {
        let io = |e| Error::io(path, e);
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)
            .map_err(io)?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(io)?;
        let complete = text.rfind('\n').map_or(0, |i| i + 1);
        if complete < text.len() {
            file.set_len(complete as u64).map_err(io)?;
            file.seek(SeekFrom::End(0)).map_err(io)?;
        }
        let rows = text[..complete]
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| Error::Parse(format!("run log {}: {e}", path.display()))))
            .collect::<Result<Vec<MetricsRow>>>()?;
        Ok((RunLog { file: Mutex::new(file) }, rows))
    }

    fn append(&self, row: &MetricsRow, path: &Path) -> Result<()> {
        let line = serde_json::to_string(row).unwrap() + "\n";
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Runs every (method, shift, N, seed) cell and selects one hyperparameter combination per cell.
pub fn run_sweep<T: Scalar>(spec: &SweepSpec, dataset: &AttributedDataset, seed: u64) -> Result<MetricsTable> {
    run_sweep_logged::<T>(spec, dataset, seed, None)
}

/// [`run_sweep`] with an optional run log. Cells already in the log are skipped and their
/// logged rows reused; new cells are appended as they finish.
pub fn run_sweep_logged<T: Scalar>(
    spec: &SweepSpec,
    dataset: &AttributedDataset,
    seed: u64,
    log: Option<&Path>,
) -> Result<MetricsTable> {
    Ok(run_sweep_detailed::<T>(spec, dataset, seed, log)?.0)
}

/// As [`run_sweep_logged`], also returning the outcomes of the cells run in this call.
pub fn run_sweep_detailed<T: Scalar>(
    spec: &SweepSpec,
    dataset: &AttributedDataset,
    seed: u64,
    log: Option<&Path>,
) -> Result<(MetricsTable, Vec<CellOutcome>)> {
    spec.validate()?;
    for s in &spec.shifts {
        s.spec.validate(dataset.schema()).map_err(|e| Error::InCell {
            cell: s.name.clone(),
            source: Box::new(e),
        })?;
    }
    let cells = spec.cells();
    let (log, mut done) = match log {
        Some(p) => {
            let (l, rows) = RunLog::open(p)?;
            (Some((l, p)), rows)
        }
        None => (None, Vec::new()),
    };
    let wanted: BTreeSet<_> = cells.iter().map(Cell::key).collect();
    done.retain(|r| wanted.contains(&(r.method.clone(), r.shift.clone(), r.n, r.seed)));
    let finished: BTreeSet<_> = done
        .iter()
        .map(|r| (r.method.clone(), r.shift.clone(), r.n, r.seed))
        .collect();
    let pending: Vec<Cell<'_>> = cells.into_iter().filter(|c| !finished.contains(&c.key())).collect();

    let data = DatasetAccess::new(dataset)?;
    let mut tests: HashMap<&str, TestSplit> = HashMap::new();
    for s in &spec.shifts {
        let t = make_test_split(
            dataset,
            s.spec.test_per_cell,
            derive_seed(seed, &format!("sweep/test/{}", s.name)),
        )
        .map_err(|e| Error::InCell {
            cell: s.name.clone(),
            source: Box::new(e),
        })?;
        tests.insert(&s.name, t);
    }

    let results: Vec<Result<CellOutcome>> = pending
        .par_iter()
        .map(|cell| {
            let out = run_cell::<T, _>(spec, *cell, &data, &tests[cell.shift.name.as_str()], seed).map_err(|e| {
                Error::InCell {
                    cell: cell.label(),
                    source: Box::new(e),
                }
            })?;
            if let Some((l, p)) = &log {
                l.append(&out.row, p)?;
            }
            Ok(out)
        })
        .collect();
    let outcomes = results.into_iter().collect::<Result<Vec<_>>>()?;
    done.extend(outcomes.iter().map(|o| o.row.clone()));
    Ok((MetricsTable::new(done)?, outcomes))
}
