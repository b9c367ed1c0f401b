use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::data::AttributedDataset;
use crate::error::{Error, Result};
use crate::num::fmt9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    Correlated,
    Uncorrelated,
    Bulk,
    Lowdata,
}

impl Origin {
    pub const ALL: [Origin; 4] = [Origin::Correlated, Origin::Uncorrelated, Origin::Bulk, Origin::Lowdata];

    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Correlated => "correlated",
            Origin::Uncorrelated => "uncorrelated",
            Origin::Bulk => "bulk",
            Origin::Lowdata => "lowdata",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Origin::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::Format(format!("unknown origin {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainEntry {
    pub id: u64,
    pub weight: f64,
    pub origin: Origin,
    pub label_override: Option<u32>,
}

impl TrainEntry {
    pub fn new(id: u64, origin: Origin) -> Self {
        TrainEntry {
            id,
            weight: 1.0,
            origin,
            label_override: None,
        }
    }
}

/// Materialized train/val/test split. All lists are kept sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitManifest {
    pub seed: u64,
    pub spec_digest: String,
    pub train: Vec<TrainEntry>,
    pub val: Vec<u64>,
    pub test: Vec<u64>,
}

impl SplitManifest {
    pub(crate) fn sort(&mut self) {
        self.train.sort_by_key(|e| e.id);
        self.val.sort_unstable();
        self.test.sort_unstable();
    }

    pub fn train_ids(&self) -> Vec<u64> {
        self.train.iter().map(|e| e.id).collect()
    }

    pub fn count_origin(&self, origin: Origin) -> usize {
        self.train.iter().filter(|e| e.origin == origin).count()
    }

    /// Checks disjointness and weight validity.
    pub fn check_structure(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.train.len() + self.val.len() + self.test.len());
        let all = self
            .train
            .iter()
            .map(|e| e.id)
            .chain(self.val.iter().copied())
            .chain(self.test.iter().copied());
        for id in all {
            if !seen.insert(id) {
                return Err(Error::Format(format!(
                    "sample id {id} appears in more than one split slot"
                )));
            }
        }
        for e in &self.train {
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(Error::Format(format!(
                    "invalid weight {} for sample {}",
                    e.weight, e.id
                )));
            }
        }
        Ok(())
    }

    /// Checks the manifest against the dataset it was built from.
    pub fn check_against(&self, dataset: &AttributedDataset) -> Result<()> {
        self.check_structure()?;
        for id in self.val.iter().chain(&self.test) {
            dataset.get(*id)?;
        }
        for e in &self.train {
            let r = dataset.get(e.id)?;
            if let Some(l) = e.label_override {
                if l as usize >= dataset.schema().num_labels() || l == dataset.label_of(r) {
                    return Err(Error::Format(format!("invalid label override {l} for sample {}", e.id)));
                }
            }
        }
        Ok(())
    }

    /// Canonical serialization: fixed key order, ids ascending, nine significant digits.
    pub fn to_json(&self) -> String {
        let mut m = self.clone();
        m.sort();
        let mut s = String::with_capacity(64 + 80 * m.train.len() + 8 * (m.val.len() + m.test.len()));
        write!(s, "{{\"seed\":{},\"spec_digest\":", m.seed).unwrap();
        s.push_str(&serde_json::to_string(&m.spec_digest).unwrap());
        s.push_str(",\"train\":[");
        for (i, e) in m.train.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(
                s,
                "{{\"id\":{},\"w\":{},\"origin\":\"{}\",\"label_override\":",
                e.id,
                fmt9(e.weight),
                e.origin.as_str()
            )
            .unwrap();
            match e.label_override {
                Some(l) => write!(s, "{l}}}").unwrap(),
                None => s.push_str("null}"),
            }
        }
        s.push_str("],\"val\":");
        write_ids(&mut s, &m.val);
        s.push_str(",\"test\":");
        write_ids(&mut s, &m.test);
        s.push_str("}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawEntry {
            id: u64,
            w: f64,
            origin: String,
            label_override: Option<u32>,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            seed: u64,
            spec_digest: String,
            train: Vec<RawEntry>,
            val: Vec<u64>,
            test: Vec<u64>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        let train = raw
            .train
            .into_iter()
            .map(|e| {
                Ok(TrainEntry {
                    id: e.id,
                    weight: e.w,
                    origin: Origin::parse(&e.origin)?,
                    label_override: e.label_override,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut m = SplitManifest {
            seed: raw.seed,
            spec_digest: raw.spec_digest,
            train,
            val: raw.val,
            test: raw.test,
        };
        m.check_structure()?;
        m.sort();
        Ok(m)
    }
}

fn write_ids(s: &mut String, ids: &[u64]) {
    s.push('[');
    for (i, id) in ids.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{id}").unwrap();
    }
    s.push(']');
}

pub fn write_manifest(manifest: &SplitManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    manifest.check_structure()?;
    std::fs::write(path, manifest.to_json()).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<SplitManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SplitManifest::from_json(&text)
}
