use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde_json::Value;

use crate::data::AttributeSchema;
use crate::error::{Error, FieldError, Result};
use crate::json::{self, Object};
use crate::num::fmt9;
use crate::rng::digest_hex;

/// How the low-data sample count is spread over the constrained values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMode {
    /// `n` samples for each constrained value.
    #[default]
    PerValue,
    /// `n` samples in total across the constrained region.
    Total,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShiftKind {
    SpuriousCorrelation {
        /// label value -> nuisance value it is correlated with
        mapping: BTreeMap<u32, u32>,
        n_uncorrelated: usize,
    },
    LowDataDrift {
        constrained: BTreeSet<u32>,
        n: usize,
        mode: CountMode,
    },
    UnseenDataShift {
        constrained: BTreeSet<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeCap {
    pub n_total: usize,
    pub ratio: f64,
}

impl SizeCap {
    pub fn lowdata_count(&self) -> usize {
        (self.ratio * self.n_total as f64).round() as usize
    }
}

/// Declarative shift recipe plus the conditions applied on top of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpec {
    pub kind: ShiftKind,
    pub noise_p: f64,
    pub size_cap: Option<SizeCap>,
    pub test_per_cell: usize,
    pub val_fraction: f64,
}

pub const DEFAULT_VAL_FRACTION: f64 = 0.1;

impl ShiftSpec {
    pub fn new(kind: ShiftKind, test_per_cell: usize) -> Self {
        ShiftSpec {
            kind,
            noise_p: 0.0,
            size_cap: None,
            test_per_cell,
            val_fraction: DEFAULT_VAL_FRACTION,
        }
    }

    pub fn spurious(mapping: impl IntoIterator<Item = (u32, u32)>, n: usize, test_per_cell: usize) -> Self {
        Self::new(
            ShiftKind::SpuriousCorrelation {
                mapping: mapping.into_iter().collect(),
                n_uncorrelated: n,
            },
            test_per_cell,
        )
    }

    pub fn low_data(constrained: impl IntoIterator<Item = u32>, n: usize, test_per_cell: usize) -> Self {
        Self::new(
            ShiftKind::LowDataDrift {
                constrained: constrained.into_iter().collect(),
                n,
                mode: CountMode::PerValue,
            },
            test_per_cell,
        )
    }

    pub fn unseen(constrained: impl IntoIterator<Item = u32>, test_per_cell: usize) -> Self {
        Self::new(
            ShiftKind::UnseenDataShift {
                constrained: constrained.into_iter().collect(),
            },
            test_per_cell,
        )
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ShiftKind::SpuriousCorrelation { .. } => "spurious_correlation",
            ShiftKind::LowDataDrift { .. } => "low_data",
            ShiftKind::UnseenDataShift { .. } => "unseen",
        }
    }

    /// The sample-count parameter `N` of the shift.
    pub fn n(&self) -> usize {
        match &self.kind {
            ShiftKind::SpuriousCorrelation { n_uncorrelated, .. } => *n_uncorrelated,
            ShiftKind::LowDataDrift { n, .. } => *n,
            ShiftKind::UnseenDataShift { .. } => 0,
        }
    }

    /// Copy with `N` replaced. Unseen shifts have no `N` and are returned unchanged.
    pub fn with_n(&self, n: usize) -> Self {
        let mut s = self.clone();
        match &mut s.kind {
            ShiftKind::SpuriousCorrelation { n_uncorrelated, .. } => *n_uncorrelated = n,
            ShiftKind::LowDataDrift { n: cur, .. } => *cur = n,
            ShiftKind::UnseenDataShift { .. } => {}
        }
        s
    }

    /// Schema-independent checks.
    pub fn check(&self) -> std::result::Result<(), FieldError> {
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(FieldError::new("/noise_p", "range"));
        }
        if self.test_per_cell == 0 {
            return Err(FieldError::new("/test_per_cell", "range"));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(FieldError::new("/val_fraction", "range"));
        }
        if let Some(cap) = &self.size_cap {
            if cap.n_total == 0 {
                return Err(FieldError::new("/size_cap/n_total", "range"));
            }
            if !(0.0..=1.0).contains(&cap.ratio) {
                return Err(FieldError::new("/size_cap/ratio", "range"));
            }
        }
        match &self.kind {
            ShiftKind::SpuriousCorrelation { n_uncorrelated, .. } if *n_uncorrelated < 1 => {
                Err(FieldError::new("/n", "range"))
            }
            ShiftKind::LowDataDrift { n, .. } if *n < 1 => Err(FieldError::new("/n", "range")),
            _ => Ok(()),
        }
    }

    /// Full validation against the schema the shift will act on.
    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        self.check().map_err(|e| Error::Config(e.to_string()))?;
        let (nl, na) = (schema.num_labels() as u32, schema.num_nuisance() as u32);
        match &self.kind {
            ShiftKind::SpuriousCorrelation { mapping, .. } => {
                for (&l, &a) in mapping {
                    if l >= nl || a >= na {
                        return Err(Error::Mapping(format!("{l} -> {a} references an unknown value")));
                    }
                }
                if let Some(l) = (0..nl).find(|l| !mapping.contains_key(l)) {
                    return Err(Error::Mapping(format!("label value {l} has no mapped nuisance value")));
                }
                if nl <= na {
                    let targets: BTreeSet<u32> = mapping.values().copied().collect();
                    if targets.len() != mapping.len() {
                        return Err(Error::Mapping("mapping is not injective".into()));
                    }
                }
            }
            ShiftKind::LowDataDrift { constrained, .. } | ShiftKind::UnseenDataShift { constrained } => {
                if let Some(v) = constrained.iter().find(|&&v| v >= na) {
                    return Err(Error::Mapping(format!("constrained value {v} is not a nuisance value")));
                }
                if matches!(self.kind, ShiftKind::UnseenDataShift { .. }) {
                    let seen = na as usize - constrained.len();
                    if seen <= 1 {
                        return Err(Error::Constraint(format!(
                            "unseen shift leaves {seen} seen nuisance value(s); at least two are required"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON: fixed key order, sorted mapping and constrained set, nine significant digits.
    pub fn to_canonical_json(&self) -> String {
        let (mapping, n, constrained, mode) = match &self.kind {
            ShiftKind::SpuriousCorrelation {
                mapping,
                n_uncorrelated,
            } => (mapping.clone(), *n_uncorrelated, BTreeSet::new(), CountMode::PerValue),
            ShiftKind::LowDataDrift { constrained, n, mode } => (BTreeMap::new(), *n, constrained.clone(), *mode),
            ShiftKind::UnseenDataShift { constrained } => {
                (BTreeMap::new(), 0, constrained.clone(), CountMode::PerValue)
            }
        };
        let mut s = format!("{{\"kind\":\"{}\",\"mapping\":{{", self.kind_name());
        for (i, (l, a)) in mapping.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "\"{l}\":{a}").unwrap();
        }
        write!(s, "}},\"n\":{n},\"constrained\":[").unwrap();
        for (i, v) in constrained.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{v}").unwrap();
        }
        write!(s, "],\"noise_p\":{},\"size_cap\":", fmt9(self.noise_p)).unwrap();
        match &self.size_cap {
            Some(c) => write!(s, "{{\"n_total\":{},\"ratio\":{}}}", c.n_total, fmt9(c.ratio)).unwrap(),
            None => s.push_str("null"),
        }
        write!(
            s,
            ",\"test_per_cell\":{},\"val_fraction\":{}",
            self.test_per_cell,
            fmt9(self.val_fraction)
        )
        .unwrap();
        if mode == CountMode::Total {
            s.push_str(",\"n_mode\":\"total\"");
        }
        s.push('}');
        s
    }

    /// Lowercase hex FNV-1a digest of the canonical JSON.
    pub fn digest(&self) -> String {
        digest_hex(self.to_canonical_json().as_bytes())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("shift spec: {e}")))?;
        Self::from_value(&v).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses and checks a spec object; error paths are relative to the object.
    pub fn from_value(v: &Value) -> std::result::Result<Self, FieldError> {
        let obj = json::as_object(v, "")?;
        json::no_unknown_keys(
            obj,
            &[
                "kind",
                "mapping",
                "n",
                "constrained",
                "noise_p",
                "size_cap",
                "test_per_cell",
                "val_fraction",
                "n_mode",
            ],
            "",
        )?;
        let kind = match json::req_str(obj, "kind", "")? {
            "spurious_correlation" => {
                let mapping = parse_mapping(obj)?;
                ShiftKind::SpuriousCorrelation {
                    mapping,
                    n_uncorrelated: json::req_usize(obj, "n", "")?,
                }
            }
            "low_data" => {
                let mode = match json::opt_str(obj, "n_mode", "")? {
                    None | Some("per_value") => CountMode::PerValue,
                    Some("total") => CountMode::Total,
                    Some(_) => return Err(FieldError::new("/n_mode", "enum")),
                };
                ShiftKind::LowDataDrift {
                    constrained: parse_constrained(obj)?,
                    n: json::req_usize(obj, "n", "")?,
                    mode,
                }
            }
            "unseen" => ShiftKind::UnseenDataShift {
                constrained: parse_constrained(obj)?,
            },
            _ => return Err(FieldError::new("/kind", "enum")),
        };
        let size_cap = match json::opt(obj, "size_cap") {
            None => None,
            Some(v) => {
                let cap = json::as_object(v, "/size_cap")?;
                json::no_unknown_keys(cap, &["n_total", "ratio"], "/size_cap")?;
                Some(SizeCap {
                    n_total: json::req_usize(cap, "n_total", "/size_cap")?,
                    ratio: json::opt_f64(cap, "ratio", "/size_cap")?
                        .ok_or_else(|| FieldError::new("/size_cap/ratio", "required"))?,
                })
            }
        };
        let spec = ShiftSpec {
            kind,
            noise_p: json::opt_f64(obj, "noise_p", "")?.unwrap_or(0.0),
            size_cap,
            test_per_cell: json::req_usize(obj, "test_per_cell", "")?,
            val_fraction: json::opt_f64(obj, "val_fraction", "")?.unwrap_or(DEFAULT_VAL_FRACTION),
        };
        spec.check()?;
        Ok(spec)
    }
}

fn parse_mapping(obj: &Object) -> std::result::Result<BTreeMap<u32, u32>, FieldError> {
    let m = json::as_object(json::req(obj, "mapping", "")?, "/mapping")?;
    m.iter()
        .map(|(k, v)| {
            let key = k
                .parse::<u32>()
                .map_err(|_| FieldError::new(format!("/mapping/{k}"), "type"))?;
            let val = v
                .as_u64()
                .filter(|&x| x <= u32::MAX as u64)
                .ok_or_else(|| FieldError::new(format!("/mapping/{k}"), "type"))?;
            Ok((key, val as u32))
        })
        .collect()
}

fn parse_constrained(obj: &Object) -> std::result::Result<BTreeSet<u32>, FieldError> {
    let Some(v) = json::opt(obj, "constrained") else {
        return Ok(BTreeSet::new());
    };
    let arr = v.as_array().ok_or_else(|| FieldError::new("/constrained", "type"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_u64()
                .filter(|&x| x <= u32::MAX as u64)
                .map(|x| x as u32)
                .ok_or_else(|| FieldError::new(format!("/constrained/{i}"), "type"))
        })
        .collect()
}
