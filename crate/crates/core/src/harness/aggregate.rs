use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::harness::sweep::MetricsTable;

/// A (shift, N) column of the comparison artifacts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Setting {
    pub shift: String,
    pub n: usize,
}

impl Setting {
    pub fn new(shift: impl Into<String>, n: usize) -> Self {
        Setting { shift: shift.into(), n }
    }

    /// Column label, `shift:N`.
    pub fn label(&self) -> String {
        format!("{}:{}", self.shift, self.n)
    }

    pub fn parse_label(s: &str) -> Result<Self> {
        let (shift, n) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::Format(format!("setting label {s:?} lacks ':N'")))?;
        let n = n
            .parse()
            .map_err(|_| Error::Format(format!("setting label {s:?} has a bad N")))?;
        Ok(Setting::new(shift, n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub setting: Setting,
    pub mean: f64,
    /// Population standard deviation over seeds.
    pub std: f64,
    pub seeds: usize,
}

/// method → setting → seed → test top-1.
type Grouped<'a> = BTreeMap<&'a str, BTreeMap<Setting, BTreeMap<u64, f64>>>;

fn grouped(table: &MetricsTable) -> Grouped<'_> {
    let mut g: Grouped<'_> = BTreeMap::new();
    for r in table.rows() {
        g.entry(r.method.as_str())
            .or_default()
            .entry(Setting::new(r.shift.clone(), r.n))
            .or_default()
            .insert(r.seed, r.test_top1);
    }
    g
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Mean and population std of test top-1 over seeds, ordered by (method, setting).
pub fn aggregate_mean_std(table: &MetricsTable) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for (method, settings) in grouped(table) {
        for (setting, seeds) in settings {
            let m = mean(seeds.values().copied());
            let var = mean(seeds.values().map(|x| (x - m) * (x - m)));
            out.push(SummaryRow {
                method: method.to_string(),
                setting,
                mean: m,
                std: var.sqrt(),
                seeds: seeds.len(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PercentMode {
    /// Ratio of seed-averaged means.
    #[default]
    PooledMean,
    /// Seed-averaged per-seed ratios; seeds must match the baseline's.
    MeanOfRatios,
}

/// Percent change over a baseline, methods × settings. `None` marks an undefined cell
/// (zero baseline mean, or the method absent from the setting).
#[derive(Debug, Clone, PartialEq)]
pub struct PercentMatrix {
    pub baseline: String,
    pub methods: Vec<String>,
    pub settings: Vec<Setting>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl PercentMatrix {
    pub fn get(&self, method: &str, setting: &Setting) -> Option<f64> {
        let i = self.methods.iter().position(|m| m == method)?;
        let j = self.settings.iter().position(|s| s == setting)?;
        self.values[i][j]
    }
}

fn pct(m: f64, b: f64) -> Option<f64> {
    (b != 0.0).then(|| 100.0 * (m - b) / b)
}

pub fn percent_change(table: &MetricsTable, baseline: &str, mode: PercentMode) -> Result<PercentMatrix> {
    if table.is_empty() {
        return Err(Error::MissingCell("metrics table is empty".into()));
    }
    let g = grouped(table);
    let base = g
        .get(baseline)
        .ok_or_else(|| Error::MissingCell(format!("baseline method {baseline:?} not in table")))?;
    let settings: Vec<Setting> = g
        .values()
        .flat_map(|s| s.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if let Some(s) = settings.iter().find(|s| !base.contains_key(*s)) {
        return Err(Error::MissingCell(format!(
            "baseline {baseline:?} missing setting {}",
            s.label()
        )));
    }
    let mut values = Vec::with_capacity(g.len());
    for (method, by_setting) in &g {
        let mut row = Vec::with_capacity(settings.len());
        for s in &settings {
            let b = &base[s];
            let cell = match by_setting.get(s) {
                None => None,
                Some(m) => match mode {
                    PercentMode::PooledMean => pct(mean(m.values().copied()), mean(b.values().copied())),
                    PercentMode::MeanOfRatios => {
                        if m.keys().ne(b.keys()) {
                            return Err(Error::MissingCell(format!(
                                "method {method:?} and baseline have different seeds at {}",
                                s.label()
                            )));
                        }
                        let ratios: Option<Vec<f64>> = m.iter().map(|(seed, &x)| pct(x, b[seed])).collect();
                        ratios.map(mean)
                    }
                },
            };
            row.push(cell);
        }
        values.push(row);
    }
    Ok(PercentMatrix {
        baseline: baseline.to_string(),
        methods: g.keys().map(|m| m.to_string()).collect(),
        settings,
        values,
    })
}

/// Ranks by descending value, 1 for the best; tied values share the mean of their positions.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i+1..=j+1 share their mean.
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Median with the midpoint convention for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    pub setting: Setting,
    pub seed: u64,
    /// Aligned with [`Ranking::methods`].
    pub ranks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub methods: Vec<String>,
    pub vectors: Vec<RankVector>,
    pub median: Vec<f64>,
}

/// Ranks the methods within every (setting, seed) pair and takes each method's median rank.
pub fn rank_methods(table: &MetricsTable) -> Result<Ranking> {
    if table.is_empty() {
        return Err(Error::MissingCell("metrics table is empty".into()));
    }
    let g = grouped(table);
    let methods: Vec<&str> = g.keys().copied().collect();
    let pairs: BTreeSet<(Setting, u64)> = g
        .values()
        .flat_map(|s| {
            s.iter()
                .flat_map(|(set, seeds)| seeds.keys().map(move |&seed| (set.clone(), seed)))
        })
        .collect();
    let mut vectors = Vec::with_capacity(pairs.len());
    for (setting, seed) in pairs {
        let accs = methods
            .iter()
            .map(|m| {
                g[m].get(&setting).and_then(|s| s.get(&seed)).copied().ok_or_else(|| {
                    Error::MissingCell(format!("method {m:?} missing at {} seed {seed}", setting.label()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        vectors.push(RankVector {
            setting,
            seed,
            ranks: fractional_ranks(&accs),
        });
    }
    let median = (0..methods.len())
        .map(|i| median(&vectors.iter().map(|v| v.ranks[i]).collect::<Vec<_>>()))
        .collect();
    Ok(Ranking {
        methods: methods.into_iter().map(String::from).collect(),
        vectors,
        median,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::MetricsRow;

    pub(crate) fn row(method: &str, shift: &str, n: usize, seed: u64, acc: f64) -> MetricsRow {
        MetricsRow {
            method: method.into(),
            shift: shift.into(),
            n,
            seed,
            hyper: BTreeMap::new(),
            val_top1: acc,
            test_top1: acc,
            model_digest: String::new(),
        }
    }

    #[test]
    fn mean_std_examples() {
        let t = MetricsTable::new(vec![
            row("a", "s", 1, 0, 0.5),
            row("a", "s", 1, 1, 0.5),
            row("a", "s", 1, 2, 0.5),
            row("b", "s", 1, 0, 0.4),
            row("b", "s", 1, 1, 0.6),
        ])
        .unwrap();
        let s = aggregate_mean_std(&t);
        assert_eq!((s[0].mean, s[0].std, s[0].seeds), (0.5, 0.0, 3));
        assert!((s[1].mean - 0.5).abs() < 1e-15 && (s[1].std - 0.1).abs() < 1e-15);
    }

    #[test]
    fn percent_examples() {
        let t = MetricsTable::new(vec![
            row("base", "s", 1, 0, 0.5),
            row("m", "s", 1, 0, 0.6),
            row("base", "t", 1, 0, 0.0),
            row("m", "t", 1, 0, 0.3),
        ])
        .unwrap();
        for mode in [PercentMode::PooledMean, PercentMode::MeanOfRatios] {
            let p = percent_change(&t, "base", mode).unwrap();
            let s = Setting::new("s", 1);
            assert!((p.get("m", &s).unwrap() - 20.0).abs() < 1e-12);
            assert_eq!(p.get("base", &s), Some(0.0));
            assert_eq!(p.get("m", &Setting::new("t", 1)), None);
        }
        assert_eq!(
            percent_change(&t, "nope", PercentMode::PooledMean).unwrap_err().kind(),
            "MissingCellError"
        );
    }

    #[test]
    fn pooled_and_per_seed_modes_differ() {
        let t = MetricsTable::new(vec![
            row("b", "s", 1, 0, 0.2),
            row("b", "s", 1, 1, 0.8),
            row("m", "s", 1, 0, 0.4),
            row("m", "s", 1, 1, 0.8),
        ])
        .unwrap();
        let s = Setting::new("s", 1);
        let pooled = percent_change(&t, "b", PercentMode::PooledMean)
            .unwrap()
            .get("m", &s)
            .unwrap();
        let ratios = percent_change(&t, "b", PercentMode::MeanOfRatios)
            .unwrap()
            .get("m", &s)
            .unwrap();
        assert!((pooled - 20.0).abs() < 1e-12);
        assert!((ratios - 50.0).abs() < 1e-12);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(fractional_ranks(&[0.9, 0.8, 0.7]), vec![1.0, 2.0, 3.0]);
        assert_eq!(fractional_ranks(&[0.9, 0.9, 0.7]), vec![1.5, 1.5, 3.0]);
        assert_eq!(fractional_ranks(&[0.1, 0.5, 0.5, 0.5]), vec![4.0, 2.0, 2.0, 2.0]);
        assert_eq!(median(&[3.0, 1.0, 2.0, 4.0]), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }

    #[test]
    fn ranking_requires_complete_pairs() {
        let t = MetricsTable::new(vec![
            row("a", "s", 1, 0, 0.9),
            row("b", "s", 1, 0, 0.8),
            row("a", "s", 1, 1, 0.7),
        ])
        .unwrap();
        assert_eq!(rank_methods(&t).unwrap_err().kind(), "MissingCellError");
    }

    #[test]
    fn setting_labels_round_trip() {
        let s = Setting::new("low:data", 12);
        assert_eq!(Setting::parse_label(&s.label()).unwrap(), s);
    }
}
