use crate::data::AttributedDataset;
use crate::error::{Error, Result};

/// Empirical joint of two attributes over a subset of records.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub axis_i: usize,
    pub axis_j: usize,
    pub counts: Vec<Vec<u64>>,
    /// `None` when no records were selected.
    pub probs: Option<Vec<Vec<f64>>>,
}

impl JointDistribution {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Marginal of attribute `axis_i`.
    pub fn marginal_i(&self) -> Option<Vec<f64>> {
        self.probs
            .as_ref()
            .map(|p| p.iter().map(|row| row.iter().sum()).collect())
    }
}

pub fn compute_joint(dataset: &AttributedDataset, ids: &[u64], i: usize, j: usize) -> Result<JointDistribution> {
    let k = dataset.schema().num_attributes();
    if i == j || i >= k || j >= k {
        return Err(Error::Axis(i, j));
    }
    let (ni, nj) = (dataset.schema().cardinality(i), dataset.schema().cardinality(j));
    let mut counts = vec![vec![0u64; nj]; ni];
    for &id in ids {
        let r = dataset.get(id)?;
        counts[r.attr[i] as usize][r.attr[j] as usize] += 1;
    }
    let total: u64 = counts.iter().flatten().sum();
    let probs = (total > 0).then(|| {
        counts
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 / total as f64).collect())
            .collect()
    });
    Ok(JointDistribution {
        axis_i: i,
        axis_j: j,
        counts,
        probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AttributeSchema, ExampleRecord, Payload};

    fn dataset(cells: &[(u32, u32, usize)]) -> AttributedDataset {
        let schema: AttributeSchema = crate::data::load_schema(
            r#"{"attributes":[{"name":"shape","values":["square","ellipse","heart"]},{"name":"color","values":["red","green","blue"]}],"label_index":0,"nuisance_index":1}"#,
        )
        .unwrap();
        let mut records = Vec::new();
        let mut id = 0;
        for &(a, b, n) in cells {
            for _ in 0..n {
                records.push(ExampleRecord {
                    sample_id: id,
                    attr: vec![a, b],
                    payload: Payload::Path(String::new()),
                });
                id += 1;
            }
        }
        AttributedDataset::new(schema, records).unwrap()
    }

    fn all_ids(ds: &AttributedDataset) -> Vec<u64> {
        ds.records().iter().map(|r| r.sample_id).collect()
    }

    #[test]
    fn uniform_grid() {
        let cells: Vec<_> = (0..3).flat_map(|a| (0..3).map(move |b| (a, b, 1))).collect();
        let ds = dataset(&cells);
        let j = compute_joint(&ds, &all_ids(&ds), 0, 1).unwrap();
        for row in j.probs.unwrap() {
            for p in row {
                assert!((p - 1.0 / 9.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn empty_selection_has_no_probs() {
        let ds = dataset(&[(0, 0, 3)]);
        let j = compute_joint(&ds, &[], 0, 1).unwrap();
        assert_eq!(j.total(), 0);
        assert!(j.probs.is_none());
    }

    #[test]
    fn diagonal_plus_off_diagonal_matches_tally() {
        let mut cells = vec![];
        for a in 0..3 {
            for b in 0..3 {
                cells.push((a, b, if a == b { 30 } else { 1 }));
            }
        }
        cells.push((0, 1, 3));
        let ds = dataset(&cells);
        let ids = all_ids(&ds);
        let j = compute_joint(&ds, &ids, 0, 1).unwrap();
        // independent tally over the raw record list
        let mut tally = [[0u64; 3]; 3];
        for r in ds.records() {
            tally[r.attr[0] as usize][r.attr[1] as usize] += 1;
        }
        for (a, row) in tally.iter().enumerate() {
            assert_eq!(j.counts[a], row.to_vec());
        }
        assert_eq!(j.counts[0][1], 4);
        assert_eq!(j.total(), 99);
        // marginal over j recovers the marginal of i
        let m = j.marginal_i().unwrap();
        for a in 0..3u32 {
            let direct = ds.records().iter().filter(|r| r.attr[0] == a).count() as f64 / 99.0;
            assert!((m[a as usize] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn axis_and_id_errors() {
        let ds = dataset(&[(0, 0, 2)]);
        assert!(matches!(compute_joint(&ds, &[0], 1, 1), Err(Error::Axis(1, 1))));
        assert!(matches!(compute_joint(&ds, &[0], 0, 2), Err(Error::Axis(0, 2))));
        assert!(matches!(compute_joint(&ds, &[42], 0, 1), Err(Error::UnknownId(42))));
    }
}
