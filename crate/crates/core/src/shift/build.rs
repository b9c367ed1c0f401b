use std::collections::HashSet;

use crate::data::{AttributedDataset, Origin, SplitManifest, TrainEntry};
use crate::error::{Error, Result};
use crate::rng::Pcg32;
use crate::shift::{CountMode, ShiftKind, ShiftSpec};

/// Balanced test split and the ids it reserves.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSplit {
    /// Sorted ascending.
    pub ids: Vec<u64>,
    reserved: HashSet<u64>,
}

impl TestSplit {
    pub fn from_ids(mut ids: Vec<u64>) -> Self {
        ids.sort_unstable();
        let reserved = ids.iter().copied().collect();
        TestSplit { ids, reserved }
    }

    pub fn is_reserved(&self, id: u64) -> bool {
        self.reserved.contains(&id)
    }
}

/// Ids grouped by `(label, nuisance)` cell, row-major over the label axis, each list ascending.
pub(crate) fn cell_ids(dataset: &AttributedDataset, keep: impl Fn(u64) -> bool) -> Vec<Vec<u64>> {
    let na = dataset.schema().num_nuisance();
    let mut cells = vec![Vec::new(); dataset.schema().num_labels() * na];
    for r in dataset.records() {
        if keep(r.sample_id) {
            let (l, a) = (dataset.label_of(r) as usize, dataset.nuisance_of(r) as usize);
            cells[l * na + a].push(r.sample_id);
        }
    }
    cells
}

/// Picks exactly `per_cell` ids from every `(label, nuisance)` cell by a seeded shuffle.
pub fn make_test_split(dataset: &AttributedDataset, per_cell: usize, seed: u64) -> Result<TestSplit> {
    let na = dataset.schema().num_nuisance();
    let cells = cell_ids(dataset, |_| true);
    if let Some((i, c)) = cells.iter().enumerate().find(|(_, c)| c.len() < per_cell) {
        return Err(Error::InsufficientData {
            label: (i / na) as u32,
            nuisance: (i % na) as u32,
            need: per_cell,
            have: c.len(),
        });
    }
    let mut rng = Pcg32::seed_from_u64(seed);
    let ids = cells.iter().flat_map(|c| rng.choose_k(c, per_cell)).collect();
    Ok(TestSplit::from_ids(ids))
}

fn empty_manifest(spec: &ShiftSpec, seed: u64, test: &TestSplit) -> SplitManifest {
    SplitManifest {
        seed,
        spec_digest: spec.digest(),
        train: Vec::new(),
        val: Vec::new(),
        test: test.ids.clone(),
    }
}

/// Moves a label-stratified `val_fraction` of the bulk/correlated train entries to validation.
///
/// Entries whose count is controlled by the shift (`uncorrelated`, `lowdata`) always stay in train.
pub fn carve_validation(
    manifest: &mut SplitManifest,
    dataset: &AttributedDataset,
    val_fraction: f64,
    seed: u64,
) -> Result<()> {
    let nl = dataset.schema().num_labels();
    let mut by_label: Vec<Vec<u64>> = vec![Vec::new(); nl];
    manifest.train.sort_by_key(|e| e.id);
    for e in &manifest.train {
        if matches!(e.origin, Origin::Bulk | Origin::Correlated) {
            let r = dataset.get(e.id)?;
            by_label[dataset.label_of(r) as usize].push(e.id);
        }
    }
    let mut rng = Pcg32::seed_from_u64(seed);
    let mut val = HashSet::new();
    for ids in &by_label {
        let k = (val_fraction * ids.len() as f64).round() as usize;
        val.extend(rng.choose_k(ids, k));
    }
    manifest.train.retain(|e| !val.contains(&e.id));
    manifest.val.extend(val);
    manifest.sort();
    Ok(())
}

pub fn make_spurious_correlation(
    dataset: &AttributedDataset,
    spec: &ShiftSpec,
    seed: u64,
    test: &TestSplit,
) -> Result<SplitManifest> {
    let ShiftKind::SpuriousCorrelation {
        mapping,
        n_uncorrelated,
    } = &spec.kind
    else {
        return Err(Error::Config("expected a spurious-correlation spec".into()));
    };
    spec.validate(dataset.schema())?;
    let pool: Vec<u64> = dataset
        .records()
        .iter()
        .map(|r| r.sample_id)
        .filter(|&id| !test.is_reserved(id))
        .collect();
    if pool.len() < *n_uncorrelated {
        return Err(Error::InsufficientPool(format!(
            "{} uncorrelated samples requested, {} available",
            n_uncorrelated,
            pool.len()
        )));
    }
    let mut rng = Pcg32::derived(seed, "shift/uncorrelated");
    let uncorrelated: HashSet<u64> = rng.choose_k(&pool, *n_uncorrelated).into_iter().collect();
    let mut m = empty_manifest(spec, seed, test);
    for r in dataset.records() {
        let id = r.sample_id;
        if test.is_reserved(id) {
            continue;
        }
        if uncorrelated.contains(&id) {
            m.train.push(TrainEntry::new(id, Origin::Uncorrelated));
        } else if mapping.get(&dataset.label_of(r)) == Some(&dataset.nuisance_of(r)) {
            m.train.push(TrainEntry::new(id, Origin::Correlated));
        }
    }
    carve_validation(
        &mut m,
        dataset,
        spec.val_fraction,
        crate::rng::derive_seed(seed, "shift/val"),
    )?;
    Ok(m)
}

pub fn make_low_data(
    dataset: &AttributedDataset,
    spec: &ShiftSpec,
    seed: u64,
    test: &TestSplit,
) -> Result<SplitManifest> {
    let (constrained, n, mode) = match &spec.kind {
        ShiftKind::LowDataDrift { constrained, n, mode } => (constrained, *n, *mode),
        ShiftKind::UnseenDataShift { constrained } => (constrained, 0, CountMode::PerValue),
        _ => return Err(Error::Config("expected a low-data or unseen spec".into())),
    };
    spec.validate(dataset.schema())?;
    let na = dataset.schema().num_nuisance();
    let mut by_value: Vec<Vec<u64>> = vec![Vec::new(); na];
    let mut m = empty_manifest(spec, seed, test);
    for r in dataset.records() {
        if test.is_reserved(r.sample_id) {
            continue;
        }
        let a = dataset.nuisance_of(r);
        if constrained.contains(&a) {
            by_value[a as usize].push(r.sample_id);
        } else {
            m.train.push(TrainEntry::new(r.sample_id, Origin::Bulk));
        }
    }
    let mut rng = Pcg32::derived(seed, "shift/lowdata");
    let picked: Vec<u64> = match mode {
        CountMode::PerValue => {
            let mut picked = Vec::new();
            for &v in constrained {
                let ids = &by_value[v as usize];
                if ids.len() < n {
                    return Err(Error::InsufficientPool(format!(
                        "nuisance value {v}: {n} low-data samples requested, {} available",
                        ids.len()
                    )));
                }
                picked.extend(rng.choose_k(ids, n));
            }
            picked
        }
        CountMode::Total => {
            let region: Vec<u64> = constrained
                .iter()
                .flat_map(|&v| by_value[v as usize].iter().copied())
                .collect();
            if region.len() < n {
                return Err(Error::InsufficientPool(format!(
                    "{n} low-data samples requested, {} available",
                    region.len()
                )));
            }
            rng.choose_k(&region, n)
        }
    };
    m.train
        .extend(picked.into_iter().map(|id| TrainEntry::new(id, Origin::Lowdata)));
    carve_validation(
        &mut m,
        dataset,
        spec.val_fraction,
        crate::rng::derive_seed(seed, "shift/val"),
    )?;
    Ok(m)
}

/// Low-data construction with no samples of the constrained values.
pub fn make_unseen(
    dataset: &AttributedDataset,
    spec: &ShiftSpec,
    seed: u64,
    test: &TestSplit,
) -> Result<SplitManifest> {
    if !matches!(spec.kind, ShiftKind::UnseenDataShift { .. }) {
        return Err(Error::Config("expected an unseen spec".into()));
    }
    make_low_data(dataset, spec, seed, test)
}

/// Dispatches on the shift kind.
pub fn make_shift(dataset: &AttributedDataset, spec: &ShiftSpec, seed: u64, test: &TestSplit) -> Result<SplitManifest> {
    match spec.kind {
        ShiftKind::SpuriousCorrelation { .. } => make_spurious_correlation(dataset, spec, seed, test),
        ShiftKind::LowDataDrift { .. } => make_low_data(dataset, spec, seed, test),
        ShiftKind::UnseenDataShift { .. } => make_unseen(dataset, spec, seed, test),
    }
}

/// Shift, then the size cap, label noise and importance weights, each on its own derived seed.
pub fn build_manifest(
    dataset: &AttributedDataset,
    spec: &ShiftSpec,
    seed: u64,
    test: &TestSplit,
) -> Result<SplitManifest> {
    use crate::rng::derive_seed;
    let mut m = make_shift(dataset, spec, seed, test)?;
    if let Some(cap) = &spec.size_cap {
        m = crate::shift::apply_size_cap(&m, cap, derive_seed(seed, "condition/size_cap"))?;
    }
    if spec.noise_p > 0.0 {
        m = crate::shift::apply_label_noise(&m, dataset, spec.noise_p, derive_seed(seed, "condition/noise"))?;
    }
    crate::shift::compute_reweight_weights(&m, dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::compute_joint;
    use crate::testutil::grid;

    fn per_cell_counts(ds: &AttributedDataset, ids: &[u64]) -> Vec<Vec<u64>> {
        compute_joint(ds, ids, 0, 1).unwrap().counts
    }

    #[test]
    fn test_split_is_balanced() {
        let ds = grid(100);
        let t = make_test_split(&ds, 10, 1).unwrap();
        assert_eq!(t.ids.len(), 90);
        for row in per_cell_counts(&ds, &t.ids) {
            assert_eq!(row, vec![10, 10, 10]);
        }
    }

    #[test]
    fn test_split_insufficient() {
        let ds = grid(100);
        assert!(matches!(
            make_test_split(&ds, 101, 1),
            Err(Error::InsufficientData {
                label: 0,
                nuisance: 0,
                need: 101,
                have: 100
            })
        ));
    }

    #[test]
    fn test_split_rerun() {
        let ds = grid(100);
        let a = make_test_split(&ds, 10, 5).unwrap();
        assert_eq!(a, make_test_split(&ds, 10, 5).unwrap());
        let b = make_test_split(&ds, 10, 6).unwrap();
        assert_ne!(a.ids, b.ids);
        assert_eq!(per_cell_counts(&ds, &a.ids), per_cell_counts(&ds, &b.ids));
    }

    fn identity_sc(n: usize) -> ShiftSpec {
        ShiftSpec::spurious([(0, 0), (1, 1), (2, 2)], n, 10)
    }

    #[test]
    fn spurious_counts_before_val_carve() {
        let ds = grid(100);
        let t = make_test_split(&ds, 10, 1).unwrap();
        let m = make_spurious_correlation(&ds, &identity_sc(9), 3, &t).unwrap();
        assert_eq!(m.count_origin(Origin::Uncorrelated), 9);
        let diag_picks = m
            .train
            .iter()
            .filter(|e| e.origin == Origin::Uncorrelated)
            .filter(|e| {
                let r = ds.get(e.id).unwrap();
                r.attr[0] == r.attr[1]
            })
            .count();
        // val holds 10% of the correlated entries, stratified by label
        assert_eq!(m.train.len() + m.val.len(), 270 + 9 - diag_picks);
        for e in &m.train {
            let r = ds.get(e.id).unwrap();
            if e.origin == Origin::Correlated {
                assert_eq!(r.attr[0], r.attr[1]);
            }
            assert!(!t.is_reserved(e.id));
        }
        m.check_against(&ds).unwrap();
    }

    #[test]
    fn spurious_full_pool_is_unshifted() {
        let ds = grid(100);
        let t = make_test_split(&ds, 10, 1).unwrap();
        let m = make_spurious_correlation(&ds, &identity_sc(810), 3, &t).unwrap();
        assert_eq!(m.train.len() + m.val.len(), 810);
        assert!(matches!(
            make_spurious_correlation(&ds, &identity_sc(811), 3, &t),
            Err(Error::InsufficientPool(_))
        ));
    }

    #[test]
    fn spurious_off_diagonal_draws_match_hypergeometric() {
        // Drawing 9 of 810 pool records, 540 of them off-diagonal.
        let ds = grid(100);
        let t = make_test_split(&ds, 10, 1).unwrap();
        let (pop, succ, draws) = (810.0f64, 540.0f64, 9.0f64);
        let mean = draws * succ / pop;
        let var = draws * (succ / pop) * (1.0 - succ / pop) * (pop - draws) / (pop - 1.0);
        let seeds = 200.0;
        let mut total = 0usize;
        for seed in 0..200 {
            let m = make_spurious_correlation(&ds, &identity_sc(9), seed, &t).unwrap();
            total += m
                .train
                .iter()
                .filter(|e| e.origin == Origin::Uncorrelated)
                .filter(|e| {
                    let r = ds.get(e.id).unwrap();
                    r.attr[0] != r.attr[1]
                })
                .count();
        }
        let avg = total as f64 / seeds;
        assert!((mean - 6.0).abs() < 1e-12);
        assert!((avg - mean).abs() < 4.0 * (var / seeds).sqrt(), "avg {avg}");
    }

    #[test]
    fn low_data_counts() {
        let ds = grid(100);
        let t = make_test_split(&ds, 10, 1).unwrap();
        let spec = ShiftSpec::low_data([2], 10, 10);
        let m = make_low_data(&ds, &spec, 4, &t).unwrap();
        let ids: Vec<u64> = m.train_ids().into_iter().chain(m.val.iter().copied()).collect();
        let counts = per_cell_counts(&ds, &ids);
        let blue: u64 = counts.iter().map(|r| r[2]).sum();
        assert_eq!(blue, 10);
        assert_eq!(ids.len(), 2 * 3 * 90 + 10);
        assert_eq!(m.count_origin(Origin::Lowdata), 10);
        let train_blue = m.train.iter().filter(|e| ds.get(e.id).unwrap().attr[1] == 2).count();
        assert_eq!(train_blue, 10);
    }

    #[test]
    fn low_data_total_mode() {
        let ds = grid(100);
        let t = make_test_split(&ds, 10, 1).unwrap();
        let mut spec = ShiftSpec::low_data([1, 2], 10, 10);
        if let ShiftKind::LowDataDrift { mode, .. } = &mut spec.kind {
            *mode = CountMode::Total;
        }
        let m = make_low_data(&ds, &spec, 4, &t).unwrap();
        assert_eq!(m.count_origin(Origin::Lowdata), 10);
    }

    #[test]
    fn low_data_full_cell_is_unshifted() {
        let ds = grid(100);
        let t = make_test_split(&ds, 10, 1).unwrap();
        let m = make_low_data(&ds, &ShiftSpec::low_data([2], 270, 10), 4, &t).unwrap();
        assert_eq!(m.train.len() + m.val.len(), 810);
        assert!(matches!(
            make_low_data(&ds, &ShiftSpec::low_data([2], 271, 10), 4, &t),
            Err(Error::InsufficientPool(_))
        ));
    }

    #[test]
    fn unseen_excludes_values() {
        let ds = grid(100);
        let t = make_test_split(&ds, 10, 1).unwrap();
        let m = make_unseen(&ds, &ShiftSpec::unseen([2], 10), 4, &t).unwrap();
        assert!(m
            .train_ids()
            .iter()
            .chain(&m.val)
            .all(|&id| ds.get(id).unwrap().attr[1] != 2));
        let test_blue = m.test.iter().filter(|&&id| ds.get(id).unwrap().attr[1] == 2).count();
        assert_eq!(test_blue, 30);
        assert!(matches!(
            make_unseen(&ds, &ShiftSpec::unseen([1, 2], 10), 4, &t),
            Err(Error::Constraint(_))
        ));
        let all = make_unseen(&ds, &ShiftSpec::unseen([], 10), 4, &t).unwrap();
        assert_eq!(all.train.len() + all.val.len(), 810);
    }

    #[test]
    fn val_is_label_stratified() {
        let ds = grid(100);
        let t = make_test_split(&ds, 10, 1).unwrap();
        let m = make_low_data(&ds, &ShiftSpec::low_data([2], 10, 10), 4, &t).unwrap();
        // 180 bulk per label, 10% each
        let counts = per_cell_counts(&ds, &m.val);
        for row in counts {
            assert_eq!(row.iter().sum::<u64>(), 18);
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let ds = grid(50);
        let t = make_test_split(&ds, 10, 1).unwrap();
        let spec = identity_sc(5);
        let a = build_manifest(&ds, &spec, 11, &t).unwrap().to_json();
        let b = build_manifest(&ds, &spec, 11, &t).unwrap().to_json();
        assert_eq!(a, b);
        let c = build_manifest(&ds, &spec, 12, &t).unwrap().to_json();
        assert_ne!(a, c);
    }
}
