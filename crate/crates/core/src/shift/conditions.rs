use std::collections::HashSet;

use crate::data::{AttributedDataset, Origin, SplitManifest};
use crate::error::{Error, Result};
use crate::rng::Pcg32;
use crate::shift::SizeCap;

/// Flips each train label with probability `p` to a uniformly chosen *other* label.
///
/// Validation and test lists are untouched. Overrides are redrawn relative to the record's
/// original label, so the input manifest's own overrides are ignored.
pub fn apply_label_noise(
    manifest: &SplitManifest,
    dataset: &AttributedDataset,
    p: f64,
    seed: u64,
) -> Result<SplitManifest> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("noise probability {p} outside [0, 1]")));
    }
    let nl = dataset.schema().num_labels() as u64;
    let mut out = manifest.clone();
    out.sort();
    if p == 0.0 {
        return Ok(out);
    }
    let mut rng = Pcg32::seed_from_u64(seed);
    for e in &mut out.train {
        let original = dataset.label_of(dataset.get(e.id)?) as u64;
        e.label_override = None;
        if nl > 1 && rng.bernoulli(p) {
            let r = rng.below(nl - 1);
            let flipped = if r >= original { r + 1 } else { r };
            e.label_override = Some(flipped as u32);
        }
    }
    Ok(out)
}

/// Downsamples train to `n_total` entries, exactly `round(ratio * n_total)` of them low-data.
///
/// The remaining entries are allocated across the other origins in proportion to their
/// current counts (largest remainder, ties to the earlier origin).
pub fn apply_size_cap(manifest: &SplitManifest, cap: &SizeCap, seed: u64) -> Result<SplitManifest> {
    let n_low = cap.lowdata_count();
    if cap.n_total > manifest.train.len() {
        return Err(Error::InsufficientPool(format!(
            "size cap {} exceeds {} train entries",
            cap.n_total,
            manifest.train.len()
        )));
    }
    let mut strata: Vec<(Origin, Vec<u64>)> = Origin::ALL.iter().map(|&o| (o, Vec::new())).collect();
    let mut sorted = manifest.clone();
    sorted.sort();
    for e in &sorted.train {
        let slot = Origin::ALL.iter().position(|&o| o == e.origin).unwrap();
        strata[slot].1.push(e.id);
    }
    let low_have = strata[3].1.len();
    if n_low > low_have {
        return Err(Error::InsufficientPool(format!(
            "size cap needs {n_low} low-data entries, {low_have} available"
        )));
    }
    let rest = cap.n_total - n_low;
    let others = &strata[..3];
    let other_total: usize = others.iter().map(|(_, ids)| ids.len()).sum();
    if rest > other_total {
        return Err(Error::InsufficientPool(format!(
            "size cap needs {rest} non-low-data entries, {other_total} available"
        )));
    }
    let mut alloc: Vec<usize> = Vec::with_capacity(3);
    let mut remainders: Vec<(f64, usize)> = Vec::with_capacity(3);
    for (i, (_, ids)) in others.iter().enumerate() {
        let exact = if other_total == 0 {
            0.0
        } else {
            rest as f64 * ids.len() as f64 / other_total as f64
        };
        alloc.push(exact.floor() as usize);
        remainders.push((exact - exact.floor(), i));
    }
    let mut missing = rest - alloc.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().cycle() {
        if missing == 0 {
            break;
        }
        if alloc[i] < others[i].1.len() {
            alloc[i] += 1;
            missing -= 1;
        }
    }
    alloc.push(n_low);

    let mut rng = Pcg32::seed_from_u64(seed);
    let mut keep = HashSet::with_capacity(cap.n_total);
    for ((_, ids), &k) in strata.iter().zip(&alloc) {
        keep.extend(rng.choose_k(ids, k));
    }
    sorted.train.retain(|e| keep.contains(&e.id));
    Ok(sorted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::{make_low_data, make_test_split, ShiftSpec};
    use crate::testutil::grid;

    fn low_data_manifest() -> (AttributedDataset, SplitManifest) {
        let ds = grid(200);
        let t = make_test_split(&ds, 10, 1).unwrap();
        let m = make_low_data(&ds, &ShiftSpec::low_data([2], 10, 10), 2, &t).unwrap();
        (ds, m)
    }

    #[test]
    fn zero_noise_is_identity() {
        let (ds, m) = low_data_manifest();
        assert_eq!(apply_label_noise(&m, &ds, 0.0, 1).unwrap(), m);
    }

    #[test]
    fn full_noise_flips_every_label() {
        let (ds, m) = low_data_manifest();
        let noisy = apply_label_noise(&m, &ds, 1.0, 1).unwrap();
        for e in &noisy.train {
            let l = e.label_override.unwrap();
            assert_ne!(l, ds.label_of(ds.get(e.id).unwrap()));
            assert!(l < 3);
        }
        assert_eq!(noisy.val, m.val);
        assert_eq!(noisy.test, m.test);
        noisy.check_against(&ds).unwrap();
    }

    #[test]
    fn half_noise_rate_within_binomial_bound() {
        let ds = grid(1200);
        let t = make_test_split(&ds, 10, 1).unwrap();
        let m = make_low_data(&ds, &ShiftSpec::low_data([], 1, 10), 2, &t).unwrap();
        let n = m.train.len() as f64;
        assert!(n >= 9_000.0);
        let noisy = apply_label_noise(&m, &ds, 0.5, 3).unwrap();
        let flipped = noisy.train.iter().filter(|e| e.label_override.is_some()).count() as f64;
        let sigma = (0.25 / n).sqrt();
        assert!((flipped / n - 0.5).abs() < 4.0 * sigma);
    }

    #[test]
    fn noise_range_checked() {
        let (ds, m) = low_data_manifest();
        assert!(apply_label_noise(&m, &ds, 1.5, 1).is_err());
    }

    #[test]
    fn size_cap_counts() {
        let (_, m) = low_data_manifest();
        let cap = SizeCap {
            n_total: 1000,
            ratio: 0.001,
        };
        let capped = apply_size_cap(&m, &cap, 5).unwrap();
        assert_eq!(capped.train.len(), 1000);
        assert_eq!(capped.count_origin(Origin::Lowdata), 1);
        assert_eq!(capped.count_origin(Origin::Bulk), 999);
        let other = apply_size_cap(&m, &cap, 6).unwrap();
        assert_ne!(capped.train_ids(), other.train_ids());
        assert_eq!(other.count_origin(Origin::Lowdata), 1);
    }

    #[test]
    fn size_cap_identity_at_current_size() {
        let (_, m) = low_data_manifest();
        let n = m.train.len();
        let cap = SizeCap {
            n_total: n,
            ratio: m.count_origin(Origin::Lowdata) as f64 / n as f64,
        };
        assert_eq!(apply_size_cap(&m, &cap, 5).unwrap().train, m.train);
    }

    #[test]
    fn size_cap_insufficient() {
        let (_, m) = low_data_manifest();
        let too_big = SizeCap {
            n_total: m.train.len() + 1,
            ratio: 0.0,
        };
        assert!(apply_size_cap(&m, &too_big, 1).is_err());
        let too_much_low = SizeCap {
            n_total: 1000,
            ratio: 0.5,
        };
        assert!(matches!(
            apply_size_cap(&m, &too_much_low, 1),
            Err(Error::InsufficientPool(_))
        ));
    }

    #[test]
    fn noise_and_cap_commute_on_counts() {
        let (ds, m) = low_data_manifest();
        let cap = SizeCap {
            n_total: 500,
            ratio: 0.01,
        };
        let a = apply_label_noise(&apply_size_cap(&m, &cap, 1).unwrap(), &ds, 1.0, 2).unwrap();
        let b = apply_size_cap(&apply_label_noise(&m, &ds, 1.0, 2).unwrap(), &cap, 1).unwrap();
        let counts = |m: &SplitManifest| {
            (
                m.train.len(),
                m.count_origin(Origin::Lowdata),
                m.train.iter().filter(|e| e.label_override.is_some()).count(),
            )
        };
        assert_eq!(counts(&a), counts(&b));
    }
}
