use crate::data::{AttributedDataset, SplitManifest};
use crate::error::{Error, Result};

/// Sets train weights to `p(cell) / p_train(cell)` under a uniform target over the
/// `(label, nuisance)` grid, rescaled to mean 1.
///
/// Cells without train entries are dropped from the target: their mass cannot be reached
/// by resampling, so the resampled joint is uniform over the occupied cells only.
pub fn compute_reweight_weights(manifest: &SplitManifest, dataset: &AttributedDataset) -> Result<SplitManifest> {
    if manifest.train.is_empty() {
        return Err(Error::Degenerate("empty train split".into()));
    }
    let schema = dataset.schema();
    let (nl, na) = (schema.num_labels(), schema.num_nuisance());
    let mut cells = Vec::with_capacity(manifest.train.len());
    let mut counts = vec![0usize; nl * na];
    for e in &manifest.train {
        let r = dataset.get(e.id)?;
        let c = dataset.label_of(r) as usize * na + dataset.nuisance_of(r) as usize;
        counts[c] += 1;
        cells.push(c);
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::Degenerate("train split occupies a single attribute cell".into()));
    }
    let n = manifest.train.len() as f64;
    let target = 1.0 / (nl * na) as f64;
    let raw: Vec<f64> = cells.iter().map(|&c| target / (counts[c] as f64 / n)).collect();
    let scale = n / raw.iter().sum::<f64>();
    let mut out = manifest.clone();
    for (e, w) in out.train.iter_mut().zip(raw) {
        e.weight = w * scale;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Origin, TrainEntry};
    use crate::sprites::sprites_schema;
    use crate::testutil::grid_with;

    fn all_train(ds: &AttributedDataset) -> SplitManifest {
        SplitManifest {
            seed: 0,
            spec_digest: String::new(),
            train: ds
                .records()
                .iter()
                .map(|r| TrainEntry::new(r.sample_id, Origin::Bulk))
                .collect(),
            val: vec![],
            test: vec![],
        }
    }

    #[test]
    fn uniform_joint_gives_unit_weights() {
        let ds = grid_with(sprites_schema(), |_, _| 7);
        let m = compute_reweight_weights(&all_train(&ds), &ds).unwrap();
        assert!(m.train.iter().all(|e| (e.weight - 1.0).abs() < 1e-12));
    }

    #[test]
    fn diagonal_heavy_joint_matches_hand_evaluation() {
        let ds = grid_with(sprites_schema(), |l, a| if l == a { 90 } else { 1 });
        let m = compute_reweight_weights(&all_train(&ds), &ds).unwrap();
        // n = 276; W = (1/9) / (count/276); the raw weights already average to 1
        let w_diag = 276.0 / 810.0;
        let w_off = 276.0 / 9.0;
        for e in &m.train {
            let r = ds.get(e.id).unwrap();
            let want = if r.attr[0] == r.attr[1] { w_diag } else { w_off };
            assert!((e.weight - want).abs() < 1e-12, "{} vs {want}", e.weight);
        }
        assert!((w_off / w_diag - 90.0).abs() < 1e-9);
        let mean = m.train.iter().map(|e| e.weight).sum::<f64>() / 276.0;
        assert!((mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_cells_are_skipped() {
        let ds = grid_with(sprites_schema(), |_, a| if a == 2 { 0 } else { 5 + a as usize });
        let m = compute_reweight_weights(&all_train(&ds), &ds).unwrap();
        let mut mass = [[0.0f64; 3]; 3];
        for e in &m.train {
            let r = ds.get(e.id).unwrap();
            mass[r.attr[0] as usize][r.attr[1] as usize] += e.weight;
        }
        let occupied: Vec<f64> = mass.iter().flat_map(|r| r[..2].to_vec()).collect();
        for w in &occupied {
            assert!((w - occupied[0]).abs() < 1e-9);
        }
        let mean = m.train.iter().map(|e| e.weight).sum::<f64>() / m.train.len() as f64;
        assert!((mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_cell_is_degenerate() {
        let ds = grid_with(sprites_schema(), |l, a| if l == 0 && a == 0 { 4 } else { 0 });
        assert!(matches!(
            compute_reweight_weights(&all_train(&ds), &ds),
            Err(Error::Degenerate(_))
        ));
    }
}
