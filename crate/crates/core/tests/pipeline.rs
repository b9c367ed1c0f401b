//! End-to-end paths through the library: generate, shift, weight, sample, train, aggregate.

use std::collections::BTreeMap;

use shiftbench::data::{compute_joint, load_dataset, load_schema, Origin, SplitManifest};
use shiftbench::harness::{
    aggregate_mean_std, percent_change, rank_methods, run_sweep, HyperGrid, MethodSpec, PercentMode, ShiftEntry,
    SweepSpec,
};
use shiftbench::num::round9;
use shiftbench::sampler::SamplerState;
use shiftbench::shift::{build_manifest, make_test_split, ShiftSpec};
use shiftbench::sprites::gen_sprites;
use shiftbench::train::{
    decode_model, encode_model, evaluate_top1, train, DatasetAccess, ModelKind, ModelSpec, SamplerMode, TrainConfig,
    TransformConfig,
};
use shiftbench::{Model32, TrainedModel32};

fn quick() -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        max_steps: 60,
        eval_every: 20,
        patience: 3,
        learning_rate: 1e-2,
        ..Default::default()
    }
}

#[test]
fn csv_round_trip_preserves_manifests() {
    let ds = gen_sprites(8, 4).unwrap();
    let schema = load_schema(&ds.schema().to_json()).unwrap();
    let back = load_dataset(&schema, &ds.to_csv()).unwrap();
    assert_eq!(back.records(), ds.records());

    let spec = ShiftSpec::low_data([1], 3, 2);
    let test = make_test_split(&ds, 2, 9).unwrap();
    let a = build_manifest(&ds, &spec, 11, &test).unwrap();
    let b = build_manifest(&back, &spec, 11, &make_test_split(&back, 2, 9).unwrap()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    // Weights are stored at nine significant digits, so the round trip is a fixed point.
    assert_eq!(SplitManifest::from_json(&a.to_json()).unwrap().to_json(), a.to_json());
}

#[test]
fn reweighted_draws_flatten_the_joint() {
    let ds = gen_sprites(40, 2).unwrap();
    let spec = ShiftSpec::spurious([(0, 1), (1, 2), (2, 0)], 6, 4);
    let m = build_manifest(&ds, &spec, 5, &make_test_split(&ds, 4, 5).unwrap()).unwrap();
    assert_eq!(m.count_origin(Origin::Uncorrelated), 6);

    let weights: Vec<f64> = m.train.iter().map(|e| e.weight).collect();
    let mut s = SamplerState::new(&weights, 3).unwrap();
    let ids: Vec<u64> = s.draw(90_000).into_iter().map(|i| m.train[i].id).collect();
    let joint = compute_joint(&ds, &ids, 0, 1).unwrap();
    let occupied: Vec<u64> = joint.counts.iter().flatten().copied().filter(|&c| c > 0).collect();
    let expect = ids.len() as f64 / occupied.len() as f64;
    for c in occupied {
        assert!(
            (c as f64 - expect).abs() < 5.0 * expect.sqrt(),
            "cell count {c} vs {expect}"
        );
    }
}

#[test]
fn trained_model_survives_the_file_format() {
    let ds = gen_sprites(10, 3).unwrap();
    let m = build_manifest(
        &ds,
        &ShiftSpec::low_data([0], 4, 2),
        1,
        &make_test_split(&ds, 2, 1).unwrap(),
    )
    .unwrap();
    let data = DatasetAccess::new(&ds).unwrap();
    let trained: TrainedModel32 =
        train(ModelSpec::mlp1(3072, 8, 3), &quick(), &m, &data, SamplerMode::Plain, 7).unwrap();
    let acc = evaluate_top1(&trained.model, &m.test, &data).unwrap();
    let bytes = encode_model(&trained, Some(acc), "abc");
    let (back, metrics) = decode_model::<f32>(&bytes).unwrap();
    let back_model: &Model32 = &back.model;
    assert_eq!(back_model, &trained.model);
    assert_eq!(metrics.test_top1, Some(round9(acc)));
    assert_eq!(evaluate_top1(back_model, &m.test, &data).unwrap(), acc);
}

#[test]
fn f32_and_f64_models_agree_on_a_short_run() {
    let ds = gen_sprites(6, 8).unwrap();
    let m = build_manifest(
        &ds,
        &ShiftSpec::low_data([1], 2, 2),
        1,
        &make_test_split(&ds, 2, 1).unwrap(),
    )
    .unwrap();
    let data = DatasetAccess::new(&ds).unwrap();
    let cfg = TrainConfig {
        max_steps: 5,
        ..quick()
    };
    let a = train::<f32, _>(
        ModelSpec::softmax_linear(3072, 3),
        &cfg,
        &m,
        &data,
        SamplerMode::Reweight,
        2,
    )
    .unwrap();
    let b = train::<f64, _>(
        ModelSpec::softmax_linear(3072, 3),
        &cfg,
        &m,
        &data,
        SamplerMode::Reweight,
        2,
    )
    .unwrap();
    let diff = a
        .model
        .params
        .iter()
        .zip(&b.model.params)
        .map(|(x, y)| (*x as f64 - y).abs())
        .fold(0.0, f64::max);
    assert!(diff < 1e-4, "max parameter difference {diff}");
}

#[test]
fn sweep_feeds_every_aggregate() {
    let ds = gen_sprites(8, 6).unwrap();
    let method = |name: &str, sampler| MethodSpec {
        name: name.into(),
        sampler,
        transforms: TransformConfig::default(),
        model: ModelKind::SoftmaxLinear,
    };
    let spec = SweepSpec {
        methods: vec![method("erm", SamplerMode::Plain), method("rw", SamplerMode::Reweight)],
        shifts: vec![ShiftEntry {
            name: "ld".into(),
            spec: ShiftSpec::low_data([2], 2, 2),
            n_values: vec![1, 2],
        }],
        seeds: vec![0, 1, 2],
        hyper: HyperGrid::learning_rates(&[1e-2, 1e-3]).unwrap(),
        train: TrainConfig {
            max_steps: 10,
            ..quick()
        },
    };
    let table = run_sweep::<f32>(&spec, &ds, 17).unwrap();
    assert_eq!(table.len(), spec.cell_count());
    assert_eq!(run_sweep::<f32>(&spec, &ds, 17).unwrap(), table);

    let summary = aggregate_mean_std(&table);
    assert_eq!(summary.len(), 4);
    let pc = percent_change(&table, "erm", PercentMode::PooledMean).unwrap();
    assert!(pc.values[0].iter().all(|v| *v == Some(0.0)));
    let ranks = rank_methods(&table).unwrap();
    assert_eq!(ranks.vectors.len(), 6);
    for v in &ranks.vectors {
        assert_eq!(v.ranks.iter().sum::<f64>(), 3.0);
    }
    let by_method: BTreeMap<_, _> = ranks.methods.iter().zip(&ranks.median).collect();
    assert!(by_method.values().all(|&&m| (1.0..=2.0).contains(&m)));
}
