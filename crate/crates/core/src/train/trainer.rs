use crate::data::SplitManifest;
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::rng::{derive_seed, Pcg32};
use crate::sampler::{MixtureSampler, SamplerState, Slot};
use crate::sprites::SpriteAugmenter;
use crate::train::access::{encode_image, encode_input, DataAccess, Input};
use crate::train::model::{Model, ModelSpec, Scratch};
use crate::train::optim::{Optimizer, OptimizerKind};
use crate::train::transforms::{apply_transforms, TransformConfig};

/// How minibatches are drawn from the manifest's train entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplerMode {
    /// Uniform over train entries.
    Plain,
    /// Proportional to the manifest weights.
    Reweight,
    /// Reweighted real samples mixed with attribute-swapped renders at rate `alpha`.
    Mixture { alpha: f64 },
}

impl SamplerMode {
    pub fn name(&self) -> &'static str {
        match self {
            SamplerMode::Plain => "plain",
            SamplerMode::Reweight => "reweight",
            SamplerMode::Mixture { .. } => "mixture",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_steps: usize,
    /// Evaluations without improvement before stopping.
    pub patience: usize,
    pub eval_every: usize,
    pub optimizer: OptimizerKind,
    pub transforms: TransformConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 128,
            max_steps: 20_000,
            patience: 10,
            eval_every: 100,
            optimizer: OptimizerKind::adam(),
            transforms: TransformConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 || self.patience == 0 || self.eval_every == 0 {
            return Err(Error::Config(
                "batch_size, patience and eval_every must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.transforms.apply_prob) {
            return Err(Error::Config("transform apply probability outside [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<T> {
    pub model: Model<T>,
    pub best_val_top1: f64,
    pub steps_run: usize,
}

/// Fraction of `ids` whose arg-max prediction equals the record's true label.
pub fn evaluate_top1<T: Scalar, D: DataAccess + ?Sized>(model: &Model<T>, ids: &[u64], data: &D) -> Result<f64> {
    if ids.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty id list".into()));
    }
    let mut x = vec![T::zero(); model.spec.input_dim];
    let mut s = Scratch::default();
    let mut correct = 0usize;
    for &id in ids {
        let label = data.label(id)?;
        encode_input(&data.input(id)?, &mut x)?;
        if model.predict(&x, &mut s) == label as usize {
            correct += 1;
        }
    }
    Ok(correct as f64 / ids.len() as f64)
}

enum Source {
    Base(SamplerState),
    Mixture(MixtureSampler<SpriteAugmenter>),
}

/// Minimizes cross-entropy on minibatches from the manifest's train entries and returns the
/// parameters with the best validation top-1 (earliest on ties; the initialization counts).
pub fn train<T: Scalar, D: DataAccess + ?Sized>(
    spec: ModelSpec,
    config: &TrainConfig,
    manifest: &SplitManifest,
    data: &D,
    mode: SamplerMode,
    seed: u64,
) -> Result<TrainedModel<T>> {
    spec.validate()?;
    config.validate()?;
    if manifest.train.is_empty() || manifest.val.is_empty() {
        return Err(Error::Config("train and val splits must be non-empty".into()));
    }
    if spec.input_dim != data.input_dim() {
        return Err(Error::Dimension {
            expected: spec.input_dim,
            got: data.input_dim(),
        });
    }
    let schema = data.dataset().schema();
    if spec.num_classes != schema.num_labels() {
        return Err(Error::Dimension {
            expected: schema.num_labels(),
            got: spec.num_classes,
        });
    }

    let labels: Vec<usize> = manifest
        .train
        .iter()
        .map(|e| Ok(e.label_override.map_or(data.label(e.id)?, |l| l) as usize))
        .collect::<Result<_>>()?;
    let sampler_seed = derive_seed(seed, "train/sampler");
    let mut source = match mode {
        SamplerMode::Plain => Source::Base(SamplerState::uniform(manifest.train.len(), sampler_seed)?),
        SamplerMode::Reweight => {
            let w: Vec<f64> = manifest.train.iter().map(|e| e.weight).collect();
            Source::Base(SamplerState::new(&w, sampler_seed)?)
        }
        SamplerMode::Mixture { alpha } => {
            let w: Vec<f64> = manifest.train.iter().map(|e| e.weight).collect();
            let base = SamplerState::new(&w, sampler_seed)?;
            let aug = if alpha > 0.0 {
                Some(SpriteAugmenter::new(data.dataset(), manifest.train_ids())?)
            } else {
                None
            };
            let grid = (schema.num_labels() as u32, schema.num_nuisance() as u32);
            Source::Mixture(MixtureSampler::new(
                base,
                aug,
                alpha,
                grid,
                derive_seed(seed, "train/mixture"),
            )?)
        }
    };
    let mut aug_rng = Pcg32::derived(seed, "train/transforms");

    let mut model: Model<T> = Model::init(spec, derive_seed(seed, "train/init"))?;
    let mut best = TrainedModel {
        best_val_top1: evaluate_top1(&model, &manifest.val, data)?,
        model: model.clone(),
        steps_run: 0,
    };
    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, model.params.len());
    let mut grad = vec![T::zero(); model.params.len()];
    let mut x = vec![T::zero(); spec.input_dim];
    let mut scratch = Scratch::default();
    let mut stale = 0usize;
    let use_transforms = !config.transforms.is_identity();
    let batch_scale = T::of(1.0 / config.batch_size as f64);

    for step in 1..=config.max_steps {
        grad.iter_mut().for_each(|g| *g = T::zero());
        let mut loss = T::zero();
        for _ in 0..config.batch_size {
            let (img, label) = match &mut source {
                Source::Base(s) => (None, s.draw_one()),
                Source::Mixture(m) => match m.draw_one()? {
                    Slot::Real(i) => (None, i),
                    Slot::Augmented(req) => (Some((data.augmented(&req)?, req.label as usize)), usize::MAX),
                },
            };
            let (input_img, y) = match img {
                Some((rendered, y)) => (Some(rendered), y),
                None => {
                    let e = &manifest.train[label];
                    match data.input(e.id)? {
                        Input::Image(i) => (Some(i.clone()), labels[label]),
                        other => {
                            encode_input(&other, &mut x)?;
                            (None, labels[label])
                        }
                    }
                }
            };
            if let Some(mut im) = input_img {
                if use_transforms {
                    im = apply_transforms(&im, &config.transforms, &mut aug_rng);
                }
                if x.len() != im.pixels.len() {
                    return Err(Error::Dimension {
                        expected: x.len(),
                        got: im.pixels.len(),
                    });
                }
                encode_image(&im, &mut x);
            }
            loss += model.accumulate(&x, y, &mut grad, &mut scratch);
        }
        if !(loss * batch_scale).is_finite() {
            return Err(Error::NonFiniteLoss(step));
        }
        grad.iter_mut().for_each(|g| *g *= batch_scale);
        opt.step(&mut model.params, &grad);
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteLoss(step));
        }

        if step % config.eval_every == 0 || step == config.max_steps {
            let acc = evaluate_top1(&model, &manifest.val, data)?;
            if acc > best.best_val_top1 {
                best.best_val_top1 = acc;
                best.model.params.copy_from_slice(&model.params);
                stale = 0;
            } else {
                stale += 1;
            }
            best.steps_run = step;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok(best)
}
