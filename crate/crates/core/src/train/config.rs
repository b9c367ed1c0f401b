//! JSON forms of the model, training and sampler settings.

use serde_json::Value;

use crate::error::FieldError;
use crate::json;
use crate::train::{ModelKind, OptimizerKind, SamplerMode, TrainConfig, Transform, TransformConfig, TransformName};

/// `{"kind":"softmax_linear"}` or `{"kind":"mlp1","hidden":64}`.
pub fn model_kind_from_value(v: &Value) -> Result<ModelKind, FieldError> {
    let obj = json::as_object(v, "")?;
    json::no_unknown_keys(obj, &["kind", "hidden"], "")?;
    match json::req_str(obj, "kind", "")? {
        "softmax_linear" => Ok(ModelKind::SoftmaxLinear),
        "mlp1" => {
            let hidden = json::req_usize(obj, "hidden", "")?;
            if hidden == 0 {
                return Err(FieldError::new("/hidden", "range"));
            }
            Ok(ModelKind::Mlp1 { hidden })
        }
        _ => Err(FieldError::new("/kind", "enum")),
    }
}

/// `{"mode":"plain"|"reweight"|"mixture","alpha":f}`.
pub fn sampler_mode_from_value(v: &Value) -> Result<SamplerMode, FieldError> {
    let obj = json::as_object(v, "")?;
    json::no_unknown_keys(obj, &["mode", "alpha"], "")?;
    match json::req_str(obj, "mode", "")? {
        "plain" => Ok(SamplerMode::Plain),
        "reweight" => Ok(SamplerMode::Reweight),
        "mixture" => {
            let alpha = json::opt_f64(obj, "alpha", "")?.ok_or_else(|| FieldError::new("/alpha", "required"))?;
            json::check_range(alpha, (0.0..=1.0).contains(&alpha), "/alpha".into())?;
            Ok(SamplerMode::Mixture { alpha })
        }
        _ => Err(FieldError::new("/mode", "enum")),
    }
}

/// List of `{"name":..,"enabled":bool,"magnitude":f}`; `enabled` defaults to true.
pub fn transforms_from_value(v: &Value, apply_prob: Option<f64>) -> Result<TransformConfig, FieldError> {
    let arr = v.as_array().ok_or_else(|| FieldError::new("", "type"))?;
    let mut transforms = Vec::with_capacity(arr.len());
    for (i, t) in arr.iter().enumerate() {
        let path = format!("/{i}");
        let obj = json::as_object(t, &path)?;
        json::no_unknown_keys(obj, &["name", "enabled", "magnitude"], &path)?;
        let name = TransformName::parse(json::req_str(obj, "name", &path)?)
            .map_err(|_| FieldError::new(format!("{path}/name"), "enum"))?;
        let magnitude = json::opt_f64(obj, "magnitude", &path)?.unwrap_or(name.default_magnitude());
        json::check_range(magnitude, magnitude >= 0.0, format!("{path}/magnitude"))?;
        transforms.push(Transform {
            name,
            enabled: json::opt_bool(obj, "enabled", &path)?.unwrap_or(true),
            magnitude,
        });
    }
    let apply_prob = apply_prob.unwrap_or(0.5);
    Ok(TransformConfig { transforms, apply_prob })
}

/// Training settings; absent keys keep their defaults.
pub fn train_config_from_value(v: &Value) -> Result<TrainConfig, FieldError> {
    let obj = json::as_object(v, "")?;
    json::no_unknown_keys(
        obj,
        &[
            "learning_rate",
            "batch_size",
            "max_steps",
            "patience",
            "eval_every",
            "optimizer",
            "transforms",
            "transform_prob",
        ],
        "",
    )?;
    let mut c = TrainConfig::default();
    if let Some(lr) = json::opt_f64(obj, "learning_rate", "")? {
        c.learning_rate = json::check_range(lr, lr > 0.0, "/learning_rate".into())?;
    }
    let positive = |key: &str, cur: usize| -> Result<usize, FieldError> {
        match json::opt_usize(obj, key, "")? {
            Some(0) => Err(FieldError::new(format!("/{key}"), "range")),
            Some(v) => Ok(v),
            None => Ok(cur),
        }
    };
    c.batch_size = positive("batch_size", c.batch_size)?;
    c.patience = positive("patience", c.patience)?;
    c.eval_every = positive("eval_every", c.eval_every)?;
    c.max_steps = json::opt_usize(obj, "max_steps", "")?.unwrap_or(c.max_steps);
    c.optimizer = match json::opt_str(obj, "optimizer", "")? {
        None | Some("adam") => OptimizerKind::adam(),
        Some("sgd") => OptimizerKind::Sgd,
        Some(_) => return Err(FieldError::new("/optimizer", "enum")),
    };
    let prob = json::opt_f64(obj, "transform_prob", "")?;
    if let Some(p) = prob {
        json::check_range(p, (0.0..=1.0).contains(&p), "/transform_prob".into())?;
    }
    c.transforms = match json::opt(obj, "transforms") {
        Some(t) => transforms_from_value(t, prob).map_err(|e| e.under("/transforms"))?,
        None => TransformConfig {
            apply_prob: prob.unwrap_or(0.5),
            ..Default::default()
        },
    };
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn parses_train_config() {
        let c = train_config_from_value(&json!({
            "learning_rate": 0.01, "batch_size": 64, "optimizer": "sgd",
            "transforms": [{"name": "hflip"}, {"name": "translate", "magnitude": 2, "enabled": false}]
        }))
        .unwrap();
        assert_eq!(c.learning_rate, 0.01);
        assert_eq!(c.batch_size, 64);
        assert_eq!(c.optimizer, OptimizerKind::Sgd);
        assert_eq!(c.transforms.transforms.len(), 2);
        assert!(!c.transforms.transforms[1].enabled);
        assert_eq!(c.max_steps, 20_000);
    }

    #[test]
    fn reports_paths() {
        let e = train_config_from_value(&json!({"transforms": [{"name": "rotate"}]})).unwrap_err();
        assert_eq!(e, FieldError::new("/transforms/0/name", "enum"));
        let e = train_config_from_value(&json!({"batch_size": 0})).unwrap_err();
        assert_eq!(e, FieldError::new("/batch_size", "range"));
        let e = sampler_mode_from_value(&json!({"mode": "mixture", "alpha": 2.0})).unwrap_err();
        assert_eq!(e, FieldError::new("/alpha", "range"));
        let e = model_kind_from_value(&json!({"kind": "resnet"})).unwrap_err();
        assert_eq!(e, FieldError::new("/kind", "enum"));
    }

    #[test]
    fn learning_rate_grid_values_validate() {
        for lr in [1e-2, 1e-3, 1e-4] {
            let c = train_config_from_value(&json!({ "learning_rate": lr })).unwrap();
            c.validate().unwrap();
        }
    }
}
