//! Model file: `SBMODEL1`, a little-endian `u32` header length, a JSON header, then the
//! parameters as little-endian `f32`.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::num::{fmt9, Scalar};
use crate::rng::digest_hex;
use crate::train::model::{Model, ModelKind, ModelSpec};
use crate::train::trainer::TrainedModel;

const MAGIC: &[u8; 8] = b"SBMODEL1";

/// Header contents besides the model spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMetrics {
    pub best_val_top1: f64,
    pub steps_run: usize,
    pub test_top1: Option<f64>,
    /// Digest of the configuration that produced the model.
    pub spec_digest: String,
    /// Digest of the parameter block.
    pub param_digest: String,
}

fn param_block<T: Scalar>(params: &[T]) -> Vec<u8> {
    let mut out = Vec::with_capacity(params.len() * 4);
    for p in params {
        out.extend_from_slice(&(p.to_f64_lossy() as f32).to_le_bytes());
    }
    out
}

/// Digest of the `f32` parameter block as stored on disk.
pub fn model_digest<T: Scalar>(model: &Model<T>) -> String {
    digest_hex(&param_block(&model.params))
}

fn spec_json(spec: &ModelSpec) -> String {
    let mut s = format!("{{\"kind\":\"{}\"", spec.kind_name());
    if let ModelKind::Mlp1 { hidden } = spec.kind {
        write!(s, ",\"hidden\":{hidden}").unwrap();
    }
    write!(
        s,
        ",\"input_dim\":{},\"num_classes\":{}}}",
        spec.input_dim, spec.num_classes
    )
    .unwrap();
    s
}

pub fn encode_model<T: Scalar>(trained: &TrainedModel<T>, test_top1: Option<f64>, spec_digest: &str) -> Vec<u8> {
    let block = param_block(&trained.model.params);
    let mut header = format!(
        "{{\"spec\":{},\"metrics\":{{\"best_val_top1\":{},\"steps_run\":{},\"test_top1\":{},\"param_digest\":\"{}\"}},\"spec_digest\":{}}}",
        spec_json(&trained.model.spec),
        fmt9(trained.best_val_top1),
        trained.steps_run,
        test_top1.map_or("null".to_string(), fmt9),
        digest_hex(&block),
        serde_json::to_string(spec_digest).unwrap(),
    );
    header.shrink_to_fit();
    let mut out = Vec::with_capacity(12 + header.len() + block.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&block);
    out
}

pub fn decode_model<T: Scalar>(bytes: &[u8]) -> Result<(TrainedModel<T>, ModelMetrics)> {
    let bad = |m: &str| Error::Format(format!("model file: {m}"));
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(bad("missing magic"));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header = bytes.get(12..12 + hlen).ok_or_else(|| bad("truncated header"))?;
    let v: Value = serde_json::from_slice(header).map_err(|e| bad(&e.to_string()))?;
    let spec_v = &v["spec"];
    let input_dim = spec_v["input_dim"].as_u64().ok_or_else(|| bad("input_dim"))? as usize;
    let num_classes = spec_v["num_classes"].as_u64().ok_or_else(|| bad("num_classes"))? as usize;
    let spec = match spec_v["kind"].as_str() {
        Some("softmax_linear") => ModelSpec::softmax_linear(input_dim, num_classes),
        Some("mlp1") => ModelSpec::mlp1(
            input_dim,
            spec_v["hidden"].as_u64().ok_or_else(|| bad("hidden"))? as usize,
            num_classes,
        ),
        _ => return Err(bad("unknown model kind")),
    };
    let block = &bytes[12 + hlen..];
    if block.len() != spec.param_count() * 4 {
        return Err(Error::Dimension {
            expected: spec.param_count() * 4,
            got: block.len(),
        });
    }
    let m = &v["metrics"];
    let metrics = ModelMetrics {
        best_val_top1: m["best_val_top1"].as_f64().ok_or_else(|| bad("best_val_top1"))?,
        steps_run: m["steps_run"].as_u64().ok_or_else(|| bad("steps_run"))? as usize,
        test_top1: m["test_top1"].as_f64(),
        spec_digest: v["spec_digest"].as_str().unwrap_or_default().to_string(),
        param_digest: m["param_digest"].as_str().unwrap_or_default().to_string(),
    };
    if metrics.param_digest != digest_hex(block) {
        return Err(bad("parameter digest mismatch"));
    }
    let params = block
        .chunks_exact(4)
        .map(|c| T::of(f32::from_le_bytes(c.try_into().unwrap()) as f64))
        .collect();
    let trained = TrainedModel {
        model: Model::from_params(spec, params)?,
        best_val_top1: metrics.best_val_top1,
        steps_run: metrics.steps_run,
    };
    Ok((trained, metrics))
}

pub fn write_model<T: Scalar>(
    path: impl AsRef<Path>,
    trained: &TrainedModel<T>,
    test_top1: Option<f64>,
    spec_digest: &str,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(trained, test_top1, spec_digest)).map_err(|e| Error::io(path, e))
}

pub fn read_model<T: Scalar>(path: impl AsRef<Path>) -> Result<(TrainedModel<T>, ModelMetrics)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let model: Model<f32> = Model::init(ModelSpec::mlp1(12, 5, 3), 2).unwrap();
        let t = TrainedModel {
            model,
            best_val_top1: 0.75,
            steps_run: 40,
        };
        let bytes = encode_model(&t, Some(0.5), "abc");
        let (back, metrics) = decode_model::<f32>(&bytes).unwrap();
        assert_eq!(back, t);
        assert_eq!(metrics.test_top1, Some(0.5));
        assert_eq!(metrics.spec_digest, "abc");
        assert_eq!(metrics.param_digest, model_digest(&t.model));
        assert_eq!(encode_model(&back, Some(0.5), "abc"), bytes);
    }

    #[test]
    fn corruption_detected() {
        let model: Model<f32> = Model::init(ModelSpec::softmax_linear(4, 2), 2).unwrap();
        let t = TrainedModel {
            model,
            best_val_top1: 1.0,
            steps_run: 1,
        };
        let mut bytes = encode_model(&t, None, "");
        let last = bytes.len() - 1;
        bytes[last] ^= 0x40;
        assert!(matches!(decode_model::<f32>(&bytes), Err(Error::Format(_))));
        assert!(decode_model::<f32>(b"nope").is_err());
    }
}
