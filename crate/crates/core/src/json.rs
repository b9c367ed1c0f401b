//! Field access over `serde_json::Value` with JSON-pointer error locations.

use serde_json::{Map, Value};

use crate::error::FieldError;

pub type Object = Map<String, Value>;

pub fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Object, FieldError> {
    v.as_object().ok_or_else(|| FieldError::new(path, "type"))
}

fn ptr(path: &str, key: &str) -> String {
    format!("{path}/{key}")
}

pub fn opt<'a>(obj: &'a Object, key: &str) -> Option<&'a Value> {
    obj.get(key).filter(|v| !v.is_null())
}

pub fn req<'a>(obj: &'a Object, key: &str, path: &str) -> Result<&'a Value, FieldError> {
    opt(obj, key).ok_or_else(|| FieldError::new(ptr(path, key), "required"))
}

pub fn opt_u64(obj: &Object, key: &str, path: &str) -> Result<Option<u64>, FieldError> {
    opt(obj, key)
        .map(|v| v.as_u64().ok_or_else(|| FieldError::new(ptr(path, key), "type")))
        .transpose()
}

pub fn req_u64(obj: &Object, key: &str, path: &str) -> Result<u64, FieldError> {
    opt_u64(obj, key, path)?.ok_or_else(|| FieldError::new(ptr(path, key), "required"))
}

pub fn opt_usize(obj: &Object, key: &str, path: &str) -> Result<Option<usize>, FieldError> {
    Ok(opt_u64(obj, key, path)?.map(|v| v as usize))
}

pub fn req_usize(obj: &Object, key: &str, path: &str) -> Result<usize, FieldError> {
    Ok(req_u64(obj, key, path)? as usize)
}

pub fn opt_f64(obj: &Object, key: &str, path: &str) -> Result<Option<f64>, FieldError> {
    opt(obj, key)
        .map(|v| v.as_f64().ok_or_else(|| FieldError::new(ptr(path, key), "type")))
        .transpose()
}

pub fn opt_str<'a>(obj: &'a Object, key: &str, path: &str) -> Result<Option<&'a str>, FieldError> {
    opt(obj, key)
        .map(|v| v.as_str().ok_or_else(|| FieldError::new(ptr(path, key), "type")))
        .transpose()
}

pub fn req_str<'a>(obj: &'a Object, key: &str, path: &str) -> Result<&'a str, FieldError> {
    opt_str(obj, key, path)?.ok_or_else(|| FieldError::new(ptr(path, key), "required"))
}

pub fn opt_bool(obj: &Object, key: &str, path: &str) -> Result<Option<bool>, FieldError> {
    opt(obj, key)
        .map(|v| v.as_bool().ok_or_else(|| FieldError::new(ptr(path, key), "type")))
        .transpose()
}

pub fn check_range(v: f64, ok: bool, path: String) -> Result<f64, FieldError> {
    if ok && v.is_finite() {
        Ok(v)
    } else {
        Err(FieldError::new(path, "range"))
    }
}

/// Rejects keys outside `allowed`.
pub fn no_unknown_keys(obj: &Object, allowed: &[&str], path: &str) -> Result<(), FieldError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(FieldError::new(ptr(path, k), "unknown")),
        None => Ok(()),
    }
}
