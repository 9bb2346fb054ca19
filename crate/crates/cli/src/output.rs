//! Fixed-width number formatting and file emission.

use std::fs;
use std::path::Path;

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{CliError, Result};

/// 17 significant digits, scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV field: empty for missing or non-finite values.
pub fn field(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => num(v),
        _ => String::new(),
    }
}

pub fn ser_num<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    ser_opt(&Some(*x), s)
}

pub fn ser_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) if v.is_finite() => RawValue::from_string(num(*v))
            .map_err(serde::ser::Error::custom)?
            .serialize(s),
        _ => s.serialize_none(),
    }
}

pub fn ser_nums<S: Serializer>(x: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(x.len()))?;
    for v in x {
        let raw = if v.is_finite() {
            Some(RawValue::from_string(num(*v)).map_err(serde::ser::Error::custom)?)
        } else {
            None
        };
        seq.serialize_element(&raw)?;
    }
    seq.end()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Shortest round-trip text of a parameter, for file names.
pub fn tag(x: f64) -> String {
    format!("{x}")
}
