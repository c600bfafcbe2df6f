//! Model files.
//!
//! A model file is TOML with exactly these keys:
//!
//! ```toml
//! dimension = 1
//! states = ["A", "B"]
//! pi = ["1/2", "1/2"]
//! support = [[-1], [0], [1]]
//! p0 = ["1/3", "1/3", "1/3"]
//!
//! [c]
//! A = ["1/8", "-1/4", "1/8"]
//! B = ["-1/8", "1/4", "-1/8"]
//! ```
//!
//! Real-valued entries are either TOML numbers or strings holding a
//! decimal or a ratio `"p/q"`, so that values like 1/3 round once. `p0`
//! and each `c` list are ordered like `support`; the support may be given in
//! any order and is sorted lexicographically on load. Unknown keys are
//! rejected.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{DisplacementSupport, EnvAlphabet, EnvLaw, Kernel, Model, ModelError};

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Syntax(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ModelFileError {
    ModelFileError::Field { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Real {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Real {
    fn value(&self, field: &str) -> Result<f64, ModelFileError> {
        let v = match self {
            Real::Int(i) => *i as f64,
            Real::Float(f) => *f,
            Real::Text(s) => parse_real(s).ok_or_else(|| {
                field_err(field, format!("`{s}` is not a number or ratio p/q"))
            })?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(field_err(field, "non-finite value"))
        }
    }
}

fn parse_real(text: &str) -> Option<f64> {
    let text = text.trim();
    match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().ok()?;
            let den: f64 = den.trim().parse().ok()?;
            (den != 0.0).then(|| num / den)
        }
        None => text.parse().ok(),
    }
}

fn reals(values: &[Real], field: &str) -> Result<Vec<f64>, ModelFileError> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| v.value(&format!("{field}[{i}]")))
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    dimension: usize,
    states: Vec<String>,
    pi: Vec<Real>,
    support: Vec<Vec<i64>>,
    p0: Vec<Real>,
    c: BTreeMap<String, Vec<Real>>,
}

/// A parsed model together with the SHA-256 of the source text.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: Model,
    pub hash: String,
}

impl ModelFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelFileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, ModelFileError> {
        Ok(ModelFile { model: parse_model(text)?, hash: content_hash(text) })
    }
}

pub fn content_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn parse_model(text: &str) -> Result<Model, ModelFileError> {
    let raw: RawModel = toml::from_str(text).map_err(|e| ModelFileError::Syntax(e.to_string()))?;

    let alphabet = EnvAlphabet::new(raw.states.clone())?;
    let law = EnvLaw::new(reals(&raw.pi, "pi")?)?;
    if law.len() != alphabet.len() {
        return Err(field_err(
            "pi",
            format!("{} entries for {} states", law.len(), alphabet.len()),
        ));
    }

    let k = raw.support.len();
    for (i, u) in raw.support.iter().enumerate() {
        if u.len() != raw.dimension {
            return Err(field_err(
                format!("support[{i}]"),
                format!("has {} coordinates, dimension is {}", u.len(), raw.dimension),
            ));
        }
    }
    let p0 = reals(&raw.p0, "p0")?;
    if p0.len() != k {
        return Err(field_err("p0", format!("{} entries for {k} displacements", p0.len())));
    }

    for key in raw.c.keys() {
        if alphabet.index_of(key).is_err() {
            return Err(field_err(format!("c.{key}"), "not a declared state"));
        }
    }
    let mut columns = Vec::with_capacity(alphabet.len());
    for label in alphabet.labels() {
        let values = raw
            .c
            .get(label)
            .ok_or_else(|| field_err("c", format!("missing column for state `{label}`")))?;
        let col = reals(values, &format!("c.{label}"))?;
        if col.len() != k {
            return Err(field_err(
                format!("c.{label}"),
                format!("{} entries for {k} displacements", col.len()),
            ));
        }
        columns.push(col);
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| raw.support[a].cmp(&raw.support[b]));
    let displacements = order.iter().map(|&i| raw.support[i].clone()).collect();
    let p0 = order.iter().map(|&i| p0[i]).collect();
    let columns = columns
        .iter()
        .map(|col| order.iter().map(|&i| col[i]).collect())
        .collect();

    let support = DisplacementSupport::new(raw.dimension, displacements)?;
    let kernel = Kernel::new(support, p0, columns)?;
    Ok(Model::new(alphabet, law, kernel)?)
}
