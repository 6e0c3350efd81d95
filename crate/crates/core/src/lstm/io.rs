//! Versioned JSON model documents.
//!
//! Weights are nested decimal arrays (matrices as arrays of rows). `f64`
//! values are written in shortest round-trip form and parsed with correct
//! rounding, so a saved model reloads bit-for-bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::LstmConfig;
use super::params::{LayerParams, LstmParams, Matrix};
use super::LstmModel;
use crate::dataset::Normalization;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("cannot read model file: {0}")]
    Io(String),
    #[error("malformed model document: {0}")]
    Json(String),
    #[error("model schema version {found} is not supported (expected {expected})")]
    Version { found: u64, expected: u32 },
    #[error("tensor {tensor}: {message}")]
    Shape { tensor: String, message: String },
    #[error("invalid model: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    w: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HeadDoc {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightsDoc {
    layers: Vec<LayerDoc>,
    dense: HeadDoc,
    output: HeadDoc,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    schema_version: u32,
    config: LstmConfig,
    features: Vec<String>,
    normalization: Normalization,
    weights: WeightsDoc,
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows).map(|r| m.row(r).to_vec()).collect()
}

fn matrix(tensor: &str, doc: Vec<Vec<f64>>, rows: usize, cols: usize) -> Result<Matrix, LoadError> {
    let shape_err = |message: String| LoadError::Shape { tensor: tensor.to_string(), message };
    if doc.len() != rows {
        return Err(shape_err(format!("{} rows, expected {rows}", doc.len())));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (r, row) in doc.into_iter().enumerate() {
        if row.len() != cols {
            return Err(shape_err(format!("row {r} has {} values, expected {cols}", row.len())));
        }
        data.extend(row);
    }
    Ok(Matrix { rows, cols, data })
}

fn vector(tensor: &str, doc: Vec<f64>, len: usize) -> Result<Vec<f64>, LoadError> {
    if doc.len() != len {
        return Err(LoadError::Shape { tensor: tensor.to_string(), message: format!("{} values, expected {len}", doc.len()) });
    }
    Ok(doc)
}

pub fn model_to_json(model: &LstmModel) -> String {
    let p = &model.params;
    let doc = ModelDoc {
        schema_version: SCHEMA_VERSION,
        config: model.config.clone(),
        features: model.features.clone(),
        normalization: model.normalization.clone(),
        weights: WeightsDoc {
            layers: p.layers.iter().map(|l| LayerDoc { w: rows(&l.w), u: rows(&l.u), b: l.b.clone() }).collect(),
            dense: HeadDoc { w: rows(&p.dense_w), b: p.dense_b.clone() },
            output: HeadDoc { w: rows(&p.out_w), b: p.out_b.clone() },
        },
    };
    let mut text = serde_json::to_string(&doc).expect("model weights are finite");
    text.push('\n');
    text
}

pub fn model_from_json(text: &str) -> Result<LstmModel, LoadError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| LoadError::Json(e.to_string()))?;
    let version = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| LoadError::Json("missing schema_version".into()))?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(LoadError::Version { found: version, expected: SCHEMA_VERSION });
    }
    let doc: ModelDoc = serde_json::from_value(value).map_err(|e| LoadError::Json(e.to_string()))?;
    let config = doc.config;
    config.validate().map_err(|e| LoadError::Invalid(e.to_string()))?;
    if doc.weights.layers.len() != config.layers {
        return Err(LoadError::Shape {
            tensor: "layers".into(),
            message: format!("{} layers, expected {}", doc.weights.layers.len(), config.layers),
        });
    }

    let h = config.hidden;
    let mut layers = Vec::with_capacity(config.layers);
    for (l, layer) in doc.weights.layers.into_iter().enumerate() {
        let in_dim = if l == 0 { config.input_features } else { h };
        layers.push(LayerParams {
            w: matrix(&format!("layers[{l}].w"), layer.w, 4 * h, in_dim)?,
            u: matrix(&format!("layers[{l}].u"), layer.u, 4 * h, h)?,
            b: vector(&format!("layers[{l}].b"), layer.b, 4 * h)?,
        });
    }
    let params = LstmParams {
        layers,
        dense_w: matrix("dense.w", doc.weights.dense.w, h, h)?,
        dense_b: vector("dense.b", doc.weights.dense.b, h)?,
        out_w: matrix("output.w", doc.weights.output.w, config.classes, h)?,
        out_b: vector("output.b", doc.weights.output.b, config.classes)?,
    };
    let f = config.input_features;
    vector("normalization.mean", doc.normalization.mean.clone(), f)?;
    vector("normalization.std", doc.normalization.std.clone(), f)?;
    LstmModel::new(config, params, doc.normalization, doc.features).map_err(|e| LoadError::Invalid(e.to_string()))
}

pub fn save_model(model: &LstmModel, path: &Path) -> std::io::Result<()> {
    fs::write(path, model_to_json(model))
}

pub fn load_model(path: &Path) -> Result<LstmModel, LoadError> {
    let text = fs::read_to_string(path).map_err(|e| LoadError::Io(format!("{}: {e}", path.display())))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> LstmModel {
        let config = LstmConfig { input_features: 2, window: 3, hidden: 3, layers: 2, ..LstmConfig::default() };
        let params = LstmParams::init(&config, &mut ChaCha8Rng::seed_from_u64(5));
        let norm = Normalization { mean: vec![0.1, -3.0], std: vec![2.0, 1.0 / 3.0] };
        LstmModel::new(config, params, norm, vec!["accelerometer_x".into(), "gravity_x".into()]).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        assert_eq!(model_from_json(&model_to_json(&m)).unwrap(), m);
    }

    #[test]
    fn wrong_row_length_names_the_tensor() {
        let m = model();
        let mut doc: serde_json::Value = serde_json::from_str(&model_to_json(&m)).unwrap();
        doc["weights"]["layers"][1]["u"][2].as_array_mut().unwrap().pop();
        match model_from_json(&doc.to_string()) {
            Err(LoadError::Shape { tensor, .. }) => assert_eq!(tensor, "layers[1].u"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bumped_version_is_incompatible() {
        let mut doc: serde_json::Value = serde_json::from_str(&model_to_json(&model())).unwrap();
        doc["schema_version"] = serde_json::json!(2);
        assert_eq!(model_from_json(&doc.to_string()), Err(LoadError::Version { found: 2, expected: 1 }));
    }

    #[test]
    fn truncated_document() {
        let text = model_to_json(&model());
        assert!(matches!(model_from_json(&text[..text.len() / 2]), Err(LoadError::Json(_))));
    }
}
