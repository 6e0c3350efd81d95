//! Stacked LSTM sequence classifier written from first principles.
//!
//! The network unrolls `L` LSTM layers of `H` units over a `T × F` window,
//! reads the top layer's final hidden state through a rectifier dense layer
//! and a softmax head, and trains on mean cross-entropy with Adam. All
//! arithmetic is `f64`.

mod config;
mod io;
mod network;
mod optim;
mod params;

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Normalization, SequenceWindow, SplitDataset};
use crate::sensor::MotionType;

pub use self::config::{
    DenseActivation, LstmConfig, DEFAULT_BATCH_SIZE, DEFAULT_CLIP_NORM, DEFAULT_EPOCHS, DEFAULT_HIDDEN,
    DEFAULT_LAYERS, DEFAULT_LEARNING_RATE, DEFAULT_WINDOW,
};
pub use self::io::{load_model, model_from_json, model_to_json, save_model, LoadError, SCHEMA_VERSION};
pub use self::network::{
    argmax, batch_gradients, cell_forward, clip_global_norm, evaluate_loss, forward, loss_and_grads, BatchOutcome,
    Example, ForwardTrace,
};
pub use self::optim::Adam;
pub use self::params::{LayerParams, LstmParams, Matrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LstmError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("feature mismatch: model expects [{expected}], got [{found}]")]
    FeatureMismatch { expected: String, found: String },
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("training diverged at epoch {epoch}, batch {batch} (loss {loss})")]
    Diverged { epoch: usize, batch: usize, loss: f64, history: TrainingHistory },
}

/// Metrics recorded after one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean batch loss over the epoch, measured before each update.
    pub train_loss: f64,
    pub train_accuracy: f64,
    /// `None` when the split has no test windows.
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingHistory {
    /// `epoch,train_loss,train_acc,test_loss,test_acc`, one row per epoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,test_loss,test_acc\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for e in &self.epochs {
            writeln!(
                out,
                "{},{},{},{},{}",
                e.epoch,
                e.train_loss,
                e.train_accuracy,
                opt(e.test_loss),
                opt(e.test_accuracy)
            )
            .unwrap();
        }
        out
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

/// Trained classifier with everything needed to score raw windows.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub config: LstmConfig,
    pub params: LstmParams,
    pub normalization: Normalization,
    pub features: Vec<String>,
}

/// Predicted class of one window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub class: usize,
    /// Set when the model has one output per motion type.
    pub motion: Option<MotionType>,
    pub probability: f64,
    pub probabilities: Vec<f64>,
}

impl LstmModel {
    pub fn new(
        config: LstmConfig,
        params: LstmParams,
        normalization: Normalization,
        features: Vec<String>,
    ) -> Result<Self, LstmError> {
        config.validate()?;
        let expected = LstmParams::zeros(&config);
        for ((name, a), b) in expected.tensor_names().iter().zip(expected.tensors()).zip(params.tensors()) {
            if a.len() != b.len() {
                return Err(LstmError::Shape(format!("{name} has {} values, expected {}", b.len(), a.len())));
            }
        }
        if params.layers.len() != config.layers {
            return Err(LstmError::Shape(format!("{} layers, expected {}", params.layers.len(), config.layers)));
        }
        if features.len() != config.input_features || normalization.features() != config.input_features {
            return Err(LstmError::Shape(format!(
                "{} feature names / {} normalization entries for {} input features",
                features.len(),
                normalization.features(),
                config.input_features
            )));
        }
        Ok(LstmModel { config, params, normalization, features })
    }

    /// Forward pass over an already normalized window.
    pub fn forward(&self, normalized: &[f64]) -> Result<ForwardTrace, LstmError> {
        forward(&self.params, normalized, self.config.window)
    }

    /// Class probabilities of a raw window given as `T × F` values.
    pub fn probabilities(&self, raw: &[f64]) -> Result<Vec<f64>, LstmError> {
        let mut values = raw.to_vec();
        self.check_len(&values)?;
        self.normalization.apply(&mut values);
        Ok(self.forward(&values)?.probs)
    }

    fn check_len(&self, values: &[f64]) -> Result<(), LstmError> {
        let want = self.config.window * self.config.input_features;
        if values.len() != want {
            return Err(LstmError::Shape(format!(
                "window has {} values, expected {} × {}",
                values.len(),
                self.config.window,
                self.config.input_features
            )));
        }
        Ok(())
    }

    /// Most probable class of a raw window whose columns are `features`.
    pub fn predict(&self, raw: &[f64], features: &[String]) -> Result<Prediction, LstmError> {
        if features != self.features.as_slice() {
            return Err(LstmError::FeatureMismatch { expected: self.features.join(","), found: features.join(",") });
        }
        let probabilities = self.probabilities(raw)?;
        let class = argmax(&probabilities);
        let motion = (self.config.classes == MotionType::COUNT).then(|| MotionType::from_index(class)).flatten();
        Ok(Prediction { class, motion, probability: probabilities[class], probabilities })
    }

    /// Copy of `window` normalized with the model's statistics.
    pub fn normalize(&self, window: &SequenceWindow) -> SequenceWindow {
        let mut w = window.clone();
        self.normalization.apply(&mut w.values);
        w
    }
}

fn examples(windows: &[SequenceWindow]) -> Vec<Example<'_>> {
    windows.iter().map(|w| Example { values: &w.values, label: w.motion.index() }).collect()
}

/// Trains a fresh model on `split`; initialization, shuffling and batch order
/// are all derived from `config.seed`.
pub fn train(split: &SplitDataset, config: &LstmConfig) -> Result<(LstmModel, TrainingHistory), LstmError> {
    train_with_progress(split, config, |_| {})
}

/// [`train`] with a callback invoked after every epoch.
pub fn train_with_progress(
    split: &SplitDataset,
    config: &LstmConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(LstmModel, TrainingHistory), LstmError> {
    config.validate()?;
    if split.train.is_empty() {
        return Err(LstmError::EmptyBatch);
    }
    if split.features.len() != config.input_features {
        return Err(LstmError::Shape(format!(
            "split has {} features, config expects {}",
            split.features.len(),
            config.input_features
        )));
    }
    if let Some(w) = split.train.iter().chain(&split.test).find(|w| w.steps != config.window) {
        return Err(LstmError::Shape(format!("window of {} steps, config expects {}", w.steps, config.window)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = LstmParams::init(config, &mut rng);
    let mut adam = Adam::new(&params, config.learning_rate, config.beta1, config.beta2, config.epsilon);
    let train_examples = examples(&split.train);
    let test_examples = examples(&split.test);
    let mut history = TrainingHistory::default();
    let mut order: Vec<usize> = (0..train_examples.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0);
        for (batch_idx, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<Example> = chunk.iter().map(|&i| train_examples[i]).collect();
            let mut outcome = batch_gradients(&params, &batch, config.window)?;
            if !outcome.loss.is_finite() || !outcome.grads.all_finite() {
                return Err(LstmError::Diverged { epoch, batch: batch_idx + 1, loss: outcome.loss, history });
            }
            loss_sum += outcome.loss * batch.len() as f64;
            correct += outcome.correct;
            if let Some(max) = config.clip_norm {
                clip_global_norm(&mut outcome.grads, max);
            }
            adam.update(&mut params, &outcome.grads);
        }
        let n = train_examples.len() as f64;
        let (test_loss, test_accuracy) = if test_examples.is_empty() {
            (None, None)
        } else {
            let (l, c) = evaluate_loss(&params, &test_examples, config.window)?;
            (Some(l), Some(c as f64 / test_examples.len() as f64))
        };
        let record = EpochRecord { epoch, train_loss: loss_sum / n, train_accuracy: correct as f64 / n, test_loss, test_accuracy };
        log::debug!(
            "epoch {epoch}: train loss {:.4} acc {:.4}, test acc {:?}",
            record.train_loss,
            record.train_accuracy,
            record.test_accuracy
        );
        on_epoch(&record);
        history.epochs.push(record);
    }

    let model = LstmModel::new(config.clone(), params, split.normalization.clone(), split.features.clone())?;
    Ok((model, history))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Accuracy, per-class precision/recall and the confusion matrix
/// (rows = true class, columns = predicted class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    pub fn from_predictions(classes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut confusion = vec![vec![0usize; classes]; classes];
        for (truth, predicted) in pairs {
            confusion[truth][predicted] += 1;
        }
        let total: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..classes).map(|k| confusion[k][k]).sum();
        let per_class = (0..classes)
            .map(|k| {
                let support: usize = confusion[k].iter().sum();
                let predicted: usize = confusion.iter().map(|row| row[k]).sum();
                let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
                let class = if classes == MotionType::COUNT {
                    MotionType::ALL[k].to_string()
                } else {
                    format!("class_{k}")
                };
                ClassMetrics { class, support, precision: ratio(confusion[k][k], predicted), recall: ratio(confusion[k][k], support) }
            })
            .collect();
        let accuracy = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
        EvalReport { total, correct, accuracy, per_class, confusion }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "accuracy {:.4} ({}/{})", self.accuracy, self.correct, self.total).unwrap();
        writeln!(out, "{:<26} {:>8} {:>10} {:>8}", "class", "support", "precision", "recall").unwrap();
        for c in &self.per_class {
            writeln!(out, "{:<26} {:>8} {:>10.4} {:>8.4}", c.class, c.support, c.precision, c.recall).unwrap();
        }
        writeln!(out, "confusion (rows = true, columns = predicted):").unwrap();
        for row in &self.confusion {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>4}")).collect();
            writeln!(out, "{}", cells.join("")).unwrap();
        }
        out
    }
}

/// Scores normalized windows against their session labels.
pub fn evaluate(model: &LstmModel, windows: &[SequenceWindow]) -> Result<EvalReport, LstmError> {
    if windows.is_empty() {
        return Err(LstmError::EmptyBatch);
    }
    let mut pairs = Vec::with_capacity(windows.len());
    for w in windows {
        if w.motion.index() >= model.config.classes {
            return Err(LstmError::Shape(format!("label {} outside a {}-class model", w.motion, model.config.classes)));
        }
        let trace = model.forward(&w.values)?;
        pairs.push((w.motion.index(), argmax(&trace.probs)));
    }
    Ok(EvalReport::from_predictions(model.config.classes, pairs))
}
