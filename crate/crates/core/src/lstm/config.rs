use serde::{Deserialize, Serialize};

use super::LstmError;
use crate::sensor::MotionType;

pub const DEFAULT_WINDOW: usize = 150;
pub const DEFAULT_LAYERS: usize = 2;
pub const DEFAULT_HIDDEN: usize = 64;
pub const DEFAULT_EPOCHS: usize = 50;
pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;
pub const DEFAULT_CLIP_NORM: f64 = 5.0;

/// Activation of the dense layer between the last hidden state and the
/// softmax head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenseActivation {
    Relu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmConfig {
    pub input_features: usize,
    pub window: usize,
    pub layers: usize,
    pub hidden: usize,
    pub classes: usize,
    pub dense_activation: DenseActivation,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        LstmConfig {
            input_features: 11,
            window: DEFAULT_WINDOW,
            layers: DEFAULT_LAYERS,
            hidden: DEFAULT_HIDDEN,
            classes: MotionType::COUNT,
            dense_activation: DenseActivation::Relu,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            learning_rate: DEFAULT_LEARNING_RATE,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: Some(DEFAULT_CLIP_NORM),
            seed: 0,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<(), LstmError> {
        let counts = [
            ("input_features", self.input_features),
            ("window", self.window),
            ("layers", self.layers),
            ("hidden", self.hidden),
            ("classes", self.classes),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(LstmError::Config(format!("{name} must be positive")));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.learning_rate) || !positive(self.epsilon) {
            return Err(LstmError::Config("learning_rate and epsilon must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(LstmError::Config("beta1 and beta2 must lie in [0, 1)".into()));
        }
        if let Some(c) = self.clip_norm {
            if !positive(c) {
                return Err(LstmError::Config("clip_norm must be positive".into()));
            }
        }
        Ok(())
    }
}
