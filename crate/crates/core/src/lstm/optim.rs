use super::params::LstmParams;

/// Adaptive moment estimation with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u32,
    m: LstmParams,
    v: LstmParams,
}

impl Adam {
    pub fn new(params: &LstmParams, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam { learning_rate, beta1, beta2, epsilon, step: 0, m: params.zeros_like(), v: params.zeros_like() }
    }

    pub fn steps_taken(&self) -> u32 {
        self.step
    }

    pub fn update(&mut self, params: &mut LstmParams, grads: &LstmParams) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let bias1 = 1.0 - b1.powi(self.step as i32);
        let bias2 = 1.0 - b2.powi(self.step as i32);
        let lr = self.learning_rate;
        let eps = self.epsilon;
        let tensors = params.tensors_mut().into_iter().zip(grads.tensors()).zip(self.m.tensors_mut()).zip(self.v.tensors_mut());
        for (((p, g), m), v) in tensors {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let m_hat = m[k] / bias1;
                let v_hat = v[k] / bias2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::LstmConfig;

    #[test]
    fn first_step_moves_each_coordinate_by_learning_rate() {
        let config = LstmConfig { input_features: 2, hidden: 2, layers: 1, classes: 2, ..LstmConfig::default() };
        let mut params = LstmParams::zeros(&config);
        let mut grads = params.zeros_like();
        grads.out_b = vec![3.0, -0.5];
        let mut adam = Adam::new(&params, 1e-3, 0.9, 0.999, 1e-8);
        adam.update(&mut params, &grads);
        // bias-corrected first step is lr · sign(g) up to epsilon
        assert!((params.out_b[0] + 1e-3).abs() < 1e-10);
        assert!((params.out_b[1] - 1e-3).abs() < 1e-10);
        assert_eq!(params.dense_b, vec![0.0, 0.0]);
        assert_eq!(adam.steps_taken(), 1);
    }
}
