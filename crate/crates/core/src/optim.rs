//! First-order optimizers over a flat parameter vector, with an optional
//! global-norm gradient clip applied before the update.

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptKind {
    Sgd,
    Adam,
}

impl OptKind {
    pub fn name(self) -> &'static str {
        match self {
            OptKind::Sgd => "sgd",
            OptKind::Adam => "adam",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptKind::Sgd),
            "adam" => Ok(OptKind::Adam),
            other => Err(CoreError::contract(format!("unknown optimizer '{other}'"))),
        }
    }
}

/// Optimizer hyperparameters and per-scalar moment state.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    /// Global-norm clip threshold; `None` disables clipping.
    pub clip: Option<f64>,
    pub step: u64,
    /// First and second moments, mirroring the flat parameter vector. Unused
    /// (kept empty) for SGD.
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn sgd(learning_rate: f64, clip: Option<f64>) -> Self {
        OptimizerState {
            kind: OptKind::Sgd,
            learning_rate,
            beta1: 0.0,
            beta2: 0.0,
            eps_adam: 0.0,
            clip,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn adam(learning_rate: f64, clip: Option<f64>, dim: usize) -> Self {
        OptimizerState {
            kind: OptKind::Adam,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            clip,
            step: 0,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
        }
    }

    /// One update in place. Gradients are clipped by global norm first.
    pub fn apply(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(CoreError::contract(format!(
                "optimizer: {} params vs {} gradients",
                params.len(),
                grads.len()
            )));
        }
        let mut scale = 1.0;
        if let Some(clip) = self.clip {
            let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > clip {
                scale = clip / norm;
            }
        }
        self.step += 1;
        match self.kind {
            OptKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= self.learning_rate * scale * g;
                }
            }
            OptKind::Adam => {
                if self.m.len() != params.len() {
                    return Err(CoreError::contract(format!(
                        "adam: moment length {} vs {} params",
                        self.m.len(),
                        params.len()
                    )));
                }
                let t = self.step as f64;
                let bc1 = 1.0 - self.beta1.powf(t);
                let bc2 = 1.0 - self.beta2.powf(t);
                for i in 0..params.len() {
                    let g = scale * grads[i];
                    self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
                    self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
                    let m_hat = self.m[i] / bc1;
                    let v_hat = self.v[i] / bc2;
                    params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps_adam);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut sgd = OptimizerState::sgd(0.1, Some(5.0));
        let mut p = vec![1.0, -2.0];
        sgd.apply(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);

        let mut adam = OptimizerState::adam(0.1, Some(5.0), 2);
        adam.apply(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn sgd_scalar_step() {
        let mut sgd = OptimizerState::sgd(0.1, None);
        let mut p = vec![0.5];
        sgd.apply(&mut p, &[1.0]).unwrap();
        assert!((p[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_is_signed_unit_times_lr() {
        // At step 1 the bias-corrected update is lr * g / (|g| + eps').
        let mut adam = OptimizerState::adam(1e-3, None, 1);
        let mut p = vec![0.0];
        adam.apply(&mut p, &[3.0]).unwrap();
        assert!((p[0] + 1e-3).abs() < 1e-6, "got {}", p[0]);
        let mut adam2 = OptimizerState::adam(1e-3, None, 1);
        let mut q = vec![0.0];
        adam2.apply(&mut q, &[-0.25]).unwrap();
        assert!((q[0] - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn clipping_rescales_to_threshold_norm() {
        let mut sgd = OptimizerState::sgd(1.0, Some(1.0));
        let mut p = vec![0.0, 0.0];
        sgd.apply(&mut p, &[3.0, 4.0]).unwrap();
        // Gradient norm 5 clipped to 1: step is (0.6, 0.8).
        assert!((p[0] + 0.6).abs() < 1e-15);
        assert!((p[1] + 0.8).abs() < 1e-15);
    }
}
