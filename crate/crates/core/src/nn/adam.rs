use serde::{Deserialize, Serialize};

use super::{check_shapes, NnError, Parameterized, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam optimizer state for one parameter set of type `P`.
#[derive(Debug, Clone)]
pub struct Adam<P: Parameterized> {
    pub config: AdamConfig,
    step: u64,
    first_moment: P,
    second_moment: P,
}

impl<P: Parameterized> Adam<P> {
    pub fn new(config: AdamConfig, params: &P) -> Self {
        Self {
            config,
            step: 0,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &P {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &P {
        &self.second_moment
    }

    /// Applies one bias-corrected Adam step descending along `grads`.
    ///
    /// Gradients are validated before anything is mutated; a non-finite
    /// entry leaves parameters, moments and the step counter untouched.
    pub fn update(&mut self, params: &mut P, grads: &P) -> Result<()> {
        check_shapes(params, grads)?;
        check_shapes(params, &self.first_moment)?;
        for (idx, t) in grads.tensors().iter().enumerate() {
            if t.iter().any(|v| !v.is_finite()) {
                return Err(NnError::NonFinite { tensor: idx });
            }
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let bc1 = 1.0 - beta1.powf(self.step as f64);
        let bc2 = 1.0 - beta2.powf(self.step as f64);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.first_moment.tensors_mut())
            .zip(self.second_moment.tensors_mut())
        {
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                p[k] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
