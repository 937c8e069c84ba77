use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
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

/// Adam optimizer state: one first/second moment buffer per parameter.
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|(_, _, t)| vec![0.0; t.len()]).collect();
        Self {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one bias-corrected Adam update and zeroes the gradients.
    pub fn step(&mut self, params: &mut ParamSet) -> Result<()> {
        if params.len() != self.first.len() {
            return Err(Error::Invalid(format!(
                "optimizer tracks {} parameters, set has {}",
                self.first.len(),
                params.len()
            )));
        }
        if let Some((_, name, _)) = params.iter().find(|(_, _, t)| t.grad().is_none()) {
            return Err(Error::MissingGradient(name.to_string()));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for ((tensor, m), v) in params
            .tensors_mut()
            .iter_mut()
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            let grad = tensor.grad().expect("checked above").to_vec();
            for (((w, g), m), v) in tensor
                .values_mut()
                .iter_mut()
                .zip(&grad)
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
            tensor.zero_grad();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    #[test]
    fn zero_gradient_leaves_values_unchanged() {
        let mut p = ParamSet::new(0);
        let id = p.insert("w", Tensor::vector(vec![0.25, -1.5])).unwrap();
        let mut adam = AdamState::new(&p, AdamConfig::default());
        for _ in 0..5 {
            p.zero_grad();
            adam.step(&mut p).unwrap();
        }
        assert_eq!(p.get(id).values(), &[0.25, -1.5]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = ParamSet::new(0);
        let id = p.insert("w", Tensor::scalar(0.0)).unwrap();
        let mut adam = AdamState::new(&p, AdamConfig::default());
        p.get_mut(id).accumulate_grad(&[1.0]);
        adam.step(&mut p).unwrap();
        // m_hat = 1, v_hat = 1, update = lr * 1 / (1 + 1e-8)
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((p.get(id).values()[0] - expected).abs() < 1e-15);
        assert_eq!(adam.steps(), 1);
        assert_eq!(p.get(id).grad().unwrap(), &[0.0]);
    }

    #[test]
    fn missing_gradient_rejected() {
        let mut p = ParamSet::new(0);
        p.insert("w", Tensor::scalar(1.0)).unwrap();
        let mut adam = AdamState::new(&p, AdamConfig::default());
        assert!(matches!(adam.step(&mut p), Err(Error::MissingGradient(n)) if n == "w"));
    }
}
