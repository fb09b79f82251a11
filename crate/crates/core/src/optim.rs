use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Energy change below which an iteration counts towards convergence.
    pub tolerance: f64,
    /// Consecutive sub-tolerance iterations required to stop.
    pub patience: usize,
    /// Starting point; zeros (the reference state) when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_parameters: Option<Vec<f64>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_iterations: 1000,
            tolerance: 1e-8,
            patience: 5,
            initial_parameters: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if !(self.epsilon > 0.0) || !(self.tolerance >= 0.0) {
            return Err(Error::invalid(
                "epsilon must be positive and tolerance non-negative",
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be positive"));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience must be positive"));
        }
        Ok(())
    }

    pub(crate) fn starting_point(&self, n: usize) -> Result<Vec<f64>> {
        match &self.initial_parameters {
            Some(p) if p.len() == n => Ok(p.clone()),
            Some(p) => Err(Error::invalid(format!(
                "initial_parameters has {} entries, circuit has {n}",
                p.len()
            ))),
            None => Ok(vec![0.0; n]),
        }
    }
}

/// Bias-corrected ADAM state.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(cfg: &OptimizerConfig, n_params: usize) -> Self {
        Adam {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.epsilon,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    /// Moves `params` against `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Tracks the energy-plateau stopping rule.
#[derive(Clone, Debug)]
pub(crate) struct Plateau {
    tolerance: f64,
    patience: usize,
    last: Option<f64>,
    streak: usize,
}

impl Plateau {
    pub(crate) fn new(cfg: &OptimizerConfig) -> Self {
        Plateau {
            tolerance: cfg.tolerance,
            patience: cfg.patience,
            last: None,
            streak: 0,
        }
    }

    /// Feeds one energy; true once `patience` consecutive changes were small.
    pub(crate) fn observe(&mut self, energy: f64) -> bool {
        if let Some(prev) = self.last {
            if (energy - prev).abs() < self.tolerance {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.last = Some(energy);
        self.streak >= self.patience
    }
}
