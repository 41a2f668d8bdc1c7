//! Adaptive-moment optimizer with moments persisted alongside the parameters.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nn::{GradientRecord, ParameterSet};

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: BTreeMap<String, Vec<f64>>,
    v: BTreeMap<String, Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: BTreeMap::new(), v: BTreeMap::new() }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One update: `p -= lr * m_hat / (sqrt(v_hat) + eps)` per coordinate.
    pub fn step(&mut self, params: &mut ParameterSet, grads: &GradientRecord) -> Result<()> {
        if self.lr <= 0.0 {
            return Err(Error::Domain("adam lr must be positive".into()));
        }
        for name in params.entries.keys() {
            if !grads.entries.contains_key(name) {
                return Err(Error::Consistency(format!("missing gradient for parameter {name}")));
            }
        }
        for name in grads.entries.keys() {
            if !params.entries.contains_key(name) {
                return Err(Error::Consistency(format!("gradient for unknown parameter {name}")));
            }
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (name, p) in params.entries.iter_mut() {
            let g = &grads.entries[name];
            if g.shape != p.shape {
                return Err(Error::Dimension(format!(
                    "gradient shape {:?} != parameter shape {:?} for {name}",
                    g.shape, p.shape
                )));
            }
            let m = self.m.entry(name.clone()).or_insert_with(|| vec![0.0; p.len()]);
            let v = self.v.entry(name.clone()).or_insert_with(|| vec![0.0; p.len()]);
            for i in 0..p.values.len() {
                let gi = g.values[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.values[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
