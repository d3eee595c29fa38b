//! Adam optimizer with per-parameter moment slots keyed by name.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8 by default).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    pub(crate) slots: HashMap<String, AdamSlot>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct AdamSlot {
    pub(crate) m: Vec<f64>,
    pub(crate) v: Vec<f64>,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            slots: HashMap::new(),
        }
    }

    pub(crate) fn from_parts(
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        t: u64,
        slots: HashMap<String, AdamSlot>,
    ) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            eps,
            t,
            slots,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Call once per optimization step, then feed every parameter through
    /// [`Adam::update`] via the model's parameter visitor.
    pub fn begin_step(&mut self) {
        self.t += 1;
    }

    pub fn update(&mut self, name: &str, value: &mut [f64], grad: &[f64]) {
        let slot = self.slots.entry(name.to_string()).or_insert_with(|| AdamSlot {
            m: vec![0.0; value.len()],
            v: vec![0.0; value.len()],
        });
        debug_assert_eq!(slot.m.len(), value.len(), "parameter {name} changed size");
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..value.len() {
            let g = grad[i];
            slot.m[i] = self.beta1 * slot.m[i] + (1.0 - self.beta1) * g;
            slot.v[i] = self.beta2 * slot.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = slot.m[i] / bc1;
            let v_hat = slot.v[i] / bc2;
            value[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
