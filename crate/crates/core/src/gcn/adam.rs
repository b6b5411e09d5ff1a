use alloc::vec;
use alloc::vec::Vec;

use super::model::{GcnModel, Gradients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// Bias-corrected Adam update of `params` in place. A non-finite
    /// gradient leaves both parameters and state untouched.
    pub fn update(&mut self, params: &mut [f64], grads: &[f64], cfg: &AdamConfig) -> Result<()> {
        assert_eq!(params.len(), self.m.len(), "parameter/state length");
        assert_eq!(grads.len(), self.m.len(), "gradient/state length");
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                what: "gradient",
                iteration: self.step as usize + 1,
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - libm::pow(cfg.beta1, t as f64);
        let c2 = 1.0 - libm::pow(cfg.beta2, t as f64);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= cfg.learning_rate * m_hat / (libm::sqrt(v_hat) + cfg.epsilon);
        }
        Ok(())
    }
}

pub fn adam_step(
    model: &mut GcnModel,
    state: &mut AdamState,
    grads: &Gradients,
    cfg: &AdamConfig,
) -> Result<()> {
    state.update(model.params_mut(), grads.as_slice(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut w = [0.0];
        let mut s = AdamState::new(1);
        s.update(&mut w, &[1.0], &AdamConfig::default()).unwrap();
        assert!((w[0] + 0.001).abs() < 1e-9, "{}", w[0]);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn zero_gradient_only_decays_moments() {
        let cfg = AdamConfig::default();
        let mut w = [0.5, -2.0];
        let mut s = AdamState::new(2);
        s.update(&mut w, &[0.3, -0.1], &cfg).unwrap();
        let (m1, v1, w1) = (s.first_moment().to_vec(), s.second_moment().to_vec(), w);
        s.update(&mut w, &[0.0, 0.0], &cfg).unwrap();
        for i in 0..2 {
            assert_eq!(s.first_moment()[i], 0.9 * m1[i]);
            assert_eq!(s.second_moment()[i], 0.999 * v1[i]);
        }
        // Moments are nonzero, so the bias-corrected step still moves the
        // parameter; with a fresh state a zero gradient is a no-op.
        let mut fresh = AdamState::new(2);
        let mut w2 = w1;
        fresh.update(&mut w2, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(w2, w1);
    }

    #[test]
    fn non_finite_gradient_rejected_without_mutation() {
        let mut w = [1.0];
        let mut s = AdamState::new(1);
        let err = s.update(&mut w, &[f64::NAN], &AdamConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonFinite { iteration: 1, .. }));
        assert_eq!(w, [1.0]);
        assert_eq!(s.step_count(), 0);
    }

    #[test]
    fn identical_runs_identical_parameters() {
        let run = || {
            let mut w = [0.1, 0.2, 0.3];
            let mut s = AdamState::new(3);
            for k in 0..50 {
                let g = [k as f64 * 0.01, -0.2, 1.0 / (k as f64 + 1.0)];
                s.update(&mut w, &g, &AdamConfig::default()).unwrap();
            }
            w
        };
        assert_eq!(run(), run());
    }
}
