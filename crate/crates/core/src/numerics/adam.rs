use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 5e-4;

/// First/second moment estimates for Adam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            steps: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }
}

/// One bias-corrected Adam update. Non-finite gradients abort the step
/// before anything is modified.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Dimension(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!("gradient coordinate {i} = {}", grads[i])));
    }
    state.steps += 1;
    let t = state.steps as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = state.beta1 * *m + (1.0 - state.beta1) * g;
        *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, 0.1).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn constant_gradient_moves_monotonically() {
        let mut p = vec![0.0, 0.0];
        let mut s = AdamState::new(2);
        let mut prev = p.clone();
        for _ in 0..100 {
            adam_step(&mut p, &[0.5, -2.0], &mut s, 1e-2).unwrap();
            assert!(p[0] < prev[0]);
            assert!(p[1] > prev[1]);
            prev = p.clone();
        }
        // Bias-corrected steps have magnitude ≈ lr for a constant gradient.
        assert!((p[0] + 1.0).abs() < 1e-6, "{}", p[0]);
    }

    #[test]
    fn runs_are_reproducible() {
        let run = || {
            let mut p = vec![0.3, 0.1, -0.2];
            let mut s = AdamState::new(3);
            for k in 0..20 {
                let g: Vec<f64> = p.iter().map(|x| x * 2.0 + k as f64 * 0.01).collect();
                adam_step(&mut p, &g, &mut s, 5e-3).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_aborts_without_change() {
        let mut p = vec![1.0, 1.0];
        let mut s = AdamState::new(2);
        let err = adam_step(&mut p, &[f64::NAN, 0.0], &mut s, 0.1).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
        assert_eq!(p, vec![1.0, 1.0]);
        assert_eq!(s.steps(), 0);
    }
}
