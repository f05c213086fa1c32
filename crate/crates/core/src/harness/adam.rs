//! Adam with bias correction and decoupled weight decay.

use super::train::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// One update at step `t >= 1`. Parameters are first scaled by
/// `1 - lr * weight_decay` (pass `decay = false` to skip), then moved by
/// `lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64], cfg: &TrainConfig, t: u64, decay: bool) {
    assert_eq!(params.len(), state.len());
    assert_eq!(grads.len(), state.len());
    assert!(t >= 1, "Adam steps are 1-based");
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powf(t as f64);
    let c2 = 1.0 - b2.powf(t as f64);
    let shrink = if decay { 1.0 - cfg.learning_rate * cfg.weight_decay } else { 1.0 };
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p = *p * shrink - cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_only_decays() {
        let cfg = TrainConfig::default();
        let mut state = AdamState::new(3);
        let mut p = [1.0, -2.0, 0.5];
        adam_step(&mut state, &mut p, &[0.0; 3], &cfg, 1, true);
        let s = 1.0 - cfg.learning_rate * cfg.weight_decay;
        assert_eq!(p, [s, -2.0 * s, 0.5 * s]);
    }

    #[test]
    fn constant_gradient_moves_by_learning_rate() {
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            weight_decay: 0.0,
            ..TrainConfig::default()
        };
        let mut state = AdamState::new(1);
        let mut p = [0.0];
        let mut last = 0.0;
        for t in 1..=2000 {
            let before = p[0];
            adam_step(&mut state, &mut p, &[0.37], &cfg, t, true);
            last = before - p[0];
        }
        assert!((last - 1e-3).abs() < 1e-9, "step = {last}");
    }

    #[test]
    fn zero_learning_rate_freezes_everything() {
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let mut state = AdamState::new(2);
        let mut p = [1.0, 2.0];
        adam_step(&mut state, &mut p, &[0.5, -0.5], &cfg, 1, true);
        assert_eq!(p, [1.0, 2.0]);
    }
}
