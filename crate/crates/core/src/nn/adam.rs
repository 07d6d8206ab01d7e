//! Adam updates with bias correction.

/// Optimizer hyperparameters. The defaults are the standard
/// beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamParams {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates for one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn zeros(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One Adam update on a parameter block:
/// `m = b1*m + (1-b1)*g`, `v = b2*v + (1-b2)*g^2`,
/// `theta -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)`.
/// `t` is the 1-based global step count.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    t: usize,
    cfg: &AdamParams,
) {
    assert_eq!(params.len(), grads.len(), "gradient shape mismatch");
    assert_eq!(params.len(), state.m.len(), "state shape mismatch");
    assert!(t >= 1, "step count is 1-based");
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = vec![1.5, -2.0, 0.25];
        let mut s = AdamState::zeros(3);
        adam_step(&mut p, &[0.0, 0.0, 0.0], &mut s, 1, &AdamParams::with_lr(5e-5));
        assert_eq!(p, vec![1.5, -2.0, 0.25]);
    }

    #[test]
    fn single_step_matches_hand_computation() {
        // g = 1, fresh state, t = 1: m_hat = v_hat = 1, so the update is
        // exactly -lr / (1 + eps).
        let lr = 5e-5;
        let mut p = vec![0.0];
        let mut s = AdamState::zeros(1);
        adam_step(&mut p, &[1.0], &mut s, 1, &AdamParams::with_lr(lr));
        let expect = -lr * 1.0 / (1.0 + 1e-8);
        assert!((p[0] - expect).abs() < 1e-18, "{} vs {expect}", p[0]);
        assert!((p[0] + 5e-5).abs() < 1e-12);
    }

    #[test]
    fn two_steps_match_hand_computation() {
        // Constant gradient g = 1 for two steps, written out longhand.
        let (b1, b2, eps, lr) = (0.9, 0.999, 1e-8, 5e-5);
        let mut m = 0.0;
        let mut v = 0.0;
        let mut theta = 0.2;
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * 1.0;
            v = b2 * v + (1.0 - b2) * 1.0;
            let m_hat = m / (1.0 - f64::powi(b1, t));
            let v_hat = v / (1.0 - f64::powi(b2, t));
            theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }

        let mut p = vec![0.2];
        let mut s = AdamState::zeros(1);
        let cfg = AdamParams::with_lr(lr);
        adam_step(&mut p, &[1.0], &mut s, 1, &cfg);
        adam_step(&mut p, &[1.0], &mut s, 2, &cfg);
        assert!((p[0] - theta).abs() < 1e-12, "{} vs {theta}", p[0]);
    }
}
