//! AdamW: Adam with decoupled weight decay.

/// Per-parameter optimizer state plus hyperparameters.
///
/// The update decouples the decay from the adaptive step:
///
/// ```text
/// θ ← θ · (1 − lr·λ)
/// m ← β₁ m + (1−β₁) g        m̂ = m / (1 − β₁ᵗ)
/// v ← β₂ v + (1−β₂) g²       v̂ = v / (1 − β₂ᵗ)
/// θ ← θ − lr · m̂ / (√v̂ + ε)
/// ```
///
/// With zero decay this is exactly Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Completed steps.
    pub t: u64,
    /// First moment, one entry per parameter.
    pub m: Vec<f64>,
    /// Second moment, one entry per parameter.
    pub v: Vec<f64>,
}

impl AdamWState {
    pub fn new(
        n_params: usize,
        learning_rate: f64,
        weight_decay: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Self {
        Self {
            learning_rate,
            weight_decay,
            beta1,
            beta2,
            epsilon,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    /// Apply one decoupled update in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "optimizer/parameter mismatch");
        assert_eq!(params.len(), grads.len(), "gradient/parameter mismatch");
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let decay = 1.0 - self.learning_rate * self.weight_decay;
        for i in 0..params.len() {
            let g = grads[i];
            params[i] *= decay;
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(n: usize, lr: f64, wd: f64) -> AdamWState {
        AdamWState::new(n, lr, wd, 0.9, 0.999, 1e-8)
    }

    #[test]
    fn zero_gradient_step_is_pure_decay() {
        let mut s = state(3, 0.01, 0.1);
        let mut p = vec![1.0, -2.0, 0.5];
        let want: Vec<f64> = p.iter().map(|&x| x * (1.0 - 0.01 * 0.1)).collect();
        s.step(&mut p, &[0.0; 3]);
        assert_eq!(p, want);
    }

    #[test]
    fn hand_executed_first_step() {
        // θ=1, g=1, lr=0.1, wd=0: bias correction gives m̂=1, v̂=1,
        // so θ' = 1 − 0.1/(1 + 1e-8).
        let mut s = state(1, 0.1, 0.0);
        let mut p = vec![1.0];
        s.step(&mut p, &[1.0]);
        let want = 1.0 - 0.1 / (1.0 + 1e-8);
        assert!((p[0] - want).abs() < 1e-15, "{} vs {want}", p[0]);
        assert!((p[0] - 0.9).abs() < 1e-8);
    }

    #[test]
    fn decay_shrinks_parameters_only_when_enabled() {
        let mut with = state(2, 0.05, 0.5);
        let mut without = state(2, 0.05, 0.0);
        let mut p_with = vec![2.0, -3.0];
        let mut p_without = p_with.clone();
        for _ in 0..10 {
            with.step(&mut p_with, &[0.0, 0.0]);
            without.step(&mut p_without, &[0.0, 0.0]);
        }
        assert!(p_with[0].abs() < 2.0 && p_with[1].abs() < 3.0);
        assert_eq!(p_without, vec![2.0, -3.0]);
    }

    #[test]
    fn zero_decay_reduces_to_adam() {
        // Reference Adam trajectory computed independently.
        let (lr, b1, b2, eps): (f64, f64, f64, f64) = (0.02, 0.9, 0.999, 1e-8);
        let mut s = state(1, lr, 0.0);
        let mut p = vec![0.7];
        let grads = [0.3, -1.1, 0.05, 2.4, -0.6];

        let mut theta = 0.7;
        let (mut m, mut v) = (0.0, 0.0);
        for (i, &g) in grads.iter().enumerate() {
            let t = (i + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat: f64 = v / (1.0 - b2.powi(t));
            theta -= lr * m_hat / (v_hat.sqrt() + eps);

            s.step(&mut p, &[g]);
            assert!((p[0] - theta).abs() <= 1e-15, "step {i}: {} vs {theta}", p[0]);
        }
    }
}
