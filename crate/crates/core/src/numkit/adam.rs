use super::NumError;

/// Adam moments and hyperparameters for one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// In-place bias-corrected Adam update.
    pub fn apply(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NumError> {
        if params.len() != self.m.len() {
            return Err(NumError::ShapeMismatch {
                expected: self.m.len(),
                got: params.len(),
            });
        }
        if grads.len() != params.len() {
            return Err(NumError::ShapeMismatch {
                expected: params.len(),
                got: grads.len(),
            });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(NumError::NonFinite("gradient"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2) = (self.beta1, self.beta2);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::apply`]: returns the updated parameters
/// and state, leaving the inputs untouched.
pub fn adam_step(
    params: &[f64],
    grads: &[f64],
    state: &AdamState,
) -> Result<(Vec<f64>, AdamState), NumError> {
    let mut p = params.to_vec();
    let mut s = state.clone();
    s.apply(&mut p, grads)?;
    Ok((p, s))
}

/// Cosine decay from `base_lr` at `progress = 0` to `base_lr / 10` at
/// `progress = 1`.
pub fn cosine_decay(base_lr: f64, progress: f64) -> f64 {
    let p = progress.clamp(0.0, 1.0);
    let floor = base_lr / 10.0;
    floor + (base_lr - floor) * 0.5 * (1.0 + (std::f64::consts::PI * p).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        // step 1: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps)
        let state = AdamState::new(1, 0.1);
        let (p, s) = adam_step(&[1.0], &[1.0], &state).unwrap();
        let expected = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] - 0.9).abs() < 1e-8);
        assert_eq!(s.step, 1);
        assert!((s.m[0] - 0.1).abs() < 1e-15);
        assert!((s.v[0] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_from_fresh_state_keeps_params() {
        let state = AdamState::new(3, 0.01);
        let (p, s) = adam_step(&[1.0, -2.0, 0.5], &[0.0; 3], &state).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn zero_gradient_decays_moments() {
        let mut state = AdamState::new(1, 0.01);
        state.m[0] = 1.0;
        state.v[0] = 4.0;
        let (_, s) = adam_step(&[0.0], &[0.0], &state).unwrap();
        assert!((s.m[0] - 0.9).abs() < 1e-15);
        assert!((s.v[0] - 4.0 * 0.999).abs() < 1e-15);
    }

    #[test]
    fn identical_inputs_give_identical_outputs() {
        let state = AdamState::new(4, 1e-3);
        let params = [0.3, -0.1, 2.0, 1e-4];
        let grads = [0.5, -3.0, 1e-6, 7.0];
        let a = adam_step(&params, &grads, &state).unwrap();
        let b = adam_step(&params, &grads, &state).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.0.iter().zip(&b.0) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn rejects_bad_input() {
        let state = AdamState::new(2, 1e-3);
        assert!(matches!(
            adam_step(&[0.0, 0.0], &[1.0], &state),
            Err(NumError::ShapeMismatch { .. })
        ));
        assert_eq!(
            adam_step(&[0.0, 0.0], &[1.0, f64::NAN], &state),
            Err(NumError::NonFinite("gradient"))
        );
    }

    #[test]
    fn cosine_decay_endpoints() {
        assert!((cosine_decay(1e-3, 0.0) - 1e-3).abs() < 1e-18);
        assert!((cosine_decay(1e-3, 1.0) - 1e-4).abs() < 1e-18);
        assert!((cosine_decay(1e-3, 0.5) - 5.5e-4).abs() < 1e-15);
    }
}
