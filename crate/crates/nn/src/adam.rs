use crate::network::{Gradients, Network};
use crate::tensor::Tensor;
use crate::{NnError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self { learning_rate, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NnError::Optimizer(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(0.0 < self.beta1 && self.beta1 < self.beta2 && self.beta2 < 1.0) {
            return Err(NnError::Optimizer(format!(
                "need 0 < beta1 < beta2 < 1, got {} and {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(NnError::Optimizer("epsilon must be positive".into()));
        }
        Ok(())
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Whether a step minimises or maximises the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Descend,
    Ascend,
}

/// First and second moment estimates, one pair per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub(crate) m: Vec<Tensor>,
    pub(crate) v: Vec<Tensor>,
    pub(crate) step: u64,
}

impl AdamState {
    pub(crate) fn new(params: &[Tensor]) -> Self {
        let zeros = |p: &Tensor| Tensor::zeros(p.shape());
        Self { m: params.iter().map(zeros).collect(), v: params.iter().map(zeros).collect(), step: 0 }
    }

    pub fn first_moments(&self) -> &[Tensor] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Tensor] {
        &self.v
    }
}

impl Network {
    pub fn adam_state(&self) -> &AdamState {
        &self.adam
    }

    /// One bias-corrected Adam update.
    pub fn adam_step(&mut self, grads: &Gradients, config: &AdamConfig, direction: Direction) -> Result<()> {
        config.validate()?;
        if grads.tensors().len() != self.params().len() {
            return Err(NnError::Shape { layer: 0, detail: "gradient count does not match parameters".into() });
        }
        for ((g, p), name) in grads.tensors().iter().zip(self.params()).zip(self.param_names()) {
            if g.shape() != p.shape() {
                return Err(NnError::Shape {
                    layer: 0,
                    detail: format!("gradient for `{name}` has shape {:?}, expected {:?}", g.shape(), p.shape()),
                });
            }
            if !g.is_finite() {
                return Err(NnError::NonFiniteGradient(name.clone()));
            }
        }
        let sign = match direction {
            Direction::Descend => -1.0,
            Direction::Ascend => 1.0,
        };
        let (params, state) = self.params_and_adam_mut();
        state.step += 1;
        let t = state.step as i32;
        let correction1 = 1.0 - config.beta1.powi(t);
        let correction2 = 1.0 - config.beta2.powi(t);
        for (k, g) in grads.tensors().iter().enumerate() {
            let p = params[k].data_mut();
            let m = state.m[k].data_mut();
            let v = state.v[k].data_mut();
            for j in 0..p.len() {
                let gj = g.data()[j];
                m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * gj;
                v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * gj * gj;
                let m_hat = m[j] / correction1;
                let v_hat = v[j] / correction2;
                p[j] += sign * config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
            }
        }
        self.bump_version();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer::LayerSpec;

    fn scalar_net(value: f64) -> Network {
        // dense 1 -> 1 without bias usage; weight is the scalar parameter.
        let mut net = Network::zeros(&[LayerSpec::dense(1, 1)], &[1]).unwrap();
        net.params_mut()[0].data_mut()[0] = value;
        net
    }

    fn grads_for(net: &Network, w: f64, b: f64) -> Gradients {
        let mut g = net.zero_gradients();
        g.tensors_mut()[0].data_mut()[0] = w;
        g.tensors_mut()[1].data_mut()[0] = b;
        g
    }

    #[test]
    fn first_step_matches_hand_recurrence() {
        let mut net = scalar_net(0.0);
        let g = grads_for(&net, 1.0, 0.0);
        net.adam_step(&g, &AdamConfig::with_learning_rate(0.001), Direction::Descend).unwrap();
        // m_hat = 1, v_hat = 1, step = lr / (1 + 1e-8)
        let expected = -0.001 / (1.0 + 1e-8);
        let w = net.params()[0].data()[0];
        assert!((w - expected).abs() < 1e-15, "{w}");
        assert!((w + 0.000999999).abs() < 1e-9);
        assert_eq!(net.adam_step_count(), 1);
    }

    #[test]
    fn zero_gradient_is_a_fixed_point_from_fresh_state() {
        let mut net = scalar_net(0.7);
        let before = net.params().to_vec();
        let g = net.zero_gradients();
        net.adam_step(&g, &AdamConfig::default(), Direction::Descend).unwrap();
        assert_eq!(net.params(), before.as_slice());
        assert_eq!(net.adam_step_count(), 1);
    }

    #[test]
    fn moments_decay_under_zero_gradient() {
        let mut net = scalar_net(0.0);
        let cfg = AdamConfig::default();
        net.adam_step(&grads_for(&net, 1.0, 0.0), &cfg, Direction::Descend).unwrap();
        let m1 = net.adam_state().first_moments()[0].data()[0];
        let v1 = net.adam_state().second_moments()[0].data()[0];
        net.adam_step(&net.zero_gradients(), &cfg, Direction::Descend).unwrap();
        let m2 = net.adam_state().first_moments()[0].data()[0];
        let v2 = net.adam_state().second_moments()[0].data()[0];
        assert!((m2 - 0.9 * m1).abs() < 1e-15);
        assert!((v2 - 0.999 * v1).abs() < 1e-15);
    }

    #[test]
    fn ascend_equals_descend_on_negated_gradient() {
        let cfg = AdamConfig::with_learning_rate(0.01);
        let mut a = scalar_net(0.3);
        let mut b = scalar_net(0.3);
        for g in [0.5, -1.5, 2.0, 0.1] {
            a.adam_step(&grads_for(&a, g, -g), &cfg, Direction::Ascend).unwrap();
            b.adam_step(&grads_for(&b, -g, g), &cfg, Direction::Descend).unwrap();
        }
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn nan_gradient_aborts() {
        let mut net = scalar_net(0.0);
        let g = grads_for(&net, f64::NAN, 0.0);
        match net.adam_step(&g, &AdamConfig::default(), Direction::Descend) {
            Err(NnError::NonFiniteGradient(name)) => assert_eq!(name, "layer0.weight"),
            other => panic!("expected NaN diagnostic, got {other:?}"),
        }
        assert_eq!(net.adam_step_count(), 0);
    }

    #[test]
    fn config_validation() {
        assert!(AdamConfig::default().validate().is_ok());
        assert!(AdamConfig::with_learning_rate(0.0).validate().is_err());
        let swapped = AdamConfig { beta1: 0.999, beta2: 0.9, ..AdamConfig::default() };
        assert!(swapped.validate().is_err());
    }

    #[test]
    fn deterministic_given_inputs() {
        let cfg = AdamConfig::default();
        let mut a = scalar_net(1.0);
        let mut b = a.clone();
        let g = grads_for(&a, 0.25, -0.75);
        a.adam_step(&g, &cfg, Direction::Descend).unwrap();
        b.adam_step(&g, &cfg, Direction::Descend).unwrap();
        assert_eq!(a.params(), b.params());
        assert_eq!(a.adam_state(), b.adam_state());
    }
}
