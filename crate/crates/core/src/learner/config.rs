use bci_nn::LayerSpec;

use crate::{Error, Result};

/// What the critic regresses onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticTarget {
    /// GAE return `A + V`.
    Return,
    /// The raw per-step mean QoE.
    Reward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip_epsilon: f64,
    /// Use the clipped surrogate; off gives the plain ratio-weighted objective.
    pub clip: bool,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub classifier_lr: f64,
    /// Steps per rollout (O).
    pub rollout_length: usize,
    pub episodes: usize,
    pub update_epochs: usize,
    /// Classifier minibatch size; 0 means the whole rollout.
    pub classifier_batch: usize,
    /// Standardize advantages per rollout before the actor update.
    pub normalize_advantages: bool,
    pub critic_target: CriticTarget,
    /// Hidden layers; input and output layers are added from the problem size.
    pub actor_hidden: Vec<LayerSpec>,
    pub critic_hidden: Vec<LayerSpec>,
    /// Full classifier stack; `None` builds the default for the window shape.
    pub classifier_spec: Option<Vec<LayerSpec>>,
    /// Initial bias of the power log-std outputs.
    pub initial_log_std: f64,
    /// Initial bias toward user `m mod K` on block `m`; 0 starts uniform.
    pub round_robin_prior: f64,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip_epsilon: 0.2,
            clip: true,
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            classifier_lr: 1e-3,
            rollout_length: 50,
            episodes: 500,
            update_epochs: 4,
            classifier_batch: 0,
            normalize_advantages: true,
            critic_target: CriticTarget::Return,
            actor_hidden: hidden_stack(64, 64),
            critic_hidden: hidden_stack(64, 64),
            classifier_spec: None,
            initial_log_std: 0.0,
            round_robin_prior: 2.0,
            seed: 0,
        }
    }
}

fn hidden_stack(a: usize, b: usize) -> Vec<LayerSpec> {
    vec![LayerSpec::Dense { inputs: 0, outputs: a }, LayerSpec::Tanh, LayerSpec::Dense { inputs: a, outputs: b }, LayerSpec::Tanh]
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("learner: {msg}")));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return fail(format!("gamma {} must be in (0, 1)", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return fail(format!("lambda {} must be in [0, 1]", self.lambda));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon.is_finite()) {
            return fail(format!("clip_epsilon {} must be positive", self.clip_epsilon));
        }
        for (name, lr) in [("actor_lr", self.actor_lr), ("critic_lr", self.critic_lr), ("classifier_lr", self.classifier_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return fail(format!("{name} {lr} must be positive"));
            }
        }
        if self.rollout_length == 0 || self.update_epochs == 0 {
            return fail("rollout_length and update_epochs must be positive".into());
        }
        if !(self.round_robin_prior.is_finite() && self.round_robin_prior >= 0.0) {
            return fail("round_robin_prior must be finite and non-negative".into());
        }
        if !self.initial_log_std.is_finite() {
            return fail("initial_log_std must be finite".into());
        }
        Ok(())
    }
}

/// Prepends `Dense(inputs, _)` wiring to a hidden stack and appends the
/// output layer.
pub fn build_mlp(hidden: &[LayerSpec], inputs: usize, outputs: usize) -> Result<Vec<LayerSpec>> {
    let mut specs = Vec::with_capacity(hidden.len() + 1);
    let mut width = inputs;
    for spec in hidden {
        match *spec {
            LayerSpec::Dense { outputs: o, .. } => {
                specs.push(LayerSpec::Dense { inputs: width, outputs: o });
                width = o;
            }
            LayerSpec::Relu | LayerSpec::Tanh => specs.push(spec.clone()),
            ref other => return Err(Error::Config(format!("hidden layer `{other}` is not dense or an activation"))),
        }
    }
    specs.push(LayerSpec::Dense { inputs: width, outputs });
    Ok(specs)
}

/// Default convolutional classifier for `channels x length` windows.
pub fn default_classifier(channels: usize, length: usize, classes: usize) -> Result<Vec<LayerSpec>> {
    let after_conv1 = length
        .checked_sub(4)
        .filter(|&l| l >= 2)
        .ok_or_else(|| Error::Config(format!("window length {length} too short for the default classifier")))?;
    let after_pool = after_conv1 / 2;
    let after_conv2 = after_pool
        .checked_sub(2)
        .filter(|&l| l >= 1)
        .ok_or_else(|| Error::Config(format!("window length {length} too short for the default classifier")))?;
    Ok(vec![
        LayerSpec::conv1d(channels, 16, 5),
        LayerSpec::Relu,
        LayerSpec::MaxPool1d { width: 2 },
        LayerSpec::conv1d(16, 16, 3),
        LayerSpec::Relu,
        LayerSpec::Flatten,
        LayerSpec::dense(16 * after_conv2, classes),
        LayerSpec::Softmax,
    ])
}
