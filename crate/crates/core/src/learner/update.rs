use bci_nn::loss::{cross_entropy, cross_entropy_grad_probs};
use bci_nn::{Direction, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;

use super::config::{CriticTarget, LearnerConfig};
use super::gae::{clipped_objective, clipped_objective_grad, compute_gae};
use super::model::HybridModel;
use super::policy::PolicyDistribution;
use super::rollout::Trajectory;
use crate::signal::EegWindow;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IterationDiagnostics {
    /// Mean surrogate before the first actor step.
    pub actor_objective: f64,
    /// Mean squared critic error before the first critic step.
    pub critic_loss: f64,
    /// Mean cross-entropy before the first classifier step; NaN without a classifier.
    pub classifier_loss: f64,
    /// Mean probability ratio during the last epoch.
    pub mean_ratio: f64,
}

fn finite(value: f64, component: &'static str, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { component, what: what.into() })
    }
}

fn standardize(values: &mut [f64]) {
    let n = values.len() as f64;
    if values.len() < 2 {
        return;
    }
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    for v in values.iter_mut() {
        *v = (*v - mean) / (sd + 1e-8);
    }
}

/// One actor ascent step; returns the mean objective and ratio before it.
fn actor_step(model: &mut HybridModel, trajectory: &Trajectory, advantages: &[f64], config: &LearnerConfig) -> Result<(f64, f64)> {
    let n = trajectory.len() as f64;
    let mut grads = model.actor.zero_gradients();
    let (mut objective, mut ratio_sum) = (0.0, 0.0);
    for (step, &adv) in trajectory.steps.iter().zip(advantages) {
        let (out, cache) = model.actor.forward(&step.observation.to_tensor())?;
        let dist = PolicyDistribution::from_output(model.layout, out.data())?;
        let new = dist.log_density(&step.sample);
        let old = step.sample.log_density;
        let ratio = (new - old).exp();
        let (value, slope) = if config.clip {
            (
                clipped_objective(new, old, adv, config.clip_epsilon),
                clipped_objective_grad(new, old, adv, config.clip_epsilon),
            )
        } else {
            (ratio * adv, ratio * adv)
        };
        objective += value / n;
        ratio_sum += ratio / n;
        if slope != 0.0 {
            let g: Vec<f64> = dist.log_density_grad(&step.sample).iter().map(|d| d * slope / n).collect();
            model.actor.backward_into(&cache, &Tensor::vector(g), &mut grads)?;
        }
    }
    finite(objective, "actor", "objective")?;
    model.actor.adam_step(&grads, &model.actor_adam, Direction::Ascend)?;
    Ok((objective, ratio_sum))
}

fn critic_step(model: &mut HybridModel, trajectory: &Trajectory, targets: &[f64]) -> Result<f64> {
    let n = trajectory.len() as f64;
    let mut grads = model.critic.zero_gradients();
    let mut loss = 0.0;
    for (step, &target) in trajectory.steps.iter().zip(targets) {
        let (out, cache) = model.critic.forward(&step.observation.to_tensor())?;
        let err = out.data()[0] - target;
        loss += err * err / n;
        model.critic.backward_into(&cache, &Tensor::vector(vec![2.0 * err / n]), &mut grads)?;
    }
    finite(loss, "critic", "loss")?;
    model.critic.adam_step(&grads, &model.critic_adam, Direction::Descend)?;
    Ok(loss)
}

/// One classifier descent step on `batch`; returns the mean loss before it.
pub fn classifier_step(model: &mut HybridModel, batch: &[&EegWindow]) -> Result<f64> {
    let net = model.classifier.as_mut().ok_or_else(|| Error::Config("no classifier network".into()))?;
    let n = batch.len() as f64;
    let mut grads = net.zero_gradients();
    let mut loss = 0.0;
    for w in batch {
        let (probs, cache) = net.forward(&w.to_tensor())?;
        loss += cross_entropy(probs.data(), w.label)? / n;
        let g: Vec<f64> = cross_entropy_grad_probs(probs.data(), w.label)?.iter().map(|v| v / n).collect();
        net.backward_into(&cache, &Tensor::vector(g), &mut grads)?;
    }
    finite(loss, "classifier", "cross-entropy")?;
    net.adam_step(&grads, &model.classifier_adam, Direction::Descend)?;
    Ok(loss)
}

/// Advantages and critic targets for a trajectory under `config`.
pub fn advantages_and_targets(trajectory: &Trajectory, config: &LearnerConfig) -> (Vec<f64>, Vec<f64>) {
    let rewards = trajectory.rewards();
    let (mut adv, returns) = compute_gae(
        &rewards,
        &trajectory.values(),
        &trajectory.terminals(),
        trajectory.bootstrap_value,
        config.gamma,
        config.lambda,
    );
    if config.normalize_advantages {
        standardize(&mut adv);
    }
    let targets = match config.critic_target {
        CriticTarget::Return => returns,
        CriticTarget::Reward => rewards,
    };
    (adv, targets)
}

/// `update_epochs` passes of actor ascent, critic descent and classifier
/// descent over one trajectory, then refreshes the old actor.
pub fn update_iteration<R: Rng + ?Sized>(
    model: &mut HybridModel,
    trajectory: &Trajectory,
    config: &LearnerConfig,
    rng: &mut R,
) -> Result<IterationDiagnostics> {
    if trajectory.is_empty() {
        return Err(Error::Config("cannot update on an empty trajectory".into()));
    }
    let (advantages, targets) = advantages_and_targets(trajectory, config);
    let mut pairs: Vec<&EegWindow> = trajectory.steps.iter().flat_map(|s| s.received.iter()).collect();
    let batch = if config.classifier_batch == 0 { pairs.len() } else { config.classifier_batch.min(pairs.len()) };
    let mut diag = IterationDiagnostics { actor_objective: 0.0, critic_loss: 0.0, classifier_loss: f64::NAN, mean_ratio: 1.0 };
    for epoch in 0..config.update_epochs {
        let (objective, ratio) = actor_step(model, trajectory, &advantages, config)?;
        let critic_loss = critic_step(model, trajectory, &targets)?;
        let mut class_loss = f64::NAN;
        if model.classifier.is_some() {
            if batch < pairs.len() {
                pairs.shuffle(rng);
            }
            let mut total = 0.0;
            let chunks = pairs.chunks(batch).count();
            for chunk in pairs.chunks(batch) {
                total += classifier_step(model, chunk)? / chunks as f64;
            }
            class_loss = total;
        }
        if epoch == 0 {
            diag.actor_objective = objective;
            diag.critic_loss = critic_loss;
            diag.classifier_loss = class_loss;
        }
        diag.mean_ratio = ratio;
    }
    model.refresh_old_actor();
    Ok(diag)
}
