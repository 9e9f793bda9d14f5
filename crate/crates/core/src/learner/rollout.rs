use rand::Rng;

use super::model::{HybridModel, Observation};
use super::policy::PolicySample;
use crate::env::{ActionVector, EnvState, StepMetrics, WirelessEnv};
use crate::signal::EegWindow;
use crate::Result;

#[derive(Debug, Clone)]
pub struct StepRecord {
    pub observation: Observation,
    pub sample: PolicySample,
    pub action: ActionVector,
    /// Per-user QoE terms.
    pub qoe: Vec<f64>,
    /// Mean QoE over users; the reward.
    pub reward: f64,
    pub labels: Vec<usize>,
    pub received: Vec<EegWindow>,
    pub value: f64,
    pub terminal: bool,
    pub metrics: StepMetrics,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    /// Critic value after the last step; 0 when it was terminal.
    pub bootstrap_value: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.value).collect()
    }

    pub fn terminals(&self) -> Vec<bool> {
        self.steps.iter().map(|s| s.terminal).collect()
    }
}

/// An environment plus the state it is in between rollouts.
#[derive(Debug, Clone)]
pub struct Runner {
    pub env: WirelessEnv,
    state: Option<EnvState>,
}

impl Runner {
    pub fn new(env: WirelessEnv) -> Self {
        Self { env, state: None }
    }

    /// Current state, resetting at the start of an episode.
    pub fn state(&mut self) -> Result<&EnvState> {
        if self.state.is_none() {
            self.state = Some(self.env.reset()?);
        }
        Ok(self.state.as_ref().unwrap())
    }

    /// Forces the next rollout to start a fresh episode.
    pub fn end_episode(&mut self) {
        self.state = None;
    }

    fn advance(&mut self, action: &ActionVector, verdicts: &[bool]) -> Result<StepMetrics> {
        let state = self.state.take().expect("state present");
        let (metrics, next) = self.env.step(&state, action, verdicts)?;
        if !metrics.terminal {
            self.state = Some(next);
        }
        Ok(metrics)
    }
}

/// How the policy is queried.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    Sample,
    Greedy,
}

/// Runs one step: observe, classify, act. Returns the record without
/// advancing the runner.
fn act<R: Rng + ?Sized>(
    model: &HybridModel,
    runner: &mut Runner,
    mode: ActionMode,
    rng: &mut R,
) -> Result<(Observation, PolicySample, ActionVector, Vec<usize>, Vec<EegWindow>)> {
    let config = runner.env.config().clone();
    let state = runner.state()?;
    let observation = Observation::from_state(state, &config)?;
    let mut predictions = Vec::with_capacity(config.users);
    for w in &state.received {
        predictions.push(model.predict_window(w)?.unwrap_or(0));
    }
    let labels: Vec<usize> = state.windows.iter().map(|w| w.label).collect();
    let received = state.received.clone();
    let dist = model.policy(&observation)?;
    let sample = match mode {
        ActionMode::Sample => dist.sample(rng),
        ActionMode::Greedy => dist.greedy(),
    };
    let action = dist.to_action(&sample, predictions);
    Ok((observation, sample, action, labels, received))
}

/// Collects `length` steps with the current policy. Episodes that end
/// inside the rollout restart from a reset.
pub fn collect_trajectories<R: Rng + ?Sized>(
    model: &HybridModel,
    runner: &mut Runner,
    length: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut steps = Vec::with_capacity(length);
    for _ in 0..length {
        let (observation, sample, action, labels, received) = act(model, runner, ActionMode::Sample, rng)?;
        let value = model.value(&observation)?;
        let verdicts: Vec<bool> = action.predictions.iter().zip(&labels).map(|(p, l)| p == l).collect();
        let metrics = runner.advance(&action, &verdicts)?;
        steps.push(StepRecord {
            qoe: metrics.users.iter().map(|u| u.qoe).collect(),
            reward: metrics.mean_qoe,
            terminal: metrics.terminal,
            observation,
            sample,
            action,
            labels,
            received,
            value,
            metrics,
        });
    }
    let bootstrap_value = if steps.last().is_none_or(|s| s.terminal) {
        0.0
    } else {
        let config = runner.env.config().clone();
        model.value(&Observation::from_state(runner.state()?, &config)?)?
    };
    Ok(Trajectory { steps, bootstrap_value })
}

/// Greedy episode metrics plus predictions against labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyStep {
    pub metrics: StepMetrics,
    pub predictions: Vec<usize>,
    pub labels: Vec<usize>,
}

/// Runs one full greedy episode from a reset.
pub fn run_greedy_episode(model: &HybridModel, runner: &mut Runner) -> Result<Vec<GreedyStep>> {
    runner.end_episode();
    let mut steps = Vec::new();
    // greedy actions draw nothing; the generator is a formality
    let mut unused = crate::rng::seeded(0);
    loop {
        let (_, _, action, labels, _) = act(model, runner, ActionMode::Greedy, &mut unused)?;
        let verdicts: Vec<bool> = action.predictions.iter().zip(&labels).map(|(p, l)| p == l).collect();
        let metrics = runner.advance(&action, &verdicts)?;
        let terminal = metrics.terminal;
        steps.push(GreedyStep { metrics, predictions: action.predictions, labels });
        if terminal {
            return Ok(steps);
        }
    }
}
