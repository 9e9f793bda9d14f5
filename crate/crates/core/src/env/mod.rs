//! Base-station environment: channel and CPU dynamics, link budget, window
//! corruption on the uplink, and the per-step QoE.

mod config;
mod corrupt;
mod dynamics;
mod link;

use rand::Rng;

use crate::rng::SimRng;
use crate::signal::{EegWindow, SharedDataset};
use crate::{Error, Result};

pub use config::{dbm_to_watts, watts_to_dbm, EnvConfig};
pub use corrupt::{corrupt_window, corrupt_window_counted, SEGMENT_COLUMNS};
pub use dynamics::{advance_channel_and_cpu, CPU_MAX, CPU_MIN};
pub use link::{
    block_error, blocks_assigned, core_of, downlink_rate, packet_error, packet_error_raw, processing_delay,
    round_trip_delay, uplink_rate, uplink_sinr,
};

/// Tolerance on the CPU shares summing to one.
pub const SHARE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    /// Channel power gains, one per user.
    pub gains: Vec<f64>,
    /// Available CPU fraction per core.
    pub cpu: Vec<f64>,
    /// Clean windows the users are sending this step.
    pub windows: Vec<EegWindow>,
    /// The same windows as received by the base station.
    pub received: Vec<EegWindow>,
    pub step_index: usize,
}

impl EnvState {
    /// Gains and CPU only; used by link-budget tests.
    pub fn for_tests(gains: Vec<f64>, cpu: Vec<f64>) -> Self {
        Self { gains, cpu, windows: Vec::new(), received: Vec::new(), step_index: 0 }
    }

    /// Gains normalised by the mean channel gain.
    pub fn normalized_gains(&self, config: &EnvConfig) -> Vec<f64> {
        self.gains.iter().map(|h| h / config.mean_channel_gain).collect()
    }
}

/// One allocation decision.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionVector {
    /// User index per resource block.
    pub blocks: Vec<usize>,
    /// Transmit power per user, watts.
    pub powers: Vec<f64>,
    /// `K + 1` shares; entry 0 is the idle share.
    pub cpu_shares: Vec<f64>,
    /// Predicted class per user.
    pub predictions: Vec<usize>,
}

impl ActionVector {
    /// CPU share of user `k` (index `k + 1` of `cpu_shares`).
    pub fn user_share(&self, k: usize) -> f64 {
        self.cpu_shares[k + 1]
    }

    /// Round-robin blocks, full power and an even CPU split.
    pub fn round_robin(config: &EnvConfig) -> Self {
        let k = config.users;
        let mut cpu_shares = vec![1.0 / k as f64; k + 1];
        cpu_shares[0] = 0.0;
        Self {
            blocks: (0..config.blocks).map(|m| m % k).collect(),
            powers: vec![config.max_power_w; k],
            cpu_shares,
            predictions: vec![0; k],
        }
    }

    pub fn validate(&self, config: &EnvConfig, classes: Option<usize>) -> std::result::Result<(), ConstraintViolation> {
        let k = config.users;
        if self.blocks.len() != config.blocks {
            return Err(ConstraintViolation::BlockAssignment(format!(
                "{} assignments for {} blocks",
                self.blocks.len(),
                config.blocks
            )));
        }
        if let Some((m, &u)) = self.blocks.iter().enumerate().find(|(_, &u)| u >= k) {
            return Err(ConstraintViolation::BlockAssignment(format!("block {m} assigned to user {u} of {k}")));
        }
        if self.powers.len() != k {
            return Err(ConstraintViolation::PowerBound(format!("{} powers for {k} users", self.powers.len())));
        }
        if let Some((i, p)) =
            self.powers.iter().enumerate().find(|(_, &p)| !(p > 0.0 && p <= config.max_power_w))
        {
            return Err(ConstraintViolation::PowerBound(format!(
                "user {i} power {p} outside (0, {}]",
                config.max_power_w
            )));
        }
        if self.cpu_shares.len() != k + 1 {
            return Err(ConstraintViolation::CpuShares(format!(
                "{} shares, expected {}",
                self.cpu_shares.len(),
                k + 1
            )));
        }
        if let Some((i, s)) = self.cpu_shares.iter().enumerate().find(|(_, &s)| !(s >= 0.0 && s.is_finite())) {
            return Err(ConstraintViolation::CpuShares(format!("share {i} is {s}")));
        }
        let sum: f64 = self.cpu_shares.iter().sum();
        if (sum - 1.0).abs() > SHARE_SUM_TOLERANCE {
            return Err(ConstraintViolation::CpuShares(format!("shares sum to {sum}")));
        }
        if self.predictions.len() != k {
            return Err(ConstraintViolation::Prediction(format!(
                "{} predictions for {k} users",
                self.predictions.len()
            )));
        }
        if let Some(c) = classes {
            if let Some((i, &p)) = self.predictions.iter().enumerate().find(|(_, &p)| p >= c) {
                return Err(ConstraintViolation::Prediction(format!("user {i} predicted class {p} of {c}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstraintViolation {
    #[error("block assignment: {0}")]
    BlockAssignment(String),
    #[error("transmit power: {0}")]
    PowerBound(String),
    #[error("cpu shares: {0}")]
    CpuShares(String),
    #[error("prediction: {0}")]
    Prediction(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserMetrics {
    pub uplink_rate: f64,
    pub downlink_rate: f64,
    pub processing_delay: f64,
    /// Round-trip delay; infinite for a user without blocks or CPU share.
    pub delay: f64,
    /// Clamped packet error.
    pub packet_error: f64,
    /// Per-block errors summed, before clamping.
    pub packet_error_raw: f64,
    /// Error probability applied to the next window; 1 when the user has no blocks.
    pub corruption_rate: f64,
    pub delay_ok: bool,
    pub prediction_ok: bool,
    pub qoe: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepMetrics {
    pub users: Vec<UserMetrics>,
    pub mean_qoe: f64,
    /// Mean delay with each user's delay capped at `delay_cap_s`.
    pub mean_delay: f64,
    pub mean_packet_error: f64,
    pub accuracy: f64,
    pub delay_ok_fraction: f64,
    pub terminal: bool,
}

/// Evaluates one user's link, delay and QoE term.
pub fn user_metrics(
    k: usize,
    action: &ActionVector,
    state: &EnvState,
    verdict: bool,
    config: &EnvConfig,
) -> UserMetrics {
    let (d, delay) = round_trip_delay(k, action, state, config);
    let served = blocks_assigned(k, action) > 0;
    let packet_error = packet_error(k, action, state, config);
    let delay_ok = delay <= config.max_delay_s;
    UserMetrics {
        uplink_rate: uplink_rate(k, action, state, config),
        downlink_rate: downlink_rate(k, state, config),
        processing_delay: d,
        delay,
        packet_error,
        packet_error_raw: packet_error_raw(k, action, state, config),
        corruption_rate: if served { packet_error } else { 1.0 },
        delay_ok,
        prediction_ok: verdict,
        qoe: config.eta1 * f64::from(u8::from(delay_ok)) + config.eta2 * f64::from(u8::from(verdict)),
    }
}

/// Aggregates per-user metrics into step metrics.
pub fn aggregate(users: Vec<UserMetrics>, config: &EnvConfig, terminal: bool) -> StepMetrics {
    let n = users.len() as f64;
    let mean = |f: &dyn Fn(&UserMetrics) -> f64| users.iter().map(f).sum::<f64>() / n;
    StepMetrics {
        mean_qoe: mean(&|u| u.qoe),
        mean_delay: mean(&|u| u.delay.min(config.delay_cap_s)),
        mean_packet_error: mean(&|u| u.packet_error),
        accuracy: mean(&|u| f64::from(u8::from(u.prediction_ok))),
        delay_ok_fraction: mean(&|u| f64::from(u8::from(u.delay_ok))),
        terminal,
        users,
    }
}

fn draw_windows(dataset: &SharedDataset, users: usize, rng: &mut SimRng) -> Vec<EegWindow> {
    (0..users)
        .map(|k| {
            let mut w = dataset.windows()[rng.random_range(0..dataset.len())].clone();
            w.user_id = k;
            w
        })
        .collect()
}

fn corrupt_all(windows: &[EegWindow], rates: &[f64], rng: &mut SimRng) -> Vec<EegWindow> {
    windows.iter().zip(rates).map(|(w, &eps)| corrupt_window(w, eps, rng)).collect()
}

/// Environment bound to a dataset. Channel, CPU and window draws use one
/// stream and packet loss another, so runs that differ only in link quality
/// see the same channels and windows.
#[derive(Debug, Clone)]
pub struct WirelessEnv {
    config: EnvConfig,
    dataset: Option<SharedDataset>,
    rng: SimRng,
    loss_rng: SimRng,
}

impl WirelessEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let rng = crate::rng::stream(config.seed, 0);
        let loss_rng = crate::rng::stream(config.seed, 1);
        Ok(Self { config, dataset: None, rng, loss_rng })
    }

    pub fn with_dataset(config: EnvConfig, dataset: SharedDataset) -> Result<Self> {
        let mut env = Self::new(config)?;
        env.attach_dataset(dataset);
        Ok(env)
    }

    pub fn attach_dataset(&mut self, dataset: SharedDataset) {
        self.dataset = Some(dataset);
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn dataset(&self) -> Option<&SharedDataset> {
        self.dataset.as_ref()
    }

    /// Fresh channel, CPU and windows. The first windows are received under
    /// a round-robin, full-power allocation.
    pub fn reset(&mut self) -> Result<EnvState> {
        let dataset = self.dataset.clone().ok_or(Error::MissingDataset)?;
        let config = &self.config;
        let gains = (0..config.users)
            .map(|_| config.mean_channel_gain * self.rng.sample::<f64, _>(rand_distr::Exp1))
            .map(|h| h.max(f64::MIN_POSITIVE))
            .collect();
        let cpu = (0..config.cores).map(|_| self.rng.random_range(CPU_MIN..CPU_MAX)).collect();
        let windows = draw_windows(&dataset, config.users, &mut self.rng);
        let mut state = EnvState { gains, cpu, received: Vec::new(), windows, step_index: 0 };
        let bootstrap = ActionVector::round_robin(config);
        let rates: Vec<f64> =
            (0..config.users).map(|k| user_metrics(k, &bootstrap, &state, false, config).corruption_rate).collect();
        state.received = corrupt_all(&state.windows, &rates, &mut self.loss_rng);
        Ok(state)
    }

    /// Applies `action` to `state`. `verdicts[k]` says whether the
    /// prediction for user `k`'s received window matched its label.
    ///
    /// The next state's windows are received with this step's packet errors.
    pub fn step(&mut self, state: &EnvState, action: &ActionVector, verdicts: &[bool]) -> Result<(StepMetrics, EnvState)> {
        let dataset = self.dataset.clone().ok_or(Error::MissingDataset)?;
        let config = &self.config;
        action.validate(config, Some(dataset.class_count()))?;
        if verdicts.len() != config.users {
            return Err(Error::Config(format!("{} verdicts for {} users", verdicts.len(), config.users)));
        }
        let users: Vec<UserMetrics> =
            (0..config.users).map(|k| user_metrics(k, action, state, verdicts[k], config)).collect();
        let step_index = state.step_index + 1;
        let terminal = step_index >= config.horizon;
        let (gains, cpu) = advance_channel_and_cpu(state, config, &mut self.rng);
        let windows = draw_windows(&dataset, config.users, &mut self.rng);
        let rates: Vec<f64> = users.iter().map(|u| u.corruption_rate).collect();
        let received = corrupt_all(&windows, &rates, &mut self.loss_rng);
        let next = EnvState { gains, cpu, windows, received, step_index };
        Ok((aggregate(users, config, terminal), next))
    }
}
