//! Experiment configuration and its flat `section.key = value` text form.
//!
//! ```text
//! # comments start with '#'
//! run.algo = hybrid
//! run.episodes = 500
//! env.p_max = 10 dBm
//! learner.gamma = 0.99
//! learner.actor_hidden = dense 64; tanh; dense 64; tanh
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use bci_nn::LayerSpec;

use crate::baselines::{RlBaselineConfig, RlVariant, SvmConfig};
use crate::env::{dbm_to_watts, EnvConfig};
use crate::learner::{Algorithm, CriticTarget, LearnerConfig};
use crate::signal::GeneratorConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 500 episodes on 8 x 32 windows.
    Desk,
    /// 2000 episodes on 64 x 160 windows.
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!("unknown preset `{other}` (expected desk or paper)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub learner: LearnerConfig,
    pub generator: GeneratorConfig,
    pub svm: SvmConfig,
    pub algo: Algorithm,
    pub episodes: usize,
    /// Greedy episodes in the final held-out evaluation.
    pub eval_episodes: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub windows_per_class: usize,
    pub train_fraction: f64,
    /// CSV dataset to load instead of generating one.
    pub dataset: Option<PathBuf>,
    /// Uplink payload; `None` sizes it from the window shape.
    pub uplink_bits: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(Preset::Desk)
    }
}

/// One 64 x 160 window of 16-bit samples.
pub const FULL_SCALE_UPLINK_BITS: f64 = 64.0 * 160.0 * 16.0;

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        // desk runs shrink the classifier input, not the radio payload
        let (generator, episodes, uplink_bits) = match preset {
            Preset::Desk => (GeneratorConfig::default(), 500, Some(FULL_SCALE_UPLINK_BITS)),
            Preset::Paper => (GeneratorConfig::full_scale(), 2000, None),
        };
        Self {
            env: EnvConfig::default(),
            learner: LearnerConfig { episodes, ..LearnerConfig::default() },
            generator,
            svm: SvmConfig::default(),
            algo: Algorithm::Hybrid,
            episodes,
            eval_episodes: 20,
            seed: 1,
            output_dir: PathBuf::from("out"),
            windows_per_class: 250,
            train_fraction: 0.8,
            dataset: None,
            uplink_bits,
        }
    }

    /// Copies run-level settings into the sub-configs.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.learner.episodes = c.episodes;
        c.learner.seed = c.seed;
        c.env.uplink_bits = c.uplink_bits.unwrap_or((c.generator.channels * c.generator.window_length * 16) as f64);
        if c.algo == Algorithm::Vpg {
            c.learner = RlBaselineConfig::new(RlVariant::Vpg, &c.learner).learner;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.resolved();
        c.env.validate()?;
        c.learner.validate()?;
        c.generator.validate()?;
        c.svm.validate()?;
        if c.eval_episodes == 0 {
            return Err(Error::Config("run.eval_episodes must be positive".into()));
        }
        if c.windows_per_class < 2 {
            return Err(Error::Config("run.windows_per_class must be at least 2".into()));
        }
        if !(c.train_fraction > 0.0 && c.train_fraction < 1.0) {
            return Err(Error::Config(format!("run.train_fraction {} must be in (0, 1)", c.train_fraction)));
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", i + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str, preset: Preset) -> Result<Self> {
        let mut c = Self::preset(preset);
        c.apply_text(text)?;
        Ok(c)
    }

    /// Sets one dotted key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let e = &mut self.env;
        let l = &mut self.learner;
        let g = &mut self.generator;
        match key {
            "run.algo" => self.algo = value.parse()?,
            "run.episodes" => self.episodes = num(key, value)?,
            "run.eval_episodes" => self.eval_episodes = num(key, value)?,
            "run.seed" => self.seed = num(key, value)?,
            "run.output_dir" => self.output_dir = PathBuf::from(value),
            "run.windows_per_class" => self.windows_per_class = num(key, value)?,
            "run.train_fraction" => self.train_fraction = num(key, value)?,
            "run.dataset" => self.dataset = (!value.is_empty() && value != "none").then(|| PathBuf::from(value)),

            "env.users" => e.users = num(key, value)?,
            "env.blocks" => e.blocks = num(key, value)?,
            "env.cores" => e.cores = num(key, value)?,
            "env.uplink_bandwidth_hz" => e.uplink_bandwidth_hz = num(key, value)?,
            "env.downlink_bandwidth_hz" => e.downlink_bandwidth_hz = num(key, value)?,
            "env.noise_density" => e.noise_density_w_per_hz = power(key, value, "W/Hz", "dBm/Hz")?,
            "env.uplink_interference" => e.uplink_interference_w = power(key, value, "W", "dBm")?,
            "env.downlink_interference" => e.downlink_interference_w = power(key, value, "W", "dBm")?,
            "env.bs_power" => e.bs_power_w = power(key, value, "W", "dBm")?,
            "env.p_max" | "env.p_max_w" => e.max_power_w = power(key, value, "W", "dBm")?,
            "env.cpu_capacity_hz" => e.cpu_capacity_hz = num(key, value)?,
            "env.workload_cycles" => e.workload_cycles = num(key, value)?,
            "env.waterfall_threshold" => e.waterfall_threshold = num(key, value)?,
            "env.uplink_bits" => self.uplink_bits = (value != "auto").then(|| num(key, value)).transpose()?,
            "env.downlink_bits" => e.downlink_bits = num(key, value)?,
            "env.max_delay_s" => e.max_delay_s = num(key, value)?,
            "env.eta1" => e.eta1 = num(key, value)?,
            "env.eta2" => e.eta2 = num(key, value)?,
            "env.horizon" => e.horizon = num(key, value)?,
            "env.mean_channel_gain" => e.mean_channel_gain = num(key, value)?,
            "env.channel_correlation" => e.channel_correlation = num(key, value)?,
            "env.cpu_walk_std" => e.cpu_walk_std = num(key, value)?,
            "env.delay_cap_s" => e.delay_cap_s = num(key, value)?,

            "learner.gamma" => l.gamma = num(key, value)?,
            "learner.lambda" => l.lambda = num(key, value)?,
            "learner.clip_epsilon" => l.clip_epsilon = num(key, value)?,
            "learner.clip" => l.clip = boolean(key, value)?,
            "learner.actor_lr" => l.actor_lr = num(key, value)?,
            "learner.critic_lr" => l.critic_lr = num(key, value)?,
            "learner.classifier_lr" => l.classifier_lr = num(key, value)?,
            "learner.rollout_length" => l.rollout_length = num(key, value)?,
            "learner.update_epochs" => l.update_epochs = num(key, value)?,
            "learner.classifier_batch" => l.classifier_batch = num(key, value)?,
            "learner.normalize_advantages" => l.normalize_advantages = boolean(key, value)?,
            "learner.critic_target" => {
                l.critic_target = match value {
                    "return" => CriticTarget::Return,
                    "reward" => CriticTarget::Reward,
                    _ => return Err(Error::Config(format!("{key}: expected `return` or `reward`, got `{value}`"))),
                }
            }
            "learner.actor_hidden" => l.actor_hidden = layers(key, value, true)?,
            "learner.critic_hidden" => l.critic_hidden = layers(key, value, true)?,
            "learner.classifier_spec" => {
                l.classifier_spec = if value == "default" { None } else { Some(layers(key, value, false)?) }
            }
            "learner.initial_log_std" => l.initial_log_std = num(key, value)?,
            "learner.round_robin_prior" => l.round_robin_prior = num(key, value)?,

            "generator.channels" => g.channels = num(key, value)?,
            "generator.window_length" => g.window_length = num(key, value)?,
            "generator.classes" => g.classes = num(key, value)?,
            "generator.class_frequencies" => {
                g.class_frequencies = value.split(',').map(|v| num(key, v.trim())).collect::<Result<_>>()?
            }
            "generator.signal_amplitude" => g.signal_amplitude = num(key, value)?,
            "generator.noise_std" => g.noise_std = num(key, value)?,
            "generator.channels_per_class" => g.channels_per_class = num(key, value)?,
            "generator.sample_rate" => g.sample_rate = num(key, value)?,
            "generator.phase_jitter" => g.phase_jitter = num(key, value)?,
            "generator.seed" => g.seed = num(key, value)?,

            "svm.epochs" => self.svm.epochs = num(key, value)?,
            "svm.learning_rate" => self.svm.learning_rate = num(key, value)?,
            "svm.regularization" => self.svm.regularization = num(key, value)?,
            "svm.refit_every" => self.svm.refit_every = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a form [`ExperimentConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let e = &self.env;
        let l = &self.learner;
        let g = &self.generator;
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("run.algo", self.algo.to_string());
        put("run.episodes", self.episodes.to_string());
        put("run.eval_episodes", self.eval_episodes.to_string());
        put("run.seed", self.seed.to_string());
        put("run.output_dir", self.output_dir.display().to_string());
        put("run.windows_per_class", self.windows_per_class.to_string());
        put("run.train_fraction", self.train_fraction.to_string());
        put("run.dataset", self.dataset.as_ref().map_or("none".into(), |p| p.display().to_string()));
        put("env.users", e.users.to_string());
        put("env.blocks", e.blocks.to_string());
        put("env.cores", e.cores.to_string());
        put("env.uplink_bandwidth_hz", e.uplink_bandwidth_hz.to_string());
        put("env.downlink_bandwidth_hz", e.downlink_bandwidth_hz.to_string());
        put("env.noise_density", format!("{} W/Hz", e.noise_density_w_per_hz));
        put("env.uplink_interference", format!("{} W", e.uplink_interference_w));
        put("env.downlink_interference", format!("{} W", e.downlink_interference_w));
        put("env.bs_power", format!("{} W", e.bs_power_w));
        put("env.p_max", format!("{} W", e.max_power_w));
        put("env.cpu_capacity_hz", e.cpu_capacity_hz.to_string());
        put("env.workload_cycles", e.workload_cycles.to_string());
        put("env.waterfall_threshold", e.waterfall_threshold.to_string());
        put("env.uplink_bits", self.uplink_bits.map_or("auto".into(), |b| b.to_string()));
        put("env.downlink_bits", e.downlink_bits.to_string());
        put("env.max_delay_s", e.max_delay_s.to_string());
        put("env.eta1", e.eta1.to_string());
        put("env.eta2", e.eta2.to_string());
        put("env.horizon", e.horizon.to_string());
        put("env.mean_channel_gain", e.mean_channel_gain.to_string());
        put("env.channel_correlation", e.channel_correlation.to_string());
        put("env.cpu_walk_std", e.cpu_walk_std.to_string());
        put("env.delay_cap_s", e.delay_cap_s.to_string());
        put("learner.gamma", l.gamma.to_string());
        put("learner.lambda", l.lambda.to_string());
        put("learner.clip_epsilon", l.clip_epsilon.to_string());
        put("learner.clip", l.clip.to_string());
        put("learner.actor_lr", l.actor_lr.to_string());
        put("learner.critic_lr", l.critic_lr.to_string());
        put("learner.classifier_lr", l.classifier_lr.to_string());
        put("learner.rollout_length", l.rollout_length.to_string());
        put("learner.update_epochs", l.update_epochs.to_string());
        put("learner.classifier_batch", l.classifier_batch.to_string());
        put("learner.normalize_advantages", l.normalize_advantages.to_string());
        put(
            "learner.critic_target",
            match l.critic_target {
                CriticTarget::Return => "return".into(),
                CriticTarget::Reward => "reward".into(),
            },
        );
        put("learner.actor_hidden", hidden_text(&l.actor_hidden));
        put("learner.critic_hidden", hidden_text(&l.critic_hidden));
        put(
            "learner.classifier_spec",
            l.classifier_spec.as_ref().map_or("default".into(), |s| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")),
        );
        put("learner.initial_log_std", l.initial_log_std.to_string());
        put("learner.round_robin_prior", l.round_robin_prior.to_string());
        put("generator.channels", g.channels.to_string());
        put("generator.window_length", g.window_length.to_string());
        put("generator.classes", g.classes.to_string());
        put(
            "generator.class_frequencies",
            g.class_frequencies.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", "),
        );
        put("generator.signal_amplitude", g.signal_amplitude.to_string());
        put("generator.noise_std", g.noise_std.to_string());
        put("generator.channels_per_class", g.channels_per_class.to_string());
        put("generator.sample_rate", g.sample_rate.to_string());
        put("generator.phase_jitter", g.phase_jitter.to_string());
        put("generator.seed", g.seed.to_string());
        put("svm.epochs", self.svm.epochs.to_string());
        put("svm.learning_rate", self.svm.learning_rate.to_string());
        put("svm.regularization", self.svm.regularization.to_string());
        put("svm.refit_every", self.svm.refit_every.to_string());
        out
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got `{value}`"))),
    }
}

/// Linear value with an optional unit; `log_unit` values are dBm-style.
fn power(key: &str, value: &str, linear_unit: &str, log_unit: &str) -> Result<f64> {
    let v = value.trim();
    if let Some(n) = v.strip_suffix(log_unit) {
        return Ok(dbm_to_watts(num(key, n.trim())?));
    }
    let n = v.strip_suffix(linear_unit).unwrap_or(v);
    num(key, n.trim())
}

/// `;`-separated layers. In hidden stacks `dense N` gives the output width.
fn layers(key: &str, value: &str, hidden: bool) -> Result<Vec<LayerSpec>> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let parts: Vec<&str> = s.split_whitespace().collect();
            if hidden && parts.len() == 2 && parts[0] == "dense" {
                return Ok(LayerSpec::Dense { inputs: 0, outputs: num(key, parts[1])? });
            }
            s.parse::<LayerSpec>().map_err(|e| Error::Config(format!("{key}: {e}")))
        })
        .collect()
}

fn hidden_text(specs: &[LayerSpec]) -> String {
    specs
        .iter()
        .map(|s| match s {
            LayerSpec::Dense { outputs, .. } => format!("dense {outputs}"),
            other => other.to_string(),
        })
        .collect::<Vec<_>>()
        .join("; ")
}
