use std::fmt;
use std::str::FromStr;

use bci_nn::{argmax, AdamConfig, Network, Tensor};
use rand::Rng;

use super::config::{build_mlp, default_classifier, LearnerConfig};
use super::policy::{ActorLayout, PolicyDistribution};
use crate::baselines::{predict_svm, SvmModel};
use crate::env::{EnvConfig, EnvState};
use crate::signal::EegWindow;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Actor, critic and a supervised convolutional classifier.
    Hybrid,
    /// Actor-critic whose policy also emits the predictions.
    Ppo,
    /// Like `Ppo` without clipping or lambda-weighted advantages.
    Vpg,
    /// Hybrid allocation with a linear SVM refit on stored windows.
    Svm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Hybrid, Algorithm::Ppo, Algorithm::Vpg, Algorithm::Svm];

    pub fn predicts_in_policy(self) -> bool {
        matches!(self, Algorithm::Ppo | Algorithm::Vpg)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hybrid => "hybrid",
            Algorithm::Ppo => "ppo",
            Algorithm::Vpg => "vpg",
            Algorithm::Svm => "svm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}` (expected hybrid, ppo, vpg or svm)")))
    }
}

/// Observation vector `[h / mean gain (K) | cpu (N) | mean |received| (K)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub features: Vec<f64>,
}

impl Observation {
    pub fn from_state(state: &EnvState, config: &EnvConfig) -> Result<Self> {
        let mut features = state.normalized_gains(config);
        features.extend_from_slice(&state.cpu);
        features.extend(state.received.iter().map(EegWindow::mean_abs));
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { component: "observation", what: format!("feature {i}") });
        }
        Ok(Self { features })
    }

    pub fn len_for(config: &EnvConfig) -> usize {
        2 * config.users + config.cores
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::vector(self.features.clone())
    }
}

/// Problem dimensions a model is built for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelShape {
    pub users: usize,
    pub blocks: usize,
    pub cores: usize,
    pub channels: usize,
    pub length: usize,
    pub classes: usize,
    pub max_power: f64,
}

impl ModelShape {
    pub fn new(env: &EnvConfig, channels: usize, length: usize, classes: usize) -> Self {
        Self {
            users: env.users,
            blocks: env.blocks,
            cores: env.cores,
            channels,
            length,
            classes,
            max_power: env.max_power_w,
        }
    }

    pub fn observation_len(&self) -> usize {
        2 * self.users + self.cores
    }
}

/// Factor applied to the classifier's output-layer weights at construction.
pub const CLASSIFIER_OUTPUT_SCALE: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct HybridModel {
    pub algorithm: Algorithm,
    pub shape: ModelShape,
    pub layout: ActorLayout,
    pub actor: Network,
    /// Actor parameters that collected the current rollout.
    pub old_actor: Network,
    pub critic: Network,
    pub classifier: Option<Network>,
    pub svm: Option<SvmModel>,
    pub actor_adam: AdamConfig,
    pub critic_adam: AdamConfig,
    pub classifier_adam: AdamConfig,
}

impl HybridModel {
    pub fn new<R: Rng + ?Sized>(algorithm: Algorithm, shape: ModelShape, config: &LearnerConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let layout = ActorLayout {
            users: shape.users,
            blocks: shape.blocks,
            prediction_classes: algorithm.predicts_in_policy().then_some(shape.classes),
            max_power: shape.max_power,
        };
        let obs = shape.observation_len();
        let actor_specs = build_mlp(&config.actor_hidden, obs, layout.output_len())?;
        let critic_specs = build_mlp(&config.critic_hidden, obs, 1)?;
        let mut actor = Network::new(&actor_specs, &[obs], rng)?;
        {
            // The CPU-share head receives no policy gradient, so its rows
            // start at zero and the shares stay at the even split.
            let out_len = layout.output_len();
            let params = actor.params_mut();
            let n = params.len();
            let (weights, bias) = params.split_at_mut(n - 1);
            let weights = weights.last_mut().expect("output weight").data_mut();
            let fan_in = weights.len() / out_len;
            let bias = bias[0].data_mut();
            for row in layout.tau_offset()..layout.prediction_offset() {
                weights[row * fan_in..(row + 1) * fan_in].fill(0.0);
                bias[row] = 0.0;
            }
            for k in 0..shape.users {
                bias[layout.log_std_offset() + k] = config.initial_log_std;
            }
            for m in 0..shape.blocks {
                bias[m * shape.users + m % shape.users] += config.round_robin_prior;
            }
        }
        let critic = Network::new(&critic_specs, &[obs], rng)?;
        let classifier = match algorithm {
            Algorithm::Hybrid => {
                let specs = match &config.classifier_spec {
                    Some(s) => s.clone(),
                    None => default_classifier(shape.channels, shape.length, shape.classes)?,
                };
                let mut net = Network::new(&specs, &[shape.channels, shape.length], rng)?;
                // a narrow output layer keeps the untrained predictions close to uniform
                let params = net.params_mut();
                if params.len() >= 2 {
                    let n = params.len();
                    params[n - 2].data_mut().iter_mut().for_each(|w| *w *= CLASSIFIER_OUTPUT_SCALE);
                }
                if net.output_shape() != [shape.classes] {
                    return Err(Error::Config(format!(
                        "classifier outputs {:?}, expected [{}]",
                        net.output_shape(),
                        shape.classes
                    )));
                }
                Some(net)
            }
            _ => None,
        };
        let svm = (algorithm == Algorithm::Svm).then(|| SvmModel::zeros(shape.classes, shape.channels * shape.length));
        Ok(Self {
            algorithm,
            shape,
            layout,
            old_actor: actor.clone(),
            actor,
            critic,
            classifier,
            svm,
            actor_adam: AdamConfig::with_learning_rate(config.actor_lr),
            critic_adam: AdamConfig::with_learning_rate(config.critic_lr),
            classifier_adam: AdamConfig::with_learning_rate(config.classifier_lr),
        })
    }

    pub fn policy(&self, observation: &Observation) -> Result<PolicyDistribution> {
        let out = self.actor.predict(&observation.to_tensor())?;
        PolicyDistribution::from_output(self.layout, out.data())
    }

    pub fn value(&self, observation: &Observation) -> Result<f64> {
        let v = self.critic.predict(&observation.to_tensor())?.data()[0];
        if !v.is_finite() {
            return Err(Error::NonFinite { component: "critic", what: "value".into() });
        }
        Ok(v)
    }

    /// Class probabilities of the convolutional classifier and their argmax.
    pub fn classify(&self, window: &EegWindow) -> Result<(usize, Vec<f64>)> {
        let net = self
            .classifier
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{} model has no classifier network", self.algorithm)))?;
        let probs = net.predict(&window.to_tensor())?.into_data();
        Ok((argmax(&probs), probs))
    }

    /// Prediction from a standalone classifier; `None` when the policy
    /// predicts.
    pub fn predict_window(&self, window: &EegWindow) -> Result<Option<usize>> {
        match self.algorithm {
            Algorithm::Hybrid => Ok(Some(self.classify(window)?.0)),
            Algorithm::Svm => Ok(Some(predict_svm(self.svm.as_ref().expect("svm model"), window))),
            Algorithm::Ppo | Algorithm::Vpg => Ok(None),
        }
    }

    pub fn refresh_old_actor(&mut self) {
        self.old_actor = self.actor.clone();
    }
}
