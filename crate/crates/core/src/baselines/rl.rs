use rand::Rng;

use crate::baselines::SvmConfig;
use crate::learner::{train, Algorithm, HybridModel, LearnerConfig, ModelShape, Runner, TrainOutput};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlVariant {
    /// Clipped surrogate with GAE; predictions come from the policy.
    PpoMonolithic,
    /// Return-weighted log-density gradient with a value baseline.
    Vpg,
}

impl RlVariant {
    pub fn algorithm(self) -> Algorithm {
        match self {
            RlVariant::PpoMonolithic => Algorithm::Ppo,
            RlVariant::Vpg => Algorithm::Vpg,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RlBaselineConfig {
    pub variant: RlVariant,
    pub learner: LearnerConfig,
}

impl RlBaselineConfig {
    /// Baseline settings derived from a hybrid learner config. VPG turns off
    /// clipping, uses `lambda = 1` (advantage = return - value) and a single
    /// pass per rollout.
    pub fn new(variant: RlVariant, base: &LearnerConfig) -> Self {
        let mut learner = base.clone();
        if variant == RlVariant::Vpg {
            learner.clip = false;
            learner.lambda = 1.0;
            learner.update_epochs = 1;
        }
        Self { variant, learner }
    }

    pub fn validate(&self) -> Result<()> {
        self.learner.validate()?;
        if self.variant == RlVariant::Vpg {
            if self.learner.clip {
                return Err(Error::Config("vpg does not use policy clipping".into()));
            }
            if self.learner.lambda != 1.0 {
                return Err(Error::Config("vpg uses plain returns (lambda = 1)".into()));
            }
        }
        Ok(())
    }
}

/// Builds and trains a monolithic policy. Labels reach it only through the
/// environment's verdicts.
pub fn train_rl_baseline<R: Rng + ?Sized>(
    config: &RlBaselineConfig,
    shape: ModelShape,
    runner: &mut Runner,
    heldout: Option<&mut Runner>,
    rng: &mut R,
) -> Result<(HybridModel, TrainOutput)> {
    config.validate()?;
    let mut model = HybridModel::new(config.variant.algorithm(), shape, &config.learner, rng)?;
    let out = train(&mut model, runner, heldout, &config.learner, &SvmConfig::default(), rng)?;
    Ok((model, out))
}
