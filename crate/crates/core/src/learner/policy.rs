//! Action distribution carried by the actor's output vector.
//!
//! Output layout: `[block logits (M*K) | power mean (K) | power log-std (K) |
//! cpu-share logits (K+1) | prediction logits (K*C, optional)]`.

use std::f64::consts::PI;

use bci_nn::{argmax, softmax};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::env::ActionVector;
use crate::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Pre-squash values are clamped to this magnitude before mapping to power.
pub const SQUASH_LIMIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorLayout {
    pub users: usize,
    pub blocks: usize,
    /// Classes of the in-policy prediction head, if any.
    pub prediction_classes: Option<usize>,
    pub max_power: f64,
}

impl ActorLayout {
    pub fn power_mean_offset(&self) -> usize {
        self.blocks * self.users
    }

    pub fn log_std_offset(&self) -> usize {
        self.power_mean_offset() + self.users
    }

    pub fn tau_offset(&self) -> usize {
        self.log_std_offset() + self.users
    }

    pub fn prediction_offset(&self) -> usize {
        self.tau_offset() + self.users + 1
    }

    pub fn output_len(&self) -> usize {
        self.prediction_offset() + self.users * self.prediction_classes.unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDistribution {
    pub layout: ActorLayout,
    /// Row-major `M x K`.
    pub block_logits: Vec<f64>,
    pub power_mean: Vec<f64>,
    /// Clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub power_log_std: Vec<f64>,
    /// True where the raw log-std sat outside the clamp.
    log_std_clamped: Vec<bool>,
    pub tau_logits: Vec<f64>,
    /// Row-major `K x C`, when the layout has a prediction head.
    pub prediction_logits: Option<Vec<f64>>,
}

/// One draw from the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySample {
    pub blocks: Vec<usize>,
    /// Pre-squash power draws.
    pub raw_power: Vec<f64>,
    pub predictions: Option<Vec<usize>>,
    pub log_density: f64,
}

fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
    logits.iter().map(|z| z - lse).collect()
}

fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// `P_max * sigmoid(x)` with `x` clamped to `SQUASH_LIMIT`.
pub fn squash_power(x: f64, max_power: f64) -> f64 {
    let x = x.clamp(-SQUASH_LIMIT, SQUASH_LIMIT);
    max_power / (1.0 + (-x).exp())
}

/// `ln |dp/dx|` for `p = P_max * sigmoid(x)`.
pub fn log_squash_jacobian(x: f64, max_power: f64) -> f64 {
    max_power.ln() + log_sigmoid(x) + log_sigmoid(-x)
}

/// Density of the squashed power at `p` when `x ~ N(mean, exp(log_std)^2)`.
pub fn power_density(p: f64, mean: f64, log_std: f64, max_power: f64) -> f64 {
    let s = p / max_power;
    let x = (s / (1.0 - s)).ln();
    (normal_log_pdf(x, mean, log_std) - log_squash_jacobian(x, max_power)).exp()
}

fn normal_log_pdf(x: f64, mean: f64, log_std: f64) -> f64 {
    let z = (x - mean) / log_std.exp();
    -0.5 * z * z - log_std - 0.5 * (2.0 * PI).ln()
}

impl PolicyDistribution {
    pub fn from_output(layout: ActorLayout, output: &[f64]) -> Result<Self> {
        if output.len() != layout.output_len() {
            return Err(Error::Config(format!(
                "actor output has {} values, layout needs {}",
                output.len(),
                layout.output_len()
            )));
        }
        if let Some(i) = output.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { component: "actor", what: format!("output {i}") });
        }
        let k = layout.users;
        let raw_log_std = &output[layout.log_std_offset()..layout.tau_offset()];
        Ok(Self {
            layout,
            block_logits: output[..layout.power_mean_offset()].to_vec(),
            power_mean: output[layout.power_mean_offset()..layout.log_std_offset()].to_vec(),
            power_log_std: raw_log_std.iter().map(|s| s.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect(),
            log_std_clamped: raw_log_std.iter().map(|s| !(LOG_STD_MIN..=LOG_STD_MAX).contains(s)).collect(),
            tau_logits: output[layout.tau_offset()..layout.tau_offset() + k + 1].to_vec(),
            prediction_logits: layout.prediction_classes.map(|_| output[layout.prediction_offset()..].to_vec()),
        })
    }

    fn block_row(&self, m: usize) -> &[f64] {
        let k = self.layout.users;
        &self.block_logits[m * k..(m + 1) * k]
    }

    fn prediction_row(&self, k: usize) -> Option<&[f64]> {
        let c = self.layout.prediction_classes?;
        self.prediction_logits.as_ref().map(|p| &p[k * c..(k + 1) * c])
    }

    /// Deterministic CPU shares, idle share first.
    pub fn cpu_shares(&self) -> Vec<f64> {
        softmax(&self.tau_logits)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PolicySample {
        let blocks = (0..self.layout.blocks).map(|m| sample_categorical(&softmax(self.block_row(m)), rng)).collect();
        let raw_power = self
            .power_mean
            .iter()
            .zip(&self.power_log_std)
            .map(|(&mu, &s)| mu + s.exp() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let predictions = self.layout.prediction_classes.map(|_| {
            (0..self.layout.users)
                .map(|k| sample_categorical(&softmax(self.prediction_row(k).unwrap()), rng))
                .collect()
        });
        let mut sample = PolicySample { blocks, raw_power, predictions, log_density: 0.0 };
        sample.log_density = self.log_density(&sample);
        sample
    }

    /// Mode of each categorical and the Gaussian mean.
    pub fn greedy(&self) -> PolicySample {
        let blocks = (0..self.layout.blocks).map(|m| argmax(self.block_row(m))).collect();
        let predictions = self
            .layout
            .prediction_classes
            .map(|_| (0..self.layout.users).map(|k| argmax(self.prediction_row(k).unwrap())).collect());
        let mut sample = PolicySample { blocks, raw_power: self.power_mean.clone(), predictions, log_density: 0.0 };
        sample.log_density = self.log_density(&sample);
        sample
    }

    /// Log-density of `sample`, with power measured after the squash. CPU
    /// shares are deterministic and do not contribute.
    pub fn log_density(&self, sample: &PolicySample) -> f64 {
        let mut total = 0.0;
        for (m, &b) in sample.blocks.iter().enumerate() {
            total += log_softmax(self.block_row(m))[b];
        }
        for k in 0..self.layout.users {
            let x = sample.raw_power[k];
            total += normal_log_pdf(x, self.power_mean[k], self.power_log_std[k]);
            total -= log_squash_jacobian(x, self.layout.max_power);
        }
        if let Some(preds) = &sample.predictions {
            for (k, &c) in preds.iter().enumerate() {
                total += log_softmax(self.prediction_row(k).unwrap())[c];
            }
        }
        total
    }

    /// `d log_density / d actor output`, laid out like the output.
    pub fn log_density_grad(&self, sample: &PolicySample) -> Vec<f64> {
        let layout = self.layout;
        let k_users = layout.users;
        let mut grad = vec![0.0; layout.output_len()];
        for (m, &b) in sample.blocks.iter().enumerate() {
            let probs = softmax(self.block_row(m));
            for (j, p) in probs.iter().enumerate() {
                grad[m * k_users + j] = f64::from(u8::from(j == b)) - p;
            }
        }
        for k in 0..k_users {
            let sigma = self.power_log_std[k].exp();
            let z = (sample.raw_power[k] - self.power_mean[k]) / sigma;
            grad[layout.power_mean_offset() + k] = z / sigma;
            if !self.log_std_clamped[k] {
                grad[layout.log_std_offset() + k] = z * z - 1.0;
            }
        }
        if let (Some(c), Some(preds)) = (layout.prediction_classes, &sample.predictions) {
            for (k, &label) in preds.iter().enumerate() {
                let probs = softmax(self.prediction_row(k).unwrap());
                for (j, p) in probs.iter().enumerate() {
                    grad[layout.prediction_offset() + k * c + j] = f64::from(u8::from(j == label)) - p;
                }
            }
        }
        grad
    }

    /// Environment action for `sample`; `predictions` fills in users the
    /// sample does not predict for.
    pub fn to_action(&self, sample: &PolicySample, predictions: Vec<usize>) -> ActionVector {
        let max_power = self.layout.max_power;
        ActionVector {
            blocks: sample.blocks.clone(),
            powers: sample.raw_power.iter().map(|&x| squash_power(x, max_power)).collect(),
            cpu_shares: self.cpu_shares(),
            predictions: sample.predictions.clone().unwrap_or(predictions),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> ActorLayout {
        ActorLayout { users: 3, blocks: 6, prediction_classes: Some(4), max_power: 0.01 }
    }

    fn random_output(seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::seeded(seed);
        (0..layout().output_len()).map(|_| rng.random_range(-1.5..1.5)).collect()
    }

    #[test]
    fn layout_offsets() {
        let l = layout();
        assert_eq!(l.power_mean_offset(), 18);
        assert_eq!(l.tau_offset(), 24);
        assert_eq!(l.prediction_offset(), 28);
        assert_eq!(l.output_len(), 40);
        assert_eq!(ActorLayout { prediction_classes: None, ..l }.output_len(), 28);
    }

    #[test]
    fn non_finite_output_is_rejected() {
        let mut out = random_output(1);
        out[3] = f64::NAN;
        assert!(matches!(
            PolicyDistribution::from_output(layout(), &out),
            Err(Error::NonFinite { component: "actor", .. })
        ));
    }

    #[test]
    fn log_density_grad_matches_finite_differences() {
        for seed in 0..10 {
            let out = random_output(seed);
            let dist = PolicyDistribution::from_output(layout(), &out).unwrap();
            let sample = dist.sample(&mut crate::rng::seeded(seed + 100));
            let grad = dist.log_density_grad(&sample);
            for i in 0..out.len() {
                if (layout().tau_offset()..layout().prediction_offset()).contains(&i) {
                    assert_eq!(grad[i], 0.0);
                    continue;
                }
                let h = 1e-6;
                let mut plus = out.clone();
                plus[i] += h;
                let mut minus = out.clone();
                minus[i] -= h;
                let lp = PolicyDistribution::from_output(layout(), &plus).unwrap().log_density(&sample);
                let lm = PolicyDistribution::from_output(layout(), &minus).unwrap().log_density(&sample);
                let fd = (lp - lm) / (2.0 * h);
                assert!((fd - grad[i]).abs() < 1e-6, "output {i}: fd {fd} analytic {}", grad[i]);
            }
        }
    }

    #[test]
    fn clamped_log_std_has_no_gradient() {
        let mut out = random_output(3);
        out[layout().log_std_offset()] = 4.0;
        let dist = PolicyDistribution::from_output(layout(), &out).unwrap();
        assert_eq!(dist.power_log_std[0], LOG_STD_MAX);
        let sample = dist.sample(&mut crate::rng::seeded(0));
        assert_eq!(dist.log_density_grad(&sample)[layout().log_std_offset()], 0.0);
    }

    #[test]
    fn greedy_picks_modes() {
        let mut out = vec![0.0; layout().output_len()];
        out[2] = 1.0;
        out[layout().power_mean_offset() + 1] = 0.7;
        let dist = PolicyDistribution::from_output(layout(), &out).unwrap();
        let g = dist.greedy();
        assert_eq!(g.blocks, vec![2, 0, 0, 0, 0, 0]);
        assert_eq!(g.raw_power[1], 0.7);
        assert_eq!(g.predictions, Some(vec![0, 0, 0]));
        let a = dist.to_action(&g, vec![]);
        assert!((a.powers[0] - 0.005).abs() < 1e-15);
        assert!((a.cpu_shares.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squash_stays_in_bounds() {
        for x in [-1e6, -50.0, -30.0, 0.0, 30.0, 1e6] {
            let p = squash_power(x, 0.01);
            assert!(p > 0.0 && p <= 0.01, "{x} -> {p}");
        }
    }
}
