use rand::Rng;

use super::config::LearnerConfig;
use super::model::{Algorithm, HybridModel};
use super::rollout::{collect_trajectories, run_greedy_episode, Runner};
use super::update::{update_iteration, IterationDiagnostics};
use crate::baselines::{train_svm, SvmConfig};
use crate::signal::EegWindow;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub mean_qoe: f64,
    /// Verdicts on the training rollout.
    pub accuracy: f64,
    pub mean_delay: f64,
    pub mean_packet_error: f64,
    /// Greedy episode against held-out windows; NaN when not evaluated.
    pub heldout_accuracy: f64,
    pub heldout_qoe: f64,
    pub heldout_delay: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainOutput {
    pub episodes: Vec<EpisodeMetrics>,
    pub diagnostics: Vec<IterationDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub mean_qoe: f64,
    pub mean_delay: f64,
    pub mean_packet_error: f64,
    /// `confusion[label][prediction]`.
    pub confusion: Vec<Vec<u64>>,
    pub verdicts: u64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Greedy evaluation over `episodes` fresh episodes; no parameters change.
pub fn evaluate(model: &HybridModel, runner: &mut Runner, episodes: usize) -> Result<EvalReport> {
    let classes = model.shape.classes;
    let mut confusion = vec![vec![0u64; classes]; classes];
    let mut steps = Vec::new();
    for _ in 0..episodes {
        for step in run_greedy_episode(model, runner)? {
            for (&l, &p) in step.labels.iter().zip(&step.predictions) {
                confusion[l][p] += 1;
            }
            steps.push(step.metrics);
        }
    }
    let verdicts: u64 = confusion.iter().flatten().sum();
    let correct: u64 = (0..classes).map(|c| confusion[c][c]).sum();
    Ok(EvalReport {
        accuracy: correct as f64 / verdicts.max(1) as f64,
        mean_qoe: mean(steps.iter().map(|m| m.mean_qoe)),
        mean_delay: mean(steps.iter().map(|m| m.mean_delay)),
        mean_packet_error: mean(steps.iter().map(|m| m.mean_packet_error)),
        confusion,
        verdicts,
    })
}

/// Alternates rollouts and updates for `config.episodes` iterations. When
/// `heldout` is given, each iteration ends with one greedy episode on it.
pub fn train<R: Rng + ?Sized>(
    model: &mut HybridModel,
    runner: &mut Runner,
    mut heldout: Option<&mut Runner>,
    config: &LearnerConfig,
    svm_config: &SvmConfig,
    rng: &mut R,
) -> Result<TrainOutput> {
    config.validate()?;
    if model.algorithm == Algorithm::Svm {
        svm_config.validate()?;
    }
    let mut out = TrainOutput::default();
    let mut buffer: Vec<EegWindow> = Vec::new();
    for episode in 0..config.episodes {
        let trajectory = collect_trajectories(model, runner, config.rollout_length, rng)?;
        let steps = &trajectory.steps;
        let mut row = EpisodeMetrics {
            episode,
            mean_qoe: mean(steps.iter().map(|s| s.metrics.mean_qoe)),
            accuracy: mean(steps.iter().map(|s| s.metrics.accuracy)),
            mean_delay: mean(steps.iter().map(|s| s.metrics.mean_delay)),
            mean_packet_error: mean(steps.iter().map(|s| s.metrics.mean_packet_error)),
            heldout_accuracy: f64::NAN,
            heldout_qoe: f64::NAN,
            heldout_delay: f64::NAN,
        };
        if model.algorithm == Algorithm::Svm {
            buffer.extend(steps.iter().flat_map(|s| s.received.iter().cloned()));
            if (episode + 1) % svm_config.refit_every == 0 {
                let refs: Vec<&EegWindow> = buffer.iter().collect();
                match train_svm(&refs, model.shape.classes, svm_config, rng) {
                    Ok(svm) => model.svm = Some(svm),
                    // a buffer that has only seen one class keeps the old model
                    Err(Error::Dataset(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        out.diagnostics.push(update_iteration(model, &trajectory, config, rng)?);
        if let Some(h) = heldout.as_deref_mut() {
            let report = evaluate(model, h, 1)?;
            row.heldout_accuracy = report.accuracy;
            row.heldout_qoe = report.mean_qoe;
            row.heldout_delay = report.mean_delay;
        }
        out.episodes.push(row);
    }
    Ok(out)
}
