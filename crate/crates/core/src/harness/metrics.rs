//! Per-episode metric files. Numbers are written with Rust's shortest
//! round-trip formatting, so reading a file back gives the same doubles.

use std::fs;
use std::path::Path;

use crate::learner::{EpisodeMetrics, IterationDiagnostics};
use crate::{Error, Result};

pub const METRICS_HEADER: &str = "episode,mean_qoe,accuracy,mean_delay_s,mean_packet_error";
pub const NORMALIZED_HEADER: &str = "episode,mean_qoe,normalized_qoe";
pub const DIAGNOSTICS_HEADER: &str = "episode,actor_objective,critic_loss,classifier_loss,mean_ratio";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub episode: usize,
    pub mean_qoe: f64,
    pub accuracy: f64,
    pub mean_delay_s: f64,
    pub mean_packet_error: f64,
}

impl MetricRow {
    /// Metrics of the training rollout.
    pub fn training(m: &EpisodeMetrics) -> Self {
        Self {
            episode: m.episode,
            mean_qoe: m.mean_qoe,
            accuracy: m.accuracy,
            mean_delay_s: m.mean_delay,
            mean_packet_error: m.mean_packet_error,
        }
    }

    /// Metrics of the greedy held-out episode; the packet error column is
    /// not tracked there and is NaN.
    pub fn heldout(m: &EpisodeMetrics) -> Self {
        Self {
            episode: m.episode,
            mean_qoe: m.heldout_qoe,
            accuracy: m.heldout_accuracy,
            mean_delay_s: m.heldout_delay,
            mean_packet_error: f64::NAN,
        }
    }
}

pub fn metrics_to_string(rows: &[MetricRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.episode, r.mean_qoe, r.accuracy, r.mean_delay_s, r.mean_packet_error));
    }
    out
}

pub fn write_metrics(rows: &[MetricRow], path: &Path) -> Result<()> {
    fs::write(path, metrics_to_string(rows)).map_err(|e| Error::io(path, e))
}

pub fn parse_metrics(text: &str) -> Result<Vec<MetricRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(Error::Dataset(format!("metrics header must be `{METRICS_HEADER}`")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Dataset(format!("metrics row {}: `{line}`", i + 1));
            if f.len() != 5 {
                return Err(bad());
            }
            let x = |j: usize| f[j].parse::<f64>().map_err(|_| bad());
            Ok(MetricRow {
                episode: f[0].parse().map_err(|_| bad())?,
                mean_qoe: x(1)?,
                accuracy: x(2)?,
                mean_delay_s: x(3)?,
                mean_packet_error: x(4)?,
            })
        })
        .collect()
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    parse_metrics(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// QoE rescaled to [0, 1] by its minimum and maximum over the run; all
/// zeros when the run is flat.
pub fn normalized_qoe(rows: &[MetricRow]) -> Vec<f64> {
    let lo = rows.iter().map(|r| r.mean_qoe).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.mean_qoe).fold(f64::NEG_INFINITY, f64::max);
    rows.iter().map(|r| if hi > lo { (r.mean_qoe - lo) / (hi - lo) } else { 0.0 }).collect()
}

pub fn normalized_to_string(rows: &[MetricRow]) -> String {
    let mut out = String::from(NORMALIZED_HEADER);
    out.push('\n');
    for (r, n) in rows.iter().zip(normalized_qoe(rows)) {
        out.push_str(&format!("{},{},{}\n", r.episode, r.mean_qoe, n));
    }
    out
}

pub fn diagnostics_to_string(diagnostics: &[IterationDiagnostics]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for (i, d) in diagnostics.iter().enumerate() {
        out.push_str(&format!("{i},{},{},{},{}\n", d.actor_objective, d.critic_loss, d.classifier_loss, d.mean_ratio));
    }
    out
}
