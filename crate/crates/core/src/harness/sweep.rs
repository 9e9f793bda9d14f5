//! Grid sweeps over headset power or base-station CPU capacity.
//!
//! Repeat `r` uses the same seed at every grid point, so points differ only
//! in the swept value.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::config::ExperimentConfig;
use super::run::{execute, prepare_data, eval_runner, run_experiment, RunOutcome};
use crate::learner::{evaluate, EvalReport, HybridModel};
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Headset power limit in watts.
    PMax,
    /// Base-station CPU capacity in cycles per second.
    Cpu,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pmax" | "p_max" => Ok(SweepParam::PMax),
            "cpu" | "upsilon" => Ok(SweepParam::Cpu),
            _ => Err(Error::Config(format!("unknown sweep parameter `{s}` (expected pmax or cpu)"))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::PMax => "pmax",
            SweepParam::Cpu => "cpu",
        })
    }
}

impl SweepParam {
    pub fn apply(self, config: &mut ExperimentConfig, value: f64) {
        match self {
            SweepParam::PMax => config.env.max_power_w = value,
            SweepParam::Cpu => config.env.cpu_capacity_hz = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub grid: Vec<f64>,
    pub repeats: usize,
}

impl SweepSpec {
    /// Three seeds over `{1e-4, 1e-3, 1e-2}` W or `{0.5, 1, 2.3}` GHz.
    pub fn standard(parameter: SweepParam) -> Self {
        let grid = match parameter {
            SweepParam::PMax => vec![1e-4, 1e-3, 1e-2],
            SweepParam::Cpu => vec![0.5e9, 1e9, 2.3e9],
        };
        Self { parameter, grid, repeats: 3 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("sweep grid values must be positive".into()));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sweep grid must be strictly ascending".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("sweep needs at least one repeat".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: usize,
    pub value: f64,
    pub repeat: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub mean_delay_s: f64,
    pub mean_qoe: f64,
    pub mean_packet_error: f64,
    /// Failure message; the metric fields are NaN when set.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAggregate {
    pub value: f64,
    /// Successful repeats.
    pub runs: usize,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub delay_mean: f64,
    pub delay_std: f64,
    pub qoe_mean: f64,
    pub qoe_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub parameter: SweepParam,
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<SweepAggregate>,
}

/// Mean and sample standard deviation; the deviation is 0 for one value.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    (mean, (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

pub fn aggregate_rows(spec: &SweepSpec, rows: &[SweepRow]) -> Vec<SweepAggregate> {
    spec.grid
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.point == i && r.error.is_none()).collect();
            let stat = |f: fn(&SweepRow) -> f64| mean_std(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (accuracy_mean, accuracy_std) = stat(|r| r.accuracy);
            let (delay_mean, delay_std) = stat(|r| r.mean_delay_s);
            let (qoe_mean, qoe_std) = stat(|r| r.mean_qoe);
            SweepAggregate { value, runs: ok.len(), accuracy_mean, accuracy_std, delay_mean, delay_std, qoe_mean, qoe_std }
        })
        .collect()
}

fn row(point: usize, value: f64, repeat: usize, seed: u64, report: Result<EvalReport>) -> SweepRow {
    let mut r = SweepRow {
        point,
        value,
        repeat,
        seed,
        accuracy: f64::NAN,
        mean_delay_s: f64::NAN,
        mean_qoe: f64::NAN,
        mean_packet_error: f64::NAN,
        error: None,
    };
    match report {
        Ok(e) => {
            r.accuracy = e.accuracy;
            r.mean_delay_s = e.mean_delay;
            r.mean_qoe = e.mean_qoe;
            r.mean_packet_error = e.mean_packet_error;
        }
        Err(e) => r.error = Some(e.to_string()),
    }
    r
}

fn point_config(base: &ExperimentConfig, spec: &SweepSpec, point: usize, repeat: usize, out: Option<&Path>) -> (ExperimentConfig, u64) {
    let seed = derive_seed(base.seed, repeat as u64);
    let mut c = base.clone();
    c.seed = seed;
    spec.parameter.apply(&mut c, spec.grid[point]);
    if let Some(dir) = out {
        c.output_dir = dir.join(format!("{}_{}_seed{}", spec.parameter, point, repeat));
    }
    (c, seed)
}

fn evaluate_at(model: &HybridModel, config: &ExperimentConfig) -> Result<EvalReport> {
    let config = config.resolved();
    let mut model = model.clone();
    // the power head scales its squashed output by the limit in force
    model.layout.max_power = config.env.max_power_w;
    model.shape.max_power = config.env.max_power_w;
    let (_, test_set) = prepare_data(&config)?;
    evaluate(&model, &mut eval_runner(&config, test_set)?, config.eval_episodes)
}

/// Runs the sweep. By default every point retrains; with `eval_only` one
/// model per repeat is trained at the base config and evaluated at every
/// point. With `out`, each training run also writes its own directory.
///
/// A failing run is recorded in its row and the sweep moves on.
pub fn run_sweep(base: &ExperimentConfig, spec: &SweepSpec, eval_only: bool, out: Option<&Path>) -> Result<SweepOutcome> {
    spec.validate()?;
    base.validate()?;
    let train_one = |c: &ExperimentConfig| -> Result<RunOutcome> {
        if out.is_some() {
            run_experiment(c)
        } else {
            execute(c)
        }
    };
    let mut rows = Vec::new();
    for repeat in 0..spec.repeats {
        if eval_only {
            let seed = derive_seed(base.seed, repeat as u64);
            let mut c = base.clone();
            c.seed = seed;
            if let Some(dir) = out {
                c.output_dir = dir.join(format!("base_seed{repeat}"));
            }
            let trained = train_one(&c);
            for point in 0..spec.grid.len() {
                let (pc, _) = point_config(base, spec, point, repeat, None);
                let report = match &trained {
                    Ok(o) => evaluate_at(&o.model, &pc),
                    Err(e) => Err(Error::Config(format!("training failed: {e}"))),
                };
                rows.push(row(point, spec.grid[point], repeat, seed, report));
            }
        } else {
            for point in 0..spec.grid.len() {
                let (pc, seed) = point_config(base, spec, point, repeat, out);
                rows.push(row(point, spec.grid[point], repeat, seed, train_one(&pc).map(|o| o.evaluation)));
            }
        }
    }
    rows.sort_by_key(|r| (r.point, r.repeat));
    let aggregates = aggregate_rows(spec, &rows);
    Ok(SweepOutcome { parameter: spec.parameter, rows, aggregates })
}

pub const ROWS_HEADER: &str = "point,value,repeat,seed,accuracy,mean_delay_s,mean_qoe,mean_packet_error,error";
pub const AGGREGATE_HEADER: &str = "value,runs,accuracy_mean,accuracy_std,delay_mean,delay_std,qoe_mean,qoe_std";

pub fn rows_to_string(rows: &[SweepRow]) -> String {
    let mut out = format!("{ROWS_HEADER}\n");
    for r in rows {
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.point, r.value, r.repeat, r.seed, r.accuracy, r.mean_delay_s, r.mean_qoe, r.mean_packet_error, err
        ));
    }
    out
}

pub fn aggregates_to_string(aggregates: &[SweepAggregate]) -> String {
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for a in aggregates {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            a.value, a.runs, a.accuracy_mean, a.accuracy_std, a.delay_mean, a.delay_std, a.qoe_mean, a.qoe_std
        ));
    }
    out
}

/// Writes `sweep_rows.csv` and `sweep_summary.csv` into `dir`.
pub fn write_sweep(outcome: &SweepOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, text) in [("sweep_rows.csv", rows_to_string(&outcome.rows)), ("sweep_summary.csv", aggregates_to_string(&outcome.aggregates))] {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_must_ascend() {
        let mut s = SweepSpec::standard(SweepParam::PMax);
        s.validate().unwrap();
        s.grid = vec![1e-2, 1e-3];
        assert!(s.validate().unwrap_err().is_config());
        s.grid.clear();
        assert!(s.validate().is_err());
        let s = SweepSpec { repeats: 0, ..SweepSpec::standard(SweepParam::Cpu) };
        assert!(s.validate().is_err());
    }

    #[test]
    fn param_names() {
        assert_eq!("pmax".parse::<SweepParam>().unwrap(), SweepParam::PMax);
        assert_eq!("cpu".parse::<SweepParam>().unwrap(), SweepParam::Cpu);
        assert!("bandwidth".parse::<SweepParam>().unwrap_err().is_config());
    }

    #[test]
    fn failed_rows_are_left_out_of_aggregates() {
        let spec = SweepSpec { parameter: SweepParam::PMax, grid: vec![1.0], repeats: 3 };
        let mk = |repeat, acc: f64, err: Option<&str>| SweepRow {
            point: 0,
            value: 1.0,
            repeat,
            seed: 0,
            accuracy: acc,
            mean_delay_s: acc,
            mean_qoe: acc,
            mean_packet_error: 0.0,
            error: err.map(str::to_string),
        };
        let rows = vec![mk(0, 0.2, None), mk(1, f64::NAN, Some("boom")), mk(2, 0.4, None)];
        let a = &aggregate_rows(&spec, &rows)[0];
        assert_eq!(a.runs, 2);
        assert!((a.accuracy_mean - 0.3).abs() < 1e-15);
        assert!((a.accuracy_std - 0.02f64.sqrt()).abs() < 1e-15);
        assert!(rows_to_string(&rows).contains("boom"));
    }
}
