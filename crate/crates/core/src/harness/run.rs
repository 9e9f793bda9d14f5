//! Single training runs, their output directory and evaluation from
//! checkpoints.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use bci_nn::checkpoint;

use super::config::ExperimentConfig;
use super::metrics::{diagnostics_to_string, metrics_to_string, normalized_to_string, MetricRow};
use crate::baselines::{train_rl_baseline, RlBaselineConfig, RlVariant, SvmModel};
use crate::env::{EnvConfig, WirelessEnv};
use crate::learner::{evaluate, train, Algorithm, EvalReport, HybridModel, ModelShape, Runner, TrainOutput};
use crate::rng::{derive_seed, stream};
use crate::signal::{generate_synthetic_dataset, load_csv_dataset, split_dataset, write_csv_dataset, LabeledDataset};
use crate::{Error, Result};

/// Random stream labels mixed with the run seed.
pub mod streams {
    pub const SPLIT: u64 = 1;
    pub const TRAIN_ENV: u64 = 2;
    pub const HELDOUT_ENV: u64 = 3;
    pub const EVAL_ENV: u64 = 4;
    pub const MODEL: u64 = 5;
}

pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const MANIFEST: &str = "manifest.txt";

/// Episodes at the end of a run averaged into the summary's held-out figures.
pub const TAIL_EPISODES: usize = 100;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: HybridModel,
    pub training: TrainOutput,
    pub evaluation: EvalReport,
}

impl RunOutcome {
    /// Mean held-out greedy accuracy over the last `n` episodes.
    pub fn heldout_tail_accuracy(&self, n: usize) -> f64 {
        let eps = &self.training.episodes;
        let tail = &eps[eps.len().saturating_sub(n)..];
        tail.iter().map(|e| e.heldout_accuracy).sum::<f64>() / tail.len() as f64
    }
}

/// Writes the dataset a config describes: the synthetic generator output, or
/// a copy of the configured CSV.
pub fn gen_data(config: &ExperimentConfig, path: &Path) -> Result<LabeledDataset> {
    let data = load_dataset(config)?;
    write_csv_dataset(&data, path)?;
    Ok(data)
}

pub fn load_dataset(config: &ExperimentConfig) -> Result<LabeledDataset> {
    let g = &config.generator;
    match &config.dataset {
        Some(path) => load_csv_dataset(path, g.channels, g.window_length, g.classes),
        None => generate_synthetic_dataset(g, config.windows_per_class),
    }
}

/// Train / test split for a run.
pub fn prepare_data(config: &ExperimentConfig) -> Result<(Arc<LabeledDataset>, Arc<LabeledDataset>)> {
    let data = load_dataset(config)?;
    let (train_set, test_set) = split_dataset(&data, config.train_fraction, derive_seed(config.seed, streams::SPLIT))?;
    Ok((Arc::new(train_set), Arc::new(test_set)))
}

fn env_with(config: &ExperimentConfig, stream_id: u64) -> EnvConfig {
    EnvConfig { seed: derive_seed(config.seed, stream_id), ..config.env.clone() }
}

pub fn model_shape(config: &ExperimentConfig) -> ModelShape {
    let g = &config.generator;
    ModelShape::new(&config.env, g.channels, g.window_length, g.classes)
}

/// Runner over the test windows used for the final evaluation.
pub fn eval_runner(config: &ExperimentConfig, test_set: Arc<LabeledDataset>) -> Result<Runner> {
    Ok(Runner::new(WirelessEnv::with_dataset(env_with(config, streams::EVAL_ENV), test_set)?))
}

/// Trains and evaluates without touching the file system.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let config = config.resolved();
    let (train_set, test_set) = prepare_data(&config)?;
    let mut runner = Runner::new(WirelessEnv::with_dataset(env_with(&config, streams::TRAIN_ENV), train_set)?);
    let mut heldout = Runner::new(WirelessEnv::with_dataset(env_with(&config, streams::HELDOUT_ENV), test_set.clone())?);
    let shape = model_shape(&config);
    let mut rng = stream(config.seed, streams::MODEL);
    let (model, training) = match config.algo {
        Algorithm::Ppo | Algorithm::Vpg => {
            let variant = if config.algo == Algorithm::Ppo { RlVariant::PpoMonolithic } else { RlVariant::Vpg };
            let rl = RlBaselineConfig::new(variant, &config.learner);
            train_rl_baseline(&rl, shape, &mut runner, Some(&mut heldout), &mut rng)?
        }
        algo => {
            let mut model = HybridModel::new(algo, shape, &config.learner, &mut rng)?;
            let out = train(&mut model, &mut runner, Some(&mut heldout), &config.learner, &config.svm, &mut rng)?;
            (model, out)
        }
    };
    let evaluation = evaluate(&model, &mut eval_runner(&config, test_set)?, config.eval_episodes)?;
    Ok(RunOutcome { model, training, evaluation })
}

/// Files written by [`run_experiment`], relative to the output directory.
pub const RUN_FILES: [&str; 6] =
    ["config.txt", "metrics.csv", "heldout.csv", "metrics_normalized.csv", "diagnostics.csv", "summary.txt"];

/// Trains, evaluates and writes the run directory. Anything written before
/// a failure is removed again.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let dir = config.output_dir.clone();
    let existed = dir.exists();
    let mut written = Vec::new();
    let result = execute(config).and_then(|outcome| {
        write_run(config, &outcome, &dir, &mut written)?;
        Ok(outcome)
    });
    if result.is_err() {
        for path in written.iter().rev() {
            let _ = fs::remove_file(path);
        }
        let _ = fs::remove_dir(dir.join(CHECKPOINT_DIR));
        if !existed {
            let _ = fs::remove_dir(&dir);
        }
    }
    result
}

fn put(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn write_run(config: &ExperimentConfig, outcome: &RunOutcome, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let ckpt = dir.join(CHECKPOINT_DIR);
    fs::create_dir_all(&ckpt).map_err(|e| Error::io(&ckpt, e))?;
    let eps = &outcome.training.episodes;
    let training: Vec<MetricRow> = eps.iter().map(MetricRow::training).collect();
    let heldout: Vec<MetricRow> = eps.iter().map(MetricRow::heldout).collect();
    put(dir.join("config.txt"), &config.to_text(), written)?;
    put(dir.join("metrics.csv"), &metrics_to_string(&training), written)?;
    put(dir.join("heldout.csv"), &metrics_to_string(&heldout), written)?;
    put(dir.join("metrics_normalized.csv"), &normalized_to_string(&training), written)?;
    put(dir.join("diagnostics.csv"), &diagnostics_to_string(&outcome.training.diagnostics), written)?;
    put(dir.join("summary.txt"), &summary_text(config, outcome), written)?;
    save_checkpoints(&outcome.model, &ckpt, written)
}

fn save_checkpoints(model: &HybridModel, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let mut manifest = format!("algo = {}\n", model.algorithm);
    let mut save_net = |name: &str, net: &bci_nn::Network, written: &mut Vec<PathBuf>| -> Result<()> {
        put(dir.join(name), &checkpoint::to_string(net), written)?;
        manifest.push_str(&format!("file = {name}\n"));
        Ok(())
    };
    save_net("actor.txt", &model.actor, written)?;
    save_net("critic.txt", &model.critic, written)?;
    if let Some(c) = &model.classifier {
        save_net("classifier.txt", c, written)?;
    }
    if let Some(svm) = &model.svm {
        let path = dir.join("svm.txt");
        svm.save(&path)?;
        written.push(path);
        manifest.push_str("file = svm.txt\n");
    }
    put(dir.join(MANIFEST), &manifest, written)
}

/// Rebuilds the model a config describes and loads its checkpoints.
pub fn load_model(config: &ExperimentConfig, dir: &Path) -> Result<HybridModel> {
    let config = config.resolved();
    let manifest_path = dir.join(MANIFEST);
    let manifest = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let algo: Algorithm = manifest
        .lines()
        .find_map(|l| l.strip_prefix("algo = "))
        .ok_or_else(|| Error::Dataset(format!("{}: no algo line", manifest_path.display())))?
        .parse()?;
    if algo != config.algo {
        return Err(Error::Config(format!("checkpoints are for {algo}, config asks for {}", config.algo)));
    }
    let mut rng = stream(config.seed, streams::MODEL);
    let mut model = HybridModel::new(algo, model_shape(&config), &config.learner, &mut rng)?;
    checkpoint::load(&mut model.actor, &dir.join("actor.txt"))?;
    checkpoint::load(&mut model.critic, &dir.join("critic.txt"))?;
    if let Some(c) = model.classifier.as_mut() {
        checkpoint::load(c, &dir.join("classifier.txt"))?;
    }
    if model.svm.is_some() {
        model.svm = Some(SvmModel::load(&dir.join("svm.txt"))?);
    }
    model.refresh_old_actor();
    Ok(model)
}

/// Greedy evaluation of saved checkpoints on the config's test split.
pub fn eval_checkpoints(config: &ExperimentConfig, dir: &Path) -> Result<EvalReport> {
    config.validate()?;
    let model = load_model(config, dir)?;
    let config = config.resolved();
    let (_, test_set) = prepare_data(&config)?;
    evaluate(&model, &mut eval_runner(&config, test_set)?, config.eval_episodes)
}

/// Key-value evaluation report; only the first line carries a timestamp.
pub fn report_text(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("test_accuracy = {}\n", report.accuracy));
    out.push_str(&format!("mean_delay_s = {}\n", report.mean_delay));
    out.push_str(&format!("mean_qoe = {}\n", report.mean_qoe));
    out.push_str(&format!("mean_packet_error = {}\n", report.mean_packet_error));
    out.push_str(&format!("verdicts = {}\n", report.verdicts));
    for (label, row) in report.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        out.push_str(&format!("confusion.{label} = {}\n", cells.join(" ")));
    }
    out
}

fn timestamp_line() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("# written at unix time {secs}\n")
}

pub fn summary_text(config: &ExperimentConfig, outcome: &RunOutcome) -> String {
    let mut out = timestamp_line();
    out.push_str(&format!("algo = {}\n", config.algo));
    out.push_str(&format!("seed = {}\n", config.seed));
    out.push_str(&format!("episodes = {}\n", outcome.training.episodes.len()));
    out.push_str(&format!("eval_episodes = {}\n", config.eval_episodes));
    out.push_str(&report_text(&outcome.evaluation));
    out.push_str(&format!("heldout_tail_accuracy = {}\n", outcome.heldout_tail_accuracy(TAIL_EPISODES)));
    out
}

/// Reads `key = value` lines, skipping comments.
pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
