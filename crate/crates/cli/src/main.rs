use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bci_ran::harness::run::{report_text, CHECKPOINT_DIR};
use bci_ran::harness::{
    eval_checkpoints, gen_data, run_experiment, run_sweep, write_sweep, ExperimentConfig, Preset, SweepParam, SweepSpec,
};
use bci_ran::learner::Algorithm;
use bci_ran::{Error, Result};
use clap::{Args, Parser, Subcommand};

/// Radio, computing and classification co-design for VR-BCI users.
#[derive(Debug, Parser)]
#[command(name = "bci-ran", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the configured dataset to OUT/dataset.csv.
    GenData(Common),
    /// Train and evaluate one algorithm; outputs go to OUT.
    Train(Common),
    /// Evaluate the checkpoints in OUT/checkpoints.
    Eval(Common),
    /// Retrain and evaluate over a power or CPU grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `section.key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// hybrid, ppo, vpg or svm.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// desk (500 episodes, 8 x 32 windows) or paper (2000 episodes, 64 x 160).
    #[arg(long, default_value = "desk")]
    preset: String,
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// pmax or cpu.
    #[arg(long, default_value = "pmax")]
    sweep_param: String,
    /// Comma-separated ascending values; defaults to the standard grid.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Train once per seed and evaluate that model at every grid point.
    #[arg(long)]
    eval_only: bool,
}

fn load_config(args: &Common) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::preset(args.preset.parse::<Preset>()?);
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.apply_text(&text)?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(algo) = &args.algo {
        config.algo = algo.parse::<Algorithm>()?;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if let Some(n) = args.episodes {
        config.episodes = n;
    }
    config.validate()?;
    Ok(config)
}

fn sweep_spec(args: &SweepArgs) -> Result<SweepSpec> {
    let parameter: SweepParam = args.sweep_param.parse()?;
    let mut spec = SweepSpec::standard(parameter);
    spec.repeats = args.repeats;
    if let Some(grid) = &args.grid {
        spec.grid = grid
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad grid value `{v}`"))))
            .collect::<Result<_>>()?;
    }
    spec.validate()?;
    Ok(spec)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(args) => {
            let config = load_config(&args)?;
            fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
            let path = config.output_dir.join("dataset.csv");
            let data = gen_data(&config, &path)?;
            println!("wrote {} windows to {}", data.len(), path.display());
        }
        Command::Train(args) => {
            let config = load_config(&args)?;
            let outcome = run_experiment(&config)?;
            let e = &outcome.evaluation;
            println!(
                "{}: test accuracy {:.4}, mean delay {:.5} s, mean QoE {:.4}; outputs in {}",
                config.algo,
                e.accuracy,
                e.mean_delay,
                e.mean_qoe,
                config.output_dir.display()
            );
        }
        Command::Eval(args) => {
            let config = load_config(&args)?;
            let report = eval_checkpoints(&config, &config.output_dir.join(CHECKPOINT_DIR))?;
            let text = report_text(&report);
            write(&config.output_dir.join("eval.txt"), &text)?;
            print!("{text}");
        }
        Command::Sweep(args) => {
            let config = load_config(&args.common)?;
            let spec = sweep_spec(&args)?;
            let dir = config.output_dir.clone();
            let outcome = run_sweep(&config, &spec, args.eval_only, Some(&dir))?;
            write_sweep(&outcome, &dir)?;
            for a in &outcome.aggregates {
                println!(
                    "{} = {}: accuracy {:.4} +- {:.4}, delay {:.5} +- {:.5} s ({} runs)",
                    spec.parameter, a.value, a.accuracy_mean, a.accuracy_std, a.delay_mean, a.delay_std, a.runs
                );
            }
            let failed = outcome.rows.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("{failed} sweep runs failed; see sweep_rows.csv");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
