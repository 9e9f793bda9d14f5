//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use bci_nn::gradcheck::{check_case, reference_cases};
use bci_ran::env::*;
use bci_ran::harness::metrics::metrics_to_string;
use bci_ran::harness::run::{eval_runner, model_shape, prepare_data};
use bci_ran::harness::*;
use bci_ran::learner::*;
use bci_ran::rng::seeded;
use bci_ran::signal::{generate_synthetic_dataset, GeneratorConfig};
use rand::Rng;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        let mut out = std::io::stdout();
        let _ = writeln!(out, "{} criterion {id} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
        let _ = out.flush();
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn gradient_fidelity() -> (bool, String) {
    let start = Instant::now();
    let (mut worst, mut checked, mut failed) = (0.0f64, 0, Vec::new());
    for case in reference_cases() {
        for seed in 0..20 {
            let mut rng = seeded(seed);
            match check_case(&case, &mut rng, 1e-4) {
                Ok(r) => {
                    worst = worst.max(r.worst());
                    if !r.passed() {
                        failed.push(format!("{} seed {seed}", case.name));
                    }
                }
                Err(e) => failed.push(format!("{} seed {seed}: {e}", case.name)),
            }
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = failed.is_empty() && secs < 60.0;
    (pass, format!("{checked} checks, worst relative error {worst:.2e} (tol 1e-4), {secs:.1} s; failures {failed:?}"))
}

fn direct_advantages(deltas: &[f64], gl: f64) -> Vec<f64> {
    (0..deltas.len()).map(|i| (i..deltas.len()).map(|j| gl.powi((j - i) as i32) * deltas[j]).sum()).collect()
}

fn oracle_equivalence() -> (bool, String) {
    let mut rng = seeded(100);
    let mut gae_worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..80);
        let deltas: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (gamma, lambda) = (rng.random_range(0.0..1.0), rng.random_range(0.0..=1.0));
        let got = advantages_from_deltas(&deltas, &vec![false; n], gamma, lambda);
        for (g, w) in got.iter().zip(direct_advantages(&deltas, gamma * lambda)) {
            gae_worst = gae_worst.max((g - w).abs() / w.abs().max(1.0));
        }
    }
    let eps = 0.2;
    // (ratio, advantage, min(r A, g(eps, A)) by hand)
    let table: [(f64, f64, f64); 16] = [
        (1.5, 1.0, 1.2),
        (1.1, 1.0, 1.1),
        (0.5, 1.0, 0.5),
        (1.0, 1.0, 1.0),
        (1.5, 2.0, 2.4),
        (0.9, 2.0, 1.8),
        (0.5, -1.0, -0.8),
        (0.9, -1.0, -0.9),
        (1.5, -1.0, -1.5),
        (1.0, -1.0, -1.0),
        (0.5, -3.0, -2.4),
        (1.2, -3.0, -3.6),
        (2.0, 0.0, 0.0),
        (0.1, 0.0, 0.0),
        (1.25, 0.5, 0.6),
        (0.75, -0.5, -0.4),
    ];
    let table_ok = table
        .iter()
        .filter(|&&(ratio, adv, want)| {
            let got = clipped_objective(ratio.ln(), 0.0, adv, eps);
            let g = if adv >= 0.0 { (1.0 + eps) * adv } else { (1.0 - eps) * adv };
            got == (ratio.ln().exp() * adv).min(g) && (got - want).abs() < 1e-12
        })
        .count();
    // hand link budget from the dBm constants
    let n0 = 10f64.powf(-20.4);
    let im = 10f64.powf(-23.7);
    let config = EnvConfig { users: 1, blocks: 1, uplink_bits: 163_840.0, ..EnvConfig::default() };
    let state = EnvState::for_tests(vec![1e-10], vec![0.6; config.cores]);
    let action = ActionVector { blocks: vec![0], powers: vec![0.01], cpu_shares: vec![0.5, 0.5], predictions: vec![0] };
    let r_up = 1e6 * (1.0 + 0.01 * 1e-10 / (im + 1e6 * n0)).log2();
    let r_down = 2e7 * (1.0 + 1e-10 / (im + 2e7 * n0)).log2();
    let d = 1e7 / (0.5 * 0.6 * 2.3e9);
    let total = d + 1e6 / r_down + 163_840.0 / r_up;
    let eps_k = 1.0 - (-(im + 1e6 * n0) / (0.01 * 1e-10)).exp();
    let (got_d, got_total) = round_trip_delay(0, &action, &state, &config);
    let link_worst = [
        rel(uplink_rate(0, &action, &state, &config), r_up),
        rel(downlink_rate(0, &state, &config), r_down),
        rel(got_d, d),
        rel(got_total, total),
        rel(packet_error(0, &action, &state, &config), eps_k),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let pass = gae_worst <= 1e-12 && table_ok == 16 && link_worst <= 1e-9;
    (pass, format!("GAE worst {gae_worst:.1e} (tol 1e-12), clip table {table_ok}/16, link budget worst {link_worst:.1e} (tol 1e-9)"))
}

fn constraint_satisfaction() -> (bool, String) {
    let env = EnvConfig::default();
    let shape = ModelShape::new(&env, 8, 32, 4);
    let mut rng = seeded(200);
    let mut illegal = 0;
    let mut actions = 0;
    for algo in [Algorithm::Hybrid, Algorithm::Ppo] {
        let model = HybridModel::new(algo, shape, &LearnerConfig::default(), &mut rng).unwrap();
        for _ in 0..5_000 {
            let features: Vec<f64> = (0..Observation::len_for(&env)).map(|_| rng.random_range(-3.0..3.0)).collect();
            let dist = model.policy(&Observation { features }).unwrap();
            let sample = dist.sample(&mut rng);
            let predictions = sample.predictions.clone().unwrap_or(vec![0; env.users]);
            if dist.to_action(&sample, predictions).validate(&env, Some(4)).is_err() {
                illegal += 1;
            }
            actions += 1;
        }
    }
    // QoE terms along real rollouts
    let data = Arc::new(generate_synthetic_dataset(&GeneratorConfig::default(), 20).unwrap());
    let mut runner = Runner::new(WirelessEnv::with_dataset(env.clone(), data).unwrap());
    let model = HybridModel::new(Algorithm::Hybrid, shape, &LearnerConfig::default(), &mut rng).unwrap();
    let allowed = [0.0, env.eta1, env.eta2, env.eta1 + env.eta2];
    let mut terms = 0;
    let mut off = 0;
    for _ in 0..20 {
        for step in collect_trajectories(&model, &mut runner, 50, &mut rng).unwrap().steps {
            for q in step.qoe {
                terms += 1;
                if !allowed.contains(&q) {
                    off += 1;
                }
            }
        }
    }
    (illegal == 0 && off == 0, format!("{illegal}/{actions} sampled actions illegal, {off}/{terms} QoE terms outside {{0, eta1, eta2, eta1+eta2}}"))
}

fn tail(outcome: &RunOutcome) -> f64 {
    outcome.heldout_tail_accuracy(100)
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn sweep_detail(outcome: &SweepOutcome) -> String {
    outcome
        .aggregates
        .iter()
        .map(|a| format!("{:e}: delay {:.5} s, accuracy {:.4} ({} runs)", a.value, a.delay_mean, a.accuracy_mean, a.runs))
        .collect::<Vec<_>>()
        .join("; ")
}

fn main() {
    let mut report = Report { failures: 0 };
    let start = Instant::now();

    let (pass, detail) = gradient_fidelity();
    report.line(1, "gradient fidelity", pass, detail);
    let (pass, detail) = oracle_equivalence();
    report.line(2, "oracle equivalence", pass, detail);
    let (pass, detail) = constraint_satisfaction();
    report.line(3, "constraint satisfaction", pass, detail);

    let base = ExperimentConfig::preset(Preset::Desk);
    let run = |algo: Algorithm| {
        let c = ExperimentConfig { algo, ..base.clone() };
        execute(&c).expect("training run")
    };
    let hybrid = run(Algorithm::Hybrid);
    let hybrid_acc = tail(&hybrid);
    report.line(
        4,
        "classification at desk scale",
        hybrid_acc >= 0.65,
        format!("hybrid final-100 held-out accuracy {hybrid_acc:.4} (>= 0.65), test accuracy {:.4}", hybrid.evaluation.accuracy),
    );

    let svm = tail(&run(Algorithm::Svm));
    let ppo_run = run(Algorithm::Ppo);
    let vpg_run = run(Algorithm::Vpg);
    let (ppo, vpg) = (tail(&ppo_run), tail(&vpg_run));
    let pass = (svm - hybrid_acc).abs() <= 0.10 && (0.15..=0.40).contains(&ppo) && (0.15..=0.40).contains(&vpg);
    report.line(
        5,
        "baseline ordering",
        pass,
        format!("hybrid {hybrid_acc:.4}, svm {svm:.4} (within 0.10), ppo {ppo:.4}, vpg {vpg:.4} (in [0.15, 0.40])"),
    );

    let window_delay = |o: &RunOutcome, late: bool| {
        let eps = &o.training.episodes;
        let w = &eps[if late { eps.len().saturating_sub(100) } else { 0 }..][..eps.len().min(100)];
        w.iter().map(|e| e.mean_delay).sum::<f64>() / w.len() as f64
    };
    let _ = writeln!(
        std::io::stdout(),
        "INFO baseline delay, first vs last 100 episodes: ppo {:.5} -> {:.5} s, vpg {:.5} -> {:.5} s",
        window_delay(&ppo_run, false),
        window_delay(&ppo_run, true),
        window_delay(&vpg_run, false),
        window_delay(&vpg_run, true),
    );

    let power = run_sweep(&base, &SweepSpec::standard(SweepParam::PMax), false, None).expect("power sweep");
    let delays: Vec<f64> = power.aggregates.iter().map(|a| a.delay_mean).collect();
    let accs: Vec<f64> = power.aggregates.iter().map(|a| a.accuracy_mean).collect();
    let complete = power.aggregates.iter().all(|a| a.runs == 3);
    let pass = complete && strictly_decreasing(&delays) && accs[0] <= accs[2] - 0.05;
    report.line(6, "power sweep trends", pass, sweep_detail(&power));

    let cpu = run_sweep(&base, &SweepSpec::standard(SweepParam::Cpu), false, None).expect("cpu sweep");
    let delays: Vec<f64> = cpu.aggregates.iter().map(|a| a.delay_mean).collect();
    let accs: Vec<f64> = cpu.aggregates.iter().map(|a| a.accuracy_mean).collect();
    let spread = accs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - accs.iter().cloned().fold(f64::INFINITY, f64::min);
    let complete = cpu.aggregates.iter().all(|a| a.runs == 3);
    let pass = complete && strictly_decreasing(&delays) && spread < 0.10;
    report.line(7, "cpu sweep trends", pass, format!("{}; accuracy spread {spread:.4} (< 0.10)", sweep_detail(&cpu)));

    let tmp = std::env::temp_dir().join(format!("bci-ran-acceptance-{}", std::process::id()));
    let det = |name: &str| {
        let c = ExperimentConfig { episodes: 30, output_dir: tmp.join(name), ..base.clone() };
        run_experiment(&c).expect("determinism run");
        let read = |f: &str| std::fs::read(tmp.join(name).join(f)).unwrap();
        (read("metrics.csv"), read("heldout.csv"), read("diagnostics.csv"))
    };
    let (a, b) = (det("a"), det("b"));
    let in_memory = |_: ()| {
        let c = ExperimentConfig { episodes: 30, ..base.clone() };
        let rows: Vec<MetricRow> = execute(&c).unwrap().training.episodes.iter().map(MetricRow::training).collect();
        metrics_to_string(&rows)
    };
    let same_memory = in_memory(()) == String::from_utf8(a.0.clone()).unwrap();
    let _ = std::fs::remove_dir_all(&tmp);
    report.line(
        8,
        "determinism",
        a == b && same_memory,
        format!("metrics.csv {} bytes identical: {}, all metric files identical: {}", a.0.len(), a.0 == b.0, a == b),
    );

    let config = base.resolved();
    let model = HybridModel::new(Algorithm::Hybrid, model_shape(&config), &config.learner, &mut seeded(900)).unwrap();
    let (_, test) = prepare_data(&config).unwrap();
    let chance = evaluate(&model, &mut eval_runner(&config, test).unwrap(), 70).unwrap();
    report.line(
        9,
        "chance-level control",
        chance.verdicts >= 10_000 && (chance.accuracy - 0.25).abs() <= 0.05,
        format!("untrained accuracy {:.4} over {} verdicts (0.25 +- 0.05)", chance.accuracy, chance.verdicts),
    );

    let _ = writeln!(std::io::stdout(), "acceptance finished in {:.0} s, {} failing", start.elapsed().as_secs_f64(), report.failures);
    if report.failures > 0 {
        std::process::exit(1);
    }
}
