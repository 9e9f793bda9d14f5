use bci_ran::env::EnvConfig;
use bci_ran::learner::*;
use bci_ran::rng::seeded;
use proptest::prelude::*;

/// `sum_{j >= i} (gamma lambda)^(j - i) delta_j` written as a double loop.
fn direct_advantages(deltas: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    (0..deltas.len())
        .map(|i| (i..deltas.len()).map(|j| (gamma * lambda).powi((j - i) as i32) * deltas[j]).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn backward_recursion_matches_double_sum(
        deltas in prop::collection::vec(-5.0f64..5.0, 1..60),
        gamma in 0.0f64..1.0,
        lambda in 0.0f64..=1.0,
    ) {
        let terminals = vec![false; deltas.len()];
        let got = advantages_from_deltas(&deltas, &terminals, gamma, lambda);
        for (g, want) in got.iter().zip(direct_advantages(&deltas, gamma, lambda)) {
            prop_assert!((g - want).abs() <= 1e-12 * want.abs().max(1.0), "{} vs {}", g, want);
        }
    }
}

#[test]
fn advantage_worked_example() {
    let a = advantages_from_deltas(&[1.0, 0.5, -0.2], &[false; 3], 0.9, 0.95);
    let a2 = -0.2;
    let a1 = 0.5 + 0.855 * a2;
    let a0 = 1.0 + 0.855 * a1;
    assert!((a[2] - a2).abs() < 1e-15);
    assert!((a[1] - 0.329).abs() < 1e-12);
    assert!((a[0] - a0).abs() < 1e-12);
    assert!((a[0] - 1.281_295).abs() < 1e-12);
}

#[test]
fn lambda_zero_gives_deltas() {
    let deltas = [0.3, -1.0, 2.5, 0.0];
    assert_eq!(advantages_from_deltas(&deltas, &[false; 4], 0.99, 0.0), deltas);
}

#[test]
fn terminal_cuts_the_sum() {
    let a = advantages_from_deltas(&[1.0, 1.0, 1.0], &[false, true, false], 0.5, 1.0);
    assert_eq!(a, vec![1.5, 1.0, 1.0]);
}

#[test]
fn gae_on_zero_trajectory_is_zero() {
    let (adv, ret) = compute_gae(&[0.0; 5], &[0.0; 5], &[false; 5], 0.0, 0.99, 0.95);
    assert!(adv.iter().chain(&ret).all(|&x| x == 0.0));
}

#[test]
fn clipped_objective_truth_table() {
    let eps = 0.2;
    // (ratio, advantage, expected min(r A, g(eps, A)))
    let cases: [(f64, f64, f64); 16] = [
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
    for (ratio, adv, want) in cases {
        let got = clipped_objective(ratio.ln(), 0.0, adv, eps);
        let r = ratio.ln().exp();
        let direct = (r * adv).min(if adv >= 0.0 { (1.0 + eps) * adv } else { (1.0 - eps) * adv });
        assert_eq!(got, direct, "ratio {ratio} adv {adv}");
        assert!((got - want).abs() < 1e-12, "ratio {ratio} adv {adv}: {got} vs {want}");
    }
}

fn layout(classes: Option<usize>) -> ActorLayout {
    ActorLayout { users: 3, blocks: 6, prediction_classes: classes, max_power: 0.01 }
}

#[test]
fn uniform_logits_pick_users_equally() {
    let output = vec![0.0; layout(None).output_len()];
    let dist = PolicyDistribution::from_output(layout(None), &output).unwrap();
    let mut rng = seeded(21);
    let mut counts = [0usize; 3];
    let n = 10_000;
    for _ in 0..n {
        counts[dist.sample(&mut rng).blocks[0]] += 1;
    }
    for c in counts {
        assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02, "{counts:?}");
    }
}

#[test]
fn minimum_spread_power_is_the_squashed_mean() {
    let l = layout(None);
    let mut output = vec![0.0; l.output_len()];
    for k in 0..3 {
        output[l.power_mean_offset() + k] = 0.7 * k as f64 - 0.5;
        output[l.log_std_offset() + k] = -50.0;
    }
    let dist = PolicyDistribution::from_output(l, &output).unwrap();
    let mut rng = seeded(22);
    let action = dist.to_action(&dist.sample(&mut rng), vec![0; 3]);
    for k in 0..3 {
        let mean = 0.01 / (1.0 + (-(0.7 * k as f64 - 0.5)).exp());
        assert!((action.powers[k] - mean).abs() < 1e-2 * 0.01);
    }
}

#[test]
fn sample_density_matches_reevaluation() {
    let l = layout(Some(4));
    let mut rng = seeded(23);
    let output: Vec<f64> = (0..l.output_len()).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.2).collect();
    let dist = PolicyDistribution::from_output(l, &output).unwrap();
    for _ in 0..100 {
        let s = dist.sample(&mut rng);
        assert!((dist.log_density(&s) - s.log_density).abs() < 1e-9);
    }
}

#[test]
fn power_density_integrates_to_one() {
    let p_max = 0.01;
    for (mean, log_std) in [(0.0, 0.0), (1.5, -0.5), (-2.0, 0.7)] {
        // midpoint rule in the pre-squash variable, mapped through the density in p
        let n = 200_000;
        let (lo, hi) = (-30.0, 30.0);
        let h = (hi - lo) / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * h;
            let s = 1.0 / (1.0 + (-x).exp());
            let p = p_max * s;
            let dp_dx = p_max * s * (1.0 - s);
            total += power_density(p, mean, log_std, p_max) * dp_dx * h;
        }
        assert!((total - 1.0).abs() < 1e-3, "mean {mean} log_std {log_std}: {total}");
    }
}

#[test]
fn sampled_actions_are_legal() {
    let env = EnvConfig::default();
    let shape = ModelShape::new(&env, 8, 32, 4);
    let mut rng = seeded(24);
    for algo in [Algorithm::Hybrid, Algorithm::Ppo] {
        let model = HybridModel::new(algo, shape, &LearnerConfig::default(), &mut rng).unwrap();
        for i in 0..5_000 {
            let features: Vec<f64> = (0..Observation::len_for(&env)).map(|j| ((i * 13 + j * 7) % 17) as f64 / 4.0 - 2.0).collect();
            let dist = model.policy(&Observation { features }).unwrap();
            let sample = dist.sample(&mut rng);
            let predictions = sample.predictions.clone().unwrap_or_else(|| vec![1; 3]);
            let action = dist.to_action(&sample, predictions);
            action.validate(&env, Some(4)).unwrap();
            assert!(action.powers.iter().all(|&p| p > 0.0 && p <= env.max_power_w));
            assert!((action.cpu_shares.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
