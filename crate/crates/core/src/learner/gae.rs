//! Advantage estimation and the clipped surrogate.

/// `delta_o = r_o + gamma V_{o+1} - V_o`, with `V_{o+1} = 0` after a
/// terminal step and `bootstrap` after the last step otherwise.
pub fn temporal_differences(rewards: &[f64], values: &[f64], terminals: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let n = rewards.len();
    (0..n)
        .map(|o| {
            let next = if terminals[o] {
                0.0
            } else if o + 1 < n {
                values[o + 1]
            } else {
                bootstrap
            };
            rewards[o] + gamma * next - values[o]
        })
        .collect()
}

/// Backward recursion `A_o = delta_o + gamma lambda A_{o+1}`, restarted
/// after terminal steps.
pub fn advantages_from_deltas(deltas: &[f64], terminals: &[bool], gamma: f64, lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; deltas.len()];
    let mut running = 0.0;
    for o in (0..deltas.len()).rev() {
        if terminals[o] {
            running = 0.0;
        }
        running = deltas[o] + gamma * lambda * running;
        out[o] = running;
    }
    out
}

/// Per-step advantages and returns `A_o + V_o`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    terminals: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let deltas = temporal_differences(rewards, values, terminals, bootstrap, gamma);
    let adv = advantages_from_deltas(&deltas, terminals, gamma, lambda);
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// `g(eps, A)`: `(1 + eps) A` for non-negative `A`, else `(1 - eps) A`.
pub fn clip_bound(epsilon: f64, advantage: f64) -> f64 {
    if advantage >= 0.0 {
        (1.0 + epsilon) * advantage
    } else {
        (1.0 - epsilon) * advantage
    }
}

/// `min(r A, g(eps, A))` with `r = exp(new - old)`.
pub fn clipped_objective(log_density_new: f64, log_density_old: f64, advantage: f64, epsilon: f64) -> f64 {
    let ratio = (log_density_new - log_density_old).exp();
    (ratio * advantage).min(clip_bound(epsilon, advantage))
}

/// Derivative of [`clipped_objective`] with respect to `log_density_new`:
/// `r A` where the unclipped term is the minimum, else 0.
pub fn clipped_objective_grad(log_density_new: f64, log_density_old: f64, advantage: f64, epsilon: f64) -> f64 {
    let ratio = (log_density_new - log_density_old).exp();
    if ratio * advantage < clip_bound(epsilon, advantage) {
        ratio * advantage
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_zero_is_one_step() {
        let deltas = [0.3, -1.0, 2.5, 0.1];
        assert_eq!(advantages_from_deltas(&deltas, &[false; 4], 0.9, 0.0), deltas.to_vec());
    }

    #[test]
    fn terminal_cuts_the_recursion() {
        let a = advantages_from_deltas(&[1.0, 1.0, 1.0], &[false, true, false], 0.5, 1.0);
        assert_eq!(a, vec![1.5, 1.0, 1.0]);
    }

    #[test]
    fn null_case() {
        let (a, r) = compute_gae(&[0.0; 5], &[0.0; 5], &[false, false, false, false, true], 0.0, 0.99, 0.95);
        assert!(a.iter().chain(&r).all(|&x| x == 0.0));
    }

    #[test]
    fn terminal_value_is_not_bootstrapped() {
        let d = temporal_differences(&[1.0, 1.0], &[0.5, 0.25], &[false, true], 9.0, 0.5);
        assert_eq!(d, vec![1.0 + 0.125 - 0.5, 1.0 - 0.25]);
        let d = temporal_differences(&[1.0], &[0.5], &[false], 2.0, 0.5);
        assert_eq!(d, vec![1.5]);
    }

    #[test]
    fn grad_matches_finite_difference() {
        for &(new, adv) in &[(0.1, 1.0), (0.5, 1.0), (-0.5, 1.0), (0.1, -1.0), (-0.5, -1.0), (0.5, -2.0)] {
            let h = 1e-7;
            let fd = (clipped_objective(new + h, 0.0, adv, 0.2) - clipped_objective(new - h, 0.0, adv, 0.2)) / (2.0 * h);
            assert!((fd - clipped_objective_grad(new, 0.0, adv, 0.2)).abs() < 1e-6);
        }
    }
}
