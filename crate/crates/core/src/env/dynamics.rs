use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{EnvConfig, EnvState};

pub const CPU_MIN: f64 = 0.1;
pub const CPU_MAX: f64 = 0.9;

/// Next block-fading gains and CPU availabilities.
///
/// Normalised gain `E' = c E + (1 - c) X` with `X ~ Exp(1)` and `c` the
/// channel correlation; each core's availability takes a clamped Gaussian
/// step.
pub fn advance_channel_and_cpu<R: Rng + ?Sized>(state: &EnvState, config: &EnvConfig, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let c = config.channel_correlation;
    let gains = state
        .gains
        .iter()
        .map(|&h| {
            let fresh: f64 = rng.sample(Exp1);
            let mixed = c * (h / config.mean_channel_gain) + (1.0 - c) * fresh;
            (config.mean_channel_gain * mixed).max(f64::MIN_POSITIVE)
        })
        .collect();
    let cpu = state
        .cpu
        .iter()
        .map(|&u| {
            let z: f64 = rng.sample(StandardNormal);
            (u + config.cpu_walk_std * z).clamp(CPU_MIN, CPU_MAX)
        })
        .collect();
    (gains, cpu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start() -> EnvState {
        EnvState::for_tests(vec![1e-10; 3], vec![0.5; 8])
    }

    #[test]
    fn zero_walk_keeps_cpu() {
        let config = EnvConfig { cpu_walk_std: 0.0, ..EnvConfig::default() };
        let mut rng = crate::rng::seeded(2);
        let mut state = start();
        state.cpu = vec![0.37; 8];
        for _ in 0..100 {
            let (g, u) = advance_channel_and_cpu(&state, &config, &mut rng);
            assert_eq!(u, vec![0.37; 8]);
            state.gains = g;
        }
    }

    #[test]
    fn cpu_stays_clamped() {
        let config = EnvConfig { cpu_walk_std: 0.3, ..EnvConfig::default() };
        let mut rng = crate::rng::seeded(3);
        let mut state = start();
        for _ in 0..100_000 / 8 {
            let (g, u) = advance_channel_and_cpu(&state, &config, &mut rng);
            assert!(u.iter().all(|v| (CPU_MIN..=CPU_MAX).contains(v)));
            assert!(g.iter().all(|&h| h > 0.0));
            state.cpu = u;
            state.gains = g;
        }
    }

    #[test]
    fn full_correlation_limit_keeps_gain_near_previous() {
        let config = EnvConfig { channel_correlation: 0.999, ..EnvConfig::default() };
        let mut rng = crate::rng::seeded(4);
        let state = EnvState::for_tests(vec![2e-10; 3], vec![0.5; 8]);
        let (g, _) = advance_channel_and_cpu(&state, &config, &mut rng);
        for h in g {
            assert!((h / 2e-10 - 1.0).abs() < 0.05);
        }
    }
}
