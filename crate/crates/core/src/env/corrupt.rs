use rand::Rng;
use rand_distr::StandardNormal;

use crate::signal::EegWindow;

/// Sample columns per uplink packet.
pub const SEGMENT_COLUMNS: usize = 8;

/// Receives `window` over a link where each packet of [`SEGMENT_COLUMNS`]
/// columns is lost with probability `epsilon`. Lost packets are replaced by
/// Gaussian noise with each channel's empirical standard deviation.
pub fn corrupt_window<R: Rng + ?Sized>(window: &EegWindow, epsilon: f64, rng: &mut R) -> EegWindow {
    corrupt_window_counted(window, epsilon, rng).0
}

/// [`corrupt_window`] that also returns `(replaced, total)` segment counts.
pub fn corrupt_window_counted<R: Rng + ?Sized>(window: &EegWindow, epsilon: f64, rng: &mut R) -> (EegWindow, usize, usize) {
    let epsilon = epsilon.clamp(0.0, 1.0);
    let length = window.length();
    let segments = length.div_ceil(SEGMENT_COLUMNS);
    let mut out = window.clone();
    if epsilon == 0.0 {
        return (out, 0, segments);
    }
    let lost: Vec<bool> = (0..segments).map(|_| rng.random::<f64>() < epsilon).collect();
    let replaced = lost.iter().filter(|&&l| l).count();
    if replaced == 0 {
        return (out, 0, segments);
    }
    let sds: Vec<f64> = (0..window.channels()).map(|j| std_dev(window.channel(j))).collect();
    let samples = out.samples_mut();
    for (j, sd) in sds.iter().enumerate() {
        for (s, _) in lost.iter().enumerate().filter(|(_, &l)| l) {
            let lo = s * SEGMENT_COLUMNS;
            let hi = (lo + SEGMENT_COLUMNS).min(length);
            for t in lo..hi {
                let z: f64 = rng.sample(StandardNormal);
                samples[j * length + t] = sd * z;
            }
        }
    }
    (out, replaced, segments)
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}
