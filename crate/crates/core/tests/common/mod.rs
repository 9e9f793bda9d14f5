//! Reference classifiers that share no code with the library.

use bci_ran::signal::EegWindow;

/// Per-channel power at each probe frequency, from a direct DFT bin.
pub fn bandpower_features(window: &EegWindow, frequencies: &[f64], sample_rate: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(window.channels() * frequencies.len());
    for j in 0..window.channels() {
        let x = window.channel(j);
        for &f in frequencies {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in x.iter().enumerate() {
                let a = 2.0 * std::f64::consts::PI * f * t as f64 / sample_rate;
                re += v * a.cos();
                im += v * a.sin();
            }
            out.push(re * re + im * im);
        }
    }
    out
}

/// Nearest class centroid in bandpower space; returns test accuracy.
pub fn nearest_centroid_accuracy(
    train: &[EegWindow],
    test: &[EegWindow],
    classes: usize,
    frequencies: &[f64],
    sample_rate: f64,
) -> f64 {
    let feats = |w: &EegWindow| bandpower_features(w, frequencies, sample_rate);
    let dim = feats(&train[0]).len();
    let mut centroids = vec![vec![0.0; dim]; classes];
    let mut counts = vec![0usize; classes];
    for w in train {
        for (c, f) in centroids[w.label].iter_mut().zip(feats(w)) {
            *c += f;
        }
        counts[w.label] += 1;
    }
    for (c, n) in centroids.iter_mut().zip(&counts) {
        c.iter_mut().for_each(|v| *v /= *n as f64);
    }
    let correct = test
        .iter()
        .filter(|w| {
            let f = feats(w);
            let dist = |c: &Vec<f64>| c.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let best = (0..classes).min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b]))).unwrap();
            best == w.label
        })
        .count();
    correct as f64 / test.len() as f64
}
