use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{EegWindow, LabeledDataset};
use crate::{rng, Error, Result};

/// Class-conditional generator of EEG-shaped windows.
///
/// Every window is white Gaussian background on all channels plus, on the
/// label's signature channels, a sinusoid at the label's frequency. The
/// phase is the class's base phase (drawn once from the seed) plus a
/// per-window uniform jitter in `[-phase_jitter, phase_jitter]`; a jitter of
/// pi makes the phase uniformly random.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub channels: usize,
    pub window_length: usize,
    pub classes: usize,
    pub class_frequencies: Vec<f64>,
    pub signal_amplitude: f64,
    pub noise_std: f64,
    pub channels_per_class: usize,
    pub sample_rate: f64,
    pub phase_jitter: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            channels: 8,
            window_length: 32,
            classes: 4,
            class_frequencies: vec![6.0, 10.0, 14.0, 18.0],
            signal_amplitude: 1.0,
            noise_std: 0.5,
            channels_per_class: 8,
            sample_rate: 160.0,
            phase_jitter: PI / 2.0,
            seed: 7,
        }
    }
}

impl GeneratorConfig {
    /// 64 channels, one second at 160 Hz.
    pub fn full_scale() -> Self {
        Self { channels: 64, window_length: 160, channels_per_class: 64, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("generator: {msg}")));
        if self.channels == 0 || self.window_length == 0 || self.classes == 0 {
            return fail("channels, window_length and classes must be positive".into());
        }
        if self.class_frequencies.len() != self.classes {
            return fail(format!(
                "{} class frequencies for {} classes",
                self.class_frequencies.len(),
                self.classes
            ));
        }
        if !(self.sample_rate > 0.0) {
            return fail("sample_rate must be positive".into());
        }
        let nyquist = self.sample_rate / 2.0;
        for (i, &f) in self.class_frequencies.iter().enumerate() {
            if !(f > 0.0 && f < nyquist) {
                return fail(format!("class frequency {f} Hz is outside (0, {nyquist})"));
            }
            if self.class_frequencies[..i].contains(&f) {
                return fail(format!("class frequency {f} Hz is repeated"));
            }
        }
        if self.channels_per_class == 0 || self.channels_per_class > self.channels {
            return fail(format!(
                "channels_per_class {} must be in 1..={}",
                self.channels_per_class, self.channels
            ));
        }
        if !(self.noise_std >= 0.0 && self.signal_amplitude.is_finite() && self.phase_jitter >= 0.0) {
            return fail("noise_std and phase_jitter must be non-negative".into());
        }
        Ok(())
    }
}

/// Channels carrying the signature of `class`: the first
/// `channels_per_class` channels rotated by the class index.
pub fn signature_channels(config: &GeneratorConfig, class: usize) -> Vec<usize> {
    (0..config.channels_per_class).map(|i| (i + class) % config.channels).collect()
}

pub fn generate_synthetic_dataset(config: &GeneratorConfig, windows_per_class: usize) -> Result<LabeledDataset> {
    config.validate()?;
    if windows_per_class == 0 {
        return Err(Error::Config("windows_per_class must be positive".into()));
    }
    let mut rng = rng::seeded(config.seed);
    let base_phase: Vec<f64> = (0..config.classes).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let (j, w) = (config.channels, config.window_length);
    let mut windows = Vec::with_capacity(windows_per_class * config.classes);
    for _ in 0..windows_per_class {
        for class in 0..config.classes {
            let mut samples: Vec<f64> = (0..j * w)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    config.noise_std * z
                })
                .collect();
            let jitter = if config.phase_jitter > 0.0 {
                rng.random_range(-config.phase_jitter..=config.phase_jitter)
            } else {
                0.0
            };
            let phase = base_phase[class] + jitter;
            let omega = 2.0 * PI * config.class_frequencies[class] / config.sample_rate;
            for ch in signature_channels(config, class) {
                for t in 0..w {
                    samples[ch * w + t] += config.signal_amplitude * (omega * t as f64 + phase).sin();
                }
            }
            windows.push(EegWindow::new(j, w, samples, class)?);
        }
    }
    LabeledDataset::new(windows, config.classes)
}
