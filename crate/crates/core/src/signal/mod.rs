//! Labeled biosignal windows.

mod csv_io;
mod split;
mod synthetic;

use std::sync::Arc;

use bci_nn::Tensor;

use crate::{Error, Result};

pub use csv_io::{load_csv_dataset, read_csv_dataset, write_csv_dataset, CsvError};
pub use split::{sample_batch, split_dataset};
pub use synthetic::{generate_synthetic_dataset, signature_channels, GeneratorConfig};

/// One user's `channels x length` window, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EegWindow {
    samples: Vec<f64>,
    channels: usize,
    length: usize,
    pub label: usize,
    pub user_id: usize,
}

impl EegWindow {
    pub fn new(channels: usize, length: usize, samples: Vec<f64>, label: usize) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(Error::Dataset("window dimensions must be positive".into()));
        }
        if samples.len() != channels * length {
            return Err(Error::Dataset(format!(
                "window needs {} samples, got {}",
                channels * length,
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dataset("window contains non-finite samples".into()));
        }
        Ok(Self { samples, channels, length, label, user_id: 0 })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn channel(&self, j: usize) -> &[f64] {
        &self.samples[j * self.length..(j + 1) * self.length]
    }

    pub fn at(&self, channel: usize, t: usize) -> f64 {
        self.samples[channel * self.length + t]
    }

    pub fn mean_abs(&self) -> f64 {
        self.samples.iter().map(|v| v.abs()).sum::<f64>() / self.samples.len() as f64
    }

    /// `[channels, length]` tensor for the classifier.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![self.channels, self.length], self.samples.clone()).expect("window shape")
    }
}

/// A non-empty set of windows sharing dimensions.
///
/// Class coverage is not enforced here so that partial exports load; use
/// [`LabeledDataset::require_all_classes`] where every class must appear.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    windows: Vec<EegWindow>,
    class_count: usize,
    channel_count: usize,
    window_length: usize,
}

pub type SharedDataset = Arc<LabeledDataset>;

impl LabeledDataset {
    pub fn new(windows: Vec<EegWindow>, class_count: usize) -> Result<Self> {
        let first = windows.first().ok_or_else(|| Error::Dataset("dataset is empty".into()))?;
        let (channel_count, window_length) = (first.channels, first.length);
        for (i, w) in windows.iter().enumerate() {
            if w.channels != channel_count || w.length != window_length {
                return Err(Error::Dataset(format!("window {i} has inconsistent dimensions")));
            }
            if w.label >= class_count {
                return Err(Error::Dataset(format!("window {i} has label {} >= {class_count}", w.label)));
            }
        }
        Ok(Self { windows, class_count, channel_count, window_length })
    }

    pub fn windows(&self) -> &[EegWindow] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    pub fn window_length(&self) -> usize {
        self.window_length
    }

    pub fn require_all_classes(&self) -> Result<()> {
        match self.class_counts().iter().position(|&n| n == 0) {
            Some(missing) => Err(Error::Dataset(format!("class {missing} has no windows"))),
            None => Ok(()),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for w in &self.windows {
            counts[w.label] += 1;
        }
        counts
    }
}
