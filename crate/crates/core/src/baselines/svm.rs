//! Linear one-vs-rest SVM on standardized flattened windows.

use std::path::Path;

use bci_nn::{argmax, checkpoint, Tensor};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::signal::EegWindow;
use crate::{Error, Result};

pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    /// Refit over the stored buffer every this many episodes.
    pub refit_every: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { epochs: 5, learning_rate: 1e-3, regularization: 1e-4, refit_every: 10 }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.refit_every == 0 {
            return Err(Error::Config("svm: epochs and refit_every must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.regularization >= 0.0) {
            return Err(Error::Config("svm: learning_rate must be positive, regularization non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    classes: usize,
    features: usize,
    /// Row-major `C x F`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
}

impl SvmModel {
    /// All-zero weights with identity standardization.
    pub fn zeros(classes: usize, features: usize) -> Self {
        Self {
            classes,
            features,
            weights: vec![0.0; classes * features],
            biases: vec![0.0; classes],
            feature_means: vec![0.0; features],
            feature_stds: vec![1.0; features],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn standardize(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(&self.feature_means).zip(&self.feature_stds).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn scores(&self, standardized: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|c| {
                let w = &self.weights[c * self.features..(c + 1) * self.features];
                w.iter().zip(standardized).map(|(a, b)| a * b).sum::<f64>() + self.biases[c]
            })
            .collect()
    }

    /// `lambda/2 |W|^2 + mean over samples of summed one-vs-rest hinge`.
    pub fn objective(&self, samples: &[&EegWindow], regularization: f64) -> f64 {
        let norm: f64 = self.weights.iter().map(|w| w * w).sum();
        let hinge: f64 = samples
            .iter()
            .map(|w| {
                let s = self.scores(&self.standardize(w.samples()));
                s.iter()
                    .enumerate()
                    .map(|(c, &v)| {
                        let y = if c == w.label { 1.0 } else { -1.0 };
                        (1.0 - y * v).max(0.0)
                    })
                    .sum::<f64>()
            })
            .sum();
        0.5 * regularization * norm + hinge / samples.len() as f64
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let c = self.classes;
        let f = self.features;
        let w = Tensor::new(vec![c, f], self.weights.clone())?;
        let b = Tensor::vector(self.biases.clone());
        let m = Tensor::vector(self.feature_means.clone());
        let s = Tensor::vector(self.feature_stds.clone());
        let text = checkpoint::tensors_to_string(&[("svm.weight", &w), ("svm.bias", &b), ("svm.mean", &m), ("svm.std", &s)]);
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let records = checkpoint::read_tensors(std::io::BufReader::new(file))?;
        let find = |name: &str| {
            records
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| Error::Config(format!("svm checkpoint lacks `{name}`")))
        };
        let w = find("svm.weight")?;
        let &[classes, features] = w.shape() else {
            return Err(Error::Config("svm.weight must be two-dimensional".into()));
        };
        let model = Self {
            classes,
            features,
            weights: w.into_data(),
            biases: find("svm.bias")?.into_data(),
            feature_means: find("svm.mean")?.into_data(),
            feature_stds: find("svm.std")?.into_data(),
        };
        if model.biases.len() != classes || model.feature_means.len() != features || model.feature_stds.len() != features {
            return Err(Error::Config("svm checkpoint has inconsistent sizes".into()));
        }
        Ok(model)
    }
}

/// One subgradient step of the regularized one-vs-rest hinge on a
/// standardized sample.
pub fn sgd_step(model: &mut SvmModel, x: &[f64], label: usize, lr: f64, reg: f64) {
    let f = model.features;
    let scores = model.scores(x);
    for (c, &score) in scores.iter().enumerate() {
        let y = if c == label { 1.0 } else { -1.0 };
        let violated = y * score < 1.0;
        for (wj, xj) in model.weights[c * f..(c + 1) * f].iter_mut().zip(x) {
            let g = reg * *wj - if violated { y * xj } else { 0.0 };
            *wj -= lr * g;
        }
        if violated {
            model.biases[c] += lr * y;
        }
    }
}

/// Fits a fresh model to the whole buffer by stochastic subgradient descent.
pub fn train_svm<R: Rng + ?Sized>(
    buffer: &[&EegWindow],
    classes: usize,
    config: &SvmConfig,
    rng: &mut R,
) -> Result<SvmModel> {
    let first = buffer.first().ok_or_else(|| Error::Dataset("svm buffer is empty".into()))?;
    if buffer.iter().all(|w| w.label == first.label) {
        return Err(Error::Dataset("svm buffer holds a single class".into()));
    }
    if let Some(w) = buffer.iter().find(|w| w.label >= classes) {
        return Err(Error::Dataset(format!("svm label {} out of range for {classes} classes", w.label)));
    }
    let f = first.samples().len();
    let n = buffer.len() as f64;
    let mut model = SvmModel::zeros(classes, f);
    for w in buffer {
        for (m, x) in model.feature_means.iter_mut().zip(w.samples()) {
            *m += x / n;
        }
    }
    let mut var = vec![0.0; f];
    for w in buffer {
        for ((v, x), m) in var.iter_mut().zip(w.samples()).zip(&model.feature_means) {
            *v += (x - m).powi(2) / n;
        }
    }
    model.feature_stds = var.iter().map(|v| v.sqrt().max(STD_FLOOR)).collect();
    let features: Vec<Vec<f64>> = buffer.iter().map(|w| model.standardize(w.samples())).collect();
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(rng);
        for &i in &order {
            sgd_step(&mut model, &features[i], buffer[i].label, config.learning_rate, config.regularization);
        }
    }
    Ok(model)
}

/// Highest-scoring class; ties go to the lowest index.
pub fn predict_svm(model: &SvmModel, window: &EegWindow) -> usize {
    argmax(&model.scores(&model.standardize(window.samples())))
}
