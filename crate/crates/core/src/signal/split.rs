use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{EegWindow, LabeledDataset};
use crate::{rng, Error, Result};

/// Stratified, seeded train/test split.
///
/// Each class contributes `round(n * train_fraction)` windows to the train
/// side, clamped so both sides keep at least one window of every class.
pub fn split_dataset(dataset: &LabeledDataset, train_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train_fraction {train_fraction} must be in (0, 1)")));
    }
    let counts = dataset.class_counts();
    if let Some(class) = counts.iter().position(|&n| n < 2) {
        return Err(Error::Dataset(format!("class {class} has {} windows; splitting needs at least 2", counts[class])));
    }
    let mut rng = rng::seeded(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..dataset.class_count() {
        let mut members: Vec<usize> = dataset
            .windows()
            .iter()
            .enumerate()
            .filter(|(_, w)| w.label == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    let pick = |idx: &[usize]| -> Vec<EegWindow> { idx.iter().map(|&i| dataset.windows()[i].clone()).collect() };
    Ok((
        LabeledDataset::new(pick(&train), dataset.class_count())?,
        LabeledDataset::new(pick(&test), dataset.class_count())?,
    ))
}

/// Draws `batch_size` distinct windows.
pub fn sample_batch<'a, R: Rng + ?Sized>(
    dataset: &'a LabeledDataset,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<&'a EegWindow>> {
    if batch_size > dataset.len() {
        return Err(Error::Config(format!(
            "batch of {batch_size} requested from {} windows",
            dataset.len()
        )));
    }
    Ok(index::sample(rng, dataset.len(), batch_size).into_iter().map(|i| &dataset.windows()[i]).collect())
}
