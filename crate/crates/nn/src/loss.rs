use crate::{NnError, Result};

/// Lower clamp applied to probabilities before taking the logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

/// Numerically stable softmax of a slice.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

/// `ln softmax(logits)[index]`.
pub fn log_softmax_at(logits: &[f64], index: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln() + max;
    logits[index] - lse
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_distribution(probabilities: &[f64], label: usize) -> Result<()> {
    if label >= probabilities.len() {
        return Err(NnError::Distribution(format!(
            "label {label} out of range for {} classes",
            probabilities.len()
        )));
    }
    if probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(NnError::Distribution("negative or non-finite entry".into()));
    }
    let sum: f64 = probabilities.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(NnError::Distribution(format!("entries sum to {sum}")));
    }
    Ok(())
}

/// `-ln max(p[label], 1e-12)` for a probability vector.
pub fn cross_entropy(probabilities: &[f64], label: usize) -> Result<f64> {
    check_distribution(probabilities, label)?;
    Ok(-probabilities[label].max(LOG_FLOOR).ln())
}

/// Gradient of [`cross_entropy`] with respect to the probabilities.
///
/// Zero inside the clamp, where the loss is flat.
pub fn cross_entropy_grad_probs(probabilities: &[f64], label: usize) -> Result<Vec<f64>> {
    check_distribution(probabilities, label)?;
    let mut grad = vec![0.0; probabilities.len()];
    let p = probabilities[label];
    if p > LOG_FLOOR {
        grad[label] = -1.0 / p;
    }
    Ok(grad)
}

/// Gradient with respect to the pre-softmax logits: `p - one_hot(label)`.
pub fn cross_entropy_grad_logits(probabilities: &[f64], label: usize) -> Result<Vec<f64>> {
    check_distribution(probabilities, label)?;
    let mut grad = probabilities.to_vec();
    grad[label] -= 1.0;
    Ok(grad)
}
