//! Central finite-difference verification of analytic gradients.

use crate::network::{Gradients, Network};
use crate::tensor::Tensor;
use crate::Result;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Magnitudes below this are compared absolutely rather than relatively.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub max_relative_error: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.tensors.iter().all(|t| t.passed)
    }

    pub fn worst(&self) -> f64 {
        self.tensors.iter().fold(0.0, |m, t| m.max(t.max_relative_error))
    }

    pub fn failures(&self) -> impl Iterator<Item = &TensorCheck> {
        self.tensors.iter().filter(|t| !t.passed)
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Checks [`Network::backward`] against finite differences of `loss`.
///
/// `loss` maps the network output to `(L, dL/d output)`.
pub fn gradient_check<F>(net: &Network, input: &Tensor, loss: F, tolerance: f64) -> Result<GradCheckReport>
where
    F: Fn(&Tensor) -> (f64, Tensor),
{
    let (out, cache) = net.forward(input)?;
    let (_, dout) = loss(&out);
    let analytic = net.backward(&cache, &dout)?;
    compare_gradients(net, input, loss, &analytic, tolerance)
}

/// Compares supplied gradients against finite differences of `loss`.
pub fn compare_gradients<F>(
    net: &Network,
    input: &Tensor,
    loss: F,
    analytic: &Gradients,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&Tensor) -> (f64, Tensor),
{
    let mut probe = net.clone();
    let mut tensors = Vec::with_capacity(net.params().len());
    for (k, name) in net.param_names().iter().enumerate() {
        let mut worst: f64 = 0.0;
        for j in 0..net.params()[k].len() {
            let original = net.params()[k].data()[j];
            probe.params_mut()[k].data_mut()[j] = original + FD_STEP;
            let up = loss(&probe.predict(input)?).0;
            probe.params_mut()[k].data_mut()[j] = original - FD_STEP;
            let down = loss(&probe.predict(input)?).0;
            probe.params_mut()[k].data_mut()[j] = original;
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(relative_error(analytic.tensors()[k].data()[j], numeric));
        }
        tensors.push(TensorCheck { name: name.clone(), max_relative_error: worst, passed: worst <= tolerance });
    }
    Ok(GradCheckReport { tolerance, tensors })
}

/// `L = sum(w_i * y_i)` for fixed weights, a loss with a non-trivial gradient
/// everywhere.
pub fn weighted_sum_loss(weights: Vec<f64>) -> impl Fn(&Tensor) -> (f64, Tensor) {
    move |out: &Tensor| {
        let value = out.data().iter().zip(&weights).map(|(a, b)| a * b).sum();
        let grad = Tensor::new(out.shape().to_vec(), weights.clone()).expect("weights match output");
        (value, grad)
    }
}

/// Cross-entropy of a probability output against `label`.
pub fn cross_entropy_loss(label: usize) -> impl Fn(&Tensor) -> (f64, Tensor) {
    move |out: &Tensor| {
        let value = crate::loss::cross_entropy(out.data(), label).expect("softmax output");
        let grad = crate::loss::cross_entropy_grad_probs(out.data(), label).expect("softmax output");
        (value, Tensor::vector(grad))
    }
}

/// A small network used to exercise one layer kind or composition.
#[derive(Debug, Clone)]
pub struct ReferenceCase {
    pub name: &'static str,
    pub specs: Vec<crate::LayerSpec>,
    pub input_shape: Vec<usize>,
    /// Ends in softmax and is checked with cross-entropy.
    pub classifier: bool,
}

/// One case per layer kind plus three mixed compositions.
pub fn reference_cases() -> Vec<ReferenceCase> {
    use crate::LayerSpec as L;
    let case = |name, specs: Vec<L>, input_shape: Vec<usize>, classifier| ReferenceCase {
        name,
        specs,
        input_shape,
        classifier,
    };
    vec![
        case("dense", vec![L::dense(5, 3)], vec![5], false),
        case("relu", vec![L::dense(4, 6), L::Relu, L::dense(6, 2)], vec![4], false),
        case("tanh", vec![L::dense(4, 6), L::Tanh, L::dense(6, 2)], vec![4], false),
        case("softmax", vec![L::dense(4, 3), L::Softmax], vec![4], true),
        case("conv1d", vec![L::conv1d(2, 3, 3), L::Flatten, L::dense(12, 2)], vec![2, 6], false),
        case(
            "conv1d-strided",
            vec![L::Conv1d { in_channels: 2, out_channels: 2, kernel: 3, stride: 2 }, L::Flatten, L::dense(6, 2)],
            vec![2, 8],
            false,
        ),
        case("maxpool1d", vec![L::conv1d(1, 2, 2), L::MaxPool1d { width: 2 }, L::Flatten, L::dense(12, 2)], vec![1, 13], false),
        case("flatten", vec![L::Flatten, L::dense(6, 2)], vec![2, 3], false),
        case(
            "dense-relu-dense-softmax",
            vec![L::dense(6, 8), L::Relu, L::dense(8, 4), L::Softmax],
            vec![6],
            true,
        ),
        case(
            "conv-maxpool-dense",
            vec![L::conv1d(3, 4, 3), L::MaxPool1d { width: 2 }, L::Flatten, L::dense(12, 3)],
            vec![3, 9],
            false,
        ),
        case(
            "classifier-stack",
            vec![
                L::conv1d(3, 4, 3),
                L::Relu,
                L::MaxPool1d { width: 2 },
                L::conv1d(4, 3, 2),
                L::Tanh,
                L::Flatten,
                L::dense(9, 4),
                L::Softmax,
            ],
            vec![3, 10],
            true,
        ),
    ]
}

/// Runs `case` with weights, input and loss drawn from `rng`.
pub fn check_case<R: rand::Rng + ?Sized>(case: &ReferenceCase, rng: &mut R, tolerance: f64) -> Result<GradCheckReport> {
    let mut net = Network::new(&case.specs, &case.input_shape, rng)?;
    // Non-zero biases so that ReLU/maxpool see varied inputs.
    for (k, name) in net.param_names().to_vec().iter().enumerate() {
        if name.ends_with(".bias") {
            for b in net.params_mut()[k].data_mut() {
                *b = rng.random_range(-0.5..0.5);
            }
        }
    }
    let len: usize = case.input_shape.iter().product();
    let input = Tensor::new(case.input_shape.clone(), (0..len).map(|_| rng.random_range(-1.5..1.5)).collect())?;
    if case.classifier {
        let classes = *net.output_shape().last().unwrap();
        let label = rng.random_range(0..classes);
        gradient_check(&net, &input, cross_entropy_loss(label), tolerance)
    } else {
        let outputs: usize = net.output_shape().iter().product();
        let weights = (0..outputs).map(|_| rng.random_range(-1.0..1.0)).collect();
        gradient_check(&net, &input, weighted_sum_loss(weights), tolerance)
    }
}
