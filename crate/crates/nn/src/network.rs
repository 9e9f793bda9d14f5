use rand::Rng;

use crate::adam::AdamState;
use crate::layer::LayerSpec;
use crate::tensor::Tensor;
use crate::{NnError, Result};

/// A feed-forward stack of layers together with its parameters and
/// optimizer moments.
#[derive(Debug, Clone)]
pub struct Network {
    specs: Vec<LayerSpec>,
    /// `shapes[i]` is the input shape of layer `i`; the last entry is the output shape.
    shapes: Vec<Vec<usize>>,
    params: Vec<Tensor>,
    names: Vec<String>,
    /// Index into `params` of each layer's weight (bias follows it).
    slots: Vec<Option<usize>>,
    pub(crate) adam: AdamState,
    version: u64,
}

/// Per-layer activations recorded by [`Network::forward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    activations: Vec<Tensor>,
    pool_argmax: Vec<Vec<usize>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Tensor {
        self.activations.last().expect("cache always holds the input")
    }

    pub fn activation(&self, layer: usize) -> Option<&Tensor> {
        self.activations.get(layer)
    }
}

/// One gradient tensor per parameter tensor, in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    tensors: Vec<Tensor>,
}

impl Gradients {
    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn scale(&mut self, factor: f64) {
        self.tensors.iter_mut().for_each(|t| t.scale(factor));
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_scaled(b, 1.0);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors.iter().fold(0.0, |m, t| m.max(t.max_abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.tensors.iter().all(|t| t.data().iter().all(|&v| v == 0.0))
    }
}

impl Network {
    /// Builds a network with Glorot-uniform weights and zero biases.
    pub fn new<R: Rng + ?Sized>(specs: &[LayerSpec], input_shape: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(specs, input_shape)?;
        for (i, spec) in specs.iter().enumerate() {
            if let (Some(slot), Some((fan_in, fan_out))) = (net.slots[i], spec.fans()) {
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for w in net.params[slot].data_mut() {
                    *w = rng.random_range(-limit..limit);
                }
            }
        }
        Ok(net)
    }

    /// Builds a network with all parameters zero.
    pub fn zeros(specs: &[LayerSpec], input_shape: &[usize]) -> Result<Self> {
        if specs.is_empty() {
            return Err(NnError::Shape { layer: 0, detail: "network has no layers".into() });
        }
        if input_shape.is_empty() || input_shape.iter().any(|&d| d == 0) {
            return Err(NnError::Shape { layer: 0, detail: format!("bad input shape {input_shape:?}") });
        }
        let mut shapes = vec![input_shape.to_vec()];
        let mut params = Vec::new();
        let mut names = Vec::new();
        let mut slots = Vec::new();
        for (i, spec) in specs.iter().enumerate() {
            let next = spec.output_shape(i, shapes.last().unwrap())?;
            shapes.push(next);
            match spec.param_shapes() {
                Some((w, b)) => {
                    slots.push(Some(params.len()));
                    params.push(Tensor::zeros(&w));
                    params.push(Tensor::zeros(&b));
                    names.push(format!("layer{i}.weight"));
                    names.push(format!("layer{i}.bias"));
                }
                None => slots.push(None),
            }
        }
        let adam = AdamState::new(&params);
        Ok(Self { specs: specs.to_vec(), shapes, params, names, slots, adam, version: 0 })
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.shapes[0]
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().unwrap()
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    /// Mutable access to the parameters; invalidates outstanding caches.
    pub fn params_mut(&mut self) -> &mut [Tensor] {
        self.version += 1;
        &mut self.params
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Bumped whenever parameters change.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn adam_step_count(&self) -> u64 {
        self.adam.step
    }

    pub(crate) fn bump_version(&mut self) {
        self.version += 1;
    }

    pub(crate) fn params_and_adam_mut(&mut self) -> (&mut [Tensor], &mut AdamState) {
        (&mut self.params, &mut self.adam)
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients { tensors: self.params.iter().map(|p| Tensor::zeros(p.shape())).collect() }
    }

    fn check_input(&self, input: &Tensor) -> Result<()> {
        if input.shape() != self.shapes[0].as_slice() {
            return Err(NnError::Shape {
                layer: 0,
                detail: format!("expected input {:?}, got {:?}", self.shapes[0], input.shape()),
            });
        }
        Ok(())
    }

    /// Forward pass that returns only the output.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor> {
        self.check_input(input)?;
        let mut current = input.clone();
        let mut scratch = Vec::new();
        for i in 0..self.specs.len() {
            current = self.layer_forward(i, &current, &mut scratch);
            if !current.is_finite() {
                return Err(NnError::NonFinite(i));
            }
        }
        Ok(current)
    }

    /// Forward pass recording what [`Network::backward`] needs.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ForwardCache)> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.specs.len() + 1);
        let mut pool_argmax = Vec::with_capacity(self.specs.len());
        activations.push(input.clone());
        for i in 0..self.specs.len() {
            let mut argmax = Vec::new();
            let out = self.layer_forward(i, &activations[i], &mut argmax);
            if !out.is_finite() {
                return Err(NnError::NonFinite(i));
            }
            activations.push(out);
            pool_argmax.push(argmax);
        }
        let output = activations.last().unwrap().clone();
        Ok((output, ForwardCache { version: self.version, activations, pool_argmax }))
    }

    /// Gradients of a scalar loss given `dL/d output`.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &Tensor) -> Result<Gradients> {
        let mut grads = self.zero_gradients();
        self.backward_into(cache, output_grad, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Network::backward`] but accumulates into `grads`.
    pub fn backward_into(&self, cache: &ForwardCache, output_grad: &Tensor, grads: &mut Gradients) -> Result<()> {
        if cache.version != self.version {
            return Err(NnError::StaleCache { cache: cache.version, network: self.version });
        }
        if cache.activations.len() != self.specs.len() + 1 {
            return Err(NnError::Shape { layer: 0, detail: "cache does not match this network".into() });
        }
        let last = self.specs.len();
        if output_grad.shape() != self.shapes[last].as_slice() {
            return Err(NnError::Shape {
                layer: last - 1,
                detail: format!(
                    "output gradient {:?} does not match output {:?}",
                    output_grad.shape(),
                    self.shapes[last]
                ),
            });
        }
        if grads.tensors.len() != self.params.len() {
            return Err(NnError::Shape { layer: 0, detail: "gradient buffer does not match network".into() });
        }
        let mut upstream = output_grad.clone();
        for i in (0..self.specs.len()).rev() {
            let need_input_grad = i > 0;
            upstream = self.layer_backward(i, cache, &upstream, grads, need_input_grad);
        }
        Ok(())
    }

    fn layer_forward(&self, i: usize, x: &Tensor, argmax: &mut Vec<usize>) -> Tensor {
        let out_shape = &self.shapes[i + 1];
        match self.specs[i] {
            LayerSpec::Dense { inputs, outputs } => {
                let slot = self.slots[i].unwrap();
                let w = self.params[slot].data();
                let b = self.params[slot + 1].data();
                let xs = x.data();
                let mut y = b.to_vec();
                for (o, yo) in y.iter_mut().enumerate().take(outputs) {
                    let row = &w[o * inputs..(o + 1) * inputs];
                    *yo += row.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
                }
                Tensor::vector(y)
            }
            LayerSpec::Conv1d { in_channels, out_channels, kernel, stride } => {
                let slot = self.slots[i].unwrap();
                let w = self.params[slot].data();
                let b = self.params[slot + 1].data();
                let len_in = self.shapes[i][1];
                let len_out = out_shape[1];
                let xs = x.data();
                let mut y = vec![0.0; out_channels * len_out];
                for oc in 0..out_channels {
                    let yrow = &mut y[oc * len_out..(oc + 1) * len_out];
                    yrow.iter_mut().for_each(|v| *v = b[oc]);
                    for ic in 0..in_channels {
                        let xrow = &xs[ic * len_in..(ic + 1) * len_in];
                        let wk = &w[(oc * in_channels + ic) * kernel..(oc * in_channels + ic + 1) * kernel];
                        for (t, yv) in yrow.iter_mut().enumerate() {
                            let start = t * stride;
                            let window = &xrow[start..start + kernel];
                            *yv += wk.iter().zip(window).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                }
                Tensor::new(out_shape.clone(), y).expect("conv output shape")
            }
            LayerSpec::MaxPool1d { width } => {
                let (channels, len_in) = (self.shapes[i][0], self.shapes[i][1]);
                let len_out = out_shape[1];
                let xs = x.data();
                let mut y = Vec::with_capacity(channels * len_out);
                argmax.clear();
                for c in 0..channels {
                    for t in 0..len_out {
                        let base = c * len_in + t * width;
                        let mut best = base;
                        for j in base + 1..base + width {
                            if xs[j] > xs[best] {
                                best = j;
                            }
                        }
                        y.push(xs[best]);
                        argmax.push(best);
                    }
                }
                Tensor::new(out_shape.clone(), y).expect("pool output shape")
            }
            LayerSpec::Flatten => x.clone().reshape(out_shape.clone()).expect("flatten shape"),
            LayerSpec::Relu => {
                let y = x.data().iter().map(|&v| v.max(0.0)).collect();
                Tensor::new(out_shape.clone(), y).expect("relu shape")
            }
            LayerSpec::Tanh => {
                let y = x.data().iter().map(|&v| v.tanh()).collect();
                Tensor::new(out_shape.clone(), y).expect("tanh shape")
            }
            LayerSpec::Softmax => Tensor::vector(crate::loss::softmax(x.data())),
        }
    }

    /// Accumulates parameter gradients of layer `i` and returns `dL/d input`.
    fn layer_backward(
        &self,
        i: usize,
        cache: &ForwardCache,
        dy: &Tensor,
        grads: &mut Gradients,
        need_input_grad: bool,
    ) -> Tensor {
        let x = &cache.activations[i];
        let y = &cache.activations[i + 1];
        let in_shape = &self.shapes[i];
        match self.specs[i] {
            LayerSpec::Dense { inputs, outputs } => {
                let slot = self.slots[i].unwrap();
                let w = self.params[slot].data();
                let xs = x.data();
                let dys = dy.data();
                {
                    let gw = grads.tensors[slot].data_mut();
                    for o in 0..outputs {
                        let g = dys[o];
                        if g != 0.0 {
                            let row = &mut gw[o * inputs..(o + 1) * inputs];
                            row.iter_mut().zip(xs).for_each(|(a, b)| *a += g * b);
                        }
                    }
                }
                grads.tensors[slot + 1].data_mut().iter_mut().zip(dys).for_each(|(a, b)| *a += b);
                let mut dx = vec![0.0; inputs];
                if need_input_grad {
                    for o in 0..outputs {
                        let g = dys[o];
                        if g != 0.0 {
                            let row = &w[o * inputs..(o + 1) * inputs];
                            dx.iter_mut().zip(row).for_each(|(a, b)| *a += g * b);
                        }
                    }
                }
                Tensor::vector(dx)
            }
            LayerSpec::Conv1d { in_channels, out_channels, kernel, stride } => {
                let slot = self.slots[i].unwrap();
                let w = self.params[slot].data();
                let len_in = in_shape[1];
                let len_out = self.shapes[i + 1][1];
                let xs = x.data();
                let dys = dy.data();
                let mut dx = vec![0.0; in_channels * len_in];
                for oc in 0..out_channels {
                    let dyrow = &dys[oc * len_out..(oc + 1) * len_out];
                    grads.tensors[slot + 1].data_mut()[oc] += dyrow.iter().sum::<f64>();
                    for ic in 0..in_channels {
                        let xrow = &xs[ic * len_in..(ic + 1) * len_in];
                        let widx = (oc * in_channels + ic) * kernel;
                        {
                            let gw = &mut grads.tensors[slot].data_mut()[widx..widx + kernel];
                            for (k, gk) in gw.iter_mut().enumerate() {
                                let mut acc = 0.0;
                                for (t, &g) in dyrow.iter().enumerate() {
                                    acc += g * xrow[t * stride + k];
                                }
                                *gk += acc;
                            }
                        }
                        if need_input_grad {
                            let wk = &w[widx..widx + kernel];
                            let dxrow = &mut dx[ic * len_in..(ic + 1) * len_in];
                            for (t, &g) in dyrow.iter().enumerate() {
                                if g != 0.0 {
                                    let start = t * stride;
                                    dxrow[start..start + kernel]
                                        .iter_mut()
                                        .zip(wk)
                                        .for_each(|(a, b)| *a += g * b);
                                }
                            }
                        }
                    }
                }
                Tensor::new(in_shape.clone(), dx).expect("conv input shape")
            }
            LayerSpec::MaxPool1d { .. } => {
                let mut dx = vec![0.0; x.len()];
                for (&idx, &g) in cache.pool_argmax[i].iter().zip(dy.data()) {
                    dx[idx] += g;
                }
                Tensor::new(in_shape.clone(), dx).expect("pool input shape")
            }
            LayerSpec::Flatten => dy.clone().reshape(in_shape.clone()).expect("unflatten"),
            LayerSpec::Relu => {
                let dx = x
                    .data()
                    .iter()
                    .zip(dy.data())
                    .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                    .collect();
                Tensor::new(in_shape.clone(), dx).expect("relu shape")
            }
            LayerSpec::Tanh => {
                let dx = y.data().iter().zip(dy.data()).map(|(&t, &g)| g * (1.0 - t * t)).collect();
                Tensor::new(in_shape.clone(), dx).expect("tanh shape")
            }
            LayerSpec::Softmax => {
                let p = y.data();
                let dot: f64 = p.iter().zip(dy.data()).map(|(a, b)| a * b).sum();
                let dx = p.iter().zip(dy.data()).map(|(&pi, &g)| pi * (g - dot)).collect();
                Tensor::vector(dx)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weight_dense_outputs_bias() {
        let mut net = Network::zeros(&[LayerSpec::dense(3, 2)], &[3]).unwrap();
        net.params_mut()[1].data_mut().copy_from_slice(&[0.5, -1.5]);
        for input in [[1.0, 2.0, 3.0], [-7.0, 0.0, 1e3]] {
            let out = net.predict(&Tensor::vector(input.to_vec())).unwrap();
            assert_eq!(out.data(), &[0.5, -1.5]);
        }
    }

    #[test]
    fn softmax_layer_on_zeros() {
        let net = Network::zeros(&[LayerSpec::Softmax], &[4]).unwrap();
        let out = net.predict(&Tensor::vector(vec![0.0; 4])).unwrap();
        assert_eq!(out.data(), &[0.25; 4]);
    }

    #[test]
    fn conv_matches_hand_convolution() {
        let mut net = Network::zeros(&[LayerSpec::conv1d(1, 1, 2)], &[1, 3]).unwrap();
        net.params_mut()[0].data_mut().copy_from_slice(&[1.0, -1.0]);
        let input = Tensor::new(vec![1, 3], vec![3.0, 1.0, 4.0]).unwrap();
        let out = net.predict(&input).unwrap();
        assert_eq!(out.shape(), &[1, 2]);
        assert_eq!(out.data(), &[2.0, -3.0]);
    }

    #[test]
    fn dense_gradient_of_sum_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Network::new(&[LayerSpec::dense(3, 2)], &[3], &mut rng).unwrap();
        let x = vec![0.5, -2.0, 3.0];
        let (_, cache) = net.forward(&Tensor::vector(x.clone())).unwrap();
        let grads = net.backward(&cache, &Tensor::vector(vec![1.0, 1.0])).unwrap();
        assert_eq!(grads.tensors()[1].data(), &[1.0, 1.0]);
        assert_eq!(grads.tensors()[0].data(), &[0.5, -2.0, 3.0, 0.5, -2.0, 3.0]);
        assert_eq!(grads.tensors()[0].shape(), &[2, 3]);
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let specs = [LayerSpec::conv1d(2, 3, 3), LayerSpec::Relu, LayerSpec::Flatten, LayerSpec::dense(12, 2)];
        let net = Network::new(&specs, &[2, 6], &mut rng).unwrap();
        let input = Tensor::new(vec![2, 6], (0..12).map(|v| v as f64 * 0.1 - 0.5).collect()).unwrap();
        let (_, cache) = net.forward(&input).unwrap();
        let grads = net.backward(&cache, &Tensor::zeros(&[2])).unwrap();
        assert!(grads.is_zero());
    }

    #[test]
    fn incompatible_layers_rejected_with_index() {
        let specs = [LayerSpec::dense(4, 8), LayerSpec::Tanh, LayerSpec::dense(7, 2)];
        match Network::zeros(&specs, &[4]) {
            Err(NnError::Shape { layer, .. }) => assert_eq!(layer, 2),
            other => panic!("expected shape error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_input_shape_is_an_error() {
        let net = Network::zeros(&[LayerSpec::dense(4, 2)], &[4]).unwrap();
        assert!(net.predict(&Tensor::vector(vec![0.0; 3])).is_err());
    }

    #[test]
    fn stale_cache_detected() {
        let mut net = Network::zeros(&[LayerSpec::dense(2, 1)], &[2]).unwrap();
        let (_, cache) = net.forward(&Tensor::vector(vec![1.0, 1.0])).unwrap();
        net.params_mut()[0].data_mut()[0] = 1.0;
        assert!(matches!(
            net.backward(&cache, &Tensor::vector(vec![1.0])),
            Err(NnError::StaleCache { .. })
        ));
    }

    #[test]
    fn cache_from_other_network_rejected() {
        let a = Network::zeros(&[LayerSpec::dense(2, 1)], &[2]).unwrap();
        let b = Network::zeros(&[LayerSpec::dense(2, 2), LayerSpec::dense(2, 1)], &[2]).unwrap();
        let (_, cache) = b.forward(&Tensor::vector(vec![1.0, 1.0])).unwrap();
        assert!(a.backward(&cache, &Tensor::vector(vec![1.0])).is_err());
    }

    #[test]
    fn forward_is_repeatable_bit_for_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let specs = [LayerSpec::dense(5, 7), LayerSpec::Tanh, LayerSpec::dense(7, 3), LayerSpec::Softmax];
        let net = Network::new(&specs, &[5], &mut rng).unwrap();
        let input = Tensor::vector(vec![0.1, -0.2, 0.3, 0.9, -1.1]);
        let a = net.predict(&input).unwrap();
        let (b, _) = net.forward(&input).unwrap();
        assert_eq!(a.data(), b.data());
        let sum: f64 = a.data().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}
