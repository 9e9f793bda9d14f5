use std::fmt;
use std::str::FromStr;

use crate::NnError;

/// One layer of a feed-forward stack.
///
/// Shapes: dense takes `[in]`, conv1d and maxpool1d take `[channels, length]`.
/// Convolution is valid (no padding); pooling is non-overlapping and drops a
/// trailing remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Dense { inputs: usize, outputs: usize },
    Conv1d { in_channels: usize, out_channels: usize, kernel: usize, stride: usize },
    Relu,
    Tanh,
    Softmax,
    Flatten,
    MaxPool1d { width: usize },
}

impl LayerSpec {
    pub fn dense(inputs: usize, outputs: usize) -> Self {
        LayerSpec::Dense { inputs, outputs }
    }

    pub fn conv1d(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        LayerSpec::Conv1d { in_channels, out_channels, kernel, stride: 1 }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Dense { .. } | LayerSpec::Conv1d { .. })
    }

    /// Weight and bias shapes for parameterised layers.
    pub fn param_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match *self {
            LayerSpec::Dense { inputs, outputs } => Some((vec![outputs, inputs], vec![outputs])),
            LayerSpec::Conv1d { in_channels, out_channels, kernel, .. } => {
                Some((vec![out_channels, in_channels, kernel], vec![out_channels]))
            }
            _ => None,
        }
    }

    /// Fan-in and fan-out used for Glorot-uniform initialisation.
    pub fn fans(&self) -> Option<(usize, usize)> {
        match *self {
            LayerSpec::Dense { inputs, outputs } => Some((inputs, outputs)),
            LayerSpec::Conv1d { in_channels, out_channels, kernel, .. } => {
                Some((in_channels * kernel, out_channels * kernel))
            }
            _ => None,
        }
    }

    /// Output shape for a given input shape; `index` is used in error messages.
    pub fn output_shape(&self, index: usize, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let err = |detail: String| NnError::Shape { layer: index, detail };
        match *self {
            LayerSpec::Dense { inputs, outputs } => {
                if input != [inputs] {
                    return Err(err(format!("dense expects [{inputs}], got {input:?}")));
                }
                Ok(vec![outputs])
            }
            LayerSpec::Conv1d { in_channels, out_channels, kernel, stride } => {
                if kernel == 0 || stride == 0 || in_channels == 0 || out_channels == 0 {
                    return Err(err("conv1d sizes must be positive".into()));
                }
                match input {
                    [c, len] if *c == in_channels && *len >= kernel => {
                        Ok(vec![out_channels, (len - kernel) / stride + 1])
                    }
                    _ => Err(err(format!(
                        "conv1d expects [{in_channels}, >= {kernel}], got {input:?}"
                    ))),
                }
            }
            LayerSpec::MaxPool1d { width } => match input {
                [c, len] if width > 0 && *len >= width => Ok(vec![*c, len / width]),
                _ => Err(err(format!("maxpool1d({width}) cannot pool {input:?}"))),
            },
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            LayerSpec::Softmax => {
                if input.len() != 1 {
                    return Err(err(format!("softmax expects a vector, got {input:?}")));
                }
                Ok(input.to_vec())
            }
            LayerSpec::Relu | LayerSpec::Tanh => Ok(input.to_vec()),
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LayerSpec::Dense { inputs, outputs } => write!(f, "dense {inputs} {outputs}"),
            LayerSpec::Conv1d { in_channels, out_channels, kernel, stride } => {
                write!(f, "conv1d {in_channels} {out_channels} {kernel} {stride}")
            }
            LayerSpec::Relu => write!(f, "relu"),
            LayerSpec::Tanh => write!(f, "tanh"),
            LayerSpec::Softmax => write!(f, "softmax"),
            LayerSpec::Flatten => write!(f, "flatten"),
            LayerSpec::MaxPool1d { width } => write!(f, "maxpool1d {width}"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let bad = || NnError::Spec(s.to_string());
        let num = |i: usize| -> Result<usize, NnError> {
            parts.get(i).ok_or_else(bad)?.parse().map_err(|_| bad())
        };
        let spec = match parts.first().copied() {
            Some("dense") if parts.len() == 3 => LayerSpec::dense(num(1)?, num(2)?),
            Some("conv1d") if parts.len() == 4 || parts.len() == 5 => LayerSpec::Conv1d {
                in_channels: num(1)?,
                out_channels: num(2)?,
                kernel: num(3)?,
                stride: if parts.len() == 5 { num(4)? } else { 1 },
            },
            Some("maxpool1d") if parts.len() == 2 => LayerSpec::MaxPool1d { width: num(1)? },
            Some("relu") if parts.len() == 1 => LayerSpec::Relu,
            Some("tanh") if parts.len() == 1 => LayerSpec::Tanh,
            Some("softmax") if parts.len() == 1 => LayerSpec::Softmax,
            Some("flatten") if parts.len() == 1 => LayerSpec::Flatten,
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}
