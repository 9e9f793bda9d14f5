//! Textual checkpoints.
//!
//! ```text
//! bci-nn checkpoint v1
//! layer0.weight 16x8x5 0.0123 -0.4 ...
//! layer0.bias 16 0 0 ...
//! adam.m.layer0.weight 16x8x5 ...
//! adam.v.layer0.weight 16x8x5 ...
//! adam.step 1 42
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a reload is
//! bit-exact.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::network::Network;
use crate::tensor::Tensor;
use crate::{NnError, Result, ENGINE_VERSION};

fn header() -> String {
    format!("bci-nn checkpoint v{ENGINE_VERSION}")
}

fn write_record(out: &mut String, name: &str, tensor: &Tensor) {
    let dims: Vec<String> = tensor.shape().iter().map(usize::to_string).collect();
    out.push_str(name);
    out.push(' ');
    out.push_str(&dims.join("x"));
    for v in tensor.data() {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

/// Serialises parameters and optimizer state.
pub fn to_string(net: &Network) -> String {
    let mut out = header();
    out.push('\n');
    for (name, t) in net.param_names().iter().zip(net.params()) {
        write_record(&mut out, name, t);
    }
    let state = net.adam_state();
    for (name, t) in net.param_names().iter().zip(state.first_moments()) {
        write_record(&mut out, &format!("adam.m.{name}"), t);
    }
    for (name, t) in net.param_names().iter().zip(state.second_moments()) {
        write_record(&mut out, &format!("adam.v.{name}"), t);
    }
    let _ = writeln!(out, "adam.step 1 {}", state.step);
    out
}

pub fn write<W: Write>(net: &Network, mut writer: W) -> Result<()> {
    writer.write_all(to_string(net).as_bytes())?;
    Ok(())
}

pub fn save(net: &Network, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(net))?;
    Ok(())
}

/// Serialises arbitrary named tensors under the checkpoint header.
pub fn tensors_to_string(tensors: &[(&str, &Tensor)]) -> String {
    let mut out = header();
    out.push('\n');
    for (name, t) in tensors {
        write_record(&mut out, name, t);
    }
    out
}

/// Reads every record written by [`tensors_to_string`], in file order.
pub fn read_tensors<R: BufRead>(reader: R) -> Result<Vec<(String, Tensor)>> {
    let mut lines = reader.lines();
    let first = lines.next().ok_or_else(|| NnError::Checkpoint("empty checkpoint".into()))??;
    if first.trim() != header() {
        return Err(NnError::Checkpoint(format!("unsupported header `{}`", first.trim())));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let (name, dims, values) = parse_record(&line, lineno)?;
        let data = values
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| NnError::Checkpoint(format!("line {lineno}: bad value `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        let tensor = Tensor::new(dims, data).map_err(|e| NnError::Checkpoint(format!("line {lineno}: {e}")))?;
        out.push((name, tensor));
    }
    Ok(out)
}

fn parse_record(line: &str, lineno: usize) -> Result<(String, Vec<usize>, Vec<&str>)> {
    let bad = |why: &str| NnError::Checkpoint(format!("line {lineno}: {why}"));
    let mut parts = line.split_whitespace();
    let name = parts.next().ok_or_else(|| bad("empty record"))?.to_string();
    let dims = parts
        .next()
        .ok_or_else(|| bad("missing shape"))?
        .split('x')
        .map(|d| d.parse::<usize>().map_err(|_| bad("bad shape")))
        .collect::<Result<Vec<_>>>()?;
    Ok((name, dims, parts.collect()))
}

/// Loads a checkpoint into a network of matching topology.
pub fn read<R: BufRead>(net: &mut Network, reader: R) -> Result<()> {
    let mut lines = reader.lines();
    let first = lines.next().ok_or_else(|| NnError::Checkpoint("empty checkpoint".into()))??;
    if first.trim() != header() {
        return Err(NnError::Checkpoint(format!("unsupported header `{}`", first.trim())));
    }
    let names = net.param_names().to_vec();
    let count = names.len();
    let mut params: Vec<Option<Tensor>> = vec![None; count];
    let mut m: Vec<Option<Tensor>> = vec![None; count];
    let mut v: Vec<Option<Tensor>> = vec![None; count];
    let mut step = None;
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let (name, dims, values) = parse_record(&line, lineno)?;
        if name == "adam.step" {
            let raw = values.first().ok_or_else(|| NnError::Checkpoint("adam.step has no value".into()))?;
            step = Some(raw.parse::<u64>().map_err(|_| NnError::Checkpoint(format!("line {lineno}: bad step")))?);
            continue;
        }
        let data = values
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| NnError::Checkpoint(format!("line {lineno}: bad value `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        let tensor = Tensor::new(dims, data).map_err(|e| NnError::Checkpoint(format!("line {lineno}: {e}")))?;
        let (target, base) = if let Some(rest) = name.strip_prefix("adam.m.") {
            (&mut m, rest)
        } else if let Some(rest) = name.strip_prefix("adam.v.") {
            (&mut v, rest)
        } else {
            (&mut params, name.as_str())
        };
        let idx = names
            .iter()
            .position(|n| n == base)
            .ok_or_else(|| NnError::Checkpoint(format!("unknown tensor `{name}`")))?;
        if tensor.shape() != net.params()[idx].shape() {
            return Err(NnError::Checkpoint(format!(
                "`{name}` has shape {:?}, network expects {:?}",
                tensor.shape(),
                net.params()[idx].shape()
            )));
        }
        target[idx] = Some(tensor);
    }
    let collect = |slot: Vec<Option<Tensor>>, what: &str| -> Result<Vec<Tensor>> {
        slot.into_iter()
            .zip(&names)
            .map(|(t, n)| t.ok_or_else(|| NnError::Checkpoint(format!("missing {what}`{n}`"))))
            .collect()
    };
    let params = collect(params, "")?;
    let m = collect(m, "adam.m.")?;
    let v = collect(v, "adam.v.")?;
    let step = step.ok_or_else(|| NnError::Checkpoint("missing adam.step".into()))?;
    for (dst, src) in net.params_mut().iter_mut().zip(params) {
        *dst = src;
    }
    net.adam.m = m;
    net.adam.v = v;
    net.adam.step = step;
    Ok(())
}

pub fn load(net: &mut Network, path: &Path) -> Result<()> {
    let file = std::fs::File::open(path)?;
    read(net, std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adam::{AdamConfig, Direction};
    use crate::layer::LayerSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn trained_net() -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let specs = [LayerSpec::conv1d(2, 3, 2), LayerSpec::Tanh, LayerSpec::Flatten, LayerSpec::dense(9, 2)];
        let mut net = Network::new(&specs, &[2, 4], &mut rng).unwrap();
        let input = Tensor::new(vec![2, 4], vec![0.1, 0.2, -0.3, 0.4, 1.0, -1.0, 0.5, 0.25]).unwrap();
        let (_, cache) = net.forward(&input).unwrap();
        let g = net.backward(&cache, &Tensor::vector(vec![1.0, -1.0])).unwrap();
        net.adam_step(&g, &AdamConfig::default(), Direction::Descend).unwrap();
        net
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let net = trained_net();
        let text = to_string(&net);
        let mut restored = Network::zeros(net.specs(), net.input_shape()).unwrap();
        read(&mut restored, text.as_bytes()).unwrap();
        assert_eq!(restored.params(), net.params());
        assert_eq!(restored.adam_state(), net.adam_state());
        assert_eq!(to_string(&restored), text);
    }

    #[test]
    fn header_carries_version() {
        let text = to_string(&trained_net());
        assert_eq!(text.lines().next().unwrap(), "bci-nn checkpoint v1");
        assert!(text.contains("\nlayer0.weight 3x2x2 "));
    }

    #[test]
    fn mismatched_topology_rejected() {
        let text = to_string(&trained_net());
        let mut other = Network::zeros(&[LayerSpec::conv1d(2, 4, 2)], &[2, 4]).unwrap();
        assert!(read(&mut other, text.as_bytes()).is_err());
    }

    #[test]
    fn bad_header_rejected() {
        let mut net = trained_net();
        assert!(read(&mut net, "something else\n".as_bytes()).is_err());
        assert!(read(&mut net, "".as_bytes()).is_err());
    }

    #[test]
    fn named_tensors_round_trip() {
        let a = Tensor::new(vec![2, 2], vec![0.1, -2.5, 1e-300, 3.0]).unwrap();
        let b = Tensor::vector(vec![7.0]);
        let text = tensors_to_string(&[("w", &a), ("b", &b)]);
        let back = read_tensors(text.as_bytes()).unwrap();
        assert_eq!(back, vec![("w".to_string(), a), ("b".to_string(), b)]);
    }
}
