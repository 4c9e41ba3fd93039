//! One-hidden-layer perceptron mixing bijective (`tanh`) and non-bijective
//! (`1 - tanh²`) hidden nodes, with an identity output node:
//!
//! ```text
//! O = W2 · [tanh(W1 x + b1) ; 1 - tanh²(W1' x + b1')] + b2
//! ```
//!
//! The non-bijective nodes occupy the last `round(mix_ratio * n_hidden)`
//! hidden positions. An optional connection mask removes individual
//! input-to-hidden weights; masked weights are structurally zero.
//!
//! # Parameter layout
//!
//! The flat parameter vector is, in order: hidden weights (row-major,
//! `n_hidden × n_inputs`, masked entries included as zeros), hidden biases
//! (`n_hidden`), output weights (`n_hidden`), output bias (1).
//!
//! # Binary format
//!
//! [`encode`] writes little-endian fields:
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0 | 4 | magic `b"HTFN"` |
//! | 4 | 2 | format version (`u16`, currently 1) |
//! | 6 | 2 | flags (`u16`): bit 0 time index, bit 1 scaled non-bijective, bit 2 mask present |
//! | 8 | 4 | `n_inputs` (`u32`) |
//! | 12 | 4 | `n_hidden` (`u32`) |
//! | 16 | 8 | `mix_ratio` (`f64`) |
//! | 24 | 4 | parameter count (`u32`) |
//! | 28 | `ceil(h·n / 8)` | mask bits if flagged; entry `k = j·n + i` is bit `k % 8` of byte `k / 8` |
//! | … | 8 each | parameters (`f64`) in the flat layout |

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::series::LagVector;

/// Hidden transfer function family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    /// `tanh(z)`
    Bijective,
    /// `1 - tanh²(z)`, the derivative of `tanh`.
    NonBijective,
}

/// Evaluates a hidden transfer function.
pub fn hidden_activation(kind: Activation, z: f64) -> f64 {
    let t = z.tanh();
    match kind {
        Activation::Bijective => t,
        Activation::NonBijective => 1.0 - t * t,
    }
}

/// Value and derivative of a node's transfer function at `z`.
#[inline]
fn activate(kind: Activation, scaled: bool, z: f64) -> (f64, f64) {
    let t = z.tanh();
    let sech2 = 1.0 - t * t;
    match (kind, scaled) {
        (Activation::Bijective, _) => (t, sech2),
        (Activation::NonBijective, false) => (sech2, -2.0 * t * sech2),
        (Activation::NonBijective, true) => (2.0 * sech2 - 1.0, -4.0 * t * sech2),
    }
}

/// `tanh(u) - tanh²(u·delta) + 1`: output of a tanh node paired with a
/// non-bijective node whose pre-activation is `delta` times larger.
pub fn combined_response(u: f64, delta: f64) -> f64 {
    let s = (u * delta).tanh();
    u.tanh() - s * s + 1.0
}

/// Which inputs feed which hidden node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionMask {
    n_hidden: usize,
    n_inputs: usize,
    bits: Vec<bool>,
}

impl ConnectionMask {
    /// `bits` is row-major `n_hidden × n_inputs`; `true` keeps the connection.
    pub fn new(n_hidden: usize, n_inputs: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != n_hidden * n_inputs {
            return Err(Error::DimensionMismatch {
                expected: n_hidden * n_inputs,
                got: bits.len(),
            });
        }
        if let Some(j) = (0..n_hidden).find(|j| !bits[j * n_inputs..(j + 1) * n_inputs].contains(&true)) {
            return Err(Error::InvalidConfig(format!(
                "hidden node {j} has no remaining connections"
            )));
        }
        Ok(Self {
            n_hidden,
            n_inputs,
            bits,
        })
    }

    pub fn full(n_hidden: usize, n_inputs: usize) -> Self {
        Self {
            n_hidden,
            n_inputs,
            bits: vec![true; n_hidden * n_inputs],
        }
    }

    pub fn is_connected(&self, hidden: usize, input: usize) -> bool {
        self.bits[hidden * self.n_inputs + input]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// Network architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    n_inputs: usize,
    n_hidden: usize,
    mix_ratio: f64,
    mask: Option<ConnectionMask>,
    time_index_enabled: bool,
    scaled_non_bijective: bool,
}

impl NetworkConfig {
    pub fn new(n_inputs: usize, n_hidden: usize, mix_ratio: f64) -> Result<Self> {
        if n_inputs == 0 || n_hidden == 0 {
            return Err(Error::InvalidConfig(format!(
                "need at least one input and one hidden node, got {n_inputs} and {n_hidden}"
            )));
        }
        if !(0.0..=1.0).contains(&mix_ratio) {
            return Err(Error::InvalidConfig(format!(
                "mix ratio {mix_ratio} outside [0, 1]"
            )));
        }
        Ok(Self {
            n_inputs,
            n_hidden,
            mix_ratio,
            mask: None,
            time_index_enabled: false,
            scaled_non_bijective: false,
        })
    }

    pub fn with_mask(mut self, mask: ConnectionMask) -> Result<Self> {
        if mask.n_hidden != self.n_hidden || mask.n_inputs != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.n_hidden * self.n_inputs,
                got: mask.n_hidden * mask.n_inputs,
            });
        }
        self.mask = Some(mask);
        Ok(self)
    }

    /// Marks the last input as the hour-of-prediction index.
    pub fn with_time_index(mut self, enabled: bool) -> Self {
        self.time_index_enabled = enabled;
        self
    }

    /// Uses `2(1 - tanh²) - 1` (range `(-1, 1]`) for the non-bijective nodes.
    pub fn with_scaled_non_bijective(mut self, scaled: bool) -> Self {
        self.scaled_non_bijective = scaled;
        self
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn mix_ratio(&self) -> f64 {
        self.mix_ratio
    }

    pub fn mask(&self) -> Option<&ConnectionMask> {
        self.mask.as_ref()
    }

    pub fn time_index_enabled(&self) -> bool {
        self.time_index_enabled
    }

    pub fn scaled_non_bijective(&self) -> bool {
        self.scaled_non_bijective
    }

    pub fn n_non_bijective(&self) -> usize {
        (self.mix_ratio * self.n_hidden as f64).round() as usize
    }

    /// Transfer function of hidden node `j`.
    pub fn kind(&self, j: usize) -> Activation {
        if j >= self.n_hidden - self.n_non_bijective() {
            Activation::NonBijective
        } else {
            Activation::Bijective
        }
    }

    pub fn is_connected(&self, hidden: usize, input: usize) -> bool {
        self.mask
            .as_ref()
            .is_none_or(|m| m.is_connected(hidden, input))
    }

    fn fan_in(&self, hidden: usize) -> usize {
        (0..self.n_inputs)
            .filter(|&i| self.is_connected(hidden, i))
            .count()
    }

    /// Length of the flat parameter vector.
    pub fn n_params(&self) -> usize {
        self.n_hidden * self.n_inputs + 2 * self.n_hidden + 1
    }

    pub fn output_bias_index(&self) -> usize {
        self.n_params() - 1
    }

    pub fn output_weight_index(&self, j: usize) -> usize {
        self.n_hidden * (self.n_inputs + 1) + j
    }

    pub fn hidden_bias_index(&self, j: usize) -> usize {
        self.n_hidden * self.n_inputs + j
    }

    pub fn hidden_weight_index(&self, j: usize, i: usize) -> usize {
        j * self.n_inputs + i
    }
}

/// Trainable weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// Row-major `n_hidden × n_inputs`.
    pub w_hidden: Vec<f64>,
    pub b_hidden: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: f64,
}

impl Parameters {
    pub fn zeros(config: &NetworkConfig) -> Self {
        let h = config.n_hidden;
        Self {
            w_hidden: vec![0.0; h * config.n_inputs],
            b_hidden: vec![0.0; h],
            w_out: vec![0.0; h],
            b_out: 0.0,
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w_hidden.len() + 2 * self.b_hidden.len() + 1);
        v.extend_from_slice(&self.w_hidden);
        v.extend_from_slice(&self.b_hidden);
        v.extend_from_slice(&self.w_out);
        v.push(self.b_out);
        v
    }

    pub fn from_flat(config: &NetworkConfig, flat: &[f64]) -> Result<Self> {
        if flat.len() != config.n_params() {
            return Err(Error::DimensionMismatch {
                expected: config.n_params(),
                got: flat.len(),
            });
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite parameter".into()));
        }
        let hw = config.n_hidden * config.n_inputs;
        let h = config.n_hidden;
        Ok(Self {
            w_hidden: flat[..hw].to_vec(),
            b_hidden: flat[hw..hw + h].to_vec(),
            w_out: flat[hw + h..hw + 2 * h].to_vec(),
            b_out: flat[hw + 2 * h],
        })
    }

    fn check(&self, config: &NetworkConfig) -> Result<()> {
        let h = config.n_hidden;
        let got = self.w_hidden.len() + self.b_hidden.len() + self.w_out.len() + 1;
        if self.w_hidden.len() != h * config.n_inputs || self.b_hidden.len() != h || self.w_out.len() != h {
            return Err(Error::DimensionMismatch {
                expected: config.n_params(),
                got,
            });
        }
        Ok(())
    }
}

/// Pre-activation of hidden node `j`.
#[inline]
fn hidden_input(config: &NetworkConfig, params: &Parameters, j: usize, x: &[f64]) -> f64 {
    let row = &params.w_hidden[j * config.n_inputs..(j + 1) * config.n_inputs];
    let dot: f64 = match &config.mask {
        None => row.iter().zip(x).map(|(w, v)| w * v).sum(),
        Some(m) => row
            .iter()
            .zip(x)
            .enumerate()
            .filter(|(i, _)| m.is_connected(j, *i))
            .map(|(_, (w, v))| w * v)
            .sum(),
    };
    dot + params.b_hidden[j]
}

#[inline]
fn forward_unchecked(config: &NetworkConfig, params: &Parameters, x: &[f64]) -> f64 {
    let mut out = params.b_out;
    for j in 0..config.n_hidden {
        let z = hidden_input(config, params, j, x);
        out += params.w_out[j] * activate(config.kind(j), config.scaled_non_bijective, z).0;
    }
    out
}

/// Network output for one input vector (lags then optional time index).
pub fn forward(config: &NetworkConfig, params: &Parameters, input: &[f64]) -> Result<f64> {
    params.check(config)?;
    if input.len() != config.n_inputs {
        return Err(Error::DimensionMismatch {
            expected: config.n_inputs,
            got: input.len(),
        });
    }
    Ok(forward_unchecked(config, params, input))
}

pub fn forward_lags(config: &NetworkConfig, params: &Parameters, input: &LagVector) -> Result<f64> {
    forward(config, params, &input.to_input())
}

fn check_batch(config: &NetworkConfig, inputs: &[f64]) -> Result<usize> {
    let n = config.n_inputs;
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !inputs.len().is_multiple_of(n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: inputs.len() % n,
        });
    }
    Ok(inputs.len() / n)
}

/// Outputs for a row-major batch of inputs.
pub fn predict_batch(config: &NetworkConfig, params: &Parameters, inputs: &[f64]) -> Result<Vec<f64>> {
    params.check(config)?;
    check_batch(config, inputs)?;
    Ok(inputs
        .chunks_exact(config.n_inputs)
        .map(|x| forward_unchecked(config, params, x))
        .collect())
}

/// Jacobian of the output with respect to the flat parameter vector, one row
/// per sample of the row-major batch `inputs`. Also returns the outputs.
pub fn jacobian_flat(
    config: &NetworkConfig,
    params: &Parameters,
    inputs: &[f64],
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    params.check(config)?;
    let n_samples = check_batch(config, inputs)?;
    let (h, n) = (config.n_hidden, config.n_inputs);
    let mut jac = DMatrix::zeros(n_samples, config.n_params());
    let mut outputs = Vec::with_capacity(n_samples);
    let mut row = vec![0.0; config.n_params()];
    for (s, x) in inputs.chunks_exact(n).enumerate() {
        let mut out = params.b_out;
        for j in 0..h {
            let z = hidden_input(config, params, j, x);
            let (a, da) = activate(config.kind(j), config.scaled_non_bijective, z);
            out += params.w_out[j] * a;
            let g = params.w_out[j] * da;
            for (i, xi) in x.iter().enumerate() {
                row[config.hidden_weight_index(j, i)] =
                    if config.is_connected(j, i) { g * xi } else { 0.0 };
            }
            row[config.hidden_bias_index(j)] = g;
            row[config.output_weight_index(j)] = a;
        }
        row[config.output_bias_index()] = 1.0;
        for (q, v) in row.iter().enumerate() {
            jac[(s, q)] = *v;
        }
        outputs.push(out);
    }
    Ok((jac, outputs))
}

/// Jacobian (`n_samples × n_params`) for a batch of lag vectors.
pub fn jacobian(config: &NetworkConfig, params: &Parameters, batch: &[LagVector]) -> Result<DMatrix<f64>> {
    let mut flat = Vec::with_capacity(batch.len() * config.n_inputs);
    for lv in batch {
        if lv.len() != config.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: config.n_inputs,
                got: lv.len(),
            });
        }
        flat.extend(lv.to_input());
    }
    Ok(jacobian_flat(config, params, &flat)?.0)
}

/// Seeded random parameters. Each node draws its weights and bias uniformly
/// from `[-s, s]` with `s = 1 / sqrt(fan_in)`; masked weights are zero.
pub fn init_weights(config: &NetworkConfig, seed: u64) -> Parameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Parameters::zeros(config);
    for j in 0..config.n_hidden {
        let s = 1.0 / (config.fan_in(j) as f64).sqrt();
        for i in 0..config.n_inputs {
            if config.is_connected(j, i) {
                params.w_hidden[j * config.n_inputs + i] = rng.random_range(-s..=s);
            }
        }
        params.b_hidden[j] = rng.random_range(-s..=s);
    }
    let s = 1.0 / (config.n_hidden as f64).sqrt();
    for w in &mut params.w_out {
        *w = rng.random_range(-s..=s);
    }
    params.b_out = rng.random_range(-s..=s);
    params
}

const MAGIC: &[u8; 4] = b"HTFN";
const VERSION: u16 = 1;

/// Serializes a network in the documented binary layout.
pub fn encode(config: &NetworkConfig, params: &Parameters) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let flags = u16::from(config.time_index_enabled)
        | (u16::from(config.scaled_non_bijective) << 1)
        | (u16::from(config.mask.is_some()) << 2);
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&(config.n_inputs as u32).to_le_bytes());
    out.extend_from_slice(&(config.n_hidden as u32).to_le_bytes());
    out.extend_from_slice(&config.mix_ratio.to_le_bytes());
    out.extend_from_slice(&(config.n_params() as u32).to_le_bytes());
    if let Some(mask) = &config.mask {
        let mut packed = vec![0u8; mask.bits.len().div_ceil(8)];
        for (k, _) in mask.bits.iter().enumerate().filter(|(_, b)| **b) {
            packed[k / 8] |= 1 << (k % 8);
        }
        out.extend_from_slice(&packed);
    }
    for v in params.to_flat() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Little-endian cursor over a byte slice.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Decode(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

pub(crate) fn decode_from(reader: &mut ByteReader<'_>) -> Result<(NetworkConfig, Parameters)> {
    if reader.take(4)? != MAGIC {
        return Err(Error::Decode("bad magic".into()));
    }
    let version = reader.u16()?;
    if version != VERSION {
        return Err(Error::Decode(format!("unsupported version {version}")));
    }
    let flags = reader.u16()?;
    let n_inputs = reader.u32()? as usize;
    let n_hidden = reader.u32()? as usize;
    let mix_ratio = reader.f64()?;
    let n_params = reader.u32()? as usize;
    let mut config = NetworkConfig::new(n_inputs, n_hidden, mix_ratio)?
        .with_time_index(flags & 1 != 0)
        .with_scaled_non_bijective(flags & 2 != 0);
    if flags & 4 != 0 {
        let n_bits = n_inputs * n_hidden;
        let packed = reader.take(n_bits.div_ceil(8))?;
        let bits = (0..n_bits).map(|k| packed[k / 8] >> (k % 8) & 1 == 1).collect();
        config = config.with_mask(ConnectionMask::new(n_hidden, n_inputs, bits)?)?;
    }
    if n_params != config.n_params() {
        return Err(Error::Decode(format!(
            "parameter count {n_params} does not match architecture ({})",
            config.n_params()
        )));
    }
    let flat = (0..n_params).map(|_| reader.f64()).collect::<Result<Vec<_>>>()?;
    let params = Parameters::from_flat(&config, &flat)?;
    Ok((config, params))
}

/// Inverse of [`encode`].
pub fn decode(bytes: &[u8]) -> Result<(NetworkConfig, Parameters)> {
    let mut reader = ByteReader::new(bytes);
    let out = decode_from(&mut reader)?;
    if !reader.is_done() {
        return Err(Error::Decode(format!(
            "{} trailing bytes",
            bytes.len() - reader.position()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair_net() -> (NetworkConfig, Parameters) {
        let config = NetworkConfig::new(1, 2, 0.5).unwrap();
        let params = Parameters {
            w_hidden: vec![1.0, 1.0],
            b_hidden: vec![0.0, 0.0],
            w_out: vec![1.0, 1.0],
            b_out: 0.0,
        };
        (config, params)
    }

    #[test]
    fn activation_values() {
        assert_eq!(hidden_activation(Activation::Bijective, 0.0), 0.0);
        assert_eq!(hidden_activation(Activation::NonBijective, 0.0), 1.0);
        let t1 = 1f64.tanh();
        assert!((hidden_activation(Activation::NonBijective, 1.0) - (1.0 - t1 * t1)).abs() < 1e-15);
        assert!((hidden_activation(Activation::NonBijective, 1.0) - 0.419974).abs() < 1e-6);
    }

    #[test]
    fn hidden_node_layout() {
        let c = NetworkConfig::new(3, 5, 0.4).unwrap();
        assert_eq!(c.n_non_bijective(), 2);
        let kinds: Vec<_> = (0..5).map(|j| c.kind(j)).collect();
        assert_eq!(kinds[..3], [Activation::Bijective; 3]);
        assert_eq!(kinds[3..], [Activation::NonBijective; 2]);
        assert_eq!(NetworkConfig::new(3, 5, 0.0).unwrap().n_non_bijective(), 0);
        assert_eq!(NetworkConfig::new(3, 5, 1.0).unwrap().n_non_bijective(), 5);
        assert_eq!(NetworkConfig::new(3, 5, 0.2).unwrap().n_non_bijective(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(NetworkConfig::new(0, 2, 0.0).is_err());
        assert!(NetworkConfig::new(2, 0, 0.0).is_err());
        assert!(NetworkConfig::new(2, 2, 1.5).is_err());
        assert!(ConnectionMask::new(2, 2, vec![true, false, false, false]).is_err());
        assert!(ConnectionMask::new(2, 2, vec![true; 3]).is_err());
        let c = NetworkConfig::new(2, 3, 0.0).unwrap();
        assert!(c.with_mask(ConnectionMask::full(2, 2)).is_err());
    }

    #[test]
    fn forward_examples() {
        let c = NetworkConfig::new(3, 2, 0.0).unwrap();
        let mut p = Parameters::zeros(&c);
        p.b_out = 3.5;
        assert_eq!(forward(&c, &p, &[0.3, -1.0, 2.0]).unwrap(), 3.5);

        let c = NetworkConfig::new(2, 1, 1.0).unwrap();
        let mut p = Parameters::zeros(&c);
        p.w_out[0] = 2.0;
        assert_eq!(forward(&c, &p, &[5.0, -5.0]).unwrap(), 2.0);

        let (c, p) = pair_net();
        let t = 0.5f64.tanh();
        let expected = t + 1.0 - t * t;
        let got = forward(&c, &p, &[0.5]).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 1.248565).abs() < 1e-6);

        assert!(matches!(
            forward(&c, &p, &[0.5, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn masked_weights_are_ignored() {
        let mask = ConnectionMask::new(2, 2, vec![true, true, false, true]).unwrap();
        let c = NetworkConfig::new(2, 2, 0.5).unwrap().with_mask(mask).unwrap();
        let mut p = init_weights(&c, 4);
        assert_eq!(p.w_hidden[2], 0.0);
        let before = forward(&c, &p, &[0.7, 0.2]).unwrap();
        p.w_hidden[2] = 10.0;
        assert_eq!(forward(&c, &p, &[0.7, 0.2]).unwrap(), before);
        let jac = jacobian_flat(&c, &p, &[0.7, 0.2, -0.1, 0.4]).unwrap().0;
        assert!(jac.column(2).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn jacobian_structural_columns() {
        let c = NetworkConfig::new(3, 4, 0.5).unwrap();
        let p = init_weights(&c, 9);
        let inputs = [0.1, -0.4, 0.9, 0.3, 0.3, -0.2, -1.0, 0.5, 0.0];
        let (jac, out) = jacobian_flat(&c, &p, &inputs).unwrap();
        assert!(jac.column(c.output_bias_index()).iter().all(|v| *v == 1.0));
        for (s, x) in inputs.chunks(3).enumerate() {
            assert_eq!(out[s], forward(&c, &p, x).unwrap());
            for j in 0..4 {
                let z = hidden_input(&c, &p, j, x);
                let a = hidden_activation(c.kind(j), z);
                assert_eq!(jac[(s, c.output_weight_index(j))], a);
            }
        }
        assert_eq!(jacobian_flat(&c, &p, &[]).unwrap_err(), Error::EmptyDataset);
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let c = NetworkConfig::new(5, 6, 0.5).unwrap();
        let a = init_weights(&c, 17);
        assert_eq!(a, init_weights(&c, 17));
        assert_ne!(a, init_weights(&c, 18));
        assert!(a.to_flat().iter().all(|w| w.abs() <= 1.0));
        for w in &a.w_hidden {
            assert!(w.abs() <= 1.0 / 5f64.sqrt());
        }
    }

    #[test]
    fn combined_response_examples() {
        for d in [0.2, 0.5, 0.8, 1.0, 1.2, 2.0, 5.0] {
            assert_eq!(combined_response(0.0, d), 1.0);
        }
        let u_star = 0.5f64.atanh();
        assert!((u_star - 0.549306).abs() < 1e-6);
        assert!((combined_response(u_star, 1.0) - 1.25).abs() < 1e-12);
        for u in [-3.0, -0.4, 0.0, 0.7, 2.5] {
            assert_eq!(combined_response(u, 0.0), u.tanh() + 1.0);
        }
    }

    #[test]
    fn scaled_variant_range() {
        let c = NetworkConfig::new(1, 1, 1.0).unwrap().with_scaled_non_bijective(true);
        let mut p = Parameters::zeros(&c);
        p.w_hidden[0] = 1.0;
        p.w_out[0] = 1.0;
        assert_eq!(forward(&c, &p, &[0.0]).unwrap(), 1.0);
        assert!((forward(&c, &p, &[30.0]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn encode_decode_masked() {
        let mut bits = vec![true; 4 * 3];
        bits[3 * 3] = false;
        bits[3 * 3 + 1] = false;
        let mask = ConnectionMask::new(4, 3, bits).unwrap();
        let c = NetworkConfig::new(3, 4, 0.25)
            .unwrap()
            .with_mask(mask)
            .unwrap()
            .with_time_index(true);
        let p = init_weights(&c, 3);
        let bytes = encode(&c, &p);
        assert_eq!(&bytes[..4], b"HTFN");
        assert_eq!(bytes.len(), 28 + 2 + 8 * c.n_params());
        let (c2, p2) = decode(&bytes).unwrap();
        assert_eq!(c2, c);
        assert_eq!(p2, p);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
    }

    proptest! {
        #[test]
        fn flat_round_trip(n in 1usize..6, h in 1usize..6, seed in any::<u64>()) {
            let c = NetworkConfig::new(n, h, 0.5).unwrap();
            let p = init_weights(&c, seed);
            let flat = p.to_flat();
            prop_assert_eq!(flat.len(), c.n_params());
            let back = Parameters::from_flat(&c, &flat).unwrap();
            prop_assert_eq!(back.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            flat.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
            let (c2, p2) = decode(&encode(&c, &p)).unwrap();
            prop_assert_eq!(c2, c);
            prop_assert_eq!(p2, p);
        }

        #[test]
        fn non_bijective_range(z in -50.0..50.0f64) {
            let v = hidden_activation(Activation::NonBijective, z);
            prop_assert!(v > 0.0 || z.abs() > 18.0);
            prop_assert!(v <= 1.0);
        }

        #[test]
        fn combined_response_symmetry(u in -6.0..6.0f64, delta in -5.0..5.0f64) {
            let s = (u * delta).tanh();
            let sum = combined_response(-u, delta) + combined_response(u, delta);
            prop_assert!((sum - 2.0 * (1.0 - s * s)).abs() < 1e-12);
        }
    }
}
