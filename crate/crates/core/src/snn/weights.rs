// SPDX-License-Identifier: Apache-2.0
//! Weight bundles and the `P2MW` binary format.
//!
//! ```text
//! "P2MW" | version u16 | layer count u32
//! per layer:  kind u8 (0 = conv+BN, 1 = linear) | rank u32 | dims u32 × rank
//! per layer:  weight values, bias[out], and for conv γ, β, μ, σ² [out] then ε
//! ```
//!
//! All integers and `f64` values are little-endian; tensors are row-major.

use rand::Rng;

use super::{BatchNorm, LayerSpec, NetworkSpec};
use crate::error::{Error, Result};
use crate::Scalar;

pub const WEIGHTS_MAGIC: [u8; 4] = *b"P2MW";
pub const WEIGHTS_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum LayerWeights<T> {
    /// `weight` is `[out][in][k][k]`.
    Conv {
        out_channels: usize,
        in_channels: usize,
        k: usize,
        weight: Vec<T>,
        bias: Vec<T>,
        bn: BatchNorm<T>,
    },
    /// `weight` is `[out][in]`.
    Linear {
        out_features: usize,
        in_features: usize,
        weight: Vec<T>,
        bias: Vec<T>,
    },
}

impl<T: Scalar> LayerWeights<T> {
    fn dims(&self) -> Vec<usize> {
        match self {
            LayerWeights::Conv {
                out_channels,
                in_channels,
                k,
                ..
            } => vec![*out_channels, *in_channels, *k, *k],
            LayerWeights::Linear {
                out_features,
                in_features,
                ..
            } => vec![*out_features, *in_features],
        }
    }
}

/// Parameters of every weighted layer, in network order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBundle<T> {
    pub layers: Vec<LayerWeights<T>>,
}

impl<T: Scalar> WeightBundle<T> {
    /// Uniform He-style initialisation scaled by `gain`, identity batch norm.
    pub fn random<R: Rng + ?Sized>(spec: &NetworkSpec, gain: f64, rng: &mut R) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut layers = Vec::new();
        let mut in_shape = super::Shape::Map {
            c: spec.input.0,
            h: spec.input.1,
            w: spec.input.2,
        };
        for (layer, out_shape) in spec.layers.iter().zip(&shapes) {
            match (*layer, in_shape) {
                (LayerSpec::Conv { out_channels, k, .. }, super::Shape::Map { c, .. }) => {
                    let fan_in = c * k * k;
                    let a = gain * (6.0 / fan_in as f64).sqrt();
                    layers.push(LayerWeights::Conv {
                        out_channels,
                        in_channels: c,
                        k,
                        weight: (0..out_channels * fan_in).map(|_| T::of(rng.random_range(-a..a))).collect(),
                        bias: vec![T::zero(); out_channels],
                        bn: BatchNorm {
                            eps: T::of(1e-5),
                            ..BatchNorm::identity(out_channels)
                        },
                    });
                }
                (LayerSpec::Linear { out_features }, super::Shape::Flat(n)) => {
                    let a = gain * (6.0 / n as f64).sqrt();
                    layers.push(LayerWeights::Linear {
                        out_features,
                        in_features: n,
                        weight: (0..out_features * n).map(|_| T::of(rng.random_range(-a..a))).collect(),
                        bias: vec![T::zero(); out_features],
                    });
                }
                _ => {}
            }
            in_shape = *out_shape;
        }
        Ok(WeightBundle { layers })
    }

    /// Check that every weighted layer of `spec` has a matching entry.
    pub fn check_against(&self, spec: &NetworkSpec) -> Result<()> {
        let shapes = spec.shapes()?;
        let (c, h, w) = spec.input;
        let mut in_shape = super::Shape::Map { c, h, w };
        let mut expected = Vec::new();
        for (i, (layer, out)) in spec.layers.iter().zip(&shapes).enumerate() {
            match (*layer, in_shape) {
                (LayerSpec::Conv { out_channels, k, .. }, super::Shape::Map { c, .. }) => {
                    expected.push((i, false, vec![out_channels, c, k, k]))
                }
                (LayerSpec::Linear { out_features }, super::Shape::Flat(n)) => {
                    expected.push((i, true, vec![out_features, n]))
                }
                _ => {}
            }
            in_shape = *out;
        }
        if expected.len() != self.layers.len() {
            return Err(Error::Shape(format!(
                "network has {} weighted layers, bundle has {}",
                expected.len(),
                self.layers.len()
            )));
        }
        for (j, ((i, linear, dims), lw)) in expected.iter().zip(&self.layers).enumerate() {
            let kind_ok = matches!(lw, LayerWeights::Linear { .. }) == *linear;
            if !kind_ok || lw.dims() != *dims {
                return Err(Error::Shape(format!(
                    "weight layer {j} (network layer {i}): bundle has {} {:?}, network expects {} {dims:?}",
                    if matches!(lw, LayerWeights::Linear { .. }) { "linear" } else { "conv" },
                    lw.dims(),
                    if *linear { "linear" } else { "conv" },
                )));
            }
        }
        Ok(())
    }
}

pub fn save_weights<T: Scalar>(bundle: &WeightBundle<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&WEIGHTS_MAGIC);
    out.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    out.extend_from_slice(&(bundle.layers.len() as u32).to_le_bytes());
    for layer in &bundle.layers {
        out.push(match layer {
            LayerWeights::Conv { .. } => 0,
            LayerWeights::Linear { .. } => 1,
        });
        let dims = layer.dims();
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for d in dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    let mut put = |vals: &[T]| {
        for v in vals {
            out.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
    };
    for layer in &bundle.layers {
        match layer {
            LayerWeights::Conv { weight, bias, bn, .. } => {
                put(weight);
                put(bias);
                put(&bn.gamma);
                put(&bn.beta);
                put(&bn.mean);
                put(&bn.var);
                put(&[bn.eps]);
            }
            LayerWeights::Linear { weight, bias, .. } => {
                put(weight);
                put(bias);
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(Error::Truncated {
            offset: self.pos,
            needed: n,
            available: self.bytes.len() - self.pos,
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn values<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Malformed("tensor too large".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())))
            .collect())
    }
}

pub fn load_weights<T: Scalar>(bytes: &[u8]) -> Result<WeightBundle<T>> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != WEIGHTS_MAGIC {
        return Err(Error::BadMagic {
            expected: WEIGHTS_MAGIC,
            found: magic,
        });
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != WEIGHTS_VERSION {
        return Err(Error::Version(version));
    }
    let count = r.u32()? as usize;
    let mut table = Vec::new();
    for i in 0..count {
        let kind = r.take(1)?[0];
        let rank = r.u32()? as usize;
        let want = match kind {
            0 => 4,
            1 => 2,
            _ => return Err(Error::Malformed(format!("layer {i}: unknown kind {kind}"))),
        };
        if rank != want {
            return Err(Error::Malformed(format!("layer {i}: rank {rank}, expected {want}")));
        }
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if dims.contains(&0) || (kind == 0 && dims[2] != dims[3]) {
            return Err(Error::Malformed(format!("layer {i}: bad dims {dims:?}")));
        }
        table.push((kind, dims));
    }
    let mut layers = Vec::with_capacity(count);
    for (kind, dims) in table {
        let n: usize = dims.iter().product();
        let out = dims[0];
        let weight = r.values(n)?;
        let bias = r.values(out)?;
        layers.push(if kind == 0 {
            let bn = BatchNorm {
                gamma: r.values(out)?,
                beta: r.values(out)?,
                mean: r.values(out)?,
                var: r.values(out)?,
                eps: r.values(1)?[0],
            };
            LayerWeights::Conv {
                out_channels: out,
                in_channels: dims[1],
                k: dims[2],
                weight,
                bias,
                bn,
            }
        } else {
            LayerWeights::Linear {
                out_features: out,
                in_features: dims[1],
                weight,
                bias,
            }
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::Malformed(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(WeightBundle { layers })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn spec() -> NetworkSpec {
        NetworkSpec::reference((4, 16, 16), [4, 8, 8, 8], 32, 10).unwrap()
    }

    #[test]
    fn round_trip_random_bundle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut b: WeightBundle<f64> = WeightBundle::random(&spec(), 1.0, &mut rng).unwrap();
        if let LayerWeights::Conv { bn, .. } = &mut b.layers[0] {
            bn.var[1] = 0.37;
            bn.mean[0] = -1.5;
        }
        let bytes = save_weights(&b);
        assert_eq!(&bytes[..4], b"P2MW");
        let back: WeightBundle<f64> = load_weights(&bytes).unwrap();
        assert_eq!(back, b);
        assert_eq!(save_weights(&back), bytes);
        back.check_against(&spec()).unwrap();
    }

    #[test]
    fn truncated_and_bad_magic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let b: WeightBundle<f64> = WeightBundle::random(&spec(), 1.0, &mut rng).unwrap();
        let bytes = save_weights(&b);
        assert!(matches!(
            load_weights::<f64>(&bytes[..bytes.len() - 3]),
            Err(Error::Truncated { .. })
        ));
        let mut bad = bytes.clone();
        bad[3] = b'X';
        assert!(matches!(load_weights::<f64>(&bad), Err(Error::BadMagic { .. })));
        let mut extra = bytes;
        extra.push(0);
        assert!(load_weights::<f64>(&extra).is_err());
    }

    #[test]
    fn mismatch_names_layer() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let other = NetworkSpec::reference((4, 16, 16), [4, 8, 16, 8], 32, 10).unwrap();
        let b: WeightBundle<f64> = WeightBundle::random(&other, 1.0, &mut rng).unwrap();
        let err = b.check_against(&spec()).unwrap_err().to_string();
        assert!(err.contains("weight layer 1"), "{err}");
    }
}
