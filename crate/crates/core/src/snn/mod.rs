// SPDX-License-Identifier: Apache-2.0
//! Inference-only spiking CNN for the layers after the in-pixel one.

mod bn;
mod lif;
mod network;
mod pool;
mod weights;

pub use bn::{bn_fold, BatchNorm};
pub use lif::{lif_step, lif_step_in_place, LifParams, LifState};
pub use network::{run_network, BackendStats, Network, NetworkOutput};
pub use pool::maxpool_spikes;
pub use weights::{load_weights, save_weights, LayerWeights, WeightBundle, WEIGHTS_MAGIC, WEIGHTS_VERSION};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// Stride-1 convolution followed by batch norm (folded at load time).
    Conv {
        out_channels: usize,
        k: usize,
        padding: usize,
    },
    Lif,
    /// 2×2 max pooling; odd trailing rows/columns are dropped.
    MaxPool,
    Flatten,
    Linear { out_features: usize },
}

/// Activation shape between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Map { c: usize, h: usize, w: usize },
    Flat(usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Map { c, h, w } => c * h * w,
            Shape::Flat(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    /// Shape of the first-layer spike maps fed in: `(channels, height, width)`.
    pub input: (usize, usize, usize),
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    /// Four conv blocks then two linear layers. The first block's
    /// conv/BN/LIF is the in-pixel layer, so the backend starts at its pool.
    ///
    /// `channels[0]` is the in-pixel filter count and must match `input.0`.
    pub fn reference(
        input: (usize, usize, usize),
        channels: [usize; 4],
        hidden: usize,
        classes: usize,
    ) -> Result<Self> {
        if input.0 != channels[0] {
            return Err(Error::Shape(format!(
                "first-layer channels {} but input has {}",
                channels[0], input.0
            )));
        }
        let mut layers = vec![LayerSpec::MaxPool];
        for &c in &channels[1..] {
            layers.extend([
                LayerSpec::Conv {
                    out_channels: c,
                    k: 3,
                    padding: 1,
                },
                LayerSpec::Lif,
                LayerSpec::MaxPool,
            ]);
        }
        layers.extend([
            LayerSpec::Flatten,
            LayerSpec::Linear {
                out_features: hidden,
            },
            LayerSpec::Lif,
            LayerSpec::Linear {
                out_features: classes,
            },
        ]);
        let spec = NetworkSpec { input, layers };
        spec.shapes()?;
        Ok(spec)
    }

    /// Output shape of every layer, validating compatibility.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let (c, h, w) = self.input;
        let mut cur = Shape::Map { c, h, w };
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            cur = match (*layer, cur) {
                (LayerSpec::Conv { out_channels, k, padding }, Shape::Map { h, w, .. }) => {
                    if k % 2 == 0 || h + 2 * padding < k || w + 2 * padding < k {
                        return Err(Error::Shape(format!("layer {i}: conv k={k} on {h}x{w}")));
                    }
                    Shape::Map {
                        c: out_channels,
                        h: h + 2 * padding - k + 1,
                        w: w + 2 * padding - k + 1,
                    }
                }
                (LayerSpec::MaxPool, Shape::Map { c, h, w }) => {
                    if h < 2 || w < 2 {
                        return Err(Error::Shape(format!("layer {i}: pooling a {h}x{w} map")));
                    }
                    Shape::Map { c, h: h / 2, w: w / 2 }
                }
                (LayerSpec::Lif, s) => s,
                (LayerSpec::Flatten, s) => Shape::Flat(s.len()),
                (LayerSpec::Linear { out_features }, Shape::Flat(_)) => Shape::Flat(out_features),
                (l, s) => {
                    return Err(Error::Shape(format!("layer {i}: {l:?} cannot take {s:?}")));
                }
            };
            if cur.is_empty() {
                return Err(Error::Shape(format!("layer {i} produces an empty output")));
            }
            out.push(cur);
        }
        Ok(out)
    }

    pub fn output_len(&self) -> Result<usize> {
        let shapes = self.shapes()?;
        let (c, h, w) = self.input;
        Ok(shapes.last().map_or(c * h * w, Shape::len))
    }

    /// Index of every LIF layer in `layers`.
    pub fn lif_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l, LayerSpec::Lif))
            .map(|(i, _)| i)
            .collect()
    }

    /// Synaptic fan-out of each LIF layer's spikes into the next weighted
    /// layer, averaged over positions (border effects ignored).
    pub fn lif_fanout(&self) -> Result<Vec<f64>> {
        self.shapes()?;
        Ok(self
            .lif_layers()
            .into_iter()
            .map(|i| {
                self.layers[i + 1..]
                    .iter()
                    .find_map(|l| match *l {
                        LayerSpec::Conv { out_channels, k, .. } => Some((k * k * out_channels) as f64),
                        LayerSpec::Linear { out_features } => Some(out_features as f64),
                        _ => None,
                    })
                    .unwrap_or(0.0)
            })
            .collect())
    }
}
