// SPDX-License-Identifier: Apache-2.0

use super::{bn_fold, lif_step_in_place, maxpool_spikes, LayerSpec, LayerWeights, LifParams, LifState, NetworkSpec, Shape, WeightBundle};
use crate::conv::SpikeFrame;
use crate::error::{Error, Result};
use crate::Scalar;

/// Spike counts of every LIF layer, `[lif layer][timestep]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BackendStats {
    pub lif_spikes: Vec<Vec<u64>>,
}

impl BackendStats {
    pub fn layer_totals(&self) -> Vec<u64> {
        self.lif_spikes.iter().map(|t| t.iter().sum()).collect()
    }

    pub fn timesteps(&self) -> usize {
        self.lif_spikes.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkOutput<T> {
    /// Per-class sum of the final layer's outputs over all timesteps.
    pub logits: Vec<T>,
    pub stats: BackendStats,
}

enum Op<T> {
    Conv {
        weight: Vec<T>,
        bias: Vec<T>,
        in_c: usize,
        out_c: usize,
        k: usize,
        pad: usize,
        h: usize,
        w: usize,
    },
    Lif(usize),
    Pool { c: usize, h: usize, w: usize },
    Flatten,
    Linear { weight: Vec<T>, bias: Vec<T>, n_in: usize },
}

/// A network with batch norm folded and membrane state that persists
/// across [`Network::step`] calls.
pub struct Network<T> {
    ops: Vec<Op<T>>,
    states: Vec<LifState<T>>,
    spikes: Vec<Vec<bool>>,
    lif: LifParams<T>,
    input: (usize, usize, usize),
    output_len: usize,
}

impl<T: Scalar> Network<T> {
    pub fn new(spec: &NetworkSpec, weights: &WeightBundle<T>, lif: LifParams<T>) -> Result<Self> {
        lif.validate()?;
        weights.check_against(spec)?;
        let shapes = spec.shapes()?;
        let (c0, h0, w0) = spec.input;
        let mut in_shape = Shape::Map { c: c0, h: h0, w: w0 };
        let mut params = weights.layers.iter();
        let mut ops = Vec::with_capacity(spec.layers.len());
        let mut states = Vec::new();
        for (layer, out) in spec.layers.iter().zip(&shapes) {
            let op = match (*layer, in_shape) {
                (LayerSpec::Conv { padding, .. }, Shape::Map { h, w, .. }) => {
                    let Some(LayerWeights::Conv { out_channels, in_channels, k, weight, bias, bn }) = params.next() else {
                        unreachable!("checked against spec")
                    };
                    let (weight, bias) = bn_fold(weight, bias, bn)?;
                    Op::Conv {
                        weight,
                        bias,
                        in_c: *in_channels,
                        out_c: *out_channels,
                        k: *k,
                        pad: padding,
                        h,
                        w,
                    }
                }
                (LayerSpec::Linear { .. }, Shape::Flat(n_in)) => {
                    let Some(LayerWeights::Linear { weight, bias, .. }) = params.next() else {
                        unreachable!("checked against spec")
                    };
                    Op::Linear {
                        weight: weight.clone(),
                        bias: bias.clone(),
                        n_in,
                    }
                }
                (LayerSpec::Lif, s) => {
                    states.push(LifState::zeros(s.len()));
                    Op::Lif(states.len() - 1)
                }
                (LayerSpec::MaxPool, Shape::Map { c, h, w }) => Op::Pool { c, h, w },
                (LayerSpec::Flatten, _) => Op::Flatten,
                _ => unreachable!("shapes validated"),
            };
            ops.push(op);
            in_shape = *out;
        }
        let spikes = states.iter().map(|s| vec![false; s.v.len()]).collect();
        Ok(Network {
            ops,
            states,
            spikes,
            lif,
            input: spec.input,
            output_len: in_shape.len(),
        })
    }

    pub fn reset(&mut self) {
        for s in &mut self.states {
            s.v.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    pub fn lif_states(&self) -> &[LifState<T>] {
        &self.states
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    /// Advance one timestep. Returns the final layer's output and the spike
    /// count of each LIF layer.
    pub fn step(&mut self, frame: &SpikeFrame) -> Result<(Vec<T>, Vec<u64>)> {
        if frame.dims() != self.input {
            return Err(Error::Shape(format!(
                "frame {} has dims {:?}, network expects {:?}",
                frame.window_index,
                frame.dims(),
                self.input
            )));
        }
        let mut x: Vec<T> = frame.values.iter().map(|&v| T::of_count(v.into())).collect();
        let mut counts = vec![0; self.states.len()];
        for op in &self.ops {
            x = match op {
                Op::Conv { weight, bias, in_c, out_c, k, pad, h, w } => {
                    conv_forward(&x, weight, bias, *in_c, *out_c, *k, *pad, *h, *w)
                }
                Op::Lif(i) => {
                    counts[*i] = lif_step_in_place(&mut self.states[*i], &x, &self.lif, &mut self.spikes[*i])?;
                    self.spikes[*i].iter().map(|&s| if s { T::one() } else { T::zero() }).collect()
                }
                Op::Pool { c, h, w } => maxpool_spikes(&x, *c, *h, *w).0,
                Op::Flatten => x,
                Op::Linear { weight, bias, n_in } => bias
                    .iter()
                    .zip(weight.chunks_exact(*n_in))
                    .map(|(&b, row)| {
                        b + row
                            .iter()
                            .zip(&x)
                            .filter(|(_, &xi)| xi != T::zero())
                            .map(|(&wi, &xi)| wi * xi)
                            .sum::<T>()
                    })
                    .collect(),
            };
        }
        Ok((x, counts))
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_forward<T: Scalar>(
    x: &[T],
    weight: &[T],
    bias: &[T],
    in_c: usize,
    out_c: usize,
    k: usize,
    pad: usize,
    h: usize,
    w: usize,
) -> Vec<T> {
    let (ho, wo) = (h + 2 * pad + 1 - k, w + 2 * pad + 1 - k);
    let mut out = Vec::with_capacity(out_c * ho * wo);
    for &b in bias {
        out.extend(std::iter::repeat_n(b, ho * wo));
    }
    // scatter each non-zero input into the outputs it reaches
    for c in 0..in_c {
        for iy in 0..h {
            for ix in 0..w {
                let v = x[(c * h + iy) * w + ix];
                if v == T::zero() {
                    continue;
                }
                for dy in 0..k {
                    let oy = iy + pad;
                    if oy < dy || oy - dy >= ho {
                        continue;
                    }
                    let oy = oy - dy;
                    for dx in 0..k {
                        let ox = ix + pad;
                        if ox < dx || ox - dx >= wo {
                            continue;
                        }
                        let ox = ox - dx;
                        for o in 0..out_c {
                            out[(o * ho + oy) * wo + ox] += weight[((o * in_c + c) * k + dy) * k + dx] * v;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Run a sequence of first-layer frames through the backend.
pub fn run_network<T: Scalar>(
    frames: &[SpikeFrame],
    spec: &NetworkSpec,
    weights: &WeightBundle<T>,
    lif: &LifParams<T>,
) -> Result<NetworkOutput<T>> {
    let mut net = Network::new(spec, weights, *lif)?;
    let mut logits = vec![T::zero(); net.output_len()];
    let mut stats = BackendStats {
        lif_spikes: vec![Vec::with_capacity(frames.len()); net.states.len()],
    };
    for frame in frames {
        let (out, counts) = net.step(frame)?;
        for (acc, v) in logits.iter_mut().zip(out) {
            *acc += v;
        }
        for (layer, n) in stats.lif_spikes.iter_mut().zip(counts) {
            layer.push(n);
        }
    }
    Ok(NetworkOutput { logits, stats })
}
