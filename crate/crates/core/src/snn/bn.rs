// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::Scalar;

/// Per-channel inference batch norm: `γ·(x − μ)/√(σ² + ε) + β`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub eps: T,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn identity(channels: usize) -> Self {
        BatchNorm {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            mean: vec![T::zero(); channels],
            var: vec![T::one(); channels],
            eps: T::zero(),
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn apply(&self, channel: usize, x: T) -> T {
        self.gamma[channel] * (x - self.mean[channel]) / (self.var[channel] + self.eps).sqrt()
            + self.beta[channel]
    }
}

/// Fold batch norm into the preceding layer. `weights` is `[out][…]` with
/// `bias.len()` output channels; returns the folded weights and bias.
pub fn bn_fold<T: Scalar>(weights: &[T], bias: &[T], bn: &BatchNorm<T>) -> Result<(Vec<T>, Vec<T>)> {
    let out = bias.len();
    let lens = [bn.gamma.len(), bn.beta.len(), bn.mean.len(), bn.var.len()];
    if out == 0 || !weights.len().is_multiple_of(out) || lens.iter().any(|&l| l != out) {
        return Err(Error::Shape(format!(
            "batch norm over {lens:?} channels for a layer with {out} outputs and {} weights",
            weights.len()
        )));
    }
    let per_out = weights.len() / out;
    let mut w = Vec::with_capacity(weights.len());
    let mut b = Vec::with_capacity(out);
    for o in 0..out {
        let denom = bn.var[o] + bn.eps;
        if !(denom > T::zero()) {
            return Err(Error::param("bn.var", format!("channel {o}: var + eps = {denom} ≤ 0")));
        }
        let scale = bn.gamma[o] / denom.sqrt();
        w.extend(weights[o * per_out..(o + 1) * per_out].iter().map(|&x| x * scale));
        b.push(bn.beta[o] + (bias[o] - bn.mean[o]) * scale);
    }
    Ok((w, b))
}
