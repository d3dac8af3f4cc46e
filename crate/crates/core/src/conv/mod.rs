// SPDX-License-Identifier: Apache-2.0
//! First-layer convolution: the in-pixel analog array and its digital twin.

mod p2m;
mod rebin;
mod reference;

pub use p2m::{p2m_conv, p2m_conv_probed, P2mOutput, UnitProbe};
pub use rebin::{temporal_rebin, temporal_rebin_mode, RebinMode};
pub use reference::{digital_conv_reference, PreactivationMap};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub k: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_channels: usize,
}

impl Default for ConvSpec {
    fn default() -> Self {
        ConvSpec {
            k: 3,
            stride: 1,
            padding: 0,
            out_channels: 4,
        }
    }
}

impl ConvSpec {
    /// Input channels are always the two event polarities.
    pub const IN_CHANNELS: usize = 2;

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k.is_multiple_of(2) {
            return Err(Error::param("k", format!("kernel size {} must be odd", self.k)));
        }
        if self.k > usize::from(u8::MAX) {
            return Err(Error::param("k", format!("kernel size {} too large", self.k)));
        }
        if self.stride == 0 {
            return Err(Error::param("stride", "must be at least 1"));
        }
        if self.out_channels == 0 {
            return Err(Error::param("out_channels", "must be at least 1"));
        }
        Ok(())
    }

    /// `(height, width)` of the output map for an `height × width` input.
    pub fn output_dims(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        self.validate()?;
        let out = |n: usize| -> Option<usize> {
            (n + 2 * self.padding)
                .checked_sub(self.k)
                .map(|span| span / self.stride + 1)
        };
        match (out(height), out(width)) {
            (Some(h), Some(w)) => Ok((h, w)),
            _ => Err(Error::Shape(format!(
                "{height}x{width} input too small for k={} pad={}",
                self.k, self.padding
            ))),
        }
    }
}

/// Activations of one timestep, laid out `[channel][y][x]`.
///
/// Binary for first-layer output; counts after [`temporal_rebin`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeFrame {
    pub window_index: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<u32>,
}

impl SpikeFrame {
    pub fn zeros(window_index: usize, channels: usize, height: usize, width: usize) -> Self {
        SpikeFrame {
            window_index,
            channels,
            height,
            width,
            values: vec![0; channels * height * width],
        }
    }

    #[inline]
    pub fn index(&self, channel: usize, y: usize, x: usize) -> usize {
        (channel * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, channel: usize, y: usize, x: usize) -> u32 {
        self.values[self.index(channel, y, x)]
    }

    pub fn total(&self) -> u64 {
        self.values.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_dims() {
        let s = ConvSpec::default();
        assert_eq!(s.output_dims(34, 34).unwrap(), (32, 32));
        let s = ConvSpec {
            stride: 2,
            padding: 1,
            ..s
        };
        assert_eq!(s.output_dims(16, 15).unwrap(), (8, 8));
        assert!(ConvSpec::default().output_dims(2, 8).is_err());
    }

    #[test]
    fn invalid_specs() {
        for s in [
            ConvSpec { k: 2, ..Default::default() },
            ConvSpec { stride: 0, ..Default::default() },
            ConvSpec { out_channels: 0, ..Default::default() },
        ] {
            assert!(s.validate().is_err());
        }
    }
}
