// SPDX-License-Identifier: Apache-2.0

use super::ConvSpec;
use crate::error::{Error, Result};
use crate::events::BinnedFrame;
use crate::mac::Kernel;
use crate::Scalar;

/// Real-valued pre-activations of one window, `[filter][y][x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreactivationMap<T> {
    pub window_index: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<T>,
}

impl<T: Scalar> PreactivationMap<T> {
    #[inline]
    pub fn get(&self, channel: usize, y: usize, x: usize) -> T {
        self.values[(channel * self.height + y) * self.width + x]
    }
}

pub(crate) fn check_kernels<T: Scalar>(kernels: &[Kernel<T>], spec: &ConvSpec) -> Result<()> {
    spec.validate()?;
    if kernels.len() != spec.out_channels {
        return Err(Error::Shape(format!(
            "{} kernels for {} output channels",
            kernels.len(),
            spec.out_channels
        )));
    }
    if let Some(bad) = kernels.iter().find(|k| k.size() != spec.k) {
        return Err(Error::Shape(format!(
            "kernel {} is {}x{}, spec wants {}x{}",
            bad.id,
            bad.size(),
            bad.size(),
            spec.k,
            spec.k
        )));
    }
    Ok(())
}

/// Zero-padded 2-D cross-correlation of event counts, summed over polarity.
pub fn digital_conv_reference<T: Scalar>(
    frames: &[BinnedFrame],
    kernels: &[Kernel<T>],
    spec: &ConvSpec,
) -> Result<Vec<PreactivationMap<T>>> {
    check_kernels(kernels, spec)?;
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let (h, w) = (first.height, first.width);
    if frames.iter().any(|f| (f.height, f.width) != (h, w)) {
        return Err(Error::Shape("binned frames differ in geometry".into()));
    }
    let (ho, wo) = spec.output_dims(h, w)?;
    let pad = spec.padding as isize;

    Ok(frames
        .iter()
        .map(|frame| {
            let mut values = vec![T::zero(); kernels.len() * ho * wo];
            for (f, kernel) in kernels.iter().enumerate() {
                for oy in 0..ho {
                    for ox in 0..wo {
                        let mut acc = T::zero();
                        for c in 0..ConvSpec::IN_CHANNELS {
                            for dy in 0..spec.k {
                                let iy = (oy * spec.stride + dy) as isize - pad;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for dx in 0..spec.k {
                                    let ix = (ox * spec.stride + dx) as isize - pad;
                                    if ix < 0 || ix >= w as isize {
                                        continue;
                                    }
                                    let n = frame.count(c, iy as usize, ix as usize);
                                    if n != 0 {
                                        acc += kernel.weight(c, dy, dx) * T::of_count(n.into());
                                    }
                                }
                            }
                        }
                        values[(f * ho + oy) * wo + ox] = acc;
                    }
                }
            }
            PreactivationMap {
                window_index: frame.window_index,
                channels: kernels.len(),
                height: ho,
                width: wo,
                values,
            }
        })
        .collect())
}
