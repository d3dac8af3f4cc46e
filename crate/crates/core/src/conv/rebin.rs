// SPDX-License-Identifier: Apache-2.0

use std::str::FromStr;

use super::SpikeFrame;
use crate::error::{Error, Result};

/// How fine first-layer frames combine into one backend timestep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RebinMode {
    /// Element-wise sum: multi-bit spike counts.
    #[default]
    Count,
    /// Element-wise OR: a unit is active if it fired in any fine window.
    Binary,
}

impl FromStr for RebinMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count" => Ok(RebinMode::Count),
            "binary" => Ok(RebinMode::Binary),
            _ => Err(Error::param("rebin_mode", format!("{s:?} is not count|binary"))),
        }
    }
}

pub fn temporal_rebin(frames: &[SpikeFrame], ratio: usize) -> Result<Vec<SpikeFrame>> {
    temporal_rebin_mode(frames, ratio, RebinMode::Count)
}

/// Merge every `ratio` consecutive frames; a trailing partial group is kept.
pub fn temporal_rebin_mode(
    frames: &[SpikeFrame],
    ratio: usize,
    mode: RebinMode,
) -> Result<Vec<SpikeFrame>> {
    if ratio == 0 {
        return Err(Error::param("ratio", "must be at least 1"));
    }
    frames
        .chunks(ratio)
        .enumerate()
        .map(|(i, group)| {
            let (c, h, w) = group[0].dims();
            let mut out = SpikeFrame::zeros(i, c, h, w);
            for f in group {
                if f.dims() != (c, h, w) {
                    return Err(Error::Shape(format!(
                        "frame {} has dims {:?}, expected {:?}",
                        f.window_index,
                        f.dims(),
                        (c, h, w)
                    )));
                }
                for (acc, &v) in out.values.iter_mut().zip(&f.values) {
                    *acc = match mode {
                        RebinMode::Count => *acc + v,
                        RebinMode::Binary => u32::from(*acc != 0 || v != 0),
                    };
                }
            }
            Ok(out)
        })
        .collect()
}
