// SPDX-License-Identifier: Apache-2.0

use super::EventStream;
use crate::error::{Error, Result};

/// Event counts of one integration window, laid out `[polarity][y][x]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedFrame {
    pub window_index: usize,
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u32>,
}

impl BinnedFrame {
    pub fn zeros(window_index: usize, width: usize, height: usize) -> Self {
        BinnedFrame {
            window_index,
            width,
            height,
            counts: vec![0; 2 * width * height],
        }
    }

    #[inline]
    pub fn index(&self, channel: usize, y: usize, x: usize) -> usize {
        (channel * self.height + y) * self.width + x
    }

    #[inline]
    pub fn count(&self, channel: usize, y: usize, x: usize) -> u32 {
        self.counts[self.index(channel, y, x)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Number of windows of length `t_intg_us` needed to cover a stream.
///
/// This is `ceil(duration / t_intg)`, never less than one, and extended when
/// an event sits exactly at `duration_us`.
pub fn window_count(stream: &EventStream, t_intg_us: u64) -> Result<usize> {
    if t_intg_us == 0 {
        return Err(Error::param("t_intg_us", "must be at least 1 µs"));
    }
    let by_duration = stream.duration_us().div_ceil(t_intg_us);
    let by_last = stream.events().last().map_or(0, |e| e.t / t_intg_us + 1);
    Ok(by_duration.max(by_last).max(1) as usize)
}

/// Accumulate events into half-open windows `[k·T, (k+1)·T)`.
pub fn bin_events(stream: &EventStream, t_intg_us: u64) -> Result<Vec<BinnedFrame>> {
    let n = window_count(stream, t_intg_us)?;
    let (w, h) = (stream.width() as usize, stream.height() as usize);
    let mut frames: Vec<_> = (0..n).map(|k| BinnedFrame::zeros(k, w, h)).collect();
    for e in stream.events() {
        let frame = &mut frames[(e.t / t_intg_us) as usize];
        let i = frame.index(e.polarity.channel(), e.y as usize, e.x as usize);
        frame.counts[i] += 1;
    }
    Ok(frames)
}
