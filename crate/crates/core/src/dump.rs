// SPDX-License-Identifier: Apache-2.0
//! Sparse CSV dumps of event and spike frames.
//!
//! ```text
//! # dims windows=N channels=C height=H width=W
//! window,channel,y,x,value
//! ```
//! followed by one row per nonzero entry.

use std::io::{self, Write};

use crate::conv::SpikeFrame;
use crate::events::BinnedFrame;

pub const DUMP_COLUMNS: &str = "window,channel,y,x,value";

fn header<W: Write>(out: &mut W, windows: usize, c: usize, h: usize, w: usize) -> io::Result<()> {
    writeln!(out, "# dims windows={windows} channels={c} height={h} width={w}")?;
    writeln!(out, "{DUMP_COLUMNS}")
}

fn rows<W: Write>(out: &mut W, window: usize, dims: (usize, usize, usize), values: &[u32]) -> io::Result<()> {
    let (_, h, w) = dims;
    for (i, &v) in values.iter().enumerate().filter(|(_, v)| **v != 0) {
        let (c, rem) = (i / (h * w), i % (h * w));
        writeln!(out, "{window},{c},{},{},{v}", rem / w, rem % w)?;
    }
    Ok(())
}

pub fn write_spike_frames<W: Write>(out: &mut W, frames: &[SpikeFrame]) -> io::Result<()> {
    let dims = frames.first().map_or((0, 0, 0), SpikeFrame::dims);
    header(out, frames.len(), dims.0, dims.1, dims.2)?;
    for f in frames {
        rows(out, f.window_index, f.dims(), &f.values)?;
    }
    Ok(())
}

pub fn write_binned_frames<W: Write>(out: &mut W, frames: &[BinnedFrame]) -> io::Result<()> {
    let dims = frames.first().map_or((0, 0, 0), |f| (2, f.height, f.width));
    header(out, frames.len(), dims.0, dims.1, dims.2)?;
    for f in frames {
        rows(out, f.window_index, (2, f.height, f.width), &f.counts)?;
    }
    Ok(())
}
