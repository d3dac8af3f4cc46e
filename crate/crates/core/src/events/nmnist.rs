// SPDX-License-Identifier: Apache-2.0
//! N-MNIST 40-bit record decoder.
//!
//! Each record is 5 bytes: `x`, `y`, then a 24-bit big-endian word whose top
//! bit is the polarity (1 = ON) and whose low 23 bits are the timestamp in µs.

use super::{DvsEvent, EventStream, Polarity};
use crate::error::{Error, Result};

/// Sensor side length of N-MNIST recordings.
pub const NMNIST_SIZE: u16 = 34;

const RECORD_LEN: usize = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NmnistReport {
    /// Records whose timestamp is smaller than the preceding record's. The
    /// 23-bit counter is never unwrapped, so a wrap shows up here.
    pub timestamp_regressions: usize,
}

pub fn parse_nmnist(bytes: &[u8]) -> Result<EventStream> {
    parse_nmnist_with_report(bytes).map(|(s, _)| s)
}

pub fn parse_nmnist_with_report(bytes: &[u8]) -> Result<(EventStream, NmnistReport)> {
    if !bytes.len().is_multiple_of(RECORD_LEN) {
        return Err(Error::Malformed(format!(
            "N-MNIST length {} is not a multiple of {RECORD_LEN}",
            bytes.len()
        )));
    }
    let mut events = Vec::with_capacity(bytes.len() / RECORD_LEN);
    let mut report = NmnistReport::default();
    let mut prev = 0u64;
    for (index, rec) in bytes.chunks_exact(RECORD_LEN).enumerate() {
        let (x, y) = (rec[0], rec[1]);
        if u16::from(x) >= NMNIST_SIZE || u16::from(y) >= NMNIST_SIZE {
            return Err(Error::Geometry {
                index,
                x: x.into(),
                y: y.into(),
                width: NMNIST_SIZE,
                height: NMNIST_SIZE,
            });
        }
        let polarity = Polarity::from_bit(rec[2] & 0x80 != 0);
        let t = (u64::from(rec[2] & 0x7f) << 16) | (u64::from(rec[3]) << 8) | u64::from(rec[4]);
        if t < prev {
            report.timestamp_regressions += 1;
        }
        prev = t;
        events.push(DvsEvent::new(t, x.into(), y.into(), polarity));
    }
    if report.timestamp_regressions > 0 {
        log::warn!(
            "N-MNIST input has {} timestamp regressions; sorting without unwrapping",
            report.timestamp_regressions
        );
        // stable: equal timestamps keep file order
        events.sort_by_key(|e| e.t);
    }
    let stream = EventStream::new(NMNIST_SIZE, NMNIST_SIZE, events)?;
    Ok((stream, report))
}
