// SPDX-License-Identifier: Apache-2.0
//! EVT1: the simulator's native little-endian event container.
//!
//! ```text
//! header (16 bytes): "EVT1" | width u16 | height u16 | count u64
//! record (16 bytes): t_us u64 | x u16 | y u16 | polarity u8 | 3 zero bytes
//! ```

use super::{DvsEvent, EventStream, Polarity};
use crate::error::{Error, Result};

pub const EVT1_MAGIC: [u8; 4] = *b"EVT1";
pub const EVT1_HEADER_LEN: usize = 16;
pub const EVT1_RECORD_LEN: usize = 16;

pub fn write_evt1(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(EVT1_HEADER_LEN + stream.len() * EVT1_RECORD_LEN);
    out.extend_from_slice(&EVT1_MAGIC);
    out.extend_from_slice(&stream.width().to_le_bytes());
    out.extend_from_slice(&stream.height().to_le_bytes());
    out.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for e in stream.events() {
        out.extend_from_slice(&e.t.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.polarity as u8);
        out.extend_from_slice(&[0; 3]);
    }
    out
}

/// Decode an EVT1 buffer. The resulting stream has the canonical duration.
pub fn read_evt1(bytes: &[u8]) -> Result<EventStream> {
    let header = take(bytes, 0, EVT1_HEADER_LEN)?;
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if magic != EVT1_MAGIC {
        return Err(Error::BadMagic {
            expected: EVT1_MAGIC,
            found: magic,
        });
    }
    let width = u16::from_le_bytes(header[4..6].try_into().unwrap());
    let height = u16::from_le_bytes(header[6..8].try_into().unwrap());
    let count = u64::from_le_bytes(header[8..16].try_into().unwrap());

    let body_len = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(EVT1_RECORD_LEN))
        .ok_or_else(|| Error::Malformed(format!("event count {count} too large")))?;
    take(bytes, EVT1_HEADER_LEN, body_len)?;
    if bytes.len() != EVT1_HEADER_LEN + body_len {
        return Err(Error::Malformed(format!(
            "{} trailing bytes after {count} records",
            bytes.len() - EVT1_HEADER_LEN - body_len
        )));
    }

    let mut events = Vec::with_capacity(count as usize);
    for (index, rec) in bytes[EVT1_HEADER_LEN..]
        .chunks_exact(EVT1_RECORD_LEN)
        .enumerate()
    {
        let t = u64::from_le_bytes(rec[0..8].try_into().unwrap());
        let x = u16::from_le_bytes(rec[8..10].try_into().unwrap());
        let y = u16::from_le_bytes(rec[10..12].try_into().unwrap());
        let polarity = match rec[12] {
            0 => Polarity::Off,
            1 => Polarity::On,
            p => {
                return Err(Error::Malformed(format!(
                    "record {index}: polarity byte {p}"
                )))
            }
        };
        if rec[13..16] != [0, 0, 0] {
            return Err(Error::Malformed(format!(
                "record {index}: reserved bytes not zero"
            )));
        }
        events.push(DvsEvent::new(t, x, y, polarity));
    }
    EventStream::new(width, height, events)
}

fn take(bytes: &[u8], offset: usize, needed: usize) -> Result<&[u8]> {
    bytes
        .get(offset..offset.saturating_add(needed))
        .ok_or(Error::Truncated {
            offset,
            needed,
            available: bytes.len().saturating_sub(offset),
        })
}
