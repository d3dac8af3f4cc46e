// SPDX-License-Identifier: Apache-2.0
//! DVS event streams: containers, file formats, binning and synthesis.

mod binning;
mod evt1;
mod nmnist;
mod synth;

pub use binning::{bin_events, window_count, BinnedFrame};
pub use evt1::{read_evt1, write_evt1, EVT1_HEADER_LEN, EVT1_MAGIC, EVT1_RECORD_LEN};
pub use nmnist::{parse_nmnist, parse_nmnist_with_report, NmnistReport, NMNIST_SIZE};
pub use synth::{synth_poisson, RateMap};

use crate::error::{Error, Result};

/// Largest timestamp representable in 63 bits.
pub const MAX_TIMESTAMP_US: u64 = i64::MAX as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Polarity {
    Off = 0,
    On = 1,
}

impl Polarity {
    pub const ALL: [Polarity; 2] = [Polarity::Off, Polarity::On];

    /// Channel index used by every `[polarity × height × width]` grid.
    #[inline]
    pub fn channel(self) -> usize {
        self as usize
    }

    pub fn from_bit(on: bool) -> Self {
        if on {
            Polarity::On
        } else {
            Polarity::Off
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DvsEvent {
    /// Microseconds since the start of the recording.
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl DvsEvent {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        DvsEvent { t, x, y, polarity }
    }
}

/// Time-ordered events from a `width × height` sensor.
///
/// `duration_us` is the exclusive end of the recording. Streams built with
/// [`EventStream::new`] use the canonical duration `last.t + 1` (or 0 when
/// empty); [`EventStream::with_duration`] accepts any longer span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    width: u16,
    height: u16,
    events: Vec<DvsEvent>,
    duration_us: u64,
}

impl EventStream {
    pub fn new(width: u16, height: u16, events: Vec<DvsEvent>) -> Result<Self> {
        let duration_us = events.last().map_or(0, |e| e.t.saturating_add(1));
        Self::with_duration(width, height, events, duration_us)
    }

    pub fn with_duration(
        width: u16,
        height: u16,
        events: Vec<DvsEvent>,
        duration_us: u64,
    ) -> Result<Self> {
        validate(width, height, &events)?;
        if let Some(last) = events.last() {
            if last.t > duration_us {
                return Err(Error::param(
                    "duration_us",
                    format!("last event at {} µs exceeds duration {duration_us}", last.t),
                ));
            }
        }
        Ok(EventStream {
            width,
            height,
            events,
            duration_us,
        })
    }

    pub fn empty(width: u16, height: u16) -> Self {
        EventStream {
            width,
            height,
            events: Vec::new(),
            duration_us: 0,
        }
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn events(&self) -> &[DvsEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn duration_us(&self) -> u64 {
        self.duration_us
    }

    pub fn into_events(self) -> Vec<DvsEvent> {
        self.events
    }
}

fn validate(width: u16, height: u16, events: &[DvsEvent]) -> Result<()> {
    let mut prev = 0u64;
    for (index, e) in events.iter().enumerate() {
        if e.x >= width || e.y >= height {
            return Err(Error::Geometry {
                index,
                x: e.x.into(),
                y: e.y.into(),
                width,
                height,
            });
        }
        if e.t > MAX_TIMESTAMP_US {
            return Err(Error::param(
                "t",
                format!("event {index} timestamp {} exceeds 63 bits", e.t),
            ));
        }
        if e.t < prev {
            return Err(Error::Unsorted {
                index,
                prev,
                next: e.t,
            });
        }
        prev = e.t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_duration() {
        let s = EventStream::new(4, 4, vec![DvsEvent::new(7, 0, 0, Polarity::On)]).unwrap();
        assert_eq!(s.duration_us(), 8);
        assert_eq!(EventStream::new(4, 4, vec![]).unwrap().duration_us(), 0);
    }

    #[test]
    fn rejects_bad_streams() {
        let out = vec![DvsEvent::new(0, 4, 0, Polarity::On)];
        assert!(matches!(
            EventStream::new(4, 4, out),
            Err(Error::Geometry { index: 0, .. })
        ));
        let unsorted = vec![
            DvsEvent::new(5, 0, 0, Polarity::On),
            DvsEvent::new(4, 0, 0, Polarity::On),
        ];
        assert!(matches!(
            EventStream::new(4, 4, unsorted),
            Err(Error::Unsorted { index: 1, .. })
        ));
        let short = vec![DvsEvent::new(10, 0, 0, Polarity::Off)];
        assert!(EventStream::with_duration(4, 4, short, 9).is_err());
    }
}
