// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("event {index} at ({x}, {y}) outside {width}x{height} sensor")]
    Geometry {
        index: usize,
        x: u32,
        y: u32,
        width: u16,
        height: u16,
    },
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("truncated input: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("timestamps not sorted at event {index} ({prev} > {next})")]
    Unsorted { index: usize, prev: u64, next: u64 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("undefined bandwidth: stream has no input events")]
    UndefinedBandwidth,
    #[error("zero baseline for {0}")]
    ZeroBaseline(&'static str),
    #[error("unsupported version {0}")]
    Version(u16),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },
}

impl Error {
    /// Tag an error with the pipeline stage it came from.
    pub fn at(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
