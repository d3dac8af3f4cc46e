// SPDX-License-Identifier: Apache-2.0
//! Text kernel files.
//!
//! ```text
//! kernel <id> <k> <k> 2
//! <k rows of k weights: OFF channel>
//! <k rows of k weights: ON channel>
//! ```
//!
//! Blank lines and `#` comments are ignored.

use std::fmt::Write;

use super::Kernel;
use crate::error::{Error, Result};
use crate::Scalar;

pub fn parse_kernels<T: Scalar>(text: &str) -> Result<Vec<Kernel<T>>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut kernels = Vec::new();
    while let Some((lineno, header)) = lines.next() {
        let fields: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::Malformed(format!("line {lineno}: expected `kernel <id> <k> <k> 2`, got {header:?}"));
        if fields.len() != 5 || fields[0] != "kernel" || fields[4] != "2" || fields[2] != fields[3] {
            return Err(bad_header());
        }
        let id: u32 = fields[1].parse().map_err(|_| bad_header())?;
        let k: usize = fields[2].parse().map_err(|_| bad_header())?;
        if k == 0 {
            return Err(bad_header());
        }
        let mut weights = Vec::with_capacity(2 * k * k);
        for _ in 0..2 * k {
            let (lineno, row) = lines.next().ok_or_else(|| {
                Error::Malformed(format!("kernel {id}: file ends before {} rows", 2 * k))
            })?;
            let vals = row
                .split_whitespace()
                .map(|s| s.parse::<f64>().map(T::of))
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| Error::Malformed(format!("line {lineno}: {e}")))?;
            if vals.len() != k {
                return Err(Error::Malformed(format!(
                    "line {lineno}: expected {k} weights, found {}",
                    vals.len()
                )));
            }
            weights.extend(vals);
        }
        kernels.push(Kernel::new(id, k, weights)?);
    }
    Ok(kernels)
}

pub fn write_kernels<T: Scalar>(kernels: &[Kernel<T>]) -> String {
    let mut out = String::new();
    for kernel in kernels {
        let k = kernel.size();
        writeln!(out, "kernel {} {k} {k} 2", kernel.id).unwrap();
        for row in kernel.weights().chunks(k) {
            let cells: Vec<String> = row.iter().map(|w| format!("{}", w.to_f64_lossy())).collect();
            writeln!(out, "{}", cells.join(" ")).unwrap();
        }
    }
    out
}
