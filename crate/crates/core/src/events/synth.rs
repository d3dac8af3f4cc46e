// SPDX-License-Identifier: Apache-2.0

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{DvsEvent, EventStream, Polarity};
use crate::error::{Error, Result};

/// Per-pixel, per-polarity event rates in events/s, laid out `[polarity][y][x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMap {
    pub width: u16,
    pub height: u16,
    pub rates: Vec<f64>,
}

impl RateMap {
    pub fn uniform(width: u16, height: u16, rate: f64) -> Self {
        RateMap {
            width,
            height,
            rates: vec![rate; 2 * width as usize * height as usize],
        }
    }

    pub fn zeros(width: u16, height: u16) -> Self {
        Self::uniform(width, height, 0.0)
    }

    pub fn set(&mut self, polarity: Polarity, y: u16, x: u16, rate: f64) {
        let i = (polarity.channel() * self.height as usize + y as usize) * self.width as usize
            + x as usize;
        self.rates[i] = rate;
    }
}

/// Homogeneous Poisson events over `[0, duration_us)`, deterministic per seed.
pub fn synth_poisson(rates: &RateMap, duration_us: u64, seed: u64) -> Result<EventStream> {
    let (w, h) = (rates.width as usize, rates.height as usize);
    if rates.rates.len() != 2 * w * h {
        return Err(Error::Shape(format!(
            "rate map has {} entries, expected {}",
            rates.rates.len(),
            2 * w * h
        )));
    }
    if let Some(bad) = rates.rates.iter().find(|r| !r.is_finite() || **r < 0.0) {
        return Err(Error::param("rate", format!("{bad} is not a finite non-negative rate")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seconds = duration_us as f64 * 1e-6;
    let mut events = Vec::new();
    if duration_us > 0 {
        for (i, &rate) in rates.rates.iter().enumerate() {
            let mean = rate * seconds;
            if mean <= 0.0 {
                continue;
            }
            let n = Poisson::new(mean)
                .map_err(|e| Error::param("rate", e.to_string()))?
                .sample(&mut rng) as u64;
            let polarity = Polarity::from_bit(i / (w * h) == 1);
            let (y, x) = ((i / w) % h, i % w);
            for _ in 0..n {
                let t = rng.random_range(0..duration_us);
                events.push(DvsEvent::new(t, x as u16, y as u16, polarity));
            }
        }
    }
    events.sort_by_key(|e| e.t);
    EventStream::with_duration(rates.width, rates.height, events, duration_us)
}
