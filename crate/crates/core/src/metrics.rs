// SPDX-License-Identifier: Apache-2.0
//! Bandwidth and backend-energy accounting from spike counts.

use crate::error::{Error, Result};

/// Spike totals of one pipeline run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpikeStats {
    pub input_events: u64,
    /// Output spikes per layer; index 0 is the in-pixel layer.
    pub layer_spikes: Vec<u64>,
    /// First-layer unit evaluations per backend timestep:
    /// `timesteps × filters × output pixels`.
    pub mac_invocations: u64,
    /// Backend (coarse) timesteps.
    pub timesteps: u64,
}

impl SpikeStats {
    pub fn first_layer_spikes(&self) -> u64 {
        self.layer_spikes.first().copied().unwrap_or(0)
    }
}

/// Energy per operation, in joules.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModelParams {
    /// One multi-bit digital MAC unit evaluation.
    pub e_mac_digital: f64,
    /// One accumulate triggered by a spike.
    pub e_ac: f64,
    /// One in-pixel analog MAC unit evaluation.
    pub e_analog_window: f64,
    /// One spike sent off the sensor.
    pub e_tx: f64,
    /// Synaptic fan-out of each layer's spikes, aligned with
    /// `SpikeStats::layer_spikes`. Missing entries count as 1.
    pub fanout: Vec<f64>,
}

impl Default for EnergyModelParams {
    fn default() -> Self {
        let e_ac = 1e-12;
        EnergyModelParams {
            e_mac_digital: 5.0 * e_ac,
            e_ac,
            e_analog_window: 0.5 * e_ac,
            e_tx: e_ac,
            fanout: Vec::new(),
        }
    }
}

impl EnergyModelParams {
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("e_mac_digital", self.e_mac_digital),
            ("e_ac", self.e_ac),
            ("e_analog_window", self.e_analog_window),
            ("e_tx", self.e_tx),
        ];
        for (name, v) in scalars {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("{v} is not a finite non-negative energy")));
            }
        }
        if self.fanout.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
            return Err(Error::param("fanout", "entries must be finite and non-negative"));
        }
        Ok(())
    }

    fn fanout(&self, layer: usize) -> f64 {
        self.fanout.get(layer).copied().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyMode {
    /// First layer computed digitally at the backend.
    Digital,
    /// First layer computed in-pixel; its spikes are transmitted.
    P2m,
}

/// First-layer output spikes per input event.
pub fn bandwidth_ratio(stats: &SpikeStats) -> Result<f64> {
    if stats.input_events == 0 {
        return Err(Error::UndefinedBandwidth);
    }
    Ok(stats.first_layer_spikes() as f64 / stats.input_events as f64)
}

pub fn backend_energy(stats: &SpikeStats, params: &EnergyModelParams, mode: EnergyMode) -> f64 {
    let downstream: f64 = stats
        .layer_spikes
        .iter()
        .enumerate()
        .skip(1)
        .map(|(l, &n)| n as f64 * params.fanout(l) * params.e_ac)
        .sum();
    let mac = stats.mac_invocations as f64;
    match mode {
        EnergyMode::Digital => mac * params.e_mac_digital + downstream,
        EnergyMode::P2m => {
            mac * params.e_analog_window + stats.first_layer_spikes() as f64 * params.e_tx + downstream
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratios {
    pub bandwidth: f64,
    pub energy_digital: f64,
    pub energy_p2m: f64,
    pub improvement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Report {
    pub bandwidth: f64,
    pub energy_digital: f64,
    pub energy_p2m: f64,
    /// Filled in by [`normalize`].
    pub ratios: Option<Ratios>,
}

impl Report {
    pub fn from_stats(stats: &SpikeStats, params: &EnergyModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Report {
            bandwidth: bandwidth_ratio(stats)?,
            energy_digital: backend_energy(stats, params, EnergyMode::Digital),
            energy_p2m: backend_energy(stats, params, EnergyMode::P2m),
            ratios: None,
        })
    }

    /// Digital over in-pixel energy. Infinite when the in-pixel run is free.
    pub fn improvement(&self) -> f64 {
        self.energy_digital / self.energy_p2m
    }
}

/// Divide every figure of `report` by the matching figure of `baseline`.
pub fn normalize(report: &Report, baseline: &Report) -> Result<Report> {
    let div = |a: f64, b: f64, name: &'static str| {
        if b > 0.0 {
            Ok(a / b)
        } else {
            Err(Error::ZeroBaseline(name))
        }
    };
    let ratios = Ratios {
        bandwidth: div(report.bandwidth, baseline.bandwidth, "bandwidth")?,
        energy_digital: div(report.energy_digital, baseline.energy_digital, "energy_digital")?,
        energy_p2m: div(report.energy_p2m, baseline.energy_p2m, "energy_p2m")?,
        improvement: div(report.improvement(), baseline.improvement(), "improvement")?,
    };
    Ok(Report {
        ratios: Some(ratios),
        ..*report
    })
}
