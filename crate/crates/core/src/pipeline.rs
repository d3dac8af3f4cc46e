// SPDX-License-Identifier: Apache-2.0
//! End-to-end run: events → in-pixel layer → rebin → backend → stats.

use crate::conv::{p2m_conv, temporal_rebin_mode, ConvSpec, RebinMode, SpikeFrame};
use crate::error::{Error, Result};
use crate::events::EventStream;
use crate::mac::{CircuitConfig, Kernel};
use crate::metrics::SpikeStats;
use crate::snn::{run_network, BackendStats, LifParams, NetworkSpec, WeightBundle};
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct PipelineConfig<T> {
    pub circuit: CircuitConfig<T>,
    pub conv: ConvSpec,
    pub network: NetworkSpec,
    pub lif: LifParams<T>,
    /// Backend timestep; must be a multiple of every integration time used.
    pub t_coarse_us: u64,
    pub rebin: RebinMode,
}

#[derive(Debug, Clone)]
pub struct PipelineRun<T> {
    /// First-layer spikes at the integration time.
    pub first_layer: Vec<SpikeFrame>,
    pub logits: Vec<T>,
    pub backend: BackendStats,
    pub stats: SpikeStats,
}

/// Fine windows per backend timestep.
pub fn rebin_ratio(t_intg_us: u64, t_coarse_us: u64) -> Result<usize> {
    if t_intg_us == 0 || t_coarse_us == 0 {
        return Err(Error::param("t_intg", "integration times must be positive"));
    }
    if !t_coarse_us.is_multiple_of(t_intg_us) {
        return Err(Error::param(
            "t_coarse",
            format!("{t_coarse_us} us is not a multiple of the {t_intg_us} us integration time"),
        ));
    }
    Ok((t_coarse_us / t_intg_us) as usize)
}

pub fn run_pipeline<T: Scalar>(
    stream: &EventStream,
    kernels: &[Kernel<T>],
    weights: &WeightBundle<T>,
    config: &PipelineConfig<T>,
    t_intg_us: u64,
    seed: u64,
) -> Result<PipelineRun<T>> {
    let ratio = rebin_ratio(t_intg_us, config.t_coarse_us).map_err(|e| e.at("rebin"))?;
    let first_layer = p2m_conv(stream, kernels, &config.conv, &config.circuit, t_intg_us, seed)
        .map_err(|e| e.at("p2m_conv"))?;
    let coarse = temporal_rebin_mode(&first_layer, ratio, config.rebin).map_err(|e| e.at("rebin"))?;
    let out = run_network(&coarse, &config.network, weights, &config.lif).map_err(|e| e.at("network"))?;

    let units = first_layer.first().map_or(0, |f| f.values.len()) as u64;
    let mut layer_spikes = vec![first_layer.iter().map(SpikeFrame::total).sum()];
    layer_spikes.extend(out.stats.layer_totals());
    let stats = SpikeStats {
        input_events: stream.len() as u64,
        layer_spikes,
        mac_invocations: coarse.len() as u64 * units,
        timesteps: coarse.len() as u64,
    };
    Ok(PipelineRun {
        first_layer,
        logits: out.logits,
        backend: out.stats,
        stats,
    })
}
