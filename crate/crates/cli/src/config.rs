// SPDX-License-Identifier: Apache-2.0
//! Flat `key=value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Keys use dotted sections
//! (`circuit.c_k=10e-15`); unknown keys are an error.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use p2m_core::conv::{ConvSpec, RebinMode};
use p2m_core::mac::CircuitVariant;
use p2m_core::metrics::EnergyModelParams;
use p2m_core::snn::NetworkSpec;
use p2m_core::{CircuitConfig, LifParams, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Nmnist,
    Evt1,
}

impl FromStr for InputFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nmnist" => Ok(InputFormat::Nmnist),
            "evt1" => Ok(InputFormat::Evt1),
            _ => bail!("unknown input format {s:?} (expected nmnist|evt1)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    Synthetic {
        width: u16,
        height: u16,
        /// Events per second per pixel and polarity.
        rate: f64,
        duration_ms: f64,
    },
    File { path: PathBuf, format: InputFormat },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpec {
    pub t_intg_ms: f64,
    pub events: usize,
    pub sample_us: u64,
    /// Kernel id to trace when a kernel file is given.
    pub kernel: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    pub samples: usize,
    pub max_events: usize,
    pub t_intg_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub circuit: CircuitConfig,
    pub conv: ConvSpec,
    /// Output channels of the three backend conv blocks.
    pub channels: [usize; 3],
    pub hidden: usize,
    pub classes: usize,
    pub lif: LifParams,
    pub t_coarse_ms: f64,
    pub rebin: RebinMode,
    pub weight_gain: f64,
    pub energy: EnergyModelParams,
    pub t_intg_ms: Vec<f64>,
    pub run_t_intg_ms: f64,
    pub seed: u64,
    pub input: InputSpec,
    pub output_dir: PathBuf,
    pub kernels_path: Option<PathBuf>,
    pub trace: TraceSpec,
    pub fit: FitSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            circuit: CircuitConfig::default(),
            conv: ConvSpec::default(),
            channels: [32, 64, 128],
            hidden: 512,
            classes: 10,
            lif: LifParams::default(),
            t_coarse_ms: 1000.0,
            rebin: RebinMode::Count,
            weight_gain: 1.0,
            energy: EnergyModelParams::default(),
            t_intg_ms: vec![1.0, 10.0, 100.0, 1000.0],
            run_t_intg_ms: 10.0,
            seed: 0,
            input: InputSpec::Synthetic {
                width: 34,
                height: 34,
                rate: 200.0,
                duration_ms: 2000.0,
            },
            output_dir: PathBuf::from("out"),
            kernels_path: None,
            trace: TraceSpec {
                t_intg_ms: 10.0,
                events: 16,
                sample_us: 50,
                kernel: 0,
            },
            fit: FitSpec {
                samples: 200,
                max_events: 24,
                t_intg_ms: 1.0,
            },
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("key {key}: cannot parse {value:?}: {e}"))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => bail!("key {key}: expected true|false, got {value:?}"),
    }
}

/// Milliseconds to whole microseconds.
pub fn ms_to_us(ms: f64) -> Result<u64> {
    let us = ms * 1000.0;
    if !(us >= 1.0 && us.is_finite()) || (us - us.round()).abs() > 1e-6 {
        bail!("time {ms} ms is not a positive whole number of microseconds");
    }
    Ok(us.round() as u64)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut synth = (34u16, 34u16, 200.0f64, 2000.0f64);
        let mut file: (Option<PathBuf>, Option<InputFormat>) = (None, None);
        let mut fanout = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value", n + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let c = &mut cfg.circuit;
            match key {
                "circuit.variant" => c.variant = value.parse()?,
                "circuit.c_k" => c.c_k = num(key, value)?,
                "circuit.v_dd" => c.v_dd = num(key, value)?,
                "circuit.v_precharge" => c.v_precharge = num(key, value)?,
                "circuit.k_step" => c.k_step = num(key, value)?,
                "circuit.g_leak" => c.g_leak = num(key, value)?,
                "circuit.alpha_sw" => c.alpha_sw = num(key, value)?,
                "circuit.v_th" => c.v_th = num(key, value)?,
                "circuit.nonlinear_step" => c.nonlinear_step = flag(key, value)?,
                "circuit.variation_sigma" => c.variation_sigma = num(key, value)?,
                "conv.k" => cfg.conv.k = num(key, value)?,
                "conv.stride" => cfg.conv.stride = num(key, value)?,
                "conv.padding" => cfg.conv.padding = num(key, value)?,
                "conv.out_channels" => cfg.conv.out_channels = num(key, value)?,
                "network.channels" => {
                    let v: Vec<usize> = list(key, value)?;
                    cfg.channels = v
                        .try_into()
                        .map_err(|_| anyhow!("key {key}: expected three channel counts"))?;
                }
                "network.hidden" => cfg.hidden = num(key, value)?,
                "network.classes" => cfg.classes = num(key, value)?,
                "network.lif_tau" => cfg.lif.tau = num(key, value)?,
                "network.lif_v_th" => cfg.lif.v_th = num(key, value)?,
                "network.t_coarse_ms" => cfg.t_coarse_ms = num(key, value)?,
                "network.rebin_mode" => cfg.rebin = value.parse()?,
                "network.weight_gain" => cfg.weight_gain = num(key, value)?,
                "energy.e_mac_digital" => cfg.energy.e_mac_digital = num(key, value)?,
                "energy.e_ac" => cfg.energy.e_ac = num(key, value)?,
                "energy.e_analog_window" => cfg.energy.e_analog_window = num(key, value)?,
                "energy.e_tx" => cfg.energy.e_tx = num(key, value)?,
                "energy.fanout" => fanout = Some(list(key, value)?),
                "t_intg_ms" => cfg.t_intg_ms = list(key, value)?,
                "run.t_intg_ms" => cfg.run_t_intg_ms = num(key, value)?,
                "seed" => cfg.seed = num(key, value)?,
                "input.synthetic.width" => synth.0 = num(key, value)?,
                "input.synthetic.height" => synth.1 = num(key, value)?,
                "input.synthetic.rate" => synth.2 = num(key, value)?,
                "input.synthetic.duration_ms" => synth.3 = num(key, value)?,
                "input.path" => file.0 = Some(PathBuf::from(value)),
                "input.format" => file.1 = Some(value.parse()?),
                "output.dir" => cfg.output_dir = PathBuf::from(value),
                "kernels.path" => cfg.kernels_path = Some(PathBuf::from(value)),
                "trace.t_intg_ms" => cfg.trace.t_intg_ms = num(key, value)?,
                "trace.events" => cfg.trace.events = num(key, value)?,
                "trace.sample_us" => cfg.trace.sample_us = num(key, value)?,
                "trace.kernel" => cfg.trace.kernel = num(key, value)?,
                "fit.samples" => cfg.fit.samples = num(key, value)?,
                "fit.max_events" => cfg.fit.max_events = num(key, value)?,
                "fit.t_intg_ms" => cfg.fit.t_intg_ms = num(key, value)?,
                _ => bail!("line {}: unknown key {key:?}", n + 1),
            }
        }
        cfg.input = match file {
            (Some(path), format) => InputSpec::File {
                path,
                format: format.unwrap_or(InputFormat::Evt1),
            },
            (None, Some(_)) => bail!("input.format given without input.path"),
            (None, None) => InputSpec::Synthetic {
                width: synth.0,
                height: synth.1,
                rate: synth.2,
                duration_ms: synth.3,
            },
        };
        cfg.energy.fanout = fanout.unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.circuit.validate()?;
        self.conv.validate()?;
        self.lif.validate()?;
        self.energy.validate()?;
        if self.t_intg_ms.is_empty() {
            bail!("t_intg_ms must list at least one integration time");
        }
        for &t in self.t_intg_ms.iter().chain([&self.run_t_intg_ms]) {
            ms_to_us(t).context("t_intg_ms")?;
        }
        ms_to_us(self.t_coarse_ms).context("network.t_coarse_ms")?;
        ms_to_us(self.trace.t_intg_ms).context("trace.t_intg_ms")?;
        ms_to_us(self.fit.t_intg_ms).context("fit.t_intg_ms")?;
        if self.trace.sample_us == 0 {
            bail!("trace.sample_us must be positive");
        }
        if let InputSpec::Synthetic { rate, duration_ms, .. } = self.input {
            if !(rate >= 0.0 && rate.is_finite()) {
                bail!("input.synthetic.rate must be finite and non-negative");
            }
            ms_to_us(duration_ms).context("input.synthetic.duration_ms")?;
        }
        if !(self.weight_gain > 0.0 && self.weight_gain.is_finite()) {
            bail!("network.weight_gain must be positive");
        }
        Ok(())
    }

    /// Backend network for a sensor of the given size.
    pub fn network(&self, height: usize, width: usize) -> Result<NetworkSpec> {
        let (ho, wo) = self.conv.output_dims(height, width)?;
        let c = self.conv.out_channels;
        let [c1, c2, c3] = self.channels;
        Ok(NetworkSpec::reference((c, ho, wo), [c, c1, c2, c3], self.hidden, self.classes)?)
    }

    pub fn pipeline(&self, network: NetworkSpec) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            circuit: self.circuit,
            conv: self.conv,
            network,
            lif: self.lif,
            t_coarse_us: ms_to_us(self.t_coarse_ms)?,
            rebin: self.rebin,
        })
    }

    /// Energy constants with fan-out filled in from `network` unless set.
    pub fn energy_for(&self, network: &NetworkSpec) -> Result<EnergyModelParams> {
        let mut e = self.energy.clone();
        if e.fanout.is_empty() {
            // the in-pixel layer's spikes leave the sensor; their cost is e_tx
            e.fanout = std::iter::once(0.0).chain(network.lif_fanout()?).collect();
        }
        Ok(e)
    }
}

pub fn parse_variants(list: &str) -> Result<Vec<CircuitVariant>> {
    list.split(',')
        .map(|v| Ok(v.trim().parse::<CircuitVariant>()?))
        .collect()
}
