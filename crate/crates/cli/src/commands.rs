// SPDX-License-Identifier: Apache-2.0
//! The `trace`, `sweep`, `fit`, `bin` and `run` commands.
//!
//! Each command returns its output as text; writing files is left to the
//! caller so the commands stay easy to test.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use p2m_core::dump::write_binned_frames;
use p2m_core::events::{bin_events, parse_nmnist, read_evt1, synth_poisson, EventStream, Polarity, RateMap};
use p2m_core::mac::{
    fit_polynomial, fit_transfer_curve, integrate_window, integrate_window_sampled, parse_kernels,
    window_preactivation, CircuitVariant, LocalEvent,
};
use p2m_core::metrics::{normalize, EnergyModelParams, Report, SpikeStats};
use p2m_core::pipeline::{run_pipeline, PipelineRun};
use p2m_core::snn::{load_weights, save_weights};
use p2m_core::{Kernel, WeightBundle};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ms_to_us, ExperimentConfig, InputFormat, InputSpec};

/// Independent random streams derived from the experiment seed.
mod stream {
    pub const KERNELS: u64 = 1;
    pub const TRACE_EVENTS: u64 = 2;
    pub const WEIGHTS: u64 = 3;
    pub const SYNTH: u64 = 4;
    pub const FIT: u64 = 5;
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fixed-width scientific notation with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn read_stream(path: &Path, format: InputFormat) -> Result<EventStream> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let stream = match format {
        InputFormat::Evt1 => read_evt1(&bytes),
        InputFormat::Nmnist => parse_nmnist(&bytes),
    };
    stream.with_context(|| format!("parsing {}", path.display()))
}

pub fn load_stream(cfg: &ExperimentConfig) -> Result<EventStream> {
    match &cfg.input {
        InputSpec::File { path, format } => read_stream(path, *format),
        &InputSpec::Synthetic {
            width,
            height,
            rate,
            duration_ms,
        } => {
            let seed = rng_for(cfg.seed, stream::SYNTH).next_u64();
            synth_poisson(&RateMap::uniform(width, height, rate), ms_to_us(duration_ms)?, seed)
                .context("synthesising input stream")
        }
    }
}

/// First-layer kernels: from `kernels.path` when set, else seeded random.
pub fn load_kernels(cfg: &ExperimentConfig) -> Result<Vec<Kernel>> {
    match &cfg.kernels_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_kernels(&text).with_context(|| format!("parsing kernel file {}", path.display()))
        }
        None => {
            let mut rng = rng_for(cfg.seed, stream::KERNELS);
            Ok((0..cfg.conv.out_channels as u32)
                .map(|id| Kernel::random(id, cfg.conv.k, &mut rng))
                .collect())
        }
    }
}

fn uniform_events(rng: &mut ChaCha8Rng, n: usize, k: usize, t_intg_us: u64) -> Vec<LocalEvent> {
    let mut events: Vec<LocalEvent> = (0..n)
        .map(|_| {
            LocalEvent::new(
                rng.random_range(0..t_intg_us),
                Polarity::from_bit(rng.random()),
                rng.random_range(0..k as u8),
                rng.random_range(0..k as u8),
            )
        })
        .collect();
    events.sort_by_key(|e| e.t_us);
    events
}

pub const TRACE_COLUMNS: &str = "run,t_us,v_ideal,v_config_a,v_config_b,v_config_c";

/// Voltage of one kernel's unit over a window, with and without events,
/// under every selected circuit variant.
pub fn cmd_trace(cfg: &ExperimentConfig, variants: &[CircuitVariant]) -> Result<String> {
    if variants.is_empty() {
        bail!("no circuit variants selected");
    }
    let kernel = match &cfg.kernels_path {
        Some(_) => load_kernels(cfg)?
            .into_iter()
            .find(|k| k.id == cfg.trace.kernel)
            .ok_or_else(|| anyhow!("kernel file has no kernel with id {}", cfg.trace.kernel))?,
        None => Kernel::random(0, cfg.conv.k, &mut rng_for(cfg.seed, stream::KERNELS)),
    };
    let t_intg = ms_to_us(cfg.trace.t_intg_ms)?;
    let events = uniform_events(&mut rng_for(cfg.seed, stream::TRACE_EVENTS), cfg.trace.events, kernel.size(), t_intg);

    let mut out = format!("{TRACE_COLUMNS}\n");
    for (run, evs) in [("no_events", &[][..]), ("events", &events[..])] {
        let mut columns: Vec<Option<Vec<(f64, f64)>>> = Vec::new();
        for v in CircuitVariant::ALL {
            if !variants.contains(&v) {
                columns.push(None);
                continue;
            }
            let circuit = cfg.circuit.with_variant(v);
            let (_, trace) =
                integrate_window_sampled(&kernel, evs, 0, t_intg, &circuit, cfg.seed, Some(cfg.trace.sample_us))
                    .with_context(|| format!("trace {run} {v}"))?;
            columns.push(Some(trace.samples));
        }
        let times = columns.iter().flatten().next().expect("one variant selected");
        for (i, &(t, _)) in times.iter().enumerate() {
            write!(out, "{run},{}", t as u64)?;
            for col in &columns {
                match col {
                    Some(s) => write!(out, ",{}", fmt_num(s[i].1))?,
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
    }
    Ok(out)
}

fn stats_header(layers: usize) -> String {
    let mut h = String::from("input_events,timesteps,mac_invocations");
    for l in 1..=layers {
        write!(h, ",spikes_l{l}").unwrap();
    }
    h
}

fn stats_row(s: &SpikeStats) -> String {
    let mut r = format!("{},{},{}", s.input_events, s.timesteps, s.mac_invocations);
    for n in &s.layer_spikes {
        write!(r, ",{n}").unwrap();
    }
    r
}

fn energy_comment(e: &EnergyModelParams) -> String {
    let fanout: Vec<String> = e.fanout.iter().map(|f| fmt_num(*f)).collect();
    format!(
        "# e_mac_digital={} e_ac={} e_analog_window={} e_tx={} fanout={}",
        fmt_num(e.e_mac_digital),
        fmt_num(e.e_ac),
        fmt_num(e.e_analog_window),
        fmt_num(e.e_tx),
        fanout.join(";")
    )
}

struct Prepared {
    stream: EventStream,
    kernels: Vec<Kernel>,
    pipeline: p2m_core::PipelineConfig,
    energy: EnergyModelParams,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let stream = load_stream(cfg).context("stage input")?;
    let kernels = load_kernels(cfg).context("stage kernels")?;
    let network = cfg.network(stream.height().into(), stream.width().into())?;
    let energy = cfg.energy_for(&network)?;
    Ok(Prepared {
        stream,
        kernels,
        pipeline: cfg.pipeline(network)?,
        energy,
    })
}

fn random_weights(cfg: &ExperimentConfig, p: &Prepared) -> Result<WeightBundle> {
    Ok(WeightBundle::random(
        &p.pipeline.network,
        cfg.weight_gain,
        &mut rng_for(cfg.seed, stream::WEIGHTS),
    )?)
}

/// Full pipeline at every integration time, normalised to the longest.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<String> {
    let p = prepare(cfg)?;
    let weights = random_weights(cfg, &p)?;
    let mut rows = Vec::new();
    for &t in &cfg.t_intg_ms {
        let run = run_pipeline(&p.stream, &p.kernels, &weights, &p.pipeline, ms_to_us(t)?, cfg.seed)
            .with_context(|| format!("sweep at t_intg_ms={t}"))?;
        let report = Report::from_stats(&run.stats, &p.energy).with_context(|| format!("metrics at t_intg_ms={t}"))?;
        rows.push((t, run.stats, report));
    }
    let base = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .map(|(i, _)| i)
        .expect("t_intg_ms is non-empty");
    let baseline = rows[base].2;

    let layers = rows[0].1.layer_spikes.len();
    let mut out = energy_comment(&p.energy);
    write!(
        out,
        "\nt_intg_ms,{},bandwidth,energy_digital,energy_p2m,improvement,\
         bandwidth_ratio,energy_digital_ratio,energy_p2m_ratio,improvement_ratio\n",
        stats_header(layers)
    )?;
    for (t, stats, report) in &rows {
        let r = normalize(report, &baseline).context("normalising against the longest integration time")?;
        let n = r.ratios.expect("normalize fills ratios");
        let cells = [
            r.bandwidth,
            r.energy_digital,
            r.energy_p2m,
            r.improvement(),
            n.bandwidth,
            n.energy_digital,
            n.energy_p2m,
            n.improvement,
        ];
        let cells: Vec<String> = cells.iter().map(|x| fmt_num(*x)).collect();
        writeln!(out, "{},{},{}", fmt_num(*t), stats_row(stats), cells.join(","))?;
    }
    Ok(out)
}

pub struct RunOutput {
    pub report: String,
    pub stats_csv: String,
    /// The weights used, serialised.
    pub weights: Vec<u8>,
}

/// Key=value report of one pipeline run.
pub fn report_text(cfg: &ExperimentConfig, run: &PipelineRun<f64>, energy: &EnergyModelParams) -> Result<String> {
    let mut out = String::new();
    let s = &run.stats;
    writeln!(out, "seed={}", cfg.seed)?;
    writeln!(out, "t_intg_ms={}", fmt_num(cfg.run_t_intg_ms))?;
    writeln!(out, "t_coarse_ms={}", fmt_num(cfg.t_coarse_ms))?;
    writeln!(out, "input_events={}", s.input_events)?;
    writeln!(out, "timesteps={}", s.timesteps)?;
    writeln!(out, "mac_invocations={}", s.mac_invocations)?;
    for (l, n) in s.layer_spikes.iter().enumerate() {
        writeln!(out, "spikes_l{}={n}", l + 1)?;
    }
    writeln!(out, "e_mac_digital={}", fmt_num(energy.e_mac_digital))?;
    writeln!(out, "e_ac={}", fmt_num(energy.e_ac))?;
    writeln!(out, "e_analog_window={}", fmt_num(energy.e_analog_window))?;
    writeln!(out, "e_tx={}", fmt_num(energy.e_tx))?;
    for (l, f) in energy.fanout.iter().enumerate() {
        writeln!(out, "fanout_l{}={}", l + 1, fmt_num(*f))?;
    }
    match Report::from_stats(s, energy) {
        Ok(r) => {
            writeln!(out, "bandwidth={}", fmt_num(r.bandwidth))?;
            writeln!(out, "energy_digital={}", fmt_num(r.energy_digital))?;
            writeln!(out, "energy_p2m={}", fmt_num(r.energy_p2m))?;
            writeln!(out, "improvement={}", fmt_num(r.improvement()))?;
        }
        Err(p2m_core::Error::UndefinedBandwidth) => {
            writeln!(out, "bandwidth=undefined")?;
            let d = p2m_core::metrics::backend_energy(s, energy, p2m_core::metrics::EnergyMode::Digital);
            let a = p2m_core::metrics::backend_energy(s, energy, p2m_core::metrics::EnergyMode::P2m);
            writeln!(out, "energy_digital={}", fmt_num(d))?;
            writeln!(out, "energy_p2m={}", fmt_num(a))?;
        }
        Err(e) => return Err(e).context("stage metrics"),
    }
    let logits: Vec<String> = run.logits.iter().map(|x| fmt_num(*x)).collect();
    writeln!(out, "logits={}", logits.join(","))?;
    let predicted = run
        .logits
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    writeln!(out, "predicted={predicted}")?;
    Ok(out)
}

/// One end-to-end inference at `run.t_intg_ms`.
pub fn cmd_run(cfg: &ExperimentConfig, weights_file: Option<&Path>) -> Result<RunOutput> {
    let p = prepare(cfg)?;
    let weights = match weights_file {
        Some(path) => {
            let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            load_weights(&bytes).with_context(|| format!("stage weights: {}", path.display()))?
        }
        None => random_weights(cfg, &p)?,
    };
    weights
        .check_against(&p.pipeline.network)
        .context("stage weights: bundle does not match the network")?;
    let run = run_pipeline(&p.stream, &p.kernels, &weights, &p.pipeline, ms_to_us(cfg.run_t_intg_ms)?, cfg.seed)?;
    let report = report_text(cfg, &run, &p.energy)?;
    let stats_csv = format!("{}\n{}\n", stats_header(run.stats.layer_spikes.len()), stats_row(&run.stats));
    Ok(RunOutput {
        report,
        stats_csv,
        weights: save_weights(&weights),
    })
}

/// Transfer-curve samples of random kernels and event sets, and their fits.
pub fn cmd_fit(cfg: &ExperimentConfig) -> Result<String> {
    let t_intg = ms_to_us(cfg.fit.t_intg_ms)?;
    let mut rng = rng_for(cfg.seed, stream::FIT);
    let mut samples = Vec::with_capacity(cfg.fit.samples);
    for i in 0..cfg.fit.samples {
        let kernel = Kernel::random(i as u32, cfg.conv.k, &mut rng);
        let n = rng.random_range(0..=cfg.fit.max_events);
        let events = uniform_events(&mut rng, n, cfg.conv.k, t_intg);
        let p = window_preactivation(&kernel, &events)?;
        let (v, _) = integrate_window(&kernel, &events, 0, t_intg, &cfg.circuit, cfg.seed)?;
        samples.push((p, v));
    }
    let cubic = fit_transfer_curve(&samples).context("cubic fit")?;
    let linear = fit_polynomial(&samples, 1).context("linear fit")?;
    let mut out = String::new();
    for (i, c) in cubic.coefficients.iter().enumerate() {
        writeln!(out, "c{i}={}", fmt_num(*c))?;
    }
    writeln!(out, "rmse={}", fmt_num(cubic.rmse))?;
    writeln!(out, "linear_c0={}", fmt_num(linear.coefficients[0]))?;
    writeln!(out, "linear_c1={}", fmt_num(linear.coefficients[1]))?;
    writeln!(out, "linear_rmse={}", fmt_num(linear.rmse))?;
    writeln!(out, "samples={}", samples.len())?;
    writeln!(out, "variant={}", cfg.circuit.variant)?;
    writeln!(out, "nonlinear_step={}", cfg.circuit.nonlinear_step)?;
    Ok(out)
}

/// Event counts per window as a sparse frame dump.
pub fn cmd_bin(input: &Path, format: InputFormat, t_intg_ms: f64) -> Result<String> {
    let stream = read_stream(input, format)?;
    let frames = bin_events(&stream, ms_to_us(t_intg_ms)?).context("binning")?;
    let mut buf = Vec::new();
    write_binned_frames(&mut buf, &frames)?;
    Ok(String::from_utf8(buf).expect("dump is ASCII"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::parse(
            "input.synthetic.width=18\ninput.synthetic.height=18\ninput.synthetic.duration_ms=200\n\
             network.channels=8,8,8\nnetwork.hidden=16\nnetwork.t_coarse_ms=100\nt_intg_ms=10,100\nrun.t_intg_ms=10\n",
        )
        .unwrap()
    }

    #[test]
    fn number_format_has_12_digits() {
        assert_eq!(fmt_num(1.0), "1.00000000000e0");
        assert_eq!(fmt_num(-0.4), "-4.00000000000e-1");
    }

    #[test]
    fn trace_has_both_runs_and_constant_config_c() {
        let mut cfg = small();
        cfg.circuit.variation_sigma = 0.0;
        let csv = cmd_trace(&cfg, &CircuitVariant::ALL).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TRACE_COLUMNS));
        let quiet: Vec<&str> = lines.clone().filter(|l| l.starts_with("no_events,")).collect();
        assert!(quiet.len() > 2);
        for row in &quiet {
            let v: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
            assert!((v - cfg.circuit.v_precharge).abs() < 1e-12);
        }
        assert!(lines.any(|l| l.starts_with("events,")));
    }

    #[test]
    fn trace_leaves_unselected_columns_empty() {
        let csv = cmd_trace(&small(), &[CircuitVariant::ConfigA]).unwrap();
        let row = csv.lines().nth(1).unwrap();
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 6);
        assert!(cells[2].is_empty() && !cells[3].is_empty() && cells[4].is_empty());
    }

    #[test]
    fn sweep_single_entry_is_its_own_baseline() {
        let mut cfg = small();
        cfg.t_intg_ms = vec![10.0];
        let csv = cmd_sweep(&cfg).unwrap();
        let row = csv.lines().nth(2).unwrap();
        let cells: Vec<&str> = row.split(',').collect();
        for c in &cells[cells.len() - 4..] {
            assert_eq!(*c, fmt_num(1.0));
        }
    }

    #[test]
    fn zero_rate_run_reports_zero_spikes() {
        let mut cfg = small();
        cfg.input = InputSpec::Synthetic {
            width: 18,
            height: 18,
            rate: 0.0,
            duration_ms: 200.0,
        };
        let out = cmd_run(&cfg, None).unwrap();
        assert!(out.report.contains("input_events=0\n"));
        assert!(out.report.contains("bandwidth=undefined\n"));
        for line in out.report.lines().filter(|l| l.starts_with("spikes_l")) {
            assert!(line.ends_with("=0"), "{line}");
        }
    }

    #[test]
    fn fit_reports_coefficients() {
        let mut cfg = small();
        cfg.circuit = cfg.circuit.ideal_linear();
        let text = cmd_fit(&cfg).unwrap();
        let get = |k: &str| -> f64 {
            text.lines()
                .find_map(|l| l.strip_prefix(&format!("{k}=")))
                .unwrap()
                .parse()
                .unwrap()
        };
        assert!((get("c0") - 0.4).abs() < 1e-9);
        assert!((get("c1") - 15e-3).abs() < 1e-9);
    }
}
