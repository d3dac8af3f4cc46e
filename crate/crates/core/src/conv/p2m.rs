// SPDX-License-Identifier: Apache-2.0
//! The in-pixel analog convolution array.
//!
//! One MAC unit sits under every (filter, output pixel). Each unit sees its
//! own copy of the events in its receptive field, integrates them for one
//! window, thresholds, and resets.

use rayon::prelude::*;

use super::reference::check_kernels;
use super::{ConvSpec, SpikeFrame};
use crate::error::{Error, Result};
use crate::events::{window_count, EventStream};
use crate::mac::{
    circuit::run_window, derive_leakage, integrate_window_sampled, threshold_compare, unit_seed,
    CircuitConfig, Kernel, LeakageParams, LocalEvent, VoltageTrace,
};
use crate::Scalar;

/// Selects one unit whose voltage trace should be recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitProbe {
    pub filter: usize,
    pub oy: usize,
    pub ox: usize,
    pub window: usize,
}

#[derive(Debug, Clone)]
pub struct P2mOutput<T> {
    pub frames: Vec<SpikeFrame>,
    pub traces: Vec<(UnitProbe, VoltageTrace<T>)>,
}

pub fn p2m_conv<T: Scalar>(
    stream: &EventStream,
    kernels: &[Kernel<T>],
    spec: &ConvSpec,
    circuit: &CircuitConfig<T>,
    t_intg_us: u64,
    seed: u64,
) -> Result<Vec<SpikeFrame>> {
    p2m_conv_probed(stream, kernels, spec, circuit, t_intg_us, seed, &[]).map(|o| o.frames)
}

/// [`p2m_conv`] that also records the voltage traces of `probes`.
pub fn p2m_conv_probed<T: Scalar>(
    stream: &EventStream,
    kernels: &[Kernel<T>],
    spec: &ConvSpec,
    circuit: &CircuitConfig<T>,
    t_intg_us: u64,
    seed: u64,
    probes: &[UnitProbe],
) -> Result<P2mOutput<T>> {
    check_kernels(kernels, spec)?;
    circuit.validate()?;
    let (h, w) = (stream.height() as usize, stream.width() as usize);
    let (ho, wo) = spec.output_dims(h, w)?;
    let n_windows = window_count(stream, t_intg_us)?;
    let leaks: Vec<LeakageParams<T>> = kernels.iter().map(|k| derive_leakage(k, circuit)).collect();

    // an eventless window is the same for every unit of a filter
    let idle: Vec<bool> = kernels
        .iter()
        .zip(&leaks)
        .map(|(k, l)| {
            run_window(k, l, &[], 0, t_intg_us, circuit, 0, None).map(|v| threshold_compare(v, circuit))
        })
        .collect::<Result<_>>()?;

    let mut by_pixel: Vec<Vec<u32>> = vec![Vec::new(); h * w];
    for (i, e) in stream.events().iter().enumerate() {
        by_pixel[e.y as usize * w + e.x as usize].push(i as u32);
    }

    let router = Router {
        stream,
        spec,
        by_pixel: &by_pixel,
        t_intg_us,
    };
    // (window, filter, bit) for every unit-window that differs from idle
    let flips: Vec<Vec<(u32, u16, bool)>> = (0..ho * wo)
        .into_par_iter()
        .map(|unit| {
            let (oy, ox) = (unit / wo, unit % wo);
            let mut out = Vec::new();
            for (window, events) in router.windows(oy, ox) {
                let seed = unit_seed(seed, window as u64, oy, ox);
                let t_start = window as u64 * t_intg_us;
                for (f, (kernel, leak)) in kernels.iter().zip(&leaks).enumerate() {
                    let v = run_window(kernel, leak, &events, t_start, t_intg_us, circuit, seed, None)?;
                    let bit = threshold_compare(v, circuit);
                    if bit != idle[f] {
                        out.push((window as u32, f as u16, bit));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut frames: Vec<SpikeFrame> = (0..n_windows)
        .map(|i| {
            let mut frame = SpikeFrame::zeros(i, kernels.len(), ho, wo);
            for (f, &on) in idle.iter().enumerate() {
                if on {
                    frame.values[f * ho * wo..(f + 1) * ho * wo].fill(1);
                }
            }
            frame
        })
        .collect();
    for (unit, unit_flips) in flips.iter().enumerate() {
        let (oy, ox) = (unit / wo, unit % wo);
        for &(window, f, bit) in unit_flips {
            let frame = &mut frames[window as usize];
            let i = frame.index(f.into(), oy, ox);
            frame.values[i] = u32::from(bit);
        }
    }

    let traces = probes
        .iter()
        .map(|p| {
            if p.filter >= kernels.len() || p.oy >= ho || p.ox >= wo || p.window >= n_windows {
                return Err(Error::param("probe", format!("{p:?} outside the output")));
            }
            let events = router.unit_window(p.oy, p.ox, p.window);
            let (_, trace) = integrate_window_sampled(
                &kernels[p.filter],
                &events,
                p.window as u64 * t_intg_us,
                t_intg_us,
                circuit,
                unit_seed(seed, p.window as u64, p.oy, p.ox),
                None,
            )?;
            Ok((*p, trace))
        })
        .collect::<Result<_>>()?;

    Ok(P2mOutput { frames, traces })
}

struct Router<'a> {
    stream: &'a EventStream,
    spec: &'a ConvSpec,
    by_pixel: &'a [Vec<u32>],
    t_intg_us: u64,
}

impl Router<'_> {
    /// Receptive-field events of a unit as `(stream index, local event)`,
    /// in stream order.
    fn receptive_field(&self, oy: usize, ox: usize) -> Vec<(u32, LocalEvent)> {
        let (h, w) = (self.stream.height() as isize, self.stream.width() as isize);
        let pad = self.spec.padding as isize;
        let events = self.stream.events();
        let mut out = Vec::new();
        for dy in 0..self.spec.k {
            let iy = (oy * self.spec.stride + dy) as isize - pad;
            if iy < 0 || iy >= h {
                continue;
            }
            for dx in 0..self.spec.k {
                let ix = (ox * self.spec.stride + dx) as isize - pad;
                if ix < 0 || ix >= w {
                    continue;
                }
                for &i in &self.by_pixel[iy as usize * w as usize + ix as usize] {
                    let e = &events[i as usize];
                    out.push((i, LocalEvent::new(e.t, e.polarity, dy as u8, dx as u8)));
                }
            }
        }
        out.sort_unstable_by_key(|&(i, _)| i);
        out
    }

    /// Non-empty windows of a unit with their local events.
    fn windows(&self, oy: usize, ox: usize) -> Vec<(usize, Vec<LocalEvent>)> {
        let mut out: Vec<(usize, Vec<LocalEvent>)> = Vec::new();
        for (_, e) in self.receptive_field(oy, ox) {
            let window = (e.t_us / self.t_intg_us) as usize;
            match out.last_mut() {
                Some((w, list)) if *w == window => list.push(e),
                _ => out.push((window, vec![e])),
            }
        }
        out
    }

    fn unit_window(&self, oy: usize, ox: usize, window: usize) -> Vec<LocalEvent> {
        self.receptive_field(oy, ox)
            .into_iter()
            .map(|(_, e)| e)
            .filter(|e| (e.t_us / self.t_intg_us) as usize == window)
            .collect()
    }
}
