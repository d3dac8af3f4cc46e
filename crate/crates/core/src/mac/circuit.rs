// SPDX-License-Identifier: Apache-2.0

use super::{CircuitConfig, CircuitVariant, Kernel, LeakageParams, MacState, VariationDraws, VoltageTrace};
use crate::error::{Error, Result};
use crate::events::Polarity;
use crate::scalar::clamp;
use crate::Scalar;

/// An input event as seen by one MAC unit: time and the kernel tap it hits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalEvent {
    pub t_us: u64,
    pub polarity: Polarity,
    pub dy: u8,
    pub dx: u8,
}

impl LocalEvent {
    pub fn new(t_us: u64, polarity: Polarity, dy: u8, dx: u8) -> Self {
        LocalEvent {
            t_us,
            polarity,
            dy,
            dx,
        }
    }
}

pub fn derive_leakage<T: Scalar>(kernel: &Kernel<T>, config: &CircuitConfig<T>) -> LeakageParams<T> {
    let (mut pos, mut neg) = (T::zero(), T::zero());
    for &w in kernel.weights() {
        if w > T::zero() {
            pos += w;
        } else {
            neg -= w;
        }
    }
    let (g_p0, g_n0) = (config.g_leak * pos, config.g_leak * neg);
    match config.variant {
        CircuitVariant::Ideal => LeakageParams::none(),
        CircuitVariant::ConfigA => LeakageParams {
            g_p: g_p0,
            g_n: g_n0,
            i_null: T::zero(),
        },
        CircuitVariant::ConfigB | CircuitVariant::ConfigC => {
            let g_p = config.alpha_sw * g_p0;
            let g_n = config.alpha_sw * g_n0;
            let i_null = if config.variant == CircuitVariant::ConfigC {
                calibrate_null(g_p, g_n, config)
            } else {
                T::zero()
            };
            LeakageParams { g_p, g_n, i_null }
        }
    }
}

/// Current that cancels the net leakage at `v_precharge`.
pub fn calibrate_null<T: Scalar>(g_p: T, g_n: T, config: &CircuitConfig<T>) -> T {
    -(g_p * (config.v_dd - config.v_precharge) - g_n * config.v_precharge)
}

/// Advance the capacitor by `dt_us` microseconds with no input events.
pub fn evolve<T: Scalar>(
    state: MacState<T>,
    dt_us: T,
    leak: &LeakageParams<T>,
    config: &CircuitConfig<T>,
) -> Result<MacState<T>> {
    if !(dt_us >= T::zero()) {
        return Err(Error::param("dt_us", format!("{dt_us} is negative")));
    }
    Ok(MacState {
        v: relax(state.v, dt_us, leak, config),
        t_us: state.t_us + dt_us,
    })
}

#[inline]
fn relax<T: Scalar>(v: T, dt_us: T, leak: &LeakageParams<T>, config: &CircuitConfig<T>) -> T {
    let dt = dt_us * T::of(1e-6);
    let g = leak.g_p + leak.g_n;
    let next = if g > T::zero() {
        let v_eq = (leak.g_p * config.v_dd + leak.i_null) / g;
        v_eq + (v - v_eq) * (-dt * g / config.c_k).exp()
    } else {
        v + leak.i_null * dt / config.c_k
    };
    clamp(next, T::zero(), config.v_dd)
}

/// Charge step for one input event. `draw` is a standard-normal sample.
pub fn apply_event<T: Scalar>(
    state: MacState<T>,
    weight: T,
    config: &CircuitConfig<T>,
    draw: T,
) -> MacState<T> {
    let w_eff = weight * (T::one() + config.variation_sigma * draw);
    let mut dv = config.k_step * w_eff;
    if config.nonlinear_step {
        let headroom = if w_eff > T::zero() {
            (config.v_dd - state.v) / (config.v_dd - config.v_precharge)
        } else {
            state.v / config.v_precharge
        };
        dv *= clamp(headroom, T::zero(), T::one());
    }
    MacState {
        v: clamp(state.v + dv, T::zero(), config.v_dd),
        t_us: state.t_us,
    }
}

/// Accumulate one window and return the pre-activation voltage with its trace.
pub fn integrate_window<T: Scalar>(
    kernel: &Kernel<T>,
    events: &[LocalEvent],
    t_start_us: u64,
    t_intg_us: u64,
    config: &CircuitConfig<T>,
    seed: u64,
) -> Result<(T, VoltageTrace<T>)> {
    integrate_window_sampled(kernel, events, t_start_us, t_intg_us, config, seed, None)
}

/// Like [`integrate_window`], additionally sampling the voltage every
/// `sample_every_us` for plotting. Samples never perturb the result.
pub fn integrate_window_sampled<T: Scalar>(
    kernel: &Kernel<T>,
    events: &[LocalEvent],
    t_start_us: u64,
    t_intg_us: u64,
    config: &CircuitConfig<T>,
    seed: u64,
    sample_every_us: Option<u64>,
) -> Result<(T, VoltageTrace<T>)> {
    let leak = derive_leakage(kernel, config);
    let mut trace = VoltageTrace::default();
    let v = run_window(
        kernel,
        &leak,
        events,
        t_start_us,
        t_intg_us,
        config,
        seed,
        Some(Sampler {
            every: sample_every_us.filter(|&s| s > 0),
            next: t_start_us,
            out: &mut trace.samples,
        }),
    )?;
    Ok((v, trace))
}

pub(crate) struct Sampler<'a, T> {
    every: Option<u64>,
    next: u64,
    out: &'a mut Vec<(T, T)>,
}

impl<T: Scalar> Sampler<'_, T> {
    /// Emit grid samples in `[anchor_t, until)` relative to the anchor state.
    fn grid_until(
        &mut self,
        anchor_v: T,
        anchor_t: u64,
        until: u64,
        leak: &LeakageParams<T>,
        config: &CircuitConfig<T>,
    ) {
        let Some(step) = self.every else { return };
        while self.next < until {
            if self.next > anchor_t {
                let v = relax(anchor_v, T::of_count(self.next - anchor_t), leak, config);
                self.out.push((T::of_count(self.next), v));
            }
            self.next += step;
        }
    }
}

/// Core window loop shared by the traced and untraced paths.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_window<T: Scalar>(
    kernel: &Kernel<T>,
    leak: &LeakageParams<T>,
    events: &[LocalEvent],
    t_start_us: u64,
    t_intg_us: u64,
    config: &CircuitConfig<T>,
    seed: u64,
    mut sampler: Option<Sampler<'_, T>>,
) -> Result<T> {
    let t_end = t_start_us
        .checked_add(t_intg_us)
        .ok_or_else(|| Error::param("t_intg_us", "window end overflows"))?;
    let k = kernel.size();
    let mut draws = VariationDraws::new(
        seed,
        kernel.id,
        config.variation_sigma > T::zero(),
    );

    let mut v = config.v_precharge;
    let mut t = t_start_us;
    if let Some(s) = sampler.as_mut() {
        s.out.push((T::of_count(t), v));
        s.next = t_start_us;
    }
    for (i, e) in events.iter().enumerate() {
        if e.t_us < t || e.t_us >= t_end {
            return Err(Error::Contract(format!(
                "event {i} at {} µs is unsorted or outside window [{t_start_us}, {t_end})",
                e.t_us
            )));
        }
        if usize::from(e.dy) >= k || usize::from(e.dx) >= k {
            return Err(Error::Contract(format!(
                "event {i} tap ({}, {}) outside {k}x{k} kernel",
                e.dy, e.dx
            )));
        }
        if let Some(s) = sampler.as_mut() {
            s.grid_until(v, t, e.t_us, leak, config);
        }
        v = relax(v, T::of_count(e.t_us - t), leak, config);
        t = e.t_us;
        let w = kernel.weight(e.polarity.channel(), e.dy.into(), e.dx.into());
        let draw = draws.next_draw();
        let stepped = apply_event(MacState::new(v, T::of_count(t)), w, config, draw);
        if let Some(s) = sampler.as_mut() {
            s.out.push((T::of_count(t), v));
            s.out.push((T::of_count(t), stepped.v));
        }
        v = stepped.v;
    }
    if let Some(s) = sampler.as_mut() {
        s.grid_until(v, t, t_end, leak, config);
    }
    v = relax(v, T::of_count(t_end - t), leak, config);
    if let Some(s) = sampler.as_mut() {
        s.out.push((T::of_count(t_end), v));
    }
    Ok(v)
}

/// Binary activation: fires when `v_pre` reaches `v_precharge + v_th`.
#[inline]
pub fn threshold_compare<T: Scalar>(v_pre: T, config: &CircuitConfig<T>) -> bool {
    v_pre >= config.v_precharge + config.v_th
}

/// Digital multi-bit MAC over a `[channel][dy][dx]` count grid.
pub fn ideal_preactivation<T: Scalar>(kernel: &Kernel<T>, counts: &[u32]) -> Result<T> {
    if counts.len() != kernel.weights().len() {
        return Err(Error::Shape(format!(
            "count grid has {} entries, kernel {} has {}",
            counts.len(),
            kernel.id,
            kernel.weights().len()
        )));
    }
    Ok(kernel
        .weights()
        .iter()
        .zip(counts)
        .map(|(&w, &n)| w * T::of_count(n.into()))
        .sum())
}

/// [`ideal_preactivation`] of the counts implied by a local event list.
pub fn window_preactivation<T: Scalar>(kernel: &Kernel<T>, events: &[LocalEvent]) -> Result<T> {
    let k = kernel.size();
    let mut counts = vec![0u32; 2 * k * k];
    for e in events {
        if usize::from(e.dy) >= k || usize::from(e.dx) >= k {
            return Err(Error::Contract(format!("tap ({}, {}) outside kernel", e.dy, e.dx)));
        }
        counts[kernel.tap(e.polarity.channel(), e.dy.into(), e.dx.into())] += 1;
    }
    ideal_preactivation(kernel, &counts)
}
