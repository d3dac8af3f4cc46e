// SPDX-License-Identifier: Apache-2.0
//! Per-kernel analog multiply-accumulate unit.
//!
//! A unit holds one kernel capacitor `C_K`. Every input event steps its
//! voltage up (positive weight, pFET) or down (negative weight, nFET) by
//! `k_step·|w|`. Between events the weight transistors leak: the positive
//! taps pull toward `V_DD` with conductance `g_p`, the negative taps toward
//! ground with `g_n`, giving
//!
//! ```text
//! C_K·dV/dt = g_p·(V_DD − V) − g_n·V + I_NULL
//! ```
//!
//! which is solved in closed form by [`evolve`]. The variants differ only in
//! the leakage parameters they produce (see [`derive_leakage`]).

pub(crate) mod circuit;
mod fit;
mod kernel_file;
mod variation;

pub use circuit::{
    apply_event, calibrate_null, derive_leakage, evolve, ideal_preactivation, integrate_window,
    integrate_window_sampled, threshold_compare, window_preactivation, LocalEvent,
};
pub use fit::{eval_polynomial, eval_transfer, fit_polynomial, fit_transfer_curve, PolyFit};
pub use kernel_file::{parse_kernels, write_kernels};
pub use variation::{unit_seed, VariationDraws};

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CircuitVariant {
    /// No leakage path at all; the digital reference.
    Ideal,
    /// Capacitor tied directly to the weight transistors.
    ConfigA,
    /// Isolation switch between weight transistors and capacitor.
    ConfigB,
    /// Switch plus a kernel-calibrated nullifying current source.
    ConfigC,
}

impl CircuitVariant {
    pub const ALL: [CircuitVariant; 4] = [
        CircuitVariant::Ideal,
        CircuitVariant::ConfigA,
        CircuitVariant::ConfigB,
        CircuitVariant::ConfigC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CircuitVariant::Ideal => "ideal",
            CircuitVariant::ConfigA => "config_a",
            CircuitVariant::ConfigB => "config_b",
            CircuitVariant::ConfigC => "config_c",
        }
    }
}

impl fmt::Display for CircuitVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CircuitVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" => Ok(CircuitVariant::Ideal),
            "a" | "config_a" => Ok(CircuitVariant::ConfigA),
            "b" | "config_b" => Ok(CircuitVariant::ConfigB),
            "c" | "config_c" => Ok(CircuitVariant::ConfigC),
            _ => Err(Error::param("variant", format!("unknown circuit variant {s:?}"))),
        }
    }
}

/// Physical parameters of one MAC unit. SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitConfig<T> {
    pub variant: CircuitVariant,
    /// Kernel capacitance, F.
    pub c_k: T,
    /// Supply, V.
    pub v_dd: T,
    /// Reset level at the start of every window, V.
    pub v_precharge: T,
    /// Voltage step per event per unit |weight|, V.
    pub k_step: T,
    /// Leakage conductance per unit |weight|, S.
    pub g_leak: T,
    /// Off-state attenuation of the isolation switch.
    pub alpha_sw: T,
    /// Activation threshold above `v_precharge`, V.
    pub v_th: T,
    /// Scale steps by the remaining headroom to the rail.
    pub nonlinear_step: bool,
    /// Relative std-dev of the per-event effective weight.
    pub variation_sigma: T,
}

impl<T: Scalar> Default for CircuitConfig<T> {
    fn default() -> Self {
        CircuitConfig {
            variant: CircuitVariant::ConfigC,
            c_k: T::of(10e-15),
            v_dd: T::of(0.8),
            v_precharge: T::of(0.4),
            k_step: T::of(15e-3),
            g_leak: T::of(50e-12),
            alpha_sw: T::of(3e-4),
            v_th: T::of(60e-3),
            nonlinear_step: false,
            variation_sigma: T::of(0.03),
        }
    }
}

impl<T: Scalar> CircuitConfig<T> {
    pub fn with_variant(mut self, variant: CircuitVariant) -> Self {
        self.variant = variant;
        self
    }

    /// The digital-equivalent unit: no leakage, linear steps, no variation.
    pub fn ideal_linear(mut self) -> Self {
        self.variant = CircuitVariant::Ideal;
        self.nonlinear_step = false;
        self.variation_sigma = T::zero();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let check = |ok: bool, name: &'static str, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::param(name, what.to_string()))
            }
        };
        check(self.c_k > z, "c_k", "must be positive")?;
        check(self.v_dd > z, "v_dd", "must be positive")?;
        check(
            self.v_precharge >= z && self.v_precharge <= self.v_dd,
            "v_precharge",
            "must lie in [0, v_dd]",
        )?;
        check(self.k_step > z, "k_step", "must be positive")?;
        check(self.g_leak >= z, "g_leak", "must be non-negative")?;
        check(
            self.alpha_sw > z && self.alpha_sw <= T::one(),
            "alpha_sw",
            "must lie in (0, 1]",
        )?;
        check(self.v_th > z, "v_th", "must be positive")?;
        check(self.variation_sigma >= z, "variation_sigma", "must be non-negative")?;
        Ok(())
    }
}

/// A `k×k` filter over the two polarity channels, weights in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    pub id: u32,
    k: usize,
    /// `[channel][dy][dx]`
    weights: Vec<T>,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(id: u32, k: usize, weights: Vec<T>) -> Result<Self> {
        if k == 0 || weights.len() != 2 * k * k {
            return Err(Error::Shape(format!(
                "kernel {id}: {} weights for a {k}x{k}x2 kernel",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.abs() <= T::one())) {
            return Err(Error::param("weight", format!("kernel {id}: {w} outside [-1, 1]")));
        }
        Ok(Kernel { id, k, weights })
    }

    /// Uniform weights in `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(id: u32, k: usize, rng: &mut R) -> Self {
        let weights = (0..2 * k * k)
            .map(|_| T::of(rng.random_range(-1.0..=1.0)))
            .collect();
        Kernel { id, k, weights }
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn tap(&self, channel: usize, dy: usize, dx: usize) -> usize {
        (channel * self.k + dy) * self.k + dx
    }

    #[inline]
    pub fn weight(&self, channel: usize, dy: usize, dx: usize) -> T {
        self.weights[self.tap(channel, dy, dx)]
    }
}

/// Leakage seen by the kernel capacitor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageParams<T> {
    /// Pull-up conductance toward `V_DD`, S.
    pub g_p: T,
    /// Pull-down conductance toward ground, S.
    pub g_n: T,
    /// Constant injected current, A.
    pub i_null: T,
}

impl<T: Scalar> LeakageParams<T> {
    pub fn none() -> Self {
        LeakageParams {
            g_p: T::zero(),
            g_n: T::zero(),
            i_null: T::zero(),
        }
    }

    pub fn total_conductance(&self) -> T {
        self.g_p + self.g_n
    }

    /// Voltage the unit relaxes to, if any conductance is present.
    pub fn equilibrium(&self, v_dd: T) -> Option<T> {
        let g = self.total_conductance();
        (g > T::zero()).then(|| (self.g_p * v_dd + self.i_null) / g)
    }

    /// Time constant in seconds, if any conductance is present.
    pub fn tau(&self, c_k: T) -> Option<T> {
        let g = self.total_conductance();
        (g > T::zero()).then(|| c_k / g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacState<T> {
    /// Capacitor voltage, V.
    pub v: T,
    /// Time of the last update, µs.
    pub t_us: T,
}

impl<T: Scalar> MacState<T> {
    pub fn new(v: T, t_us: T) -> Self {
        MacState { v, t_us }
    }
}

/// `(t_us, volts)` samples of a unit's capacitor voltage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VoltageTrace<T> {
    pub samples: Vec<(T, T)>,
}
