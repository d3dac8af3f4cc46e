// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::Scalar;

/// Leaky integrate-and-fire neuron with hard reset to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams<T> {
    /// Membrane time constant in timesteps, ≥ 1.
    pub tau: T,
    pub v_th: T,
}

impl<T: Scalar> Default for LifParams<T> {
    fn default() -> Self {
        LifParams {
            tau: T::of(2.0),
            v_th: T::one(),
        }
    }
}

impl<T: Scalar> LifParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= T::one()) {
            return Err(Error::param("tau", format!("{} < 1", self.tau)));
        }
        if !(self.v_th > T::zero()) {
            return Err(Error::param("v_th", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifState<T> {
    pub v: Vec<T>,
}

impl<T: Scalar> LifState<T> {
    pub fn zeros(n: usize) -> Self {
        LifState {
            v: vec![T::zero(); n],
        }
    }
}

/// `v ← v + (x − v)/tau`; fire where `v ≥ v_th` and reset those to zero.
pub fn lif_step<T: Scalar>(
    state: &LifState<T>,
    input: &[T],
    params: &LifParams<T>,
) -> Result<(LifState<T>, Vec<bool>)> {
    let mut next = state.clone();
    let mut spikes = vec![false; input.len()];
    lif_step_in_place(&mut next, input, params, &mut spikes)?;
    Ok((next, spikes))
}

/// In-place form used by the network; returns the spike count.
pub fn lif_step_in_place<T: Scalar>(
    state: &mut LifState<T>,
    input: &[T],
    params: &LifParams<T>,
    spikes: &mut [bool],
) -> Result<u64> {
    if state.v.len() != input.len() || spikes.len() != input.len() {
        return Err(Error::Shape(format!(
            "LIF state {} vs input {} vs spikes {}",
            state.v.len(),
            input.len(),
            spikes.len()
        )));
    }
    let mut count = 0;
    for ((v, &x), s) in state.v.iter_mut().zip(input).zip(spikes.iter_mut()) {
        *v = *v + (x - *v) / params.tau;
        *s = *v >= params.v_th;
        if *s {
            *v = T::zero();
            count += 1;
        }
    }
    Ok(count)
}
