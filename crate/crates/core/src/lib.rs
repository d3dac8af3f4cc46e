// SPDX-License-Identifier: Apache-2.0
//! Event-driven simulator of an in-pixel analog MAC layer for DVS sensors,
//! with a spiking backend and bandwidth/energy accounting.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases
//! at the crate root fix it to `f64`; the `*32` aliases fix it to `f32`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conv;
pub mod dump;
mod error;
pub mod events;
pub mod mac;
pub mod metrics;
pub mod pipeline;
mod scalar;
pub mod snn;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type CircuitConfig = mac::CircuitConfig<f64>;
pub type Kernel = mac::Kernel<f64>;
pub type LeakageParams = mac::LeakageParams<f64>;
pub type MacState = mac::MacState<f64>;
pub type VoltageTrace = mac::VoltageTrace<f64>;
pub type PolyFit = mac::PolyFit<f64>;
pub type PreactivationMap = conv::PreactivationMap<f64>;
pub type LifParams = snn::LifParams<f64>;
pub type LifState = snn::LifState<f64>;
pub type WeightBundle = snn::WeightBundle<f64>;
pub type NetworkOutput = snn::NetworkOutput<f64>;
pub type PipelineConfig = pipeline::PipelineConfig<f64>;

pub type CircuitConfig32 = mac::CircuitConfig<f32>;
pub type Kernel32 = mac::Kernel<f32>;
pub type LifParams32 = snn::LifParams<f32>;
pub type WeightBundle32 = snn::WeightBundle<f32>;
