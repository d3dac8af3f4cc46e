// SPDX-License-Identifier: Apache-2.0
//! Experiment driver for the in-pixel MAC simulator.

pub mod commands;
pub mod config;

pub use config::ExperimentConfig;
