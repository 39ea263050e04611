// SPDX-License-Identifier: MIT OR Apache-2.0

//! Frequency-domain one-step-ahead predictors for ultra-short AR(1)
//! sequences with a single structural break, and the Monte Carlo harness
//! that compares them against an ideal and an OLS AR(1) baseline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod kernel;
pub mod predictors;
mod quadrature;
pub mod simulate;
pub mod transfer;

pub use error::{Error, Result};
pub use experiment::{run_panel, run_scenario, table_preset, Panel, RmseReport, ScenarioConfig};
pub use kernel::{impulse_response_fft, impulse_response_quadrature, ImpulseResponse, TapMethod};
pub use predictors::{forecast_all, ForecastSet, OlsOptions};
pub use simulate::{BreakModel, InnovationSpec, Interval, Path};
pub use transfer::{ComplexValue, KernelSpec, PredictorParams, SmootherParams, Variant};
