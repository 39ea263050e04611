// SPDX-License-Identifier: MIT OR Apache-2.0

//! The four one-step-ahead forecasts of `x(d)` from `x(0..d)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::ImpulseResponse;
use crate::simulate::{BreakModel, Path};

/// Regressor variance below which an AR(1) fit is treated as degenerate.
pub const DEGENERATE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DegeneratePolicy {
    /// Use a zero slope, so the forecast falls back to the fitted level.
    #[default]
    ZeroSlope,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OlsOptions {
    /// Centre the series on its sample mean before fitting.
    pub demean: bool,
    /// Fit `x(t) = c + β·x(t−1)` instead of `x(t) = β·x(t−1)`.
    pub intercept: bool,
    pub degenerate_policy: DegeneratePolicy,
}

/// Fitted AR(1) regression: forecast is `level + slope·(x − centre)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Fit {
    pub slope: f64,
    pub level: f64,
    pub centre: f64,
}

impl Ar1Fit {
    pub fn predict(&self, last: f64) -> f64 {
        self.level + self.slope * (last - self.centre)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Least-squares AR(1) fit on `x(0..d)`.
pub fn fit_ar1(x: &[f64], opts: OlsOptions) -> Result<Ar1Fit> {
    if x.len() < 3 {
        return Err(Error::domain(
            "d",
            format!("need at least 3 observations, got {}", x.len()),
        ));
    }
    let centre = if opts.demean { mean(x) } else { 0.0 };
    let lagged: Vec<f64> = x[..x.len() - 1].iter().map(|v| v - centre).collect();
    let current: Vec<f64> = x[1..].iter().map(|v| v - centre).collect();

    let (lag_mean, cur_mean) = if opts.intercept {
        (mean(&lagged), mean(&current))
    } else {
        (0.0, 0.0)
    };
    let (num, den) = lagged
        .iter()
        .zip(&current)
        .fold((0.0, 0.0), |(num, den), (l, c)| {
            let l = l - lag_mean;
            (num + l * (c - cur_mean), den + l * l)
        });

    let slope = if den < DEGENERATE_THRESHOLD {
        match opts.degenerate_policy {
            DegeneratePolicy::ZeroSlope => 0.0,
            DegeneratePolicy::Error => return Err(Error::Degenerate { trial: 0 }),
        }
    } else {
        num / den
    };
    // with an intercept the fitted line passes through the lag/current means
    let level = centre + cur_mean - slope * lag_mean;
    Ok(Ar1Fit {
        slope,
        level,
        centre,
    })
}

/// `β̂`, the fitted AR(1) slope.
pub fn estimate_ar1(x: &[f64], opts: OlsOptions) -> Result<f64> {
    fit_ar1(x, opts).map(|f| f.slope)
}

/// `Σ_{τ=0}^{d−1} h(d−1−τ)·x(τ)`.
pub fn predict_kernel(x: &[f64], taps: &ImpulseResponse) -> Result<f64> {
    let d = x.len();
    if d == 0 || taps.first_index() != 0 || taps.len() < d {
        return Err(Error::TapWindow {
            first: taps.first_index(),
            len: taps.len(),
            needed: d,
        });
    }
    let h = taps.taps();
    Ok(x.iter().rev().zip(h).map(|(x, h)| x * h).sum())
}

/// `β₂·x(d−1)`, infeasible in practice since `β₂` is unknown.
pub fn predict_ideal(model: &BreakModel, x: &[f64]) -> Result<f64> {
    if model.theta + 2 > model.d {
        return Err(Error::domain("theta", "break must occur by d - 2"));
    }
    let last = x
        .last()
        .ok_or_else(|| Error::domain("d", "empty learning sequence"))?;
    Ok(model.beta2 * last)
}

/// `β̂·x(d−1)` under the default options, or the fitted-level variant.
pub fn predict_ar1(x: &[f64], opts: OlsOptions) -> Result<f64> {
    let fit = fit_ar1(x, opts)?;
    Ok(fit.predict(x[x.len() - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastSet {
    pub y_k: f64,
    pub y_kh: f64,
    pub y_ideal: f64,
    pub y_ar1: f64,
    /// Realized `x(d)`.
    pub target: f64,
}

impl ForecastSet {
    /// Squared errors in the order ideal, AR(1), K, KH.
    pub fn squared_errors(&self) -> [f64; 4] {
        [self.y_ideal, self.y_ar1, self.y_k, self.y_kh].map(|y| (self.target - y).powi(2))
    }
}

pub fn forecast_all(
    path: &Path,
    taps_k: &ImpulseResponse,
    taps_kh: &ImpulseResponse,
    opts: OlsOptions,
) -> Result<ForecastSet> {
    let x = path.learning();
    let y_ar1 = predict_ar1(x, opts).map_err(|e| match e {
        Error::Degenerate { .. } => Error::Degenerate {
            trial: path.trial_index,
        },
        other => other,
    })?;
    let set = ForecastSet {
        y_k: predict_kernel(x, taps_k)?,
        y_kh: predict_kernel(x, taps_kh)?,
        y_ideal: predict_ideal(&path.model, x)?,
        y_ar1,
        target: path.target(),
    };
    if [set.y_k, set.y_kh, set.y_ideal, set.y_ar1]
        .iter()
        .all(|v| v.is_finite())
    {
        Ok(set)
    } else {
        Err(Error::NonFinite("forecast"))
    }
}
