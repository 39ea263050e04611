// SPDX-License-Identifier: MIT OR Apache-2.0

//! Trial paths from the AR(1) model with a single structural break,
//!
//! `x(t) = β(t)·x(t−1) + σ·η(t)`, `x(−1) = 0`, `β(t) = β₁` for `t < θ`
//! and `β₂` for `t ≥ θ`,
//!
//! under four innovation laws. Every trial owns an independent random stream
//! derived from `(master seed, trial index)`, so trials can be generated in
//! any order on any number of workers with identical results.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TrialRng = ChaCha8Rng;

/// Independent stream for one trial: the master seed keys the generator and
/// the trial index selects the ChaCha stream.
pub fn trial_stream(master_seed: u64, trial_index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Open interval `(lo, hi)` inside `[-1, 1]` for an AR coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::domain(
                "range",
                format!("need lo < hi, got ({lo}, {hi})"),
            ));
        }
        if lo < -1.0 || hi > 1.0 {
            return Err(Error::domain(
                "range",
                format!("({lo}, {hi}) is not inside (-1, 1)"),
            ));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo < v && v < self.hi
    }

    /// Uniform draw from the open interval.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let v = rng.random_range(self.lo..self.hi);
            if v > self.lo {
                return v;
            }
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

impl FromStr for Interval {
    type Err = Error;

    /// Parses `lo,hi`.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| Error::domain("range", format!("expected `lo,hi`, got `{s}`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::domain("range", format!("`{v}`: {e}")))
        };
        Interval::new(parse(lo)?, parse(hi)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnovationSpec {
    /// IID standard normal.
    IidGaussian,
    /// `Γ(2, 2^(−1/2)) − √2`.
    ShiftedGamma,
    /// Deterministic `√12·(frac(exp(t + k + 3·arctan s)) − 1/2)` where `s`
    /// is the trial index and `k` the phase offset.
    ScaledPseudoUniform { phase_offset: u32 },
    /// `2^(−1/2)(η₀(t) + η₀(t−1))` with IID standard normal `η₀`.
    Ma1Gaussian,
}

impl InnovationSpec {
    pub fn is_stochastic(&self) -> bool {
        !matches!(self, InnovationSpec::ScaledPseudoUniform { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            InnovationSpec::IidGaussian => "gaussian",
            InnovationSpec::ShiftedGamma => "gamma",
            InnovationSpec::ScaledPseudoUniform { .. } => "pseudo-uniform",
            InnovationSpec::Ma1Gaussian => "ma1",
        }
    }
}

/// `√12·(frac(exp(t + 3·arctan s)) − 1/2)`.
pub fn pseudo_uniform(t: f64, s: u64) -> f64 {
    let v = (t + 3.0 * (s as f64).atan()).exp();
    12f64.sqrt() * (v.fract() - 0.5)
}

/// Parameters of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakModel {
    pub beta1: f64,
    pub beta2: f64,
    pub theta: usize,
    pub sigma: f64,
    pub d: usize,
}

impl BreakModel {
    pub fn new(beta1: f64, beta2: f64, theta: usize, sigma: f64, d: usize) -> Result<Self> {
        check_d(d)?;
        if !(beta1.abs() < 1.0) {
            return Err(Error::domain(
                "beta1",
                format!("|beta1| must be < 1, got {beta1}"),
            ));
        }
        if !(beta2.abs() < 1.0) {
            return Err(Error::domain(
                "beta2",
                format!("|beta2| must be < 1, got {beta2}"),
            ));
        }
        if !(1..=d - 2).contains(&theta) {
            return Err(Error::domain(
                "theta",
                format!("break time must lie in 1..={}, got {theta}", d - 2),
            ));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::domain("sigma", format!("must be >= 0, got {sigma}")));
        }
        Ok(Self {
            beta1,
            beta2,
            theta,
            sigma,
            d,
        })
    }

    /// `β(t)`
    pub fn beta_at(&self, t: usize) -> f64 {
        if t < self.theta {
            self.beta1
        } else {
            self.beta2
        }
    }
}

/// Distribution of per-trial model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPrior {
    pub beta1: Interval,
    pub beta2: Interval,
    pub sigma: f64,
    /// Smallest break time; the largest is always `d − 2`.
    pub theta_min: usize,
}

impl ModelPrior {
    pub fn new(beta1: Interval, beta2: Interval, sigma: f64, theta_min: usize) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::domain("sigma", format!("must be >= 0, got {sigma}")));
        }
        if !(1..=2).contains(&theta_min) {
            return Err(Error::domain(
                "theta-min",
                format!("must be 1 or 2, got {theta_min}"),
            ));
        }
        Ok(Self {
            beta1,
            beta2,
            sigma,
            theta_min,
        })
    }
}

fn check_d(d: usize) -> Result<()> {
    if d < 4 {
        return Err(Error::domain("d", format!("must be >= 4, got {d}")));
    }
    Ok(())
}

/// `β₁ ~ U(beta1)`, `β₂ ~ U(beta2)`, `θ ~ U{theta_min, …, d−2}`, independently.
pub fn draw_model<R: Rng + ?Sized>(
    prior: &ModelPrior,
    d: usize,
    rng: &mut R,
) -> Result<BreakModel> {
    check_d(d)?;
    let beta1 = prior.beta1.sample(rng);
    let beta2 = prior.beta2.sample(rng);
    let theta = rng.random_range(prior.theta_min..=d - 2);
    BreakModel::new(beta1, beta2, theta, prior.sigma, d)
}

/// `η(0), …, η(d)` for one trial.
pub fn draw_innovations<R: Rng + ?Sized>(
    spec: InnovationSpec,
    d: usize,
    trial_index: u64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_d(d)?;
    if trial_index < 1 {
        return Err(Error::domain("trial", "trial indices start at 1"));
    }
    let len = d + 1;
    let eta = match spec {
        InnovationSpec::IidGaussian => (0..len).map(|_| rng.sample(StandardNormal)).collect(),
        InnovationSpec::ShiftedGamma => {
            // Γ(2, λ) is the sum of two Exp(λ) variables
            let scale = SQRT_2.recip();
            (0..len)
                .map(|_| {
                    let u1 = 1.0 - rng.random::<f64>();
                    let u2 = 1.0 - rng.random::<f64>();
                    -scale * (u1.ln() + u2.ln()) - SQRT_2
                })
                .collect()
        }
        InnovationSpec::ScaledPseudoUniform { phase_offset } => (0..len)
            .map(|t| pseudo_uniform((t + phase_offset as usize) as f64, trial_index))
            .collect(),
        InnovationSpec::Ma1Gaussian => {
            // η₀(−1) is drawn too, so η(0) already has the stationary law
            let base: Vec<f64> = (0..len + 1).map(|_| rng.sample(StandardNormal)).collect();
            base.windows(2)
                .map(|w| (w[0] + w[1]) * SQRT_2.recip())
                .collect()
        }
    };
    Ok(eta)
}

/// One simulated learning sequence plus its target, `x(0..=d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub x: Vec<f64>,
    pub model: BreakModel,
    pub trial_index: u64,
}

impl Path {
    /// The learning sequence `x(0..d)`.
    pub fn learning(&self) -> &[f64] {
        &self.x[..self.model.d]
    }

    /// The value to forecast, `x(d)`.
    pub fn target(&self) -> f64 {
        self.x[self.model.d]
    }
}

pub fn simulate_path(model: BreakModel, eta: &[f64], trial_index: u64) -> Result<Path> {
    if eta.len() != model.d + 1 {
        return Err(Error::domain(
            "d",
            format!("expected {} innovations, got {}", model.d + 1, eta.len()),
        ));
    }
    let mut prev = 0.0;
    let x = eta
        .iter()
        .enumerate()
        .map(|(t, &e)| {
            prev = model.beta_at(t) * prev + model.sigma * e;
            prev
        })
        .collect();
    Ok(Path {
        x,
        model,
        trial_index,
    })
}

/// Draw model and innovations from the trial's own stream and simulate.
pub fn simulate_trial(
    prior: &ModelPrior,
    innovation: InnovationSpec,
    d: usize,
    master_seed: u64,
    trial_index: u64,
) -> Result<(Path, Vec<f64>)> {
    let mut rng = trial_stream(master_seed, trial_index);
    let model = draw_model(prior, d, &mut rng)?;
    let eta = draw_innovations(innovation, d, trial_index, &mut rng)?;
    let path = simulate_path(model, &eta, trial_index)?;
    Ok((path, eta))
}
