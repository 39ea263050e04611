// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte Carlo comparison of the four predictors.
//!
//! A scenario fixes the coefficient ranges, the innovation law, `r` and `d`;
//! [`run_scenario`] simulates `n_sim` trials and reports the RMSE of each
//! predictor. Trials are independent (each has its own random stream) and
//! their squared errors are reduced in trial order, so the result is bitwise
//! identical for any worker count.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{ImpulseResponse, TapCache, TapMethod};
use crate::predictors::{forecast_all, OlsOptions};
use crate::simulate::{simulate_trial, InnovationSpec, Interval, ModelPrior};
use crate::transfer::{KernelSpec, PredictorParams, SmootherParams};

/// Trials per reduction block. Part of the determinism contract: changing it
/// changes the summation tree and therefore the last bits of every RMSE.
const BLOCK: usize = 4096;

pub const GRID_R: [f64; 4] = [0.8, 1.1, 1.5, 2.0];
pub const GRID_D: [usize; 3] = [4, 5, 6];
pub const DEFAULT_N_SIM: u64 = 300_000;
pub const DEFAULT_SIGMA: f64 = 0.3;
pub const DEFAULT_SEED: u64 = 42;

/// Shared kernel parameters `(γ, a, p, m, N)`; `r` varies per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub gamma_k: f64,
    pub a: f64,
    pub p: f64,
    pub m: u32,
    pub cap_n: u32,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            gamma_k: 1.1,
            a: 0.6,
            p: 0.7,
            m: 2,
            cap_n: 100,
        }
    }
}

impl KernelParams {
    /// The plain and smoothed kernel specs for a given `r`.
    pub fn specs(&self, r: f64) -> Result<(KernelSpec, KernelSpec)> {
        let predictor = PredictorParams::new(self.gamma_k, r)?;
        let smoother = SmootherParams::new(self.a, self.p, self.m, self.cap_n)?;
        Ok((
            KernelSpec::predict_only(predictor),
            KernelSpec::smoothed(predictor, smoother),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub beta1_range: Interval,
    pub beta2_range: Interval,
    pub innovation: InnovationSpec,
    pub r: f64,
    pub d: usize,
    pub n_sim: u64,
    pub seed: u64,
    pub sigma: f64,
    pub kernel: KernelParams,
    pub ols: OlsOptions,
    pub theta_min: usize,
    pub tap_method: TapMethod,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let unit = Interval::new(0.0, 1.0).expect("valid interval");
        Self {
            beta1_range: unit,
            beta2_range: unit,
            innovation: InnovationSpec::IidGaussian,
            r: 0.8,
            d: 4,
            n_sim: DEFAULT_N_SIM,
            seed: DEFAULT_SEED,
            sigma: DEFAULT_SIGMA,
            kernel: KernelParams::default(),
            ols: OlsOptions::default(),
            theta_min: 2,
            tap_method: TapMethod::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn prior(&self) -> Result<ModelPrior> {
        ModelPrior::new(
            self.beta1_range,
            self.beta2_range,
            self.sigma,
            self.theta_min,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sim < 1 {
            return Err(Error::domain("n-sim", "must be >= 1"));
        }
        if self.d < 4 {
            return Err(Error::domain("d", format!("must be >= 4, got {}", self.d)));
        }
        self.prior()?;
        self.kernel.specs(self.r)?;
        Ok(())
    }

    fn taps(
        &self,
    ) -> Result<(
        std::sync::Arc<ImpulseResponse>,
        std::sync::Arc<ImpulseResponse>,
    )> {
        let (k, kh) = self.kernel.specs(self.r)?;
        let cache = TapCache::global();
        Ok((
            cache.get_or_compute(&k, self.tap_method, 0, self.d)?,
            cache.get_or_compute(&kh, self.tap_method, 0, self.d)?,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub e_ideal: f64,
    pub e_ar1: f64,
    pub e_k: f64,
    pub e_kh: f64,
    pub ratio_ideal: f64,
    pub ratio_k: f64,
    pub ratio_kh: f64,
    pub n_sim: u64,
    pub config: ScenarioConfig,
}

/// One flat output row; field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub r: f64,
    pub d: usize,
    pub e_ideal: f64,
    pub e_ar1: f64,
    pub e_k: f64,
    pub e_kh: f64,
    pub ratio_ideal: f64,
    pub ratio_k: f64,
    pub ratio_kh: f64,
    pub n_sim: u64,
    pub seed: u64,
}

fn ratio(e: f64, e_ar1: f64) -> f64 {
    if e_ar1 > 0.0 {
        e / e_ar1
    } else if e == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

impl RmseReport {
    fn from_sums(sums: [f64; 4], config: ScenarioConfig) -> Self {
        let n = config.n_sim as f64;
        let [e_ideal, e_ar1, e_k, e_kh] = sums.map(|s| (s / n).sqrt());
        Self {
            e_ideal,
            e_ar1,
            e_k,
            e_kh,
            ratio_ideal: ratio(e_ideal, e_ar1),
            ratio_k: ratio(e_k, e_ar1),
            ratio_kh: ratio(e_kh, e_ar1),
            n_sim: config.n_sim,
            config,
        }
    }

    pub fn row(&self) -> RmseRow {
        RmseRow {
            r: self.config.r,
            d: self.config.d,
            e_ideal: self.e_ideal,
            e_ar1: self.e_ar1,
            e_k: self.e_k,
            e_kh: self.e_kh,
            ratio_ideal: self.ratio_ideal,
            ratio_k: self.ratio_k,
            ratio_kh: self.ratio_kh,
            n_sim: self.n_sim,
            seed: self.config.seed,
        }
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (lo, hi) = v.split_at(v.len() / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

fn pairwise_sum4(rows: &[[f64; 4]]) -> [f64; 4] {
    let mut column = Vec::with_capacity(rows.len());
    std::array::from_fn(|j| {
        column.clear();
        column.extend(rows.iter().map(|r| r[j]));
        pairwise_sum(&column)
    })
}

/// Squared forecast errors (ideal, AR(1), K, KH) of one trial.
pub fn trial_errors(
    config: &ScenarioConfig,
    prior: &ModelPrior,
    taps_k: &ImpulseResponse,
    taps_kh: &ImpulseResponse,
    trial_index: u64,
) -> Result<[f64; 4]> {
    let (path, _) = simulate_trial(prior, config.innovation, config.d, config.seed, trial_index)?;
    Ok(forecast_all(&path, taps_k, taps_kh, config.ols)?.squared_errors())
}

fn block_sums(
    config: &ScenarioConfig,
    prior: &ModelPrior,
    taps_k: &ImpulseResponse,
    taps_kh: &ImpulseResponse,
    block: u64,
) -> Result<[f64; 4]> {
    let first = block * BLOCK as u64 + 1;
    let last = (first + BLOCK as u64 - 1).min(config.n_sim);
    let errors = (first..=last)
        .map(|s| trial_errors(config, prior, taps_k, taps_kh, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum4(&errors))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    if workers < 1 {
        return Err(Error::domain("workers", "must be >= 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain("workers", e.to_string()))
}

/// Simulate `n_sim` trials and return the four RMSEs.
pub fn run_scenario(config: &ScenarioConfig, workers: usize) -> Result<RmseReport> {
    let pool = pool(workers)?;
    pool.install(|| run_scenario_in_pool(config))
}

fn run_scenario_in_pool(config: &ScenarioConfig) -> Result<RmseReport> {
    config.validate()?;
    let prior = config.prior()?;
    let (taps_k, taps_kh) = config.taps()?;
    let blocks = config.n_sim.div_ceil(BLOCK as u64);
    let partial: Vec<Result<[f64; 4]>> = (0..blocks)
        .into_par_iter()
        .map(|b| block_sums(config, &prior, &taps_k, &taps_kh, b))
        .collect();
    // first failing trial in index order, independent of scheduling
    let partial = partial.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(RmseReport::from_sums(pairwise_sum4(&partial), *config))
}

/// Reports for every `(r, d)`, `r`-major, in the given list orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub title: Option<String>,
    pub reports: Vec<RmseReport>,
}

pub fn run_panel(
    template: &ScenarioConfig,
    r_list: &[f64],
    d_list: &[usize],
    workers: usize,
) -> Result<Panel> {
    if r_list.is_empty() {
        return Err(Error::domain("r", "the r list is empty"));
    }
    if d_list.is_empty() {
        return Err(Error::domain("d", "the d list is empty"));
    }
    let pool = pool(workers)?;
    let reports = r_list
        .iter()
        .flat_map(|&r| d_list.iter().map(move |&d| (r, d)))
        .map(|(r, d)| {
            let config = ScenarioConfig { r, d, ..*template };
            pool.install(|| run_scenario_in_pool(&config))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Panel {
        title: None,
        reports,
    })
}

impl Panel {
    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn rows(&self) -> Vec<RmseRow> {
        self.reports.iter().map(RmseReport::row).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in self.rows() {
            writer
                .serialize(row)
                .map_err(|e| Error::domain("format", e.to_string()))?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::domain("format", e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.rows())
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| Error::domain("format", e.to_string()))
    }

    /// Aligned markdown with the column order of the reference tables.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        if let Some(title) = &self.title {
            let _ = writeln!(out, "**{title}**\n");
        }
        let header = [
            "",
            "e_ideal",
            "e_AR(1)",
            "e_K",
            "e_KH",
            "e_ideal / e_AR(1)",
            "e_K / e_AR(1)",
            "e_KH / e_AR(1)",
        ];
        let body: Vec<[String; 8]> = self
            .reports
            .iter()
            .map(|rep| {
                let num = |v: f64| format!("{v:.5}");
                [
                    format!("r = {}, d={}", rep.config.r, rep.config.d),
                    num(rep.e_ideal),
                    num(rep.e_ar1),
                    num(rep.e_k),
                    num(rep.e_kh),
                    num(rep.ratio_ideal),
                    num(rep.ratio_k),
                    num(rep.ratio_kh),
                ]
            })
            .collect();
        let widths: [usize; 8] = std::array::from_fn(|j| {
            body.iter()
                .map(|row| row[j].len())
                .chain([header[j].len()])
                .max()
                .unwrap_or(0)
        });
        let line = |cells: &[&str]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(j, (c, w))| {
                    if j == 0 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        out.push_str(&line(&header));
        let rule: Vec<String> = widths
            .iter()
            .enumerate()
            .map(|(j, &w)| {
                if j == 0 {
                    format!(":{}", "-".repeat(w.max(1) - 1))
                } else {
                    format!("{}:", "-".repeat(w.max(1) - 1))
                }
            })
            .collect();
        out.push_str(&format!("| {} |\n", rule.join(" | ")));
        for row in &body {
            let cells: Vec<&str> = row.iter().map(String::as_str).collect();
            out.push_str(&line(&cells));
        }
        out
    }
}

/// `(β₁ range, β₂ range, innovation, n_sim, r list)` of a reference table panel.
#[derive(Debug, Clone, PartialEq)]
pub struct TablePreset {
    pub title: String,
    pub beta1_range: Interval,
    pub beta2_range: Interval,
    pub innovation: InnovationSpec,
    pub n_sim: u64,
    pub r_list: Vec<f64>,
}

impl TablePreset {
    /// Apply the preset to a scenario template.
    pub fn apply(&self, template: &ScenarioConfig) -> ScenarioConfig {
        ScenarioConfig {
            beta1_range: self.beta1_range,
            beta2_range: self.beta2_range,
            innovation: self.innovation,
            n_sim: self.n_sim,
            ..*template
        }
    }
}

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).expect("preset intervals are valid")
}

/// Presets for tables 1–5. Table 1 varies `n_sim` across its panels; the
/// others vary the coefficient ranges at `n_sim = 3·10⁵`.
pub fn table_preset(table: u8, panel: char) -> Result<TablePreset> {
    let panel = panel.to_ascii_lowercase();
    let pos = iv(0.0, 1.0);
    let neg = iv(-1.0, 0.0);
    let wide = iv(-1.0, 1.0);
    let innovation = match table {
        1 | 2 => InnovationSpec::IidGaussian,
        3 => InnovationSpec::ShiftedGamma,
        // the reference table indexes time from 1
        4 => InnovationSpec::ScaledPseudoUniform { phase_offset: 1 },
        5 => InnovationSpec::Ma1Gaussian,
        _ => {
            return Err(Error::domain(
                "table",
                format!("no table {table}; expected 1-5"),
            ))
        }
    };
    let bad_panel = || Error::domain("panel", format!("table {table} has no panel ({panel})"));
    let (beta1_range, beta2_range, n_sim) = match (table, panel) {
        (1, 'a') => (pos, pos, 100_000),
        (1, 'b') => (pos, pos, 200_000),
        (1, 'c') => (pos, pos, 300_000),
        (1, _) => return Err(bad_panel()),
        (2, 'a') => (wide, wide, DEFAULT_N_SIM),
        (2, 'b') => (neg, pos, DEFAULT_N_SIM),
        (2, 'c') => (pos, neg, DEFAULT_N_SIM),
        (2, _) => return Err(bad_panel()),
        (_, 'a') => (pos, pos, DEFAULT_N_SIM),
        (_, 'b') => (wide, wide, DEFAULT_N_SIM),
        (_, 'c') => (neg, pos, DEFAULT_N_SIM),
        (_, 'd') => (pos, neg, DEFAULT_N_SIM),
        _ => return Err(bad_panel()),
    };
    let r_list = if table <= 2 {
        GRID_R.to_vec()
    } else {
        vec![0.8, 2.0]
    };
    Ok(TablePreset {
        title: format!(
            "Table {table} panel ({panel}): beta1 in {beta1_range}, beta2 in {beta2_range}, {} innovations, N_sim = {n_sim}",
            innovation.name()
        ),
        beta1_range,
        beta2_range,
        innovation,
        n_sim,
        r_list,
    })
}
