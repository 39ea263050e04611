// SPDX-License-Identifier: MIT OR Apache-2.0

//! Impulse responses from transfer functions by the inverse Z-transform
//!
//! `h(t) = (1/2π) ∫_{−π}^{π} H(e^{iω}) e^{iωt} dω`
//!
//! is realized two ways. [`impulse_response_fft`] samples `H` on an `M`-point
//! grid and inverts with an FFT, which returns the aliased sum
//! `Σ_j h(t + jM)`. [`impulse_response_quadrature`] integrates each tap with
//! adaptive Gauss–Kronrod. The DFT path is the production default; the
//! quadrature path exists to cross-check it.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::transfer::{ComplexValue, KernelSpec, TransferFunction};

pub const DEFAULT_DFT_SIZE: usize = 1 << 16;
pub const MIN_DFT_SIZE: usize = 1024;
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
pub const MAX_INTERVALS: usize = 100_000;
/// Largest discarded imaginary part accepted for a real impulse response.
pub const MAX_IMAG_RESIDUAL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TapMethod {
    Quadrature {
        abs_tol: f64,
    },
    DftSampling {
        dft_size: usize,
    },
    /// Taps supplied directly rather than computed from a transfer function.
    Explicit,
}

impl TapMethod {
    pub fn name(&self) -> &'static str {
        match self {
            TapMethod::Quadrature { .. } => "quadrature",
            TapMethod::DftSampling { .. } => "dft",
            TapMethod::Explicit => "explicit",
        }
    }

    /// Quadrature tolerance or DFT size; zero for explicit taps.
    pub fn param(&self) -> f64 {
        match *self {
            TapMethod::Quadrature { abs_tol } => abs_tol,
            TapMethod::DftSampling { dft_size } => dft_size as f64,
            TapMethod::Explicit => 0.0,
        }
    }
}

impl Default for TapMethod {
    fn default() -> Self {
        TapMethod::DftSampling {
            dft_size: DEFAULT_DFT_SIZE,
        }
    }
}

/// Real taps `h(first_index .. first_index + len)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseResponse {
    spec: Option<KernelSpec>,
    first_index: i64,
    taps: Vec<f64>,
    max_imag_residual: f64,
    method: TapMethod,
}

impl ImpulseResponse {
    /// Wrap hand-specified taps, e.g. a unit impulse.
    pub fn from_taps(first_index: i64, taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::domain(
                "count",
                "an impulse response needs at least one tap",
            ));
        }
        if taps.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("explicit taps"));
        }
        Ok(Self {
            spec: None,
            first_index,
            taps,
            max_imag_residual: 0.0,
            method: TapMethod::Explicit,
        })
    }

    /// `None` when the taps came from a test transfer function or were given explicitly.
    pub fn spec(&self) -> Option<&KernelSpec> {
        self.spec.as_ref()
    }

    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn max_imag_residual(&self) -> f64 {
        self.max_imag_residual
    }

    pub fn method(&self) -> TapMethod {
        self.method
    }

    /// `h(t)`, if `t` lies in the window.
    pub fn tap(&self, t: i64) -> Option<f64> {
        let offset = t.checked_sub(self.first_index)?;
        usize::try_from(offset)
            .ok()
            .and_then(|i| self.taps.get(i).copied())
    }

    /// Iterate `(t, h(t))`.
    pub fn indexed(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        (self.first_index..).zip(self.taps.iter().copied())
    }

    fn with_spec(mut self, spec: KernelSpec) -> Self {
        self.spec = Some(spec);
        self
    }
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::domain("count", "must be >= 1"));
    }
    Ok(())
}

fn accept(residual: f64) -> Result<()> {
    if residual > MAX_IMAG_RESIDUAL {
        return Err(Error::ImaginaryResidual {
            residual,
            limit: MAX_IMAG_RESIDUAL,
        });
    }
    Ok(())
}

/// Taps of `spec` by adaptive Gauss–Kronrod quadrature, one integral per tap.
pub fn impulse_response_quadrature(
    spec: &KernelSpec,
    first_index: i64,
    count: usize,
    abs_tol: f64,
) -> Result<ImpulseResponse> {
    quadrature_response(spec, first_index, count, abs_tol).map(|ir| ir.with_spec(*spec))
}

/// Quadrature inversion of an arbitrary transfer function.
///
/// Contributions from `ω` and `−ω` are paired so the real part is integrated
/// on `[0, π]` without assuming conjugate symmetry; the imaginary part is
/// integrated the same way and reported as the residual.
pub fn quadrature_response<T>(
    h: &T,
    first_index: i64,
    count: usize,
    abs_tol: f64,
) -> Result<ImpulseResponse>
where
    T: TransferFunction + ?Sized,
{
    check_count(count)?;
    if !(abs_tol > 0.0) {
        return Err(Error::domain("tol", format!("must be > 0, got {abs_tol}")));
    }
    let mut taps = Vec::with_capacity(count);
    let mut residual = 0.0_f64;
    for t in (first_index..).take(count) {
        let tf = t as f64;
        let paired = |omega: f64| -> Result<ComplexValue> {
            let pos = h.eval(ComplexValue::from_polar(1.0, omega))?
                * ComplexValue::from_polar(1.0, omega * tf);
            let neg = h.eval(ComplexValue::from_polar(1.0, -omega))?
                * ComplexValue::from_polar(1.0, -omega * tf);
            Ok((pos + neg) / (2.0 * PI))
        };
        let re =
            quadrature::integrate(|w| paired(w).map(|v| v.re), 0.0, PI, abs_tol, MAX_INTERVALS)?;
        if !re.converged {
            return Err(Error::Convergence {
                tap: t,
                estimate: re.error,
                intervals: re.intervals,
                tolerance: abs_tol,
            });
        }
        let im =
            quadrature::integrate(|w| paired(w).map(|v| v.im), 0.0, PI, abs_tol, MAX_INTERVALS)?;
        residual = residual.max(im.value.abs());
        taps.push(re.value);
    }
    accept(residual)?;
    Ok(ImpulseResponse {
        spec: None,
        first_index,
        taps,
        max_imag_residual: residual,
        method: TapMethod::Quadrature { abs_tol },
    })
}

/// Taps of `spec` from `dft_size` uniform samples of `H` on the unit circle.
pub fn impulse_response_fft(
    spec: &KernelSpec,
    dft_size: usize,
    first_index: i64,
    count: usize,
) -> Result<ImpulseResponse> {
    dft_response(spec, dft_size, first_index, count).map(|ir| ir.with_spec(*spec))
}

/// DFT-sampling inversion of an arbitrary transfer function:
/// `h_M(t) = (1/M) Σ_k H(e^{2πik/M}) e^{2πikt/M}`.
pub fn dft_response<T>(
    h: &T,
    dft_size: usize,
    first_index: i64,
    count: usize,
) -> Result<ImpulseResponse>
where
    T: TransferFunction + ?Sized,
{
    check_count(count)?;
    if dft_size < MIN_DFT_SIZE || !dft_size.is_power_of_two() {
        return Err(Error::domain(
            "dft-size",
            format!("must be a power of two >= {MIN_DFT_SIZE}, got {dft_size}"),
        ));
    }
    if count > dft_size {
        return Err(Error::domain(
            "count",
            format!("cannot exceed the DFT size {dft_size}"),
        ));
    }
    let step = 2.0 * PI / dft_size as f64;
    let mut buf = (0..dft_size)
        .map(|k| h.eval(ComplexValue::from_polar(1.0, step * k as f64)))
        .collect::<Result<Vec<_>>>()?;
    FftPlanner::new()
        .plan_fft_inverse(dft_size)
        .process(&mut buf);

    let modulus = dft_size as i64;
    let scale = 1.0 / dft_size as f64;
    let mut residual = 0.0_f64;
    let taps = (first_index..)
        .take(count)
        .map(|t| {
            let v = buf[t.rem_euclid(modulus) as usize] * scale;
            residual = residual.max(v.im.abs());
            v.re
        })
        .collect();
    accept(residual)?;
    Ok(ImpulseResponse {
        spec: None,
        first_index,
        taps,
        max_imag_residual: residual,
        method: TapMethod::DftSampling { dft_size },
    })
}

/// Compute taps for `spec` with the given method.
pub fn compute(
    spec: &KernelSpec,
    method: TapMethod,
    first_index: i64,
    count: usize,
) -> Result<ImpulseResponse> {
    match method {
        TapMethod::Quadrature { abs_tol } => {
            impulse_response_quadrature(spec, first_index, count, abs_tol)
        }
        TapMethod::DftSampling { dft_size } => {
            impulse_response_fft(spec, dft_size, first_index, count)
        }
        TapMethod::Explicit => Err(Error::domain(
            "method",
            "explicit taps cannot be computed from a spec",
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    variant: u8,
    params: [u64; 6],
    method: u8,
    method_param: u64,
    first_index: i64,
    count: usize,
}

impl CacheKey {
    fn new(spec: &KernelSpec, method: TapMethod, first_index: i64, count: usize) -> Self {
        let p = spec.predictor();
        let (a, pp, m, n) = spec
            .smoother()
            .map(|s| (s.a(), s.p(), s.m(), s.cap_n()))
            .unwrap_or((0.0, 0.0, 0, 0));
        let (tag, param) = match method {
            TapMethod::Quadrature { abs_tol } => (0, abs_tol.to_bits()),
            TapMethod::DftSampling { dft_size } => (1, dft_size as u64),
            TapMethod::Explicit => (2, 0),
        };
        Self {
            variant: spec.variant() as u8,
            params: [
                p.gamma_k().to_bits(),
                p.r().to_bits(),
                a.to_bits(),
                pp.to_bits(),
                u64::from(m),
                u64::from(n),
            ],
            method: tag,
            method_param: param,
            first_index,
            count,
        }
    }
}

/// Memoized impulse responses keyed by the full parameter tuple.
///
/// Each entry is computed once and then shared read-only; concurrent readers
/// only take the read lock.
#[derive(Debug, Default)]
pub struct TapCache {
    entries: RwLock<HashMap<CacheKey, Arc<ImpulseResponse>>>,
}

impl TapCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide cache.
    pub fn global() -> &'static TapCache {
        static GLOBAL: OnceLock<TapCache> = OnceLock::new();
        GLOBAL.get_or_init(TapCache::new)
    }

    pub fn get_or_compute(
        &self,
        spec: &KernelSpec,
        method: TapMethod,
        first_index: i64,
        count: usize,
    ) -> Result<Arc<ImpulseResponse>> {
        let key = CacheKey::new(spec, method, first_index, count);
        if let Some(hit) = self.entries.read().expect("tap cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let computed = Arc::new(compute(spec, method, first_index, count)?);
        let mut entries = self.entries.write().expect("tap cache poisoned");
        // another thread may have won the race; keep the first entry
        Ok(Arc::clone(entries.entry(key).or_insert(computed)))
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("tap cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
