// SPDX-License-Identifier: MIT OR Apache-2.0

//! Pointwise evaluation of the predictor transfer functions.
//!
//! `K(z)` is the one-step predicting kernel, `F(z)` the near-ideal causal
//! smoother built from `G(z)`, `ξ(a,p)` and `γ(a,p)`. The smoothed predictor
//! uses `H = K·F`, the plain one uses `H = K`. Everything here is a pure
//! function of its arguments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexValue = Complex64;

/// Evaluations closer than this to a singular point are rejected.
pub const SINGULARITY_GUARD: f64 = 1e-9;

/// Anything that can be sampled on the unit circle and inverted into taps.
///
/// `KernelSpec` is the production implementation; closures work too, which is
/// how tests inject simple spectra such as `H(z) = z`.
pub trait TransferFunction: Sync {
    fn eval(&self, z: ComplexValue) -> Result<ComplexValue>;
}

impl<F> TransferFunction for F
where
    F: Fn(ComplexValue) -> Result<ComplexValue> + Sync,
{
    fn eval(&self, z: ComplexValue) -> Result<ComplexValue> {
        self(z)
    }
}

/// Parameters `(γ, r)` of the predicting kernel `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    gamma_k: f64,
    r: f64,
}

impl PredictorParams {
    pub fn new(gamma_k: f64, r: f64) -> Result<Self> {
        if !(gamma_k.is_finite() && gamma_k > 0.0) {
            return Err(Error::domain(
                "gamma",
                format!("must be > 0, got {gamma_k}"),
            ));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::domain("r", format!("must be > 0, got {r}")));
        }
        Ok(Self { gamma_k, r })
    }

    pub fn gamma_k(&self) -> f64 {
        self.gamma_k
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Location `γ^(−r) − 1` of the essential singularity of `K`.
    pub fn pole(&self) -> f64 {
        self.gamma_k.powf(-self.r) - 1.0
    }
}

impl Default for PredictorParams {
    fn default() -> Self {
        Self {
            gamma_k: 1.1,
            r: 0.8,
        }
    }
}

/// Parameters `(a, p, m, N)` of the smoothing filter `F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherParams {
    a: f64,
    p: f64,
    m: u32,
    cap_n: u32,
}

impl SmootherParams {
    pub fn new(a: f64, p: f64, m: u32, cap_n: u32) -> Result<Self> {
        check_ap(a, p)?;
        if m < 1 {
            return Err(Error::domain("m", "must be >= 1"));
        }
        if cap_n < 1 {
            return Err(Error::domain("cap-n", "must be >= 1"));
        }
        Ok(Self { a, p, m, cap_n })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn cap_n(&self) -> u32 {
        self.cap_n
    }

    /// Same parameters with a different outer power.
    pub fn with_m(self, m: u32) -> Result<Self> {
        Self::new(self.a, self.p, m, self.cap_n)
    }
}

impl Default for SmootherParams {
    fn default() -> Self {
        Self {
            a: 0.6,
            p: 0.7,
            m: 2,
            cap_n: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// `H = K`
    PredictOnly,
    /// `H = K·F`
    SmoothedPredict,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::PredictOnly => "k",
            Variant::SmoothedPredict => "kh",
        }
    }
}

/// A fully parameterized predictor transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    variant: Variant,
    predictor: PredictorParams,
    smoother: Option<SmootherParams>,
}

impl KernelSpec {
    pub fn new(
        variant: Variant,
        predictor: PredictorParams,
        smoother: Option<SmootherParams>,
    ) -> Result<Self> {
        match (variant, smoother.is_some()) {
            (Variant::PredictOnly, true) => Err(Error::domain(
                "variant",
                "the plain kernel takes no smoother parameters",
            )),
            (Variant::SmoothedPredict, false) => Err(Error::domain(
                "variant",
                "the smoothed kernel requires smoother parameters",
            )),
            _ => Ok(Self {
                variant,
                predictor,
                smoother,
            }),
        }
    }

    pub fn predict_only(predictor: PredictorParams) -> Self {
        Self {
            variant: Variant::PredictOnly,
            predictor,
            smoother: None,
        }
    }

    pub fn smoothed(predictor: PredictorParams, smoother: SmootherParams) -> Self {
        Self {
            variant: Variant::SmoothedPredict,
            predictor,
            smoother: Some(smoother),
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn predictor(&self) -> &PredictorParams {
        &self.predictor
    }

    pub fn smoother(&self) -> Option<&SmootherParams> {
        self.smoother.as_ref()
    }
}

impl TransferFunction for KernelSpec {
    fn eval(&self, z: ComplexValue) -> Result<ComplexValue> {
        eval_h(z, self)
    }
}

fn check_ap(a: f64, p: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::domain("a", format!("must lie in (0, 1), got {a}")));
    }
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::domain("p", format!("must lie in (1/2, 1), got {p}")));
    }
    Ok(())
}

fn finite(v: ComplexValue, what: &'static str) -> Result<ComplexValue> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

/// `ξ(a,p) = exp(−(1−a)^(p−1))`, always in (0, 1).
pub fn eval_xi(a: f64, p: f64) -> Result<f64> {
    check_ap(a, p)?;
    Ok(xi_unchecked(a, p))
}

/// `γ(a,p) = |1−a|^(p−2) · ξ(a,p)`.
pub fn eval_gamma_ap(a: f64, p: f64) -> Result<f64> {
    check_ap(a, p)?;
    Ok(gamma_ap_unchecked(a, p))
}

fn xi_unchecked(a: f64, p: f64) -> f64 {
    (-(1.0 - a).powf(p - 1.0)).exp()
}

fn gamma_ap_unchecked(a: f64, p: f64) -> f64 {
    (1.0 - a).abs().powf(p - 2.0) * xi_unchecked(a, p)
}

/// `K(z) = z·(1 − exp(−γ / (z + 1 − γ^(−r))))`.
pub fn eval_k(z: ComplexValue, params: &PredictorParams) -> Result<ComplexValue> {
    let shifted = z - params.pole();
    if shifted.norm() < SINGULARITY_GUARD {
        return Err(Error::Singularity {
            point: "z = gamma^(-r) - 1",
            guard: SINGULARITY_GUARD,
        });
    }
    let v = z * (1.0 - (-params.gamma_k / shifted).exp());
    finite(v, "K(z)")
}

/// `G(z) = −ξ + (γ(a,p)/N)·((−1)^N z^(−N) − 1)`.
///
/// `z^(−N)` is an integer power of `1/z` by repeated squaring, so no branch
/// cut is involved.
pub fn eval_g(z: ComplexValue, params: &SmootherParams) -> Result<ComplexValue> {
    if z.norm() < SINGULARITY_GUARD {
        return Err(Error::Singularity {
            point: "z = 0",
            guard: SINGULARITY_GUARD,
        });
    }
    let n = params.cap_n;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let inv_pow = z.inv().powu(n);
    let scale = gamma_ap_unchecked(params.a, params.p) / f64::from(n);
    let v = -xi_unchecked(params.a, params.p) + scale * (sign * inv_pow - 1.0);
    finite(v, "G(z)")
}

/// `F(z) = (exp((1−a)^p / (z+a)) + G(z))^m`.
pub fn eval_f(z: ComplexValue, params: &SmootherParams) -> Result<ComplexValue> {
    let shifted = z + params.a;
    if shifted.norm() < SINGULARITY_GUARD {
        return Err(Error::Singularity {
            point: "z = -a",
            guard: SINGULARITY_GUARD,
        });
    }
    let base = ((1.0 - params.a).powf(params.p) / shifted).exp() + eval_g(z, params)?;
    finite(base.powu(params.m), "F(z)")
}

/// `H(z)` for the given predictor variant.
pub fn eval_h(z: ComplexValue, spec: &KernelSpec) -> Result<ComplexValue> {
    let k = eval_k(z, &spec.predictor)?;
    match (spec.variant, spec.smoother.as_ref()) {
        (Variant::SmoothedPredict, Some(s)) => finite(k * eval_f(z, s)?, "H(z)"),
        _ => Ok(k),
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    // Reference values from 50-digit mpmath evaluation of the closed forms.
    const XI_06_07: f64 = 0.268_103_493_206_502_007_4;
    const XI_05_07: f64 = 0.291_958_265_486_496_629_4;
    const GAMMA_06_07: f64 = 0.882_316_668_442_210_894_4;
    const GAMMA_05_07: f64 = 0.718_885_574_967_144_427_2;
    const K_AT_ONE: f64 = 0.641_120_263_973_413_117_6;
    const F_AT_ONE: f64 = 1.258_002_586_356_855_923_3;
    const H_AT_ONE: f64 = 0.806_530_950_244_343_900_9;

    fn c(re: f64, im: f64) -> ComplexValue {
        ComplexValue::new(re, im)
    }

    fn default_smoothed(r: f64) -> KernelSpec {
        KernelSpec::smoothed(
            PredictorParams::new(1.1, r).unwrap(),
            SmootherParams::default(),
        )
    }

    #[test]
    fn xi_and_gamma_reference_values() {
        assert_relative_eq!(eval_xi(0.6, 0.7).unwrap(), XI_06_07, max_relative = 1e-14);
        assert_relative_eq!(eval_xi(0.5, 0.7).unwrap(), XI_05_07, max_relative = 1e-14);
        assert_relative_eq!(
            eval_gamma_ap(0.6, 0.7).unwrap(),
            GAMMA_06_07,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            eval_gamma_ap(0.5, 0.7).unwrap(),
            GAMMA_05_07,
            max_relative = 1e-14
        );
    }

    #[test]
    fn gamma_over_xi_is_power_of_one_minus_a() {
        for &(a, p) in &[(0.6, 0.7), (0.1, 0.55), (0.95, 0.99)] {
            let ratio = eval_gamma_ap(a, p).unwrap() / eval_xi(a, p).unwrap();
            assert_relative_eq!(ratio, (1.0_f64 - a).powf(p - 2.0), max_relative = 1e-14);
        }
    }

    #[test]
    fn xi_tends_to_inverse_e_as_p_tends_to_one() {
        let v = eval_xi(0.3, 1.0 - 1e-12).unwrap();
        assert!((v - (-1.0_f64).exp()).abs() < 1e-9);
        assert!(eval_xi(0.3, 1.0).is_err());
    }

    #[test]
    fn smoother_domain_is_enforced() {
        assert!(eval_xi(0.0, 0.7).is_err());
        assert!(eval_xi(1.0, 0.7).is_err());
        assert!(eval_xi(0.6, 0.5).is_err());
        assert!(eval_gamma_ap(0.6, f64::NAN).is_err());
        assert!(SmootherParams::new(0.6, 0.7, 0, 100).is_err());
        assert!(SmootherParams::new(0.6, 0.7, 2, 0).is_err());
        assert!(PredictorParams::new(0.0, 1.0).is_err());
        assert!(PredictorParams::new(1.1, -1.0).is_err());
    }

    #[test]
    fn k_reference_values() {
        let params = PredictorParams::new(1.1, 0.8).unwrap();
        let k1 = eval_k(c(1.0, 0.0), &params).unwrap();
        assert_relative_eq!(k1.re, K_AT_ONE, max_relative = 1e-14);
        assert_eq!(k1.im, 0.0);
        assert_eq!(eval_k(c(0.0, 0.0), &params).unwrap(), c(0.0, 0.0));

        let params = PredictorParams::new(1.1, 2.0).unwrap();
        let z = c(0.3, 0.4);
        let lhs = eval_k(z.conj(), &params).unwrap();
        let rhs = eval_k(z, &params).unwrap().conj();
        assert_relative_eq!(lhs.re, rhs.re, max_relative = 1e-12);
        assert_relative_eq!(lhs.im, rhs.im, max_relative = 1e-12);
    }

    #[test]
    fn k_rejects_its_pole() {
        let params = PredictorParams::new(1.1, 0.8).unwrap();
        let err = eval_k(c(params.pole(), 0.0), &params).unwrap_err();
        assert!(matches!(err, Error::Singularity { .. }));
        // just outside the guard is fine (may still be huge, but finite)
        assert!(eval_k(c(params.pole() + 1e-3, 0.0), &params).is_ok());
    }

    #[test]
    fn g_cancels_where_z_pow_minus_n_matches_sign() {
        let s = SmootherParams::default();
        for z in [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)] {
            let g = eval_g(z, &s).unwrap();
            assert!((g.re + XI_06_07).abs() < 1e-14, "{z}: {g}");
            assert!(g.im.abs() < 1e-14);
        }
        assert!(matches!(
            eval_g(c(0.0, 0.0), &s),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn g_with_odd_n() {
        let s = SmootherParams::new(0.6, 0.7, 2, 3).unwrap();
        // (−1)^3 · 1^(−3) − 1 = −2
        let g = eval_g(c(1.0, 0.0), &s).unwrap();
        let expected = -XI_06_07 + GAMMA_06_07 / 3.0 * -2.0;
        assert_relative_eq!(g.re, expected, max_relative = 1e-14);
    }

    #[test]
    fn f_reference_values() {
        let s = SmootherParams::default();
        let f1 = eval_f(c(1.0, 0.0), &s).unwrap();
        assert_relative_eq!(f1.re, F_AT_ONE, max_relative = 1e-14);

        let s1 = s.with_m(1).unwrap();
        let base = eval_f(c(1.0, 0.0), &s1).unwrap();
        let expected = (0.4_f64.powf(0.7) / 1.6).exp() - XI_06_07;
        assert_relative_eq!(base.re, expected, max_relative = 1e-14);

        let z = ComplexValue::from_polar(1.0, PI / 3.0);
        let lhs = eval_f(z.conj(), &s).unwrap();
        let rhs = eval_f(z, &s).unwrap().conj();
        assert_relative_eq!(lhs.re, rhs.re, max_relative = 1e-12);
        assert_relative_eq!(lhs.im, rhs.im, max_relative = 1e-12);

        assert!(eval_f(c(-0.6, 0.0), &s).is_err());
    }

    #[test]
    fn f_square_matches_m_one_squared() {
        let s2 = SmootherParams::default();
        let s1 = s2.with_m(1).unwrap();
        for k in 0..32 {
            let z = ComplexValue::from_polar(1.0, 2.0 * PI * (k as f64 + 0.37) / 32.0);
            let sq = eval_f(z, &s1).unwrap().powu(2);
            let f2 = eval_f(z, &s2).unwrap();
            assert!((sq - f2).norm() <= 1e-12 * f2.norm().max(1e-300));
        }
    }

    #[test]
    fn h_reference_values() {
        let plain = KernelSpec::predict_only(PredictorParams::default());
        assert_eq!(eval_h(c(0.0, 0.0), &plain).unwrap(), c(0.0, 0.0));
        let h1 = eval_h(c(1.0, 0.0), &default_smoothed(0.8)).unwrap();
        assert_relative_eq!(h1.re, H_AT_ONE, max_relative = 1e-13);
        assert_relative_eq!(K_AT_ONE * F_AT_ONE, H_AT_ONE, max_relative = 1e-14);
    }

    #[test]
    fn h_conjugate_symmetry_on_grid() {
        for &r in &[0.8, 1.1, 1.5, 2.0] {
            for spec in [
                KernelSpec::predict_only(PredictorParams::new(1.1, r).unwrap()),
                default_smoothed(r),
            ] {
                for k in 0..16 {
                    let z = ComplexValue::from_polar(1.0, 2.0 * PI * (k as f64 + 0.5) / 16.0);
                    let lhs = eval_h(z.conj(), &spec).unwrap();
                    let rhs = eval_h(z, &spec).unwrap().conj();
                    assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm());
                }
            }
        }
    }

    #[test]
    fn poles_lie_inside_unit_circle_for_reference_grid() {
        for &r in &[0.8, 1.1, 1.5, 2.0] {
            let pole = PredictorParams::new(1.1, r).unwrap().pole();
            assert!(pole.abs() < 0.2, "r={r}: pole {pole}");
        }
        assert!(SmootherParams::default().a() < 1.0);
    }

    #[test]
    fn spec_variant_invariant() {
        let p = PredictorParams::default();
        let s = SmootherParams::default();
        assert!(KernelSpec::new(Variant::PredictOnly, p, Some(s)).is_err());
        assert!(KernelSpec::new(Variant::SmoothedPredict, p, None).is_err());
        assert_eq!(
            KernelSpec::new(Variant::SmoothedPredict, p, Some(s)).unwrap(),
            KernelSpec::smoothed(p, s)
        );
    }
}
