//! Sign-binned homodyne statistics of coherent dyad sums.
//!
//! For one mode, `∫_half ⟨x|β⟩⟨γ|x⟩ dx` is a Gaussian integral over a half
//! line and has a closed form in terms of the scaled complementary error
//! function. Every dyad term factorizes across the two modes, so a binned
//! joint probability is a finite sum of products of these kernels.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI, SQRT_2};

use errorfunctions::ComplexErrorFunctions;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::coherent::{CoherentDyadSum, CoherentLabel, DyadTerm};
use crate::error::{Error, Result};
use crate::logamp::{LogAmp, LogSum};
use crate::rotations::MeasurementSetting;

/// Tolerance on the trace of a state handed to the binning routines.
pub const TRACE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HalfLine {
    Positive,
    Negative,
}

/// The constant `s` in `x̂ = s(â + â†)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConvention {
    scale: f64,
}

impl Default for QuadratureConvention {
    fn default() -> Self {
        QuadratureConvention {
            scale: std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

impl QuadratureConvention {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadrature scale must be positive, got {scale}"
            )));
        }
        Ok(QuadratureConvention { scale })
    }

    pub fn scale(self) -> f64 {
        self.scale
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignProbabilities {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl SignProbabilities {
    pub fn total(&self) -> f64 {
        self.pp + self.pm + self.mp + self.mm
    }

    /// `P++ + P-- - P+- - P-+`.
    pub fn correlation(&self) -> f64 {
        self.pp + self.mm - self.pm - self.mp
    }

    pub fn max_abs_difference(&self, other: &SignProbabilities) -> f64 {
        [
            self.pp - other.pp,
            self.pm - other.pm,
            self.mp - other.mp,
            self.mm - other.mm,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// `ln ∫ exp(-a x² + b x + c) dx` over the chosen half line, `a > 0`.
fn log_gaussian_half_line(a: f64, b: C64, c: C64, side: HalfLine) -> LogAmp {
    let b = match side {
        HalfLine::Positive => b,
        HalfLine::Negative => -b,
    };
    let root = a.sqrt();
    let z = -b / (2.0 * root);
    // ∫_0^∞ = ½√(π/a) · exp(c) · erfcx(z)
    let log_front = 0.5 * (PI / a).ln() - LN_2;
    let tail = if z.re >= 0.0 {
        LogAmp::from_exponent(c) * LogAmp::from_value(z.erfcx())
    } else {
        // erfc(z) = 2 - erfc(-z)
        let main = LogAmp::from_exponent(c + z * z + LN_2);
        let rest = LogAmp::from_exponent(c) * LogAmp::from_value((-z).erfcx());
        main.add(-rest)
    };
    tail.scale_log(log_front)
}

/// `∫ π^{-1/2} exp(-x² + b x + c) dx` over one half line, in log form.
pub fn half_line_integral(b: C64, c: C64, side: HalfLine) -> Result<LogAmp> {
    if !(b.re.is_finite() && b.im.is_finite() && c.re.is_finite() && c.im.is_finite()) {
        return Err(Error::NonFinite("half-line integral arguments"));
    }
    Ok(log_gaussian_half_line(1.0, b, c, side).scale_log(-0.5 * PI.ln()))
}

/// `∫_half ⟨x|β⟩⟨γ|x⟩ dx` in the given quadrature convention.
pub fn dyad_kernel(
    ket: CoherentLabel,
    bra: CoherentLabel,
    side: HalfLine,
    conv: QuadratureConvention,
) -> LogAmp {
    let (beta, gamma) = (ket.value(), bra.value().conj());
    // in the unit convention the integrand is π^{-1/2} exp(-u² + b u + c)
    let b = SQRT_2 * (beta + gamma);
    let c = -0.5 * (beta * beta + gamma * gamma) - 0.5 * (beta.norm_sqr() + gamma.norm_sqr());
    let s = conv.scale() * SQRT_2;
    let a = 1.0 / (s * s);
    log_gaussian_half_line(a, b / s, c, side).scale_log(-s.ln() - 0.5 * PI.ln())
}

type PairKey = (u64, u64, u64, u64);

fn pair_key(ket: CoherentLabel, bra: CoherentLabel) -> PairKey {
    let (k, b) = (ket.value(), bra.value());
    (k.re.to_bits(), k.im.to_bits(), b.re.to_bits(), b.im.to_bits())
}

struct KernelCache {
    conv: QuadratureConvention,
    map: HashMap<PairKey, [LogAmp; 2]>,
}

impl KernelCache {
    fn get(&mut self, ket: CoherentLabel, bra: CoherentLabel) -> [LogAmp; 2] {
        let conv = self.conv;
        *self.map.entry(pair_key(ket, bra)).or_insert_with(|| {
            [
                dyad_kernel(ket, bra, HalfLine::Positive, conv),
                dyad_kernel(ket, bra, HalfLine::Negative, conv),
            ]
        })
    }
}

/// The four binned joint probabilities of a unit-trace two-mode operator.
pub fn sign_probabilities(
    state: &CoherentDyadSum,
    conv: QuadratureConvention,
) -> Result<SignProbabilities> {
    let mut cache_a = KernelCache {
        conv,
        map: HashMap::new(),
    };
    let mut cache_b = KernelCache {
        conv,
        map: HashMap::new(),
    };
    let mut bins = [LogSum::new(); 4];
    for t in state.terms() {
        let DyadTerm {
            coeff,
            ket_a,
            bra_a,
            ket_b,
            bra_b,
        } = *t;
        let ka = cache_a.get(ket_a, bra_a);
        let kb = cache_b.get(ket_b, bra_b);
        for (i, x) in ka.iter().enumerate() {
            for (j, y) in kb.iter().enumerate() {
                bins[2 * i + j].push(coeff * *x * *y);
            }
        }
    }
    let scale = state.log_scale();
    let v: Vec<f64> = bins
        .iter()
        .map(|b| b.total().value_scaled(scale).re)
        .collect();
    if v.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("binned probability"));
    }
    let probs = SignProbabilities {
        pp: v[0],
        pm: v[1],
        mp: v[2],
        mm: v[3],
    };
    let total = probs.total();
    if (total - 1.0).abs() > TRACE_TOLERANCE {
        return Err(Error::NotNormalized { re: total, im: 0.0 });
    }
    Ok(probs)
}

/// `P++ + P-- - P+- - P-+` for a unit-trace state.
pub fn correlation(state: &CoherentDyadSum, conv: QuadratureConvention) -> Result<f64> {
    Ok(sign_probabilities(state, conv)?.correlation())
}

/// Term-by-term evaluation of the published closed-form correlation.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormReport {
    pub value: f64,
    /// Imaginary part of the sum; a faithful formula keeps this at rounding level.
    pub imaginary_residual: f64,
    /// The four bracketed contributions, each multiplied by the common prefactor.
    pub terms: [C64; 4],
}

/// Published closed-form correlation for both modes rotated with the same sequence.
///
/// The erf arguments are grouped as `√2α + i(4θ+φ)/(2√2α)` and every polar
/// angle enters as its quarter, the argument of the middle displacement.
/// The `e^{4α²}` weights are regrouped against `1 + e^{4α²}` in log form.
pub fn correlation_closed_form(
    alpha: f64,
    a: MeasurementSetting,
    b: MeasurementSetting,
) -> Result<ClosedFormReport> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coherent amplitude must be positive and finite, got {alpha}"
        )));
    }
    let a2 = alpha * alpha;
    let i = C64::i();
    let angles = [(a.theta() / 4.0, a.phi()), (b.theta() / 4.0, b.phi())];
    let f = |t: f64, p: f64| -> C64 {
        (C64::new(SQRT_2 * alpha, 0.0) + i * (4.0 * t + p) / (2.0 * SQRT_2 * alpha)).erf()
    };
    let g = |t: f64, p: f64| -> C64 { C64::new((4.0 * t + p) / (2.0 * SQRT_2 * alpha), 0.0).erfi() };
    let e = |z: C64| z.exp();

    // exp(-(1/8α²) Σ (8iα² + 4θ + φ)(4θ + φ))
    let log_pre: C64 = angles
        .iter()
        .map(|&(t, p)| -(C64::new(4.0 * t + p, 8.0 * a2)) * (4.0 * t + p) / (8.0 * a2))
        .sum();
    // 1/(32(1 + e^{4α²})) = e^{-4α²} / (32(1 + e^{-4α²}))
    let log_den = -(32.0f64).ln() - (-4.0 * a2).exp().ln_1p();

    let mut t1 = C64::new(8.0, 0.0)
        * e(angles
            .iter()
            .map(|&(t, p)| C64::new(8.0 * t + p, 8.0 * a2) * p / (8.0 * a2))
            .sum());
    let mut t2 = C64::new(-4.0, 0.0);
    let mut t3 = -4.0 * e(2.0 * i * (angles[0].1 + angles[1].1));
    let mut t4 = 8.0 * e(i * angles.iter().map(|&(t, p)| 4.0 * t + p).sum::<f64>());
    for &(t, p) in &angles {
        t1 *= f(-t, 0.0) + e(8.0 * i * t) * f(t, 0.0);
        t2 *= f(-t, -p) - e(2.0 * t * (4.0 * i + p / a2)) * f(t, -p);
        t3 *= e(C64::new(2.0 * t * p / a2, 0.0)) * f(-t, p) - e(8.0 * i * t) * f(t, p);
        t4 *= e(C64::new(2.0 * t * p / a2, 0.0)) * g(t, -p) + g(t, p);
    }
    let weights = [
        log_pre + log_den,
        log_pre + log_den,
        log_pre + log_den,
        log_pre + log_den - 4.0 * a2,
    ];
    let raw = [t1, t2, t3, t4];
    let mut terms = [C64::new(0.0, 0.0); 4];
    let mut acc = LogSum::new();
    for k in 0..4 {
        if !(raw[k].re.is_finite() && raw[k].im.is_finite()) {
            return Err(Error::Overflow(format!(
                "closed-form bracket {} is not finite at alpha = {alpha}",
                k + 1
            )));
        }
        let term = LogAmp::from_value(raw[k]) * LogAmp::from_exponent(weights[k]);
        terms[k] = term.value();
        acc.push(term);
    }
    let total = acc.total().value();
    if !(total.re.is_finite() && total.im.is_finite()) {
        return Err(Error::Overflow(format!("closed-form sum at alpha = {alpha}")));
    }
    Ok(ClosedFormReport {
        value: total.re,
        imaginary_residual: total.im,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{make_ecs, EcsParams};

    fn lbl(re: f64, im: f64) -> CoherentLabel {
        CoherentLabel::new(C64::new(re, im)).unwrap()
    }

    #[test]
    fn half_gaussian_is_one_half() {
        let z = C64::new(0.0, 0.0);
        let p = half_line_integral(z, z, HalfLine::Positive).unwrap().value();
        let m = half_line_integral(z, z, HalfLine::Negative).unwrap().value();
        assert!((p - 0.5).norm() < 1e-15);
        assert!((p + m - 1.0).norm() < 1e-15);
        assert!(half_line_integral(C64::new(f64::NAN, 0.0), z, HalfLine::Positive).is_err());
    }

    #[test]
    fn halves_sum_to_full_gaussian() {
        for &(br, bi, cr, ci) in &[(3.0, 2.0, 0.0, 0.0), (-40.0, 5.0, -300.0, 1.0), (300.0, -80.0, 0.0, 0.0)] {
            let b = C64::new(br, bi);
            let c = C64::new(cr, ci);
            let p = half_line_integral(b, c, HalfLine::Positive).unwrap();
            let m = half_line_integral(b, c, HalfLine::Negative).unwrap();
            let full = LogAmp::from_exponent(c + b * b / 4.0);
            let ratio = (p.add(m) / full).value();
            assert!((ratio - 1.0).norm() < 1e-12, "{ratio}");
        }
    }

    #[test]
    fn vacuum_bins_are_quarters() {
        let v = lbl(0.0, 0.0);
        let rho = CoherentDyadSum::pure(&[(LogAmp::ONE, v, v)]);
        let p = sign_probabilities(&rho, QuadratureConvention::default()).unwrap();
        for x in [p.pp, p.pm, p.mp, p.mm] {
            assert!((x - 0.25).abs() < 1e-15);
        }
        assert!(p.correlation().abs() < 1e-15);
    }

    #[test]
    fn coherent_product_matches_normal_cdf() {
        let b = lbl(1.0, 0.0);
        let rho = CoherentDyadSum::pure(&[(LogAmp::ONE, b, b)]);
        let p = sign_probabilities(&rho, QuadratureConvention::default()).unwrap();
        // x̂ ~ N(√2, 1/2), so P(x > 0) = Φ(2) = erfc(-√2)/2
        let phi = 0.5 * libm_erfc(-SQRT_2);
        assert!((p.pp - phi * phi).abs() < 1e-14);
    }

    fn libm_erfc(x: f64) -> f64 {
        C64::new(x, 0.0).erfcx().re * (-x * x).exp()
    }

    #[test]
    fn unrotated_ecs_is_strongly_correlated() {
        let rho = make_ecs(EcsParams::new(2.0).unwrap());
        let p = sign_probabilities(&rho, QuadratureConvention::default()).unwrap();
        assert!(p.pp + p.mm >= 0.99);
        assert!(p.correlation() >= 0.98);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let b = lbl(0.5, 0.0);
        let rho = CoherentDyadSum::pure(&[(LogAmp::from_polar(0.5, 0.0), b, b)]);
        assert!(matches!(
            sign_probabilities(&rho, QuadratureConvention::default()),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn closed_form_survives_large_alpha() {
        let a = MeasurementSetting::new(std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let b = MeasurementSetting::new(std::f64::consts::FRAC_PI_2, 0.25).unwrap();
        let r = correlation_closed_form(60.0, a, b).unwrap();
        assert!(r.value.is_finite() && r.value.abs() <= 1.0 + 1e-9);
        assert!(r.imaginary_residual.abs() < 1e-9);
    }
}
