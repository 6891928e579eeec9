//! Two-mode operators as finite sums of coherent-state dyads.
//!
//! An operator is stored as `exp(log_scale) · Σ c_k |ketA⟩⟨braA| ⊗ |ketB⟩⟨braB|`
//! with every `c_k` in log form. Pure states are dyads of themselves and lossy
//! states are general mixtures, so one representation serves every stage of
//! the pipeline. All operations are exact for coherent dyads: displacements
//! shift labels and add a phase, the Kerr gate splits a label into `±β`.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logamp::{LogAmp, LogSum};

/// Magnitude cap on coherent labels; a runaway label means a composition bug.
pub const DEFAULT_LABEL_CAP: f64 = 1e3;
/// Absolute tolerance under which two labels are treated as the same state.
pub const LABEL_MERGE_TOL: f64 = 1e-12;
/// Default drop threshold on a term's contribution to any binned probability.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-30;
/// Merged coefficients this far below their largest summand are rounding noise.
const CANCELLATION_RATIO: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

/// Amplitude `β` of a coherent state `|β⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentLabel(C64);

impl CoherentLabel {
    pub fn new(value: C64) -> Result<Self> {
        Self::with_cap(value, DEFAULT_LABEL_CAP)
    }

    pub fn with_cap(value: C64, cap: f64) -> Result<Self> {
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::NonFinite("coherent label"));
        }
        let magnitude = value.norm();
        if magnitude > cap {
            return Err(Error::LabelOverflow { magnitude, cap });
        }
        Ok(CoherentLabel(value))
    }

    pub fn real(re: f64) -> Result<Self> {
        Self::new(C64::new(re, 0.0))
    }

    pub fn value(self) -> C64 {
        self.0
    }

    fn close_to(self, other: CoherentLabel) -> bool {
        (self.0.re - other.0.re).abs() <= LABEL_MERGE_TOL
            && (self.0.im - other.0.im).abs() <= LABEL_MERGE_TOL
    }

    fn order(self, other: CoherentLabel) -> Ordering {
        self.0
            .re
            .total_cmp(&other.0.re)
            .then(self.0.im.total_cmp(&other.0.im))
    }
}

/// `ln⟨g|b⟩ = -|g|²/2 - |b|²/2 + g*·b`.
pub fn log_overlap(b: CoherentLabel, g: CoherentLabel) -> LogAmp {
    let (b, g) = (b.0, g.0);
    LogAmp::from_exponent(-0.5 * g.norm_sqr() - 0.5 * b.norm_sqr() + g.conj() * b)
}

/// `⟨g|b⟩` as a plain complex number.
pub fn overlap(b: CoherentLabel, g: CoherentLabel) -> C64 {
    log_overlap(b, g).value()
}

/// One component `c·|β⟩` of a single-mode ket.
pub type KetComponent = (LogAmp, CoherentLabel);

/// `D(μ)|β⟩ = exp((μβ* - μ*β)/2) |β + μ⟩`.
pub fn displace_ket(label: CoherentLabel, mu: C64, cap: f64) -> Result<KetComponent> {
    let beta = label.0;
    let phase = 0.5 * (mu * beta.conj() - mu.conj() * beta);
    let shifted = CoherentLabel::with_cap(beta + mu, cap)?;
    Ok((LogAmp::from_exponent(phase), shifted))
}

/// `exp(-iπ n̂²/2)|β⟩ = (e^{-iπ/4}|β⟩ + e^{iπ/4}|-β⟩)/√2`.
pub fn kerr_ket(label: CoherentLabel) -> [KetComponent; 2] {
    let half_log = -0.5 * std::f64::consts::LN_2;
    [
        (LogAmp::from_polar(half_log, -FRAC_PI_4), label),
        (LogAmp::from_polar(half_log, FRAC_PI_4), CoherentLabel(-label.0)),
    ]
}

/// Combines components with coincident labels, dropping cancelled ones.
pub fn merge_ket(components: Vec<KetComponent>) -> Vec<KetComponent> {
    let mut sorted = components;
    sorted.sort_by(|x, y| x.1.order(y.1));
    let mut out: Vec<KetComponent> = Vec::with_capacity(sorted.len());
    let mut i = 0;
    while i < sorted.len() {
        let label = sorted[i].1;
        let mut acc = LogSum::new();
        while i < sorted.len() && sorted[i].1.close_to(label) {
            acc.push(sorted[i].0);
            i += 1;
        }
        let total = acc.total();
        if !cancelled(total, acc.peak()) {
            out.push((total, label));
        }
    }
    out
}

fn cancelled(total: LogAmp, peak: f64) -> bool {
    total.is_zero() || total.log_magnitude() < peak + CANCELLATION_RATIO.ln()
}

/// Validated amplitude of the entangled coherent resource.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EcsParams {
    alpha: f64,
}

impl EcsParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coherent amplitude must be positive and finite, got {alpha}"
            )));
        }
        Ok(EcsParams { alpha })
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }

    /// `ln N` for `N = 1/√(2(1 + e^{-4α²}))`.
    pub fn log_normalization(self) -> f64 {
        let a2 = self.alpha * self.alpha;
        -0.5 * (std::f64::consts::LN_2 + (-4.0 * a2).exp().ln_1p())
    }
}

/// `coeff · |ket_a⟩⟨bra_a| ⊗ |ket_b⟩⟨bra_b|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadTerm {
    pub coeff: LogAmp,
    pub ket_a: CoherentLabel,
    pub bra_a: CoherentLabel,
    pub ket_b: CoherentLabel,
    pub bra_b: CoherentLabel,
}

impl DyadTerm {
    pub fn labels(&self, mode: Mode) -> (CoherentLabel, CoherentLabel) {
        match mode {
            Mode::A => (self.ket_a, self.bra_a),
            Mode::B => (self.ket_b, self.bra_b),
        }
    }

    pub(crate) fn with_labels(
        &self,
        mode: Mode,
        coeff: LogAmp,
        ket: CoherentLabel,
        bra: CoherentLabel,
    ) -> DyadTerm {
        let mut out = *self;
        out.coeff = coeff;
        match mode {
            Mode::A => {
                out.ket_a = ket;
                out.bra_a = bra;
            }
            Mode::B => {
                out.ket_b = ket;
                out.bra_b = bra;
            }
        }
        out
    }

    /// `Tr(term)` without the shared scale.
    pub fn log_trace(&self) -> LogAmp {
        self.coeff * log_overlap(self.ket_a, self.bra_a) * log_overlap(self.ket_b, self.bra_b)
    }

    /// Upper bound (log) on `|contribution|` to any sign-binned probability.
    ///
    /// `|∫_half ⟨x|β⟩⟨γ|x⟩ dx| ≤ exp(-(Re(β-γ))²/2)` on each mode.
    pub fn log_contribution_bound(&self) -> f64 {
        let da = (self.ket_a.0 - self.bra_a.0).re;
        let db = (self.ket_b.0 - self.bra_b.0).re;
        self.coeff.log_magnitude() - 0.5 * (da * da + db * db)
    }

    fn same_labels(&self, other: &DyadTerm) -> bool {
        self.ket_a.close_to(other.ket_a)
            && self.bra_a.close_to(other.bra_a)
            && self.ket_b.close_to(other.ket_b)
            && self.bra_b.close_to(other.bra_b)
    }

    fn order(&self, other: &DyadTerm) -> Ordering {
        self.ket_a
            .order(other.ket_a)
            .then(self.bra_a.order(other.bra_a))
            .then(self.ket_b.order(other.ket_b))
            .then(self.bra_b.order(other.bra_b))
    }
}

/// `exp(log_scale) · Σ terms`.
#[derive(Clone, Debug)]
pub struct CoherentDyadSum {
    pub(crate) terms: Vec<DyadTerm>,
    pub(crate) log_scale: f64,
    pub(crate) label_cap: f64,
}

impl CoherentDyadSum {
    pub fn from_terms(terms: Vec<DyadTerm>, log_scale: f64) -> Self {
        CoherentDyadSum {
            terms,
            log_scale,
            label_cap: DEFAULT_LABEL_CAP,
        }
    }

    /// `|ψ⟩⟨ψ|` for `|ψ⟩ = Σ c_k |a_k, b_k⟩`.
    pub fn pure(components: &[(LogAmp, CoherentLabel, CoherentLabel)]) -> Self {
        let mut terms = Vec::with_capacity(components.len() * components.len());
        for &(ck, ak, bk) in components {
            for &(cl, al, bl) in components {
                terms.push(DyadTerm {
                    coeff: ck * cl.conj(),
                    ket_a: ak,
                    bra_a: al,
                    ket_b: bk,
                    bra_b: bl,
                });
            }
        }
        CoherentDyadSum::from_terms(terms, 0.0)
    }

    pub fn with_label_cap(mut self, cap: f64) -> Self {
        self.label_cap = cap;
        self
    }

    pub fn terms(&self) -> &[DyadTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn label_cap(&self) -> f64 {
        self.label_cap
    }

    pub fn log_trace(&self) -> LogAmp {
        self.terms
            .iter()
            .map(DyadTerm::log_trace)
            .collect::<LogSum>()
            .total()
            .scale_log(self.log_scale)
    }

    pub fn trace(&self) -> C64 {
        self.log_trace().value()
    }

    /// Rescales so that the trace is exactly one.
    pub fn normalize(mut self) -> Result<Self> {
        let t = self.log_trace();
        if t.is_zero() || !t.is_finite() || t.phase().abs() > 1e-10 {
            let v = t.value();
            return Err(Error::NotNormalized { re: v.re, im: v.im });
        }
        self.log_scale -= t.log_magnitude();
        Ok(self)
    }

    /// Swaps ket and bra labels and conjugates coefficients.
    pub fn adjoint(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| DyadTerm {
                coeff: t.coeff.conj(),
                ket_a: t.bra_a,
                bra_a: t.ket_a,
                ket_b: t.bra_b,
                bra_b: t.ket_b,
            })
            .collect();
        CoherentDyadSum {
            terms,
            log_scale: self.log_scale,
            label_cap: self.label_cap,
        }
    }

    /// Applies a single-mode operator given by its action on coherent kets.
    ///
    /// `|β⟩⟨γ| → Σ_ij c_i c_j* |β_i⟩⟨γ_j|` where `O|β⟩ = Σ_i c_i|β_i⟩`.
    pub fn map_mode<F>(&self, mode: Mode, ket_map: F) -> Result<Self>
    where
        F: Fn(CoherentLabel) -> Result<Vec<KetComponent>>,
    {
        let mut terms = Vec::with_capacity(self.terms.len() * 4);
        for t in &self.terms {
            let (ket, bra) = t.labels(mode);
            let kets = ket_map(ket)?;
            let bras = ket_map(bra)?;
            for &(ck, k) in &kets {
                for &(cb, b) in &bras {
                    terms.push(t.with_labels(mode, t.coeff * ck * cb.conj(), k, b));
                }
            }
        }
        Ok(CoherentDyadSum {
            terms,
            log_scale: self.log_scale,
            label_cap: self.label_cap,
        })
    }

    /// `D(μ) ρ D(μ)†` on one mode.
    pub fn displace(&self, mode: Mode, mu: C64) -> Result<Self> {
        if !(mu.re.is_finite() && mu.im.is_finite()) {
            return Err(Error::NonFinite("displacement"));
        }
        let cap = self.label_cap;
        self.map_mode(mode, |l| Ok(vec![displace_ket(l, mu, cap)?]))
    }

    /// `U ρ U†` with `U = exp(-iπ n̂²/2)` on one mode.
    pub fn kerr_split(&self, mode: Mode) -> Self {
        self.map_mode(mode, |l| Ok(kerr_ket(l).to_vec()))
            .expect("the Kerr split cannot fail")
    }

    /// Combines terms with coincident labels.
    pub fn merge(&self) -> Self {
        let mut sorted = self.terms.clone();
        sorted.sort_by(|x, y| x.order(y));
        let mut terms: Vec<DyadTerm> = Vec::with_capacity(sorted.len());
        let mut i = 0;
        while i < sorted.len() {
            let head = sorted[i];
            let mut acc = LogSum::new();
            while i < sorted.len() && sorted[i].same_labels(&head) {
                acc.push(sorted[i].coeff);
                i += 1;
            }
            let total = acc.total();
            if !cancelled(total, acc.peak()) {
                terms.push(DyadTerm {
                    coeff: total,
                    ..head
                });
            }
        }
        CoherentDyadSum {
            terms,
            log_scale: self.log_scale,
            label_cap: self.label_cap,
        }
    }

    /// Merges and drops terms contributing less than `tol` to every bin.
    pub fn prune(&self, tol: f64) -> Result<Self> {
        if tol.is_nan() || tol < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "prune tolerance must be non-negative, got {tol}"
            )));
        }
        let mut merged = self.merge();
        if tol > 0.0 {
            let cut = tol.ln() - self.log_scale;
            merged.terms.retain(|t| t.log_contribution_bound() >= cut);
        }
        Ok(merged)
    }

    /// Largest coefficient difference against another operator, label by label.
    pub fn max_deviation(&self, other: &CoherentDyadSum) -> f64 {
        let lhs = self.merge();
        let rhs = other.merge();
        let mut matched = vec![false; rhs.terms.len()];
        let mut worst = 0.0_f64;
        for t in &lhs.terms {
            let v = t.coeff.value_scaled(lhs.log_scale);
            let hit = rhs
                .terms
                .iter()
                .enumerate()
                .find(|(j, u)| !matched[*j] && u.same_labels(t));
            let d = match hit {
                Some((j, u)) => {
                    matched[j] = true;
                    (v - u.coeff.value_scaled(rhs.log_scale)).norm()
                }
                None => v.norm(),
            };
            worst = worst.max(d);
        }
        for (j, u) in rhs.terms.iter().enumerate() {
            if !matched[j] {
                worst = worst.max(u.coeff.value_scaled(rhs.log_scale).norm());
            }
        }
        worst
    }

    /// Pointwise joint density `⟨x,y|ρ|x,y⟩` for `x̂ = (â+â†)/√2`.
    pub fn quadrature_density(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                t.coeff
                    * log_wavefunction(t.ket_a, x)
                    * log_wavefunction(t.bra_a, x).conj()
                    * log_wavefunction(t.ket_b, y)
                    * log_wavefunction(t.bra_b, y).conj()
            })
            .collect::<LogSum>()
            .total()
            .value_scaled(self.log_scale)
            .re
    }

    /// Reduced single-mode expectation `Tr(ρ x̂_mode)` with `x̂ = (â+â†)/√2`.
    pub fn quadrature_mean(&self, mode: Mode) -> f64 {
        let other = match mode {
            Mode::A => Mode::B,
            Mode::B => Mode::A,
        };
        self.terms
            .iter()
            .map(|t| {
                let (k, b) = t.labels(mode);
                let (ko, bo) = t.labels(other);
                // ⟨γ|x̂|β⟩ = ⟨γ|β⟩ (β + γ*)/√2
                let factor = (k.0 + b.0.conj()) / std::f64::consts::SQRT_2;
                t.coeff * log_overlap(k, b) * log_overlap(ko, bo) * LogAmp::from_value(factor)
            })
            .collect::<LogSum>()
            .total()
            .value_scaled(self.log_scale)
            .re
    }
}

/// `ln⟨x|β⟩ = -x²/2 + √2βx - β²/2 - |β|²/2 - ln(π)/4`.
pub fn log_wavefunction(label: CoherentLabel, x: f64) -> LogAmp {
    let b = label.0;
    LogAmp::from_exponent(
        -0.5 * x * x + std::f64::consts::SQRT_2 * b * x
            - 0.5 * b * b
            - 0.5 * b.norm_sqr()
            - 0.25 * std::f64::consts::PI.ln(),
    )
}

/// The entangled coherent resource `(|α,α⟩ + |-α,-α⟩)/√(2(1+e^{-4α²}))`.
pub fn make_ecs(params: EcsParams) -> CoherentDyadSum {
    let a = params.alpha();
    let n = LogAmp::from_polar(params.log_normalization(), 0.0);
    let plus = CoherentLabel(C64::new(a, 0.0));
    let minus = CoherentLabel(C64::new(-a, 0.0));
    CoherentDyadSum::pure(&[(n, plus, plus), (n, minus, minus)])
}
