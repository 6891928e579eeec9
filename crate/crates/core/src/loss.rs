//! Inefficient detection as a pure-loss channel in front of each homodyne detector.
//!
//! A beam splitter of transmittivity `η` mixes the signal with a vacuum
//! ancilla that is then discarded. On a coherent dyad this is exact:
//! `|β⟩⟨γ| → ⟨√(1-η)γ|√(1-η)β⟩ |√η β⟩⟨√η γ|`.

use serde::{Deserialize, Serialize};

use crate::coherent::{CoherentDyadSum, CoherentLabel, Mode};
use crate::error::{Error, Result};
use crate::logamp::LogAmp;

/// Detection efficiency `η ∈ (0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Efficiency {
    eta: f64,
}

impl Efficiency {
    pub const PERFECT: Efficiency = Efficiency { eta: 1.0 };

    pub fn new(eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "detection efficiency must lie in (0, 1], got {eta}"
            )));
        }
        Ok(Efficiency { eta })
    }

    pub fn eta(self) -> f64 {
        self.eta
    }

    pub fn is_perfect(self) -> bool {
        self.eta == 1.0
    }
}

impl Default for Efficiency {
    fn default() -> Self {
        Efficiency::PERFECT
    }
}

/// The image of a single dyad `|β⟩⟨γ|` as `(weight, |√η β⟩, ⟨√η γ|)`.
pub fn lossy_dyad(
    ket: CoherentLabel,
    bra: CoherentLabel,
    eff: Efficiency,
    cap: f64,
) -> Result<(LogAmp, CoherentLabel, CoherentLabel)> {
    let eta = eff.eta();
    let lost = 1.0 - eta;
    let keep = eta.sqrt();
    let (b, g) = (ket.value(), bra.value());
    let weight =
        LogAmp::from_exponent(-0.5 * lost * (b.norm_sqr() + g.norm_sqr()) + lost * g.conj() * b);
    Ok((
        weight,
        CoherentLabel::with_cap(keep * b, cap)?,
        CoherentLabel::with_cap(keep * g, cap)?,
    ))
}

/// Sends one mode through the loss channel.
pub fn apply_loss(state: &CoherentDyadSum, mode: Mode, eff: Efficiency) -> Result<CoherentDyadSum> {
    if eff.is_perfect() {
        return Ok(state.clone());
    }
    let cap = state.label_cap();
    let mut terms = Vec::with_capacity(state.len());
    for t in state.terms() {
        let (ket, bra) = t.labels(mode);
        let (weight, ket2, bra2) = lossy_dyad(ket, bra, eff, cap)?;
        terms.push(t.with_labels(mode, t.coeff * weight, ket2, bra2));
    }
    Ok(CoherentDyadSum {
        terms,
        log_scale: state.log_scale(),
        label_cap: cap,
    })
}

/// Loss on both modes with the same efficiency.
pub fn apply_loss_both(state: &CoherentDyadSum, eff: Efficiency) -> Result<CoherentDyadSum> {
    apply_loss(&apply_loss(state, Mode::A, eff)?, Mode::B, eff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{make_ecs, EcsParams};
    use crate::homodyne::{sign_probabilities, QuadratureConvention};
    use num_complex::Complex64 as C64;

    #[test]
    fn efficiency_range() {
        assert!(Efficiency::new(0.0).is_err());
        assert!(Efficiency::new(1.0 + 1e-12).is_err());
        assert!(Efficiency::new(f64::NAN).is_err());
        assert!(Efficiency::new(1e-9).is_ok());
    }

    #[test]
    fn trace_preserved_and_order_irrelevant() {
        let rho = make_ecs(EcsParams::new(1.4).unwrap())
            .displace(Mode::A, C64::new(0.2, 0.5))
            .unwrap()
            .kerr_split(Mode::B);
        let eff = Efficiency::new(0.37).unwrap();
        let ab = apply_loss(&apply_loss(&rho, Mode::A, eff).unwrap(), Mode::B, eff).unwrap();
        let ba = apply_loss(&apply_loss(&rho, Mode::B, eff).unwrap(), Mode::A, eff).unwrap();
        assert!((ab.trace() - rho.trace()).norm() < 1e-10);
        assert!(ab.max_deviation(&ba) < 1e-12);
    }

    #[test]
    fn vanishing_efficiency_gives_vacuum_statistics() {
        let rho = make_ecs(EcsParams::new(1.0).unwrap());
        let out = apply_loss_both(&rho, Efficiency::new(1e-12).unwrap()).unwrap();
        let p = sign_probabilities(&out, QuadratureConvention::default()).unwrap();
        for x in [p.pp, p.pm, p.mp, p.mm] {
            assert!((x - 0.25).abs() < 1e-5);
        }
    }
}
