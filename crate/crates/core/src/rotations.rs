//! Local rotations synthesized from displacements and a Kerr gate.
//!
//! `R(θ,φ) = D(-iφ/4α) U D(iθ/4α) U D(iφ/4α)` with `U = exp(-iπn̂²/2)`,
//! applied right to left. Acting on a coherent ket it produces at most four
//! coherent components, so on a dyad at most sixteen.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::coherent::{
    displace_ket, kerr_ket, merge_ket, overlap, CoherentDyadSum, CoherentLabel, KetComponent,
    Mode, DEFAULT_LABEL_CAP,
};
use crate::error::{Error, Result};
use crate::logamp::{wrap_phase, LogAmp};

/// A Bloch-sphere direction `(θ, φ)` with `θ ∈ [0, π]` and `φ ∈ (-π, π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    theta: f64,
    phi: f64,
}

impl MeasurementSetting {
    /// Canonicalizes arbitrary finite angles onto the same unit vector.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite()) {
            return Err(Error::NonFinite("measurement setting"));
        }
        let mut t = theta.rem_euclid(2.0 * PI);
        let mut p = phi;
        if t > PI {
            t = 2.0 * PI - t;
            p += PI;
        }
        let mut p = wrap_phase(p);
        if p <= -PI {
            p = PI;
        }
        Ok(MeasurementSetting { theta: t, phi: p })
    }

    pub fn theta(self) -> f64 {
        self.theta
    }

    pub fn phi(self) -> f64 {
        self.phi
    }

    /// The same polar angle with the azimuth reflected, `(θ, -φ)`.
    pub fn mirrored(self) -> Self {
        MeasurementSetting::new(self.theta, -self.phi).expect("finite angles stay finite")
    }

    pub fn unit_vector(self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// A 2×2 map on `(|α⟩, |-α⟩)` coefficients; column `k` is the image of basis ket `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdealQubitMap {
    pub m: [[C64; 2]; 2],
}

impl IdealQubitMap {
    pub fn apply(&self, c_plus: C64, c_minus: C64) -> (C64, C64) {
        (
            self.m[0][0] * c_plus + self.m[0][1] * c_minus,
            self.m[1][0] * c_plus + self.m[1][1] * c_minus,
        )
    }

    /// Largest entry of `M†M - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..2 {
                    s += self.m[k][i].conj() * self.m[k][j];
                }
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }
}

/// `|α⟩ → sin(θ/2)|α⟩ + e^{-iφ}cos(θ/2)|-α⟩`,
/// `|-α⟩ → e^{iφ}cos(θ/2)|α⟩ - sin(θ/2)|-α⟩`.
pub fn ideal_map(setting: MeasurementSetting) -> IdealQubitMap {
    let s = C64::new((setting.theta / 2.0).sin(), 0.0);
    let c = (setting.theta / 2.0).cos();
    let e = C64::from_polar(1.0, setting.phi);
    IdealQubitMap {
        m: [[s, e * c], [e.conj() * c, -s]],
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "rotation amplitude must be positive and finite, got {alpha}"
        )))
    }
}

fn displace_all(components: Vec<KetComponent>, mu: C64, cap: f64) -> Result<Vec<KetComponent>> {
    components
        .into_iter()
        .map(|(c, l)| displace_ket(l, mu, cap).map(|(p, l2)| (c * p, l2)))
        .collect()
}

fn kerr_all(components: Vec<KetComponent>) -> Vec<KetComponent> {
    components
        .into_iter()
        .flat_map(|(c, l)| kerr_ket(l).map(|(p, l2)| (c * p, l2)))
        .collect()
}

/// `R(θ,φ)|β⟩` as merged coherent components.
pub fn rotate_ket(
    label: CoherentLabel,
    setting: MeasurementSetting,
    alpha: f64,
    cap: f64,
) -> Result<Vec<KetComponent>> {
    check_alpha(alpha)?;
    let step_phi = C64::new(0.0, setting.phi / (4.0 * alpha));
    let step_theta = C64::new(0.0, setting.theta / (4.0 * alpha));
    let mut v = displace_all(vec![(LogAmp::ONE, label)], step_phi, cap)?;
    v = kerr_all(v);
    v = displace_all(v, step_theta, cap)?;
    v = kerr_all(v);
    v = displace_all(v, -step_phi, cap)?;
    Ok(merge_ket(v))
}

/// Applies `R(θ,φ)` to one mode of an operator, `R ρ R†`.
pub fn rotate(
    state: &CoherentDyadSum,
    mode: Mode,
    setting: MeasurementSetting,
    alpha: f64,
) -> Result<CoherentDyadSum> {
    check_alpha(alpha)?;
    let cap = state.label_cap();
    state.map_mode(mode, |l| rotate_ket(l, setting, alpha, cap))
}

/// The hand-derived image of `|±α⟩` under the rotation sequence.
///
/// Reproduces the published four-term expansion literally, including its
/// global phase: it equals `i · R(θ,φ)|±α⟩`.
pub fn published_image(
    setting: MeasurementSetting,
    alpha: f64,
    positive: bool,
) -> Result<Vec<(C64, C64)>> {
    check_alpha(alpha)?;
    let (t, p) = (setting.theta, setting.phi);
    let i = C64::i();
    let e = |x: f64| C64::from_polar(1.0, x);
    let shift = |x: f64| C64::new(0.0, x / alpha);
    let a = C64::new(alpha, 0.0);
    let half = 0.5;
    let terms = if positive {
        vec![
            (half * e(t / 4.0), a + shift(t / 4.0)),
            (half * e(t / 4.0) * i * e(p / 2.0), -a - shift(p / 2.0) - shift(t / 4.0)),
            (half * i * e(-t / 4.0) * e(p / 2.0), -a - shift(p / 2.0) + shift(t / 4.0)),
            (half * i * e(-t / 4.0) * i, a - shift(t / 4.0)),
        ]
    } else {
        vec![
            (half * i * e(t / 4.0) * i, -a - shift(t / 4.0)),
            (half * i * e(t / 4.0) * e(-p / 2.0), a - shift(p / 2.0) + shift(t / 4.0)),
            (half * e(-t / 4.0) * i * e(-p / 2.0), a - shift(p / 2.0) - shift(t / 4.0)),
            (half * e(-t / 4.0), -a + shift(t / 4.0)),
        ]
    };
    Ok(terms)
}

/// Fidelity of `R(θ,φ)|α⟩` with the ideal two-level image.
///
/// The displacement sequence converges to the ideal map with reflected
/// azimuth, so the target is `ideal_map(θ, -φ)` applied to `|α⟩`, normalized
/// in the non-orthogonal `{|α⟩, |-α⟩}` basis.
pub fn rotation_fidelity(setting: MeasurementSetting, alpha: f64) -> Result<f64> {
    fidelity_against(setting, alpha, ideal_map(setting.mirrored()))
}

/// Fidelity of `R(θ,φ)|α⟩` with the image of `|α⟩` under an arbitrary 2×2 map.
pub fn fidelity_against(setting: MeasurementSetting, alpha: f64, map: IdealQubitMap) -> Result<f64> {
    let plus = CoherentLabel::real(alpha)?;
    let minus = CoherentLabel::real(-alpha)?;
    let out = rotate_ket(plus, setting, alpha, DEFAULT_LABEL_CAP)?;
    let (ta, tb) = map.apply(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let cross = overlap(minus, plus);
    let target_norm = ta.norm_sqr() + tb.norm_sqr() + 2.0 * (ta.conj() * tb * cross).re;
    if target_norm <= 0.0 {
        return Ok(0.0);
    }
    let amp: C64 = out
        .iter()
        .map(|&(c, l)| c.value() * (ta.conj() * overlap(l, plus) + tb.conj() * overlap(l, minus)))
        .sum();
    Ok((amp.norm_sqr() / target_norm).clamp(0.0, 1.0))
}
