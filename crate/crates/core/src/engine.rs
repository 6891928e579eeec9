//! The full measurement pipeline: resource, local rotations, loss, sign binning.

use serde::{Deserialize, Serialize};

use crate::coherent::{
    make_ecs, CoherentDyadSum, CoherentLabel, EcsParams, Mode, DEFAULT_LABEL_CAP,
    DEFAULT_PRUNE_TOL,
};
use crate::error::{Error, Result};
use crate::homodyne::{
    dyad_kernel, sign_probabilities, HalfLine, QuadratureConvention, SignProbabilities,
    TRACE_TOLERANCE,
};
use crate::logamp::{LogAmp, LogSum};
use crate::loss::{apply_loss_both, lossy_dyad, Efficiency};
use crate::rotations::{rotate, rotate_ket, MeasurementSetting};

/// `blocks[s][s'][σ] = Σ_{i,i'} u_i^s (u_{i'}^{s'})* ∫_σ ⟨x|β_i^s⟩⟨β_{i'}^{s'}|x⟩ dx`
/// for the rotated branches `R|±α⟩ = Σ_i u_i^± |β_i^±⟩` of one mode.
type ModeBlocks = [[[LogAmp; 2]; 2]; 2];

/// How Bob's Bloch vector maps onto his physical rotation sequence.
///
/// With the resource `|α,α⟩ + |-α,-α⟩`, running the identical sequence on
/// both sides yields `sinθ_A sinθ_B cos(φ_A + φ_B) + cosθ_A cosθ_B` at large
/// amplitude. `MirroredBob` reflects Bob's azimuth so that correlations take
/// the rotationally covariant form `a·b` that the Leggett catalogs assume.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AzimuthConvention {
    #[default]
    MirroredBob,
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Engine {
    pub quadrature: QuadratureConvention,
    pub azimuth: AzimuthConvention,
    pub prune_tol: f64,
}

impl Default for Engine {
    fn default() -> Self {
        Engine {
            quadrature: QuadratureConvention::default(),
            azimuth: AzimuthConvention::default(),
            prune_tol: DEFAULT_PRUNE_TOL,
        }
    }
}

impl Engine {
    pub fn literal() -> Self {
        Engine {
            azimuth: AzimuthConvention::Literal,
            ..Engine::default()
        }
    }

    /// The settings actually fed to the two rotation sequences.
    pub fn physical_settings(
        &self,
        a: MeasurementSetting,
        b: MeasurementSetting,
    ) -> (MeasurementSetting, MeasurementSetting) {
        match self.azimuth {
            AzimuthConvention::MirroredBob => (a, b.mirrored()),
            AzimuthConvention::Literal => (a, b),
        }
    }

    /// The state in front of the two homodyne detectors.
    pub fn prepared_state(
        &self,
        alpha: f64,
        a: MeasurementSetting,
        b: MeasurementSetting,
        eff: Efficiency,
    ) -> Result<CoherentDyadSum> {
        let ecs = make_ecs(EcsParams::new(alpha)?);
        let (pa, pb) = self.physical_settings(a, b);
        let rotated = rotate(&rotate(&ecs, Mode::A, pa, alpha)?, Mode::B, pb, alpha)?;
        let pruned = rotated.prune(self.prune_tol)?;
        if eff.is_perfect() {
            return Ok(pruned);
        }
        apply_loss_both(&pruned, eff)?.prune(self.prune_tol)
    }

    /// Binned probabilities through the full dyad-sum state.
    pub fn sign_probabilities_dense(
        &self,
        alpha: f64,
        a: MeasurementSetting,
        b: MeasurementSetting,
        eff: Efficiency,
    ) -> Result<SignProbabilities> {
        sign_probabilities(&self.prepared_state(alpha, a, b, eff)?, self.quadrature)
    }

    fn mode_blocks(&self, alpha: f64, setting: MeasurementSetting, eff: Efficiency) -> Result<ModeBlocks> {
        let branches = [
            rotate_ket(CoherentLabel::real(alpha)?, setting, alpha, DEFAULT_LABEL_CAP)?,
            rotate_ket(CoherentLabel::real(-alpha)?, setting, alpha, DEFAULT_LABEL_CAP)?,
        ];
        let mut blocks = [[[LogAmp::ZERO; 2]; 2]; 2];
        for (s, left) in branches.iter().enumerate() {
            for (s2, right) in branches.iter().enumerate() {
                let mut sums = [LogSum::new(), LogSum::new()];
                for &(u, ket) in left {
                    for &(v, bra) in right {
                        let (w, k, b) = lossy_dyad(ket, bra, eff, DEFAULT_LABEL_CAP)?;
                        let c = u * v.conj() * w;
                        sums[0].push(c * dyad_kernel(k, b, HalfLine::Positive, self.quadrature));
                        sums[1].push(c * dyad_kernel(k, b, HalfLine::Negative, self.quadrature));
                    }
                }
                blocks[s][s2] = [sums[0].total(), sums[1].total()];
            }
        }
        Ok(blocks)
    }

    /// Binned probabilities, factorized over the two ECS branches and the two modes.
    pub fn sign_probabilities(
        &self,
        alpha: f64,
        a: MeasurementSetting,
        b: MeasurementSetting,
        eff: Efficiency,
    ) -> Result<SignProbabilities> {
        let params = EcsParams::new(alpha)?;
        let (pa, pb) = self.physical_settings(a, b);
        let ba = self.mode_blocks(alpha, pa, eff)?;
        let bb = self.mode_blocks(alpha, pb, eff)?;
        let norm = 2.0 * params.log_normalization();
        let mut p = [0.0; 4];
        for (x, pa) in p.iter_mut().enumerate() {
            let (sa, sb) = (x / 2, x % 2);
            let mut acc = LogSum::new();
            for s in 0..2 {
                for s2 in 0..2 {
                    acc.push(ba[s][s2][sa] * bb[s][s2][sb]);
                }
            }
            *pa = acc.total().value_scaled(norm).re;
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("binned probability"));
        }
        let probs = SignProbabilities {
            pp: p[0],
            pm: p[1],
            mp: p[2],
            mm: p[3],
        };
        if (probs.total() - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::NotNormalized {
                re: probs.total(),
                im: 0.0,
            });
        }
        Ok(probs)
    }

    pub fn correlation(
        &self,
        alpha: f64,
        a: MeasurementSetting,
        b: MeasurementSetting,
        eff: Efficiency,
    ) -> Result<f64> {
        Ok(self.sign_probabilities(alpha, a, b, eff)?.correlation())
    }
}

/// Correlation of the sign outcomes behind detectors of efficiency `eff`.
pub fn lossy_correlation(
    alpha: f64,
    settings: (MeasurementSetting, MeasurementSetting),
    eff: Efficiency,
) -> Result<f64> {
    Engine::default().correlation(alpha, settings.0, settings.1, eff)
}
