//! Parameter sweeps and violation thresholds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::inequalities::{Kind, ViolationReport, BELL_RESTARTS};
use crate::loss::Efficiency;
use crate::rotations::MeasurementSetting;

/// Search interval for threshold amplitudes.
pub const THRESHOLD_ALPHA_MIN: f64 = 0.5;
pub const THRESHOLD_ALPHA_MAX: f64 = 500.0;
const THRESHOLD_PREGRID: usize = 64;

/// Inclusive arithmetic grid `min, min + step, ..., ≤ max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Range {
    pub fn single(value: f64) -> Self {
        Range {
            min: value,
            max: value,
            step: 1.0,
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} range must be finite")));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{name} step must be positive, got {}",
                self.step
            )));
        }
        if self.max < self.min {
            return Err(Error::InvalidParameter(format!(
                "{name} range is empty: max {} < min {}",
                self.max, self.min
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.min + k as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: Kind,
    pub alpha: Range,
    pub phi: Range,
    pub eta: Vec<f64>,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.alpha.validate("alpha")?;
        if self.alpha.min <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha.min
            )));
        }
        if self.kind != Kind::Bell {
            self.phi.validate("phi")?;
        }
        if self.eta.is_empty() {
            return Err(Error::InvalidParameter("eta list is empty".into()));
        }
        for &e in &self.eta {
            Efficiency::new(e)?;
        }
        Ok(())
    }

    /// Parameter tuples in lexicographic `(α, φ, η)` order.
    pub fn points(&self) -> Vec<(f64, Option<f64>, f64)> {
        let phis: Vec<Option<f64>> = match self.kind {
            Kind::Bell => vec![None],
            _ => self.phi.values().into_iter().map(Some).collect(),
        };
        let mut etas = self.eta.clone();
        etas.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        for a in self.alpha.values() {
            for &p in &phis {
                for &e in &etas {
                    out.push((a, p, e));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: Kind,
    pub alpha: f64,
    pub phi: Option<f64>,
    pub eta: f64,
    pub value: f64,
    pub bound: f64,
    pub violation: f64,
    pub settings_digest: String,
}

/// First 16 hex digits of the SHA-256 of the measurement pairs.
pub fn settings_digest(settings: &[(MeasurementSetting, MeasurementSetting)]) -> String {
    let mut h = Sha256::new();
    for (a, b) in settings {
        for s in [a, b] {
            h.update(s.theta().to_le_bytes());
            h.update(s.phi().to_le_bytes());
        }
    }
    h.finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl From<ViolationReport> for SweepRow {
    fn from(r: ViolationReport) -> Self {
        SweepRow {
            kind: r.kind,
            alpha: r.alpha,
            phi: r.phi,
            eta: r.eta,
            value: r.value,
            bound: r.bound,
            violation: r.violation,
            settings_digest: settings_digest(&r.settings),
        }
    }
}

/// One row per parameter point; Bell rows carry the optimized settings.
pub fn run_sweep(engine: &Engine, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    spec.points()
        .par_iter()
        .map(|&(alpha, phi, eta)| {
            let eff = Efficiency::new(eta)?;
            let report = match phi {
                Some(p) => engine.leggett(spec.kind, alpha, p, eff)?,
                None => engine.optimize_bell(alpha, eff, spec.seed, BELL_RESTARTS)?.report,
            };
            Ok(SweepRow::from(report))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub eta: f64,
    /// Upper end of the final bracket: the violation is positive here.
    pub alpha_star: f64,
    pub bracket_width: f64,
    /// The coarse pre-grid changed sign more than once.
    pub non_monotonic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ThresholdOutcome {
    Crossing(ThresholdResult),
    NoCrossing {
        eta: f64,
        best_alpha: f64,
        best_violation: f64,
    },
}

impl ThresholdOutcome {
    pub fn alpha_star(&self) -> Option<f64> {
        match self {
            ThresholdOutcome::Crossing(r) => Some(r.alpha_star),
            ThresholdOutcome::NoCrossing { .. } => None,
        }
    }
}

/// Smallest amplitude in `[0.5, 500]` at which a Leggett-type function is violated.
pub fn find_threshold(
    engine: &Engine,
    kind: Kind,
    phi: f64,
    eta: f64,
    resolution: f64,
) -> Result<ThresholdOutcome> {
    if kind == Kind::Bell {
        return Err(Error::InvalidParameter(
            "thresholds are defined for L and LS only".into(),
        ));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let eff = Efficiency::new(eta)?;
    let violation = |alpha: f64| engine.leggett(kind, alpha, phi, eff).map(|r| r.violation);

    let ratio = (THRESHOLD_ALPHA_MAX / THRESHOLD_ALPHA_MIN).ln() / (THRESHOLD_PREGRID - 1) as f64;
    let grid: Vec<f64> = (0..THRESHOLD_PREGRID)
        .map(|k| THRESHOLD_ALPHA_MIN * (ratio * k as f64).exp())
        .collect();
    let values = grid
        .par_iter()
        .map(|&a| violation(a))
        .collect::<Result<Vec<f64>>>()?;

    let sign_changes = values
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count();
    let Some(first) = values.iter().position(|&v| v > 0.0) else {
        let (i, best) = values
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .expect("pre-grid is non-empty");
        return Ok(ThresholdOutcome::NoCrossing {
            eta,
            best_alpha: grid[i],
            best_violation: *best,
        });
    };
    let non_monotonic = sign_changes > 1;
    if first == 0 {
        return Ok(ThresholdOutcome::Crossing(ThresholdResult {
            eta,
            alpha_star: grid[0],
            bracket_width: 0.0,
            non_monotonic,
        }));
    }
    let (mut lo, mut hi) = (grid[first - 1], grid[first]);
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if violation(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdOutcome::Crossing(ThresholdResult {
        eta,
        alpha_star: hi,
        bracket_width: hi - lo,
        non_monotonic,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_values() {
        let r = Range {
            min: 0.05,
            max: 1.0,
            step: 0.01,
        };
        let v = r.values();
        assert_eq!(v.len(), 96);
        assert!((v[95] - 1.0).abs() < 1e-12);
        assert_eq!(Range::single(3.0).values(), vec![3.0]);
        assert!(Range { min: 1.0, max: 0.0, step: 0.1 }.validate("x").is_err());
        assert!(Range { min: 0.0, max: 1.0, step: 0.0 }.validate("x").is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = SweepSpec {
            kind: Kind::L,
            alpha: Range::single(2.0),
            phi: Range::single(0.25),
            eta: vec![],
            seed: 1,
        };
        assert!(spec.validate().is_err());
        spec.eta = vec![0.5, 1.5];
        assert!(spec.validate().is_err());
        spec.eta = vec![1.0, 0.5];
        spec.validate().unwrap();
        let pts = spec.points();
        assert_eq!(pts, vec![(2.0, Some(0.25), 0.5), (2.0, Some(0.25), 1.0)]);
    }

    #[test]
    fn digest_is_stable_and_short() {
        let s = MeasurementSetting::new(0.3, 0.1).unwrap();
        let d = settings_digest(&[(s, s)]);
        assert_eq!(d.len(), 16);
        assert_eq!(d, settings_digest(&[(s, s)]));
        assert_ne!(d, settings_digest(&[(s, s.mirrored())]));
    }

    #[test]
    fn rows_match_direct_evaluation() {
        let spec = SweepSpec {
            kind: Kind::L,
            alpha: Range {
                min: 3.0,
                max: 4.0,
                step: 0.5,
            },
            phi: Range::single(0.25),
            eta: vec![1.0],
            seed: 7,
        };
        let rows = run_sweep(&Engine::default(), &spec).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!((r.violation - (r.value - r.bound)).abs() < 1e-12);
        }
        assert!(rows.windows(2).all(|w| w[0].alpha < w[1].alpha));
    }
}
