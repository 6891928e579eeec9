//! Leggett-type and Bell-CHSH functions built from the correlation engine.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::loss::Efficiency;
use crate::optimize::{golden_section, nelder_mead, NelderMeadOptions};
use crate::rotations::MeasurementSetting;

/// Grid step of the coarse scan over `φ`.
pub const PHI_GRID_STEP: f64 = 0.01;
/// Target accuracy of the refined optimal `φ`.
pub const PHI_TOLERANCE: f64 = 1e-5;
/// Random restarts of the Bell setting search.
pub const BELL_RESTARTS: usize = 12;
/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 2009;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "L")]
    L,
    #[serde(rename = "LS")]
    LS,
    #[serde(rename = "BELL")]
    Bell,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::L => "L",
            Kind::LS => "LS",
            Kind::Bell => "BELL",
        })
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L" => Ok(Kind::L),
            "LS" => Ok(Kind::LS),
            "BELL" | "CHSH" => Ok(Kind::Bell),
            other => Err(Error::InvalidParameter(format!(
                "unknown inequality kind '{other}' (expected L, LS or BELL)"
            ))),
        }
    }
}

fn setting(theta: f64, phi: f64) -> MeasurementSetting {
    MeasurementSetting::new(theta, phi).expect("catalog angles are finite")
}

fn check_phi(phi: f64) -> Result<()> {
    if phi.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("catalog angle"))
    }
}

/// Alice's three and Bob's seven directions for the function `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct SettingsCatalogL {
    pub a: [MeasurementSetting; 3],
    pub b: [MeasurementSetting; 7],
    pub phi: f64,
}

impl SettingsCatalogL {
    pub fn new(phi: f64) -> Result<Self> {
        check_phi(phi)?;
        let a = [setting(FRAC_PI_2, 0.0), setting(FRAC_PI_2, FRAC_PI_2), setting(0.0, 0.0)];
        let b1 = |p: f64| setting(FRAC_PI_2, p);
        let b4 = |p: f64| setting(p, FRAC_PI_2);
        let b = [
            b1(phi),
            b1(FRAC_PI_2 + phi),
            b4(FRAC_PI_2 + phi),
            b4(phi),
            a[0],
            a[1],
            a[2],
        ];
        Ok(SettingsCatalogL { a, b, phi })
    }

    /// The eight `(a, b)` pairs, first absolute-value group then second.
    pub fn pairs(&self) -> [(MeasurementSetting, MeasurementSetting); 8] {
        let (a, b) = (&self.a, &self.b);
        [
            (a[0], b[0]),
            (a[1], b[1]),
            (a[0], b[4]),
            (a[1], b[5]),
            (a[1], b[2]),
            (a[2], b[3]),
            (a[1], b[5]),
            (a[2], b[6]),
        ]
    }
}

/// Alice's three directions and Bob's three pairs `b_i^±` for `L_S`.
#[derive(Clone, Debug, PartialEq)]
pub struct SettingsCatalogLS {
    pub a: [MeasurementSetting; 3],
    pub bplus: [MeasurementSetting; 3],
    pub bminus: [MeasurementSetting; 3],
    pub phi: f64,
}

impl SettingsCatalogLS {
    pub fn new(phi: f64) -> Result<Self> {
        check_phi(phi)?;
        let h = phi / 2.0;
        let a = [setting(FRAC_PI_2, 0.0), setting(FRAC_PI_2, FRAC_PI_2), setting(0.0, 0.0)];
        let pick = |s: f64| {
            [
                setting(FRAC_PI_2, s * h),
                setting(FRAC_PI_2 - s * h, FRAC_PI_2),
                setting(s * h, 0.0),
            ]
        };
        Ok(SettingsCatalogLS {
            a,
            bplus: pick(1.0),
            bminus: pick(-1.0),
            phi,
        })
    }

    /// `(a_i, b_i^+), (a_i, b_i^-)` for `i = 1, 2, 3`.
    pub fn pairs(&self) -> [(MeasurementSetting, MeasurementSetting); 6] {
        let mut out = [(self.a[0], self.a[0]); 6];
        for i in 0..3 {
            out[2 * i] = (self.a[i], self.bplus[i]);
            out[2 * i + 1] = (self.a[i], self.bminus[i]);
        }
        out
    }
}

/// `8 - 2|sin(φ/2)|`.
pub fn bound_l(phi: f64) -> f64 {
    8.0 - 2.0 * (phi / 2.0).sin().abs()
}

/// `2 - (2/3)|sin(φ/2)|`.
pub fn bound_ls(phi: f64) -> f64 {
    2.0 - (2.0 / 3.0) * (phi / 2.0).sin().abs()
}

pub const BELL_BOUND: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub kind: Kind,
    pub value: f64,
    pub bound: f64,
    pub violation: f64,
    pub alpha: f64,
    pub phi: Option<f64>,
    pub eta: f64,
    /// Every `(a, b)` pair whose correlation entered the value, in order.
    pub settings: Vec<(MeasurementSetting, MeasurementSetting)>,
    pub correlations: Vec<f64>,
}

fn correlations(
    engine: &Engine,
    alpha: f64,
    pairs: &[(MeasurementSetting, MeasurementSetting)],
    eff: Efficiency,
) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(a, b)| engine.correlation(alpha, a, b, eff))
        .collect()
}

impl Engine {
    pub fn leggett_l(&self, alpha: f64, phi: f64, eff: Efficiency) -> Result<ViolationReport> {
        let cat = SettingsCatalogL::new(phi)?;
        let pairs = cat.pairs();
        let c = correlations(self, alpha, &pairs, eff)?;
        let value = (c[0] + c[1] + c[2] + c[3]).abs() + (c[4] + c[5] + c[6] + c[7]).abs();
        let bound = bound_l(phi);
        Ok(ViolationReport {
            kind: Kind::L,
            value,
            bound,
            violation: value - bound,
            alpha,
            phi: Some(phi),
            eta: eff.eta(),
            settings: pairs.to_vec(),
            correlations: c,
        })
    }

    pub fn leggett_ls(&self, alpha: f64, phi: f64, eff: Efficiency) -> Result<ViolationReport> {
        let cat = SettingsCatalogLS::new(phi)?;
        let pairs = cat.pairs();
        let c = correlations(self, alpha, &pairs, eff)?;
        let value = c.chunks(2).map(|p| (p[0] + p[1]).abs()).sum::<f64>() / 3.0;
        let bound = bound_ls(phi);
        Ok(ViolationReport {
            kind: Kind::LS,
            value,
            bound,
            violation: value - bound,
            alpha,
            phi: Some(phi),
            eta: eff.eta(),
            settings: pairs.to_vec(),
            correlations: c,
        })
    }

    /// `|C(a1,b1) + C(a1,b2) + C(a2,b1) - C(a2,b2)|` for settings `[a1, a2, b1, b2]`.
    pub fn bell_chsh(
        &self,
        alpha: f64,
        settings: [MeasurementSetting; 4],
        eff: Efficiency,
    ) -> Result<ViolationReport> {
        let [a1, a2, b1, b2] = settings;
        let pairs = [(a1, b1), (a1, b2), (a2, b1), (a2, b2)];
        let c = correlations(self, alpha, &pairs, eff)?;
        let value = (c[0] + c[1] + c[2] - c[3]).abs();
        Ok(ViolationReport {
            kind: Kind::Bell,
            value,
            bound: BELL_BOUND,
            violation: value - BELL_BOUND,
            alpha,
            phi: None,
            eta: eff.eta(),
            settings: pairs.to_vec(),
            correlations: c,
        })
    }

    /// Evaluates a Leggett-type function at a catalog angle.
    pub fn leggett(&self, kind: Kind, alpha: f64, phi: f64, eff: Efficiency) -> Result<ViolationReport> {
        match kind {
            Kind::L => self.leggett_l(alpha, phi, eff),
            Kind::LS => self.leggett_ls(alpha, phi, eff),
            Kind::Bell => Err(Error::InvalidParameter(
                "the Bell function has no catalog angle".into(),
            )),
        }
    }

    /// Maximizes the violation over the catalog angle or the Bell settings.
    pub fn optimize_settings(
        &self,
        kind: Kind,
        alpha: f64,
        eff: Efficiency,
        seed: u64,
    ) -> Result<Optimum> {
        match kind {
            Kind::L | Kind::LS => self.optimize_phi(kind, alpha, eff),
            Kind::Bell => self.optimize_bell(alpha, eff, seed, BELL_RESTARTS),
        }
    }

    fn optimize_phi(&self, kind: Kind, alpha: f64, eff: Efficiency) -> Result<Optimum> {
        let steps = (FRAC_PI_2 / PHI_GRID_STEP).floor() as usize;
        let mut grid: Vec<f64> = (1..=steps).map(|k| k as f64 * PHI_GRID_STEP).collect();
        if FRAC_PI_2 - grid[grid.len() - 1] > 1e-12 {
            grid.push(FRAC_PI_2);
        }
        let scores = grid
            .par_iter()
            .map(|&phi| self.leggett(kind, alpha, phi, eff).map(|r| r.violation))
            .collect::<Result<Vec<f64>>>()?;
        let best = (0..grid.len())
            .max_by(|&i, &j| scores[i].total_cmp(&scores[j]))
            .expect("grid is non-empty");
        let lo = if best == 0 { grid[0] * 1e-3 } else { grid[best - 1] };
        let hi = if best + 1 == grid.len() { grid[best] } else { grid[best + 1] };
        let mut failure = None;
        let (phi, _) = golden_section(
            |phi| match self.leggett(kind, alpha, phi, eff) {
                Ok(r) => -r.violation,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            },
            lo,
            hi,
            PHI_TOLERANCE,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let report = self.leggett(kind, alpha, phi, eff)?;
        Ok(Optimum {
            phi: Some(phi),
            settings: None,
            at_boundary: best == 0 || best + 1 == grid.len(),
            report,
        })
    }

    /// Nelder–Mead over the eight Bell angles from seeded random starts.
    pub fn optimize_bell(
        &self,
        alpha: f64,
        eff: Efficiency,
        seed: u64,
        restarts: usize,
    ) -> Result<Optimum> {
        if restarts == 0 {
            return Err(Error::InvalidParameter("at least one restart is required".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let starts: Vec<Vec<f64>> = (0..restarts)
            .map(|_| (0..8).map(|_| rng.gen_range(0.0..PI)).collect())
            .collect();
        let to_settings = |x: &[f64]| -> Result<[MeasurementSetting; 4]> {
            Ok([
                MeasurementSetting::new(x[0], x[1])?,
                MeasurementSetting::new(x[2], x[3])?,
                MeasurementSetting::new(x[4], x[5])?,
                MeasurementSetting::new(x[6], x[7])?,
            ])
        };
        let opts = NelderMeadOptions {
            initial_step: 0.4,
            max_evaluations: 2000,
            f_tol: 1e-11,
            x_tol: 1e-6,
        };
        let found: Vec<(f64, Vec<f64>)> = starts
            .par_iter()
            .map(|x0| {
                let m = nelder_mead(
                    |x| match to_settings(x).and_then(|s| self.bell_chsh(alpha, s, eff)) {
                        Ok(r) => -r.value,
                        Err(_) => f64::INFINITY,
                    },
                    x0,
                    opts,
                );
                (-m.value, m.x)
            })
            .collect();
        let (_, best_x) = found
            .into_iter()
            .reduce(|best, next| if next.0 > best.0 { next } else { best })
            .expect("at least one restart");
        let settings = to_settings(&best_x)?;
        let report = self.bell_chsh(alpha, settings, eff)?;
        Ok(Optimum {
            phi: None,
            settings: Some(settings),
            at_boundary: false,
            report,
        })
    }
}

/// Outcome of a setting optimization.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    /// Best catalog angle for the Leggett-type functions.
    pub phi: Option<f64>,
    /// Best `[a1, a2, b1, b2]` for the Bell function.
    pub settings: Option<[MeasurementSetting; 4]>,
    /// The best coarse-grid point sat on an end of the scanned interval.
    pub at_boundary: bool,
    pub report: ViolationReport,
}

pub fn leggett_l(alpha: f64, phi: f64, eff: Efficiency) -> Result<ViolationReport> {
    Engine::default().leggett_l(alpha, phi, eff)
}

pub fn leggett_ls(alpha: f64, phi: f64, eff: Efficiency) -> Result<ViolationReport> {
    Engine::default().leggett_ls(alpha, phi, eff)
}

pub fn bell_chsh(alpha: f64, settings: [MeasurementSetting; 4], eff: Efficiency) -> Result<ViolationReport> {
    Engine::default().bell_chsh(alpha, settings, eff)
}

pub fn optimize_settings(kind: Kind, alpha: f64, eff: Efficiency, seed: u64) -> Result<Optimum> {
    Engine::default().optimize_settings(kind, alpha, eff, seed)
}
