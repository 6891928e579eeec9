//! The fixed cross-oracle regression set and its runner.

use ecs_leggett::engine::Engine;
use ecs_leggett::error::Result;
use ecs_leggett::homodyne::SignProbabilities;
use ecs_leggett::loss::Efficiency;
use ecs_leggett::rotations::MeasurementSetting;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fock::fock_pipeline;
use crate::wigner::{wigner_marginal, WignerGrid};

pub const REGRESSION_SEED: u64 = 0x5eed_2009;
pub const REGRESSION_ALPHAS: [f64; 2] = [0.8, 1.5];
pub const REGRESSION_ETAS: [f64; 2] = [1.0, 0.6];
pub const REGRESSION_PAIRS: usize = 20;

/// Agreement demanded between the engine and the number-basis oracle.
pub const FOCK_TOLERANCE: f64 = 1e-6;
/// Agreement demanded between the engine and the grid oracle.
pub const WIGNER_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegressionCase {
    pub alpha: f64,
    pub eta: f64,
    pub a: MeasurementSetting,
    pub b: MeasurementSetting,
}

/// Setting pairs drawn uniformly on the sphere from a fixed seed.
pub fn regression_pairs(seed: u64, count: usize) -> Vec<(MeasurementSetting, MeasurementSetting)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let theta = (1.0 - 2.0 * rng.gen::<f64>()).acos();
        let phi = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        MeasurementSetting::new(theta, phi).expect("angles are finite")
    };
    (0..count).map(|_| (draw(), draw())).collect()
}

/// Every `(α, η, pair)` combination, α-major.
pub fn regression_cases() -> Vec<RegressionCase> {
    let pairs = regression_pairs(REGRESSION_SEED, REGRESSION_PAIRS);
    let mut out = Vec::new();
    for &alpha in &REGRESSION_ALPHAS {
        for &eta in &REGRESSION_ETAS {
            for &(a, b) in &pairs {
                out.push(RegressionCase { alpha, eta, a, b });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CaseReport {
    pub case: RegressionCase,
    pub engine: SignProbabilities,
    pub fock: SignProbabilities,
    pub wigner: Option<SignProbabilities>,
    pub fock_difference: f64,
    pub wigner_difference: Option<f64>,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.fock_difference <= FOCK_TOLERANCE
            && self.wigner_difference.map_or(true, |d| d <= WIGNER_TOLERANCE)
    }
}

/// Runs one case through the engine and both oracles.
pub fn run_case(engine: &Engine, case: RegressionCase, with_wigner: bool) -> Result<CaseReport> {
    let eff = Efficiency::new(case.eta)?;
    let settings = (case.a, case.b);
    let p = engine.sign_probabilities(case.alpha, case.a, case.b, eff)?;
    let fock = fock_pipeline(case.alpha, settings, eff, engine.azimuth)?;
    let wigner = if with_wigner {
        Some(wigner_marginal(case.alpha, settings, eff, engine.azimuth, WignerGrid::default())?)
    } else {
        None
    };
    Ok(CaseReport {
        case,
        engine: p,
        fock,
        wigner,
        fock_difference: p.max_abs_difference(&fock),
        wigner_difference: wigner.map(|w| p.max_abs_difference(&w)),
    })
}
