//! Characteristic function, Wigner function and quadrature marginals on FFT grids.
//!
//! Phase space is parametrized by the complex amplitude `x = x_r + i x_i`, so a
//! coherent state `|β⟩` has `W(x) = (2/π) exp(-2|x-β|²)`. The sign of the
//! measured quadrature is the sign of `x_r`.
//!
//! The resource is `N Σ_s |ψ_s⟩|ψ_s⟩` with `ψ_± = R|±α⟩`, so the two-mode
//! characteristic function splits into per-mode blocks,
//! `χ(μ_A, μ_B) = N² Σ_{s,s'} X_A^{ss'}(μ_A) X_B^{ss'}(μ_B)`, where
//! `X^{ss'}(μ) = ⟨ψ_{s'}|D(μ)|ψ_s⟩`. Every block is transformed separately.

use std::f64::consts::PI;

use ecs_leggett::coherent::{CoherentLabel, EcsParams, KetComponent, DEFAULT_LABEL_CAP};
use ecs_leggett::engine::AzimuthConvention;
use ecs_leggett::error::{Error, Result};
use ecs_leggett::homodyne::SignProbabilities;
use ecs_leggett::loss::Efficiency;
use ecs_leggett::rotations::{rotate_ket, MeasurementSetting};
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

/// Largest amplitude the grid route accepts.
pub const MAX_ALPHA: f64 = 2.0;
/// Allowed drift of the total probability on the grid.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-4;

/// Sampling of the characteristic-function plane.
///
/// `points × points` samples at spacing `mu_step`, centred on the origin. The
/// conjugate phase-space grid has spacing `π / (points · mu_step)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerGrid {
    pub points: usize,
    pub mu_step: f64,
}

impl Default for WignerGrid {
    fn default() -> Self {
        WignerGrid {
            points: 512,
            mu_step: 0.1,
        }
    }
}

impl WignerGrid {
    pub fn validate(&self) -> Result<()> {
        if self.points < 16 || self.points % 4 != 0 {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a multiple of 4 and at least 16, got {}",
                self.points
            )));
        }
        if !(self.mu_step.is_finite() && self.mu_step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid step must be positive, got {}",
                self.mu_step
            )));
        }
        Ok(())
    }

    /// Spacing of the phase-space grid.
    pub fn x_step(&self) -> f64 {
        PI / (self.points as f64 * self.mu_step)
    }

    /// Half-width of the phase-space grid.
    pub fn extent(&self) -> f64 {
        0.5 * self.points as f64 * self.x_step()
    }
}

/// Samples `W(x_r + i x_i)` stored row-major with `x_r` as the row index.
#[derive(Clone, Debug)]
pub struct PhaseSpaceSamples {
    pub values: Vec<C64>,
    pub points: usize,
    pub step: f64,
    pub extent: f64,
}

impl PhaseSpaceSamples {
    pub fn coordinate(&self, index: usize) -> f64 {
        (index as f64 - 0.5 * self.points as f64) * self.step
    }

    pub fn at(&self, j: usize, k: usize) -> C64 {
        self.values[j * self.points + k]
    }

    /// `∫ W d²x` by the grid sum.
    pub fn integral(&self) -> C64 {
        self.values.iter().sum::<C64>() * (self.step * self.step)
    }

    /// `∫ W(x_r + i x_i) dx_i` at every `x_r`.
    pub fn marginal(&self) -> Vec<C64> {
        self.values
            .chunks(self.points)
            .map(|row| row.iter().sum::<C64>() * self.step)
            .collect()
    }
}

/// `⟨σ|D(μ)|τ⟩`.
pub fn displacement_element(sigma: C64, mu: C64, tau: C64) -> C64 {
    (-0.5 * (sigma.norm_sqr() + mu.norm_sqr() + tau.norm_sqr()) + sigma.conj() * mu
        + tau * (sigma.conj() - mu.conj()))
    .exp()
}

/// Rotated branches `R|α⟩` and `R|-α⟩` as plain coherent expansions.
fn branches(alpha: f64, setting: MeasurementSetting) -> Result<Branches> {
    let expand = |comps: Vec<KetComponent>| -> Vec<(C64, C64)> {
        comps.into_iter().map(|(c, l)| (c.value(), l.value())).collect()
    };
    Ok([
        expand(rotate_ket(CoherentLabel::real(alpha)?, setting, alpha, DEFAULT_LABEL_CAP)?),
        expand(rotate_ket(CoherentLabel::real(-alpha)?, setting, alpha, DEFAULT_LABEL_CAP)?),
    ])
}

fn block_chi(left: &[(C64, C64)], right: &[(C64, C64)], mu: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for &(u, tau) in left {
        for &(v, sigma) in right {
            acc += u * v.conj() * displacement_element(sigma, mu, tau);
        }
    }
    acc
}

fn physical(
    settings: (MeasurementSetting, MeasurementSetting),
    azimuth: AzimuthConvention,
) -> (MeasurementSetting, MeasurementSetting) {
    match azimuth {
        AzimuthConvention::MirroredBob => (settings.0, settings.1.mirrored()),
        AzimuthConvention::Literal => settings,
    }
}

/// `Tr[ρ D_A(μ_A) D_B(μ_B)]` for the rotated resource.
pub fn weyl_chi(
    alpha: f64,
    settings: (MeasurementSetting, MeasurementSetting),
    mu_a: C64,
    mu_b: C64,
    azimuth: AzimuthConvention,
) -> Result<C64> {
    check_alpha(alpha, crate::fock::MAX_ALPHA)?;
    let (pa, pb) = physical(settings, azimuth);
    let (ba, bb) = (branches(alpha, pa)?, branches(alpha, pb)?);
    let norm = (2.0 * EcsParams::new(alpha)?.log_normalization()).exp();
    let mut acc = C64::new(0.0, 0.0);
    for s in 0..2 {
        for s2 in 0..2 {
            acc += block_chi(&ba[s], &ba[s2], mu_a) * block_chi(&bb[s], &bb[s2], mu_b);
        }
    }
    Ok(acc * norm)
}

/// `W(x) = π⁻² ∫ d²μ χ(μ) e^{xμ* - x*μ}` from samples of `χ` on the grid.
pub fn wigner_from_chi<F>(chi: F, grid: WignerGrid) -> Result<PhaseSpaceSamples>
where
    F: Fn(C64) -> C64,
{
    grid.validate()?;
    let n = grid.points;
    let axis = mu_axis(grid);
    let data = (0..n * n)
        .map(|idx| chi(C64::new(axis[idx / n], axis[idx % n])))
        .collect();
    Ok(transform(data, grid))
}

/// The same transform for a lossy block `X^{ss'}`, sampled as a sum of outer
/// products: every coherent matrix element factorizes over `(μ_r, μ_i)`.
fn block_wigner(
    left: &[(C64, C64)],
    right: &[(C64, C64)],
    eff: Efficiency,
    grid: WignerGrid,
) -> Result<PhaseSpaceSamples> {
    grid.validate()?;
    let n = grid.points;
    let axis = mu_axis(grid);
    let keep = eff.eta().sqrt();
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    let mut row = vec![C64::new(0.0, 0.0); n];
    let mut col = vec![C64::new(0.0, 0.0); n];
    for &(u, tau) in left {
        for &(v, sigma) in right {
            let log_c = (u * v.conj()).ln() - 0.5 * (sigma.norm_sqr() + tau.norm_sqr())
                + sigma.conj() * tau;
            let (kr, ki) = ((sigma.conj() - tau) * keep, C64::i() * (sigma.conj() + tau) * keep);
            for (k, &m) in axis.iter().enumerate() {
                row[k] = (log_c - 0.5 * m * m + kr * m).exp();
                col[k] = (-0.5 * m * m + ki * m).exp();
            }
            for (p, r) in row.iter().enumerate() {
                for (d, c) in data[p * n..(p + 1) * n].iter_mut().zip(&col) {
                    *d += r * c;
                }
            }
        }
    }
    Ok(transform(data, grid))
}

fn mu_axis(grid: WignerGrid) -> Vec<f64> {
    let half = (grid.points / 2) as f64;
    (0..grid.points)
        .map(|p| (p as f64 - half) * grid.mu_step)
        .collect()
}

/// Rows of `data` are indexed by `μ_r`, columns by `μ_i`.
fn transform(mut data: Vec<C64>, grid: WignerGrid) -> PhaseSpaceSamples {
    let n = grid.points;
    let h = grid.mu_step;
    // the checkerboard sign recentres both transforms on the origin
    for (idx, v) in data.iter_mut().enumerate() {
        if (idx / n + idx % n) % 2 == 1 {
            *v = -*v;
        }
    }
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    // q -> j with e^{-2πi jq/N}
    for row in data.chunks_mut(n) {
        forward.process(row);
    }
    // p -> k with e^{+2πi kp/N}, done on the transpose
    let mut t = vec![C64::new(0.0, 0.0); n * n];
    for p in 0..n {
        for j in 0..n {
            t[j * n + p] = data[p * n + j];
        }
    }
    for row in t.chunks_mut(n) {
        inverse.process(row);
    }
    let scale = h * h / (PI * PI);
    for (idx, v) in t.iter_mut().enumerate() {
        let sign = if (idx / n + idx % n) % 2 == 0 { 1.0 } else { -1.0 };
        *v *= scale * sign;
    }
    PhaseSpaceSamples {
        values: t,
        points: n,
        step: grid.x_step(),
        extent: grid.extent(),
    }
}

/// Simpson integrals of a sampled marginal over `x_r < 0` and `x_r > 0`.
fn half_line_masses(marginal: &[C64], step: f64) -> (C64, C64) {
    let n = marginal.len();
    let mid = n / 2;
    let simpson = |slice: &[C64]| -> C64 {
        let m = slice.len() - 1;
        let mut acc = slice[0] + slice[m];
        for (i, v) in slice.iter().enumerate().take(m).skip(1) {
            acc += v * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * (step / 3.0)
    };
    let negative = simpson(&marginal[..=mid]);
    // an even number of intervals; the last sample carries no mass
    let top = if (n - 1 - mid) % 2 == 0 { n - 1 } else { n - 2 };
    let positive = simpson(&marginal[mid..=top]);
    (positive, negative)
}

/// Coherent expansions of the two branches `|ψ_+⟩, |ψ_-⟩` on one mode.
pub type Branches = [Vec<(C64, C64)>; 2];

/// Sign probabilities of `N² Σ_{s,s'} |ψ^A_s⟩⟨ψ^A_{s'}| ⊗ |ψ^B_s⟩⟨ψ^B_{s'}|`.
///
/// Loss enters as `χ(μ) → χ(√η μ) e^{-(1-η)|μ|²/2}`, the Fourier image of the
/// convolution of `W` with the vacuum-ancilla Wigner function.
pub fn branch_sign_probabilities(
    modes: &[Branches; 2],
    log_norm: f64,
    eff: Efficiency,
    grid: WignerGrid,
) -> Result<SignProbabilities> {
    // masses[mode][s][s'] = (positive, negative)
    let mut masses = [[[(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); 2]; 2]; 2];
    for (m, br) in modes.iter().enumerate() {
        for s in 0..2 {
            for s2 in 0..2 {
                let w = block_wigner(&br[s], &br[s2], eff, grid)?;
                masses[m][s][s2] = half_line_masses(&w.marginal(), w.step);
            }
        }
    }
    let norm = (2.0 * log_norm).exp();
    let pick = |pair: (C64, C64), plus: bool| if plus { pair.0 } else { pair.1 };
    let prob = |a_plus: bool, b_plus: bool| -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..2 {
            for s2 in 0..2 {
                acc += pick(masses[0][s][s2], a_plus) * pick(masses[1][s][s2], b_plus);
            }
        }
        (acc * norm).re
    };
    let probs = SignProbabilities {
        pp: prob(true, true),
        pm: prob(true, false),
        mp: prob(false, true),
        mm: prob(false, false),
    };
    let drift = (probs.total() - 1.0).abs();
    if !drift.is_finite() || drift > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized {
            re: probs.total(),
            im: 0.0,
        });
    }
    Ok(probs)
}

/// Sign probabilities of the rotated resource by the characteristic-function route.
pub fn wigner_marginal(
    alpha: f64,
    settings: (MeasurementSetting, MeasurementSetting),
    eff: Efficiency,
    azimuth: AzimuthConvention,
    grid: WignerGrid,
) -> Result<SignProbabilities> {
    check_alpha(alpha, MAX_ALPHA)?;
    let (pa, pb) = physical(settings, azimuth);
    let modes = [branches(alpha, pa)?, branches(alpha, pb)?];
    branch_sign_probabilities(&modes, EcsParams::new(alpha)?.log_normalization(), eff, grid)
}

fn check_alpha(alpha: f64, max: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha <= max) {
        return Err(Error::InvalidParameter(format!(
            "grid oracle accepts 0 < alpha <= {max}, got {alpha}"
        )));
    }
    Ok(())
}
