//! Truncated number-basis simulation of the full measurement chain.

use std::f64::consts::PI;

use ecs_leggett::engine::AzimuthConvention;
use ecs_leggett::error::{Error, Result};
use ecs_leggett::homodyne::SignProbabilities;
use ecs_leggett::loss::Efficiency;
use ecs_leggett::rotations::MeasurementSetting;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::quadrature::GaussLegendre;

/// Largest amplitude the number-basis simulation accepts.
pub const MAX_ALPHA: f64 = 3.0;
/// Extra levels used when exponentiating ladder-operator generators.
const PADDING: usize = 40;
/// Accepted probability mass in the top five retained levels.
pub const TAIL_TOLERANCE: f64 = 1e-10;

pub type CMatrix = DMatrix<C64>;

/// Number-basis amplitudes `c_0 … c_nmax`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub amps: Vec<C64>,
}

impl FockVector {
    pub fn nmax(&self) -> usize {
        self.amps.len() - 1
    }

    /// `|β⟩` truncated at `nmax`.
    pub fn coherent(beta: C64, nmax: usize) -> Self {
        let mut amps = Vec::with_capacity(nmax + 1);
        let mut c = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
        amps.push(c);
        for n in 1..=nmax {
            c = c * beta / (n as f64).sqrt();
            amps.push(c);
        }
        FockVector { amps }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Mass in the top five retained levels.
    pub fn tail_mass(&self) -> f64 {
        let start = self.amps.len().saturating_sub(5);
        self.amps[start..].iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply(&self, m: &CMatrix) -> FockVector {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        FockVector {
            amps: (m * v).iter().copied().collect(),
        }
    }
}

/// Truncation large enough for an ECS of amplitude `alpha`.
pub fn default_nmax(alpha: f64) -> usize {
    ((std::f64::consts::SQRT_2 * alpha + 6.0).powi(2)).ceil() as usize
}

/// `D(μ)` on levels `0..=nmax`, exponentiated in a padded space.
pub fn displacement_matrix(mu: C64, nmax: usize) -> CMatrix {
    let dim = nmax + 1 + PADDING;
    let mut gen = CMatrix::zeros(dim, dim);
    for n in 0..dim - 1 {
        let s = ((n + 1) as f64).sqrt();
        gen[(n + 1, n)] += mu * s;
        gen[(n, n + 1)] -= mu.conj() * s;
    }
    gen.exp().view((0, 0), (nmax + 1, nmax + 1)).into_owned()
}

/// `exp(-iπn²/2)`: `1` on even levels and `-i` on odd ones.
pub fn kerr_matrix(nmax: usize) -> CMatrix {
    CMatrix::from_fn(nmax + 1, nmax + 1, |i, j| {
        if i != j {
            C64::new(0.0, 0.0)
        } else if i % 2 == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, -1.0)
        }
    })
}

/// `D(-iφ/4α) U D(iθ/4α) U D(iφ/4α)` in the number basis.
pub fn rotation_matrix(setting: MeasurementSetting, alpha: f64, nmax: usize) -> CMatrix {
    let d = |x: f64| displacement_matrix(C64::new(0.0, x / (4.0 * alpha)), nmax);
    let u = kerr_matrix(nmax);
    d(-setting.phi()) * &u * d(setting.theta()) * &u * d(setting.phi())
}

/// Kraus operators `⟨k|_anc U_BS |0⟩_anc` of the vacuum beam splitter, `cos ζ = √η`.
pub fn loss_kraus(eff: Efficiency, nmax: usize) -> Vec<DMatrix<f64>> {
    let zeta = eff.eta().sqrt().acos();
    let mut kraus = vec![DMatrix::<f64>::zeros(nmax + 1, nmax + 1); nmax + 1];
    // the beam splitter conserves the total photon number N = n_signal + n_ancilla
    for total in 0..=nmax {
        let dim = total + 1;
        // basis |m, total - m⟩ indexed by the signal count m
        let mut gen = DMatrix::<f64>::zeros(dim, dim);
        for m in 0..total {
            // ζ (b†c - b c†)
            let amp = ((m + 1) as f64 * (total - m) as f64).sqrt() * zeta;
            gen[(m + 1, m)] += amp;
            gen[(m, m + 1)] -= amp;
        }
        let block = gen.exp();
        // input |total, 0⟩, output |m, total - m⟩
        for m in 0..=total {
            kraus[total - m][(m, total)] = block[(m, total)];
        }
    }
    kraus
}

/// Sign projectors `G±_{mn} = ∫_{half} h_m(x) h_n(x) dx` for `x̂ = (â+â†)/√2`.
pub fn sign_projectors(nmax: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = nmax + 1;
    let upper = (2.0 * nmax as f64 + 1.0).sqrt() + 12.0;
    let rule = GaussLegendre::new(24);
    let panels = (upper * 8.0).ceil() as usize;
    let mut plus = DMatrix::<f64>::zeros(dim, dim);
    let mut h = vec![0.0; dim];
    for p in 0..panels {
        let lo = upper * p as f64 / panels as f64;
        let hi = upper * (p + 1) as f64 / panels as f64;
        for (x, w) in rule.nodes_on(lo, hi) {
            hermite_functions(x, &mut h);
            for m in 0..dim {
                let hm = h[m] * w;
                for n in m..dim {
                    plus[(m, n)] += hm * h[n];
                }
            }
        }
    }
    for m in 0..dim {
        for n in 0..m {
            plus[(m, n)] = plus[(n, m)];
        }
    }
    let minus = DMatrix::from_fn(dim, dim, |m, n| {
        if (m + n) % 2 == 0 {
            plus[(m, n)]
        } else {
            -plus[(m, n)]
        }
    });
    (plus, minus)
}

/// Normalized Hermite functions `h_0(x) … h_{len-1}(x)`.
pub fn hermite_functions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 1..out.len() - 1 {
        let k = n as f64;
        out[n + 1] = (2.0 / (k + 1.0)).sqrt() * x * out[n] - (k / (k + 1.0)).sqrt() * out[n - 1];
    }
}

/// Two-mode pure state `Σ ψ_{mn} |m⟩|n⟩` stored as the matrix `ψ`.
#[derive(Clone, Debug)]
pub struct FockState {
    pub psi: CMatrix,
}

impl FockState {
    pub fn ecs(alpha: f64, nmax: usize) -> Self {
        let plus = FockVector::coherent(C64::new(alpha, 0.0), nmax);
        let minus = FockVector::coherent(C64::new(-alpha, 0.0), nmax);
        let norm = 1.0 / (2.0 * (1.0 + (-4.0 * alpha * alpha).exp())).sqrt();
        let psi = CMatrix::from_fn(nmax + 1, nmax + 1, |m, n| {
            (plus.amps[m] * plus.amps[n] + minus.amps[m] * minus.amps[n]) * norm
        });
        FockState { psi }
    }

    /// `(R_A ⊗ R_B)ψ = R_A ψ R_Bᵀ`.
    pub fn rotated(&self, ra: &CMatrix, rb: &CMatrix) -> Self {
        FockState {
            psi: ra * &self.psi * rb.transpose(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.psi.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Mass on levels above `nmax - 5` in either mode.
    pub fn tail_mass(&self) -> f64 {
        let dim = self.psi.nrows();
        let cut = dim.saturating_sub(5);
        let mut s = 0.0;
        for m in 0..dim {
            for n in 0..dim {
                if m >= cut || n >= cut {
                    s += self.psi[(m, n)].norm_sqr();
                }
            }
        }
        s
    }

    /// `⟨ψ| G_A ⊗ G_B |ψ⟩ = Tr(ψ† G_A ψ G_B)` for real symmetric `G`.
    pub fn expectation(&self, ga: &DMatrix<f64>, gb: &DMatrix<f64>) -> f64 {
        let ga = ga.map(|x| C64::new(x, 0.0));
        let gb = gb.map(|x| C64::new(x, 0.0));
        (self.psi.adjoint() * ga * &self.psi * gb).trace().re
    }

    /// `Tr(ρ D_A(μ_A) D_B(μ_B))`.
    pub fn weyl(&self, mu_a: C64, mu_b: C64) -> C64 {
        let nmax = self.psi.nrows() - 1;
        let da = displacement_matrix(mu_a, nmax);
        let db = displacement_matrix(mu_b, nmax);
        (self.psi.adjoint() * da * &self.psi * db.transpose()).trace()
    }

    /// `⟨x̂⟩` on mode A with `x̂ = (â+â†)/√2`.
    pub fn quadrature_mean_a(&self) -> f64 {
        let dim = self.psi.nrows();
        let x = CMatrix::from_fn(dim, dim, |m, n| {
            if m + 1 == n || n + 1 == m {
                C64::new((m.max(n) as f64 / 2.0).sqrt(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        (self.psi.adjoint() * x * &self.psi).trace().re
    }
}

fn heisenberg(g: &DMatrix<f64>, kraus: &[DMatrix<f64>]) -> DMatrix<f64> {
    kraus
        .iter()
        .fold(DMatrix::zeros(g.nrows(), g.ncols()), |acc, k| acc + k.transpose() * g * k)
}

/// Sign-binned probabilities from a number-basis simulation.
pub fn fock_pipeline(
    alpha: f64,
    settings: (MeasurementSetting, MeasurementSetting),
    eff: Efficiency,
    azimuth: AzimuthConvention,
) -> Result<SignProbabilities> {
    fock_pipeline_with(alpha, settings, eff, azimuth, default_nmax(alpha))
}

pub fn fock_pipeline_with(
    alpha: f64,
    settings: (MeasurementSetting, MeasurementSetting),
    eff: Efficiency,
    azimuth: AzimuthConvention,
    nmax: usize,
) -> Result<SignProbabilities> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha <= MAX_ALPHA) {
        return Err(Error::InvalidParameter(format!(
            "number-basis oracle accepts 0 < alpha <= {MAX_ALPHA}, got {alpha}"
        )));
    }
    if nmax < default_nmax(alpha) {
        return Err(Error::InvalidParameter(format!(
            "truncation {nmax} below the required {}",
            default_nmax(alpha)
        )));
    }
    let (a, b) = settings;
    let b = match azimuth {
        AzimuthConvention::MirroredBob => b.mirrored(),
        AzimuthConvention::Literal => b,
    };
    let state = FockState::ecs(alpha, nmax).rotated(
        &rotation_matrix(a, alpha, nmax),
        &rotation_matrix(b, alpha, nmax),
    );
    let tail = state.tail_mass();
    if tail > TAIL_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "truncation tail mass {tail:e} exceeds {TAIL_TOLERANCE:e}"
        )));
    }
    let (mut gp, mut gm) = sign_projectors(nmax);
    if !eff.is_perfect() {
        let kraus = loss_kraus(eff, nmax);
        gp = heisenberg(&gp, &kraus);
        gm = heisenberg(&gm, &kraus);
    }
    Ok(SignProbabilities {
        pp: state.expectation(&gp, &gp),
        pm: state.expectation(&gp, &gm),
        mp: state.expectation(&gm, &gp),
        mm: state.expectation(&gm, &gm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_overlap_matches_closed_form() {
        let a = FockVector::coherent(C64::new(2.0, 0.0), 60);
        let b = FockVector::coherent(C64::new(1.0, 1.0), 60);
        let exact = (-0.5 * 4.0 - 0.5 * 2.0 + 2.0 * C64::new(1.0, 1.0)).exp();
        assert!((a.inner(&b) - exact).norm() < 1e-10);
    }

    #[test]
    fn displacement_is_unitary_and_shifts_vacuum() {
        let mu = C64::new(0.4, -0.9);
        let d = displacement_matrix(mu, 40);
        let vac = FockVector::coherent(C64::new(0.0, 0.0), 40);
        let out = vac.apply(&d);
        let target = FockVector::coherent(mu, 40);
        assert!((out.inner(&target).norm() - 1.0).abs() < 1e-10);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn kraus_completeness() {
        let k = loss_kraus(Efficiency::new(0.6).unwrap(), 20);
        let s = k.iter().fold(DMatrix::<f64>::zeros(21, 21), |acc, m| acc + m.transpose() * m);
        assert!((s - DMatrix::<f64>::identity(21, 21)).amax() < 1e-10);
    }

    #[test]
    fn projectors_resolve_identity() {
        let (p, m) = sign_projectors(30);
        assert!((p + m - DMatrix::<f64>::identity(31, 31)).amax() < 1e-12);
    }

    #[test]
    fn rejects_large_alpha() {
        let s = MeasurementSetting::new(0.0, 0.0).unwrap();
        assert!(fock_pipeline(3.5, (s, s), Efficiency::PERFECT, AzimuthConvention::Literal).is_err());
    }
}
