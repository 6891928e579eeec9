//! Gauss–Legendre rules and brute-force homodyne integrals.

use std::f64::consts::{PI, SQRT_2};

use ecs_leggett::coherent::{CoherentLabel, EcsParams, DEFAULT_LABEL_CAP};
use ecs_leggett::engine::AzimuthConvention;
use ecs_leggett::error::Result;
use ecs_leggett::homodyne::SignProbabilities;
use ecs_leggett::rotations::{rotate_ket, MeasurementSetting};
use num_complex::Complex64 as C64;

#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, nodes found by Newton iteration.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "a rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[lo, hi]`.
    pub fn nodes_on(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn integrate<T, F>(&self, f: F, lo: f64, hi: f64, panels: usize) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: Fn(f64) -> T,
    {
        let width = (hi - lo) / panels as f64;
        let mut acc = T::default();
        for p in 0..panels {
            let a = lo + width * p as f64;
            for (x, w) in self.nodes_on(a, a + width) {
                acc = acc + f(x) * w;
            }
        }
        acc
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `⟨x|β⟩` for `x̂ = (â+â†)/√2`, evaluated directly.
pub fn wavefunction(beta: C64, x: f64) -> C64 {
    PI.powf(-0.25) * (-0.5 * x * x + SQRT_2 * beta * x - 0.5 * beta * beta - 0.5 * beta.norm_sqr()).exp()
}

/// A pure two-mode state `Σ_k c_k |a_k⟩|b_k⟩` as `(c_k, a_k, b_k)`.
pub type ProductExpansion = Vec<(C64, C64, C64)>;

/// The rotated resource expanded over coherent products.
pub fn rotated_ecs_expansion(
    alpha: f64,
    settings: (MeasurementSetting, MeasurementSetting),
    azimuth: AzimuthConvention,
) -> Result<ProductExpansion> {
    let (a, b) = match azimuth {
        AzimuthConvention::MirroredBob => (settings.0, settings.1.mirrored()),
        AzimuthConvention::Literal => settings,
    };
    let norm = EcsParams::new(alpha)?.log_normalization().exp();
    let mut out = Vec::new();
    for sign in [1.0, -1.0] {
        let start = CoherentLabel::real(sign * alpha)?;
        let left = rotate_ket(start, a, alpha, DEFAULT_LABEL_CAP)?;
        let right = rotate_ket(start, b, alpha, DEFAULT_LABEL_CAP)?;
        for (u, la) in &left {
            for (v, lb) in &right {
                out.push((u.value() * v.value() * norm, la.value(), lb.value()));
            }
        }
    }
    Ok(out)
}

/// Sign-binned probabilities of `|C(x, y)|²` by a product Gauss–Legendre rule.
///
/// Each half-axis `[0, ±half_width]` is cut into `panels` panels of `rule`.
pub fn brute_force_sign_probabilities(
    state: &[(C64, C64, C64)],
    half_width: f64,
    rule: &GaussLegendre,
    panels: usize,
) -> SignProbabilities {
    let mut nodes = Vec::new();
    for side in [1.0, -1.0] {
        let width = half_width / panels as f64;
        for p in 0..panels {
            let lo = width * p as f64;
            for (x, w) in rule.nodes_on(lo, lo + width) {
                nodes.push((side * x, w));
            }
        }
    }
    let half = nodes.len() / 2;
    let table = |pick: fn(&(C64, C64, C64)) -> C64| -> Vec<Vec<C64>> {
        nodes
            .iter()
            .map(|&(x, _)| state.iter().map(|t| wavefunction(pick(t), x)).collect())
            .collect()
    };
    let psi_a = table(|t| t.1);
    let psi_b = table(|t| t.2);
    let mut bins = [[0.0; 2]; 2];
    for (i, &(_, wx)) in nodes.iter().enumerate() {
        let row: Vec<C64> = state.iter().zip(&psi_a[i]).map(|(t, p)| t.0 * p).collect();
        for (j, &(_, wy)) in nodes.iter().enumerate() {
            let amp: C64 = row.iter().zip(&psi_b[j]).map(|(r, p)| r * p).sum();
            bins[usize::from(i >= half)][usize::from(j >= half)] += wx * wy * amp.norm_sqr();
        }
    }
    SignProbabilities {
        pp: bins[0][0],
        pm: bins[0][1],
        mp: bins[1][0],
        mm: bins[1][1],
    }
}
