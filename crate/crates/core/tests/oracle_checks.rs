use ecs_leggett::coherent::{
    make_ecs, overlap, CoherentDyadSum, CoherentLabel, EcsParams, Mode,
};
use ecs_leggett::engine::{AzimuthConvention, Engine};
use ecs_leggett::homodyne::{half_line_integral, HalfLine};
use ecs_leggett::logamp::LogAmp;
use ecs_leggett::loss::Efficiency;
use ecs_leggett::rotations::{rotate_ket, MeasurementSetting};
use ecs_leggett_oracle::fock::{
    default_nmax, displacement_matrix, fock_pipeline, fock_pipeline_with, hermite_functions,
    kerr_matrix, rotation_matrix, CMatrix, FockState, FockVector,
};
use ecs_leggett_oracle::quadrature::{
    brute_force_sign_probabilities, rotated_ecs_expansion, GaussLegendre,
};
use ecs_leggett_oracle::regression::regression_pairs;
use ecs_leggett_oracle::wigner::weyl_chi;
use num_complex::Complex64 as C64;

fn label(re: f64, im: f64) -> CoherentLabel {
    CoherentLabel::new(C64::new(re, im)).unwrap()
}

fn set(theta: f64, phi: f64) -> MeasurementSetting {
    MeasurementSetting::new(theta, phi).unwrap()
}

#[test]
fn overlap_matches_number_basis() {
    let (a, b) = (C64::new(2.0, 0.0), C64::new(1.0, 1.0));
    let fock = FockVector::coherent(a, 60).inner(&FockVector::coherent(b, 60));
    let exact = overlap(label(1.0, 1.0), label(2.0, 0.0));
    assert!((fock - exact).norm() < 1e-10 * exact.norm());
}

#[test]
fn small_ecs_has_unit_trace_in_number_basis() {
    let state = FockState::ecs(0.5, 40);
    assert!((state.trace() - 1.0).abs() < 1e-8);
    assert!((make_ecs(EcsParams::new(0.5).unwrap()).trace() - 1.0).norm() < 1e-10);
}

#[test]
fn displaced_quadrature_mean_matches_number_basis() {
    let mu = C64::new(0.0, 0.3);
    let state = make_ecs(EcsParams::new(1.0).unwrap()).displace(Mode::A, mu).unwrap();
    let nmax = 60;
    let fock = FockState::ecs(1.0, nmax).rotated(
        &displacement_matrix(mu, nmax),
        &CMatrix::identity(nmax + 1, nmax + 1),
    );
    assert!((state.quadrature_mean(Mode::A) - fock.quadrature_mean_a()).abs() < 1e-8);

    let shifted = make_ecs(EcsParams::new(1.0).unwrap())
        .displace(Mode::A, C64::new(0.45, -0.2))
        .unwrap();
    let fock = FockState::ecs(1.0, nmax).rotated(
        &displacement_matrix(C64::new(0.45, -0.2), nmax),
        &CMatrix::identity(nmax + 1, nmax + 1),
    );
    assert!((shifted.quadrature_mean(Mode::A) - fock.quadrature_mean_a()).abs() < 1e-8);
}

#[test]
fn kerr_cat_density_matches_number_basis() {
    let beta = label(1.2, 0.0);
    let vac = label(0.0, 0.0);
    let state = CoherentDyadSum::pure(&[(LogAmp::ONE, beta, vac)]).kerr_split(Mode::A);
    let nmax = 50;
    let kerr = FockVector::coherent(C64::new(1.2, 0.0), nmax).apply(&kerr_matrix(nmax));
    let mut h = vec![0.0; nmax + 1];
    hermite_functions(0.0, &mut h);
    let vacuum_density = h[0] * h[0];
    for k in -30..=30 {
        let x = 0.2 * k as f64;
        hermite_functions(x, &mut h);
        let amp: C64 = kerr.amps.iter().zip(&h).map(|(c, hn)| c * hn).sum();
        let engine = state.quadrature_density(x, 0.0) / vacuum_density;
        assert!((engine - amp.norm_sqr()).abs() < 1e-7, "x = {x}");
    }
}

#[test]
fn number_basis_unitaries_preserve_norm() {
    let nmax = default_nmax(2.0);
    let v = FockVector::coherent(C64::new(2.0, 0.0), nmax);
    let rotated = v.apply(&rotation_matrix(set(1.1, -0.6), 2.0, nmax));
    assert!((rotated.norm_sqr() - v.norm_sqr()).abs() < 1e-8);
    let displaced = v.apply(&displacement_matrix(C64::new(0.3, 0.5), nmax));
    assert!((displaced.norm_sqr() - v.norm_sqr()).abs() < 1e-8);
}

#[test]
fn number_basis_probabilities_are_normalized() {
    let zero = set(0.0, 0.0);
    let p = fock_pipeline(1.0, (zero, zero), Efficiency::PERFECT, AzimuthConvention::MirroredBob)
        .unwrap();
    assert!((p.total() - 1.0).abs() < 1e-8);
}

#[test]
fn doubling_the_truncation_changes_nothing() {
    let settings = (set(1.2, 0.4), set(0.5, -2.0));
    for eta in [1.0, 0.6] {
        let eff = Efficiency::new(eta).unwrap();
        let conv = AzimuthConvention::MirroredBob;
        let n = default_nmax(2.0);
        let p = fock_pipeline_with(2.0, settings, eff, conv, n).unwrap();
        let q = fock_pipeline_with(2.0, settings, eff, conv, 2 * n).unwrap();
        assert!(p.max_abs_difference(&q) < 1e-8);
    }
}

#[test]
fn characteristic_function_matches_number_basis() {
    let alpha = 1.0;
    let (a, b) = (set(std::f64::consts::FRAC_PI_2, 0.0), set(std::f64::consts::FRAC_PI_2, 0.0));
    let (ma, mb) = (C64::new(0.3, 0.0), C64::new(0.0, -0.2));
    let chi = weyl_chi(alpha, (a, b), ma, mb, AzimuthConvention::MirroredBob).unwrap();
    let nmax = default_nmax(alpha) + 20;
    let fock = FockState::ecs(alpha, nmax).rotated(
        &rotation_matrix(a, alpha, nmax),
        &rotation_matrix(b.mirrored(), alpha, nmax),
    );
    assert!((chi - fock.weyl(ma, mb)).norm() < 1e-8);
}

#[test]
fn half_line_kernel_matches_quadrature() {
    let b = C64::new(3.0, 2.0);
    let exact = half_line_integral(b, C64::new(0.0, 0.0), HalfLine::Positive)
        .unwrap()
        .value();
    let rule = GaussLegendre::new(20);
    let numeric: C64 = rule.integrate(
        |x| (-x * x + b * x).exp() / std::f64::consts::PI.sqrt(),
        0.0,
        40.0,
        200,
    );
    assert!((exact - numeric).norm() < 1e-10 * exact.norm());
}

#[test]
fn engine_matches_brute_force_joint_density() {
    let engine = Engine::default();
    let rule = GaussLegendre::new(12);
    for alpha in [0.8, 1.5] {
        let half_width = std::f64::consts::SQRT_2 * alpha + 8.0;
        for (a, b) in regression_pairs(17, 10) {
            let state = rotated_ecs_expansion(alpha, (a, b), engine.azimuth).unwrap();
            let brute = brute_force_sign_probabilities(&state, half_width, &rule, 24);
            let p = engine.sign_probabilities(alpha, a, b, Efficiency::PERFECT).unwrap();
            assert!(p.max_abs_difference(&brute) < 1e-6, "{p:?} vs {brute:?}");
        }
    }
}

#[test]
fn unrotated_ecs_signs_agree_by_brute_force() {
    let rule = GaussLegendre::new(12);
    let a = 2.0f64;
    let n = EcsParams::new(a).unwrap().log_normalization().exp();
    let state = vec![
        (C64::new(n, 0.0), C64::new(a, 0.0), C64::new(a, 0.0)),
        (C64::new(n, 0.0), C64::new(-a, 0.0), C64::new(-a, 0.0)),
    ];
    let p = brute_force_sign_probabilities(&state, 2f64.sqrt() * a + 8.0, &rule, 24);
    assert!(p.pp + p.mm >= 0.99);
    let engine = ecs_leggett::homodyne::sign_probabilities(
        &make_ecs(EcsParams::new(a).unwrap()),
        Default::default(),
    )
    .unwrap();
    assert!(engine.max_abs_difference(&p) < 1e-10);
}

#[test]
fn flip_twice_restores_the_branch() {
    let zero = set(0.0, 0.0);
    for alpha in [0.7, 2.0, 9.0] {
        let once = rotate_ket(label(alpha, 0.0), zero, alpha, 1e3).unwrap();
        assert_eq!(once.len(), 1);
        let twice = rotate_ket(once[0].1, zero, alpha, 1e3).unwrap();
        assert_eq!(twice.len(), 1);
        let (c, l) = twice[0];
        let fidelity = (c * once[0].0).value().norm_sqr();
        assert!((fidelity - 1.0).abs() < 1e-10);
        assert!((l.value() - alpha).norm() < 1e-12);
    }
}
