use ecs_leggett::coherent::{make_ecs, EcsParams, Mode};
use ecs_leggett::engine::{AzimuthConvention, Engine};
use ecs_leggett::homodyne::QuadratureConvention;
use ecs_leggett::inequalities::{bound_l, bound_ls, SettingsCatalogL, SettingsCatalogLS};
use ecs_leggett::loss::{apply_loss, Efficiency};
use ecs_leggett::rotations::{rotate, MeasurementSetting};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn setting() -> impl Strategy<Value = MeasurementSetting> {
    (0.0..std::f64::consts::PI, -3.14..3.14).prop_map(|(t, p)| MeasurementSetting::new(t, p).unwrap())
}

fn efficiency() -> impl Strategy<Value = Efficiency> {
    prop_oneof![Just(1.0), 0.05..1.0f64].prop_map(|e| Efficiency::new(e).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn probabilities_are_normalized(
        alpha in 0.1..100.0f64,
        a in setting(),
        b in setting(),
        eff in efficiency(),
    ) {
        let p = Engine::default().sign_probabilities(alpha, a, b, eff).unwrap();
        prop_assert!((p.total() - 1.0).abs() < 1e-9);
        for v in [p.pp, p.pm, p.mp, p.mm] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
        }
        prop_assert!(p.correlation().abs() <= 1.0 + 1e-9);
    }

    #[test]
    fn operations_preserve_trace(
        alpha in 0.2..40.0f64,
        s in setting(),
        mu_re in -2.0..2.0f64,
        mu_im in -2.0..2.0f64,
        eff in efficiency(),
    ) {
        let rho = make_ecs(EcsParams::new(alpha).unwrap());
        let t0 = rho.trace();
        let steps = [
            rotate(&rho, Mode::A, s, alpha).unwrap(),
            rho.displace(Mode::B, C64::new(mu_re, mu_im)).unwrap(),
            rho.kerr_split(Mode::A),
            apply_loss(&rho, Mode::B, eff).unwrap(),
        ];
        for out in steps {
            prop_assert!((out.trace() - t0).norm() < 1e-10);
        }
    }

    #[test]
    fn quadrature_scale_is_irrelevant(
        alpha in 0.3..30.0f64,
        a in setting(),
        b in setting(),
        eff in efficiency(),
    ) {
        let reference = Engine::default().sign_probabilities(alpha, a, b, eff).unwrap();
        for scale in [0.5, 1.0] {
            let engine = Engine {
                quadrature: QuadratureConvention::new(scale).unwrap(),
                ..Engine::default()
            };
            let p = engine.sign_probabilities(alpha, a, b, eff).unwrap();
            prop_assert!(p.max_abs_difference(&reference) < 1e-12);
        }
    }

    #[test]
    fn exchange_symmetry(
        alpha in 0.3..60.0f64,
        a in setting(),
        b in setting(),
        eff in efficiency(),
    ) {
        for engine in [Engine::default(), Engine::literal()] {
            let ab = engine.correlation(alpha, a, b, eff).unwrap();
            let ba = engine.correlation(alpha, b, a, eff).unwrap();
            prop_assert!((ab - ba).abs() < 1e-10);
        }
    }

    #[test]
    fn leggett_values_respect_trivial_ceilings(alpha in 0.5..80.0f64, phi in 0.0..1.57f64) {
        let e = Engine::default();
        let l = e.leggett_l(alpha, phi, Efficiency::PERFECT).unwrap();
        let ls = e.leggett_ls(alpha, phi, Efficiency::PERFECT).unwrap();
        prop_assert!(l.value <= 8.0 + 1e-9);
        prop_assert!(ls.value <= 2.0 + 1e-9);
        prop_assert!((l.violation - (l.value - l.bound)).abs() < 1e-12);
        prop_assert!(l.correlations.iter().chain(&ls.correlations).all(|c| c.abs() <= 1.0 + 1e-9));
    }
}

#[test]
fn bound_identities_hold_exactly() {
    for k in 0..=1000 {
        let phi = -3.0 + 0.006 * k as f64;
        let s = (phi / 2.0).sin().abs();
        assert_eq!(bound_l(phi) + 2.0 * s, 8.0);
        assert!((bound_ls(phi) + (2.0 / 3.0) * s - 2.0).abs() <= f64::EPSILON * 2.0);
    }
}

#[test]
fn catalogs_are_well_formed_across_angles() {
    for k in 1..=157 {
        let phi = 0.01 * k as f64;
        let l = SettingsCatalogL::new(phi).unwrap();
        assert_eq!(l.pairs().len(), 8);
        let ls = SettingsCatalogLS::new(phi).unwrap();
        for (p, m) in ls.bplus.iter().zip(&ls.bminus) {
            let (u, v) = (p.unit_vector(), m.unit_vector());
            let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            assert!((dot - phi.cos()).abs() < 1e-12);
        }
    }
}

#[test]
fn violation_grows_then_saturates() {
    let e = Engine::default();
    let at = |alpha: f64| e.leggett_l(alpha, 0.25, Efficiency::PERFECT).unwrap().value;
    let grid: Vec<f64> = (0..=32).map(|k| at(2.0 + 0.25 * k as f64)).collect();
    assert!(grid.windows(2).all(|w| w[1] > w[0]));
    let (l20, l60, l200) = (at(20.0), at(60.0), at(200.0));
    assert!(l20 < l60 && l60 < l200);
    assert!((l200 - l60).abs() < 0.01);
}

#[test]
fn conventions_differ_only_in_bob_azimuth() {
    let (a, b) = (
        MeasurementSetting::new(1.0, 0.4).unwrap(),
        MeasurementSetting::new(0.7, -1.3).unwrap(),
    );
    let mirrored = Engine::default();
    assert_eq!(mirrored.azimuth, AzimuthConvention::MirroredBob);
    let lit = Engine::literal().correlation(3.0, a, b.mirrored(), Efficiency::PERFECT).unwrap();
    let mir = mirrored.correlation(3.0, a, b, Efficiency::PERFECT).unwrap();
    assert!((lit - mir).abs() < 1e-14);
}
