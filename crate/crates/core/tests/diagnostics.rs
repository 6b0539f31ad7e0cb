use std::f64::consts::PI;

use fpme_core::diagnostics::{
    check_commutator, check_cordoba, check_pointwise_lp, run_property_suite, stability, write_records_csv,
    FieldGenerator, FieldKind, PropertySuiteConfig, Recorder,
};
use fpme_core::{forward_transform, Error, Grid, RealField};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::new(2, 32, 2.0 * PI).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bump_kinds_are_nonnegative(seed in any::<u64>(), amp in 0.1f64..3.0) {
        for kind in [FieldKind::GaussianBump, FieldKind::MultiBump] {
            let gen = FieldGenerator::new(kind, seed, amp, 0.6);
            prop_assert!(gen.is_nonnegative_kind());
            let f = gen.generate(Grid::new(2, 64, 2.0 * PI).unwrap()).unwrap();
            prop_assert!(f.min() >= -1e-12 * amp);
        }
    }

    #[test]
    fn random_trig_is_band_limited_and_reproducible(seed in any::<u64>(), band in 1usize..10) {
        let gen = FieldGenerator::random_trig(seed, 1.0, band);
        let f = gen.generate(grid()).unwrap();
        let again = gen.generate(grid()).unwrap();
        prop_assert_eq!(f.values(), again.values());
        let hat = forward_transform(&f);
        for (i, c) in hat.coeffs().iter().enumerate() {
            let m = grid().mode(i);
            if m[0].unsigned_abs() as usize > band || m[1].unsigned_abs() as usize > band {
                prop_assert!(c.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn pointwise_gaps_hold(seed in any::<u64>()) {
        let g = grid();
        let f = FieldGenerator::random_trig(seed, 1.0, g.n_points() / 6).generate(g).unwrap();
        for s in [0.5, 0.8, 1.2, 2.0] {
            prop_assert!(check_cordoba(&f, s).unwrap().pass);
        }
        prop_assert!(check_pointwise_lp(&f, 0.6, 2.0).unwrap().pass);
        let f4 = FieldGenerator::random_trig(seed, 1.0, g.n_points() / 12).generate(g).unwrap();
        prop_assert!(check_pointwise_lp(&f4, 1.0, 4.0).unwrap().pass);
    }
}

#[test]
fn lp_check_rejects_other_exponents() {
    let f = FieldGenerator::random_trig(1, 1.0, 4).generate(grid()).unwrap();
    assert!(matches!(check_pointwise_lp(&f, 0.6, 3.0), Err(Error::UnsupportedExponent(_))));
}

#[test]
fn commutator_degenerate_cases() {
    let c = RealField::constant(grid(), 2.0);
    let f = FieldGenerator::random_trig(2, 1.0, 4).generate(grid()).unwrap();
    assert_eq!(check_commutator(&c, &f, 2.5).unwrap(), 0.0);
    assert!(check_commutator(&c, &c, 2.5).is_err());
}

#[test]
fn stability_is_symmetric_relative_change() {
    let a = stability(1.0, 1.1);
    assert!((a.relative_change - 0.1 / 1.1).abs() < 1e-15);
    assert!(a.pass);
    assert!(!stability(1.0, 2.0).pass);
    assert_eq!(stability(-0.5, -0.5).relative_change, 0.0);
}

#[test]
fn recorder_tracks_constant_state() {
    let g = Grid::new(1, 32, 2.0 * PI).unwrap();
    let u = RealField::constant(g, 2.0);
    let mut rec = Recorder::new(g, 2.1);
    for k in 0..3 {
        let r = rec.record(&u, 0.1 * k as f64, 0.1, 1.0);
        assert_eq!(r.mass, 2.0);
        assert_eq!(r.c_meas, 0.0);
        assert_eq!(r.min_u, 2.0);
    }
    let mut buf = Vec::new();
    write_records_csv(&mut buf, rec.records()).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,dt,l2,h_alpha,min_u,mass,c_meas,besov_alpha\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn small_suite_passes() {
    let cfg = PropertySuiteConfig { dim: 2, n: 32, fields: 8, pairs: 8, ..PropertySuiteConfig::default() };
    let report = run_property_suite(&cfg).unwrap();
    assert!(report.passed(), "{:?}", report.rows.iter().filter(|r| !r.pass).collect::<Vec<_>>());
    for prefix in ["cordoba", "lp", "mollifier", "smoothing", "commutator", "product", "embedding"] {
        assert!(report.rows_for(prefix).next().is_some(), "{prefix}");
    }
}
