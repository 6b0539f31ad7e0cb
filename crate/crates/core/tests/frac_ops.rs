use std::f64::consts::PI;

use fpme_core::diagnostics::FieldGenerator;
use fpme_core::ops::divergence;
use fpme_core::{frac_laplacian, gradient, inv_frac_laplacian, lp_norm, mollify, Grid, MollifierKernel, RealField};
use proptest::prelude::*;

fn grid2() -> Grid {
    Grid::new(2, 32, 2.0 * PI).unwrap()
}

fn trig(seed: u64, band: usize) -> RealField {
    FieldGenerator::random_trig(seed, 1.0, band).generate(grid2()).unwrap()
}

fn close(a: &RealField, b: &RealField, scale: f64, tol: f64) -> bool {
    a.sub(b).unwrap().max_abs() <= tol * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lambda_is_a_semigroup(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let f = trig(seed, 10);
        let lhs = frac_laplacian(&frac_laplacian(&f, a).unwrap(), b).unwrap();
        let rhs = frac_laplacian(&f, a + b).unwrap();
        prop_assert!(close(&lhs, &rhs, rhs.max_abs(), 1e-12));
    }

    #[test]
    fn pressure_inverts_lambda_on_mean_free(seed in any::<u64>(), s in 0.5f64..1.0) {
        let f = trig(seed, 10);
        let mean_free = f.sub(&RealField::constant(grid2(), f.mean())).unwrap();
        let back = inv_frac_laplacian(&frac_laplacian(&f, 2.0 * s).unwrap(), s).unwrap();
        prop_assert!(close(&back, &mean_free, f.max_abs(), 1e-12));
    }

    #[test]
    fn divergence_of_gradient_is_minus_laplacian(seed in any::<u64>()) {
        let f = trig(seed, 10);
        let lhs = divergence(&gradient(&f)).unwrap();
        let rhs = frac_laplacian(&f, 2.0).unwrap().scale(-1.0);
        prop_assert!(close(&lhs, &rhs, rhs.max_abs(), 1e-12));
    }

    #[test]
    fn mollifier_commutes_and_is_symmetric(seed in any::<u64>(), sigma in 0.0f64..2.0, eps in 0.4f64..1.2) {
        let k = MollifierKernel::new(grid2(), eps).unwrap();
        let f = trig(seed, 10);
        let g = trig(seed.wrapping_add(1), 10);
        let lf = frac_laplacian(&f, sigma).unwrap();
        let a = mollify(&lf, &k).unwrap();
        let b = frac_laplacian(&mollify(&f, &k).unwrap(), sigma).unwrap();
        prop_assert!(close(&a, &b, lf.max_abs(), 1e-11));
        let x = mollify(&f, &k).unwrap().inner(&g).unwrap();
        let y = f.inner(&mollify(&g, &k).unwrap()).unwrap();
        prop_assert!((x - y).abs() <= 1e-11 * lp_norm(&f, 2.0) * lp_norm(&g, 2.0));
    }

    #[test]
    fn mollifier_preserves_mean_and_sign(seed in any::<u64>(), eps in 0.4f64..1.2) {
        let k = MollifierKernel::new(grid2(), eps).unwrap();
        let f = trig(seed, 10);
        let jf = mollify(&f, &k).unwrap();
        prop_assert!((jf.mean() - f.mean()).abs() <= 1e-13 * (1.0 + f.max_abs()));
        prop_assert!(jf.max() <= f.max() + 1e-12 && jf.min() >= f.min() - 1e-12);
        prop_assert!(lp_norm(&jf, 2.0) <= lp_norm(&f, 2.0) * (1.0 + 1e-12));
    }
}

#[test]
fn kernel_is_nonnegative_with_unit_mass() {
    for eps in [0.2, 0.5, 1.0] {
        let k = MollifierKernel::new(Grid::new(1, 128, 2.0 * PI).unwrap(), eps).unwrap();
        let kv = k.kernel_values();
        assert!(kv.min() >= 0.0);
        let mass = fpme_core::mollifier::compensated_sum(kv.values()) * kv.grid().cell_volume();
        assert!((mass - 1.0).abs() < 1e-15, "{mass}");
        assert!((k.multiplier()[0] - 1.0).abs() == 0.0);
    }
}

#[test]
fn mollifier_rejects_unresolved_epsilon() {
    let g = Grid::new(1, 32, 2.0 * PI).unwrap();
    assert!(MollifierKernel::new(g, g.spacing()).is_err());
    assert!(MollifierKernel::new(g, PI).is_err());
}

#[test]
fn mollified_field_converges_as_epsilon_shrinks() {
    let g = Grid::new(1, 256, 2.0 * PI).unwrap();
    let f = FieldGenerator::gaussian_bump(1.0, 0.5).generate(g).unwrap();
    let gaps: Vec<f64> = [0.8, 0.4, 0.2, 0.1]
        .iter()
        .map(|&e| lp_norm(&mollify(&f, &MollifierKernel::new(g, e).unwrap()).unwrap().sub(&f).unwrap(), 2.0))
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn gradient_kills_constants() {
    let c = RealField::constant(grid2(), 3.0);
    for comp in gradient(&c) {
        assert!(comp.max_abs() < 1e-14);
    }
    assert!(frac_laplacian(&c, 0.7).unwrap().max_abs() < 1e-14);
}
