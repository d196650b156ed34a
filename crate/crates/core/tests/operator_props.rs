use fujita_core::estimates::random_smooth_field;
use fujita_core::pv::frac_laplacian_pv_1d_many;
use fujita_core::{apply_operator, apply_semigroup, heat_kernel, Field, Grid, OperatorParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn smooth(seed: u64, grid: Grid, signed: bool) -> Field {
    random_smooth_field(grid, &mut ChaCha8Rng::seed_from_u64(seed), signed).unwrap()
}

fn operator() -> impl Strategy<Value = OperatorParams> {
    (0.0..2.0f64, 0.0..2.0f64, 0.05..0.95f64)
        .prop_filter("nonzero operator", |(a, b, _)| a + b > 0.05)
        .prop_map(|(a, b, s)| OperatorParams::new(a, b, s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn semigroup_property(params in operator(), t1 in 0.0..5.0f64, t2 in 0.0..5.0f64, seed in any::<u64>(), d in 1usize..=2) {
        let grid = if d == 1 { Grid::new(1, 256, 60.0) } else { Grid::new(2, 64, 40.0) }.unwrap();
        let u = smooth(seed, grid, true);
        let two = apply_semigroup(&apply_semigroup(&u, &params, t1).unwrap(), &params, t2).unwrap();
        let one = apply_semigroup(&u, &params, t1 + t2).unwrap();
        prop_assert!(two.sup_distance(&one) <= 1e-10 * one.norm_linf());
    }

    #[test]
    fn contractivity(params in operator(), t in 0.0..20.0f64, seed in any::<u64>(), signed in any::<bool>()) {
        let grid = Grid::new(1, 512, 100.0).unwrap();
        let u = smooth(seed, grid, signed);
        let v = apply_semigroup(&u, &params, t).unwrap();
        prop_assert!(v.norm_l1() <= (1.0 + 1e-6) * u.norm_l1());
        prop_assert!(v.norm_l2() <= (1.0 + 1e-6) * u.norm_l2());
        prop_assert!(v.norm_linf() <= (1.0 + 1e-6) * u.norm_linf());
    }

    #[test]
    fn heat_kernel_is_exactly_even(params in operator(), t in 0.01..10.0f64) {
        let grid = Grid::new(1, 256, 80.0).unwrap();
        let k = heat_kernel(grid, &params, t).unwrap().field;
        for i in 0..grid.len() {
            prop_assert_eq!(k.samples()[i], k.samples()[grid.mirror(i)]);
        }
    }
}

#[test]
fn spectral_and_pv_agree_on_random_smooth_fields() {
    let grid = Grid::new(1, 2048, 400.0).unwrap();
    for (case, s) in [0.2, 0.45, 0.7, 0.85].into_iter().enumerate() {
        let u = Field::from_fn(grid, |x| {
            (-x[0] * x[0] / 50.0).exp() - 0.5 * (-(x[0] - 6.0).powi(2) / 32.0).exp() * (case as f64 + 1.0) / 2.0
        })
        .unwrap();
        let spectral = apply_operator(&u, &OperatorParams::fractional(s).unwrap()).unwrap();
        let interior: Vec<usize> = (0..grid.n()).filter(|&i| grid.coord(i).abs() <= 50.0).step_by(8).collect();
        let pv = frac_laplacian_pv_1d_many(&u, s, &interior).unwrap();
        let sup = interior.iter().map(|&i| spectral.samples()[i].abs()).fold(0.0, f64::max);
        for (&i, v) in interior.iter().zip(&pv) {
            let err = (spectral.samples()[i] - v).abs() / sup;
            assert!(err <= 1e-3, "s={s} x={} err={err:e}", grid.coord(i));
        }
    }
}
