use fujita_core::capacity::{build_test_function, capacity_grid, capacity_integrals, DEFAULT_TIME_NODES};
use fujita_core::estimates::{
    cordoba_check, decay_fit, geometric_times, young_excess, CORDOBA_TOL, POINTWISE_TOL,
};
use fujita_core::harness::families::FamilySpec;
use fujita_core::{apply_operator, apply_semigroup, Grid, OperatorParams};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn capacity_integrals_are_finite(
        d in 1usize..=2,
        p in 1.1..4.0f64,
        s in 0.1..0.9f64,
        r in 2.0..200.0f64,
        t in 0.1..1e3f64,
        a in 0.0..2.0f64,
    ) {
        let params = OperatorParams::new(a, 1.0, s).unwrap();
        let pair = build_test_function(t, r, p).unwrap();
        let rep = capacity_integrals(&pair, &params, capacity_grid(d, r).unwrap(), DEFAULT_TIME_NODES).unwrap();
        prop_assert!(rep.i1.is_finite() && rep.i1 > 0.0);
        prop_assert!(rep.i2.is_finite() && rep.i2 > 0.0);
    }

    #[test]
    fn cordoba_inequality(s in 0.05..0.95f64, l in 1.0..10.0f64, r in 2.0..64.0f64, d in 1usize..=2) {
        let base = build_test_function(1.0, r, 2.0).unwrap().psi_field(capacity_grid(d, r).unwrap()).unwrap();
        let c = cordoba_check(&base, s, l).unwrap();
        prop_assert!(c.passes(CORDOBA_TOL), "violation {} scale {}", c.violation, c.scale);
    }

    #[test]
    fn young_inequality(a in 0.0..50.0f64, b in 0.0..50.0f64, w in 1e-3..1e3f64, p in 1.05..5.0f64, eps_idx in 0usize..2) {
        let eps = [0.1, 0.25][eps_idx];
        prop_assert!(young_excess(a, b, w, p, eps) <= POINTWISE_TOL);
    }
}

#[test]
fn fractional_laplacian_of_cutoff_scales_like_r_to_minus_2s() {
    for s in [0.25, 0.5, 0.75] {
        let nl = OperatorParams::fractional(s).unwrap();
        let consts: Vec<f64> = [4.0, 16.0, 64.0, 256.0]
            .into_iter()
            .map(|r: f64| {
                let phi = build_test_function(1.0, r, 2.0).unwrap().phi_field(capacity_grid(1, r).unwrap()).unwrap();
                apply_operator(&phi, &nl).unwrap().norm_linf() * r.powf(2.0 * s)
            })
            .collect();
        let (lo, hi) = consts.iter().fold((f64::MAX, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
        assert!(hi <= 1.1 * lo, "s={s} constants {consts:?}");
    }
}

fn probes(grid: Grid) -> Vec<fujita_core::Field> {
    ["gaussian amp=1 width=4", "dipole amp=1 sep=40 width=3", "ring amp=1 radius=10 width=3"]
        .into_iter()
        .map(|t| FamilySpec::parse(t).unwrap().sample(grid).unwrap())
        .collect()
}

#[test]
fn smoothing_constant_is_stable_across_probes() {
    let grid = Grid::new(1, 8192, 4000.0).unwrap();
    let times = geometric_times(0.1, 500.0, 16);
    for (a, b) in [(0.0, 1.0), (1.0, 1.0)] {
        let params = OperatorParams::new(a, b, 0.5).unwrap();
        for (q, r) in [(1.0, f64::INFINITY), (1.0, 2.0), (2.0, f64::INFINITY)] {
            let fits: Vec<_> = probes(grid).iter().map(|pr| decay_fit(&params, q, r, pr, &times).unwrap()).collect();
            for f in &fits {
                for (t, v) in &f.ratios {
                    assert!(*v <= f.c_fit * t.powf(f.theory_slope) * (1.0 + 1e-12));
                }
                // No window exclusion below t = 1.
                assert!(f.ratios[0].0 < 1.0);
            }
            let (lo, hi) = fits.iter().fold((f64::MAX, 0.0f64), |(lo, hi), f| (lo.min(f.c_fit), hi.max(f.c_fit)));
            assert!(hi <= 3.0 * lo, "a={a} q={q} r={r}: constants {lo} .. {hi}");
        }
    }
}

#[test]
fn evolved_norms_are_nonincreasing() {
    let grid = Grid::new(1, 4096, 2000.0).unwrap();
    let params = OperatorParams::new(1.0, 1.0, 0.4).unwrap();
    for probe in probes(grid) {
        for r in [1.0, 1.5, 2.0, f64::INFINITY] {
            let norm = |t: f64| {
                let v = apply_semigroup(&probe, &params, t).unwrap();
                if r.is_infinite() { v.norm_linf() } else { v.norm_lq(r) }
            };
            let series: Vec<f64> = geometric_times(0.01, 200.0, 30).into_iter().map(norm).collect();
            for w in series.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "r={r}: {} -> {}", w[0], w[1]);
            }
        }
    }
}
