use fujita_core::exponents::{
    admissible_inverse_q, duhamel_beta_bounds, forcing_critical_exponent, fujita_exponent,
    global_existence_parameters, global_existence_parameters_with_q,
};
use proptest::prelude::*;

/// `(d, s, p)` with `d > 2s` and `p` above the forcing-critical exponent.
fn admissible() -> impl Strategy<Value = (usize, f64, f64)> {
    (1usize..=4, 0.01..0.99f64, 0.001..5.0f64)
        .prop_filter("d > 2s", |(d, s, _)| *d as f64 > 2.0 * s)
        .prop_map(|(d, s, dp)| (d, s, forcing_critical_exponent(d, s).unwrap() + dp))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn fujita_below_forcing_critical(d in 1usize..=6, s in 0.001..0.999f64) {
        prop_assume!(d as f64 > 2.0 * s);
        prop_assert!(fujita_exponent(d, s).unwrap() < forcing_critical_exponent(d, s).unwrap());
    }

    #[test]
    fn parameter_chain((d, s, p) in admissible()) {
        let g = global_existence_parameters(d, s, p).unwrap();
        prop_assert!(g.q > g.p_c_s);
        prop_assert!(g.p_c_s > g.k);
        prop_assert!(g.k >= 1.0);
        prop_assert!(g.rho > 0.0);
        let identity = d as f64 / (2.0 * s) * (1.0 / g.p_c_s - 1.0 / g.q);
        prop_assert!((g.rho - identity).abs() <= 1e-12 * g.rho.abs().max(1.0));
    }

    #[test]
    fn nonlinear_beta_is_finite((d, s, p) in admissible(), frac in 0.01..0.99f64) {
        let (lo, hi) = admissible_inverse_q(d, s, p);
        let g = global_existence_parameters_with_q(d, s, p, Some(1.0 / (lo + frac * (hi - lo)))).unwrap();
        let b = duhamel_beta_bounds(d, s, &g, p);
        prop_assert!(b.nonlinear_args.0 > 0.0 && b.nonlinear_args.1 > 0.0);
        prop_assert!(b.nonlinear.is_finite() && b.nonlinear > 0.0);
        prop_assert!((b.forcing_exponent + g.rho).abs() <= 1e-12 * g.rho.max(1.0));
    }
}
