//! The mixed operator `L = -a Δ + b (-Δ)^s` as a Fourier multiplier, its heat
//! semigroup, heat kernel and the exact Duhamel weight.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Multiplier};
use crate::special::gamma;

/// Coefficients `(a, b, s)` of `L = -a Δ + b (-Δ)^s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorParams {
    a: f64,
    b: f64,
    s: f64,
}

impl OperatorParams {
    pub fn new(a: f64, b: f64, s: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && s.is_finite()) {
            return Err(Error::InvalidParams("a, b and s must be finite".into()));
        }
        if a < 0.0 || b < 0.0 {
            return Err(Error::InvalidParams(format!("a and b must be nonnegative (a={a}, b={b})")));
        }
        if a + b <= 0.0 {
            return Err(Error::InvalidParams("a + b must be positive".into()));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParams(format!("s must lie in (0,1) (got {s})")));
        }
        Ok(Self { a, b, s })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `σ(|ξ|) = a|ξ|² + b|ξ|^{2s}`.
    pub fn symbol_at(&self, xi_norm: f64) -> f64 {
        if xi_norm == 0.0 {
            return 0.0;
        }
        self.a * xi_norm * xi_norm + self.b * xi_norm.powf(2.0 * self.s)
    }

    /// The same coefficients with the local part removed: `b (-Δ)^s`.
    pub fn nonlocal_part(&self) -> Option<OperatorParams> {
        (self.b > 0.0).then_some(OperatorParams { a: 0.0, b: self.b, s: self.s })
    }

    /// The local part `-a Δ` (with `s` carried along unused).
    pub fn local_part(&self) -> Option<OperatorParams> {
        (self.a > 0.0).then_some(OperatorParams { a: self.a, b: 0.0, s: self.s })
    }

    /// Pure fractional Laplacian `(-Δ)^s`.
    pub fn fractional(s: f64) -> Result<Self> {
        Self::new(0.0, 1.0, s)
    }
}

/// Fourier symbol of `L` at the wavevector `xi`.
pub fn symbol(xi: &[f64], params: &OperatorParams) -> f64 {
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    params.symbol_at(norm)
}

/// Normalization constant `C_{d,s}` of the singular-integral form of `(-Δ)^s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracConstant {
    pub d: usize,
    pub s: f64,
    pub value: f64,
}

impl FracConstant {
    /// `2^{2s-1} · 2s · Γ((d+2s)/2) / (π^{d/2} Γ(1-s))`.
    pub fn new(d: usize, s: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("s must lie in (0,1) (got {s})")));
        }
        let df = d as f64;
        let value = 2f64.powf(2.0 * s - 1.0) * 2.0 * s * gamma((df + 2.0 * s) / 2.0)
            / (PI.powf(df / 2.0) * gamma(1.0 - s));
        Ok(Self { d, s, value })
    }
}

/// Multiplier `σ(ξ)` on a grid.
pub fn symbol_multiplier(grid: Grid, params: &OperatorParams) -> Multiplier {
    grid.radial_multiplier(|k| params.symbol_at(k))
}

/// Multiplier `e^{-tσ(ξ)}`.
pub fn semigroup_multiplier(grid: Grid, params: &OperatorParams, t: f64) -> Multiplier {
    grid.radial_multiplier(|k| (-t * params.symbol_at(k)).exp())
}

/// `L u`, computed spectrally. The zero mode is annihilated, so the output has
/// zero mean.
pub fn apply_operator(u: &Field, params: &OperatorParams) -> Result<Field> {
    if !u.is_finite() {
        return Err(Error::InvalidField("non-finite samples".into()));
    }
    symbol_multiplier(u.grid(), params).apply(u)
}

/// `e^{-tL} u`. `t = 0` returns the input unchanged.
pub fn apply_semigroup(u: &Field, params: &OperatorParams, t: f64) -> Result<Field> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("semigroup time must be >= 0 (got {t})")));
    }
    if !u.is_finite() {
        return Err(Error::InvalidField("non-finite samples".into()));
    }
    if t == 0.0 {
        return Ok(u.clone());
    }
    semigroup_multiplier(u.grid(), params, t).apply(u)
}

/// Spectral ringing larger than this fraction of the kernel's sup triggers a
/// [`ResolutionWarning`].
pub const KERNEL_NEGATIVITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolutionWarning {
    /// Most negative kernel sample.
    pub min_value: f64,
    pub sup: f64,
}

#[derive(Debug, Clone)]
pub struct HeatKernel {
    pub field: Field,
    pub warning: Option<ResolutionWarning>,
}

/// Heat kernel `P_t` of `L` on the torus, centred at the origin and normalized
/// so that its grid integral is one.
pub fn heat_kernel(grid: Grid, params: &OperatorParams, t: f64) -> Result<HeatKernel> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("heat kernel time must be > 0 (got {t})")));
    }
    let n_total = grid.len() as f64;
    let scale = n_total / grid.box_length().powi(grid.dim() as i32);
    let d = grid.dim();
    // (-1)^{sum of indices} shifts the delta from index 0 to the centre
    let spectrum: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let ij = grid.unravel(i);
            let parity = ij[..d].iter().sum::<usize>() % 2;
            let sign = if parity == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign * scale * (-t * params.symbol_at(grid.wavenumber_norm(i))).exp(), 0.0)
        })
        .collect();
    let raw = Field::from_spectrum(grid, spectrum);
    // enforce exact evenness
    let s = raw.samples();
    let even: Vec<f64> = (0..grid.len()).map(|i| 0.5 * (s[i] + s[grid.mirror(i)])).collect();
    let field = Field::new(grid, even)?;
    let sup = field.norm_linf();
    let min_value = field.samples().iter().cloned().fold(f64::INFINITY, f64::min);
    let warning = if min_value < -KERNEL_NEGATIVITY_TOLERANCE * sup {
        log::warn!(
            "heat kernel under-resolved at t={t}: min {min_value:.3e} vs sup {sup:.3e}"
        );
        Some(ResolutionWarning { min_value, sup })
    } else {
        None
    };
    Ok(HeatKernel { field, warning })
}

/// Exact Duhamel weight `∫_0^dt e^{-(dt-τ)σ} dτ = (1 - e^{-dtσ})/σ`, equal to
/// `dt` on the zero mode.
pub fn phi1_multiplier(params: &OperatorParams, grid: Grid, dt: f64) -> Result<Multiplier> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be > 0 (got {dt})")));
    }
    Ok(grid.radial_multiplier(|k| phi1(params.symbol_at(k), dt)))
}

pub(crate) fn phi1(sigma: f64, dt: f64) -> f64 {
    if sigma == 0.0 {
        dt
    } else {
        -(-dt * sigma).exp_m1() / sigma
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, b: f64, s: f64) -> OperatorParams {
        OperatorParams::new(a, b, s).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(OperatorParams::new(1.0, 1.0, 0.0).is_err());
        assert!(OperatorParams::new(1.0, 1.0, 1.0).is_err());
        assert!(OperatorParams::new(0.0, 0.0, 0.5).is_err());
        assert!(OperatorParams::new(-1.0, 1.0, 0.5).is_err());
        assert!(OperatorParams::new(0.0, 1.0, 0.5).is_ok());
    }

    #[test]
    fn symbol_examples() {
        assert_eq!(symbol(&[0.0], &params(1.0, 1.0, 0.5)), 0.0);
        assert_eq!(symbol(&[0.0, 0.0, 0.0], &params(3.0, 2.0, 0.2)), 0.0);
        assert!((symbol(&[1.0], &params(1.0, 1.0, 0.5)) - 2.0).abs() < 1e-15);
        assert!((symbol(&[2.0], &params(2.0, 3.0, 0.5)) - 14.0).abs() < 1e-14);
        assert!((symbol(&[0.6, 0.8], &params(1.0, 1.0, 0.5)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn frac_constant_known_values() {
        // C_{1,1/2} = 1/π, C_{3,1/2} = 1/π²
        assert!((FracConstant::new(1, 0.5).unwrap().value - 1.0 / PI).abs() < 1e-14);
        assert!((FracConstant::new(3, 0.5).unwrap().value - 1.0 / (PI * PI)).abs() < 1e-14);
        assert!(FracConstant::new(1, 1.0).is_err());
    }

    #[test]
    fn operator_kills_constants() {
        let g = Grid::new(2, 16, 10.0).unwrap();
        let u = Field::constant(g, 3.5).unwrap();
        let lu = apply_operator(&u, &params(1.0, 1.0, 0.3)).unwrap();
        assert!(lu.norm_linf() < 1e-12);
    }

    #[test]
    fn cosine_is_an_eigenfunction() {
        let l = 2.0 * PI * 4.0;
        let g = Grid::new(1, 64, l).unwrap();
        let k = 2.0 * PI * 3.0 / l;
        let s = 0.3;
        let u = Field::from_fn(g, |x| (k * x[0]).cos()).unwrap();
        let lu = apply_operator(&u, &params(0.0, 1.0, s)).unwrap();
        let eig = k.powf(2.0 * s);
        for (a, b) in lu.samples().iter().zip(u.samples()) {
            assert!((a - eig * b).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        // -u'' of a Gaussian vs the centred second-difference stencil; the gap
        // must shrink like h^2
        let mut errs = Vec::new();
        for n in [256usize, 512] {
            let g = Grid::new(1, n, 40.0).unwrap();
            let h = g.spacing();
            let u = Field::from_fn(g, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
            let lu = apply_operator(&u, &params(1.0, 0.0, 0.5)).unwrap();
            let s = u.samples();
            let mut err = 0.0f64;
            for i in 0..n {
                let fd = -(s[(i + 1) % n] - 2.0 * s[i] + s[(i + n - 1) % n]) / (h * h);
                err = err.max((fd - lu.samples()[i]).abs());
            }
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn semigroup_rejects_negative_time() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let u = Field::zeros(g);
        assert!(matches!(apply_semigroup(&u, &params(1.0, 1.0, 0.5), -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn semigroup_at_zero_is_identity() {
        let g = Grid::new(1, 32, 10.0).unwrap();
        let u = Field::from_fn(g, |x| (-x[0] * x[0]).exp() - 0.2).unwrap();
        let v = apply_semigroup(&u, &params(1.0, 1.0, 0.5), 0.0).unwrap();
        assert_eq!(u.samples(), v.samples());
    }

    #[test]
    fn semigroup_preserves_mean() {
        let g = Grid::new(2, 32, 10.0).unwrap();
        let u = Field::from_fn(g, |x| (-(x[0] - 1.0).powi(2) - x[1] * x[1]).exp() - 0.1 * x[1]).unwrap();
        for t in [0.01, 1.0, 30.0] {
            let v = apply_semigroup(&u, &params(0.5, 1.0, 0.4), t).unwrap();
            assert!((v.mean() - u.mean()).abs() < 1e-14);
        }
    }

    #[test]
    fn heat_kernel_rejects_nonpositive_time() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        assert!(heat_kernel(g, &params(1.0, 0.0, 0.5), 0.0).is_err());
    }

    #[test]
    fn heat_kernel_has_unit_mass_and_is_even() {
        for d in 1..=2 {
            let g = Grid::new(d, 64, 40.0).unwrap();
            for t in [0.1, 1.0, 10.0] {
                let k = heat_kernel(g, &params(1.0, 1.0, 0.6), t).unwrap();
                assert!((k.field.integral() - 1.0).abs() < 1e-10);
                let s = k.field.samples();
                for i in 0..g.len() {
                    assert_eq!(s[i], s[g.mirror(i)]);
                }
            }
        }
    }

    #[test]
    fn under_resolved_kernel_warns() {
        // a tiny time puts the kernel below one cell: spectral ringing
        let g = Grid::new(1, 16, 100.0).unwrap();
        let k = heat_kernel(g, &params(1.0, 0.0, 0.5), 1e-3).unwrap();
        assert!(k.warning.is_some());
        let k = heat_kernel(g, &params(1.0, 0.0, 0.5), 200.0).unwrap();
        assert!(k.warning.is_none());
    }

    #[test]
    fn phi1_examples() {
        let g = Grid::new(1, 16, 2.0 * PI).unwrap();
        let m = phi1_multiplier(&params(1.0, 0.0, 0.5), g, 0.3).unwrap();
        assert_eq!(m.zero_mode(), 0.3);
        assert!(m.values().iter().all(|&v| v > 0.0 && v <= 0.3));
        assert!((phi1(1.0, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((phi1(1.0, 1.0) - 0.632_120_558_828_557_7).abs() < 1e-15);
        for dt in [1e-4, 1e-8, 1e-12] {
            assert!((phi1(2.5, dt) / dt - 1.0).abs() < 2.0 * dt * 2.5);
        }
        assert!(phi1_multiplier(&params(1.0, 0.0, 0.5), g, 0.0).is_err());
    }
}
