//! Real-space principal-value quadrature for `(-Δ)^s` in one dimension.
//!
//! This is an oracle for the spectral operator and deliberately shares nothing
//! with it beyond the samples. The singular integral is folded to
//!
//! ```text
//! (-Δ)^s u(x) = C_{1,s} ∫_0^∞ (2u(x) - u(x+z) - u(x-z)) z^{-1-2s} dz
//! ```
//!
//! and evaluated with the trapezoid rule on the grid offsets `z = jh`. The
//! periodic extension makes the integrand periodic in `j`, so the infinite tail
//! collapses onto Hurwitz zeta weights. The `z^{1-2s}` behaviour at the origin
//! is removed with the generalized Euler–Maclaurin (Navot) corrections, whose
//! coefficients use finite-difference derivatives of `u`.

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::operator::FracConstant;
use crate::special::{hurwitz_zeta, riemann_zeta};

/// Precomputed weights for one `(n, h, s)`.
#[derive(Debug, Clone)]
pub struct PvQuadrature {
    n: usize,
    h: f64,
    s: f64,
    constant: f64,
    /// `w_r = h^{-2s} Σ_{m≥0} (r + m n)^{-1-2s}` for `r = 1..n-1` (index 0 unused).
    weights: Vec<f64>,
    zeta_lead: f64,
    zeta_next: f64,
}

impl PvQuadrature {
    pub fn new(n: usize, h: f64, s: f64) -> Result<Self> {
        let constant = FracConstant::new(1, s)?.value;
        let nf = n as f64;
        let expo = 1.0 + 2.0 * s;
        let pre = h.powf(-2.0 * s) * nf.powf(-expo);
        let mut weights = vec![0.0; n];
        for (r, w) in weights.iter_mut().enumerate().skip(1) {
            *w = pre * hurwitz_zeta(expo, r as f64 / nf);
        }
        Ok(Self {
            n,
            h,
            s,
            constant,
            weights,
            zeta_lead: riemann_zeta(2.0 * s - 1.0),
            zeta_next: riemann_zeta(2.0 * s - 3.0),
        })
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    /// `(-Δ)^s u` at sample `i` of a periodic 1D sample vector.
    pub fn evaluate(&self, samples: &[f64], i: usize) -> f64 {
        let n = self.n;
        let h = self.h;
        let u = |k: isize| samples[k.rem_euclid(n as isize) as usize];
        let ii = i as isize;
        let ui = samples[i];
        let mut sum = 0.0;
        for r in 1..n {
            let g = 2.0 * ui - samples[(i + r) % n] - samples[(i + n - r) % n];
            sum += g * self.weights[r];
        }
        // Navot corrections: φ(z) = g(z)/z² = -u'' - u'''' z²/12 - ...
        let d2 = (-u(ii + 2) + 16.0 * u(ii + 1) - 30.0 * ui + 16.0 * u(ii - 1) - u(ii - 2)) / (12.0 * h * h);
        let d4 = (u(ii + 2) - 4.0 * u(ii + 1) + 6.0 * ui - 4.0 * u(ii - 1) + u(ii - 2)) / h.powi(4);
        let phi0 = -d2;
        let phi2_half = -d4 / 12.0;
        let s = self.s;
        let integral = sum
            - self.zeta_lead * phi0 * h.powf(2.0 - 2.0 * s)
            - self.zeta_next * phi2_half * h.powf(4.0 - 2.0 * s);
        self.constant * integral
    }
}

/// `(-Δ)^s u` at grid index `index` by principal-value quadrature.
pub fn frac_laplacian_pv_1d(u: &Field, s: f64, index: usize) -> Result<f64> {
    let g = u.grid();
    if g.dim() != 1 {
        return Err(Error::UnsupportedDimension(g.dim()));
    }
    if index >= g.n() {
        return Err(Error::Range(format!("index {index} outside grid of {} points", g.n())));
    }
    let q = PvQuadrature::new(g.n(), g.spacing(), s)?;
    Ok(q.evaluate(u.samples(), index))
}

/// Evaluates the quadrature at every listed index, reusing one weight table.
pub fn frac_laplacian_pv_1d_many(u: &Field, s: f64, indices: &[usize]) -> Result<Vec<f64>> {
    let g = u.grid();
    if g.dim() != 1 {
        return Err(Error::UnsupportedDimension(g.dim()));
    }
    let q = PvQuadrature::new(g.n(), g.spacing(), s)?;
    indices
        .iter()
        .map(|&i| {
            if i >= g.n() {
                Err(Error::Range(format!("index {i} outside grid")))
            } else {
                Ok(q.evaluate(u.samples(), i))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn constant_gives_zero() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let u = Field::constant(g, 2.0).unwrap();
        for i in [0, 13, 40] {
            assert_eq!(frac_laplacian_pv_1d(&u, 0.4, i).unwrap(), 0.0);
        }
    }

    #[test]
    fn cosine_symbol_oracle() {
        let l = 40.0;
        let g = Grid::new(1, 256, l).unwrap();
        let k = 2.0 * PI * 3.0 / l;
        let u = Field::from_fn(g, |x| (k * x[0]).cos()).unwrap();
        for s in [0.25, 0.5, 0.75] {
            let vals = frac_laplacian_pv_1d_many(&u, s, &(0..256).collect::<Vec<_>>()).unwrap();
            let eig = k.powf(2.0 * s);
            for (i, v) in vals.iter().enumerate() {
                let want = eig * u.samples()[i];
                assert!((v - want).abs() <= 1e-3 * eig, "s={s} i={i}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn gaussian_peak_positive() {
        let g = Grid::new(1, 256, 60.0).unwrap();
        let u = Field::from_fn(g, |x| (-x[0] * x[0] / 8.0).exp()).unwrap();
        for s in [0.2, 0.5, 0.9] {
            assert!(frac_laplacian_pv_1d(&u, s, 128).unwrap() > 0.0);
        }
    }

    #[test]
    fn rejects_higher_dimensions() {
        let g = Grid::new(2, 16, 10.0).unwrap();
        let u = Field::zeros(g);
        assert_eq!(frac_laplacian_pv_1d(&u, 0.5, 0), Err(Error::UnsupportedDimension(2)));
    }
}
