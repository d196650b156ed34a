//! Rescaled test functions `η(t) φ(x) = ν^l(t/T) Ψ^l(|x|/R)` and the
//! integrals of the capacity (test-function) method.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::operator::{apply_operator, OperatorParams};
use crate::solver::{abs_pow, linear_fit, Trajectory};

fn g(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn dg(x: f64) -> f64 {
    if x > 0.0 {
        g(x) / (x * x)
    } else {
        0.0
    }
}

fn d2g(x: f64) -> f64 {
    if x > 0.0 {
        g(x) * (1.0 - 2.0 * x) / x.powi(4)
    } else {
        0.0
    }
}

/// Smooth ramp: 1 on `[0, 1/2]`, 0 on `[1, ∞)`, non-increasing in between.
pub fn ramp(r: f64) -> f64 {
    if r <= 0.5 {
        return 1.0;
    }
    if r >= 1.0 {
        return 0.0;
    }
    let a = g(2.0 * (1.0 - r));
    let b = g(2.0 * (r - 0.5));
    a / (a + b)
}

/// `(ν(r), ν'(r), ν''(r))`.
pub fn ramp_derivatives(r: f64) -> (f64, f64, f64) {
    if r <= 0.5 {
        return (1.0, 0.0, 0.0);
    }
    if r >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let (x, y) = (2.0 * (1.0 - r), 2.0 * (r - 0.5));
    let (a, b) = (g(x), g(y));
    let (a1, b1) = (-2.0 * dg(x), 2.0 * dg(y));
    let (a2, b2) = (4.0 * d2g(x), 4.0 * d2g(y));
    let s = a + b;
    let (s1, s2) = (a1 + b1, a2 + b2);
    let num1 = a1 * s - a * s1;
    let v1 = num1 / (s * s);
    let v2 = (a2 * s - a * s2) / (s * s) - 2.0 * s1 * num1 / (s * s * s);
    (a / s, v1, v2)
}

/// Time and space cutoffs for one `(T, R, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPair {
    pub t_scale: f64,
    pub r_scale: f64,
    pub p: f64,
    /// `2p/(p-1)`.
    pub l: f64,
}

pub fn build_test_function(t_scale: f64, r_scale: f64, p: f64) -> Result<CutoffPair> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1 (got {p})")));
    }
    if !(t_scale > 0.0 && r_scale > 0.0) || !t_scale.is_finite() || !r_scale.is_finite() {
        return Err(Error::Domain("T and R must be positive".into()));
    }
    Ok(CutoffPair { t_scale, r_scale, p, l: 2.0 * p / (p - 1.0) })
}

impl CutoffPair {
    /// Conjugate exponent `p/(p-1)`.
    pub fn conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn eta(&self, t: f64) -> f64 {
        ramp(t / self.t_scale).powf(self.l)
    }

    pub fn eta_prime(&self, t: f64) -> f64 {
        let (v, v1, _) = ramp_derivatives(t / self.t_scale);
        if v == 0.0 {
            return 0.0;
        }
        self.l * v.powf(self.l - 1.0) * v1 / self.t_scale
    }

    /// `Ψ(|x|/R)`.
    pub fn psi(&self, x: &[f64]) -> f64 {
        ramp(norm(x) / self.r_scale)
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        self.psi(x).powf(self.l)
    }

    pub fn test_function(&self, t: f64, x: &[f64]) -> f64 {
        self.eta(t) * self.phi(x)
    }

    pub fn psi_field(&self, grid: Grid) -> Result<Field> {
        Field::from_fn(grid, |x| self.psi(x))
    }

    pub fn phi_field(&self, grid: Grid) -> Result<Field> {
        Field::from_fn(grid, |x| self.phi(x))
    }

    /// `(|∇Ψ|², ΔΨ)` at `x`, from the radial derivatives of the ramp.
    fn psi_gradient_laplacian(&self, x: &[f64]) -> (f64, f64) {
        let r = norm(x);
        let rs = self.r_scale;
        let (_, v1, v2) = ramp_derivatives(r / rs);
        let grad2 = (v1 / rs).powi(2);
        let radial = if r > 0.0 { (x.len() as f64 - 1.0) * v1 / (rs * r) } else { 0.0 };
        (grad2, v2 / (rs * rs) + radial)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Numerically evaluated capacity integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityReport {
    pub i1: f64,
    pub i2: f64,
    pub r: f64,
    pub t: f64,
    pub slope_i1_r: Option<f64>,
    pub slope_i1_t: Option<f64>,
    pub slope_i2_r: Option<f64>,
}

/// Midpoint rule for `∫_0^1 h(τ) dτ` on the part `[1/2, 1]` where the ramps
/// vary, plus the exact plateau contribution `plateau/2`.
fn ramp_integral(nodes: usize, plateau: f64, h: impl Fn(f64) -> f64) -> f64 {
    let w = 0.5 / nodes as f64;
    let sum: f64 = (0..nodes).map(|k| h(0.5 + (k as f64 + 0.5) * w)).sum();
    0.5 * plateau + w * sum
}

/// `I1 = ∬ |∂_t(ηφ)|^{p'} (ηφ)^{-1/(p-1)}` and `I2`, the same functional of
/// the Cordoba majorant of `L(ηφ)`.
///
/// With `l = 2p'`, both quotients extend continuously by zero off the support
/// and simplify exactly: the time factor of `I1` is `∫ (l|ν'|ν)^{p'}`, and the
/// space factor of `I2` is `∫ l^{p'} |K|^{p'}` with
/// `K = -aΨΔΨ - a(l-1)|∇Ψ|² + bΨ(-Δ)^sΨ`, which vanishes wherever `Ψ` does.
/// The exact nonlocal quotient is not integrable (`(-Δ)^s φ ≠ 0` where
/// `φ = 0`), which is why the majorant is used.
pub fn capacity_integrals(
    pair: &CutoffPair,
    params: &OperatorParams,
    grid: Grid,
    time_nodes: usize,
) -> Result<CapacityReport> {
    if time_nodes == 0 {
        return Err(Error::Domain("time_nodes must be positive".into()));
    }
    if !grid.contains_ball(pair.r_scale, 0.0) {
        return Err(Error::Range(format!(
            "ball of radius {} does not fit in a box of side {}",
            pair.r_scale,
            grid.box_length()
        )));
    }
    let pc = pair.conjugate();
    let l = pair.l;
    let t = pair.t_scale;

    let eta_factor = t * ramp_integral(time_nodes, 1.0, |tau| ramp(tau).powf(l));
    let deta_factor = t.powf(1.0 - pc)
        * ramp_integral(time_nodes, 0.0, |tau| {
            let (v, v1, _) = ramp_derivatives(tau);
            (l * v1.abs() * v).powf(pc)
        });

    let phi = pair.phi_field(grid)?;
    let i1 = phi.integral() * deta_factor;

    let psi = pair.psi_field(grid)?;
    let frac = match params.nonlocal_part() {
        Some(nl) => Some(apply_operator(&psi, &nl)?),
        None => None,
    };
    let d = grid.dim();
    let a = params.a();
    let mut space = 0.0;
    let mut peak = 0.0f64;
    let mut exterior = 0.0f64;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let ps = psi.samples()[i];
        let (grad2, lap) = pair.psi_gradient_laplacian(&x[..d]);
        let nonlocal = frac.as_ref().map_or(0.0, |f| ps * f.samples()[i]);
        let k = -a * ps * lap - a * (l - 1.0) * grad2 + nonlocal;
        let val = (l * k.abs()).powf(pc);
        peak = peak.max(val);
        if ps == 0.0 {
            exterior = exterior.max(val);
            continue;
        }
        space += val;
    }
    if exterior > 1e-12 * peak.max(f64::MIN_POSITIVE) {
        return Err(Error::Cutoff(format!(
            "integrand {exterior:.3e} outside the support of the cutoff"
        )));
    }
    let i2 = eta_factor * space * grid.cell_volume();
    if !(i1.is_finite() && i2.is_finite()) {
        return Err(Error::Cutoff("capacity integral is not finite".into()));
    }
    Ok(CapacityReport { i1, i2, r: pair.r_scale, t, slope_i1_r: None, slope_i1_t: None, slope_i2_r: None })
}

/// Grid that scales with `R`: box `8R`, fixed points per axis.
pub fn capacity_grid(d: usize, r: f64) -> Result<Grid> {
    let n = match d {
        1 => 1024,
        2 => 256,
        _ => 64,
    };
    Grid::new(d, n, 8.0 * r)
}

pub const DEFAULT_TIME_NODES: usize = 4000;

/// Fitted log-log slope with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub std_err: f64,
}

pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 usable points, got {}", pts.len())));
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (_, slope, std_err) = linear_fit(&lx, &ly).ok_or_else(|| Error::Fit("degenerate abscissae".into()))?;
    Ok(SlopeFit { slope, std_err })
}

/// Slopes of `I1/T` and `I2/T` against `R` under `T = R^{2s}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSlopes {
    pub i1: SlopeFit,
    pub i2: SlopeFit,
    /// `d - 2sp/(p-1)`, the exponent of the dominant term of both.
    pub expected: f64,
    pub reports: Vec<CapacityReport>,
}

pub fn scaling_slopes(d: usize, p: f64, params: &OperatorParams, r_list: &[f64]) -> Result<ScalingSlopes> {
    if r_list.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 radii, got {}", r_list.len())));
    }
    let s = params.s();
    let reports = r_list
        .par_iter()
        .map(|&r| {
            let pair = build_test_function(r.powf(2.0 * s), r, p)?;
            capacity_integrals(&pair, params, capacity_grid(d, r)?, DEFAULT_TIME_NODES)
        })
        .collect::<Result<Vec<_>>>()?;
    let rs: Vec<f64> = reports.iter().map(|c| c.r).collect();
    let i1: Vec<f64> = reports.iter().map(|c| c.i1 / c.t).collect();
    let i2: Vec<f64> = reports.iter().map(|c| c.i2 / c.t).collect();
    let fit1 = loglog_slope(&rs, &i1)?;
    let fit2 = loglog_slope(&rs, &i2)?;
    let reports = reports
        .into_iter()
        .map(|mut c| {
            c.slope_i1_r = Some(fit1.slope);
            c.slope_i2_r = Some(fit2.slope);
            c
        })
        .collect();
    Ok(ScalingSlopes { i1: fit1, i2: fit2, expected: d as f64 - 2.0 * s * p / (p - 1.0), reports })
}

/// One row of the nonexistence table at radius `R` (with `T = R^{2s}`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonexistenceRow {
    pub r: f64,
    pub forcing_term: f64,
    pub data_term: f64,
    pub capacity_term: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonexistenceReport {
    pub rows: Vec<NonexistenceRow>,
    pub contradiction_trend: bool,
}

fn tends_to_zero(values: &[f64]) -> bool {
    let first = values[0];
    let last = *values.last().expect("nonempty");
    if first == 0.0 {
        return values.iter().all(|&v| v == 0.0);
    }
    values.windows(2).all(|w| w[1] <= w[0]) && last <= 0.1 * first
}

/// `(∫ f φ, R^{-2s} ∫_{|x|<R} |u₀|, R^{d - 2sp/(p-1)})` for each `R`, and
/// whether the first column settles at a positive value while the other two
/// decay.
pub fn nonexistence_report(
    u0: &Field,
    f: &Field,
    p: f64,
    params: &OperatorParams,
    r_list: &[f64],
) -> Result<NonexistenceReport> {
    u0.check_same_grid(f)?;
    if r_list.is_empty() {
        return Err(Error::Range("empty radius list".into()));
    }
    if r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Range("radii must be increasing".into()));
    }
    let grid = u0.grid();
    let d = grid.dim();
    let s = params.s();
    let expo = d as f64 - 2.0 * s * p / (p - 1.0);
    let rows = r_list
        .iter()
        .map(|&r| {
            if !grid.contains_ball(r, 0.0) {
                return Err(Error::Range(format!("R = {r} exceeds the box")));
            }
            let pair = build_test_function(r.powf(2.0 * s), r, p)?;
            let mut forcing = 0.0;
            let mut data = 0.0;
            for i in 0..grid.len() {
                let x = grid.point(i);
                let rad = norm(&x[..d]);
                if rad < r {
                    forcing += f.samples()[i] * pair.phi(&x[..d]);
                    data += u0.samples()[i].abs();
                }
            }
            let dv = grid.cell_volume();
            Ok(NonexistenceRow {
                r,
                forcing_term: forcing * dv,
                data_term: r.powf(-2.0 * s) * data * dv,
                capacity_term: r.powf(expo),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let c1: Vec<f64> = rows.iter().map(|r| r.forcing_term).collect();
    let c2: Vec<f64> = rows.iter().map(|r| r.data_term).collect();
    let c3: Vec<f64> = rows.iter().map(|r| r.capacity_term).collect();
    let settles = c1.len() >= 2 && {
        let last = c1[c1.len() - 1];
        let prev = c1[c1.len() - 2];
        last > 0.0 && (last - prev).abs() <= 0.05 * last
    };
    let contradiction_trend = settles && tends_to_zero(&c2) && tends_to_zero(&c3);
    Ok(NonexistenceReport { rows, contradiction_trend })
}

/// Midpoint nodes per radial (and, in 1D, linear) direction.
pub const GROWTH_NODES: usize = 10_000;

/// `R^{-σ} ∫_{|x|<R} f` for an analytic `f`, by midpoint quadrature (polar
/// or spherical coordinates above one dimension).
pub fn growth_functional_analytic(d: usize, f: impl Fn(&[f64]) -> f64, sigma: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Range(format!("R must be positive (got {r})")));
    }
    let n = GROWTH_NODES;
    let h = r / n as f64;
    let integral = match d {
        1 => (0..2 * n).map(|k| f(&[-r + (k as f64 + 0.5) * h])).sum::<f64>() * h,
        2 => {
            let na = 64;
            let ha = 2.0 * std::f64::consts::PI / na as f64;
            let mut sum = 0.0;
            for k in 0..n {
                let rho = (k as f64 + 0.5) * h;
                for j in 0..na {
                    let th = (j as f64 + 0.5) * ha;
                    sum += f(&[rho * th.cos(), rho * th.sin()]) * rho;
                }
            }
            sum * h * ha
        }
        3 => {
            let (nt, np) = (16, 32);
            let ht = std::f64::consts::PI / nt as f64;
            let hp = 2.0 * std::f64::consts::PI / np as f64;
            let mut sum = 0.0;
            for k in 0..n {
                let rho = (k as f64 + 0.5) * h;
                for i in 0..nt {
                    let th = (i as f64 + 0.5) * ht;
                    for j in 0..np {
                        let ph = (j as f64 + 0.5) * hp;
                        let x = [rho * th.sin() * ph.cos(), rho * th.sin() * ph.sin(), rho * th.cos()];
                        sum += f(&x) * rho * rho * th.sin();
                    }
                }
            }
            sum * h * ht * hp
        }
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    Ok(r.powf(-sigma) * integral)
}

/// `R^{-σ} ∫_{|x|<R} f` by grid summation.
pub fn growth_functional(f: &Field, sigma: f64, r: f64) -> Result<f64> {
    let grid = f.grid();
    if !(r > 0.0) || !grid.contains_ball(r, 0.0) {
        return Err(Error::Range(format!("R = {r} must be positive and fit in the box")));
    }
    let sum: f64 = (0..grid.len())
        .filter(|&i| grid.radius(i) < r)
        .map(|i| f.samples()[i])
        .sum();
    Ok(r.powf(-sigma) * sum * grid.cell_volume())
}

/// Composite Simpson on uniform nodes with an even number of intervals,
/// trapezoid otherwise.
fn time_quadrature(times: &[f64], values: &[f64]) -> f64 {
    let m = times.len() - 1;
    if m == 0 {
        return 0.0;
    }
    let h = times[1] - times[0];
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs());
    if uniform && m % 2 == 0 {
        let mut s = values[0] + values[m];
        for k in 1..m {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * values[k];
        }
        s * h / 3.0
    } else {
        times
            .windows(2)
            .zip(values.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// Absolute residual of the weak formulation with `φ(T, ·) = 0` and the
/// initial slice included:
/// `|∬(|u|^p + f)ψ + ∫u₀ψ(0) - ∬u(-∂_tψ + Lψ)|` for `ψ = η(t)φ(x)`.
pub fn weak_residual(
    trajectory: &Trajectory,
    pair: &CutoffPair,
    f: &Field,
    u0: &Field,
    p: f64,
    params: &OperatorParams,
) -> Result<f64> {
    let grid = u0.grid();
    u0.check_same_grid(f)?;
    if trajectory.is_empty() || trajectory.times[0] != 0.0 {
        return Err(Error::Range("trajectory must start at t = 0".into()));
    }
    let t_end = *trajectory.times.last().expect("nonempty");
    let tt = pair.t_scale;
    let cover = trajectory.times.iter().position(|&t| (t - tt).abs() <= 1e-9 * tt);
    let Some(last) = cover else {
        return Err(Error::Range(format!(
            "test function horizon T = {tt} is not a node of the trajectory (ends at {t_end})"
        )));
    };
    if !grid.contains_ball(pair.r_scale, 0.0) {
        return Err(Error::Range("test function support exceeds the box".into()));
    }
    let phi = pair.phi_field(grid)?;
    let lphi = apply_operator(&phi, params)?;
    let dv = grid.cell_volume();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * dv;

    let times = &trajectory.times[..=last];
    let mut lhs_integrand = Vec::with_capacity(times.len());
    let mut rhs_integrand = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let u = trajectory.states[k].samples();
        let src: Vec<f64> = u.iter().zip(f.samples()).map(|(&v, &fv)| abs_pow(v, p) + fv).collect();
        let a = dot(&src, phi.samples());
        let b = dot(u, phi.samples());
        let c = dot(u, lphi.samples());
        lhs_integrand.push(pair.eta(t) * a);
        rhs_integrand.push(-pair.eta_prime(t) * b + pair.eta(t) * c);
    }
    let initial = pair.eta(0.0) * dot(u0.samples(), phi.samples());
    let lhs = time_quadrature(times, &lhs_integrand) + initial;
    let rhs = time_quadrature(times, &rhs_integrand);
    Ok((lhs - rhs).abs())
}
