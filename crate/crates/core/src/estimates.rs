//! Numerical checks of the semigroup estimates and the elementary
//! inequalities used for the nonlinearity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::capacity::{build_test_function, capacity_grid};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::operator::{apply_operator, apply_semigroup, OperatorParams};
use crate::solver::{abs_pow, linear_fit};

fn lq_norm(u: &Field, q: f64) -> f64 {
    if q.is_infinite() {
        u.norm_linf()
    } else {
        u.norm_lq(q)
    }
}

/// Fitted `L^q → L^r` decay of the semigroup.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub q: f64,
    pub r: f64,
    pub t_window: (f64, f64),
    pub fitted_slope: f64,
    pub theory_slope: f64,
    pub rel_error: f64,
    /// `max_t ratio(t) · t^{-theory}` over the window.
    pub c_fit: f64,
    /// `(t, ||e^{-tL}probe||_r / ||probe||_q)` at every retained time.
    pub ratios: Vec<(f64, f64)>,
}

/// Energy fraction in the top third of the spectrum above which sup norms are
/// not trusted.
pub const ALIASING_GUARD: f64 = 1e-6;

/// Length scale reached by the semigroup at time `t`.
pub fn diffusion_length(params: &OperatorParams, t: f64) -> f64 {
    let mut len = 0.0;
    if params.a() > 0.0 {
        len += (params.a() * t).sqrt();
    }
    if params.b() > 0.0 {
        len += (params.b() * t).powf(1.0 / (2.0 * params.s()));
    }
    len
}

/// `-(d/2s)(1/q - 1/r)`.
pub fn theory_slope(d: usize, s: f64, q: f64, r: f64) -> f64 {
    -(d as f64) / (2.0 * s) * (1.0 / q - 1.0 / r)
}

/// Log-log slope of `||e^{-tL}probe||_r / ||probe||_q` over `t_grid`, keeping
/// only times whose diffusion length stays below a quarter of the box.
pub fn decay_fit(params: &OperatorParams, q: f64, r: f64, probe: &Field, t_grid: &[f64]) -> Result<DecayFit> {
    if !(q >= 1.0 && r >= q) {
        return Err(Error::Domain(format!("need 1 <= q <= r (got q={q}, r={r})")));
    }
    let base = lq_norm(probe, q);
    if base == 0.0 {
        return Err(Error::Domain("probe must be nonzero".into()));
    }
    if probe.spectral_tail_fraction() > ALIASING_GUARD {
        return Err(Error::Window("probe is under-resolved on this grid".into()));
    }
    let grid = probe.grid();
    let limit = grid.box_length() / 4.0;
    let theory = theory_slope(grid.dim(), params.s(), q, r);
    let mut ratios = Vec::new();
    for &t in t_grid {
        if !(t > 0.0) || diffusion_length(params, t) > limit {
            continue;
        }
        let evolved = apply_semigroup(probe, params, t)?;
        let v = lq_norm(&evolved, r) / base;
        if !(v > 1e-300) {
            return Err(Error::Window(format!("norm ratio underflows at t={t}")));
        }
        ratios.push((t, v));
    }
    if ratios.len() < 3 {
        return Err(Error::Window(format!(
            "only {} times inside the box-limited window",
            ratios.len()
        )));
    }
    let x: Vec<f64> = ratios.iter().map(|(t, _)| t.ln()).collect();
    let y: Vec<f64> = ratios.iter().map(|(_, v)| v.ln()).collect();
    let (_, slope, _) = linear_fit(&x, &y).ok_or_else(|| Error::Fit("degenerate time grid".into()))?;
    let rel_error = if theory != 0.0 { (slope - theory).abs() / theory.abs() } else { slope.abs() };
    let c_fit = ratios.iter().fold(0.0f64, |m, (t, v)| m.max(v * t.powf(-theory)));
    Ok(DecayFit {
        q,
        r,
        t_window: (ratios[0].0, ratios[ratios.len() - 1].0),
        fitted_slope: slope,
        theory_slope: theory,
        rel_error,
        c_fit,
        ratios,
    })
}

/// `n` times spaced geometrically on `[lo, hi]`.
pub fn geometric_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|k| lo * (step * k as f64).exp()).collect()
}

/// Outcome of the Cordoba–Cordoba comparison on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CordobaCheck {
    /// `max (−Δ)^s[base^l] − l base^{l−1} (−Δ)^s[base]`, positive part.
    pub violation: f64,
    /// `max |(−Δ)^s[base^l]|`.
    pub scale: f64,
}

impl CordobaCheck {
    pub fn passes(&self, rel_tol: f64) -> bool {
        self.violation <= rel_tol * self.scale
    }
}

pub fn cordoba_check(base: &Field, s: f64, l: f64) -> Result<CordobaCheck> {
    if !(l >= 1.0) {
        return Err(Error::Domain(format!("l must be >= 1 (got {l})")));
    }
    if let Some(v) = base.samples().iter().find(|&&v| v < -1e-12) {
        return Err(Error::Domain(format!("base has negative sample {v}")));
    }
    let base = base.map(|v| v.max(0.0))?;
    let frac = OperatorParams::fractional(s)?;
    let powered = base.map(|v| v.powf(l))?;
    let lhs = apply_operator(&powered, &frac)?;
    let inner = apply_operator(&base, &frac)?;
    let mut violation = 0.0f64;
    for i in 0..base.samples().len() {
        let b = base.samples()[i];
        let rhs = if b == 0.0 { 0.0 } else { l * b.powf(l - 1.0) * inner.samples()[i] };
        violation = violation.max(lhs.samples()[i] - rhs);
    }
    Ok(CordobaCheck { violation, scale: lhs.norm_linf() })
}

/// Worst relative violations of the pointwise nonlinear inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport {
    /// `||u|^p − |v|^p| − p|u−v|(|u|^{p−1}+|v|^{p−1})`, relative to the right side.
    pub power_difference: f64,
    /// `||u|^p||_1 − ||u||∞^{p−1} ||u||_1`, relative.
    pub product_l1: f64,
    pub product_l2: f64,
}

impl InequalityReport {
    pub fn max_violation(&self) -> f64 {
        self.power_difference.max(self.product_l1).max(self.product_l2)
    }
}

fn relative_excess(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs) / scale
    }
}

pub fn pointwise_inequality_suite(u: &Field, v: &Field, p: f64) -> Result<InequalityReport> {
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1 (got {p})")));
    }
    let mut power_difference = f64::NEG_INFINITY;
    for (&a, &b) in u.samples().iter().zip(v.samples()) {
        let lhs = (abs_pow(a, p) - abs_pow(b, p)).abs();
        let rhs = p * (a - b).abs() * (abs_pow(a, p - 1.0) + abs_pow(b, p - 1.0));
        power_difference = power_difference.max(relative_excess(lhs, rhs));
    }
    let up = u.map(|x| abs_pow(x, p))?;
    let sup = u.norm_linf().powf(p - 1.0);
    Ok(InequalityReport {
        power_difference,
        product_l1: relative_excess(up.norm_l1(), sup * u.norm_l1()),
        product_l2: relative_excess(up.norm_l2(), sup * u.norm_l2()),
    })
}

/// `C(ε) = (εp)^{-1/(p-1)} (p-1)/p`.
pub fn young_constant(eps: f64, p: f64) -> f64 {
    (eps * p).powf(-1.0 / (p - 1.0)) * (p - 1.0) / p
}

/// `AB − (ε A^p w + C(ε) B^{p/(p−1)} w^{−1/(p−1)})`, relative to the right side.
pub fn young_excess(a: f64, b: f64, w: f64, p: f64, eps: f64) -> f64 {
    let lhs = a * b;
    let rhs = eps * a.powf(p) * w + young_constant(eps, p) * b.powf(p / (p - 1.0)) * w.powf(-1.0 / (p - 1.0));
    relative_excess(lhs, rhs)
}

/// Tolerances of the randomized suite.
pub const CORDOBA_TOL: f64 = 1e-6;
pub const POINTWISE_TOL: f64 = 1e-12;
pub const CONTRACTIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteSection {
    pub cases: usize,
    pub violations: usize,
    /// Largest violation measured in units of the section's tolerance.
    pub worst: f64,
}

impl SuiteSection {
    fn record(&mut self, excess_in_tol_units: f64) {
        self.cases += 1;
        if excess_in_tol_units > 1.0 {
            self.violations += 1;
        }
        self.worst = self.worst.max(excess_in_tol_units);
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport {
    pub cordoba: SuiteSection,
    pub power_difference: SuiteSection,
    pub young: SuiteSection,
    pub contractivity: SuiteSection,
}

impl SuiteReport {
    pub fn sections(&self) -> [(&'static str, &SuiteSection); 4] {
        [
            ("cordoba", &self.cordoba),
            ("power_difference", &self.power_difference),
            ("young", &self.young),
            ("contractivity", &self.contractivity),
        ]
    }

    pub fn passed(&self) -> bool {
        self.sections().iter().all(|(_, s)| s.violations == 0)
    }
}

/// A smooth random field: a sum of a few Gaussians with random signs,
/// centres and widths, kept well inside the box.
pub fn random_smooth_field(grid: Grid, rng: &mut impl Rng, signed: bool) -> Result<Field> {
    let d = grid.dim();
    let l = grid.box_length();
    let h = grid.spacing();
    let bumps: Vec<(f64, [f64; 3], f64)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            let amp = if signed { rng.gen_range(-2.0..2.0) } else { rng.gen_range(0.1..2.0) };
            let mut c = [0.0; 3];
            for ci in c.iter_mut().take(d) {
                *ci = rng.gen_range(-0.2 * l..0.2 * l);
            }
            (amp, c, rng.gen_range(3.0 * h..(0.08 * l).max(6.0 * h)))
        })
        .collect();
    Field::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|(a, c, w)| {
                let r2: f64 = x.iter().zip(c).map(|(xi, ci)| (xi - ci).powi(2)).sum();
                a * (-r2 / (2.0 * w * w)).exp()
            })
            .sum()
    })
}

/// Seeded randomized run of the Cordoba, power-difference, ε-Young and contractivity
/// checks, `cases` draws each.
pub fn run_inequality_suite(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::default();

    for _ in 0..cases {
        let d = rng.gen_range(1..=2);
        let r = rng.gen_range(4.0..32.0);
        let s = rng.gen_range(0.1..0.9);
        let l = rng.gen_range(1.0..8.0);
        let grid = capacity_grid(d, r)?;
        let pair = build_test_function(1.0, r, 2.0)?;
        let base = pair.psi_field(grid)?;
        let c = cordoba_check(&base, s, l)?;
        report.cordoba.record(c.violation / (CORDOBA_TOL * c.scale));
    }

    let grid = Grid::new(1, 256, 64.0)?;
    for _ in 0..cases {
        let u = random_smooth_field(grid, &mut rng, true)?;
        let v = random_smooth_field(grid, &mut rng, true)?;
        let p = [1.5, 2.0, 3.0][rng.gen_range(0..3)];
        let ineq = pointwise_inequality_suite(&u, &v, p)?;
        report.power_difference.record(ineq.max_violation() / POINTWISE_TOL);
    }

    for _ in 0..cases {
        let p = rng.gen_range(1.05..5.0);
        let eps = [0.1, 0.25][rng.gen_range(0..2)];
        let worst = (0..100)
            .map(|_| {
                let a = 10f64.powf(rng.gen_range(-3.0..3.0));
                let b = 10f64.powf(rng.gen_range(-3.0..3.0));
                let w = 10f64.powf(rng.gen_range(-3.0..3.0));
                young_excess(a, b, w, p, eps)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        report.young.record(worst / POINTWISE_TOL);
    }

    for _ in 0..cases {
        let d = rng.gen_range(1..=2);
        let grid = Grid::new(d, if d == 1 { 256 } else { 64 }, 64.0)?;
        let u = random_smooth_field(grid, &mut rng, true)?;
        let s = rng.gen_range(0.1..0.9);
        let params = OperatorParams::new(rng.gen_range(0.0..2.0), rng.gen_range(0.1..2.0), s)?;
        let t = 10f64.powf(rng.gen_range(-2.0..1.0));
        let e = apply_semigroup(&u, &params, t)?;
        let worst = [1.0, 2.0, f64::INFINITY]
            .iter()
            .map(|&q| lq_norm(&e, q) / lq_norm(&u, q) - 1.0)
            .fold(f64::NEG_INFINITY, f64::max);
        report.contractivity.record(worst / CONTRACTIVITY_TOL);
    }
    Ok(report)
}
