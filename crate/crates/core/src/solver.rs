//! Mild solutions of `u_t + L u = |u|^p + f`.
//!
//! Two discretizations of the Duhamel formula live here: a Picard iteration on
//! a short interval and an exponential Euler stepper for long horizons. The
//! stepper error is controlled by step doubling, and the doubled step is
//! locally extrapolated, so accepted steps are second order.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{forward, inverse_real, Field, Grid};
use crate::operator::{phi1, symbol_multiplier, OperatorParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    /// Largest step the adaptive integrator may take.
    pub dt_max: f64,
    pub t_end: f64,
    /// `L∞` level treated as blow-up.
    pub blowup_threshold: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Uniform sub-intervals of `[0, T]` used by the Picard map.
    pub picard_nodes: usize,
    /// Minimum shrink factor applied to a rejected step.
    pub adapt_factor: f64,
    /// Relative sup-norm tolerance of the step-doubling error estimate.
    pub step_tol: f64,
    /// Spectral energy fraction above `2/3 k_max` treated as lost resolution.
    pub tail_tol: f64,
    /// Resolution may be lost without penalty once the remaining ODE lifespan
    /// `1/((p-1)||u||∞^{p-1})` is below this fraction of the elapsed time.
    pub commit_ratio: f64,
    /// Largest log-log slope of `||u||∞` over the last decade of a completed
    /// run that still counts as saturation rather than growth.
    pub saturation_slope: f64,
    pub max_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            dt_min: 1e-14,
            dt_max: 1.0,
            t_end: 1e3,
            blowup_threshold: 1e8,
            picard_tol: 1e-10,
            picard_max_iter: 200,
            picard_nodes: 64,
            adapt_factor: 0.5,
            step_tol: 1e-5,
            tail_tol: 1e-3,
            commit_ratio: 0.05,
            saturation_slope: 0.05,
            max_steps: 5_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_init", self.dt_init),
            ("dt_min", self.dt_min),
            ("dt_max", self.dt_max),
            ("t_end", self.t_end),
            ("blowup_threshold", self.blowup_threshold),
            ("picard_tol", self.picard_tol),
            ("step_tol", self.step_tol),
            ("tail_tol", self.tail_tol),
            ("commit_ratio", self.commit_ratio),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite (got {v})")));
            }
        }
        if self.dt_min > self.dt_init {
            return Err(Error::Config(format!(
                "dt_min ({}) must not exceed dt_init ({})",
                self.dt_min, self.dt_init
            )));
        }
        if self.dt_init > self.dt_max {
            return Err(Error::Config("dt_init must not exceed dt_max".into()));
        }
        if !(self.adapt_factor > 0.0 && self.adapt_factor < 1.0) {
            return Err(Error::Config(format!(
                "adapt_factor must lie in (0,1) (got {})",
                self.adapt_factor
            )));
        }
        if self.picard_max_iter == 0 || self.picard_nodes == 0 || self.max_steps == 0 {
            return Err(Error::Config("iteration and node counts must be positive".into()));
        }
        Ok(())
    }
}

/// Norms of one recorded state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub mass: f64,
}

impl NormSample {
    pub fn of(t: f64, u: &Field) -> Self {
        Self {
            t,
            l1: u.norm_l1(),
            l2: u.norm_l2(),
            linf: u.norm_linf(),
            mass: u.integral(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Global,
    BlowUp,
    Indeterminate,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Global => "Global",
            Status::BlowUp => "BlowUp",
            Status::Indeterminate => "Indeterminate",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why the integrator stopped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ReachedEnd,
    Threshold,
    DtFloor,
    /// Spectral tail exceeded `tail_tol` outside the terminal regime.
    Unresolved { t: f64, tail: f64 },
    StepLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: Status,
    pub t_star: Option<f64>,
    pub t_max_estimate: Option<f64>,
    pub series: Vec<NormSample>,
    pub termination: Termination,
    /// First time the spectral tail exceeded `tail_tol` inside the terminal
    /// regime (the run was allowed to continue).
    pub resolution_lost_at: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub diagnostic: Option<String>,
}

impl SolveOutcome {
    pub fn final_linf(&self) -> f64 {
        self.series.last().map_or(f64::NAN, |s| s.linf)
    }
}

/// `|v|^p` with `|0|^p = 0`.
#[inline]
pub fn abs_pow(v: f64, p: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        (p * v.abs().ln()).exp()
    }
}

/// Exponential and φ₁ multipliers of one step length on a fixed symbol.
struct StepWeights {
    dt: f64,
    decay: Vec<f64>,
    phi: Vec<f64>,
}

impl StepWeights {
    fn new(sigma: &[f64], dt: f64) -> Self {
        Self {
            dt,
            decay: sigma.iter().map(|&s| (-dt * s).exp()).collect(),
            phi: sigma.iter().map(|&s| phi1(s, dt)).collect(),
        }
    }
}

/// A state held in both representations.
#[derive(Clone)]
struct State {
    samples: Vec<f64>,
    spectrum: Vec<Complex64>,
}

impl State {
    fn of(u: &Field) -> Self {
        Self { samples: u.samples().to_vec(), spectrum: u.spectrum().to_vec() }
    }

    fn into_field(self, grid: Grid) -> Field {
        Field::from_parts(grid, self.samples, self.spectrum)
    }

    fn linf(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `self + c (self - other)`.
    fn extrapolate(&self, other: &State, c: f64) -> State {
        State {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + c * (a - b)).collect(),
            spectrum: self.spectrum.iter().zip(&other.spectrum).map(|(a, b)| a + (a - b) * c).collect(),
        }
    }
}

/// Shared state of a run: grid, symbol, forcing spectrum and exponent.
struct Problem {
    grid: Grid,
    sigma: Vec<f64>,
    forcing: Vec<Complex64>,
    p: f64,
}

impl Problem {
    fn new(u0: &Field, f: &Field, p: f64, params: &OperatorParams) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::Domain(format!("p must exceed 1 (got {p})")));
        }
        u0.check_same_grid(f)?;
        let grid = u0.grid();
        Ok(Self {
            grid,
            sigma: symbol_multiplier(grid, params).values().to_vec(),
            forcing: f.spectrum().to_vec(),
            p,
        })
    }

    fn nonlinear_spectrum(&self, samples: &[f64]) -> Vec<Complex64> {
        let p = self.p;
        let n: Vec<f64> = samples.iter().map(|&v| abs_pow(v, p)).collect();
        forward(self.grid, &n)
    }

    /// One exponential Euler step; `None` if the result is not finite.
    fn euler(&self, u: &State, w: &StepWeights) -> Option<State> {
        let nl = self.nonlinear_spectrum(&u.samples);
        let spectrum: Vec<Complex64> = (0..u.spectrum.len())
            .map(|k| u.spectrum[k] * w.decay[k] + (nl[k] + self.forcing[k]) * w.phi[k])
            .collect();
        let samples = inverse_real(self.grid, &spectrum);
        if samples.iter().all(|v| v.is_finite()) {
            Some(State { samples, spectrum })
        } else {
            None
        }
    }

    fn euler_steps(&self, u: &State, w: &StepWeights, count: usize) -> Option<State> {
        let mut cur = self.euler(u, w)?;
        for _ in 1..count {
            cur = self.euler(&cur, w)?;
        }
        Some(cur)
    }

    /// Richardson tableau over `1, 2, ..., 2^{levels-1}` Euler sub-steps.
    /// Returns the extrapolated state and the two finest first-column entries.
    fn extrapolated(&self, u: &State, weights: &[StepWeights]) -> Option<(State, State, State)> {
        let levels = weights.len();
        let mut column: Vec<State> = Vec::with_capacity(levels);
        for (j, w) in weights.iter().enumerate() {
            column.push(self.euler_steps(u, w, 1 << j)?);
        }
        let coarse = column[levels.saturating_sub(2)].clone();
        let fine = column[levels - 1].clone();
        let mut row = column;
        for k in 1..levels {
            let c = 1.0 / ((1u64 << k) as f64 - 1.0);
            // walk downwards so row[j - 1] still holds the previous column
            for j in (k..levels).rev() {
                row[j] = row[j].extrapolate(&row[j - 1], c);
            }
        }
        let best = row.pop().expect("at least one level");
        Some((best, coarse, fine))
    }
}

fn weights_for(sigma: &[f64], dt: f64, levels: usize) -> Vec<StepWeights> {
    (0..levels).map(|j| StepWeights::new(sigma, dt / (1u64 << j) as f64)).collect()
}

/// `u_next = e^{-dt L} u + φ₁(dt) (|u|^p + f)`.
pub fn exponential_euler_step(u: &Field, f: &Field, p: f64, params: &OperatorParams, dt: f64) -> Result<Field> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be > 0 (got {dt})")));
    }
    if !u.is_finite() {
        return Err(Error::InvalidField("non-finite samples".into()));
    }
    let prob = Problem::new(u, f, p, params)?;
    let w = StepWeights::new(&prob.sigma, dt);
    prob.euler(&State::of(u), &w)
        .map(|s| s.into_field(prob.grid))
        .ok_or(Error::Overflow)
}

/// States on a time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .fold(0.0, |m, (a, b)| m.max(a.sup_distance(b)))
    }

    pub fn final_state(&self) -> &Field {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Fixed-step trajectory on `[0, t_end]` with `steps` uniform steps, each a
/// Richardson-extrapolated exponential Euler step over `levels` halvings.
/// `levels = 1` is plain exponential Euler (first order); each extra level
/// adds one order.
pub fn integrate_fixed(
    u0: &Field,
    f: &Field,
    p: f64,
    params: &OperatorParams,
    t_end: f64,
    steps: usize,
    levels: usize,
) -> Result<Trajectory> {
    if !(t_end > 0.0) || steps == 0 || levels == 0 {
        return Err(Error::Domain("need t_end > 0, steps >= 1 and levels >= 1".into()));
    }
    let prob = Problem::new(u0, f, p, params)?;
    let dt = t_end / steps as f64;
    let weights = weights_for(&prob.sigma, dt, levels);
    let mut cur = State::of(u0);
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    for k in 1..=steps {
        let (next, _, _) = prob.extrapolated(&cur, &weights).ok_or(Error::Overflow)?;
        cur = next;
        times.push(k as f64 * dt);
        states.push(cur.clone().into_field(prob.grid));
    }
    Ok(Trajectory { times, states })
}

/// Adaptive integration to `cfg.t_end`, recording norms at every accepted step.
pub fn integrate(u0: &Field, f: &Field, p: f64, params: &OperatorParams, cfg: &SolverConfig) -> Result<SolveOutcome> {
    integrate_observed(u0, f, p, params, cfg, |_, _| {})
}

/// As [`integrate`]; `observe` sees `(t, samples)` for the initial state and
/// every accepted step.
pub fn integrate_observed(
    u0: &Field,
    f: &Field,
    p: f64,
    params: &OperatorParams,
    cfg: &SolverConfig,
    mut observe: impl FnMut(f64, &[f64]),
) -> Result<SolveOutcome> {
    cfg.validate()?;
    if !u0.is_finite() || !f.is_finite() {
        return Err(Error::InvalidField("non-finite initial data or forcing".into()));
    }
    if u0.norm_linf() >= cfg.blowup_threshold {
        return Err(Error::Config("blowup_threshold must exceed the initial sup norm".into()));
    }
    let prob = Problem::new(u0, f, p, params)?;
    let grid = prob.grid;

    let mut t = 0.0;
    let mut dt = cfg.dt_init.min(cfg.t_end);
    let mut cur = State::of(u0);
    let mut series = vec![NormSample::of(0.0, u0)];
    observe(0.0, u0.samples());
    let mut weights: Option<Vec<StepWeights>> = None;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut resolution_lost_at = None;

    let termination = loop {
        if t >= cfg.t_end {
            break Termination::ReachedEnd;
        }
        if accepted + rejected >= cfg.max_steps {
            break Termination::StepLimit;
        }
        if dt < cfg.dt_min {
            break Termination::DtFloor;
        }
        let step = dt.min(cfg.t_end - t);
        if weights.as_ref().is_none_or(|w| w[0].dt != step) {
            weights = Some(weights_for(&prob.sigma, step, 2));
        }
        let w = weights.as_ref().expect("weights set above");
        let attempt = prob.extrapolated(&cur, w);
        let Some((next, coarse, fine)) = attempt else {
            rejected += 1;
            dt *= cfg.adapt_factor;
            continue;
        };
        let diff = coarse
            .samples
            .iter()
            .zip(&fine.samples)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = fine.linf().max(cur.linf());
        let err = if diff == 0.0 { 0.0 } else { diff / (cfg.step_tol * scale) };
        if !err.is_finite() || err > 1.0 {
            rejected += 1;
            let shrink = if err.is_finite() { 0.9 / err.sqrt() } else { 0.1 };
            dt = step * shrink.clamp(0.1, cfg.adapt_factor);
            continue;
        }
        accepted += 1;
        t = if step == cfg.t_end - t { cfg.t_end } else { t + step };
        cur = next;
        let field = Field::from_parts(grid, cur.samples.clone(), cur.spectrum.clone());
        let sample = NormSample::of(t, &field);
        series.push(sample);
        observe(t, &cur.samples);
        let grow = if err == 0.0 { 2.0 } else { (0.9 / err.sqrt()).clamp(cfg.adapt_factor, 2.0) };
        dt = (step * grow).min(cfg.dt_max);

        if sample.linf >= cfg.blowup_threshold {
            break Termination::Threshold;
        }
        let tail = field.spectral_tail_fraction();
        if tail > cfg.tail_tol {
            let lifespan = 1.0 / ((p - 1.0) * sample.linf.powf(p - 1.0));
            if lifespan <= cfg.commit_ratio * t {
                if resolution_lost_at.is_none() {
                    log::debug!(
                        "spectral tail {tail:.2e} at t={t:.6e} inside the terminal regime (linf {:.3e})",
                        sample.linf
                    );
                    resolution_lost_at = Some(t);
                }
            } else {
                break Termination::Unresolved { t, tail };
            }
        }
    };

    let (status, t_max_estimate) = classify_outcome(&series, termination, p, cfg);
    let t_star = match termination {
        Termination::Threshold | Termination::DtFloor => Some(t),
        _ => None,
    };
    let diagnostic = match termination {
        Termination::Unresolved { t, tail } => Some(format!(
            "grid resolution lost at t={t:.6e}: spectral tail fraction {tail:.3e} exceeds {:.1e}",
            cfg.tail_tol
        )),
        Termination::StepLimit => Some(format!("step limit {} reached at t={t:.6e}", cfg.max_steps)),
        Termination::ReachedEnd if status == Status::Indeterminate => Some(format!(
            "reached t_end={} without decay or saturation of the sup norm",
            cfg.t_end
        )),
        _ => None,
    };
    Ok(SolveOutcome {
        status,
        t_star,
        t_max_estimate,
        series,
        termination,
        resolution_lost_at,
        accepted_steps: accepted,
        rejected_steps: rejected,
        diagnostic,
    })
}

/// Least-squares line `y = α + β x`; returns `(α, β, se_β)`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let beta = sxy / sxx;
    let alpha = my - beta * mx;
    let se = if n > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - alpha - beta * a).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some((alpha, beta, se))
}

/// Minimum number of samples in the growth window for a lifespan fit.
pub const MIN_FIT_SAMPLES: usize = 8;

/// Fits `||u||∞ ≈ κ (T* - t)^{-1/(p-1)}` over the last decade of growth, as
/// the straight line `||u||∞^{-(p-1)} = c (T* - t)`; returns `T*`.
pub fn fit_blowup_time(series: &[NormSample], p: f64) -> Option<f64> {
    let last = series.last()?.linf;
    if !(last > 0.0) {
        return None;
    }
    let start = series
        .iter()
        .rposition(|s| s.linf < last / 10.0)
        .map_or(0, |i| i + 1);
    let window = &series[start..];
    if window.len() < MIN_FIT_SAMPLES {
        return None;
    }
    let x: Vec<f64> = window.iter().map(|s| s.t).collect();
    let y: Vec<f64> = window.iter().map(|s| s.linf.powf(-(p - 1.0))).collect();
    let (alpha, beta, _) = linear_fit(&x, &y)?;
    if !(beta < 0.0) {
        return None;
    }
    Some(-alpha / beta)
}

/// Log-log slope of `||u||∞` against `t` over the last decade in time.
fn late_slope(series: &[NormSample]) -> Option<f64> {
    let t_last = series.last()?.t;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|s| s.t >= t_last / 10.0 && s.t > 0.0 && s.linf > 0.0)
        .map(|s| (s.t.ln(), s.linf.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    linear_fit(&x, &y).map(|(_, b, _)| b)
}

/// Status and lifespan estimate of a recorded run.
pub fn classify_outcome(
    series: &[NormSample],
    termination: Termination,
    p: f64,
    cfg: &SolverConfig,
) -> (Status, Option<f64>) {
    let Some(last) = series.last() else {
        return (Status::Indeterminate, None);
    };
    match termination {
        Termination::Threshold | Termination::DtFloor => (Status::BlowUp, fit_blowup_time(series, p)),
        Termination::Unresolved { .. } | Termination::StepLimit => (Status::Indeterminate, None),
        Termination::ReachedEnd => {
            let first = series[0].linf;
            if !last.linf.is_finite() {
                return (Status::Indeterminate, None);
            }
            if last.linf < first {
                return (Status::Global, None);
            }
            match late_slope(series) {
                Some(slope) if slope <= cfg.saturation_slope => (Status::Global, None),
                _ => (Status::Indeterminate, None),
            }
        }
    }
}

/// Initial iterate of the Picard map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PicardStart {
    Zero,
    /// `e^{-tL} u₀`.
    Semigroup,
    Constant(f64),
}

#[derive(Debug, Clone)]
pub struct PicardResult {
    pub trajectory: Trajectory,
    pub iterations: usize,
    /// Sup distances between successive iterates.
    pub distances: Vec<f64>,
    /// Ratios of successive distances.
    pub ratios: Vec<f64>,
}

/// `δ = max(||u₀||∞, ||f||∞)`.
pub fn picard_delta(u0: &Field, f: &Field) -> f64 {
    u0.norm_linf().max(f.norm_linf())
}

/// Left side of the smallness condition `T + 2^p T δ^{p-1} ≤ 1`.
pub fn picard_smallness(t: f64, delta: f64, p: f64) -> f64 {
    t + 2f64.powf(p) * t * delta.powf(p - 1.0)
}

/// Lipschitz bound `2^{p-1} p T δ^{p-1}` of the Picard map on the ball of
/// radius `2δ`.
pub fn contraction_bound(t: f64, delta: f64, p: f64) -> f64 {
    2f64.powf(p - 1.0) * p * t * delta.powf(p - 1.0)
}

/// Fixed point of the Duhamel map on `[0, T]`, started from the semigroup
/// evolution of `u0`.
pub fn picard_small_time(
    u0: &Field,
    f: &Field,
    p: f64,
    params: &OperatorParams,
    t: f64,
    cfg: &SolverConfig,
) -> Result<PicardResult> {
    picard_from(u0, f, p, params, t, cfg, PicardStart::Semigroup)
}

/// Picard iteration with a chosen initial iterate. The nonlinearity is held
/// constant on each sub-interval at the mean of its endpoint values, and the
/// Duhamel integral is then exact through the φ₁ weight.
pub fn picard_from(
    u0: &Field,
    f: &Field,
    p: f64,
    params: &OperatorParams,
    t: f64,
    cfg: &SolverConfig,
    start: PicardStart,
) -> Result<PicardResult> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("Picard horizon must be > 0 (got {t})")));
    }
    let prob = Problem::new(u0, f, p, params)?;
    let grid = prob.grid;
    let delta = picard_delta(u0, f);
    let small = picard_smallness(t, delta, p);
    if small > 1.0 {
        log::warn!("Picard smallness condition fails: T + 2^p T δ^(p-1) = {small:.3e} > 1");
    }
    let m = cfg.picard_nodes;
    let dt = t / m as f64;
    let w = StepWeights::new(&prob.sigma, dt);
    let times: Vec<f64> = (0..=m).map(|k| k as f64 * dt).collect();

    let u0_state = State::of(u0);
    let mut iterate: Vec<Vec<f64>> = match start {
        PicardStart::Zero => vec![vec![0.0; grid.len()]; m + 1],
        PicardStart::Constant(c) => vec![vec![c; grid.len()]; m + 1],
        PicardStart::Semigroup => {
            let mut out = Vec::with_capacity(m + 1);
            let mut spec = u0_state.spectrum.clone();
            out.push(u0_state.samples.clone());
            for _ in 0..m {
                for (c, e) in spec.iter_mut().zip(&w.decay) {
                    *c *= e;
                }
                out.push(inverse_real(grid, &spec));
            }
            out
        }
    };

    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let mut above_one = 0usize;
    for it in 1..=cfg.picard_max_iter {
        let nl: Vec<Vec<f64>> = iterate
            .iter()
            .map(|v| v.iter().map(|&x| abs_pow(x, p)).collect())
            .collect();
        let mut next = Vec::with_capacity(m + 1);
        let mut spec = u0_state.spectrum.clone();
        next.push(u0_state.samples.clone());
        for k in 0..m {
            let avg: Vec<f64> = nl[k].iter().zip(&nl[k + 1]).map(|(a, b)| 0.5 * (a + b)).collect();
            let nhat = forward(grid, &avg);
            for j in 0..spec.len() {
                spec[j] = spec[j] * w.decay[j] + (nhat[j] + prob.forcing[j]) * w.phi[j];
            }
            next.push(inverse_real(grid, &spec));
        }
        let dist = next
            .iter()
            .zip(&iterate)
            .fold(0.0f64, |acc, (a, b)| {
                a.iter().zip(b).fold(acc, |m2, (x, y)| m2.max((x - y).abs()))
            });
        iterate = next;
        if !dist.is_finite() {
            return Err(Error::ContractionFailure { ratio: f64::INFINITY, iterations: it });
        }
        if let Some(&prev) = distances.last() {
            let ratio = if prev > 0.0 { dist / prev } else { 0.0 };
            ratios.push(ratio);
            if ratio >= 1.0 {
                above_one += 1;
                if above_one >= 3 {
                    return Err(Error::ContractionFailure { ratio, iterations: it });
                }
            } else {
                above_one = 0;
            }
        }
        distances.push(dist);
        if dist <= cfg.picard_tol {
            let states = iterate
                .into_iter()
                .map(|s| Field::new(grid, s))
                .collect::<Result<Vec<_>>>()?;
            return Ok(PicardResult {
                trajectory: Trajectory { times, states },
                iterations: it,
                distances,
                ratios,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.picard_max_iter,
        distance: distances.last().copied().unwrap_or(f64::NAN),
    })
}

/// Largest pairwise sup distance between the Picard limits reached from the
/// zero field, the semigroup evolution and the constant `δ`.
pub fn uniqueness_probe(
    u0: &Field,
    f: &Field,
    p: f64,
    params: &OperatorParams,
    t: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let delta = picard_delta(u0, f);
    let starts = [PicardStart::Zero, PicardStart::Semigroup, PicardStart::Constant(delta)];
    let limits = starts
        .iter()
        .map(|&s| picard_from(u0, f, p, params, t, cfg, s).map(|r| r.trajectory))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    for i in 0..limits.len() {
        for j in i + 1..limits.len() {
            worst = worst.max(limits[i].sup_distance(&limits[j]));
        }
    }
    Ok(worst)
}
