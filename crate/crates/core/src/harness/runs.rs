//! Single runs, sweeps over `p`, and their records.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::exponents::{forcing_critical_exponent, fujita_exponent, weissler_exponent};
use crate::grid::{Field, Grid};
use crate::solver::{integrate, NormSample, SolveOutcome, Status, Termination};

use super::config::{ExperimentConfig, Expectation};
use super::csv::{fmt_f64, fmt_opt, Table};

/// Hex SHA-256 of the canonical config text, truncated to 128 bits.
pub fn run_id(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.canonical().as_bytes());
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Outcome of the same run on a box of twice the length.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCheck {
    pub box_length: f64,
    pub status: Status,
    pub t_star: Option<f64>,
    pub rel_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub status: Status,
    pub t_star: Option<f64>,
    pub t_max_estimate: Option<f64>,
    pub initial_linf: f64,
    pub final_linf: f64,
    pub horizon: f64,
    pub termination: Termination,
    pub resolution_lost_at: Option<f64>,
    pub expected: Option<Status>,
    pub slow_regime: bool,
    pub box_check: Option<BoxCheck>,
    pub diagnostic: Option<String>,
}

impl RunSummary {
    /// Counts toward pass/fail gating.
    pub fn gated(&self) -> bool {
        self.expected.is_some() && !self.slow_regime
    }

    pub fn unexpected(&self) -> bool {
        self.gated() && self.expected != Some(self.status)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    pub config: String,
    pub p: f64,
    pub p_f: f64,
    pub p_crit: Option<f64>,
    pub summary: RunSummary,
    pub series: Vec<NormSample>,
    pub wall_time: f64,
}

/// Initial data and forcing, with `amp=small` resolved against the
/// small-data norms `||u0||_{p_c^s}` and `||f||_k`.
pub fn prepare_data(cfg: &ExperimentConfig, p: f64, grid: Grid) -> Result<(Field, Field)> {
    let d = grid.dim();
    let s = cfg.operator.s();
    let target = cfg.experiment.small_norm;
    let forced = !cfg.forcing.is_zero();
    let split = if forced { 0.5 * target } else { target };
    let p_c = weissler_exponent(d, s, p)?;
    let u0 = cfg.ic.sample_scaled(grid, p_c, split)?;
    let f = cfg.forcing.sample_scaled(grid, p_c / p, split)?;
    Ok((u0, f))
}

fn small_data_measure(u0: &Field, f: &Field, d: usize, s: f64, p: f64) -> Result<f64> {
    let p_c = weissler_exponent(d, s, p)?;
    let mut m = u0.norm_lq(p_c);
    if f.norm_linf() > 0.0 {
        m += f.norm_lq(p_c / p);
    }
    Ok(m)
}

/// Classification predicted by the dichotomies, if any applies.
pub fn expected_status(cfg: &ExperimentConfig, p: f64, u0: &Field, f: &Field) -> Result<Option<Status>> {
    match cfg.expect {
        Expectation::BlowUp => return Ok(Some(Status::BlowUp)),
        Expectation::Global => return Ok(Some(Status::Global)),
        Expectation::None => return Ok(None),
        Expectation::Auto => {}
    }
    let grid = u0.grid();
    let (d, s) = (grid.dim(), cfg.operator.s());
    let small = small_data_measure(u0, f, d, s, p)? <= cfg.experiment.small_norm * (1.0 + 1e-9);
    if f.norm_linf() == 0.0 {
        let p_f = fujita_exponent(d, s)?;
        let mass = u0.integral();
        let zero_mass = mass.abs() <= 1e-12 * u0.norm_l1().max(f64::MIN_POSITIVE);
        if p < p_f && u0.norm_linf() > 0.0 && (mass > 0.0 || zero_mass) {
            return Ok(Some(Status::BlowUp));
        }
        if p > p_f && small {
            return Ok(Some(Status::Global));
        }
        return Ok(None);
    }
    let Ok(p_crit) = forcing_critical_exponent(d, s) else {
        return Ok(None);
    };
    if p < p_crit && f.integral() > 0.0 {
        return Ok(Some(Status::BlowUp));
    }
    if p > p_crit && small {
        return Ok(Some(Status::Global));
    }
    Ok(None)
}

fn solve_on(cfg: &ExperimentConfig, p: f64, grid: Grid) -> Result<(Field, Field, SolveOutcome)> {
    let (u0, f) = prepare_data(cfg, p, grid)?;
    let out = integrate(&u0, &f, p, &cfg.operator, &cfg.solver)?;
    Ok((u0, f, out))
}

/// Runs one configuration; `cfg.p` must be set.
pub fn run_single(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let p = cfg.p()?;
    let grid = cfg.grid;
    let (d, s) = (grid.dim(), cfg.operator.s());
    let p_f = fujita_exponent(d, s)?;
    let p_crit = forcing_critical_exponent(d, s).ok();
    let (u0, f, out) = solve_on(cfg, p, grid)?;
    let expected = expected_status(cfg, p, &u0, &f)?;
    let threshold = if cfg.forcing.is_zero() { Some(p_f) } else { p_crit };
    let slow_regime = threshold.is_some_and(|c| (p - c).abs() < cfg.experiment.slow_band);

    let mut status = out.status;
    let mut diagnostic = out.diagnostic.clone();
    let mut box_check = None;
    if cfg.experiment.box_check && status == Status::BlowUp {
        let big = Grid::new(d, 2 * grid.n(), 2.0 * grid.box_length())?;
        let (_, _, bo) = solve_on(cfg, p, big)?;
        let t_small = out.t_star.unwrap_or(out.series.last().map_or(0.0, |v| v.t));
        let rel_change = match (bo.status, bo.t_star) {
            (Status::BlowUp, Some(tb)) => (tb - t_small).abs() / t_small,
            _ => f64::INFINITY,
        };
        if rel_change > cfg.experiment.box_tol {
            status = Status::Indeterminate;
            diagnostic = Some(format!(
                "box dependence: t_star {} at L={} but {} ({:?}) at L={}",
                fmt_f64(t_small),
                grid.box_length(),
                fmt_opt(bo.t_star),
                bo.status,
                big.box_length()
            ));
        }
        box_check = Some(BoxCheck { box_length: big.box_length(), status: bo.status, t_star: bo.t_star, rel_change });
    }
    if status == Status::Indeterminate && diagnostic.is_none() {
        diagnostic = Some(format!("termination {:?}", out.termination));
    }
    let summary = RunSummary {
        status,
        t_star: out.t_star,
        t_max_estimate: out.t_max_estimate,
        initial_linf: u0.norm_linf(),
        final_linf: out.final_linf(),
        horizon: out.series.last().map_or(0.0, |v| v.t),
        termination: out.termination,
        resolution_lost_at: out.resolution_lost_at,
        expected,
        slow_regime,
        box_check,
        diagnostic,
    };
    Ok(RunRecord {
        run_id: run_id(cfg),
        config: cfg.canonical(),
        p,
        p_f,
        p_crit,
        summary,
        series: out.series,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// One run per entry of the sweep list, in list order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.experiment
        .sweep
        .par_iter()
        .map(|&p| {
            let rec = run_single(&cfg.with_p(p))?;
            log::info!(
                "p={} status={} t_star={} wall={:.1}s",
                p,
                rec.summary.status,
                fmt_opt(rec.summary.t_star),
                rec.wall_time
            );
            Ok(rec)
        })
        .collect()
}

/// Process exit status for a set of runs: 3 if any is indeterminate, 1 if a
/// gated run disagrees with its expected classification, else 0.
pub fn exit_code(records: &[RunRecord]) -> i32 {
    if records.iter().any(|r| r.summary.status == Status::Indeterminate) {
        3
    } else if records.iter().any(|r| r.summary.unexpected()) {
        1
    } else {
        0
    }
}

pub const SWEEP_COLUMNS: &[&str] = &["p", "p_F", "p_crit", "status", "t_star", "t_max_estimate", "final_linf"];

pub fn sweep_table(records: &[RunRecord]) -> Table {
    let mut t = Table::new(SWEEP_COLUMNS);
    for r in records {
        t.push(vec![
            fmt_f64(r.p),
            fmt_f64(r.p_f),
            fmt_opt(r.p_crit),
            r.summary.status.as_str().to_string(),
            fmt_opt(r.summary.t_star),
            fmt_opt(r.summary.t_max_estimate),
            fmt_f64(r.summary.final_linf),
        ]);
    }
    t
}

/// Writes the sweep table (header plus one row per record, submission order).
pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    sweep_table(records).write(path)
}

/// Per-run bookkeeping that the sweep table leaves out.
pub fn runs_table(records: &[RunRecord]) -> Table {
    let mut t = Table::new(&[
        "run_id",
        "p",
        "status",
        "expected",
        "slow_regime",
        "horizon",
        "initial_linf",
        "resolution_lost_at",
        "box_check_t_star",
        "diagnostic",
    ]);
    for r in records {
        let s = &r.summary;
        t.push(vec![
            r.run_id.clone(),
            fmt_f64(r.p),
            s.status.as_str().to_string(),
            s.expected.map(|e| e.as_str().to_string()).unwrap_or_default(),
            s.slow_regime.to_string(),
            fmt_f64(s.horizon),
            fmt_f64(s.initial_linf),
            fmt_opt(s.resolution_lost_at),
            s.box_check.as_ref().map(|b| fmt_opt(b.t_star)).unwrap_or_default(),
            s.diagnostic.clone().unwrap_or_default(),
        ]);
    }
    t
}

/// Norm series followed by the `status,t_star,t_max_estimate` summary.
pub fn series_csv(record: &RunRecord) -> String {
    let mut t = Table::new(&["t", "l1", "l2", "linf", "mass"]);
    for v in &record.series {
        t.push(vec![fmt_f64(v.t), fmt_f64(v.l1), fmt_f64(v.l2), fmt_f64(v.linf), fmt_f64(v.mass)]);
    }
    let mut out = t.render();
    out.push_str("status,t_star,t_max_estimate\n");
    out.push_str(&format!(
        "{},{},{}\n",
        record.summary.status.as_str(),
        fmt_opt(record.summary.t_star),
        fmt_opt(record.summary.t_max_estimate)
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    const ODE: &str = "\
[grid]
d = 1
n = 16
box_length = 10
[operator]
a = 1
b = 1
s = 0.5
[problem]
p = 2
ic = constant amp=1
[solver]
t_end = 2
[experiment]
mode = simulate
";

    #[test]
    fn ode_run_is_an_expected_blowup_free_record() {
        let cfg = parse_config(ODE).unwrap();
        let rec = run_single(&cfg).unwrap();
        assert_eq!(rec.summary.status, Status::BlowUp);
        assert!((rec.summary.t_star.unwrap() - 1.0).abs() < 0.02);
        // p = 2 equals p_F here, so no expectation beyond the slow flag.
        assert!(rec.summary.slow_regime);
        assert_eq!(exit_code(&[rec.clone()]), 0);
        let text = series_csv(&rec);
        assert!(text.lines().next().unwrap() == "t,l1,l2,linf,mass");
        assert!(text.lines().rev().nth(1).unwrap() == "status,t_star,t_max_estimate");
    }

    #[test]
    fn run_id_is_deterministic_and_sensitive() {
        let a = parse_config(ODE).unwrap();
        let b = parse_config(&format!("# comment\n{ODE}")).unwrap();
        assert_eq!(run_id(&a), run_id(&b));
        assert_eq!(run_id(&a).len(), 32);
        assert_ne!(run_id(&a), run_id(&a.with_p(2.5)));
    }

    #[test]
    fn sweep_keeps_submission_order() {
        let text = ODE.replace("mode = simulate", "mode = sweep\nsweep = 3, 2, 2.5");
        let cfg = parse_config(&text).unwrap();
        let recs = run_sweep(&cfg).unwrap();
        let ps: Vec<f64> = recs.iter().map(|r| r.p).collect();
        assert_eq!(ps, vec![3.0, 2.0, 2.5]);
        assert_eq!(sweep_table(&recs).render().lines().count(), 4);
    }

    #[test]
    fn exit_codes() {
        let cfg = parse_config(ODE).unwrap();
        let mut rec = run_single(&cfg).unwrap();
        rec.summary.slow_regime = false;
        rec.summary.expected = Some(Status::Global);
        assert_eq!(exit_code(&[rec.clone()]), 1);
        rec.summary.status = Status::Indeterminate;
        assert_eq!(exit_code(&[rec]), 3);
    }
}
