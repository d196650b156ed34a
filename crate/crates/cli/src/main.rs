use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use fujita_core::capacity::{nonexistence_report, scaling_slopes};
use fujita_core::estimates::{decay_fit, geometric_times, run_inequality_suite};
use fujita_core::exponents::{forcing_critical_exponent, ExponentReport};
use fujita_core::harness::csv::{fmt_f64, fmt_opt, Table};
use fujita_core::harness::runs::{prepare_data, runs_table, series_csv};
use fujita_core::harness::{emit_csv, exit_code, parse_config, run_single, run_sweep, ExperimentConfig, Mode};
use fujita_core::Error;

const THREADS_ENV: &str = "FUJITA_LAB_THREADS";

#[derive(Parser)]
#[command(name = "fujita-lab", version, about = "Blow-up and global existence experiments for u_t + Lu = |u|^p + f")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (defaults to the config's `output`, then `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; FUJITA_LAB_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Critical exponents and small-data parameters.
    Exponents {
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
    },
    /// One adaptive run, written to series.csv.
    Simulate,
    /// One run per p in the sweep list, written to sweep.csv.
    Sweep,
    /// Capacity integrals over the radius list.
    Capacity,
    /// The three-column nonexistence table.
    Nonexistence,
    /// Fitted semigroup decay rate.
    Decay,
    /// Randomized inequality suite.
    Verify {
        /// Draws per inequality.
        #[arg(long)]
        cases: Option<usize>,
    },
}

/// Failure with the exit status it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<Error>() {
            Some(
                Error::Config(_)
                | Error::Domain(_)
                | Error::ParameterDomain(_)
                | Error::InvalidParams(_)
                | Error::InvalidGrid(_)
                | Error::UnsupportedDimension(_),
            ) => 2,
            _ => 1,
        };
        Self { code, err }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

fn config_failure(err: anyhow::Error) -> Failure {
    Failure { code: 2, err }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| config_failure(anyhow!("{THREADS_ENV}: expected a thread count, got '{v}'"))),
        Err(_) => Ok(flag),
    }
}

fn load(common: &Common, mode: Mode) -> Result<ExperimentConfig, Failure> {
    let path = common.config.as_ref().ok_or_else(|| config_failure(anyhow!("--config FILE is required")))?;
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(config_failure)?;
    let cfg = parse_config(&text).map_err(|e| config_failure(anyhow!("{}:\n{e}", path.display())))?;
    if cfg.experiment.mode != mode {
        log::warn!("config mode is {} but running {}", cfg.experiment.mode.as_str(), mode.as_str());
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: Option<&ExperimentConfig>) -> Result<PathBuf, Failure> {
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.experiment.output.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    if let Some(n) = thread_count(cli.common.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    let common = &cli.common;
    match cli.command {
        Command::Exponents { d, s, p } => exponents(common, d, s, p),
        Command::Simulate => simulate(common),
        Command::Sweep => sweep(common),
        Command::Capacity => capacity(common),
        Command::Nonexistence => nonexistence(common),
        Command::Decay => decay(common),
        Command::Verify { cases } => verify(common, cases),
    }
}

fn exponents(common: &Common, d: Option<usize>, s: Option<f64>, p: Option<f64>) -> Result<u8, Failure> {
    let cfg = match &common.config {
        Some(_) => Some(load(common, Mode::Exponents)?),
        None => None,
    };
    let d = d.or(cfg.as_ref().map(|c| c.grid.dim())).ok_or_else(|| config_failure(anyhow!("--d is required")))?;
    let s = s.or(cfg.as_ref().map(|c| c.operator.s())).ok_or_else(|| config_failure(anyhow!("--s is required")))?;
    let p = p.or(cfg.as_ref().and_then(|c| c.p));
    let report = ExponentReport::new(d, s, p)?;
    print!("{}", report.to_text());
    println!();
    let csv = format!("{}\n{}\n", ExponentReport::csv_header(), report.csv_row());
    print!("{csv}");
    if common.out.is_some() || cfg.as_ref().is_some_and(|c| c.experiment.output.is_some()) {
        let dir = out_dir(common, cfg.as_ref())?;
        write(&dir.join("exponents.csv"), &csv)?;
    }
    Ok(0)
}

fn simulate(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common, Mode::Simulate)?;
    let dir = out_dir(common, Some(&cfg))?;
    let rec = run_single(&cfg)?;
    write(&dir.join("series.csv"), &series_csv(&rec))?;
    let recs = [rec];
    runs_table(&recs).write(&dir.join("runs.csv"))?;
    let s = &recs[0].summary;
    println!(
        "run {} p={} status={} t_star={} t_max_estimate={} horizon={}",
        recs[0].run_id,
        recs[0].p,
        s.status,
        fmt_opt(s.t_star),
        fmt_opt(s.t_max_estimate),
        fmt_f64(s.horizon)
    );
    report_diagnostics(&recs);
    Ok(exit_code(&recs) as u8)
}

fn report_diagnostics(recs: &[fujita_core::harness::RunRecord]) {
    for r in recs {
        let s = &r.summary;
        if let Some(d) = &s.diagnostic {
            eprintln!("p={}: {} ({d})", r.p, s.status);
        }
        if s.unexpected() {
            eprintln!("p={}: expected {} but classified {}", r.p, s.expected.expect("gated"), s.status);
        }
        if s.slow_regime {
            eprintln!("p={}: slow regime, not gated", r.p);
        }
    }
}

fn sweep(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common, Mode::Sweep)?;
    if cfg.experiment.sweep.is_empty() {
        return Err(config_failure(anyhow!("sweep list is empty")));
    }
    let dir = out_dir(common, Some(&cfg))?;
    let recs = run_sweep(&cfg)?;
    emit_csv(&recs, &dir.join("sweep.csv"))?;
    runs_table(&recs).write(&dir.join("runs.csv"))?;
    for r in &recs {
        println!("p={} status={} t_star={}", r.p, r.summary.status, fmt_opt(r.summary.t_star));
    }
    report_diagnostics(&recs);
    Ok(exit_code(&recs) as u8)
}

fn capacity(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common, Mode::Capacity)?;
    let dir = out_dir(common, Some(&cfg))?;
    let p = cfg.p()?;
    let fit = scaling_slopes(cfg.grid.dim(), p, &cfg.operator, &cfg.experiment.radii)?;
    let mut t = Table::new(&["r", "t", "i1", "i2", "slope_i1_r", "slope_i1_t", "slope_i2_r"]);
    for r in &fit.reports {
        t.push(vec![
            fmt_f64(r.r),
            fmt_f64(r.t),
            fmt_f64(r.i1),
            fmt_f64(r.i2),
            fmt_opt(r.slope_i1_r),
            fmt_opt(r.slope_i1_t),
            fmt_opt(r.slope_i2_r),
        ]);
    }
    t.write(&dir.join("capacity.csv"))?;
    println!(
        "slope I1/T = {:.5} +- {:.1e}, slope I2/T = {:.5} +- {:.1e}, expected {:.5}",
        fit.i1.slope, fit.i1.std_err, fit.i2.slope, fit.i2.std_err, fit.expected
    );
    Ok(0)
}

fn nonexistence(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common, Mode::Nonexistence)?;
    let dir = out_dir(common, Some(&cfg))?;
    let p = cfg.p()?;
    let (u0, f) = prepare_data(&cfg, p, cfg.grid)?;
    let rep = nonexistence_report(&u0, &f, p, &cfg.operator, &cfg.experiment.radii)?;
    let mut t = Table::new(&["r", "forcing_term", "data_term", "capacity_term"]);
    for r in &rep.rows {
        t.push(vec![fmt_f64(r.r), fmt_f64(r.forcing_term), fmt_f64(r.data_term), fmt_f64(r.capacity_term)]);
    }
    t.write(&dir.join("nonexistence.csv"))?;
    println!("contradiction_trend={}", rep.contradiction_trend);
    let expected = forcing_critical_exponent(cfg.grid.dim(), cfg.operator.s()).is_ok_and(|pc| p < pc);
    if expected && !rep.contradiction_trend {
        eprintln!("p < p_crit but the table shows no contradiction trend");
        return Ok(1);
    }
    Ok(0)
}

fn decay(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common, Mode::Decay)?;
    let dir = out_dir(common, Some(&cfg))?;
    let e = &cfg.experiment;
    let probe = cfg.ic.sample(cfg.grid)?;
    let times = geometric_times(e.t_min, e.t_max, e.t_count);
    let fit = decay_fit(&cfg.operator, e.q, e.r, &probe, &times)?;
    let mut t = Table::new(&["q", "r", "t_start", "t_end", "fitted_slope", "theory_slope", "rel_error", "c_fit"]);
    t.push(vec![
        fmt_f64(fit.q),
        fmt_f64(fit.r),
        fmt_f64(fit.t_window.0),
        fmt_f64(fit.t_window.1),
        fmt_f64(fit.fitted_slope),
        fmt_f64(fit.theory_slope),
        fmt_f64(fit.rel_error),
        fmt_f64(fit.c_fit),
    ]);
    t.write(&dir.join("decay.csv"))?;
    println!(
        "fitted slope {:.5}, theory {:.5}, relative error {:.2e}",
        fit.fitted_slope, fit.theory_slope, fit.rel_error
    );
    Ok(0)
}

fn verify(common: &Common, cases: Option<usize>) -> Result<u8, Failure> {
    let cfg = match &common.config {
        Some(_) => Some(load(common, Mode::Verify)?),
        None => None,
    };
    let cases = cases.or(cfg.as_ref().map(|c| c.experiment.cases)).unwrap_or(100);
    let rep = run_inequality_suite(common.seed, cases)?;
    let mut t = Table::new(&["check", "cases", "violations", "worst"]);
    for (name, s) in rep.sections() {
        println!("{name:<14} {:>5} cases  {:>3} violations  worst {:.3e} tol", s.cases, s.violations, s.worst);
        t.push(vec![name.to_string(), s.cases.to_string(), s.violations.to_string(), fmt_f64(s.worst)]);
    }
    if common.out.is_some() || cfg.as_ref().is_some_and(|c| c.experiment.output.is_some()) {
        let dir = out_dir(common, cfg.as_ref())?;
        t.write(&dir.join("verify.csv"))?;
    }
    Ok(if rep.passed() { 0 } else { 1 })
}
