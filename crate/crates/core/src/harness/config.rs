//! Experiment configuration: `[section]` headers, `key = value` lines and `#`
//! comments. Family values are written inline, e.g.
//! `ic = gaussian amp=0.1 width=5`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operator::OperatorParams;
use crate::solver::SolverConfig;

use super::csv::fmt_f64;
use super::families::FamilySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Simulate,
    Sweep,
    Capacity,
    Decay,
    Exponents,
    Nonexistence,
    Verify,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "simulate" => Mode::Simulate,
            "sweep" => Mode::Sweep,
            "capacity" => Mode::Capacity,
            "decay" => Mode::Decay,
            "exponents" => Mode::Exponents,
            "nonexistence" => Mode::Nonexistence,
            "verify" => Mode::Verify,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Capacity => "capacity",
            Mode::Decay => "decay",
            Mode::Exponents => "exponents",
            Mode::Nonexistence => "nonexistence",
            Mode::Verify => "verify",
        }
    }
}

/// Expected classification override in `[problem]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Auto,
    BlowUp,
    Global,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub mode: Mode,
    pub sweep: Vec<f64>,
    pub output: Option<String>,
    pub radii: Vec<f64>,
    pub q: f64,
    pub r: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    pub cases: usize,
    /// Runs with `|p - p_F| <` this are flagged slow and not gated.
    pub slow_band: f64,
    /// Re-run blow-up verdicts on a box twice as large (same spacing).
    pub box_check: bool,
    /// Largest relative change of `t_star` the doubled box may show.
    pub box_tol: f64,
    /// Norm bound defining "small data".
    pub small_norm: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            mode: Mode::Simulate,
            sweep: Vec::new(),
            output: None,
            radii: (8..=12).map(|k| 2f64.powi(k)).collect(),
            q: 1.0,
            r: f64::INFINITY,
            t_min: 10.0,
            t_max: 1000.0,
            t_count: 12,
            cases: 100,
            slow_band: 0.05,
            box_check: false,
            box_tol: 0.05,
            small_norm: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: Grid,
    pub operator: OperatorParams,
    pub p: Option<f64>,
    pub ic: FamilySpec,
    pub forcing: FamilySpec,
    pub expect: Expectation,
    pub solver: SolverConfig,
    pub experiment: ExperimentSection,
}

/// Errors with the line they refer to (0 when not tied to a line).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<(usize, String)>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (line, msg)) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            if *line > 0 {
                write!(f, "line {line}: {msg}")?;
            } else {
                write!(f, "{msg}")?;
            }
        }
        Ok(())
    }
}

impl From<ConfigErrors> for Error {
    fn from(e: ConfigErrors) -> Self {
        Error::Config(e.to_string())
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["d", "n", "box_length"]),
    ("operator", &["a", "b", "s"]),
    ("problem", &["p", "ic", "forcing", "f", "expect"]),
    ("forcing", &["family", "amp", "center", "width", "sep", "radius"]),
    (
        "solver",
        &[
            "dt_init",
            "dt_min",
            "dt_max",
            "t_end",
            "blowup_threshold",
            "picard_tol",
            "picard_max_iter",
            "picard_nodes",
            "adapt_factor",
            "step_tol",
            "tail_tol",
            "commit_ratio",
            "saturation_slope",
            "max_steps",
        ],
    ),
    (
        "experiment",
        &[
            "mode",
            "sweep",
            "output",
            "radii",
            "q",
            "r",
            "t_min",
            "t_max",
            "t_count",
            "cases",
            "slow_band",
            "box_check",
            "box_tol",
            "small_norm",
        ],
    ),
];

struct Entry {
    line: usize,
    value: String,
}

type Raw = BTreeMap<String, BTreeMap<String, Entry>>;

fn lex(text: &str, errors: &mut Vec<(usize, String)>) -> Raw {
    let mut raw: Raw = BTreeMap::new();
    let mut section: Option<String> = None;
    for (idx, line) in text.lines().enumerate() {
        let no = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                errors.push((no, format!("malformed section header '{content}'")));
                continue;
            };
            let name = name.trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                errors.push((no, format!("unknown section [{name}]")));
                section = None;
                continue;
            }
            if raw.contains_key(name) {
                errors.push((no, format!("duplicate section [{name}]")));
            }
            raw.entry(name.to_string()).or_default();
            section = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push((no, format!("expected 'key = value', got '{content}'")));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        let Some(sec) = section.as_ref() else {
            errors.push((no, format!("key '{key}' outside any section")));
            continue;
        };
        let allowed = SECTIONS.iter().find(|(s, _)| s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            errors.push((no, format!("unknown key '{key}' in [{sec}]")));
            continue;
        }
        let table = raw.entry(sec.clone()).or_default();
        if table.contains_key(key) {
            errors.push((no, format!("duplicate key '{key}' in [{sec}]")));
            continue;
        }
        table.insert(key.to_string(), Entry { line: no, value: value.to_string() });
    }
    raw
}

struct Reader<'a> {
    raw: &'a Raw,
    errors: Vec<(usize, String)>,
}

impl Reader<'_> {
    fn entry(&self, sec: &str, key: &str) -> Option<&Entry> {
        self.raw.get(sec).and_then(|t| t.get(key))
    }

    fn has_section(&self, sec: &str) -> bool {
        self.raw.contains_key(sec)
    }

    fn parse_num<T: std::str::FromStr>(&mut self, sec: &str, key: &str) -> Option<T> {
        let e = self.entry(sec, key)?;
        match e.value.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                let line = e.line;
                let msg = format!("[{sec}] {key}: cannot parse '{}'", e.value);
                self.errors.push((line, msg));
                None
            }
        }
    }

    fn require<T: std::str::FromStr>(&mut self, sec: &str, key: &str) -> Option<T> {
        if self.entry(sec, key).is_none() {
            self.errors.push((0, format!("missing required key '{key}' in [{sec}]")));
            return None;
        }
        self.parse_num(sec, key)
    }

    fn line(&self, sec: &str, key: &str) -> usize {
        self.entry(sec, key).map_or(0, |e| e.line)
    }

    fn list(&mut self, sec: &str, key: &str) -> Option<Vec<f64>> {
        let e = self.entry(sec, key)?;
        let line = e.line;
        let mut out = Vec::new();
        for item in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.parse::<f64>() {
                Ok(v) => out.push(v),
                Err(_) => {
                    self.errors.push((line, format!("[{sec}] {key}: cannot parse list item '{item}'")));
                    return None;
                }
            }
        }
        Some(out)
    }
}

/// Parses and validates a configuration, collecting every error found.
pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let raw = lex(text, &mut errors);
    let mut rd = Reader { raw: &raw, errors };

    let mut exp = ExperimentSection::default();
    if !rd.has_section("experiment") {
        rd.errors.push((0, "missing section [experiment]".into()));
    }
    match rd.entry("experiment", "mode").map(|e| (e.line, e.value.clone())) {
        Some((line, v)) => match Mode::parse(&v) {
            Some(m) => exp.mode = m,
            None => rd.errors.push((line, format!("unknown mode '{v}'"))),
        },
        None => rd.errors.push((0, "missing required key 'mode' in [experiment]".into())),
    }
    let mode = exp.mode;

    let needs_grid = !matches!(mode, Mode::Exponents | Mode::Verify);
    let needs_problem = matches!(mode, Mode::Simulate | Mode::Sweep | Mode::Nonexistence);
    for (sec, needed) in [
        ("grid", needs_grid || mode == Mode::Exponents),
        ("operator", mode != Mode::Verify),
        ("problem", needs_problem || matches!(mode, Mode::Capacity | Mode::Decay)),
    ] {
        if needed && !rd.has_section(sec) {
            rd.errors.push((0, format!("mode {} requires section [{sec}]", mode.as_str())));
        }
    }

    // grid
    let d: usize = if mode == Mode::Verify { 1 } else { rd.require("grid", "d").unwrap_or(1) };
    let (n, box_length) = if needs_grid && mode != Mode::Capacity {
        (rd.require::<usize>("grid", "n").unwrap_or(16), rd.require::<f64>("grid", "box_length").unwrap_or(1.0))
    } else {
        (rd.parse_num("grid", "n").unwrap_or(16), rd.parse_num("grid", "box_length").unwrap_or(1.0))
    };
    let grid = match Grid::new(d, n, box_length) {
        Ok(g) => Some(g),
        Err(e) => {
            rd.errors.push((rd.line("grid", "n").max(rd.line("grid", "d")), e.to_string()));
            None
        }
    };

    // operator
    let op_default = if mode == Mode::Verify { Some(1.0) } else { None };
    let op_num = |rd: &mut Reader, key: &str| match op_default {
        Some(v) => rd.parse_num("operator", key).unwrap_or(v),
        None => rd.require("operator", key).unwrap_or(f64::NAN),
    };
    let a = op_num(&mut rd, "a");
    let b = op_num(&mut rd, "b");
    let s = if mode == Mode::Verify { rd.parse_num("operator", "s").unwrap_or(0.5) } else { rd.require("operator", "s").unwrap_or(f64::NAN) };
    let operator = if a.is_nan() || b.is_nan() || s.is_nan() {
        None
    } else {
        match OperatorParams::new(a, b, s) {
            Ok(o) => Some(o),
            Err(_) if !(s > 0.0 && s < 1.0) => {
                rd.errors.push((rd.line("operator", "s"), format!("s must lie in (0,1) (got {s})")));
                None
            }
            Err(e) => {
                rd.errors.push((rd.line("operator", "a"), e.to_string()));
                None
            }
        }
    };

    // problem
    let p: Option<f64> = rd.parse_num("problem", "p");
    if let Some(pv) = p {
        if !(pv > 1.0) {
            rd.errors.push((rd.line("problem", "p"), format!("p must exceed 1 (got {pv})")));
        }
    }
    let p_required = matches!(mode, Mode::Simulate | Mode::Nonexistence | Mode::Capacity);
    if p_required && p.is_none() && rd.entry("problem", "p").is_none() {
        rd.errors.push((0, format!("mode {} requires key 'p' in [problem]", mode.as_str())));
    }

    let family = |rd: &mut Reader, key: &str| -> Option<FamilySpec> {
        let e = rd.entry("problem", key)?;
        let line = e.line;
        match FamilySpec::parse(&e.value) {
            Ok(f) => Some(f),
            Err(msg) => {
                rd.errors.push((line, msg));
                None
            }
        }
    };
    let ic = family(&mut rd, "ic");
    if ic.is_none() && rd.entry("problem", "ic").is_none() && matches!(mode, Mode::Simulate | Mode::Sweep | Mode::Decay | Mode::Nonexistence) {
        rd.errors.push((0, format!("mode {} requires key 'ic' in [problem]", mode.as_str())));
    }
    if rd.entry("problem", "forcing").is_some() && rd.entry("problem", "f").is_some() {
        rd.errors.push((rd.line("problem", "f"), "give either 'forcing' or 'f', not both".into()));
    }
    let inline_forcing = family(&mut rd, "forcing").or_else(|| family(&mut rd, "f"));
    let section_forcing = if rd.has_section("forcing") {
        if inline_forcing.is_some() {
            rd.errors.push((0, "forcing given both inline and as a [forcing] section".into()));
        }
        let table = &raw["forcing"];
        let text = match table.get("family") {
            Some(e) => {
                let mut t = e.value.clone();
                for (k, v) in table.iter().filter(|(k, _)| k.as_str() != "family") {
                    t.push_str(&format!(" {k}={}", v.value));
                }
                Some(t)
            }
            None => {
                rd.errors.push((0, "missing required key 'family' in [forcing]".into()));
                None
            }
        };
        text.and_then(|t| match FamilySpec::parse(&t) {
            Ok(f) => Some(f),
            Err(msg) => {
                rd.errors.push((rd.line("forcing", "family"), msg));
                None
            }
        })
    } else {
        None
    };
    let forcing = inline_forcing.or(section_forcing);
    if mode == Mode::Nonexistence && forcing.as_ref().is_none_or(|f| f.is_zero()) {
        rd.errors.push((
            0,
            "mode nonexistence requires a forcing: missing section [forcing] (or 'forcing' in [problem])".into(),
        ));
    }
    let expect = match rd.entry("problem", "expect").map(|e| (e.line, e.value.clone())) {
        None => Expectation::Auto,
        Some((line, v)) => match v.as_str() {
            "auto" => Expectation::Auto,
            "blowup" => Expectation::BlowUp,
            "global" => Expectation::Global,
            "none" => Expectation::None,
            _ => {
                rd.errors.push((line, format!("expect must be auto, blowup, global or none (got '{v}')")));
                Expectation::Auto
            }
        },
    };

    // solver
    let mut solver = SolverConfig::default();
    macro_rules! solver_keys {
        ($($k:ident),*) => {$(
            if let Some(v) = rd.parse_num("solver", stringify!($k)) {
                solver.$k = v;
            }
        )*};
    }
    solver_keys!(
        dt_init, dt_min, dt_max, t_end, blowup_threshold, picard_tol, picard_max_iter, picard_nodes,
        adapt_factor, step_tol, tail_tol, commit_ratio, saturation_slope, max_steps
    );
    if let Err(e) = solver.validate() {
        rd.errors.push((0, e.to_string()));
    }

    // experiment
    if let Some(list) = rd.list("experiment", "sweep") {
        if list.iter().any(|&v| !(v > 1.0)) {
            rd.errors.push((rd.line("experiment", "sweep"), "sweep values must exceed 1".into()));
        }
        exp.sweep = list;
    }
    if mode == Mode::Sweep && exp.sweep.is_empty() {
        rd.errors.push((rd.line("experiment", "sweep"), "mode sweep requires a nonempty 'sweep' list".into()));
    }
    exp.output = rd.entry("experiment", "output").map(|e| e.value.clone());
    if let Some(list) = rd.list("experiment", "radii") {
        if list.is_empty() || list.iter().any(|&v| !(v > 0.0)) || list.windows(2).any(|w| w[1] <= w[0]) {
            rd.errors.push((rd.line("experiment", "radii"), "radii must be positive and increasing".into()));
        }
        exp.radii = list;
    }
    if let Some(e) = rd.entry("experiment", "r") {
        let (line, v) = (e.line, e.value.clone());
        match v.as_str() {
            "inf" | "infinity" => exp.r = f64::INFINITY,
            _ => match v.parse() {
                Ok(x) => exp.r = x,
                Err(_) => rd.errors.push((line, format!("[experiment] r: cannot parse '{v}'"))),
            },
        }
    }
    macro_rules! exp_keys {
        ($($k:ident),*) => {$(
            if let Some(v) = rd.parse_num("experiment", stringify!($k)) {
                exp.$k = v;
            }
        )*};
    }
    exp_keys!(q, t_min, t_max, t_count, cases, slow_band, box_check, box_tol, small_norm);
    if !(exp.q >= 1.0 && exp.r >= exp.q) {
        rd.errors.push((rd.line("experiment", "q"), "need 1 <= q <= r".into()));
    }
    if mode == Mode::Decay && !(exp.t_min > 0.0 && exp.t_max > exp.t_min && exp.t_count >= 3) {
        rd.errors.push((rd.line("experiment", "t_min"), "need 0 < t_min < t_max and t_count >= 3".into()));
    }

    let errors = rd.errors;
    if !errors.is_empty() {
        let mut errors = errors;
        errors.sort_by_key(|(l, _)| *l);
        return Err(ConfigErrors(errors));
    }
    Ok(ExperimentConfig {
        grid: grid.expect("validated"),
        operator: operator.expect("validated"),
        p,
        ic: ic.unwrap_or_else(FamilySpec::zero),
        forcing: forcing.unwrap_or_else(FamilySpec::zero),
        expect,
        solver,
        experiment: exp,
    })
}

impl ExperimentConfig {
    /// Canonical text of every validated field; the run id hashes this.
    pub fn canonical(&self) -> String {
        let s = &self.solver;
        let e = &self.experiment;
        let list = |v: &[f64]| v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        out.push_str(&format!(
            "grid d={} n={} box_length={}\n",
            self.grid.dim(),
            self.grid.n(),
            fmt_f64(self.grid.box_length())
        ));
        out.push_str(&format!(
            "operator a={} b={} s={}\n",
            fmt_f64(self.operator.a()),
            fmt_f64(self.operator.b()),
            fmt_f64(self.operator.s())
        ));
        out.push_str(&format!(
            "problem p={} ic={} forcing={} expect={:?}\n",
            self.p.map(fmt_f64).unwrap_or_default(),
            self.ic.canonical(),
            self.forcing.canonical(),
            self.expect
        ));
        out.push_str(&format!(
            "solver dt_init={} dt_min={} dt_max={} t_end={} blowup_threshold={} picard_tol={} picard_max_iter={} picard_nodes={} adapt_factor={} step_tol={} tail_tol={} commit_ratio={} saturation_slope={} max_steps={}\n",
            fmt_f64(s.dt_init), fmt_f64(s.dt_min), fmt_f64(s.dt_max), fmt_f64(s.t_end),
            fmt_f64(s.blowup_threshold), fmt_f64(s.picard_tol), s.picard_max_iter, s.picard_nodes,
            fmt_f64(s.adapt_factor), fmt_f64(s.step_tol), fmt_f64(s.tail_tol), fmt_f64(s.commit_ratio),
            fmt_f64(s.saturation_slope), s.max_steps
        ));
        out.push_str(&format!(
            "experiment mode={} sweep={} radii={} q={} r={} t_min={} t_max={} t_count={} cases={} slow_band={} box_check={} box_tol={} small_norm={}\n",
            e.mode.as_str(), list(&e.sweep), list(&e.radii), fmt_f64(e.q), fmt_f64(e.r),
            fmt_f64(e.t_min), fmt_f64(e.t_max), e.t_count, e.cases, fmt_f64(e.slow_band),
            e.box_check, fmt_f64(e.box_tol), fmt_f64(e.small_norm)
        ));
        out
    }

    /// The same experiment at another exponent.
    pub fn with_p(&self, p: f64) -> Self {
        Self { p: Some(p), ..self.clone() }
    }

    pub fn p(&self) -> Result<f64> {
        self.p.ok_or_else(|| Error::Config("missing key 'p' in [problem]".into()))
    }
}
