//! Named initial-data and forcing families.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

use super::csv::fmt_f64;

/// Widths of decay kept inside the half box by every Gaussian profile.
pub const SUPPORT_WIDTHS: f64 = 8.0;

pub const FAMILIES: &[(&str, &[&str])] = &[
    ("gaussian", &["amp", "center", "width"]),
    ("dipole", &["amp", "sep", "width"]),
    ("ring", &["amp", "radius", "width"]),
    ("neg_bump_pos_tail", &["amp", "width"]),
    ("constant", &["amp"]),
    ("zero", &[]),
];

/// Amplitude: a number, or `small` to be scaled to a norm target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amplitude {
    Value(f64),
    Small,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub name: String,
    pub amp: Amplitude,
    pub params: BTreeMap<String, f64>,
}

impl FamilySpec {
    pub fn zero() -> Self {
        Self { name: "zero".into(), amp: Amplitude::Value(0.0), params: BTreeMap::new() }
    }

    pub fn new(name: &str, amp: f64, params: &[(&str, f64)]) -> Result<Self> {
        let mut text = format!("{name} amp={}", fmt_f64(amp));
        if name == "zero" {
            text = "zero".into();
        }
        for (k, v) in params {
            text.push_str(&format!(" {k}={}", fmt_f64(*v)));
        }
        Self::parse(&text).map_err(Error::Config)
    }

    /// Parses `name key=value ...`; `none` is an alias for `zero`.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut words = text.split_whitespace();
        let name = match words.next() {
            Some("none") => "zero",
            Some(n) => n,
            None => return Err("empty family specification".into()),
        };
        let Some((_, allowed)) = FAMILIES.iter().find(|(n, _)| *n == name) else {
            let known: Vec<_> = FAMILIES.iter().map(|(n, _)| *n).collect();
            return Err(format!("unknown family '{name}' (known: {})", known.join(", ")));
        };
        let mut amp = if name == "zero" { Some(Amplitude::Value(0.0)) } else { None };
        let mut params = BTreeMap::new();
        for w in words {
            let Some((k, v)) = w.split_once('=') else {
                return Err(format!("family parameter '{w}' is not key=value"));
            };
            if !allowed.contains(&k) {
                return Err(format!("family {name} has no parameter '{k}'"));
            }
            if k == "amp" && v == "small" {
                amp = Some(Amplitude::Small);
                continue;
            }
            let x: f64 = v.parse().map_err(|_| format!("family {name}: cannot parse {k}='{v}'"))?;
            if !x.is_finite() {
                return Err(format!("family {name}: {k} must be finite"));
            }
            if k == "amp" {
                amp = Some(Amplitude::Value(x));
            } else if params.insert(k.to_string(), x).is_some() {
                return Err(format!("family {name}: duplicate parameter '{k}'"));
            }
        }
        for req in allowed.iter().filter(|k| **k != "center") {
            if *req == "amp" {
                if amp.is_none() {
                    return Err(format!("family {name} requires 'amp'"));
                }
            } else if !params.contains_key(*req) {
                return Err(format!("family {name} requires '{req}'"));
            }
        }
        for key in ["width", "sep", "radius"] {
            if let Some(&v) = params.get(key) {
                if !(v > 0.0) {
                    return Err(format!("family {name}: {key} must be positive"));
                }
            }
        }
        Ok(Self { name: name.to_string(), amp: amp.expect("checked"), params })
    }

    pub fn is_zero(&self) -> bool {
        self.name == "zero" || self.amp == Amplitude::Value(0.0)
    }

    pub fn canonical(&self) -> String {
        let mut out = self.name.clone();
        if self.name != "zero" {
            match self.amp {
                Amplitude::Value(v) => out.push_str(&format!(" amp={}", fmt_f64(v))),
                Amplitude::Small => out.push_str(" amp=small"),
            }
        }
        for (k, v) in &self.params {
            out.push_str(&format!(" {k}={}", fmt_f64(*v)));
        }
        out
    }

    fn param(&self, key: &str) -> f64 {
        self.params.get(key).copied().unwrap_or(0.0)
    }

    /// Samples the family; `Amplitude::Small` samples at unit amplitude.
    pub fn sample(&self, grid: Grid) -> Result<Field> {
        let amp = match self.amp {
            Amplitude::Value(v) => v,
            Amplitude::Small => 1.0,
        };
        make_family(&self.name, amp, &self.params, grid)
    }

    /// Samples and rescales a `small` amplitude so that the L^q norm is `target`.
    pub fn sample_scaled(&self, grid: Grid, q: f64, target: f64) -> Result<Field> {
        let field = self.sample(grid)?;
        if self.amp != Amplitude::Small {
            return Ok(field);
        }
        if !(q >= 1.0) {
            return Err(Error::Config(format!(
                "amp=small needs a norm exponent >= 1 (got {q}); give an explicit amplitude"
            )));
        }
        let norm = field.norm_lq(q);
        if !(norm > 0.0) {
            return Err(Error::Config(format!("family {} has zero norm", self.name)));
        }
        field.map(|v| v * target / norm)
    }

    /// Half-extent the profile needs, measured from the origin.
    pub fn extent(&self) -> f64 {
        let w = self.param("width");
        match self.name.as_str() {
            "gaussian" => self.param("center").abs() + SUPPORT_WIDTHS * w,
            "dipole" => 0.5 * self.param("sep") + SUPPORT_WIDTHS * w,
            "ring" => self.param("radius") + SUPPORT_WIDTHS * w,
            "neg_bump_pos_tail" => SUPPORT_WIDTHS * TAIL_WIDTH * w,
            _ => 0.0,
        }
    }
}

const TAIL_WIDTH: f64 = 3.0;
const TAIL_WEIGHT: f64 = 0.5;

fn gauss(r2: f64, w: f64) -> f64 {
    (-r2 / (2.0 * w * w)).exp()
}

/// Samples a named family on `grid`.
///
/// `gaussian` is `amp exp(-|x-c e1|^2 / 2w^2)`. `dipole` is the difference of two
/// such bumps at `+-sep/2` on the first axis. `neg_bump_pos_tail` is a negative
/// core under a wider positive tail with net positive mass.
pub fn make_family(name: &str, amp: f64, params: &BTreeMap<String, f64>, grid: Grid) -> Result<Field> {
    let spec = FamilySpec { name: name.to_string(), amp: Amplitude::Value(amp), params: params.clone() };
    if !FAMILIES.iter().any(|(n, _)| *n == name) {
        return Err(Error::Config(format!("unknown family '{name}'")));
    }
    let half = 0.5 * grid.box_length();
    let extent = spec.extent();
    if extent > half {
        return Err(Error::Config(format!(
            "family {name} needs half-width {extent} but the box half-width is {half}"
        )));
    }
    let w = spec.param("width");
    match name {
        "zero" => Ok(Field::zeros(grid)),
        "constant" => Field::constant(grid, amp),
        "gaussian" => {
            let c = spec.param("center");
            Field::from_fn(grid, |x| {
                let r2: f64 = x.iter().enumerate().map(|(i, &xi)| if i == 0 { (xi - c) * (xi - c) } else { xi * xi }).sum();
                amp * gauss(r2, w)
            })
        }
        "dipole" => {
            let h = 0.5 * spec.param("sep");
            Field::from_fn(grid, |x| {
                let rest: f64 = x[1..].iter().map(|v| v * v).sum();
                let (m, p) = (x[0] - h, x[0] + h);
                amp * (gauss(m * m + rest, w) - gauss(p * p + rest, w))
            })
        }
        "ring" => {
            let rho = spec.param("radius");
            Field::from_fn(grid, |x| {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                amp * gauss((r - rho) * (r - rho), w)
            })
        }
        "neg_bump_pos_tail" => {
            Field::from_fn(grid, |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                amp * (TAIL_WEIGHT * gauss(r2, TAIL_WIDTH * w) - gauss(r2, w))
            })
        }
        _ => unreachable!("checked above"),
    }
}
