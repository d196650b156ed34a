//! Critical exponents and the parameters of the small-data global existence
//! argument, all as functions of `(d, s, p)`.

use crate::error::{Error, Result};
use crate::special::beta;

fn check_ds(d: usize, s: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("s must lie in (0,1) (got {s})")));
    }
    Ok(())
}

/// Fujita exponent `1 + 2s/d`.
pub fn fujita_exponent(d: usize, s: f64) -> Result<f64> {
    check_ds(d, s)?;
    Ok(1.0 + 2.0 * s / d as f64)
}

/// Critical exponent with forcing, `d/(d - 2s)`, defined for `d > 2s` only.
pub fn forcing_critical_exponent(d: usize, s: f64) -> Result<f64> {
    check_ds(d, s)?;
    let df = d as f64;
    if df <= 2.0 * s {
        return Err(Error::UndefinedExponent(format!(
            "d/(d-2s) needs d > 2s (d={d}, s={s})"
        )));
    }
    Ok(df / (df - 2.0 * s))
}

/// Weissler exponent `d(p-1)/(2s)`: the integrability index for small data.
pub fn weissler_exponent(d: usize, s: f64, p: f64) -> Result<f64> {
    check_ds(d, s)?;
    if !(p > 1.0) {
        return Err(Error::Domain(format!("p must exceed 1 (got {p})")));
    }
    Ok(d as f64 * (p - 1.0) / (2.0 * s))
}

/// Parameters of the contraction argument in the weighted space
/// `sup_t t^ρ ||u(t)||_q` used for `p > d/(d-2s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalExistenceParams {
    pub p_c_s: f64,
    pub k: f64,
    pub q: f64,
    pub rho: f64,
}

/// Open interval of admissible `1/q`.
pub fn admissible_inverse_q(d: usize, s: f64, p: f64) -> (f64, f64) {
    let upper = 2.0 * s / (d as f64 * (p - 1.0));
    (upper / p, upper)
}

/// `(p_c^s, k, q, ρ)` with `1/q` at the midpoint of its admissible interval.
pub fn global_existence_parameters(d: usize, s: f64, p: f64) -> Result<GlobalExistenceParams> {
    global_existence_parameters_with_q(d, s, p, None)
}

/// As [`global_existence_parameters`], optionally overriding `q`; an override
/// must lie in the admissible interval.
pub fn global_existence_parameters_with_q(
    d: usize,
    s: f64,
    p: f64,
    q_override: Option<f64>,
) -> Result<GlobalExistenceParams> {
    let p_crit = forcing_critical_exponent(d, s)?;
    if !(p > p_crit) {
        return Err(Error::ParameterDomain(format!(
            "global existence parameters need p > d/(d-2s) = {p_crit} (got p = {p})"
        )));
    }
    let df = d as f64;
    let p_c_s = weissler_exponent(d, s, p)?;
    let k = p_c_s / p;
    let (lo, hi) = admissible_inverse_q(d, s, p);
    let q = match q_override {
        None => 2.0 / (lo + hi),
        Some(q) => {
            let inv = 1.0 / q;
            if !(inv > lo && inv < hi) {
                return Err(Error::ParameterDomain(format!(
                    "q = {q} outside the admissible range 1/q in ({lo}, {hi})"
                )));
            }
            q
        }
    };
    let rho = 1.0 / (p - 1.0) - df / (2.0 * q * s);
    Ok(GlobalExistenceParams { p_c_s, k, q, rho })
}

/// Beta-function constants of the Duhamel estimates in the weighted space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuhamelBetaBounds {
    /// Arguments `(1 - ρp, 1 - d(p-1)/(2qs))` of the nonlinear-term bound.
    pub nonlinear_args: (f64, f64),
    /// `B(1 - ρp, 1 - d(p-1)/(2qs))`; both arguments are positive whenever
    /// `1/q` is admissible.
    pub nonlinear: f64,
    /// Time exponent `1 - (d/2s)(1/k - 1/q)` of the forcing-term kernel. It
    /// equals `-ρ`, so `∫_0^t (t-τ)^{...}` diverges and no finite beta
    /// constant exists for that term.
    pub forcing_exponent: f64,
}

pub fn duhamel_beta_bounds(d: usize, s: f64, params: &GlobalExistenceParams, p: f64) -> DuhamelBetaBounds {
    let df = d as f64;
    let x = 1.0 - params.rho * p;
    let y = 1.0 - df * (p - 1.0) / (2.0 * params.q * s);
    DuhamelBetaBounds {
        nonlinear_args: (x, y),
        nonlinear: if x > 0.0 && y > 0.0 { beta(x, y) } else { f64::NAN },
        forcing_exponent: 1.0 - df / (2.0 * s) * (1.0 / params.k - 1.0 / params.q),
    }
}

/// Every exponent in one place.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentReport {
    pub d: usize,
    pub s: f64,
    pub p: Option<f64>,
    pub p_f: f64,
    pub p_crit: Option<f64>,
    pub p_c_s: Option<f64>,
    pub k: Option<f64>,
    pub q: Option<f64>,
    pub rho: Option<f64>,
    pub beta_nonlinear: Option<f64>,
}

impl ExponentReport {
    pub fn new(d: usize, s: f64, p: Option<f64>) -> Result<Self> {
        let p_f = fujita_exponent(d, s)?;
        let p_crit = forcing_critical_exponent(d, s).ok();
        let mut report = Self {
            d,
            s,
            p,
            p_f,
            p_crit,
            p_c_s: None,
            k: None,
            q: None,
            rho: None,
            beta_nonlinear: None,
        };
        if let Some(p) = p {
            let p_c_s = weissler_exponent(d, s, p)?;
            report.p_c_s = Some(p_c_s);
            report.k = Some(p_c_s / p);
            if p_crit.is_some_and(|pc| p > pc) {
                let g = global_existence_parameters(d, s, p)?;
                report.q = Some(g.q);
                report.rho = Some(g.rho);
                report.beta_nonlinear = Some(duhamel_beta_bounds(d, s, &g, p).nonlinear);
            }
        }
        Ok(report)
    }

    pub fn csv_header() -> &'static str {
        "d,s,p,p_F,p_crit,p_c_s,k,q,rho,beta_nonlinear"
    }

    pub fn csv_row(&self) -> String {
        use crate::harness::csv::fmt_f64;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.d,
            fmt_f64(self.s),
            opt(self.p),
            fmt_f64(self.p_f),
            opt(self.p_crit),
            opt(self.p_c_s),
            opt(self.k),
            opt(self.q),
            opt(self.rho),
            opt(self.beta_nonlinear)
        )
    }

    /// Aligned `name  value` lines.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(&str, String)> = vec![
            ("d", self.d.to_string()),
            ("s", self.s.to_string()),
        ];
        if let Some(p) = self.p {
            rows.push(("p", p.to_string()));
        }
        rows.push(("p_F", self.p_f.to_string()));
        rows.push((
            "p_crit",
            self.p_crit.map_or_else(|| "undefined (d <= 2s)".to_string(), |v| v.to_string()),
        ));
        let opt_rows = [
            ("p_c^s", self.p_c_s),
            ("k", self.k),
            ("q", self.q),
            ("rho", self.rho),
            ("beta_nonlinear", self.beta_nonlinear),
        ];
        for (name, v) in opt_rows {
            if let Some(v) = v {
                rows.push((name, v.to_string()));
            }
        }
        let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
        rows.iter()
            .map(|(n, v)| format!("{n:<width$}  {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn fujita_examples() {
        assert!(close(fujita_exponent(1, 0.5).unwrap(), 2.0));
        assert!(close(fujita_exponent(2, 0.5).unwrap(), 1.5));
        assert!(close(fujita_exponent(3, 0.75).unwrap(), 1.5));
        assert!(fujita_exponent(1, 1.0).is_err());
        assert!(fujita_exponent(1, 0.0).is_err());
    }

    #[test]
    fn forcing_exponent_examples() {
        assert!(close(forcing_critical_exponent(1, 0.3).unwrap(), 2.5));
        assert!(close(forcing_critical_exponent(2, 0.5).unwrap(), 2.0));
        assert!(matches!(forcing_critical_exponent(1, 0.5), Err(Error::UndefinedExponent(_))));
        assert!(matches!(forcing_critical_exponent(1, 0.7), Err(Error::UndefinedExponent(_))));
    }

    #[test]
    fn weissler_examples() {
        assert!(close(weissler_exponent(1, 0.5, 3.0).unwrap(), 2.0));
        assert!(close(weissler_exponent(2, 0.5, 3.0).unwrap(), 4.0));
        let pf = fujita_exponent(3, 0.4).unwrap();
        assert!(close(weissler_exponent(3, 0.4, pf).unwrap(), 1.0));
        assert!(weissler_exponent(1, 0.5, 1.0).is_err());
    }

    #[test]
    fn global_parameter_examples() {
        // midpoint of 1/q in (1/12, 1/4) is 1/6
        let g = global_existence_parameters(2, 0.5, 3.0).unwrap();
        assert!(close(g.p_c_s, 4.0));
        assert!(close(g.k, 4.0 / 3.0));
        assert!(close(g.q, 6.0));
        assert!(close(g.rho, 1.0 / 6.0));
        // midpoint of 1/q in (0.1, 0.3) is 0.2
        let g = global_existence_parameters(1, 0.3, 3.0).unwrap();
        assert!(close(g.p_c_s, 10.0 / 3.0));
        assert!(close(g.k, 10.0 / 9.0));
        assert!(close(g.q, 5.0));
        assert!(close(g.rho, 1.0 / 6.0));
        assert!(matches!(global_existence_parameters(2, 0.5, 2.0), Err(Error::ParameterDomain(_))));
    }

    #[test]
    fn q_override_is_validated() {
        let g = global_existence_parameters_with_q(2, 0.5, 3.0, Some(8.0)).unwrap();
        assert_eq!(g.q, 8.0);
        assert!(global_existence_parameters_with_q(2, 0.5, 3.0, Some(3.0)).is_err());
        assert!(global_existence_parameters_with_q(2, 0.5, 3.0, Some(13.0)).is_err());
    }

    #[test]
    fn beta_bounds_are_consistent() {
        let p = 3.0;
        let g = global_existence_parameters(2, 0.5, p).unwrap();
        let b = duhamel_beta_bounds(2, 0.5, &g, p);
        assert!(b.nonlinear.is_finite() && b.nonlinear > 0.0);
        // second argument equals ρ(p-1)
        assert!(close(b.nonlinear_args.1, g.rho * (p - 1.0)));
        // the exponent of the final power of t is -ρ
        let t_power = -2.0 / (2.0 * g.q * 0.5) * (p - 1.0) + 1.0 - g.rho * p;
        assert!(close(t_power, -g.rho));
        assert!(close(b.forcing_exponent, -g.rho));
    }

    #[test]
    fn report_text_and_csv() {
        let r = ExponentReport::new(1, 0.5, Some(3.0)).unwrap();
        assert!(r.p_crit.is_none());
        assert!(r.q.is_none());
        assert!(r.to_text().contains("undefined"));
        let r = ExponentReport::new(2, 0.5, Some(3.0)).unwrap();
        assert_eq!(r.q, Some(6.0));
        assert_eq!(r.csv_row().split(',').count(), ExponentReport::csv_header().split(',').count());
    }
}
