use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The modulus ω(t) that sets how flat an absorption kernel is at t = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum OmegaSpec {
    /// ω ≡ σ.
    Constant { sigma: f64 },
    /// ω(t) = a·t^α.
    Power { a: f64, alpha: f64 },
    /// Piecewise-linear interpolation of samples; t strictly increasing.
    Tabulated { t: Vec<f64>, value: Vec<f64> },
}

impl OmegaSpec {
    pub fn constant(sigma: f64) -> Self {
        OmegaSpec::Constant { sigma }
    }

    pub fn power(a: f64, alpha: f64) -> Self {
        OmegaSpec::Power { a, alpha }
    }

    pub fn tabulated(t: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        validate_table(&t, &value)?;
        let w = OmegaSpec::Tabulated { t, value };
        w.validate()?;
        Ok(w)
    }

    /// Reads a two-column CSV (t, value) with a header row.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let (t, value) = read_table(path)?;
        Self::tabulated(t, value)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("omega evaluated at t = {t}")));
        }
        match self {
            OmegaSpec::Constant { sigma } => Ok(*sigma),
            OmegaSpec::Power { a, alpha } => Ok(a * t.powf(*alpha)),
            OmegaSpec::Tabulated { t: ts, value } => interpolate(ts, value, t).ok_or_else(|| {
                Error::InsufficientData(format!(
                    "tabulated omega covers [{}, {}], requested t = {t}",
                    ts[0],
                    ts[ts.len() - 1]
                ))
            }),
        }
    }

    /// Range of t over which the descriptor can be evaluated.
    pub fn coverage(&self) -> (f64, f64) {
        match self {
            OmegaSpec::Tabulated { t, .. } => (t[0], t[t.len() - 1]),
            _ => (0.0, f64::INFINITY),
        }
    }

    /// Positivity and sampled monotonicity on the descriptor's natural domain.
    pub fn validate(&self) -> Result<()> {
        match self {
            OmegaSpec::Constant { sigma } if !(*sigma > 0.0) => {
                return Err(Error::domain(format!("omega constant must be positive, got {sigma}")))
            }
            OmegaSpec::Power { a, alpha } if !(*a > 0.0) || !(*alpha >= 0.0) => {
                return Err(Error::domain(format!(
                    "omega power needs a > 0 and alpha >= 0, got a = {a}, alpha = {alpha}"
                )))
            }
            OmegaSpec::Tabulated { t, value } => {
                validate_table(t, value)?;
                if value.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::domain("tabulated omega must be positive"));
                }
            }
            _ => {}
        }
        let (lo, hi) = self.coverage();
        let hi = hi.min(1.0).max(lo);
        let lo = if lo > 0.0 { lo } else { 1e-6 * hi };
        let n = 400;
        let mut prev = self.eval(lo)?;
        for i in 1..=n {
            let t = lo * (hi / lo).powf(i as f64 / n as f64);
            let w = self.eval(t)?;
            if prev > w + 1e-12 {
                return Err(Error::domain(format!("omega is decreasing near t = {t}")));
            }
            prev = w;
        }
        Ok(())
    }

    /// inf{ω(t)/t^α : 0 < t ≤ 1} > 0 for some α ∈ [0,1).
    pub fn satisfies_growth_condition(&self) -> bool {
        match self {
            OmegaSpec::Constant { .. } => true,
            OmegaSpec::Power { alpha, .. } => *alpha < 1.0,
            OmegaSpec::Tabulated { .. } => false,
        }
    }
}

impl fmt::Display for OmegaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaSpec::Constant { sigma } => write!(f, "constant:sigma={sigma}"),
            OmegaSpec::Power { a, alpha } => write!(f, "power:a={a},alpha={alpha}"),
            OmegaSpec::Tabulated { t, .. } => write!(f, "tabulated:{}-points", t.len()),
        }
    }
}

/// Parses `constant:sigma=1`, `power:a=1,alpha=0.5` or `tabulated:path=omega.csv`.
impl FromStr for OmegaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let params = parse_params(rest)?;
        let get = |key: &str| -> Result<f64> {
            let raw = params
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::Config(format!("omega '{s}' is missing '{key}'")))?;
            raw.parse()
                .map_err(|_| Error::Config(format!("omega parameter {key} = '{raw}' is not a number")))
        };
        let w = match family.trim() {
            "constant" => OmegaSpec::Constant { sigma: get("sigma")? },
            "power" => OmegaSpec::Power {
                a: get("a")?,
                alpha: get("alpha")?,
            },
            "tabulated" => {
                let path = params
                    .iter()
                    .find(|(k, _)| k == "path")
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| Error::Config(format!("omega '{s}' is missing 'path'")))?;
                return OmegaSpec::from_csv(path);
            }
            other => return Err(Error::Config(format!("unknown omega family '{other}'"))),
        };
        w.validate()?;
        Ok(w)
    }
}

pub(crate) fn parse_params(rest: &str) -> Result<Vec<(String, String)>> {
    rest.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Config(format!("expected key=value, got '{p}'")))
        })
        .collect()
}

pub(crate) fn validate_table(t: &[f64], value: &[f64]) -> Result<()> {
    if t.len() < 2 || t.len() != value.len() {
        return Err(Error::InsufficientData(
            "a table needs at least two (t, value) rows".into(),
        ));
    }
    if !(t[0] > 0.0) || t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("table t column must be positive and strictly increasing"));
    }
    Ok(())
}

/// Linear interpolation; `None` outside the table.
pub(crate) fn interpolate(t: &[f64], value: &[f64], x: f64) -> Option<f64> {
    if x < t[0] || x > t[t.len() - 1] {
        return None;
    }
    let i = t.partition_point(|&s| s <= x).min(t.len() - 1).max(1);
    let (t0, t1) = (t[i - 1], t[i]);
    let w = (x - t0) / (t1 - t0);
    Some(value[i - 1] * (1.0 - w) + value[i] * w)
}

/// Two-column CSV with a mandatory header row.
pub fn read_table(path: impl AsRef<Path>) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let header = rdr.headers()?.clone();
    if header.len() != 2 || header.iter().any(|h| h.parse::<f64>().is_ok()) {
        return Err(Error::InsufficientData(format!(
            "{}: expected a header row with two column names",
            path.as_ref().display()
        )));
    }
    let mut t = Vec::new();
    let mut value = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let parse = |i: usize| -> Result<f64> {
            row.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::InsufficientData(format!("bad table row {:?}", row)))
        };
        t.push(parse(0)?);
        value.push(parse(1)?);
    }
    validate_table(&t, &value)?;
    Ok((t, value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_descriptors() {
        let w: OmegaSpec = "power:a=1,alpha=0.5".parse().unwrap();
        assert_eq!(w, OmegaSpec::power(1.0, 0.5));
        let w: OmegaSpec = "constant:sigma=2".parse().unwrap();
        assert_eq!(w.eval(0.3).unwrap(), 2.0);
        assert!("power:a=1".parse::<OmegaSpec>().is_err());
        assert!("wiggle:a=1".parse::<OmegaSpec>().is_err());
    }

    #[test]
    fn rejects_decreasing_table() {
        let r = OmegaSpec::tabulated(vec![0.1, 0.5, 1.0], vec![2.0, 1.0, 3.0]);
        assert!(r.is_err());
    }

    #[test]
    fn tabulated_outside_range() {
        let w = OmegaSpec::tabulated(vec![0.1, 1.0], vec![1.0, 2.0]).unwrap();
        assert!((w.eval(0.55).unwrap() - 1.5).abs() < 1e-15);
        assert!(matches!(w.eval(0.05), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn csv_requires_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        std::fs::write(&p, "0.1,1\n0.5,2\n").unwrap();
        assert!(read_table(&p).is_err());
        std::fs::write(&p, "t,omega\n0.1,1\n0.5,2\n").unwrap();
        let (t, v) = read_table(&p).unwrap();
        assert_eq!(t, vec![0.1, 0.5]);
        assert_eq!(v, vec![1.0, 2.0]);
    }
}
