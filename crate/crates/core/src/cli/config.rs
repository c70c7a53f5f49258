//! Run configuration: a nested record with defaults, read from line-oriented
//! `section.key = value` text and overridden key by key from the command line.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dichotomy::{Probe, Thresholds};
use crate::energy::{MuSpec, ScheduleParams};
use crate::error::{Error, Result};
use crate::kernels::{AbsorptionKernel, Nonlinearity, OmegaSpec, ProblemSpec};
use crate::rdsolver::{GridParams, InitialData, SolveOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub dim: usize,
    /// `power:q=2`, `exponential`, `porous:m=2,q=3` or `shifted-power:q=2`.
    pub nonlinearity: String,
    /// Kernel descriptor, e.g. `exp-omega;power:a=1,alpha=0.5`.
    pub kernel: String,
    pub horizon: f64,
    /// Domain radius; derived from the horizon when absent.
    pub radius: Option<f64>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            dim: 1,
            nonlinearity: "power:q=2".into(),
            kernel: "constant:value=0".into(),
            horizon: 1.0,
            radius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub h_min: f64,
    pub ratio: f64,
    pub h_max: f64,
    /// Number of uniform refinements applied to the graded grid.
    pub refine: u32,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridParams::default();
        GridSection { h_min: g.h_min, ratio: g.ratio, h_max: g.h_max, refine: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    /// `warm-start`, `bump` or `flat`.
    pub kind: String,
    pub mass: f64,
    pub t0: f64,
    pub k: f64,
    pub ln_mk: f64,
    pub level: f64,
    pub t_start: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection {
            kind: "warm-start".into(),
            mass: 1.0,
            t0: 0.01,
            k: 10.0,
            ln_mk: std::f64::consts::E,
            level: 1.0,
            t_start: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    pub snapshots: Vec<f64>,
    pub theta: f64,
    pub rtol: f64,
    pub atol: f64,
    pub dt_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for SolveSection {
    fn default() -> Self {
        let o = SolveOptions::default();
        SolveSection { snapshots: Vec::new(), theta: o.theta, rtol: o.rtol, atol: o.atol, dt_max: None, max_steps: o.max_steps }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Written as `x0@t0;x0@t0`.
    pub probes: Vec<Probe>,
    pub ladder: Vec<f64>,
    pub t_warm: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        let probes = [0.02, 0.05]
            .iter()
            .flat_map(|&t| [0.002, 0.25, 0.5, 1.0].map(|x| Probe::new(x, t)))
            .collect();
        SweepSection { probes, ladder: crate::dichotomy::decade_ladder(1, 6), t_warm: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySection {
    pub growth: f64,
    pub saturation: f64,
    pub reached: f64,
    pub origin_radius: f64,
    /// A sweep table JSON to classify instead of running the sweep.
    pub table: Option<String>,
}

impl Default for ClassifySection {
    fn default() -> Self {
        let t = Thresholds::default();
        ClassifySection { growth: t.growth, saturation: t.saturation, reached: t.reached, origin_radius: t.origin_radius, table: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    pub ell: f64,
    pub tolerance: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection { ell: 2.0, tolerance: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    pub r: Vec<f64>,
    pub tau: Vec<f64>,
    /// `zero`, `constant:value=0.5` or `linear:k=100,r=0.2`.
    pub mu: String,
    pub cap: Option<f64>,
}

impl Default for EnergySection {
    fn default() -> Self {
        EnergySection { r: vec![0.1, 0.2, 0.4], tau: vec![0.0], mu: "zero".into(), cap: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub omega: String,
    pub exponent: f64,
    pub cutoffs: usize,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        ThresholdSection { omega: "power:a=1,alpha=0.5".into(), exponent: 0.5, cutoffs: 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma1Section {
    pub sigma: f64,
    pub ell: f64,
    /// Single τ to scan when not sweeping.
    pub tau: f64,
    pub tau_sweep: bool,
    /// Bracket for β = τ*/σ.
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub n_t: usize,
    pub decades: f64,
    pub n_rho: usize,
}

impl Default for Lemma1Section {
    fn default() -> Self {
        Lemma1Section {
            sigma: 1.0,
            ell: 2.0,
            tau: 0.05,
            tau_sweep: false,
            beta_lo: 1e-3,
            beta_hi: 10.0,
            n_t: 240,
            decades: 6.0,
            n_rho: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub eps0: f64,
    pub c2: f64,
    pub c4: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    pub k_min: u32,
    pub k_max: u32,
    pub omega: String,
    pub q: f64,
    /// Supplied radii r_k; empty selects the b_k proxy.
    pub r: Vec<f64>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        let p = ScheduleParams::default();
        ScheduleSection {
            eps0: p.eps0,
            c2: p.c2,
            c4: p.c4,
            c8: p.c8,
            c9: p.c9,
            c10: p.c10,
            // with unit constants the b_k relation has no root for k < 3
            k_min: 3,
            k_max: p.k_max,
            omega: p.omega.to_string(),
            q: p.q,
            r: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into(), svg: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub initial: InitialSection,
    pub solve: SolveSection,
    pub sweep: SweepSection,
    pub classify: ClassifySection,
    pub profile: ProfileSection,
    pub energy: EnergySection,
    pub thresholds: ThresholdSection,
    pub lemma1: Lemma1Section,
    pub schedule: ScheduleSection,
    pub output: OutputSection,
}

fn parse_probes(s: &str) -> Result<Value> {
    let mut out = Vec::new();
    for item in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (x, t) = item
            .split_once('@')
            .ok_or_else(|| Error::Config(format!("probe '{item}' is not of the form x0@t0")))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| Error::Config(format!("probe '{item}' is not numeric")));
        out.push(serde_json::to_value(Probe::new(num(x)?, num(t)?))?);
    }
    Ok(Value::Array(out))
}

/// Value for an optional key, which has no type to follow while unset.
fn parse_scalar(raw: &str) -> Value {
    if raw.is_empty() {
        Value::Null
    } else if let Ok(b) = raw.parse::<bool>() {
        Value::Bool(b)
    } else if let Ok(x) = raw.parse::<f64>() {
        Value::from(x)
    } else {
        Value::String(raw.to_string())
    }
}

fn parse_like(key: &str, raw: &str, current: &Value) -> Result<Value> {
    let raw = raw.trim();
    let bad = || Error::Config(format!("{key} = '{raw}' does not parse as {current}"));
    Ok(match current {
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad())?),
        Value::Number(n) if n.is_u64() => match raw.parse::<u64>() {
            Ok(i) => Value::from(i),
            Err(_) => return Err(Error::Config(format!("{key} = '{raw}' is not a nonnegative integer"))),
        },
        Value::Number(_) => Value::from(raw.parse::<f64>().map_err(|_| bad())?),
        Value::String(_) => Value::String(raw.to_string()),
        Value::Array(_) if key == "sweep.probes" => parse_probes(raw)?,
        Value::Array(_) => Value::Array(
            raw.split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| p.parse::<f64>().map(Value::from).map_err(|_| bad()))
                .collect::<Result<_>>()?,
        ),
        Value::Null => parse_scalar(raw),
        Value::Object(_) => return Err(Error::Config(format!("{key} names a section, not a key"))),
    })
}

impl RunConfig {
    /// Sets one dotted key; unknown keys are configuration errors.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let mut tree = serde_json::to_value(&*self)?;
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("key '{key}' must be section.key")))?;
        let slot = tree
            .get_mut(section)
            .and_then(|s| s.get_mut(field))
            .ok_or_else(|| Error::Config(format!("unknown configuration key '{key}'")))?;
        *slot = parse_like(key, raw, slot)?;
        *self = serde_json::from_value(tree).map_err(|e| Error::Config(format!("{key} = '{raw}': {e}")))?;
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment, `[section]` headers
    /// prefix the following keys.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut prefix = String::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                prefix = format!("{}.", name.trim());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{line}'", n + 1)))?;
            let k = k.trim();
            let key = if k.contains('.') { k.to_string() } else { format!("{prefix}{k}") };
            self.set(&key, v).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// The configuration as `key = value` lines that `apply_text` reads back.
    pub fn to_text(&self) -> Result<String> {
        let tree = serde_json::to_value(self)?;
        let mut out = String::new();
        for (section, fields) in tree.as_object().expect("struct serializes to an object") {
            for (field, v) in fields.as_object().expect("sections serialize to objects") {
                let text = match v {
                    Value::Null => continue,
                    Value::String(s) => s.clone(),
                    Value::Array(items) if section == "sweep" && field == "probes" => items
                        .iter()
                        .map(|p| format!("{}@{}", p["x0"], p["t0"]))
                        .collect::<Vec<_>>()
                        .join(";"),
                    Value::Array(items) => items.iter().map(Value::to_string).collect::<Vec<_>>().join(","),
                    other => other.to_string(),
                };
                out.push_str(&format!("{section}.{field} = {text}\n"));
            }
        }
        Ok(out)
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        parse_nonlinearity(&self.problem.nonlinearity)
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let kernel = AbsorptionKernel::from_str(&self.problem.kernel)?;
        let mut spec = ProblemSpec::new(self.problem.dim, self.nonlinearity()?, kernel, self.problem.horizon);
        if let Some(r) = self.problem.radius {
            spec = spec.with_radius(r);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn grid_params(&self) -> GridParams {
        GridParams { h_min: self.grid.h_min, ratio: self.grid.ratio, h_max: self.grid.h_max }
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        let s = &self.initial;
        let init = match s.kind.as_str() {
            "warm-start" => InitialData::WarmStart { mass: s.mass, t0: s.t0 },
            "bump" => InitialData::Bump { k: s.k, ln_mk: s.ln_mk },
            "flat" => InitialData::Flat { level: s.level, t_start: s.t_start },
            other => return Err(Error::Config(format!("initial.kind must be warm-start, bump or flat, got '{other}'"))),
        };
        init.validate()?;
        Ok(init)
    }

    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.solve;
        SolveOptions {
            snapshots: s.snapshots.clone(),
            theta: s.theta,
            rtol: s.rtol,
            atol: s.atol,
            dt_max: s.dt_max.unwrap_or(f64::INFINITY),
            max_steps: s.max_steps,
            ..SolveOptions::default()
        }
    }

    pub fn thresholds(&self) -> Thresholds {
        let c = &self.classify;
        Thresholds { growth: c.growth, saturation: c.saturation, reached: c.reached, origin_radius: c.origin_radius }
    }

    pub fn mu(&self) -> Result<MuSpec> {
        parse_mu(&self.energy.mu)
    }

    pub fn schedule_params(&self) -> Result<ScheduleParams> {
        let s = &self.schedule;
        Ok(ScheduleParams {
            eps0: s.eps0,
            c2: s.c2,
            c4: s.c4,
            c8: s.c8,
            c9: s.c9,
            c10: s.c10,
            k_min: s.k_min,
            k_max: s.k_max,
            omega: OmegaSpec::from_str(&s.omega)?,
            q: s.q,
            dim: self.problem.dim,
        })
    }
}

fn named_params(s: &str, what: &str) -> Result<(String, Vec<(String, f64)>)> {
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut params = Vec::new();
    for p in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{what} '{s}': expected key=value, got '{p}'")))?;
        let v = v
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("{what} '{s}': {k} is not a number")))?;
        params.push((k.trim().to_string(), v));
    }
    Ok((head.trim().to_string(), params))
}

fn param(params: &[(String, f64)], key: &str, s: &str) -> Result<f64> {
    params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Config(format!("'{s}' is missing '{key}'")))
}

pub fn parse_nonlinearity(s: &str) -> Result<Nonlinearity> {
    let (head, p) = named_params(s, "nonlinearity")?;
    let nl = match head.as_str() {
        "power" => Nonlinearity::Power { q: param(&p, "q", s)? },
        "exponential" => Nonlinearity::Exponential,
        "porous" => Nonlinearity::Porous { m: param(&p, "m", s)?, q: param(&p, "q", s)? },
        "shifted-power" => Nonlinearity::ShiftedPower { q: param(&p, "q", s)? },
        other => return Err(Error::Config(format!("unknown nonlinearity '{other}'"))),
    };
    nl.validate()?;
    Ok(nl)
}

pub fn parse_mu(s: &str) -> Result<MuSpec> {
    let (head, p) = named_params(s, "mu")?;
    match head.as_str() {
        "zero" => Ok(MuSpec::Zero),
        "constant" => Ok(MuSpec::Constant { value: param(&p, "value", s)? }),
        "linear" => Ok(MuSpec::Linear { k: param(&p, "k", s)?, r: param(&p, "r", s)? }),
        other => Err(Error::Config(format!("unknown mu '{other}'"))),
    }
}

/// Named bundles of keys applied before the config file.
pub fn preset(name: &str) -> Result<&'static [(&'static str, &'static str)]> {
    const DICHOTOMY: [(&str, &str); 5] = [
        ("problem.nonlinearity", "power:q=2"),
        ("problem.horizon", "0.05"),
        ("problem.radius", "3"),
        ("sweep.probes", "0.5@0.05;1.0@0.05"),
        ("sweep.ladder", "1e1,1e2,1e3,1e4,1e5,1e6"),
    ];
    Ok(match name {
        "heat-kernel-check" => &[
            ("problem.dim", "1"),
            ("problem.nonlinearity", "power:q=2"),
            ("problem.kernel", "constant:value=0"),
            ("problem.horizon", "0.1"),
            ("initial.kind", "warm-start"),
            ("initial.mass", "1"),
            ("initial.t0", "0.01"),
            ("solve.snapshots", "0.1"),
        ],
        "exp-omega-constant" => &[
            DICHOTOMY[0], DICHOTOMY[1], DICHOTOMY[2], DICHOTOMY[3], DICHOTOMY[4],
            ("problem.kernel", "exp-omega;constant:sigma=1"),
        ],
        "exp-omega-sqrt" => &[
            DICHOTOMY[0], DICHOTOMY[1], DICHOTOMY[2], DICHOTOMY[3], DICHOTOMY[4],
            ("problem.kernel", "exp-omega;power:a=1,alpha=0.5"),
        ],
        "porous-power" => &[
            ("problem.nonlinearity", "porous:m=2,q=3"),
            ("problem.kernel", "power:coef=1,exponent=1"),
            ("problem.horizon", "0.05"),
            ("problem.radius", "12"),
            DICHOTOMY[3], DICHOTOMY[4],
        ],
        "porous-threshold" => &[
            ("problem.nonlinearity", "porous:m=2,q=3"),
            ("problem.kernel", "porous-threshold:m=2,q=3;power:a=1,alpha=2.3333333333333335"),
            ("problem.horizon", "0.05"),
            ("problem.radius", "12"),
            DICHOTOMY[3], DICHOTOMY[4],
        ],
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (known: {})",
                PRESETS.join(", ")
            )))
        }
    })
}

pub const PRESETS: [&str; 5] = ["heat-kernel-check", "exp-omega-constant", "exp-omega-sqrt", "porous-power", "porous-threshold"];
