//! k-sweeps of approximate fundamental solutions u_k (initial mass k) and
//! a trend classifier separating complete from single-point initial blow-up.
//!
//! The classifier is a heuristic with documented thresholds; it reads the
//! direction of the k → ∞ limit off a finite ladder.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::thresholds::{exponential_admissible, porous_admissibility};
use crate::kernels::{dini_classify, dyadic_cutoffs, flat_supersolution, theta_exponent, AbsorptionKernel, DiniClass, Nonlinearity, ProblemSpec};
use crate::rdsolver::{probe, solve, Diagnostics, InitialData, RadialGrid, SolveOptions, SolveResult};

/// Environment variable selecting the sweep worker count (default 1).
pub const WORKERS_ENV: &str = "DIFFABS_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub x0: f64,
    pub t0: f64,
}

impl Probe {
    pub fn new(x0: f64, t0: f64) -> Self {
        Probe { x0, t0 }
    }
}

/// Geometric ladder 10^lo, …, 10^hi.
pub fn decade_ladder(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 10f64.powi(e)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    /// Each u_k starts as k·G_N(·, t_warm) (Barenblatt for porous) at t_warm.
    pub t_warm: f64,
    /// Snapshots are replaced by the probe times.
    pub solve: SolveOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { t_warm: 1e-3, solve: SolveOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub kernel: AbsorptionKernel,
    pub dim: usize,
    pub nonlinearity: Nonlinearity,
    pub probes: Vec<Probe>,
    pub ladder: Vec<f64>,
    /// values[i][j] = u_(ladder[i]) at probes[j]; rows only for finished solves.
    pub values: Vec<Vec<f64>>,
    /// U(t₀) or Ũ(t₀) per probe; None when infinite or undefined.
    pub supersolution: Vec<Option<f64>>,
    pub diagnostics: Vec<Diagnostics>,
    pub t_warm: f64,
    /// Largest drop u_(k_i) − u_(k_(i+1)) relative to max(1, |u|).
    pub worst_monotonicity: f64,
    pub complete: bool,
    pub failure: Option<String>,
    /// Existence probe: exponential admissibility or the porous weighted L¹ test.
    pub admissibility: Option<DiniClass>,
}

impl SweepTable {
    pub fn monotone(&self, tol: f64) -> bool {
        self.worst_monotonicity <= tol
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[j]).collect()
    }
}

fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

fn check_inputs(spec: &ProblemSpec, probes: &[Probe], ladder: &[f64], opts: &SweepOptions) -> Result<()> {
    if probes.is_empty() || ladder.is_empty() {
        return Err(Error::domain("sweep needs at least one probe and one ladder entry"));
    }
    if ladder.iter().any(|k| !(*k > 0.0)) || ladder.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("k ladder must be positive and strictly increasing"));
    }
    if !(opts.t_warm > 0.0) {
        return Err(Error::domain(format!("warm-start time must be positive, got {}", opts.t_warm)));
    }
    for p in probes {
        if !(p.t0 > opts.t_warm && p.t0 <= spec.horizon) || !(p.x0 >= 0.0 && p.x0 < spec.radius) {
            return Err(Error::domain(format!(
                "probe ({}, {}) outside (t_warm, T] × [0, R) = ({}, {}] × [0, {})",
                p.x0, p.t0, opts.t_warm, spec.horizon, spec.radius
            )));
        }
    }
    Ok(())
}

fn probe_row(res: &SolveResult, probes: &[Probe]) -> Result<Vec<f64>> {
    probes.iter().map(|p| probe(res, p.x0, p.t0)).collect()
}

/// One solve per k on a shared grid. The top of the ladder runs with
/// adaptive steps; the others replay its step sequence, which keeps the
/// discrete comparison principle and hence monotonicity in k.
pub fn sweep(spec: &ProblemSpec, probes: &[Probe], ladder: &[f64], grid: &RadialGrid, opts: &SweepOptions) -> Result<SweepTable> {
    spec.validate()?;
    check_inputs(spec, probes, ladder, opts)?;
    let mut admissibility = None;
    if spec.nonlinearity == Nonlinearity::Exponential {
        if !exponential_admissible(&spec.kernel, spec.dim)? {
            return Err(Error::domain(
                "t^(N/2)(−ln h(t)) does not grow as t → 0; fundamental solutions of the exponential problem may not exist",
            ));
        }
        admissibility = Some(DiniClass::Divergent);
    }
    if let Nonlinearity::Porous { m, q } = spec.nonlinearity {
        admissibility = Some(porous_admissibility(&spec.kernel, m, q, spec.dim, &dyadic_cutoffs(30))?);
    }
    let supersolution = probes
        .iter()
        .map(|p| match flat_supersolution(spec, p.t0) {
            Ok(b) => Ok(b.and_then(|b| b.finite())),
            Err(Error::NotIntegrable(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut times: Vec<f64> = probes.iter().map(|p| p.t0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let base = SolveOptions { snapshots: times, replay: None, ..opts.solve.clone() };
    let init = |k: f64| InitialData::warm_start(k, opts.t_warm);

    let mut table = SweepTable {
        kernel: spec.kernel.clone(),
        dim: spec.dim,
        nonlinearity: spec.nonlinearity,
        probes: probes.to_vec(),
        ladder: ladder.to_vec(),
        values: Vec::new(),
        supersolution,
        diagnostics: Vec::new(),
        t_warm: opts.t_warm,
        worst_monotonicity: 0.0,
        complete: false,
        failure: None,
        admissibility,
    };

    let top_k = ladder[ladder.len() - 1];
    let top = match solve(spec, &init(top_k), grid, &base).and_then(|r| probe_row(&r, probes).map(|row| (r, row))) {
        Ok(x) => x,
        Err(e) => {
            table.failure = Some(format!("k = {top_k}: {e}"));
            return Ok(table);
        }
    };
    let replay = SolveOptions { replay: Some(top.0.step_times.clone()), ..base };
    let rest = &ladder[..ladder.len() - 1];
    let run = |k: &f64| solve(spec, &init(*k), grid, &replay).and_then(|r| probe_row(&r, probes).map(|row| (r.diagnostics, row)));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::Config(format!("cannot start sweep workers: {e}")))?;
    let results: Vec<Result<(Diagnostics, Vec<f64>)>> = pool.install(|| rest.par_iter().map(run).collect());

    for (k, r) in rest.iter().zip(results) {
        match r {
            Ok((d, row)) => {
                table.diagnostics.push(d);
                table.values.push(row);
            }
            Err(e) => {
                table.failure = Some(format!("k = {k}: {e}"));
                break;
            }
        }
    }
    if table.failure.is_none() {
        table.diagnostics.push(top.0.diagnostics);
        table.values.push(top.1);
        table.complete = true;
    }
    table.worst_monotonicity = table
        .values
        .windows(2)
        .flat_map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b) / a.abs().max(1.0)))
        .fold(0.0, f64::max);
    Ok(table)
}

/// `sweep` restricted to the degenerate-diffusion problem with q > m > 1 and
/// a kernel from the porous threshold family or the pure power t^((q−m)/(m−1)).
pub fn porous_sweep(spec: &ProblemSpec, probes: &[Probe], ladder: &[f64], grid: &RadialGrid, opts: &SweepOptions) -> Result<SweepTable> {
    let Nonlinearity::Porous { m, q } = spec.nonlinearity else {
        return Err(Error::WrongVariant(format!("porous sweep needs the porous variant, got {:?}", spec.nonlinearity)));
    };
    if !(q > m && m > 1.0) {
        return Err(Error::domain(format!("porous sweep needs q > m > 1, got m = {m}, q = {q}")));
    }
    let e = (q - m) / (m - 1.0);
    let ok = match &spec.kernel {
        AbsorptionKernel::PorousThreshold { m: km, q: kq, .. } => *km == m && *kq == q,
        AbsorptionKernel::Power { exponent, .. } => (exponent - e).abs() <= 1e-12 * e.abs().max(1.0),
        _ => false,
    };
    if !ok {
        return Err(Error::domain(format!(
            "porous sweep needs h = t^{e}/ω(t) or the pure power t^{e}, got {:?}",
            spec.kernel
        )));
    }
    sweep(spec, probes, ladder, grid, opts)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Last-decade relative increment at or above which a probe is still growing.
    pub growth: f64,
    /// Last-decade relative increment at or below which a probe has saturated.
    pub saturation: f64,
    /// Top-k ratio to the supersolution that counts as having reached it.
    pub reached: f64,
    /// Probes with x₀ at or below this radius are on-origin probes.
    pub origin_radius: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { growth: 0.05, saturation: 0.01, reached: 0.99, origin_radius: 0.05 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowUpClass {
    Complete,
    SinglePoint,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub class: BlowUpClass,
    /// (u_top − u_prev)/u_prev over the last two ladder entries, per probe.
    pub increments: Vec<f64>,
    /// u_top / supersolution at t₀, per probe.
    pub ratio_top: Vec<Option<f64>>,
    /// Ratio strictly increasing along the whole ladder, per probe.
    pub ratio_increasing: Vec<bool>,
    pub on_origin: Vec<bool>,
    /// Dini classification of the kernel, where the kernel carries one.
    pub dini: Option<DiniClass>,
    pub thresholds: Thresholds,
}

/// The Dini integral attached to the problem: exponent 1/2 for the
/// semilinear variants, θ for the porous one.
pub fn kernel_dini(spec: &ProblemSpec) -> Result<Option<DiniClass>> {
    let cutoffs = dyadic_cutoffs(30);
    match (&spec.kernel, spec.nonlinearity) {
        (AbsorptionKernel::ExpOmega { omega } | AbsorptionKernel::DoubleExp { omega }, Nonlinearity::Power { .. } | Nonlinearity::Exponential) => {
            dini_classify(omega, 0.5, &cutoffs).map(Some)
        }
        (AbsorptionKernel::PorousThreshold { omega, .. }, Nonlinearity::Porous { m, q }) => {
            dini_classify(omega, theta_exponent(m, q, spec.dim)?, &cutoffs).map(Some)
        }
        // the pure power is the threshold family with ω ≡ 1
        (AbsorptionKernel::Power { exponent, .. }, Nonlinearity::Porous { m, q })
            if (exponent - (q - m) / (m - 1.0)).abs() <= 1e-12 =>
        {
            Ok(Some(DiniClass::Divergent))
        }
        _ => Ok(None),
    }
}

/// Applies the thresholds to a finished table.
///
/// complete: every probe either grows by at least `growth` over the last
/// decade with a strictly increasing ratio to the supersolution (the ratio
/// test is skipped where the supersolution is infinite), or already sits
/// within `reached` of it.
/// single-point: every off-origin probe grows by at most `saturation`, and
/// every on-origin probe, if any, by at least `growth`.
pub fn classify(table: &SweepTable, th: &Thresholds, dini: Option<DiniClass>) -> Result<Verdict> {
    if !table.complete || table.values.len() != table.ladder.len() {
        return Err(Error::domain("cannot classify an incomplete sweep"));
    }
    if table.ladder.len() < 4 {
        return Err(Error::domain(format!("classification needs at least 4 ladder entries, got {}", table.ladder.len())));
    }
    let n = table.values.len();
    let mut v = Verdict {
        class: BlowUpClass::Inconclusive,
        increments: Vec::new(),
        ratio_top: Vec::new(),
        ratio_increasing: Vec::new(),
        on_origin: Vec::new(),
        dini,
        thresholds: *th,
    };
    for (j, p) in table.probes.iter().enumerate() {
        let col = table.column(j);
        let (prev, top) = (col[n - 2], col[n - 1]);
        let inc = if prev > 0.0 {
            (top - prev) / prev
        } else if top > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        v.increments.push(inc);
        v.ratio_top.push(table.supersolution[j].map(|u| top / u));
        v.ratio_increasing.push(col.windows(2).all(|w| w[1] > w[0]));
        v.on_origin.push(p.x0 <= th.origin_radius);
    }
    let probes = 0..table.probes.len();
    let complete = probes.clone().all(|j| {
        let reached = v.ratio_top[j].is_some_and(|r| r >= th.reached);
        let growing = v.increments[j] >= th.growth && (v.ratio_top[j].is_none() || v.ratio_increasing[j]);
        reached || growing
    });
    let off: Vec<usize> = probes.clone().filter(|&j| !v.on_origin[j]).collect();
    let single = !off.is_empty()
        && off.iter().all(|&j| v.increments[j] <= th.saturation)
        && probes.filter(|&j| v.on_origin[j]).all(|j| v.increments[j] >= th.growth);
    v.class = if complete {
        BlowUpClass::Complete
    } else if single {
        BlowUpClass::SinglePoint
    } else {
        BlowUpClass::Inconclusive
    };
    Ok(v)
}

/// Writes the table as CSV: one row per k, one column per probe.
pub fn write_table_csv(table: &SweepTable, path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["k".to_string()];
    header.extend(table.probes.iter().map(|p| format!("u(x0={},t0={})", p.x0, p.t0)));
    w.write_record(&header)?;
    for (k, row) in table.ladder.iter().zip(&table.values) {
        let mut rec = vec![k.to_string()];
        rec.extend(row.iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    let mut rec = vec!["supersolution".to_string()];
    rec.extend(table.supersolution.iter().map(|s| s.map_or("inf".to_string(), |x| x.to_string())));
    w.write_record(&rec)?;
    w.flush()?;
    Ok(())
}
