//! Radial method-of-lines solver for the diffusion–absorption variants.

mod grid;
mod initial;
mod stepper;
mod tridiag;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use grid::{ball_volume, unit_sphere_area, GridParams, RadialGrid};
pub use initial::{heat_kernel, Barenblatt, InitialData};
pub use tridiag::solve_tridiagonal;

use crate::error::{Error, Result};
use crate::kernels::{
    alpha_ell, exponential_barrier, ln_lemma1_constant, power_barrier, AbsorptionKernel, Barrier,
    Lemma1Params, Nonlinearity, ProblemSpec,
};
use stepper::{StepError, Stepper};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// Output times; empty means the horizon only.
    pub snapshots: Vec<f64>,
    pub theta: f64,
    pub rtol: f64,
    /// Floor of the error-norm scale, as an absolute error.
    pub atol: f64,
    pub dt_initial: Option<f64>,
    pub dt_max: f64,
    pub max_steps: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub eps_d: f64,
    pub bound_rel: f64,
    pub bound_abs: f64,
    /// Replays these step end points (two half steps each) instead of adapting.
    pub replay: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            snapshots: Vec::new(),
            theta: 1.0,
            rtol: 1e-6,
            atol: 1e-12,
            dt_initial: None,
            dt_max: f64::INFINITY,
            max_steps: 2_000_000,
            newton_tol: 1e-13,
            newton_max_iter: 60,
            eps_d: 1e-10,
            bound_rel: 1e-6,
            bound_abs: 1e-6,
            replay: None,
        }
    }
}

impl SolveOptions {
    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshots = times;
        self
    }
}

/// How the monitored flat supersolution is anchored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierAnchor {
    /// H(t) = ∫₀ᵗ h: the true flat supersolution.
    Origin,
    /// h is not integrable at 0; H is accumulated from the start time, which
    /// still bounds the discrete solution but is not U(t).
    Start,
    /// Variant without a flat supersolution.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub rejected_steps: usize,
    pub newton_iterations: usize,
    pub max_abs_u: f64,
    /// Discrete mass per snapshot.
    pub masses: Vec<f64>,
    /// Nodes clamped to the flat supersolution (initial data or in flight).
    pub clamp_events: usize,
    pub barrier_anchor: BarrierAnchor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub dim: usize,
    pub nonlinearity: Nonlinearity,
    pub r: Vec<f64>,
    /// Snapshot times; the first is the start time.
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    /// Flat supersolution at each snapshot (None when infinite or not anchored at 0).
    pub barrier: Vec<Option<f64>>,
    pub diagnostics: Diagnostics,
    /// Accepted step end points, reusable through [`SolveOptions::replay`].
    pub step_times: Vec<f64>,
}

impl SolveResult {
    pub fn clamped(&self) -> bool {
        self.diagnostics.clamp_events > 0
    }

    pub fn final_field(&self) -> &[f64] {
        self.fields.last().expect("at least the initial snapshot")
    }

    pub fn snapshot_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1e-300))
    }
}

#[derive(Clone, Copy, Debug)]
enum BarrierKind {
    Power(f64),
    Exponential,
    None,
}

struct BarrierTrack {
    kind: BarrierKind,
    primitive: f64,
    anchor: BarrierAnchor,
}

impl BarrierTrack {
    fn new(spec: &ProblemSpec, t_start: f64) -> Result<Self> {
        let kind = match spec.nonlinearity {
            Nonlinearity::Power { q } | Nonlinearity::Porous { q, .. } => BarrierKind::Power(q),
            Nonlinearity::Exponential => BarrierKind::Exponential,
            Nonlinearity::ShiftedPower { .. } => BarrierKind::None,
        };
        if matches!(kind, BarrierKind::None) {
            return Ok(BarrierTrack { kind, primitive: 0.0, anchor: BarrierAnchor::None });
        }
        if spec.kernel.is_zero() || t_start == 0.0 {
            return Ok(BarrierTrack { kind, primitive: 0.0, anchor: BarrierAnchor::Origin });
        }
        match spec.kernel.primitive(t_start) {
            Ok(h) => Ok(BarrierTrack { kind, primitive: h, anchor: BarrierAnchor::Origin }),
            Err(Error::NotIntegrable(_)) => Ok(BarrierTrack { kind, primitive: 0.0, anchor: BarrierAnchor::Start }),
            Err(e) => Err(e),
        }
    }

    fn value(&self) -> Barrier {
        match self.kind {
            BarrierKind::Power(q) => power_barrier(q, self.primitive),
            BarrierKind::Exponential => exponential_barrier(self.primitive),
            BarrierKind::None => Barrier::Infinite,
        }
    }

    fn reported(&self) -> Option<f64> {
        if self.anchor == BarrierAnchor::Origin {
            self.value().finite()
        } else {
            None
        }
    }

    fn limit(&self, opts: &SolveOptions) -> f64 {
        let b = self.value().value();
        match self.kind {
            BarrierKind::Power(_) => b * (1.0 + opts.bound_rel),
            BarrierKind::Exponential => b + opts.bound_abs,
            BarrierKind::None => f64::INFINITY,
        }
    }
}

fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0f64, |s, x| s.max(x.abs()))
}

fn check_bounds(u: &[f64], r: &[f64], t: f64, track: &BarrierTrack, opts: &SolveOptions) -> Result<()> {
    let limit = track.limit(opts);
    let nonneg = matches!(track.kind, BarrierKind::Power(_));
    for (j, &x) in u.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::StepFailure { t, reason: format!("non-finite value at r = {}", r[j]) });
        }
        if x > limit {
            return Err(Error::ComparisonViolation { t, r: r[j], u: x, bound: limit });
        }
        if nonneg && x < 0.0 {
            return Err(Error::ComparisonViolation { t, r: r[j], u: x, bound: 0.0 });
        }
    }
    Ok(())
}

fn output_times(spec: &ProblemSpec, t_start: f64, opts: &SolveOptions) -> Result<Vec<f64>> {
    let mut times = if opts.snapshots.is_empty() {
        vec![spec.horizon]
    } else {
        opts.snapshots.clone()
    };
    times.sort_by(f64::total_cmp);
    times.dedup();
    for &t in &times {
        if !(t > t_start) || t > spec.horizon * (1.0 + 1e-12) {
            return Err(Error::domain(format!(
                "snapshot time {t} outside (start {t_start}, horizon {}]",
                spec.horizon
            )));
        }
    }
    Ok(times)
}

/// Integrates the problem from the initial data and records snapshots.
pub fn solve(spec: &ProblemSpec, init: &InitialData, grid: &RadialGrid, opts: &SolveOptions) -> Result<SolveResult> {
    spec.validate()?;
    if grid.dim != spec.dim {
        return Err(Error::domain(format!("grid dimension {} differs from problem dimension {}", grid.dim, spec.dim)));
    }
    if !(0.5..=1.0).contains(&opts.theta) || !(opts.rtol > 0.0) {
        return Err(Error::domain(format!("need θ in [1/2, 1] and rtol > 0, got θ = {}, rtol = {}", opts.theta, opts.rtol)));
    }
    let t_start = init.start_time();
    let snaps = output_times(spec, t_start, opts)?;
    let mut u = init.sample(grid, &spec.nonlinearity)?;
    let mut track = BarrierTrack::new(spec, t_start)?;
    let mut clamp_events = 0;
    if let (BarrierAnchor::Origin, Barrier::Finite(b)) = (track.anchor, track.value()) {
        for x in &mut u {
            if *x > b {
                *x = b;
                clamp_events += 1;
            }
        }
    }
    check_bounds(&u, grid.nodes(), t_start, &track, opts)?;

    let mut stepper = Stepper {
        grid,
        kernel: &spec.kernel,
        nonlinearity: spec.nonlinearity,
        theta: opts.theta,
        newton_tol: opts.newton_tol,
        newton_max_iter: opts.newton_max_iter,
        eps_d: opts.eps_d,
        newton_iterations: 0,
    };
    let mut result = SolveResult {
        dim: spec.dim,
        nonlinearity: spec.nonlinearity,
        r: grid.nodes().to_vec(),
        times: vec![t_start],
        fields: vec![u.clone()],
        barrier: vec![track.reported()],
        diagnostics: Diagnostics {
            steps: 0,
            rejected_steps: 0,
            newton_iterations: 0,
            max_abs_u: max_abs(&u),
            masses: vec![grid.mass(&u)],
            clamp_events,
            barrier_anchor: track.anchor,
        },
        step_times: Vec::new(),
    };

    let mut t = t_start;
    let mut snap = 0;
    let accept = |t_new: f64, u_new: Vec<f64>, dh: f64, u: &mut Vec<f64>, track: &mut BarrierTrack, result: &mut SolveResult, snap: &mut usize| -> Result<()> {
        track.primitive += dh;
        check_bounds(&u_new, grid.nodes(), t_new, track, opts)?;
        *u = u_new;
        result.diagnostics.steps += 1;
        result.diagnostics.max_abs_u = result.diagnostics.max_abs_u.max(max_abs(u));
        result.step_times.push(t_new);
        while *snap < snaps.len() && (snaps[*snap] - t_new).abs() <= 1e-12 * snaps[*snap] {
            result.times.push(snaps[*snap]);
            result.fields.push(u.clone());
            result.barrier.push(track.reported());
            result.diagnostics.masses.push(grid.mass(u));
            *snap += 1;
        }
        Ok(())
    };
    let half_steps = |stepper: &mut Stepper, u: &[f64], t: f64, h: f64| -> std::result::Result<(Vec<f64>, f64), StepError> {
        let (w, d1) = stepper.step(u, t, 0.5 * h)?;
        let (w, d2) = stepper.step(&w, t + 0.5 * h, 0.5 * h)?;
        Ok((w, d1 + d2))
    };

    if let Some(replay) = &opts.replay {
        for &t_next in replay {
            if t_next <= t {
                continue;
            }
            if snap >= snaps.len() {
                break;
            }
            let h = t_next - t;
            let (w, dh) = match half_steps(&mut stepper, &u, t, h) {
                Ok(x) => x,
                Err(StepError::Retry(reason)) => return Err(Error::StepFailure { t, reason }),
                Err(StepError::Fatal(e)) => return Err(e),
            };
            accept(t_next, w, dh, &mut u, &mut track, &mut result, &mut snap)?;
            t = t_next;
        }
        if snap < snaps.len() {
            return Err(Error::domain("replayed step times do not reach every snapshot"));
        }
    } else {
        let scale_floor = opts.atol / opts.rtol;
        let mut dt = opts
            .dt_initial
            .unwrap_or(if t_start > 0.0 { 1e-3 * t_start } else { 1e-6 * snaps[snaps.len() - 1] });
        while snap < snaps.len() {
            if result.diagnostics.steps + result.diagnostics.rejected_steps >= opts.max_steps {
                return Err(Error::StepFailure { t, reason: format!("step budget {} exhausted", opts.max_steps) });
            }
            let target = snaps[snap];
            let h = dt.min(opts.dt_max);
            let hit = t + h >= target - 1e-12 * target;
            let t_new = if hit { target } else { t + h };
            // the step a replay will recompute from the stored end point
            let h = t_new - t;
            if !(h > 1e-15 * t.max(1e-300)) {
                return Err(Error::StepFailure { t, reason: format!("step size underflow (dt = {h:e})") });
            }
            let attempt = stepper.step(&u, t, h).and_then(|(full, _)| {
                half_steps(&mut stepper, &u, t, h).map(|(fine, dh)| (full, fine, dh))
            });
            match attempt {
                Err(StepError::Fatal(e)) => return Err(e),
                Err(StepError::Retry(reason)) => {
                    result.diagnostics.rejected_steps += 1;
                    dt = h / 4.0;
                    if dt < 1e-14 * t.max(1e-300) {
                        return Err(Error::StepFailure { t, reason });
                    }
                }
                Ok((full, fine, dh)) => {
                    let diff = full.iter().zip(&fine).fold(0.0f64, |s, (a, b)| s.max((a - b).abs()));
                    let err = diff / (opts.rtol * max_abs(&fine).max(scale_floor));
                    let factor = if err == 0.0 { 2.0 } else { (0.9 / err.sqrt()).clamp(0.2, 2.0) };
                    if err <= 1.0 {
                        accept(t_new, fine, dh, &mut u, &mut track, &mut result, &mut snap)?;
                        t = t_new;
                        if !(hit && h < dt) {
                            dt = h * factor;
                        }
                    } else {
                        result.diagnostics.rejected_steps += 1;
                        dt = h * factor;
                    }
                }
            }
        }
    }
    result.diagnostics.newton_iterations = stepper.newton_iterations;
    Ok(result)
}

/// The comparison equation ∂ₜv − Δv + c t^(α_ℓ)(|v|^(ℓ−1)v + 1) = 0 with
/// c from the lemma1 kernel constants at τ.
pub fn auxiliary_spec(p: &Lemma1Params, tau: f64, radius: f64, horizon: f64) -> Result<ProblemSpec> {
    let c = ln_lemma1_constant(p, tau)?.exp();
    let alpha = alpha_ell(p.dim, p.ell)?;
    Ok(ProblemSpec::new(
        p.dim,
        Nonlinearity::ShiftedPower { q: p.ell },
        AbsorptionKernel::power(c, alpha),
        horizon,
    )
    .with_radius(radius))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    /// min and max of u − v over stored nodes with t in (t_start, τ].
    pub min_diff: f64,
    pub max_diff: f64,
    pub argmin: (f64, f64),
    pub argmax: (f64, f64),
    pub tau: f64,
}

/// Solves both problems from the same data and compares them up to the
/// smaller horizon.
pub fn solve_comparison_pair(
    spec: &ProblemSpec,
    spec2: &ProblemSpec,
    init: &InitialData,
    grid: &RadialGrid,
    opts: &SolveOptions,
) -> Result<(SolveResult, SolveResult, OrderingReport)> {
    let a = solve(spec, init, grid, opts)?;
    let b = solve(spec2, init, grid, opts)?;
    let tau = spec.horizon.min(spec2.horizon);
    let mut report = OrderingReport {
        min_diff: f64::INFINITY,
        max_diff: f64::NEG_INFINITY,
        argmin: (f64::NAN, f64::NAN),
        argmax: (f64::NAN, f64::NAN),
        tau,
    };
    for (i, &t) in a.times.iter().enumerate().skip(1) {
        if t > tau * (1.0 + 1e-12) {
            break;
        }
        let Some(k) = b.snapshot_index(t) else { continue };
        for (j, (x, y)) in a.fields[i].iter().zip(&b.fields[k]).enumerate() {
            let d = x - y;
            if d < report.min_diff {
                report.min_diff = d;
                report.argmin = (t, a.r[j]);
            }
            if d > report.max_diff {
                report.max_diff = d;
                report.argmax = (t, a.r[j]);
            }
        }
    }
    if !report.min_diff.is_finite() {
        return Err(Error::InsufficientData("no shared snapshot times in (start, τ]".into()));
    }
    Ok((a, b, report))
}

/// Bilinear interpolation of the stored snapshots at (x₀, t₀).
pub fn probe(result: &SolveResult, x0: f64, t0: f64) -> Result<f64> {
    let times = &result.times;
    let (t_lo, t_hi) = (times[0], times[times.len() - 1]);
    let r_max = result.r[result.r.len() - 1];
    if !(t0 >= t_lo && t0 <= t_hi) || !(x0 >= 0.0 && x0 <= r_max) {
        return Err(Error::domain(format!(
            "probe ({x0}, {t0}) outside stored range r ∈ [0, {r_max}], t ∈ [{t_lo}, {t_hi}]"
        )));
    }
    let at = |i: usize| -> f64 {
        let r = &result.r;
        let k = r.partition_point(|&x| x <= x0).clamp(1, r.len() - 1);
        let w = (x0 - r[k - 1]) / (r[k] - r[k - 1]);
        result.fields[i][k - 1] * (1.0 - w) + result.fields[i][k] * w
    };
    if times.len() == 1 {
        return Ok(at(0));
    }
    let i = times.partition_point(|&s| s <= t0).clamp(1, times.len() - 1);
    let w = (t0 - times[i - 1]) / (times[i] - times[i - 1]);
    Ok(at(i - 1) * (1.0 - w) + at(i) * w)
}

/// One row per (t, r) in full round-trip precision.
pub fn write_snapshot_csv(result: &SolveResult, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "r", "u"])?;
    for (t, field) in result.times.iter().zip(&result.fields) {
        for (r, u) in result.r.iter().zip(field) {
            w.write_record([t.to_string(), r.to_string(), u.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_json(result: &SolveResult, path: impl AsRef<Path>) -> Result<()> {
    let value = serde_json::json!({
        "diagnostics": result.diagnostics,
        "clamped": result.clamped(),
        "times": result.times,
        "barrier": result.barrier,
        "nodes": result.r.len(),
    });
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, &value)?;
    writeln!(f)?;
    Ok(())
}

#[cfg(test)]
mod tests;
