//! Local energy functionals of a radial solution over Q_r = ℝᴺ × (r, 1)
//! and over exterior cylinders {|x| > τ} × (0, r].

mod schedule;

use serde::{Deserialize, Serialize};

pub use schedule::{schedule, RkSource, Schedule, ScheduleParams, ScheduleRow, TailRow};

use crate::error::{Error, Result};
use crate::kernels::{Nonlinearity, ProblemSpec};
use crate::rdsolver::{unit_sphere_area, SolveResult};

/// The decreasing weight μ(τ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MuSpec {
    Zero,
    Constant { value: f64 },
    /// (τ − 1/k)/(8r), and 0 for τ ≤ 1/k.
    Linear { k: f64, r: f64 },
}

impl MuSpec {
    pub fn eval(&self, tau: f64) -> f64 {
        match *self {
            MuSpec::Zero => 0.0,
            MuSpec::Constant { value } => value,
            MuSpec::Linear { k, r } => ((tau - 1.0 / k) / (8.0 * r)).max(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub r: f64,
    pub tau: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub f_mu: f64,
    pub e1_mu: f64,
    pub e2: f64,
    /// ∫₀ʳ h, None when h is not integrable at 0.
    pub h_r: Option<f64>,
    pub mu: MuSpec,
    pub mu_value: f64,
}

/// ∫ g over {τ < |x| < cap}: trapezoid rule in ρ with weight ω_N ρ^(N−1);
/// the cells cut by τ or cap are interpolated linearly.
fn radial_integral(r: &[f64], g: &[f64], tau: f64, cap: f64, dim: usize) -> f64 {
    let area = unit_sphere_area(dim);
    let wt = |x: f64| area * x.powi(dim as i32 - 1);
    let mut total = 0.0;
    for j in 1..r.len() {
        let (a, b) = (r[j - 1], r[j]);
        let (lo, hi) = (a.max(tau), b.min(cap));
        if hi <= lo {
            continue;
        }
        let lerp = |x: f64| {
            let w = (x - a) / (b - a);
            g[j - 1] * (1.0 - w) + g[j] * w
        };
        total += 0.5 * (hi - lo) * (lerp(lo) * wt(lo) + lerp(hi) * wt(hi));
    }
    total
}

fn gradient(r: &[f64], u: &[f64]) -> Vec<f64> {
    let n = r.len();
    (0..n)
        .map(|j| {
            if j == 0 {
                0.0
            } else if j == n - 1 {
                (u[j] - u[j - 1]) / (r[j] - r[j - 1])
            } else {
                (u[j + 1] - u[j - 1]) / (r[j + 1] - r[j - 1])
            }
        })
        .collect()
}

/// ∫ₐᵇ S(t) dt for S linear between the sample times.
fn time_integral(times: &[f64], values: &[f64], a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let at = |t: f64| -> f64 {
        let i = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
        let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
        values[i - 1] * (1.0 - w) + values[i] * w
    };
    let mut knots = vec![a];
    knots.extend(times.iter().copied().filter(|&t| t > a && t < b));
    knots.push(b);
    knots.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (at(w[0]) + at(w[1]))).sum()
}

/// Pointwise absorption integrand u·F(u).
fn absorption_density(nl: &Nonlinearity, u: f64) -> f64 {
    match *nl {
        Nonlinearity::Power { q } | Nonlinearity::Porous { q, .. } | Nonlinearity::ShiftedPower { q } => {
            u.abs().powf(q + 1.0)
        }
        Nonlinearity::Exponential => u * u.exp(),
    }
}

/// Energy functionals at (r, τ); integrals over |x| ≤ `cap` (the domain radius
/// when `None`).
pub fn energy_report(
    result: &SolveResult,
    spec: &ProblemSpec,
    r: f64,
    tau: f64,
    mu: MuSpec,
    cap: Option<f64>,
) -> Result<EnergyReport> {
    if !(r > 0.0 && r < 1.0) || !(tau >= 0.0) {
        return Err(Error::domain(format!("energy report needs r in (0, 1) and tau >= 0, got r = {r}, tau = {tau}")));
    }
    let times = &result.times;
    if times[0] > r || times[times.len() - 1] < 1.0 * (1.0 - 1e-12) {
        return Err(Error::InsufficientData(format!(
            "snapshots cover [{}, {}], need [{r}, 1]",
            times[0],
            times[times.len() - 1]
        )));
    }
    let inside = times.iter().filter(|&&t| t > r && t < 1.0).count();
    if inside < 8 {
        return Err(Error::InsufficientResolution(format!(
            "{inside} snapshots in (r, 1) = ({r}, 1), need at least 8"
        )));
    }
    let dim = result.dim;
    let nodes = &result.r;
    let cap = cap.unwrap_or(nodes[nodes.len() - 1]);
    let mu_value = mu.eval(tau);
    let m2 = mu_value * mu_value;
    let h_at = |t: f64| spec.kernel.eval_h(t);

    let mut grad2 = Vec::with_capacity(times.len());
    let mut mass2 = Vec::with_capacity(times.len());
    let mut absorb = Vec::with_capacity(times.len());
    let mut ext_u2 = Vec::with_capacity(times.len());
    let mut ext_e1 = Vec::with_capacity(times.len());
    for (&t, u) in times.iter().zip(&result.fields) {
        let g = gradient(nodes, u);
        let g2: Vec<f64> = g.iter().map(|x| x * x).collect();
        let u2: Vec<f64> = u.iter().map(|x| x * x).collect();
        let a: Vec<f64> = u.iter().map(|&x| absorption_density(&result.nonlinearity, x)).collect();
        grad2.push(radial_integral(nodes, &g2, 0.0, cap, dim));
        mass2.push(radial_integral(nodes, &u2, 0.0, cap, dim));
        let h = if t > 0.0 { h_at(t)? } else { 0.0 };
        absorb.push(h * radial_integral(nodes, &a, 0.0, cap, dim));
        let eu2 = radial_integral(nodes, &u2, tau, cap, dim);
        let eg2 = radial_integral(nodes, &g2, tau, cap, dim);
        ext_u2.push(eu2);
        ext_e1.push((eg2 + m2 * eu2) * (-m2 * t).exp());
    }
    let start = times[0];
    let i1 = time_integral(times, &grad2, r, 1.0);
    let i2 = time_integral(times, &mass2, r, 1.0);
    let i3 = time_integral(times, &absorb, r, 1.0);
    let e1_mu = time_integral(times, &ext_e1, start, r);
    let e2 = time_integral(times, &ext_u2, start, r);
    let at_r = {
        let i = times.partition_point(|&s| s <= r).clamp(1, times.len() - 1);
        let w = (r - times[i - 1]) / (times[i] - times[i - 1]);
        ext_u2[i - 1] * (1.0 - w) + ext_u2[i] * w
    };
    let f_mu = times
        .iter()
        .zip(&ext_u2)
        .filter(|(&t, _)| t <= r)
        .map(|(&t, &v)| (-m2 * t).exp() * v)
        .fold((-m2 * r).exp() * at_r, f64::max);
    let h_r = match spec.kernel.primitive(r) {
        Ok(v) => Some(v),
        Err(Error::NotIntegrable(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(EnergyReport {
        r,
        tau,
        i1,
        i2,
        i3,
        f_mu,
        e1_mu,
        e2,
        h_r,
        mu,
        mu_value,
    })
}

#[cfg(test)]
mod tests;
