//! Very singular self-similar profiles of
//! f″ + ((N−1)/η + η/2) f′ + ((N+2)/2)(f − f^ℓ) = 0, f′(0) = 0,
//! found by shooting on f(0), and the space-time field built from them.

mod dopri;

use serde::{Deserialize, Serialize};

pub use dopri::Dopri5;
use crate::error::{Error, Result};

/// Sample spacing in η.
pub const SAMPLE_STEP: f64 = 0.005;
/// Default classification horizon.
pub const ETA_MAX: f64 = 20.0;
const ETA_START: f64 = 1e-4;
const SPLICE_CAP: f64 = 12.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ShootOutcome {
    /// f reached 0 at η.
    Overshoot { eta: f64 },
    /// f stayed positive; `eta_min` is where it turned upward, if it did.
    Undershoot { eta_min: Option<f64>, final_value: f64 },
    /// Positive throughout and below 1e−10 at η_max.
    Decaying,
}

impl ShootOutcome {
    pub fn crosses_zero(&self) -> bool {
        matches!(self, ShootOutcome::Overshoot { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub outcome: ShootOutcome,
    /// Samples up to the point where the classification was decided.
    pub eta: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
}

fn check_args(dim: usize, ell: f64) -> Result<()> {
    if dim == 0 || !(ell > 1.0) {
        return Err(Error::domain(format!("profile needs N >= 1 and ell > 1, got N = {dim}, ell = {ell}")));
    }
    Ok(())
}

/// Integrates the profile ODE from f(0) = a, f′(0) = 0.
pub fn shoot(dim: usize, ell: f64, a: f64, eta_max: f64) -> Result<Shot> {
    check_args(dim, ell)?;
    if !(a > 0.0 && a <= 1.0) || !(eta_max >= 10.0) {
        return Err(Error::domain(format!("shoot needs 0 < a <= 1 and eta_max >= 10, got a = {a}, eta_max = {eta_max}")));
    }
    let n = dim as f64;
    let beta = (n + 2.0) / 2.0;
    let rhs = |eta: f64, y: &dopri::State| -> dopri::State {
        let (f, g) = (y[0], y[1]);
        [g, -((n - 1.0) / eta + eta / 2.0) * g - beta * (f - f.abs().powf(ell - 1.0) * f)]
    };
    // f ≈ a + f″(0)η²/2 with N f″(0) = −β(a − a^ℓ)
    let f2 = -beta * (a - a.powf(ell)) / n;
    let mut y = [a + 0.5 * f2 * ETA_START * ETA_START, f2 * ETA_START];
    let mut solver = Dopri5::new(1e-12, 1e-30, 1e-4);
    let mut shot = Shot {
        outcome: ShootOutcome::Decaying,
        eta: vec![0.0],
        f: vec![a],
        df: vec![0.0],
    };
    let samples = (eta_max / SAMPLE_STEP).round() as usize;
    let mut eta = ETA_START;
    for j in 1..=samples {
        let target = j as f64 * SAMPLE_STEP;
        y = solver.advance(&rhs, eta, y, target).ok_or_else(|| Error::StepFailure {
            t: eta,
            reason: format!("profile integration failed (N = {dim}, ell = {ell}, a = {a})"),
        })?;
        eta = target;
        shot.eta.push(eta);
        shot.f.push(y[0]);
        shot.df.push(y[1]);
        if y[0] <= 0.0 {
            let (f0, e0) = (shot.f[j - 1], shot.eta[j - 1]);
            let cross = e0 + SAMPLE_STEP * f0 / (f0 - y[0]);
            shot.outcome = ShootOutcome::Overshoot { eta: cross };
            return Ok(shot);
        }
        if y[1] > 0.0 {
            shot.outcome = ShootOutcome::Undershoot { eta_min: Some(eta), final_value: y[0] };
            return Ok(shot);
        }
    }
    let last = y[0];
    shot.outcome = if last < 1e-10 {
        ShootOutcome::Decaying
    } else {
        ShootOutcome::Undershoot { eta_min: None, final_value: last }
    };
    Ok(shot)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileResult {
    pub dim: usize,
    pub ell: f64,
    /// a* = f(0).
    pub amplitude: f64,
    /// Final bisection bracket (crossing, non-crossing).
    pub bracket: (f64, f64),
    pub eta: Vec<f64>,
    pub f: Vec<f64>,
    /// f ≈ C η^p e^(−η²/4).
    pub tail_c: f64,
    pub tail_p: f64,
    /// Beyond this η the samples are the fitted tail, not the integrated orbit.
    pub splice_eta: f64,
    /// inf f(η)/((η²+1)e^(−η²/4)) over the samples.
    pub delta_fit: f64,
}

impl ProfileResult {
    pub fn eta_max(&self) -> f64 {
        self.eta[self.eta.len() - 1]
    }

    /// Linear interpolation; 0 beyond η_max.
    pub fn eval(&self, eta: f64) -> f64 {
        let eta = eta.abs();
        if eta > self.eta_max() {
            return 0.0;
        }
        let i = ((eta / SAMPLE_STEP).floor() as usize).min(self.eta.len() - 2);
        let w = (eta - self.eta[i]) / SAMPLE_STEP;
        self.f[i] * (1.0 - w) + self.f[i + 1] * w
    }

    /// max |residual| / max(1, |f″|) over interior samples, derivatives by
    /// fourth-order central differences.
    pub fn residual(&self) -> f64 {
        let n = self.dim as f64;
        let beta = (n + 2.0) / 2.0;
        let h = SAMPLE_STEP;
        let f = &self.f;
        let mut worst = 0.0f64;
        for j in 2..f.len() - 2 {
            let d1 = (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / (12.0 * h);
            let d2 = (-f[j - 2] + 16.0 * f[j - 1] - 30.0 * f[j] + 16.0 * f[j + 1] - f[j + 2]) / (12.0 * h * h);
            let eta = self.eta[j];
            let res = d2 + ((n - 1.0) / eta + eta / 2.0) * d1 + beta * (f[j] - f[j].powf(self.ell));
            worst = worst.max(res.abs() / d2.abs().max(1.0));
        }
        worst
    }
}

/// Least-squares fit of ln f + η²/4 = ln C + p ln η.
fn fit_tail(eta: &[f64], f: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = eta
        .iter()
        .zip(f)
        .filter(|(_, v)| **v > 0.0)
        .map(|(e, v)| (e.ln(), v.ln() + e * e / 4.0))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let p = sxy / sxx;
    ((my - p * mx).exp(), p)
}

/// Bisection on f(0) between crossing and non-crossing orbits until the
/// bracket is narrower than `tolerance`.
pub fn find_profile(dim: usize, ell: f64, tolerance: f64) -> Result<ProfileResult> {
    check_args(dim, ell)?;
    if !(tolerance > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tolerance}")));
    }
    let (mut lo, mut hi) = (1e-6, 1.0);
    if !shoot(dim, ell, lo, ETA_MAX)?.outcome.crosses_zero() {
        return Err(Error::NotFound(format!("no crossing orbit at a = {lo} (N = {dim}, ell = {ell})")));
    }
    if shoot(dim, ell, hi, ETA_MAX)?.outcome.crosses_zero() {
        return Err(Error::NotFound(format!("orbit from a = 1 crosses zero (N = {dim}, ell = {ell})")));
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if shoot(dim, ell, mid, ETA_MAX)?.outcome.crosses_zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let amplitude = 0.5 * (lo + hi);
    let (s_lo, s_hi, s_mid) = (
        shoot(dim, ell, lo, ETA_MAX)?,
        shoot(dim, ell, hi, ETA_MAX)?,
        shoot(dim, ell, amplitude, ETA_MAX)?,
    );
    let common = s_lo.f.len().min(s_hi.f.len()).min(s_mid.f.len());
    let cap = (SPLICE_CAP / SAMPLE_STEP) as usize;
    let mut s = common.min(cap + 1) - 1;
    for j in 1..common.min(cap + 1) {
        if (s_hi.f[j] - s_lo.f[j]).abs() > 1e-6 * s_mid.f[j].abs() {
            s = j - 1;
            break;
        }
    }
    let splice_eta = s as f64 * SAMPLE_STEP;
    let window = (3.0 / SAMPLE_STEP) as usize;
    if s < window + 1 {
        return Err(Error::NumericalFailure {
            what: format!("profile orbits separate too early (eta = {splice_eta}) to fit the tail"),
            estimate: amplitude,
            error_bound: hi - lo,
        });
    }
    let (tail_c, tail_p) = fit_tail(&s_mid.eta[s - window..=s], &s_mid.f[s - window..=s]);
    let samples = (ETA_MAX / SAMPLE_STEP).round() as usize;
    let eta: Vec<f64> = (0..=samples).map(|j| j as f64 * SAMPLE_STEP).collect();
    let f_s = s_mid.f[s];
    let f: Vec<f64> = eta
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            if j <= s {
                s_mid.f[j]
            } else {
                f_s * (e / splice_eta).powf(tail_p) * (-(e * e - splice_eta * splice_eta) / 4.0).exp()
            }
        })
        .collect();
    if let Some((e, v)) = eta.iter().zip(&f).find(|(_, v)| !(**v > 0.0 && **v <= 1.0)) {
        return Err(Error::NumericalFailure {
            what: format!("profile leaves (0, 1] at eta = {e}"),
            estimate: *v,
            error_bound: hi - lo,
        });
    }
    let delta_fit = eta
        .iter()
        .zip(&f)
        .map(|(e, v)| (v.ln() + e * e / 4.0 - (e * e + 1.0).ln()).exp())
        .fold(f64::INFINITY, f64::min);
    Ok(ProfileResult {
        dim,
        ell,
        amplitude,
        bracket: (lo, hi),
        eta,
        f,
        tail_c,
        tail_p,
        splice_eta,
        delta_fit,
    })
}

/// A = ((N+2)/(2c))^(1/(ℓ−1)).
pub fn vss_amplitude(dim: usize, ell: f64, c: f64) -> f64 {
    ((dim as f64 + 2.0) / (2.0 * c)).powf(1.0 / (ell - 1.0))
}

/// A t^(−(1+N/2)) f(|x|/√t); 0 beyond η_max.
pub fn vss_field(dim: usize, ell: f64, c: f64, profile: &ProfileResult, x: f64, t: f64) -> f64 {
    debug_assert!(t > 0.0);
    let n = dim as f64;
    vss_amplitude(dim, ell, c) * t.powf(-(1.0 + n / 2.0)) * profile.eval(x / t.sqrt())
}
