//! Explicit constants of the complete-blow-up subsolution construction for
//! the exponential variant with the lemma1 kernel.
//!
//! All comparisons are carried out in log space: Ũ(t) = e^(σ/t) overflows
//! long before the inequality stops being meaningful.

use serde::{Deserialize, Serialize};

use super::thresholds::alpha_ell;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Params {
    pub sigma: f64,
    pub ell: f64,
    pub dim: usize,
}

impl Lemma1Params {
    pub fn new(sigma: f64, ell: f64, dim: usize) -> Self {
        Lemma1Params { sigma, ell, dim }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !(self.ell > 1.0) || self.dim == 0 {
            return Err(Error::domain(format!(
                "lemma1 needs sigma > 0, ell > 1, N >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// ℓ(N+2) − N.
    pub fn weight(&self) -> f64 {
        self.ell * (self.dim as f64 + 2.0) - self.dim as f64
    }
}

/// ln c with c = exp((1−ℓ)σ/τ − ½(ℓ(N+2)−N) ln τ).
pub fn ln_lemma1_constant(p: &Lemma1Params, tau: f64) -> Result<f64> {
    p.validate()?;
    if !(tau > 0.0) {
        return Err(Error::domain(format!("tau must be positive, got {tau}")));
    }
    Ok((1.0 - p.ell) * p.sigma / tau - 0.5 * p.weight() * tau.ln())
}

pub fn lemma1_constant(p: &Lemma1Params, tau: f64) -> Result<f64> {
    ln_lemma1_constant(p, tau).map(f64::exp)
}

/// Sampling of (0, τ] × [0, Ũ(t)].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    /// t-nodes, log-spaced from τ·10^(−decades) to τ.
    pub n_t: usize,
    pub decades: f64,
    /// ρ-nodes per t-row, linear on [0, Ũ(t)].
    pub n_rho: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid {
            n_t: 240,
            decades: 6.0,
            n_rho: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ScanVerdict {
    Holds,
    /// First failing node; ρ is reported as the fraction s of Ũ(t) and ln ρ.
    Fails { t: f64, rho_fraction: f64, ln_rho: f64 },
}

impl ScanVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ScanVerdict::Holds)
    }
}

const SLACK: f64 = 1e-12;

/// ln(eˣ + 1) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Checks c t^α (ρ^ℓ + 1) ≥ h(t) e^ρ at one node, ρ = s·Ũ(t).
fn node_holds(p: &Lemma1Params, ln_c: f64, alpha: f64, t: f64, s: f64) -> bool {
    let x = p.sigma / t;
    // ln Ũ(t) = σ/t exactly
    let ln_rho = if s > 0.0 { s.ln() + x } else { f64::NEG_INFINITY };
    let lhs = ln_c + alpha * t.ln() + softplus(p.ell * ln_rho);
    // ln h(t) + ρ = ln σ − 2 ln t + σ/t − (1 − s) e^(σ/t)
    let gap = if s >= 1.0 { 0.0 } else { (1.0 - s) * x.exp() };
    let rhs = p.sigma.ln() - 2.0 * t.ln() + x - gap;
    lhs >= rhs + (1.0 - SLACK).ln()
}

fn t_nodes(tau: f64, grid: &ScanGrid) -> Vec<f64> {
    let n = grid.n_t.max(2);
    (0..n)
        .map(|i| tau * 10f64.powf(-grid.decades * (n - 1 - i) as f64 / (n - 1) as f64))
        .collect()
}

/// Full scan of the subsolution inequality with c from [`lemma1_constant`].
pub fn verify_subsolution_inequality(p: &Lemma1Params, tau: f64, grid: &ScanGrid) -> Result<ScanVerdict> {
    scan(p, tau, grid, false)
}

/// Scan restricted to the boundary row ρ = Ũ(t).
pub fn verify_boundary_row(p: &Lemma1Params, tau: f64, grid: &ScanGrid) -> Result<ScanVerdict> {
    scan(p, tau, grid, true)
}

fn scan(p: &Lemma1Params, tau: f64, grid: &ScanGrid, boundary_only: bool) -> Result<ScanVerdict> {
    if grid.n_t == 0 || grid.n_rho == 0 {
        return Err(Error::domain("empty scan grid"));
    }
    let ln_c = ln_lemma1_constant(p, tau)?;
    let alpha = alpha_ell(p.dim, p.ell)?;
    let n_rho = grid.n_rho.max(2);
    for t in t_nodes(tau, grid) {
        let fractions: Box<dyn Iterator<Item = f64>> = if boundary_only {
            Box::new(std::iter::once(1.0))
        } else {
            Box::new((0..n_rho).map(move |j| j as f64 / (n_rho - 1) as f64))
        };
        for s in fractions {
            if !node_holds(p, ln_c, alpha, t, s) {
                return Ok(ScanVerdict::Fails {
                    t,
                    rho_fraction: s,
                    ln_rho: if s > 0.0 { s.ln() + p.sigma / t } else { f64::NEG_INFINITY },
                });
            }
        }
    }
    Ok(ScanVerdict::Holds)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaResult {
    pub beta: f64,
    pub tau_star: f64,
    /// Every τ tested, with its verdict, in test order.
    pub trail: Vec<(f64, bool)>,
}

/// Largest τ* in `[tau_lo, tau_hi]` (by bisection) for which the scan holds;
/// returns β = τ*/σ.
pub fn find_beta(p: &Lemma1Params, tau_lo: f64, tau_hi: f64, grid: &ScanGrid) -> Result<BetaResult> {
    if !(tau_lo > 0.0 && tau_hi >= tau_lo) {
        return Err(Error::domain(format!("bad tau bracket [{tau_lo}, {tau_hi}]")));
    }
    let mut trail = Vec::new();
    let mut test = |tau: f64| -> Result<bool> {
        let ok = verify_subsolution_inequality(p, tau, grid)?.holds();
        trail.push((tau, ok));
        Ok(ok)
    };
    if !test(tau_lo)? {
        return Err(Error::NotFound(format!(
            "subsolution inequality fails already at tau = {tau_lo} (sigma = {}, ell = {}, N = {})",
            p.sigma, p.ell, p.dim
        )));
    }
    let tau_star = if tau_hi == tau_lo || test(tau_hi)? {
        tau_hi
    } else {
        let (mut lo, mut hi) = (tau_lo, tau_hi);
        while hi - lo > 1e-10 * hi {
            let mid = 0.5 * (lo + hi);
            if test(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok(BetaResult {
        beta: tau_star / p.sigma,
        tau_star,
        trail,
    })
}
