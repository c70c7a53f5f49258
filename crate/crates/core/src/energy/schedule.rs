//! Bookkeeping of the iterated energy estimate: M_k = e^(e^k), the radii
//! r_k (supplied, or the proxy b_k), the widths τ_k and their tail sums.
//! The constants are free parameters; nothing here is a verified bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::OmegaSpec;
use crate::quadrature;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleParams {
    pub eps0: f64,
    pub c2: f64,
    pub c4: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    pub k_min: u32,
    pub k_max: u32,
    pub omega: OmegaSpec,
    /// Absorption exponent and dimension entering the b_k relation.
    pub q: f64,
    pub dim: usize,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            eps0: 0.25,
            c2: 1.0,
            c4: 1.0,
            c8: 1.0,
            c9: 1.0,
            c10: 1.0,
            k_min: 1,
            k_max: 20,
            omega: OmegaSpec::power(1.0, 0.5),
            q: 2.0,
            dim: 1,
        }
    }
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        let e_inv = (-1.0f64).exp();
        if !(self.eps0 > 0.0 && self.eps0 < e_inv) {
            return Err(Error::domain(format!("eps0 must lie in (0, 1/e), got {}", self.eps0)));
        }
        for (name, v) in [("c2", self.c2), ("c4", self.c4), ("c8", self.c8), ("c9", self.c9), ("c10", self.c10)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.k_min > self.k_max || self.k_max > 700 {
            return Err(Error::domain(format!("need k_min <= k_max <= 700, got {}..{}", self.k_min, self.k_max)));
        }
        if !(self.q > 1.0) || self.dim == 0 {
            return Err(Error::domain("schedule needs q > 1 and N >= 1"));
        }
        self.omega.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RkSource {
    /// One radius per k in k_min..=k_max.
    Supplied { r: Vec<f64> },
    /// The proxy b_k from the transcendental relation.
    Bound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub k: u32,
    /// ln M_k = e^k.
    pub ln_mk: f64,
    /// None once e^(e^k) overflows.
    pub m_k: Option<f64>,
    pub r_k: f64,
    pub tau_k: f64,
    /// c₈√ω(c₉e^(−k)).
    pub bound: f64,
    /// τ_k / √ω(c₉e^(−k)).
    pub implied_c8: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub n: u32,
    /// τ*(n) = Σ_{i=n}^{k_max} τ_i.
    pub tau_star: f64,
    /// Σ_{i=n}^{k_max} c₈√ω(c₉e^(−i)).
    pub bound_sum: f64,
    /// c₁₀ ∫ √ω(s)/s ds over [c₉e^(−k_max), c₉e^(−n)].
    pub integral: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub rows: Vec<ScheduleRow>,
    pub tails: Vec<TailRow>,
}

/// τ = 8√(r((1−ε₀)e^k + ln(c₂/r))), from c₂r⁻¹e^(−τ²/64r)M_k = M_k^ε₀.
fn tau_of(p: &ScheduleParams, k: u32, r: f64) -> Result<f64> {
    let inner = (1.0 - p.eps0) * (k as f64).exp() + (p.c2 / r).ln();
    if !(r > 0.0) || !(inner >= 0.0) {
        return Err(Error::domain(format!("no real tau_k for k = {k}, r = {r}")));
    }
    Ok(8.0 * (r * inner).sqrt())
}

/// ln LHS − ln RHS of c₄(√(b((1−ε₀)e^k + ln(c₂/b))) + 1/k)^N (ω(b)e^(ω(b)/b)/b²)^(2/(q−1)) = 2e^(ε₀e^k).
fn b_relation(p: &ScheduleParams, k: u32, ln_b: f64) -> Result<f64> {
    let b = ln_b.exp();
    let ek = (k as f64).exp();
    let w = p.omega.eval(b)?;
    let inner = (b * ((1.0 - p.eps0) * ek + (p.c2 / b).ln())).max(0.0).sqrt() + 1.0 / k as f64;
    let lhs = p.c4.ln() + p.dim as f64 * inner.ln() + 2.0 / (p.q - 1.0) * (w.ln() + w / b - 2.0 * ln_b);
    Ok(lhs - 2f64.ln() - p.eps0 * ek)
}

/// Largest b ∈ (0, 1] solving the relation, by a downward scan in ln b and bisection.
pub fn solve_b(p: &ScheduleParams, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("b_k needs k >= 1"));
    }
    let mut hi = 0.0;
    if b_relation(p, k, hi)? > 0.0 {
        return Err(Error::NotFound(format!("b_k relation has no root in (0, 1] for k = {k}")));
    }
    let mut lo = hi;
    loop {
        lo -= 0.5;
        if lo < -690.0 {
            return Err(Error::NotFound(format!("b_k relation does not change sign above b = e^-690 for k = {k}")));
        }
        if b_relation(p, k, lo)? > 0.0 {
            break;
        }
        hi = lo;
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if b_relation(p, k, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi.exp())
}

pub fn schedule(p: &ScheduleParams, source: &RkSource) -> Result<Schedule> {
    p.validate()?;
    let ks: Vec<u32> = (p.k_min..=p.k_max).collect();
    if let RkSource::Supplied { r } = source {
        if r.len() != ks.len() {
            return Err(Error::domain(format!("{} radii supplied for {} values of k", r.len(), ks.len())));
        }
    }
    let mut rows = Vec::with_capacity(ks.len());
    for (i, &k) in ks.iter().enumerate() {
        let r_k = match source {
            RkSource::Supplied { r } => r[i],
            RkSource::Bound => solve_b(p, k)?,
        };
        let tau_k = tau_of(p, k, r_k)?;
        let root = p.omega.eval(p.c9 * (-(k as f64)).exp())?.sqrt();
        let ln_mk = (k as f64).exp();
        let m = ln_mk.exp();
        rows.push(ScheduleRow {
            k,
            ln_mk,
            m_k: m.is_finite().then_some(m),
            r_k,
            tau_k,
            bound: p.c8 * root,
            implied_c8: tau_k / root,
        });
    }
    let top = p.k_max as f64;
    let mut tails = Vec::with_capacity(ks.len());
    for (i, &n) in ks.iter().enumerate() {
        let tau_star = rows[i..].iter().map(|r| r.tau_k).sum();
        let bound_sum = rows[i..].iter().map(|r| r.bound).sum();
        // s = c₉eˣ turns ∫√ω(s)/s ds into ∫√ω(c₉eˣ) dx
        let mut failure = None;
        let est = quadrature::integrate(
            |x| match p.omega.eval(p.c9 * x.exp()) {
                Ok(v) => v.sqrt(),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            -top,
            -(n as f64),
            1e-300,
            1e-10,
            2000,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        tails.push(TailRow {
            n,
            tau_star,
            bound_sum,
            integral: p.c10 * est.value,
        });
    }
    Ok(Schedule { rows, tails })
}
