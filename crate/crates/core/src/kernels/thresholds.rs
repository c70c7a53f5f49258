//! Dini-type integrability thresholds and the exponents attached to them.

use serde::{Deserialize, Serialize};

use super::kernel::AbsorptionKernel;
use super::omega::OmegaSpec;
use crate::error::{Error, Result};
use crate::quadrature;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", content = "value", rename_all = "kebab-case")]
pub enum DiniClass {
    Finite(f64),
    Divergent,
    Undecided,
}

/// Geometric cutoffs 2^(-j), j = 1..=n.
pub fn dyadic_cutoffs(n: usize) -> Vec<f64> {
    (1..=n).map(|j| 0.5f64.powi(j as i32)).collect()
}

/// Classifies ∫₀¹ ω(t)^e / t dt.
///
/// Constant and power families are decided exactly. Tabulated families use
/// the increments over the cutoff schedule: divergent when the last four
/// increments do not shrink, finite when they shrink with ratio at most
/// 0.9 (the returned value then adds the geometric tail), undecided
/// otherwise. The tabulated verdict is a heuristic.
pub fn dini_classify(omega: &OmegaSpec, exponent: f64, cutoffs: &[f64]) -> Result<DiniClass> {
    if !(exponent > 0.0 && exponent <= 1.0) {
        return Err(Error::domain(format!("Dini exponent must lie in (0, 1], got {exponent}")));
    }
    if cutoffs.iter().any(|c| !(*c > 0.0 && *c <= 1.0)) || cutoffs.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::domain("cutoff schedule must be strictly decreasing in (0, 1]"));
    }
    match omega {
        OmegaSpec::Constant { .. } => Ok(DiniClass::Divergent),
        OmegaSpec::Power { a, alpha } => {
            let p = alpha * exponent;
            if p > 0.0 {
                Ok(DiniClass::Finite(a.powf(exponent) / p))
            } else {
                Ok(DiniClass::Divergent)
            }
        }
        OmegaSpec::Tabulated { .. } => {
            if cutoffs.len() < 5 {
                return Err(Error::InsufficientData(
                    "tabulated Dini classification needs at least five cutoffs".into(),
                ));
            }
            let (lo, hi) = omega.coverage();
            let last = cutoffs[cutoffs.len() - 1];
            if lo > last || hi < 1.0 {
                return Err(Error::InsufficientData(format!(
                    "tabulated omega covers [{lo}, {hi}] but the schedule needs [{last}, 1]"
                )));
            }
            let piece = |a: f64, b: f64| -> Result<f64> {
                // substitute t = e^s so the 1/t weight disappears
                let mut failure = None;
                let est = quadrature::integrate(
                    |s: f64| match omega.eval(s.exp()) {
                        Ok(w) => w.powf(exponent),
                        Err(e) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    },
                    a.ln(),
                    b.ln(),
                    1e-300,
                    1e-12,
                    400,
                )?;
                match failure {
                    Some(e) => Err(e),
                    None => Ok(est.value),
                }
            };
            let mut total = piece(cutoffs[0], 1.0)?;
            let mut increments = Vec::with_capacity(cutoffs.len() - 1);
            for w in cutoffs.windows(2) {
                let inc = piece(w[1], w[0])?;
                total += inc;
                increments.push(inc);
            }
            let tail = &increments[increments.len() - 4..];
            let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
            if tail.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)) {
                Ok(DiniClass::Divergent)
            } else if ratios.iter().all(|r| *r <= 0.9) {
                let rho = ratios[ratios.len() - 1];
                Ok(DiniClass::Finite(total + tail[3] * rho / (1.0 - rho)))
            } else {
                Ok(DiniClass::Undecided)
            }
        }
    }
}

/// θ = (m² − 1) / ((N(m − 1) + 2(m + 1))(q − 1)).
pub fn theta_exponent(m: f64, q: f64, dim: usize) -> Result<f64> {
    if !(m > 1.0 && q > m) || dim == 0 {
        return Err(Error::domain(format!(
            "theta needs q > m > 1 and N >= 1, got m = {m}, q = {q}, N = {dim}"
        )));
    }
    let n = dim as f64;
    let theta = (m * m - 1.0) / ((n * (m - 1.0) + 2.0 * (m + 1.0)) * (q - 1.0));
    assert!(theta > 0.0 && theta < 1.0, "theta = {theta} outside (0, 1)");
    Ok(theta)
}

/// Time weight exponent α_ℓ = (ℓ − 1)(N + 2)/2 − 1 that makes
/// A t^(−(1+N/2)) f(x/√t) a self-similar solution of ∂ₜv − Δv + c t^α vℓ = 0.
pub fn alpha_ell(dim: usize, ell: f64) -> Result<f64> {
    if !(ell > 1.0) || dim == 0 {
        return Err(Error::domain(format!("alpha_ell needs ell > 1, N >= 1, got ell = {ell}")));
    }
    Ok((ell - 1.0) * (dim as f64 + 2.0) / 2.0 - 1.0)
}

/// ℓ* = (N + 4)/(N + 2), the exponent with α_ℓ* = 0.
pub fn ell_star(dim: usize) -> f64 {
    let n = dim as f64;
    (n + 4.0) / (n + 2.0)
}

/// Probes lim_{t→0} t^(N/2)·(−ln h(t)) = ∞ on t = 10^(−j), j = 1..=12:
/// admissible when the probe values are nondecreasing over the last four
/// decades and the final value exceeds 1e3.
pub fn exponential_admissible(kernel: &AbsorptionKernel, dim: usize) -> Result<bool> {
    let mut values = Vec::with_capacity(12);
    for j in 1..=12 {
        let t = 10f64.powi(-j);
        let b = -kernel.ln_h(t)?;
        values.push(t.powf(dim as f64 / 2.0) * b);
    }
    let tail = &values[values.len() - 4..];
    Ok(tail.windows(2).all(|w| w[1] >= w[0]) && tail[3] > 1e3)
}

/// Integrability probe for h ∈ L¹((0,1); t^(−(q−1)/(m−1+2/N)) dt), the
/// existence condition quoted for the porous variant. Increments over the
/// cutoff schedule are classified like the tabulated Dini case.
pub fn porous_admissibility(
    kernel: &AbsorptionKernel,
    m: f64,
    q: f64,
    dim: usize,
    cutoffs: &[f64],
) -> Result<DiniClass> {
    if cutoffs.len() < 5 {
        return Err(Error::InsufficientData("admissibility probe needs five cutoffs".into()));
    }
    let weight = -(q - 1.0) / (m - 1.0 + 2.0 / dim as f64);
    let piece = |a: f64, b: f64| -> Result<f64> {
        let mut failure = None;
        let est = quadrature::integrate(
            |s: f64| {
                let t = s.exp();
                match kernel.eval_h(t) {
                    Ok(h) => h * t.powf(weight) * t,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            a.ln(),
            b.ln(),
            1e-300,
            1e-10,
            400,
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(est.value),
        }
    };
    let mut total = piece(cutoffs[0], 1.0)?;
    let mut inc = Vec::new();
    for w in cutoffs.windows(2) {
        let v = piece(w[1], w[0])?;
        total += v;
        inc.push(v);
    }
    let tail = &inc[inc.len() - 4..];
    if tail.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)) {
        Ok(DiniClass::Divergent)
    } else if tail.windows(2).all(|w| w[1] <= 0.9 * w[0]) {
        Ok(DiniClass::Finite(total))
    } else {
        Ok(DiniClass::Undecided)
    }
}
