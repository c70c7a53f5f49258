use serde::{Deserialize, Serialize};

use super::kernel::AbsorptionKernel;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum Nonlinearity {
    /// ∂ₜu − Δu + h(t)uᵠ = 0
    Power { q: f64 },
    /// ∂ₜu − Δu + h(t)eᵘ = 0
    Exponential,
    /// ∂ₜu − Δuᵐ + h(t)uᵠ = 0
    Porous { m: f64, q: f64 },
    /// ∂ₜv − Δv + h(t)(|v|^(q−1)v + 1) = 0, the comparison equation built
    /// from the lemma1 kernel constants.
    ShiftedPower { q: f64 },
}

impl Nonlinearity {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Nonlinearity::Power { q } | Nonlinearity::ShiftedPower { q } if !(q > 1.0) => {
                Err(Error::domain(format!("absorption exponent must satisfy q > 1, got {q}")))
            }
            Nonlinearity::Porous { m, q } if !(q > m && m > 1.0) => Err(Error::domain(format!(
                "porous variant needs q > m > 1, got m = {m}, q = {q}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn diffusion_exponent(&self) -> f64 {
        match *self {
            Nonlinearity::Porous { m, .. } => m,
            _ => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub dim: usize,
    pub nonlinearity: Nonlinearity,
    pub kernel: AbsorptionKernel,
    /// Outer radius R of the truncated domain.
    pub radius: f64,
    /// Time horizon T.
    pub horizon: f64,
}

impl ProblemSpec {
    pub fn new(dim: usize, nonlinearity: Nonlinearity, kernel: AbsorptionKernel, horizon: f64) -> Self {
        let radius = Self::default_radius(dim, horizon);
        ProblemSpec {
            dim,
            nonlinearity,
            kernel,
            radius,
            horizon,
        }
    }

    /// max(6√T, 1), widened by a quarter per extra dimension.
    pub fn default_radius(dim: usize, horizon: f64) -> f64 {
        (6.0 * horizon.sqrt()).max(1.0) * (1.0 + 0.25 * (dim.max(1) - 1) as f64)
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        if !(self.radius > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::domain(format!(
                "need R > 0 and T > 0, got R = {}, T = {}",
                self.radius, self.horizon
            )));
        }
        self.nonlinearity.validate()?;
        self.kernel.validate()
    }
}

/// Value of a flat supersolution; `Infinite` when the primitive of h vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Barrier {
    Finite(f64),
    Infinite,
}

impl Barrier {
    pub fn value(&self) -> f64 {
        match self {
            Barrier::Finite(v) => *v,
            Barrier::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Barrier::Finite(v) => Some(*v),
            Barrier::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Barrier::Infinite)
    }
}

/// ((q−1)H)^(−1/(q−1)) from a known primitive value.
pub fn power_barrier(q: f64, primitive: f64) -> Barrier {
    if primitive <= 0.0 {
        return Barrier::Infinite;
    }
    let u = ((q - 1.0) * primitive).powf(-1.0 / (q - 1.0));
    if u.is_finite() {
        Barrier::Finite(u)
    } else {
        Barrier::Infinite
    }
}

/// −ln H from a known primitive value.
pub fn exponential_barrier(primitive: f64) -> Barrier {
    if primitive <= 0.0 {
        Barrier::Infinite
    } else {
        Barrier::Finite(-primitive.ln())
    }
}

/// U(t) = ((q−1)∫₀ᵗ h)^(−1/(q−1)) for the power and porous variants.
pub fn eval_u(spec: &ProblemSpec, t: f64) -> Result<Barrier> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("U requested at t = {t}")));
    }
    let q = match spec.nonlinearity {
        Nonlinearity::Power { q } | Nonlinearity::Porous { q, .. } => q,
        other => {
            return Err(Error::WrongVariant(format!(
                "U is the flat supersolution of power/porous problems, not {other:?}"
            )))
        }
    };
    Ok(power_barrier(q, spec.kernel.primitive(t)?))
}

/// Ũ(t) = −ln ∫₀ᵗ h for the exponential variant.
pub fn eval_utilde(spec: &ProblemSpec, t: f64) -> Result<Barrier> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("Ũ requested at t = {t}")));
    }
    if spec.nonlinearity != Nonlinearity::Exponential {
        return Err(Error::WrongVariant(format!(
            "Ũ belongs to the exponential variant, not {:?}",
            spec.nonlinearity
        )));
    }
    Ok(exponential_barrier(spec.kernel.primitive(t)?))
}

/// The flat supersolution matching the problem's variant, if it has one.
pub fn flat_supersolution(spec: &ProblemSpec, t: f64) -> Result<Option<Barrier>> {
    match spec.nonlinearity {
        Nonlinearity::Power { .. } | Nonlinearity::Porous { .. } => eval_u(spec, t).map(Some),
        Nonlinearity::Exponential => eval_utilde(spec, t).map(Some),
        Nonlinearity::ShiftedPower { .. } => Ok(None),
    }
}
