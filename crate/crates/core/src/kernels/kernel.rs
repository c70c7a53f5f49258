use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::omega::{interpolate, parse_params, read_table, validate_table, OmegaSpec};
use crate::error::{Error, Result};
use crate::quadrature;

/// Time-dependent absorption coefficient h(t).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum AbsorptionKernel {
    /// h(t) = exp(-ω(t)/t)
    ExpOmega { omega: OmegaSpec },
    /// h(t) = exp(-exp(ω(t)/t))
    DoubleExp { omega: OmegaSpec },
    /// h(t) = σ t⁻² exp(σ/t) exp(-exp(σ/t)), whose primitive is exp(-exp(σ/t)).
    Lemma1 { sigma: f64 },
    /// h(t) = t^((q-m)/(m-1)) / ω(t)
    PorousThreshold { m: f64, q: f64, omega: OmegaSpec },
    /// h ≡ value; value = 0 gives pure diffusion.
    Constant { value: f64 },
    /// h(t) = coef · t^exponent
    Power { coef: f64, exponent: f64 },
    /// Piecewise linear through the samples, linear to zero below the first sample.
    Tabulated { t: Vec<f64>, value: Vec<f64> },
}

const PANEL_BUDGET: usize = 1100;

impl AbsorptionKernel {
    pub fn exp_omega(omega: OmegaSpec) -> Self {
        AbsorptionKernel::ExpOmega { omega }
    }

    pub fn double_exp(omega: OmegaSpec) -> Self {
        AbsorptionKernel::DoubleExp { omega }
    }

    pub fn lemma1(sigma: f64) -> Self {
        AbsorptionKernel::Lemma1 { sigma }
    }

    pub fn porous_threshold(m: f64, q: f64, omega: OmegaSpec) -> Self {
        AbsorptionKernel::PorousThreshold { m, q, omega }
    }

    pub fn constant(value: f64) -> Self {
        AbsorptionKernel::Constant { value }
    }

    pub fn power(coef: f64, exponent: f64) -> Self {
        AbsorptionKernel::Power { coef, exponent }
    }

    pub fn from_csv(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let (t, value) = read_table(path)?;
        let k = AbsorptionKernel::Tabulated { t, value };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AbsorptionKernel::ExpOmega { omega } | AbsorptionKernel::DoubleExp { omega } => {
                omega.validate()
            }
            AbsorptionKernel::Lemma1 { sigma } if !(*sigma > 0.0) => {
                Err(Error::domain(format!("lemma1 kernel needs sigma > 0, got {sigma}")))
            }
            AbsorptionKernel::PorousThreshold { m, q, omega } => {
                if !(*q > *m && *m > 1.0) {
                    return Err(Error::domain(format!(
                        "porous threshold kernel needs q > m > 1, got m = {m}, q = {q}"
                    )));
                }
                omega.validate()
            }
            AbsorptionKernel::Constant { value } if !(*value >= 0.0) => {
                Err(Error::domain(format!("constant kernel must be >= 0, got {value}")))
            }
            AbsorptionKernel::Power { coef, .. } if !(*coef >= 0.0) => {
                Err(Error::domain(format!("power kernel coefficient must be >= 0, got {coef}")))
            }
            AbsorptionKernel::Tabulated { t, value } => {
                validate_table(t, value)?;
                if value.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::domain("tabulated kernel must be positive"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// ln h(t); `-inf` where h vanishes.
    pub fn ln_h(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("kernel evaluated at t = {t} <= 0")));
        }
        Ok(match self {
            AbsorptionKernel::ExpOmega { omega } => -omega.eval(t)? / t,
            AbsorptionKernel::DoubleExp { omega } => -(omega.eval(t)? / t).exp(),
            AbsorptionKernel::Lemma1 { sigma } => {
                let s = sigma / t;
                sigma.ln() - 2.0 * t.ln() + s - s.exp()
            }
            AbsorptionKernel::PorousThreshold { m, q, omega } => {
                (q - m) / (m - 1.0) * t.ln() - omega.eval(t)?.ln()
            }
            AbsorptionKernel::Constant { value } => value.ln(),
            AbsorptionKernel::Power { coef, exponent } => coef.ln() + exponent * t.ln(),
            AbsorptionKernel::Tabulated { .. } => self.eval_h(t)?.ln(),
        })
    }

    /// h(t). Underflow is returned as exact 0.
    pub fn eval_h(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("kernel evaluated at t = {t} <= 0")));
        }
        match self {
            AbsorptionKernel::Constant { value } => Ok(*value),
            AbsorptionKernel::Power { coef, exponent } => Ok(coef * t.powf(*exponent)),
            AbsorptionKernel::Tabulated { t: ts, value } => {
                if t < ts[0] {
                    Ok(value[0] * t / ts[0])
                } else {
                    interpolate(ts, value, t).ok_or_else(|| {
                        Error::domain(format!(
                            "tabulated kernel ends at t = {}, requested {t}",
                            ts[ts.len() - 1]
                        ))
                    })
                }
            }
            _ => Ok(self.ln_h(t)?.exp()),
        }
    }

    /// Closed-form primitive ∫₀ʳ h where one exists.
    fn closed_form_primitive(&self, r: f64) -> Option<Result<f64>> {
        let power_primitive = |coef: f64, p: f64| {
            if p > -1.0 {
                Ok(coef * r.powf(p + 1.0) / (p + 1.0))
            } else {
                Err(Error::NotIntegrable(format!("h ~ t^{p} near t = 0")))
            }
        };
        match self {
            AbsorptionKernel::Lemma1 { sigma } => Some(Ok((-(sigma / r).exp()).exp())),
            AbsorptionKernel::Constant { value } => Some(Ok(value * r)),
            AbsorptionKernel::Power { coef, exponent } => Some(power_primitive(*coef, *exponent)),
            AbsorptionKernel::PorousThreshold { m, q, omega } => {
                let p = (q - m) / (m - 1.0);
                match omega {
                    OmegaSpec::Constant { sigma } => Some(power_primitive(1.0 / sigma, p)),
                    OmegaSpec::Power { a, alpha } => Some(power_primitive(1.0 / a, p - alpha)),
                    OmegaSpec::Tabulated { .. } => None,
                }
            }
            _ => None,
        }
    }

    /// H(r) = ∫₀ʳ h(s) ds.
    ///
    /// Families without a closed form are integrated on geometric panels
    /// [r 2^(-j-1), r 2^(-j)], stopping once a panel contributes less than
    /// 1e-16 of the running total.
    pub fn primitive(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("primitive requested at r = {r} <= 0")));
        }
        if let Some(h) = self.closed_form_primitive(r) {
            return h;
        }
        self.primitive_by_quadrature(r)
    }

    /// The panel-quadrature route of [`Self::primitive`], usable for every
    /// family (including those with a closed form).
    pub fn primitive_by_quadrature(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain(format!("primitive requested at r = {r} <= 0")));
        }
        let mut total = 0.0;
        let mut err = 0.0;
        let mut zero_run = 0;
        let mut last = f64::NAN;
        let mut growing = 0;
        for j in 0..PANEL_BUDGET {
            let hi = r * 0.5f64.powi(j as i32);
            let lo = 0.5 * hi;
            let mut failure = None;
            let panel = quadrature::integrate(
                |t| match self.eval_h(t) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                },
                lo,
                hi,
                0.0,
                1e-11,
                200,
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            total += panel.value;
            err += panel.error;
            if panel.value == 0.0 {
                zero_run += 1;
                if zero_run >= 8 {
                    return Ok(total);
                }
            } else {
                zero_run = 0;
                if panel.value < 1e-16 * total {
                    return Ok(total);
                }
            }
            if j > 0 && panel.value >= 0.999 * last && panel.value > 0.0 {
                growing += 1;
                if growing >= 12 {
                    return Err(Error::NotIntegrable(format!(
                        "panel contributions stopped decaying near t = {lo:e}"
                    )));
                }
            } else {
                growing = 0;
            }
            last = panel.value;
        }
        Err(Error::NumericalFailure {
            what: "primitive of h: panel budget exhausted".into(),
            estimate: total,
            error_bound: err + last * 2.0,
        })
    }

    /// ∫ₐᵇ h(s) ds for 0 < a < b, adaptive on the single interval.
    pub fn increment(&self, a: f64, b: f64) -> Result<f64> {
        if !(a > 0.0) || !(b >= a) {
            return Err(Error::domain(format!("kernel increment over [{a}, {b}]")));
        }
        if a == b {
            return Ok(0.0);
        }
        match self {
            AbsorptionKernel::Constant { value } => return Ok(value * (b - a)),
            AbsorptionKernel::Power { coef, exponent } if *exponent != -1.0 => {
                let e = exponent + 1.0;
                return Ok(coef * (b.powf(e) - a.powf(e)) / e);
            }
            _ => {}
        }
        let mut failure = None;
        let est = quadrature::integrate(
            |t| match self.eval_h(t) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            a,
            b,
            1e-300,
            1e-12,
            400,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(est.value)
    }

    /// ω descriptor when the family carries one.
    pub fn omega(&self) -> Option<&OmegaSpec> {
        match self {
            AbsorptionKernel::ExpOmega { omega }
            | AbsorptionKernel::DoubleExp { omega }
            | AbsorptionKernel::PorousThreshold { omega, .. } => Some(omega),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, AbsorptionKernel::Constant { value } if *value == 0.0)
            || matches!(self, AbsorptionKernel::Power { coef, .. } if *coef == 0.0)
    }
}

impl fmt::Display for AbsorptionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbsorptionKernel::ExpOmega { omega } => write!(f, "exp-omega[{omega}]"),
            AbsorptionKernel::DoubleExp { omega } => write!(f, "double-exp[{omega}]"),
            AbsorptionKernel::Lemma1 { sigma } => write!(f, "lemma1:sigma={sigma}"),
            AbsorptionKernel::PorousThreshold { m, q, omega } => {
                write!(f, "porous-threshold:m={m},q={q}[{omega}]")
            }
            AbsorptionKernel::Constant { value } => write!(f, "constant:value={value}"),
            AbsorptionKernel::Power { coef, exponent } => {
                write!(f, "power:coef={coef},exponent={exponent}")
            }
            AbsorptionKernel::Tabulated { t, .. } => write!(f, "tabulated:{}-points", t.len()),
        }
    }
}

/// Parses `family:params` with the ω descriptor after a `;`, e.g.
/// `exp-omega;power:a=1,alpha=0.5`, `lemma1:sigma=1`, `constant:value=0`,
/// `porous-threshold:m=2,q=3;power:a=1,alpha=2.3333`, `tabulated:path=h.csv`.
impl FromStr for AbsorptionKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, omega) = match s.split_once(';') {
            Some((h, w)) => (h, Some(w.parse::<OmegaSpec>()?)),
            None => (s, None),
        };
        let (family, rest) = head.split_once(':').unwrap_or((head, ""));
        let params = parse_params(rest)?;
        let raw = |key: &str| params.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
        let num = |key: &str| -> Result<f64> {
            let v = raw(key).ok_or_else(|| Error::Config(format!("kernel '{s}' is missing '{key}'")))?;
            v.parse()
                .map_err(|_| Error::Config(format!("kernel parameter {key} = '{v}' is not a number")))
        };
        let need_omega = || {
            omega
                .clone()
                .ok_or_else(|| Error::Config(format!("kernel '{s}' needs an omega after ';'")))
        };
        let k = match family.trim() {
            "exp-omega" => AbsorptionKernel::ExpOmega { omega: need_omega()? },
            "double-exp" => AbsorptionKernel::DoubleExp { omega: need_omega()? },
            "lemma1" => AbsorptionKernel::Lemma1 { sigma: num("sigma")? },
            "porous-threshold" => AbsorptionKernel::PorousThreshold {
                m: num("m")?,
                q: num("q")?,
                omega: need_omega()?,
            },
            "constant" => AbsorptionKernel::Constant { value: num("value")? },
            "power" => AbsorptionKernel::Power {
                coef: num("coef")?,
                exponent: num("exponent")?,
            },
            "tabulated" => {
                let path = raw("path")
                    .ok_or_else(|| Error::Config(format!("kernel '{s}' is missing 'path'")))?;
                return AbsorptionKernel::from_csv(path);
            }
            other => return Err(Error::Config(format!("unknown kernel family '{other}'"))),
        };
        k.validate()?;
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn eval_examples() {
        let k = AbsorptionKernel::exp_omega(OmegaSpec::constant(1.0));
        assert!(rel(k.eval_h(1.0).unwrap(), (-1.0f64).exp()) < 1e-15);
        let k = AbsorptionKernel::lemma1(1.0);
        // 4 e^(2 - e^2); mpmath at 30 digits gives 0.0182651256805116625753
        assert!(rel(k.eval_h(0.5).unwrap(), 0.018_265_125_680_511_66) < 1e-13);
        let k = AbsorptionKernel::porous_threshold(2.0, 3.0, OmegaSpec::constant(1.0));
        assert!(rel(k.eval_h(0.25).unwrap(), 0.25) < 1e-15);
    }

    #[test]
    fn underflow_is_exact_zero() {
        let k = AbsorptionKernel::lemma1(1.0);
        assert_eq!(k.eval_h(1e-3).unwrap(), 0.0);
        let k = AbsorptionKernel::double_exp(OmegaSpec::constant(1.0));
        assert_eq!(k.eval_h(1e-3).unwrap(), 0.0);
        assert!(k.eval_h(0.0).is_err());
        assert!(k.eval_h(-1.0).is_err());
    }

    #[test]
    fn primitive_examples() {
        let k = AbsorptionKernel::lemma1(1.0);
        assert!(rel(k.primitive(1.0).unwrap(), (-(1.0f64).exp()).exp()) < 1e-14);
        assert!(rel(k.primitive(1.0).unwrap(), 0.065_988_0) < 1e-5);
        assert_eq!(AbsorptionKernel::constant(1.0).primitive(0.5).unwrap(), 0.5);
    }

    #[test]
    fn lower_bound_with_c0_half() {
        let k = AbsorptionKernel::exp_omega(OmegaSpec::constant(1.0));
        let r: f64 = 0.2;
        let h = k.primitive(r).unwrap();
        assert!(h >= 0.5 * (-1.0 / r).exp() * r * r / 1.0);
    }

    #[test]
    fn non_integrable_is_flagged() {
        let k = AbsorptionKernel::porous_threshold(2.0, 3.0, OmegaSpec::power(1.0, 7.0 / 3.0));
        assert!(matches!(k.primitive(0.5), Err(Error::NotIntegrable(_))));
        let k = AbsorptionKernel::power(1.0, -1.5);
        assert!(matches!(k.primitive(0.5), Err(Error::NotIntegrable(_))));
    }

    #[test]
    fn quadrature_path_detects_divergence() {
        // tabulated omega keeps the porous threshold kernel off the closed-form path
        let t: Vec<f64> = (0..200).map(|i| 1e-9 * 1.12f64.powi(i)).take_while(|t| *t < 2.0).collect();
        let w: Vec<f64> = t.iter().map(|t| t * t).collect();
        let k = AbsorptionKernel::porous_threshold(2.0, 3.0, OmegaSpec::tabulated(t, w).unwrap());
        assert!(k.primitive(0.5).is_err());
    }

    #[test]
    fn lemma1_quadrature_matches_closed_form() {
        let k = AbsorptionKernel::lemma1(1.0);
        for i in 0..=19 {
            let r = 0.05 + 0.05 * i as f64;
            let q = k.primitive_by_quadrature(r).unwrap();
            let c = k.primitive(r).unwrap();
            assert!(q == c || rel(q, c) < 1e-7, "r = {r}: {q} vs {c}");
        }
    }

    #[test]
    fn primitive_monotone_and_vanishing() {
        let kernels = [
            AbsorptionKernel::exp_omega(OmegaSpec::constant(1.0)),
            AbsorptionKernel::exp_omega(OmegaSpec::power(1.0, 0.5)),
            AbsorptionKernel::double_exp(OmegaSpec::constant(0.5)),
            AbsorptionKernel::lemma1(1.0),
            AbsorptionKernel::porous_threshold(2.0, 3.0, OmegaSpec::constant(1.0)),
            AbsorptionKernel::power(2.0, 0.5),
        ];
        for k in &kernels {
            let mut prev = 0.0;
            for i in 1..=30 {
                let r = i as f64 / 30.0;
                let h = k.primitive(r).unwrap();
                assert!(h >= prev, "{k}: H not monotone at {r}");
                prev = h;
            }
            assert!(k.primitive(1e-4).unwrap() < 1e-5, "{k}");
        }
    }

    #[test]
    fn parse_kernel_descriptors() {
        let k: AbsorptionKernel = "exp-omega;power:a=1,alpha=0.5".parse().unwrap();
        assert_eq!(k, AbsorptionKernel::exp_omega(OmegaSpec::power(1.0, 0.5)));
        let k: AbsorptionKernel = "lemma1:sigma=2".parse().unwrap();
        assert_eq!(k, AbsorptionKernel::lemma1(2.0));
        assert!("exp-omega".parse::<AbsorptionKernel>().is_err());
        assert!("lemma1:sigma=-1".parse::<AbsorptionKernel>().is_err());
    }
}
