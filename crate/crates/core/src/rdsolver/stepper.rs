//! One Strang step: half absorption flow, implicit diffusion, half absorption flow.
//!
//! The absorption sub-flow u′ = −h(t)F(u) is integrated exactly through the
//! primitive of h (power and exponential), or by backward Euler on the
//! integrated coefficient for the shifted power. Every piece is monotone in
//! the data, so the discrete comparison principle survives the splitting.

use super::grid::RadialGrid;
use super::tridiag::solve_tridiagonal;
use crate::error::{Error, Result};
use crate::kernels::{AbsorptionKernel, Nonlinearity};

pub(crate) enum StepError {
    /// Newton did not converge; the step may be retried with a smaller dt.
    Retry(String),
    Fatal(Error),
}

impl From<Error> for StepError {
    fn from(e: Error) -> Self {
        StepError::Fatal(e)
    }
}

pub(crate) struct Stepper<'a> {
    pub grid: &'a RadialGrid,
    pub kernel: &'a AbsorptionKernel,
    pub nonlinearity: Nonlinearity,
    pub theta: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub eps_d: f64,
    pub newton_iterations: usize,
}

/// ∫ₐᵇ h, with a = 0 routed through the primitive.
pub(crate) fn kernel_increment(kernel: &AbsorptionKernel, a: f64, b: f64) -> Result<f64> {
    if kernel.is_zero() || b <= a {
        return Ok(0.0);
    }
    if a == 0.0 {
        kernel.primitive(b)
    } else {
        kernel.increment(a, b)
    }
}

fn power_flow(u: f64, q: f64, dh: f64) -> f64 {
    if u <= 0.0 || dh <= 0.0 {
        return u.max(0.0);
    }
    // (u^(1−q) + (q−1)ΔH)^(−1/(q−1)); each stage is monotone in floating point
    let s = u.powf(1.0 - q);
    if s.is_finite() {
        (s + (q - 1.0) * dh).powf(-1.0 / (q - 1.0))
    } else {
        u
    }
}

/// −ln(e^(−u) + ΔH).
fn exponential_flow(u: f64, dh: f64) -> f64 {
    if dh <= 0.0 {
        return u;
    }
    let (a, b) = (-u, dh.ln());
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    -(hi + (lo - hi).exp().ln_1p())
}

/// Root of v + ΔH(|v|^(q−1)v + 1) = v₀: safeguarded Newton on the bracket
/// between v₀ and v₀ − ΔH·g(v₀).
fn shifted_power_flow(v0: f64, q: f64, dh: f64, iterations: &mut usize) -> std::result::Result<f64, String> {
    if dh <= 0.0 {
        return Ok(v0);
    }
    let g = |v: f64| v.abs().powf(q - 1.0) * v + 1.0;
    let dg = |v: f64| q * v.abs().powf(q - 1.0);
    let f = |v: f64| v + dh * g(v) - v0;
    let other = v0 - dh * g(v0);
    let (mut lo, mut hi) = if other < v0 { (other, v0) } else { (v0, other) };
    if lo == hi {
        return Ok(v0);
    }
    let mut v = if f(hi).abs() < f(lo).abs() { hi } else { lo };
    for _ in 0..200 {
        *iterations += 1;
        let fv = f(v);
        if fv == 0.0 {
            return Ok(v);
        }
        if fv > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let mut next = v - fv / (1.0 + dh * dg(v));
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - v).abs() <= 1e-15 * next.abs().max(1e-300) || hi - lo <= 1e-15 * hi.abs().max(lo.abs()) {
            return Ok(next);
        }
        v = next;
    }
    Err(format!("shifted-power absorption did not converge from v0 = {v0}"))
}

impl<'a> Stepper<'a> {
    /// Applies the absorption flow over [a, b] in place.
    pub fn absorb(&mut self, u: &mut [f64], a: f64, b: f64) -> std::result::Result<f64, StepError> {
        let dh = kernel_increment(self.kernel, a, b)?;
        if dh == 0.0 {
            return Ok(0.0);
        }
        let n = u.len() - 1;
        match self.nonlinearity {
            Nonlinearity::Power { q } | Nonlinearity::Porous { q, .. } => {
                for x in &mut u[..n] {
                    *x = power_flow(*x, q, dh);
                }
            }
            Nonlinearity::Exponential => {
                for x in &mut u[..n] {
                    *x = exponential_flow(*x, dh);
                }
            }
            Nonlinearity::ShiftedPower { q } => {
                for x in &mut u[..n] {
                    *x = shifted_power_flow(*x, q, dh, &mut self.newton_iterations).map_err(StepError::Retry)?;
                }
            }
        }
        Ok(dh)
    }

    /// θ-scheme for ∂ₜu = Δφ(u) over dt; the outer node stays 0.
    pub fn diffuse(&mut self, u: &[f64], dt: f64) -> std::result::Result<Vec<f64>, StepError> {
        match self.nonlinearity {
            Nonlinearity::Porous { m, .. } => self.diffuse_porous(u, dt, m),
            _ => Ok(self.diffuse_linear(u, dt)),
        }
    }

    /// (K w)ⱼ = a_(j−½)(wⱼ − w_(j−1)) + a_(j+½)(wⱼ − w_(j+1)), w_M = 0.
    fn apply_k(&self, w: &[f64], out: &mut [f64]) {
        let a = self.grid.conductances();
        let n = w.len() - 1;
        for j in 0..n {
            let mut s = a[j] * (w[j] - w[j + 1]);
            if j > 0 {
                s += a[j - 1] * (w[j] - w[j - 1]);
            }
            out[j] = s;
        }
    }

    fn diffuse_linear(&mut self, u: &[f64], dt: f64) -> Vec<f64> {
        let vol = self.grid.volumes();
        let a = self.grid.conductances();
        let n = u.len() - 1;
        let th = self.theta;
        let mut rhs = vec![0.0; n];
        if th < 1.0 {
            self.apply_k(u, &mut rhs);
        }
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for j in 0..n {
            rhs[j] = vol[j] * u[j] - (1.0 - th) * dt * rhs[j];
            let left = if j > 0 { a[j - 1] } else { 0.0 };
            diag[j] = vol[j] + th * dt * (left + a[j]);
            lower[j] = -th * dt * left;
            upper[j] = if j + 1 < n { -th * dt * a[j] } else { 0.0 };
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
        rhs.push(0.0);
        rhs
    }

    fn diffuse_porous(&mut self, u_old: &[f64], dt: f64, m: f64) -> std::result::Result<Vec<f64>, StepError> {
        let vol = self.grid.volumes();
        let a = self.grid.conductances();
        let n = u_old.len() - 1;
        let th = self.theta;
        let phi = |x: f64| x.max(0.0).powf(m);
        let dphi = |x: f64| m * (x.max(0.0) + self.eps_d).powf(m - 1.0);
        let mut explicit = vec![0.0; n];
        if th < 1.0 {
            let w: Vec<f64> = u_old.iter().map(|&x| phi(x)).collect();
            self.apply_k(&w, &mut explicit);
        }
        let scale = u_old.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(1e-300);
        let mut u = u_old.to_vec();
        let mut w = vec![0.0; n + 1];
        let mut kw = vec![0.0; n];
        let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for _ in 0..self.newton_max_iter {
            self.newton_iterations += 1;
            for j in 0..=n {
                w[j] = phi(u[j]);
            }
            self.apply_k(&w, &mut kw);
            let mut rhs: Vec<f64> = (0..n)
                .map(|j| -(vol[j] * (u[j] - u_old[j]) + dt * (th * kw[j] + (1.0 - th) * explicit[j])))
                .collect();
            for j in 0..n {
                let left = if j > 0 { a[j - 1] } else { 0.0 };
                diag[j] = vol[j] + th * dt * (left + a[j]) * dphi(u[j]);
                lower[j] = if j > 0 { -th * dt * left * dphi(u[j - 1]) } else { 0.0 };
                upper[j] = if j + 1 < n { -th * dt * a[j] * dphi(u[j + 1]) } else { 0.0 };
            }
            solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
            let mut change = 0.0f64;
            for j in 0..n {
                let next = (u[j] + rhs[j]).max(0.0);
                change = change.max((next - u[j]).abs());
                u[j] = next;
            }
            if !change.is_finite() {
                break;
            }
            if change <= self.newton_tol * scale {
                return Ok(u);
            }
        }
        Err(StepError::Retry(format!(
            "porous diffusion Newton did not converge in {} iterations",
            self.newton_max_iter
        )))
    }

    /// One Strang step; returns the new field and ∫ h over the step.
    pub fn step(&mut self, u: &[f64], t: f64, dt: f64) -> std::result::Result<(Vec<f64>, f64), StepError> {
        let mid = t + 0.5 * dt;
        let mut w = u.to_vec();
        let d1 = self.absorb(&mut w, t, mid)?;
        let mut w = self.diffuse(&w, dt)?;
        let d2 = self.absorb(&mut w, mid, t + dt)?;
        Ok((w, d1 + d2))
    }
}
