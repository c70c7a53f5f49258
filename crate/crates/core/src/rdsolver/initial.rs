use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use super::grid::{unit_sphere_area, RadialGrid};
use crate::error::{Error, Result};
use crate::kernels::Nonlinearity;

/// G_N(r, t) = (4πt)^(−N/2) e^(−r²/4t).
pub fn heat_kernel(dim: usize, r: f64, t: f64) -> f64 {
    (4.0 * std::f64::consts::PI * t).powf(-(dim as f64) / 2.0) * (-r * r / (4.0 * t)).exp()
}

/// Barenblatt solution of ∂ₜu = Δuᵐ carrying `mass`.
#[derive(Clone, Copy, Debug)]
pub struct Barenblatt {
    dim: usize,
    m: f64,
    a: f64,
    b: f64,
    kappa: f64,
    c: f64,
}

impl Barenblatt {
    pub fn new(dim: usize, m: f64, mass: f64) -> Self {
        let n = dim as f64;
        let a = n / (n * (m - 1.0) + 2.0);
        let b = a / n;
        let kappa = a * (m - 1.0) / (2.0 * m * n);
        let p = 1.0 / (m - 1.0);
        // mass = C^(p+N/2) κ^(−N/2) ω_N B(N/2, p+1) / 2
        let unit = kappa.powf(-n / 2.0) * unit_sphere_area(dim) * beta(n / 2.0, p + 1.0) / 2.0;
        let c = (mass / unit).powf(1.0 / (p + n / 2.0));
        Barenblatt { dim, m, a, b, kappa, c }
    }

    pub fn eval(&self, r: f64, t: f64) -> f64 {
        let s = self.c - self.kappa * r * r * t.powf(-2.0 * self.b);
        if s <= 0.0 {
            0.0
        } else {
            t.powf(-self.a) * s.powf(1.0 / (self.m - 1.0))
        }
    }

    pub fn support_radius(&self, t: f64) -> f64 {
        (self.c / self.kappa).sqrt() * t.powf(self.b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Approximations of kδ₀ and other starting fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// k·G_N(·, t₀) (Barenblatt of mass k for the porous variant), started at t₀.
    WarmStart { mass: f64, t0: f64 },
    /// M_k^(1/2) k^(−N/2) η_k at t = 0, with η_k = kᴺ η(k·) supported in B_(1/k).
    /// M_k enters through its logarithm.
    Bump { k: f64, ln_mk: f64 },
    Flat { level: f64, t_start: f64 },
    /// Samples on an arbitrary radial mesh, interpolated linearly, zero beyond.
    Custom { t_start: f64, r: Vec<f64>, u: Vec<f64> },
}

impl InitialData {
    pub fn warm_start(mass: f64, t0: f64) -> Self {
        InitialData::WarmStart { mass, t0 }
    }

    pub fn start_time(&self) -> f64 {
        match self {
            InitialData::WarmStart { t0, .. } => *t0,
            InitialData::Bump { .. } => 0.0,
            InitialData::Flat { t_start, .. } | InitialData::Custom { t_start, .. } => *t_start,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            InitialData::WarmStart { mass, t0 } => *mass >= 0.0 && *t0 > 0.0,
            InitialData::Bump { k, ln_mk } => *k > 0.0 && ln_mk.is_finite(),
            InitialData::Flat { level, t_start } => level.is_finite() && *t_start >= 0.0,
            InitialData::Custom { t_start, r, u } => {
                *t_start >= 0.0
                    && r.len() == u.len()
                    && r.len() >= 2
                    && r.windows(2).all(|w| w[1] > w[0])
                    && u.iter().all(|x| x.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid initial data {self:?}")))
        }
    }

    /// Radius that must carry at least 8 grid nodes.
    fn core_radius(&self, dim: usize, nonlinearity: &Nonlinearity) -> Option<f64> {
        match self {
            InitialData::WarmStart { mass, t0 } => Some(match nonlinearity {
                Nonlinearity::Porous { m, .. } => Barenblatt::new(dim, *m, *mass).support_radius(*t0),
                _ => 2.0 * t0.sqrt(),
            }),
            InitialData::Bump { k, .. } => Some(1.0 / k),
            _ => None,
        }
    }

    /// Samples the field on the grid; the outer node is set to 0.
    pub fn sample(&self, grid: &RadialGrid, nonlinearity: &Nonlinearity) -> Result<Vec<f64>> {
        self.validate()?;
        let dim = grid.dim;
        if let Some(core) = self.core_radius(dim, nonlinearity) {
            let n = grid.nodes_within(core);
            if n < 8 {
                return Err(Error::domain(format!(
                    "grid does not resolve the initial data: {n} nodes within r = {core:e}, need 8"
                )));
            }
        }
        let mut u: Vec<f64> = match self {
            InitialData::WarmStart { mass, t0 } => match nonlinearity {
                Nonlinearity::Porous { m, .. } => {
                    let b = Barenblatt::new(dim, *m, *mass);
                    grid.nodes().iter().map(|&r| b.eval(r, *t0)).collect()
                }
                _ => grid.nodes().iter().map(|&r| mass * heat_kernel(dim, r, *t0)).collect(),
            },
            InitialData::Bump { k, ln_mk } => {
                let n = dim as f64;
                let norm = 2.0 / (unit_sphere_area(dim) * beta(n / 2.0, 3.0));
                let ln_amp = 0.5 * ln_mk - 0.5 * n * k.ln() + n * k.ln() + norm.ln();
                grid.nodes()
                    .iter()
                    .map(|&r| {
                        let y = k * r;
                        if y >= 1.0 {
                            0.0
                        } else {
                            (ln_amp + 2.0 * (1.0 - y * y).ln()).exp()
                        }
                    })
                    .collect()
            }
            InitialData::Flat { level, .. } => vec![*level; grid.len()],
            InitialData::Custom { r, u, .. } => grid
                .nodes()
                .iter()
                .map(|&x| {
                    if x > r[r.len() - 1] || x < r[0] {
                        return if x < r[0] { u[0] } else { 0.0 };
                    }
                    let i = r.partition_point(|&y| y <= x).clamp(1, r.len() - 1);
                    let w = (x - r[i - 1]) / (r[i] - r[i - 1]);
                    u[i - 1] * (1.0 - w) + u[i] * w
                })
                .collect(),
        };
        let last = u.len() - 1;
        u[last] = 0.0;
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdsolver::GridParams;

    #[test]
    fn heat_kernel_value() {
        // (0.4π)^(−1/2) e^(−0.625)
        let g = heat_kernel(1, 0.5, 0.1);
        assert!((g - 0.477_486_411_533_556_6).abs() < 1e-14);
    }

    #[test]
    fn warm_start_mass() {
        for dim in 1..=3 {
            let grid = RadialGrid::graded(dim, 8.0 * 0.01f64.sqrt() * 2.0, &GridParams::default()).unwrap();
            let u = InitialData::warm_start(3.0, 0.01)
                .sample(&grid, &Nonlinearity::Power { q: 2.0 })
                .unwrap();
            let mass = grid.mass(&u);
            assert!((mass - 3.0).abs() / 3.0 < 0.01, "N = {dim}: {mass}");
        }
    }

    #[test]
    fn barenblatt_mass() {
        for dim in 1..=3 {
            let b = Barenblatt::new(dim, 2.0, 5.0);
            let grid = RadialGrid::graded(dim, 3.0, &GridParams::default().refined()).unwrap();
            let u: Vec<f64> = grid.nodes().iter().map(|&r| b.eval(r, 0.01)).collect();
            let mass = grid.mass(&u);
            assert!((mass - 5.0).abs() / 5.0 < 0.01, "N = {dim}: {mass}");
        }
    }

    #[test]
    fn bump_support_and_mass() {
        let grid = RadialGrid::graded(2, 1.0, &GridParams { h_min: 1e-3, ratio: 1.0, h_max: 1e-3 }).unwrap();
        let k = 10.0;
        let u = InitialData::Bump { k, ln_mk: 4.0 }
            .sample(&grid, &Nonlinearity::Exponential)
            .unwrap();
        for (r, v) in grid.nodes().iter().zip(&u) {
            if *r >= 1.0 / k {
                assert_eq!(*v, 0.0);
            }
        }
        // mass M_k^(1/2) k^(−N/2)
        let expected = 2f64.exp() / k;
        assert!((grid.mass(&u) - expected).abs() / expected < 1e-3);
    }

    #[test]
    fn unresolved_core_is_rejected() {
        let grid = RadialGrid::graded(1, 1.0, &GridParams::default()).unwrap();
        let r = InitialData::warm_start(1.0, 1e-6).sample(&grid, &Nonlinearity::Power { q: 2.0 });
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
