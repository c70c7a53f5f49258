use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Surface measure of the unit sphere in ℝᴺ (2 for N = 1: the two points ±1).
pub fn unit_sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * std::f64::consts::PI.powf(n / 2.0) / gamma(n / 2.0)
}

/// |B_R| in ℝᴺ.
pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    unit_sphere_area(dim) / dim as f64 * radius.powi(dim as i32)
}

/// Spacing law of a graded grid: h_j = min(h_min·ratʲ, h_max).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub h_min: f64,
    pub ratio: f64,
    pub h_max: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            h_min: 0.002,
            ratio: 1.03,
            h_max: 0.02,
        }
    }
}

impl GridParams {
    /// Every spacing halved.
    pub fn refined(&self) -> Self {
        GridParams {
            h_min: self.h_min / 2.0,
            ratio: self.ratio.sqrt(),
            h_max: self.h_max / 2.0,
        }
    }
}

/// Vertex-centred radial grid: node j owns the shell between the midpoints
/// to its neighbours; node 0 owns the ball B_(r_1/2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub dim: usize,
    nodes: Vec<f64>,
    volumes: Vec<f64>,
    /// Area of the face between nodes j and j+1 divided by their distance.
    conductances: Vec<f64>,
}

impl RadialGrid {
    pub fn from_nodes(dim: usize, nodes: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("grid dimension must be at least 1"));
        }
        if nodes.len() < 3 || nodes[0] != 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "grid nodes must start at 0 and increase strictly (at least 3 nodes)",
            ));
        }
        let area = unit_sphere_area(dim);
        let shell = |r: f64| area / dim as f64 * r.powi(dim as i32);
        let m = nodes.len();
        let mid: Vec<f64> = nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mut volumes = Vec::with_capacity(m);
        volumes.push(shell(mid[0]));
        for j in 1..m - 1 {
            volumes.push(shell(mid[j]) - shell(mid[j - 1]));
        }
        volumes.push(shell(nodes[m - 1]) - shell(mid[m - 2]));
        let conductances = nodes
            .windows(2)
            .zip(&mid)
            .map(|(w, rm)| area * rm.powi(dim as i32 - 1) / (w[1] - w[0]))
            .collect();
        Ok(RadialGrid {
            dim,
            nodes,
            volumes,
            conductances,
        })
    }

    pub fn graded(dim: usize, radius: f64, params: &GridParams) -> Result<Self> {
        let GridParams { h_min, ratio, h_max } = *params;
        if !(radius > 0.0 && h_min > 0.0 && h_max >= h_min && ratio >= 1.0) {
            return Err(Error::domain(format!(
                "bad grid parameters R = {radius}, {params:?}"
            )));
        }
        let mut nodes = vec![0.0];
        let mut h = h_min;
        loop {
            let last = *nodes.last().expect("nonempty");
            if last + 1.5 * h >= radius {
                nodes.push(radius);
                break;
            }
            nodes.push(last + h);
            h = (h * ratio).min(h_max);
        }
        Self::from_nodes(dim, nodes)
    }

    /// Midpoint insertion: every spacing halved.
    pub fn refine(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(*self.nodes.last().expect("nonempty"));
        Self::from_nodes(self.dim, nodes).expect("refinement of a valid grid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn conductances(&self) -> &[f64] {
        &self.conductances
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Σ Vⱼ uⱼ.
    pub fn mass(&self, u: &[f64]) -> f64 {
        self.volumes.iter().zip(u).map(|(v, x)| v * x).sum()
    }

    /// Linear interpolation in r; `None` outside [0, R].
    pub fn interpolate(&self, u: &[f64], r: f64) -> Option<f64> {
        let nodes = &self.nodes;
        if !(r >= 0.0) || r > self.radius() {
            return None;
        }
        let i = nodes.partition_point(|&x| x <= r).clamp(1, nodes.len() - 1);
        let w = (r - nodes[i - 1]) / (nodes[i] - nodes[i - 1]);
        Some(u[i - 1] * (1.0 - w) + u[i] * w)
    }

    pub fn nodes_within(&self, r: f64) -> usize {
        self.nodes.iter().filter(|&&x| x <= r).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-13);
        assert!((unit_sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn volumes_sum_to_ball() {
        for dim in 1..=4 {
            let g = RadialGrid::graded(dim, 2.3, &GridParams::default()).unwrap();
            let total: f64 = g.volumes().iter().sum();
            let ball = ball_volume(dim, 2.3);
            assert!((total - ball).abs() / ball < 1e-12, "N = {dim}");
            assert!(g.volumes().iter().all(|v| *v > 0.0));
            assert_eq!(g.nodes()[0], 0.0);
            assert_eq!(g.radius(), 2.3);
        }
    }

    #[test]
    fn refine_halves_spacing() {
        let g = RadialGrid::graded(1, 1.0, &GridParams::default()).unwrap();
        let f = g.refine();
        assert_eq!(f.len(), 2 * g.len() - 1);
        assert!((f.nodes()[1] - g.nodes()[1] / 2.0).abs() < 1e-16);
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(RadialGrid::from_nodes(1, vec![0.1, 0.2, 0.3]).is_err());
        assert!(RadialGrid::from_nodes(1, vec![0.0, 0.2, 0.2]).is_err());
    }

    #[test]
    fn interpolation() {
        let g = RadialGrid::from_nodes(1, vec![0.0, 1.0, 2.0]).unwrap();
        let u = [0.0, 2.0, 4.0];
        assert_eq!(g.interpolate(&u, 1.5), Some(3.0));
        assert_eq!(g.interpolate(&u, 2.0), Some(4.0));
        assert_eq!(g.interpolate(&u, 2.5), None);
    }
}
