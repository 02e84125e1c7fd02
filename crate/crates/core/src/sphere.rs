//! Direction sets on the unit sphere with optional quadrature weights.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSet {
    pub dim: usize,
    pub directions: Vec<Vec<f64>>,
    /// Surface quadrature weights; absent for ad-hoc direction lists.
    pub weights: Option<Vec<f64>>,
}

impl DirectionSet {
    /// `count` equispaced angles `2 pi j / count` on the circle, trapezoid weights.
    pub fn equispaced_2d(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(invalid("count", "need at least one direction"));
        }
        let step = 2.0 * std::f64::consts::PI / count as f64;
        let directions = (0..count)
            .map(|j| {
                let theta = step * j as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect();
        Ok(Self {
            dim: 2,
            directions,
            weights: Some(vec![step; count]),
        })
    }

    /// Fibonacci-lattice nodes on `S^2` with equal weights `4 pi / count`.
    pub fn fibonacci_3d(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(invalid("count", "need at least one direction"));
        }
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let directions = (0..count)
            .map(|j| {
                let z = 1.0 - (2.0 * j as f64 + 1.0) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * j as f64;
                vec![r * phi.cos(), r * phi.sin(), z]
            })
            .collect();
        Ok(Self {
            dim: 3,
            directions,
            weights: Some(vec![4.0 * std::f64::consts::PI / count as f64; count]),
        })
    }

    /// Default quadrature set: 64 angles in 2D, 266 Fibonacci nodes in 3D.
    pub fn default_for(dim: usize) -> Result<Self> {
        match dim {
            2 => Self::equispaced_2d(64),
            3 => Self::fibonacci_3d(266),
            _ => Err(invalid("dim", "default direction sets exist for n = 2, 3")),
        }
    }

    /// Unit-normalized copy of an arbitrary list, without weights.
    pub fn from_directions(directions: Vec<Vec<f64>>) -> Result<Self> {
        let dim = directions.first().map_or(0, |d| d.len());
        let mut out = Vec::with_capacity(directions.len());
        for d in directions {
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if d.len() != dim || !(norm > 0.0) {
                return Err(invalid("directions", "need nonzero vectors of equal length"));
            }
            out.push(d.iter().map(|v| v / norm).collect());
        }
        Ok(Self {
            dim,
            directions: out,
            weights: None,
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_sphere_area() {
        let c = DirectionSet::equispaced_2d(64).unwrap();
        let total: f64 = c.weights.as_ref().unwrap().iter().sum();
        assert!((total - 2.0 * std::f64::consts::PI).abs() < 1e-13);
        let s = DirectionSet::fibonacci_3d(266).unwrap();
        for d in &s.directions {
            let n: f64 = d.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
        // second moment of z over S^2 is 4 pi / 3
        let m2: f64 = s
            .directions
            .iter()
            .zip(s.weights.as_ref().unwrap())
            .map(|(d, w)| w * d[2] * d[2])
            .sum();
        assert!((m2 - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-3);
    }
}
