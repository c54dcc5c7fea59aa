//! Uniform one-dimensional grid and the flattened tensor-product layout
//! used for N-particle wavefunctions.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Nodes `x_i = -L + i h`, `h = 2L/(n-1)`, all of them unknowns. Dirichlet
/// zeros sit one spacing outside the outermost nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub extent: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(extent: f64, points: usize) -> Self {
        Self { extent, points }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / (self.points as f64 - 1.0)
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.coord(i)).collect()
    }

    /// Index of the node nearest to `x`, if `x` lies inside the grid.
    pub fn nearest(&self, x: f64) -> Option<usize> {
        let t = (x + self.extent) / self.spacing();
        let i = libm_round(t);
        if i < 0.0 || i > (self.points - 1) as f64 {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Rounds a displacement to a whole number of grid spacings.
    pub fn snap_shift(&self, shift: f64) -> f64 {
        let h = self.spacing();
        libm_round(shift / h) * h
    }

    /// Tensor dimension `n^N`, or `None` on overflow.
    pub fn tensor_dim(&self, particles: usize) -> Option<usize> {
        let mut d: usize = 1;
        for _ in 0..particles {
            d = d.checked_mul(self.points)?;
        }
        Some(d)
    }
}

fn libm_round(x: f64) -> f64 {
    num_traits::Float::round(x)
}

/// Row-major layout of an `n^N` tensor; particle 0 varies slowest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorShape {
    pub points: usize,
    pub particles: usize,
}

impl TensorShape {
    pub fn new(points: usize, particles: usize) -> Self {
        Self { points, particles }
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.particles as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stride of particle `p` in the flattened index.
    pub fn stride(&self, p: usize) -> usize {
        self.points.pow((self.particles - 1 - p) as u32)
    }

    pub fn strides(&self) -> Vec<usize> {
        (0..self.particles).map(|p| self.stride(p)).collect()
    }

    pub fn decompose(&self, mut flat: usize, out: &mut [usize]) {
        for p in (0..self.particles).rev() {
            out[p] = flat % self.points;
            flat /= self.points;
        }
    }

    pub fn compose(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    /// Visits every multi-index in flattened order.
    pub fn for_each(&self, mut f: impl FnMut(usize, &[usize])) {
        let mut multi = vec![0usize; self.particles];
        let len = self.len();
        for flat in 0..len {
            f(flat, &multi);
            for p in (0..self.particles).rev() {
                multi[p] += 1;
                if multi[p] < self.points {
                    break;
                }
                multi[p] = 0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_from_extent_and_points() {
        let g = Grid::new(20.0, 201);
        assert!((g.spacing() - 0.2).abs() < 1e-15);
        assert_eq!(g.nearest(0.0), Some(100));
        assert_eq!(g.nearest(25.0), None);
    }

    #[test]
    fn compose_inverts_decompose() {
        let s = TensorShape::new(5, 3);
        let mut m = [0usize; 3];
        s.for_each(|flat, multi| {
            assert_eq!(s.compose(multi), flat);
            s.decompose(flat, &mut m);
            assert_eq!(&m[..], multi);
        });
        assert_eq!(s.stride(0), 25);
        assert_eq!(s.stride(2), 1);
    }
}
