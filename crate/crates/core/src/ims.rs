//! Smooth partition of unity over electron-assignment regions and a
//! numerical check of the IMS localization formula
//! `H = Σ_b J_b H J_b − (1/2m) Σ_b |∇J_b|²`.
//!
//! Each electron coordinate is split among `k` cluster balls
//! `B(z_j, 2R·C_j)` and a far region by one-particle cutoffs `q_s` with
//! `Σ_s q_s² = 1`; the many-electron cutoff of an assignment `b` is the
//! product `J_b(x) = Π_l q_{b(l)}(x_l)`, so `Σ_b J_b² = 1` on every node.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::clusters::NuclearPartition;
use crate::error::{Error, Result};
use crate::grid::{Grid, TensorShape};
use crate::linalg::{self, LinearOperator};
use crate::operators::{kinetic_stencil, ManyBodyOperator};
use crate::rng::{self, SeededRng};

/// `6t⁵ − 15t⁴ + 10t³` clamped to `[0, 1]`: C² at both ends.
pub fn quintic_ramp(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// Transition width used for scale `R`: `√R · min_j C_j / 2`.
pub fn default_width(partition: &NuclearPartition, scale: f64) -> f64 {
    let c = partition.radii.iter().copied().fold(f64::INFINITY, f64::min);
    scale.sqrt() * c / 2.0
}

/// Checks `2R(C_i + C_j) ≤ r_ij / 2` for every pair of clusters.
pub fn check_scale(partition: &NuclearPartition, scale: f64) -> Result<()> {
    let k = partition.len();
    for i in 0..k {
        for j in i + 1..k {
            let required = 2.0 * scale * (partition.radii[i] + partition.radii[j]);
            let available = partition.separations[i][j] / 2.0;
            if required > available {
                return Err(Error::ScaleCondition { required, available });
            }
        }
    }
    Ok(())
}

/// Largest `R` satisfying the scale condition.
pub fn max_scale(partition: &NuclearPartition) -> f64 {
    let k = partition.len();
    let mut best = f64::INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            let r = partition.separations[i][j] / (4.0 * (partition.radii[i] + partition.radii[j]));
            best = best.min(r);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    pub grid: Grid,
    pub electrons: usize,
    pub scale: f64,
    pub width: f64,
    pub centers: Vec<f64>,
    /// Ball radii `2R·C_j`.
    pub radii: Vec<f64>,
    /// `q_s` on the grid, one row per slot; the last slot is the far
    /// region when there are several clusters.
    pub profiles: Vec<Vec<f64>>,
    /// Slot of each electron, one entry per assignment `b`.
    pub assignments: Vec<Vec<usize>>,
    /// `max_b max_x |∇J_b|²`.
    pub max_gradient_sq: f64,
    /// `d = R · max_gradient_sq`.
    pub gradient_constant: f64,
}

/// Builds the cutoffs for `electrons` electrons at scale `R`.
pub fn build_cutoffs(
    partition: &NuclearPartition,
    grid: &Grid,
    electrons: usize,
    scale: f64,
    width: Option<f64>,
) -> Result<CutoffFamily> {
    if !(scale > 0.0) {
        return Err(Error::InvalidConfig("cutoff scale must be positive".into()));
    }
    check_scale(partition, scale)?;
    let xs = grid.coords();
    let k = partition.len();
    let radii: Vec<f64> = partition.radii.iter().map(|c| 2.0 * scale * c).collect();
    let width = width.unwrap_or_else(|| default_width(partition, scale));
    if k > 1 && (!(width > 0.0) || radii.iter().any(|&r| width > r)) {
        return Err(Error::InvalidConfig(format!(
            "transition width {} must be positive and below every ball radius",
            width
        )));
    }
    let shape_fn = Profiles {
        centers: &partition.centers,
        radii: &radii,
        width,
    };
    let slots = shape_fn.slots();
    let mut profiles = vec![vec![0.0; xs.len()]; slots];
    let mut q = vec![0.0; slots];
    let mut dq = vec![0.0; slots];
    for (i, &x) in xs.iter().enumerate() {
        shape_fn.eval(x, &mut q, &mut dq);
        for s in 0..slots {
            profiles[s][i] = q[s];
        }
    }
    let shape = TensorShape::new(slots, electrons);
    let mut assignments = Vec::with_capacity(shape.len());
    shape.for_each(|_, idx| assignments.push(idx.to_vec()));
    let max_gradient_sq = shape_fn.sup_gradient_sq(grid, electrons, &assignments);
    Ok(CutoffFamily {
        grid: *grid,
        electrons,
        scale,
        width,
        centers: partition.centers.clone(),
        radii,
        profiles,
        assignments,
        max_gradient_sq,
        gradient_constant: scale * max_gradient_sq,
    })
}

/// The one-particle cutoffs `q_s` as functions of position, with exact
/// derivatives.
struct Profiles<'a> {
    centers: &'a [f64],
    radii: &'a [f64],
    width: f64,
}

impl Profiles<'_> {
    fn slots(&self) -> usize {
        if self.centers.len() == 1 {
            1
        } else {
            self.centers.len() + 1
        }
    }

    fn eval(&self, x: f64, q: &mut [f64], dq: &mut [f64]) {
        let k = self.centers.len();
        if k == 1 {
            q[0] = 1.0;
            dq[0] = 0.0;
            return;
        }
        let (mut far, mut dfar) = (1.0, 0.0);
        for j in 0..k {
            let d = x - self.centers[j];
            let t = (self.radii[j] - d.abs()) / self.width;
            q[j] = quintic_ramp(t);
            dq[j] = if t > 0.0 && t < 1.0 {
                -30.0 * t * t * (1.0 - t) * (1.0 - t) * d.signum() / self.width
            } else {
                0.0
            };
            far -= q[j];
            dfar -= dq[j];
        }
        if far <= 0.0 {
            far = 0.0;
            dfar = 0.0;
        }
        q[k] = far;
        dq[k] = dfar;
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        let dnorm = q.iter().zip(dq.iter()).map(|(c, d)| c * d).sum::<f64>() / norm;
        for s in 0..=k {
            dq[s] = (dq[s] * norm - q[s] * dnorm) / (norm * norm);
            q[s] /= norm;
        }
    }

    /// `max_b sup_x |∇J_b(x)|²` with `|∇J_b|² = Σ_l q'_{b_l}(x_l)² Π_{m≠l} q_{b_m}(x_m)²`,
    /// sampled on a mesh much finer than the transition width. Per slot only
    /// the samples inside transitions matter, plus the best flat one.
    fn sup_gradient_sq(&self, grid: &Grid, electrons: usize, assignments: &[Vec<usize>]) -> f64 {
        let slots = self.slots();
        if slots == 1 {
            return 0.0;
        }
        let step = (self.width / 64.0).min(grid.spacing());
        let count = (2.0 * grid.extent / step).ceil() as usize + 1;
        let mut candidates: Vec<Vec<(f64, f64)>> = vec![vec![(0.0, 0.0)]; slots];
        let mut q = vec![0.0; slots];
        let mut dq = vec![0.0; slots];
        for i in 0..count {
            let x = (-grid.extent + i as f64 * step).min(grid.extent);
            self.eval(x, &mut q, &mut dq);
            for s in 0..slots {
                let (p, a) = (q[s] * q[s], dq[s] * dq[s]);
                if a > 0.0 {
                    candidates[s].push((p, a));
                } else if p > candidates[s][0].0 {
                    candidates[s][0] = (p, 0.0);
                }
            }
        }
        let mut best = 0.0f64;
        let mut pick = vec![(0.0, 0.0); electrons];
        for b in assignments {
            search(&candidates, b, 0, &mut pick, &mut best);
        }
        best
    }
}

fn search(candidates: &[Vec<(f64, f64)>], b: &[usize], l: usize, pick: &mut [(f64, f64)], best: &mut f64) {
    if l == b.len() {
        let mut g = 0.0;
        for i in 0..b.len() {
            let mut term = pick[i].1;
            for (m, p) in pick.iter().enumerate() {
                if m != i {
                    term *= p.0;
                }
            }
            g += term;
        }
        *best = best.max(g);
        return;
    }
    for &c in &candidates[b[l]] {
        pick[l] = c;
        search(candidates, b, l + 1, pick, best);
    }
}

impl CutoffFamily {
    pub fn shape(&self) -> TensorShape {
        TensorShape::new(self.grid.points, self.electrons)
    }

    /// `J_b` on the tensor grid.
    pub fn cutoff(&self, b: usize) -> Vec<f64> {
        let slots = &self.assignments[b];
        let mut out = vec![0.0; self.shape().len()];
        self.shape().for_each(|flat, idx| {
            out[flat] = idx
                .iter()
                .zip(slots)
                .map(|(&i, &s)| self.profiles[s][i])
                .product();
        });
        out
    }

    /// Electrons grouped by the slot they occupy in assignment `b`.
    pub fn slot_groups(&self, b: usize) -> Vec<Vec<usize>> {
        let slots = &self.assignments[b];
        (0..self.profiles.len())
            .map(|s| (0..slots.len()).filter(|&l| slots[l] == s).collect::<Vec<_>>())
            .filter(|g| g.len() > 1)
            .collect()
    }

    /// Largest `|Σ_b J_b² − 1|` over the grid.
    pub fn unity_defect(&self) -> f64 {
        let n = self.grid.points;
        let one: Vec<f64> = (0..n)
            .map(|i| self.profiles.iter().map(|q| q[i] * q[i]).sum())
            .collect();
        let mut worst = 0.0f64;
        let mut acc = vec![0.0; self.shape().len()];
        for b in 0..self.assignments.len() {
            let j = self.cutoff(b);
            for (a, v) in acc.iter_mut().zip(&j) {
                *a += v * v;
            }
        }
        for a in &acc {
            worst = worst.max((a - 1.0).abs());
        }
        for o in &one {
            worst = worst.max((o - 1.0).abs());
        }
        worst
    }

    /// The multiplication operator `(1/2m) Σ_b |∇J_b|²` in the discrete form
    /// that matches the kinetic stencil: with stencil weights `w_d`, each
    /// particle contributes `−½ Σ_d w_d Σ_s [(q_s(i+d) − q_s(i))² + (q_s(i−d) − q_s(i))²]`.
    pub fn localization_error(&self, order: u8, mass: f64) -> Vec<f64> {
        let n = self.grid.points;
        let (_, weights) = kinetic_stencil(order, mass, self.grid.spacing());
        let per_node: Vec<f64> = (0..n)
            .map(|i| {
                let mut g = 0.0;
                for (d, &w) in weights.iter().enumerate() {
                    let d = d + 1;
                    let mut s = 0.0;
                    for q in &self.profiles {
                        if i + d < n {
                            s += (q[i + d] - q[i]).powi(2);
                        }
                        if i >= d {
                            s += (q[i - d] - q[i]).powi(2);
                        }
                    }
                    g += -0.5 * w * s;
                }
                g
            })
            .collect();
        let shape = self.shape();
        let mut out = vec![0.0; shape.len()];
        shape.for_each(|flat, idx| {
            out[flat] = idx.iter().map(|&i| per_node[i]).sum();
        });
        out
    }

    /// Rows `x, q_0(x), …` for plotting.
    pub fn profile_table(&self) -> Vec<Vec<f64>> {
        self.grid
            .coords()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let mut row = vec![x];
                row.extend(self.profiles.iter().map(|q| q[i]));
                row
            })
            .collect()
    }
}

/// Unit vector built from a few low sine modes in every coordinate, so
/// finite-difference errors behave like those of a smooth function.
pub fn smooth_random_vector(rng: &mut SeededRng, grid: &Grid, particles: usize, modes: usize) -> Vec<f64> {
    let n = grid.points;
    let terms = 3;
    let shape = TensorShape::new(n, particles);
    let mut out = vec![0.0; shape.len()];
    let span = 2.0 * grid.extent + 2.0 * grid.spacing();
    let xs = grid.coords();
    for _ in 0..terms {
        let factors: Vec<Vec<f64>> = (0..particles)
            .map(|_| {
                let c = rng::uniform_vector(rng, modes);
                xs.iter()
                    .map(|&x| {
                        let t = (x + grid.extent + grid.spacing()) / span;
                        c.iter()
                            .enumerate()
                            .map(|(m, &cm)| cm * ((m as f64 + 1.0) * core::f64::consts::PI * t).sin())
                            .sum()
                    })
                    .collect()
            })
            .collect();
        shape.for_each(|flat, idx| {
            out[flat] += idx.iter().enumerate().map(|(l, &i)| factors[l][i]).product::<f64>();
        });
    }
    linalg::normalize(&mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImsDefect {
    /// `max ‖Hv − Σ_b (J_b H J_b v − G v)‖` over the samples.
    pub defect: f64,
    pub samples: usize,
    pub spacing: f64,
    pub note: String,
}

/// Largest residual of the localization formula over `samples` smooth
/// random unit vectors.
pub fn ims_defect(
    op: &ManyBodyOperator,
    family: &CutoffFamily,
    samples: usize,
    seed: u64,
) -> Result<ImsDefect> {
    let shape = op.shape();
    if shape != family.shape() {
        return Err(Error::ShapeMismatch {
            expected: shape.len(),
            actual: family.shape().len(),
        });
    }
    let cutoffs: Vec<Vec<f64>> = (0..family.assignments.len()).map(|b| family.cutoff(b)).collect();
    let g = if op.terms.kinetic {
        family.localization_error(op.stencil_order, op.mass)
    } else {
        vec![0.0; shape.len()]
    };
    let mut rng = rng::seeded(seed);
    let mut worst = 0.0f64;
    let mut jv = vec![0.0; shape.len()];
    let mut hjv = vec![0.0; shape.len()];
    for _ in 0..samples {
        let v = smooth_random_vector(&mut rng, &family.grid, family.electrons, 6);
        let hv = op.apply_vec(&v);
        let mut acc: Vec<f64> = v.iter().zip(&g).map(|(x, gi)| -gi * x).collect();
        for j in &cutoffs {
            for ((o, a), b) in jv.iter_mut().zip(j).zip(&v) {
                *o = a * b;
            }
            op.apply(&jv, &mut hjv);
            for ((o, a), b) in acc.iter_mut().zip(j).zip(&hjv) {
                *o += a * b;
            }
        }
        worst = worst.max(linalg::norm(&linalg::sub(&hv, &acc)));
    }
    Ok(ImsDefect {
        defect: worst,
        samples,
        spacing: family.grid.spacing(),
        note: String::from("smooth random unit vectors"),
    })
}
