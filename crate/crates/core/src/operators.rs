//! Matrix-free N-electron Hamiltonians on the tensor-product grid: the full
//! operator, per-cluster operators and the inter-cluster interaction.
//!
//! Every operator is a sum of a per-particle finite-difference kinetic
//! stencil and a diagonal potential. Electrons carry charge `-e`, nucleus
//! `j` carries `+Z_j e`, and all Coulomb terms are softened.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::clusters::ClusterDecomposition;
use crate::error::{Error, Result};
use crate::grid::{Grid, TensorShape};
use crate::linalg::{DenseSymmetric, LinearOperator, Preconditioner, ShiftedInverse};
use crate::model::{ExperimentConfig, ModelParams, NuclearConfiguration};

/// Largest dimension that may be materialized as a dense matrix.
pub const DENSE_LIMIT: usize = 4096;

/// `q1 q2 / sqrt(r^2 + a^2)`.
pub fn soft_coulomb(q1: f64, q2: f64, a: f64, r: f64) -> f64 {
    q1 * q2 / (r * r + a * a).sqrt()
}

/// Softened nucleus–nucleus repulsion `V_n(y)`, a scalar for fixed nuclei.
pub fn nuclear_repulsion(model: &ModelParams, nuclei: &NuclearConfiguration) -> f64 {
    let mut v = 0.0;
    for i in 0..nuclei.count() {
        for j in 0..i {
            let r = nuclei.positions[i] - nuclei.positions[j];
            v += model.coupling()
                * soft_coulomb(
                    nuclei.charges[i] as f64,
                    nuclei.charges[j] as f64,
                    model.softening,
                    r,
                );
        }
    }
    v
}

/// Which physical terms an operator contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terms {
    pub kinetic: bool,
    pub electron_electron: bool,
    pub electron_nuclear: bool,
    pub nuclear_repulsion: bool,
}

impl Terms {
    pub const ELECTRONIC: Terms = Terms {
        kinetic: true,
        electron_electron: true,
        electron_nuclear: true,
        nuclear_repulsion: false,
    };

    pub const FREE: Terms = Terms {
        kinetic: true,
        electron_electron: false,
        electron_nuclear: false,
        nuclear_repulsion: false,
    };

    pub const POTENTIAL_ONLY: Terms = Terms {
        kinetic: false,
        electron_electron: true,
        electron_nuclear: true,
        nuclear_repulsion: false,
    };
}

/// Sparse self-adjoint operator on `(R^n)^{⊗N}`.
#[derive(Debug, Clone)]
pub struct ManyBodyOperator {
    shape: TensorShape,
    grid: Grid,
    /// Weights of the symmetric stencil at offsets `1..=len`.
    offdiag: Vec<f64>,
    /// Particles carrying a kinetic term.
    kinetic_particles: Vec<bool>,
    /// Potential plus all stencil centre weights.
    diagonal: Vec<f64>,
    scalar_shift: f64,
    pub terms: Terms,
    pub mass: f64,
    pub stencil_order: u8,
    pub nuclei: NuclearConfiguration,
}

/// Finite-difference weights for `-(1/2m) d^2/dx^2`: centre weight and the
/// symmetric off-diagonal weights.
pub fn kinetic_stencil(order: u8, mass: f64, h: f64) -> (f64, Vec<f64>) {
    let pre = -1.0 / (2.0 * mass * h * h);
    match order {
        4 => (
            pre * (-30.0 / 12.0),
            vec![pre * (16.0 / 12.0), pre * (-1.0 / 12.0)],
        ),
        _ => (pre * -2.0, vec![pre]),
    }
}

/// Assembly recipe: which pairs interact and which nuclei each electron sees.
struct PotentialRecipe<'a> {
    particles: usize,
    kinetic: bool,
    pairs: Vec<(usize, usize)>,
    /// Nuclei attracting each electron.
    attractors: Vec<Vec<usize>>,
    nuclei: &'a NuclearConfiguration,
    shift: f64,
    terms: Terms,
}

fn build(model: &ModelParams, recipe: PotentialRecipe<'_>) -> Result<ManyBodyOperator> {
    let grid = model.grid();
    let dimension = grid
        .tensor_dim(recipe.particles)
        .filter(|&d| d <= model.max_dimension)
        .ok_or(Error::DimensionBudget {
            dimension: grid.tensor_dim(recipe.particles).unwrap_or(usize::MAX),
            budget: model.max_dimension,
        })?;
    let shape = TensorShape::new(grid.points, recipe.particles);
    let xs = grid.coords();
    let e2 = model.coupling();
    let a = model.softening;

    let one_body: Vec<Vec<f64>> = recipe
        .attractors
        .iter()
        .map(|nuc| {
            xs.iter()
                .map(|&x| {
                    nuc.iter()
                        .map(|&j| {
                            e2 * soft_coulomb(
                                -1.0,
                                recipe.nuclei.charges[j] as f64,
                                a,
                                x - recipe.nuclei.positions[j],
                            )
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    let n = grid.points;
    let pair_table: Vec<f64> = if recipe.pairs.is_empty() {
        Vec::new()
    } else {
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                t[i * n + j] = e2 * soft_coulomb(-1.0, -1.0, a, xs[i] - xs[j]);
            }
        }
        t
    };

    let (centre, offdiag) = kinetic_stencil(model.stencil_order, model.electron_mass, grid.spacing());
    let kinetic_centre = if recipe.kinetic {
        centre * recipe.particles as f64
    } else {
        0.0
    };

    let mut diagonal = vec![0.0; dimension];
    shape.for_each(|flat, multi| {
        let mut v = kinetic_centre;
        for (l, table) in one_body.iter().enumerate() {
            v += table[multi[l]];
        }
        for &(l, m) in &recipe.pairs {
            v += pair_table[multi[l] * n + multi[m]];
        }
        diagonal[flat] = v;
    });

    Ok(ManyBodyOperator {
        shape,
        grid,
        offdiag: if recipe.kinetic { offdiag } else { Vec::new() },
        kinetic_particles: vec![recipe.kinetic; recipe.particles],
        diagonal,
        scalar_shift: recipe.shift,
        terms: recipe.terms,
        mass: model.electron_mass,
        stencil_order: model.stencil_order,
        nuclei: recipe.nuclei.clone(),
    })
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for l in 0..n {
        for m in l + 1..n {
            pairs.push((l, m));
        }
    }
    pairs
}

/// Full Hamiltonian `sum_j -(1/2m) Δ_j + V_e + V_en (+ V_n)` for `electrons`
/// electrons with the selected terms.
pub fn assemble_with_terms(
    model: &ModelParams,
    nuclei: &NuclearConfiguration,
    electrons: usize,
    terms: Terms,
) -> Result<ManyBodyOperator> {
    if nuclei.count() == 0 {
        return Err(Error::InvalidConfig("at least one nucleus is required".into()));
    }
    let all: Vec<usize> = (0..nuclei.count()).collect();
    build(
        model,
        PotentialRecipe {
            particles: electrons,
            kinetic: terms.kinetic,
            pairs: if terms.electron_electron {
                all_pairs(electrons)
            } else {
                Vec::new()
            },
            attractors: if terms.electron_nuclear {
                vec![all; electrons]
            } else {
                Vec::new()
            },
            nuclei,
            shift: if terms.nuclear_repulsion {
                nuclear_repulsion(model, nuclei)
            } else {
                0.0
            },
            terms,
        },
    )
}

/// Full Hamiltonian for the configured electron count; `V_n` is included
/// when the geometry asks for it.
pub fn assemble_full(cfg: &ExperimentConfig, nuclei: &NuclearConfiguration) -> Result<ManyBodyOperator> {
    let terms = Terms {
        nuclear_repulsion: nuclei.include_nuclear_repulsion,
        ..Terms::ELECTRONIC
    };
    assemble_with_terms(&cfg.model, nuclei, cfg.particles.electron_count, terms)
}

/// Hamiltonian of cluster `j` acting on its own `|E_j|` electrons, with the
/// cluster's nuclei at their actual positions.
pub fn assemble_cluster(
    model: &ModelParams,
    nuclei: &NuclearConfiguration,
    decomp: &ClusterDecomposition,
    j: usize,
) -> Result<ManyBodyOperator> {
    let blocks = &decomp.partition.blocks;
    if j >= blocks.len() || blocks[j].is_empty() {
        return Err(Error::InvalidConfig("cluster index out of range or without nuclei".into()));
    }
    let count = decomp.occupation(j);
    if count > decomp.electron_count() {
        return Err(Error::InvalidConfig(
            "cluster occupation exceeds the global electron count".into(),
        ));
    }
    cluster_operator(model, nuclei, &blocks[j], count)
}

/// Repulsion among the listed nuclei, or zero when the configuration
/// leaves `V_n` out.
pub fn block_repulsion(model: &ModelParams, nuclei: &NuclearConfiguration, block: &[usize]) -> f64 {
    if nuclei.include_nuclear_repulsion {
        nuclear_repulsion(model, &nuclei.subset(block))
    } else {
        0.0
    }
}

fn with_repulsion(terms: Terms, nuclei: &NuclearConfiguration) -> Terms {
    Terms {
        nuclear_repulsion: nuclei.include_nuclear_repulsion,
        ..terms
    }
}

/// Operator for `electrons` electrons bound to the listed nuclei only.
pub fn cluster_operator(
    model: &ModelParams,
    nuclei: &NuclearConfiguration,
    block: &[usize],
    electrons: usize,
) -> Result<ManyBodyOperator> {
    build(
        model,
        PotentialRecipe {
            particles: electrons,
            kinetic: true,
            pairs: all_pairs(electrons),
            attractors: vec![block.to_vec(); electrons],
            nuclei,
            shift: block_repulsion(model, nuclei, block),
            terms: with_repulsion(Terms::ELECTRONIC, nuclei),
        },
    )
}

/// `H_E = sum_j H_{E_j}` embedded in the full N-electron space.
pub fn assemble_decomposed(
    model: &ModelParams,
    nuclei: &NuclearConfiguration,
    decomp: &ClusterDecomposition,
) -> Result<ManyBodyOperator> {
    let n = decomp.electron_count();
    let owner = &decomp.electron_cluster;
    let pairs = all_pairs(n)
        .into_iter()
        .filter(|&(l, m)| owner[l] == owner[m])
        .collect();
    let attractors = owner
        .iter()
        .map(|&c| decomp.partition.blocks[c].clone())
        .collect();
    let intra = decomp
        .partition
        .blocks
        .iter()
        .map(|b| block_repulsion(model, nuclei, b))
        .sum();
    build(
        model,
        PotentialRecipe {
            particles: n,
            kinetic: true,
            pairs,
            attractors,
            nuclei,
            shift: intra,
            terms: with_repulsion(Terms::ELECTRONIC, nuclei),
        },
    )
}

/// `I_E`: every electron–electron, electron–nucleus and nucleus–nucleus
/// pair crossing clusters, as a multiplication operator. Each unordered
/// crossing pair enters once, so that `H_full = H_E + I_E` holds exactly.
pub fn assemble_interaction(
    model: &ModelParams,
    nuclei: &NuclearConfiguration,
    decomp: &ClusterDecomposition,
) -> Result<ManyBodyOperator> {
    let k = decomp.partition.blocks.len();
    if k < 2 {
        return Err(Error::InvalidConfig("interaction needs at least two clusters".into()));
    }
    let n = decomp.electron_count();
    let owner = &decomp.electron_cluster;
    let pairs = all_pairs(n)
        .into_iter()
        .filter(|&(l, m)| owner[l] != owner[m])
        .collect();
    let attractors = owner
        .iter()
        .map(|&c| {
            (0..nuclei.count())
                .filter(|i| !decomp.partition.blocks[c].contains(i))
                .collect()
        })
        .collect();
    let cross = if nuclei.include_nuclear_repulsion {
        nuclear_repulsion(model, nuclei)
            - decomp
                .partition
                .blocks
                .iter()
                .map(|b| block_repulsion(model, nuclei, b))
                .sum::<f64>()
    } else {
        0.0
    };
    build(
        model,
        PotentialRecipe {
            particles: n,
            kinetic: false,
            pairs,
            attractors,
            nuclei,
            shift: cross,
            terms: with_repulsion(Terms::POTENTIAL_ONLY, nuclei),
        },
    )
}

impl ManyBodyOperator {
    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn particles(&self) -> usize {
        self.shape.particles
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn scalar_shift(&self) -> f64 {
        self.scalar_shift
    }

    /// Potential part of the diagonal, without stencil centre weights or the
    /// scalar shift.
    pub fn potential(&self) -> Vec<f64> {
        let centre = if self.offdiag.is_empty() {
            0.0
        } else {
            kinetic_stencil(self.stencil_order, self.mass, self.grid.spacing()).0
                * self.kinetic_particles.iter().filter(|&&k| k).count() as f64
        };
        self.diagonal.iter().map(|d| d - centre).collect()
    }

    /// Same operator with the scalar `V_n` shift replaced.
    pub fn with_shift(&self, shift: f64) -> Self {
        Self {
            scalar_shift: shift,
            ..self.clone()
        }
    }

    /// Operator with the kinetic stencil removed (a pure multiplication).
    pub fn potential_part(&self) -> Self {
        Self {
            diagonal: self.potential(),
            offdiag: Vec::new(),
            kinetic_particles: vec![false; self.shape.particles],
            terms: Terms {
                kinetic: false,
                ..self.terms
            },
            ..self.clone()
        }
    }

    /// Kinetic stencil only.
    pub fn kinetic_part(&self) -> Self {
        let pot = self.potential();
        Self {
            diagonal: self.diagonal.iter().zip(&pot).map(|(d, p)| d - p).collect(),
            scalar_shift: 0.0,
            terms: Terms::FREE,
            ..self.clone()
        }
    }

    /// Dense matrix, allowed only up to [`DENSE_LIMIT`].
    pub fn to_dense(&self) -> Result<DenseSymmetric> {
        if self.dim() > DENSE_LIMIT {
            return Err(Error::DimensionBudget {
                dimension: self.dim(),
                budget: DENSE_LIMIT,
            });
        }
        Ok(DenseSymmetric::materialize(self))
    }

    /// Largest `|diagonal|` over the grid points selected by `keep`.
    pub fn restricted_sup(&self, mut keep: impl FnMut(&[usize]) -> bool) -> f64 {
        let mut best = 0.0f64;
        self.shape.for_each(|flat, multi| {
            if keep(multi) {
                best = best.max((self.diagonal[flat] + self.scalar_shift).abs());
            }
        });
        best
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        let off: f64 = self.offdiag.iter().map(|w| 2.0 * w.abs()).sum::<f64>()
            * self.kinetic_particles.iter().filter(|&&k| k).count() as f64;
        crate::linalg::max_abs(&self.diagonal) + off + self.scalar_shift.abs()
    }
}

/// Inverse of `T + s`, where `T` is the kinetic part of an operator whose
/// particles all carry the same stencil. The Dirichlet second-difference
/// matrix is diagonalized by the discrete sine transform; for wider
/// stencils the transform diagonalizes the interior symbol, which is then
/// only an approximate inverse.
#[derive(Debug, Clone)]
pub struct KineticPreconditioner {
    shape: TensorShape,
    /// Row-major `n × n` sine matrix.
    sine: Arc<Vec<f64>>,
    symbol: Vec<f64>,
    shift: f64,
}

impl KineticPreconditioner {
    /// Returns `None` for operators without a kinetic term.
    pub fn new(op: &ManyBodyOperator, shift: f64) -> Option<Self> {
        if op.offdiag.is_empty() || op.kinetic_particles.iter().any(|k| !k) {
            return None;
        }
        let n = op.shape.points;
        let (centre, off) = kinetic_stencil(op.stencil_order, op.mass, op.grid.spacing());
        let norm = (2.0 / (n as f64 + 1.0)).sqrt();
        let theta = |k: usize| (k as f64 + 1.0) * core::f64::consts::PI / (n as f64 + 1.0);
        let mut sine = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                sine[i * n + k] = norm * ((i as f64 + 1.0) * theta(k)).sin();
            }
        }
        let symbol = (0..n)
            .map(|k| {
                centre
                    + off
                        .iter()
                        .enumerate()
                        .map(|(d, w)| 2.0 * w * ((d as f64 + 1.0) * theta(k)).cos())
                        .sum::<f64>()
            })
            .collect();
        Some(Self {
            shape: op.shape,
            sine: Arc::new(sine),
            symbol,
            shift,
        })
    }

    /// Same transform with a different shift.
    pub fn with_shift(&self, shift: f64) -> Self {
        Self {
            shift,
            ..self.clone()
        }
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Smallest eigenvalue of the kinetic part.
    pub fn kinetic_floor(&self) -> f64 {
        self.symbol.iter().fold(f64::INFINITY, |m, &v| m.min(v)) * self.shape.particles as f64
    }

    /// Applies the (symmetric, orthogonal) sine matrix along every axis.
    fn transform(&self, data: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        let n = self.shape.points;
        let sine = &self.sine;
        for p in 0..self.shape.particles {
            let inner = self.shape.stride(p);
            let block = n * inner;
            scratch.iter_mut().for_each(|v| *v = 0.0);
            for base in (0..data.len()).step_by(block) {
                let src = &data[base..base + block];
                let dst = &mut scratch[base..base + block];
                if inner == 1 {
                    for (i, &x) in src.iter().enumerate() {
                        for (o, &s) in dst.iter_mut().zip(&sine[i * n..(i + 1) * n]) {
                            *o += x * s;
                        }
                    }
                } else {
                    for i in 0..n {
                        let row = &src[i * inner..(i + 1) * inner];
                        for k in 0..n {
                            let s = sine[i * n + k];
                            for (o, &x) in dst[k * inner..(k + 1) * inner].iter_mut().zip(row) {
                                *o += s * x;
                            }
                        }
                    }
                }
            }
            core::mem::swap(data, scratch);
        }
    }
}

impl Preconditioner for KineticPreconditioner {
    fn dim(&self) -> usize {
        self.shape.len()
    }

    fn precondition(&self, r: &[f64], out: &mut [f64]) {
        self.apply_shifted(r, self.shift, out)
    }
}

impl ShiftedInverse for KineticPreconditioner {
    fn dim(&self) -> usize {
        self.shape.len()
    }

    fn apply_shifted(&self, r: &[f64], shift: f64, out: &mut [f64]) {
        let mut data = r.to_vec();
        let mut scratch = vec![0.0; data.len()];
        self.transform(&mut data, &mut scratch);
        let symbol = &self.symbol;
        self.shape.for_each(|flat, idx| {
            let lambda: f64 = idx.iter().map(|&k| symbol[k]).sum();
            data[flat] /= lambda + shift;
        });
        self.transform(&mut data, &mut scratch);
        out.copy_from_slice(&data);
    }
}

impl LinearOperator for ManyBodyOperator {
    fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let shift = self.scalar_shift;
        for ((o, &d), &xi) in out.iter_mut().zip(&self.diagonal).zip(x) {
            *o = (d + shift) * xi;
        }
        if self.offdiag.is_empty() {
            return;
        }
        let n = self.shape.points;
        let len = self.diagonal.len();
        for p in 0..self.shape.particles {
            if !self.kinetic_particles[p] {
                continue;
            }
            let inner = self.shape.stride(p);
            let block = n * inner;
            for base in (0..len).step_by(block) {
                for i in 0..n {
                    let row = base + i * inner;
                    for (d, &w) in self.offdiag.iter().enumerate() {
                        let d = d + 1;
                        if i + d < n {
                            let src = base + (i + d) * inner;
                            for t in 0..inner {
                                out[row + t] += w * x[src + t];
                            }
                        }
                        if i >= d {
                            let src = base + (i - d) * inner;
                            for t in 0..inner {
                                out[row + t] += w * x[src + t];
                            }
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, symmetric_eigen};
    use crate::rng;

    #[test]
    fn soft_coulomb_values() {
        assert_eq!(soft_coulomb(1.0, 1.0, 1.0, 0.0), 1.0);
        assert_eq!(soft_coulomb(-1.0, 1.0, 1.0, 0.0), -1.0);
        // 1/sqrt(10001)
        let v = soft_coulomb(1.0, 1.0, 1.0, 100.0);
        assert!((v - 0.009_999_500_037_496_876).abs() < 1e-15);
        assert_eq!(soft_coulomb(2.0, 3.0, 0.5, 1.7), soft_coulomb(2.0, 3.0, 0.5, -1.7));
    }

    #[test]
    fn free_particle_matches_discrete_box() {
        let model = ModelParams::new(1.0, 10.0, 64);
        let nuc = NuclearConfiguration::new(vec![0.0], vec![1]);
        let op = assemble_with_terms(&model, &nuc, 1, Terms::FREE).unwrap();
        let eig = symmetric_eigen(&op.to_dense().unwrap());
        let h = model.spacing();
        let n = model.grid_points as f64;
        for (k, &e) in eig.values.iter().take(5).enumerate() {
            let theta = (k as f64 + 1.0) * core::f64::consts::PI / (n + 1.0);
            let exact = (2.0 - 2.0 * theta.cos()) / (2.0 * h * h);
            assert!((e - exact).abs() < 1e-11, "level {k}: {e} vs {exact}");
        }
    }

    #[test]
    fn fourth_order_stencil_is_symmetric() {
        let mut model = ModelParams::new(1.0, 5.0, 20);
        model.stencil_order = 4;
        let nuc = NuclearConfiguration::new(vec![0.0, 1.0], vec![1, 1]);
        let op = assemble_with_terms(&model, &nuc, 2, Terms::ELECTRONIC).unwrap();
        assert!(op.to_dense().unwrap().max_asymmetry() < 1e-13);
    }

    #[test]
    fn operator_is_symmetric_on_random_pairs() {
        let model = ModelParams::new(1.0, 6.0, 17);
        let nuc = NuclearConfiguration::new(vec![-1.0, 2.0], vec![1, 2]);
        let op = assemble_with_terms(&model, &nuc, 3, Terms::ELECTRONIC).unwrap();
        let mut r = rng::seeded(3);
        for _ in 0..20 {
            let u = rng::uniform_vector(&mut r, op.dim());
            let v = rng::uniform_vector(&mut r, op.dim());
            let lhs = dot(&u, &op.apply_vec(&v));
            let rhs = dot(&op.apply_vec(&u), &v);
            let scale = crate::linalg::norm(&u) * crate::linalg::norm(&v);
            assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn nuclear_repulsion_is_a_scalar_shift() {
        let model = ModelParams::new(1.0, 8.0, 40);
        let mut nuc = NuclearConfiguration::new(vec![-1.0, 1.0], vec![1, 1]);
        let off = assemble_with_terms(&model, &nuc, 1, Terms::ELECTRONIC).unwrap();
        nuc.include_nuclear_repulsion = true;
        let on = assemble_with_terms(
            &model,
            &nuc,
            1,
            Terms {
                nuclear_repulsion: true,
                ..Terms::ELECTRONIC
            },
        )
        .unwrap();
        let vn = nuclear_repulsion(&model, &nuc);
        assert!((vn - 1.0 / 5.0f64.sqrt()).abs() < 1e-15);
        let e_off = symmetric_eigen(&off.to_dense().unwrap()).values;
        let e_on = symmetric_eigen(&on.to_dense().unwrap()).values;
        for (a, b) in e_off.iter().zip(&e_on) {
            assert!((b - a - vn).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let mut model = ModelParams::new(1.0, 8.0, 100);
        model.max_dimension = 5000;
        let nuc = NuclearConfiguration::new(vec![0.0], vec![1]);
        assert!(matches!(
            assemble_with_terms(&model, &nuc, 2, Terms::ELECTRONIC),
            Err(Error::DimensionBudget { .. })
        ));
    }
}
