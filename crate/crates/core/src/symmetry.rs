//! Permutations of electron labels acting on tensor-grid vectors, and the
//! symmetrizer / antisymmetrizer family built from them.
//!
//! `(T_π ψ)(x_1, …, x_N) = ψ(x_{π⁻¹(1)}, …, x_{π⁻¹(N)})`. Projectors are
//! group averages applied as index gathers; nothing is materialized.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TensorShape;
use crate::linalg::{self, Projector};
use crate::model::Statistics;

/// A permutation of `{0, …, N-1}` stored as its images.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut p = Self::identity(n);
        p.0.swap(a, b);
        p
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (k, &img) in self.0.iter().enumerate() {
            inv[img] = k;
        }
        Self(inv)
    }

    /// The permutation `πσ` with `T_{πσ} = T_π T_σ`, i.e. `k ↦ σ(π(k))`.
    pub fn product(&self, other: &Self) -> Self {
        Self(self.0.iter().map(|&k| other.0[k]).collect())
    }

    /// `+1` for even, `-1` for odd permutations.
    pub fn sign(&self) -> f64 {
        let mut seen = vec![false; self.0.len()];
        let mut transpositions = 0;
        for start in 0..self.0.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.0[k];
                len += 1;
            }
            transpositions += len - 1;
        }
        if transpositions % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// All `n!` permutations, identity first.
    pub fn all(n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..n).collect();
        permutations_rec(&mut current, 0, &mut out);
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Permutations of `{0, …, n-1}` that map each group onto itself.
    pub fn preserving(n: usize, groups: &[Vec<usize>]) -> Vec<Self> {
        let mut out = vec![Self::identity(n)];
        for group in groups {
            let local = Self::all(group.len());
            let mut next = Vec::with_capacity(out.len() * local.len());
            for base in &out {
                for l in &local {
                    let mut p = base.clone();
                    for (a, &b) in l.0.iter().enumerate() {
                        p.0[group[a]] = group[b];
                    }
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }
}

fn permutations_rec(current: &mut Vec<usize>, k: usize, out: &mut Vec<Permutation>) {
    if k == current.len() {
        out.push(Permutation(current.clone()));
        return;
    }
    for i in k..current.len() {
        current.swap(k, i);
        permutations_rec(current, k + 1, out);
        current.swap(k, i);
    }
}

/// `T_π v` for a vector on the `n^N` grid.
pub fn permute(v: &[f64], pi: &Permutation, shape: TensorShape) -> Result<Vec<f64>> {
    if v.len() != shape.len() {
        return Err(Error::ShapeMismatch {
            expected: shape.len(),
            actual: v.len(),
        });
    }
    if pi.len() != shape.particles {
        return Err(Error::ShapeMismatch {
            expected: shape.particles,
            actual: pi.len(),
        });
    }
    let mut out = vec![0.0; v.len()];
    gather_add(v, &mut out, &source_strides(pi, shape), shape, 1.0);
    Ok(out)
}

/// Output slot `m` reads input index `Σ_l m_l · stride(π(l))`.
fn source_strides(pi: &Permutation, shape: TensorShape) -> Vec<usize> {
    pi.0.iter().map(|&img| shape.stride(img)).collect()
}

fn gather_add(v: &[f64], out: &mut [f64], src_strides: &[usize], shape: TensorShape, weight: f64) {
    let n = shape.points;
    let np = shape.particles;
    if np == 0 {
        out[0] += weight * v[0];
        return;
    }
    // innermost particle handled as a strided run
    let inner_stride = src_strides[np - 1];
    let mut multi = vec![0usize; np.saturating_sub(1)];
    let mut base_src = 0usize;
    let mut flat = 0usize;
    let outer = shape.len() / n;
    for _ in 0..outer {
        for i in 0..n {
            out[flat + i] += weight * v[base_src + i * inner_stride];
        }
        flat += n;
        for p in (0..np - 1).rev() {
            multi[p] += 1;
            base_src += src_strides[p];
            if multi[p] < n {
                break;
            }
            base_src -= src_strides[p] * n;
            multi[p] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorKind {
    /// Totally symmetric subspace, `S`.
    Symmetric,
    /// Totally antisymmetric subspace, `A`.
    Antisymmetric,
    /// `S_E`: average over permutations keeping each electron group fixed.
    Cluster { groups: Vec<Vec<usize>> },
    /// `S_{j,b}`: symmetrizer over the listed electrons only.
    ClusterFactor { electrons: Vec<usize> },
}

/// Group-average projection `(1/|G|) Σ_{π ∈ G} χ(π) T_π`.
#[derive(Debug, Clone)]
pub struct StatisticsProjector {
    pub kind: ProjectorKind,
    shape: TensorShape,
    terms: Vec<(Vec<usize>, f64)>,
}

impl StatisticsProjector {
    pub fn new(kind: ProjectorKind, shape: TensorShape) -> Self {
        let np = shape.particles;
        let group: Vec<(Permutation, f64)> = match &kind {
            ProjectorKind::Symmetric => Permutation::all(np).into_iter().map(|p| (p, 1.0)).collect(),
            ProjectorKind::Antisymmetric => Permutation::all(np)
                .into_iter()
                .map(|p| {
                    let s = p.sign();
                    (p, s)
                })
                .collect(),
            ProjectorKind::Cluster { groups } => Permutation::preserving(np, groups)
                .into_iter()
                .map(|p| (p, 1.0))
                .collect(),
            ProjectorKind::ClusterFactor { electrons } => {
                Permutation::preserving(np, core::slice::from_ref(electrons))
                    .into_iter()
                    .map(|p| (p, 1.0))
                    .collect()
            }
        };
        let weight = 1.0 / group.len() as f64;
        let terms = group
            .iter()
            .map(|(p, s)| (source_strides(p, shape), s * weight))
            .collect();
        Self { kind, shape, terms }
    }

    pub fn symmetric(shape: TensorShape) -> Self {
        Self::new(ProjectorKind::Symmetric, shape)
    }

    pub fn antisymmetric(shape: TensorShape) -> Self {
        Self::new(ProjectorKind::Antisymmetric, shape)
    }

    /// Projector selecting the configured particle statistics; `None` for
    /// distinguishable particles.
    pub fn for_statistics(statistics: Statistics, shape: TensorShape) -> Option<Self> {
        match statistics {
            Statistics::Bosonic if shape.particles > 1 => Some(Self::symmetric(shape)),
            Statistics::Fermionic if shape.particles > 1 => Some(Self::antisymmetric(shape)),
            _ => None,
        }
    }

    pub fn shape(&self) -> TensorShape {
        self.shape
    }

    pub fn group_order(&self) -> usize {
        self.terms.len()
    }
}

impl Projector for StatisticsProjector {
    fn dim(&self) -> usize {
        self.shape.len()
    }

    fn project(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (strides, w) in &self.terms {
            gather_add(x, out, strides, self.shape, *w);
        }
    }
}

/// `S(v)/‖S(v)‖`, failing when `v` is (numerically) annihilated.
pub fn normalized_symmetrize(v: &[f64], projector: &dyn Projector, tol: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; v.len()];
    projector.project(v, &mut out);
    let norm = linalg::normalize(&mut out);
    if norm <= tol * linalg::norm(v).max(f64::MIN_POSITIVE) {
        return Err(Error::Annihilated { norm });
    }
    Ok(out)
}

/// Tensor product `a ⊗ b` in the flattened layout (`a` slowest).
pub fn kron(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        out.extend(b.iter().map(|&y| x * y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn basis(n: usize, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        e
    }

    #[test]
    fn identity_leaves_vector_unchanged() {
        let shape = TensorShape::new(4, 3);
        let v = rng::uniform_vector(&mut rng::seeded(1), shape.len());
        assert_eq!(permute(&v, &Permutation::identity(3), shape).unwrap(), v);
    }

    #[test]
    fn swap_transposes_basis_product() {
        let shape = TensorShape::new(5, 2);
        let v = kron(&basis(5, 1), &basis(5, 3));
        let w = permute(&v, &Permutation::transposition(2, 0, 1), shape).unwrap();
        assert_eq!(w, kron(&basis(5, 3), &basis(5, 1)));
    }

    #[test]
    fn action_composes_as_group_product() {
        let shape = TensorShape::new(3, 3);
        let v = rng::uniform_vector(&mut rng::seeded(2), shape.len());
        for pi in Permutation::all(3) {
            for sigma in Permutation::all(3) {
                let two_step = permute(&permute(&v, &sigma, shape).unwrap(), &pi, shape).unwrap();
                let direct = permute(&v, &pi.product(&sigma), shape).unwrap();
                assert_eq!(two_step, direct);
            }
        }
    }

    #[test]
    fn explicit_index_oracle_for_three_particles() {
        // (T_π v)[m] = v[i] with i_j = m_{π⁻¹(j)}
        let shape = TensorShape::new(3, 3);
        let v = rng::uniform_vector(&mut rng::seeded(9), shape.len());
        let pi = Permutation(vec![1, 2, 0]);
        let inv = pi.inverse();
        let w = permute(&v, &pi, shape).unwrap();
        let mut src = [0usize; 3];
        shape.for_each(|flat, m| {
            for j in 0..3 {
                src[j] = m[inv.0[j]];
            }
            assert_eq!(w[flat], v[shape.compose(&src)]);
        });
    }

    #[test]
    fn two_particle_symmetrizer_averages() {
        let shape = TensorShape::new(4, 2);
        let s = StatisticsProjector::symmetric(shape);
        let v = kron(&basis(4, 0), &basis(4, 1));
        let sv = {
            let mut o = vec![0.0; v.len()];
            s.project(&v, &mut o);
            o
        };
        let swapped = kron(&basis(4, 1), &basis(4, 0));
        for k in 0..v.len() {
            assert_eq!(sv[k], 0.5 * (v[k] + swapped[k]));
        }
        let anti: Vec<f64> = v.iter().zip(&swapped).map(|(a, b)| a - b).collect();
        let mut o = vec![0.0; v.len()];
        s.project(&anti, &mut o);
        assert!(linalg::max_abs(&o) == 0.0);
    }

    #[test]
    fn normalized_symmetrize_cases() {
        let shape = TensorShape::new(4, 2);
        let s = StatisticsProjector::symmetric(shape);
        let v = kron(&basis(4, 0), &basis(4, 1));
        let w = normalized_symmetrize(&v, &s, 1e-12).unwrap();
        let r = 1.0 / 2.0f64.sqrt();
        assert!((w[1] - r).abs() < 1e-15 && (w[4] - r).abs() < 1e-15);
        let again = normalized_symmetrize(&w, &s, 1e-12).unwrap();
        assert!(linalg::max_abs(&linalg::sub(&again, &w)) < 1e-15);
        let anti: Vec<f64> = v
            .iter()
            .zip(&kron(&basis(4, 1), &basis(4, 0)))
            .map(|(a, b)| a - b)
            .collect();
        assert!(matches!(
            normalized_symmetrize(&anti, &s, 1e-12),
            Err(Error::Annihilated { .. })
        ));
    }

    #[test]
    fn signs_and_group_sizes() {
        assert_eq!(Permutation::all(3).len(), 6);
        assert_eq!(Permutation::transposition(3, 0, 2).sign(), -1.0);
        assert_eq!(Permutation(vec![1, 2, 0]).sign(), 1.0);
        assert_eq!(Permutation::preserving(3, &[vec![0, 1], vec![2]]).len(), 2);
    }
}
