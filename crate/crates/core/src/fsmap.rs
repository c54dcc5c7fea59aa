//! Feshbach–Schur reduction onto a family of symmetrized cluster product
//! states.
//!
//! For an orthogonal projection `P` and `P⊥ = S − P` (with `S` the
//! statistics projector), `F_P(λ) = PHP − PHP⊥(P⊥HP⊥ − λ)⁻¹P⊥HP` is a
//! `rank × rank` matrix whose fixed points `ν_i(λ) = λ` are exactly the
//! eigenvalues of `H` below the complement spectrum. The inner inverse is
//! applied by conjugate gradients on `Ran P⊥`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::clusters::{ThresholdBuild, ThresholdTable};
use crate::error::{Error, Result};
use crate::grid::TensorShape;
use crate::linalg::{self, CompressedOperator, DenseSymmetric, LinearOperator, Preconditioner, Projector, ShiftedInverse};
use crate::spectra::{self, SolverOptions};
use crate::symmetry::{kron, StatisticsProjector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberLabel {
    /// Every cluster in its ground state at the reference occupation.
    Ground { occupation: Vec<usize> },
    /// Cluster `cluster` raised to level `level` of its first excited group.
    Excited { cluster: usize, level: usize },
    /// Ground product at an ionic occupation.
    Ionic { occupation: Vec<usize> },
    /// Eigenvector `index` of an unsplit system.
    Exact { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub label: MemberLabel,
    /// Threshold energy attached to the member.
    pub energy: f64,
    /// `‖S ψ‖` of the unsymmetrized product.
    pub symmetrized_norm: f64,
    #[serde(skip)]
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedMember {
    pub label: MemberLabel,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFamily {
    pub members: Vec<FamilyMember>,
    pub rejected: Vec<RejectedMember>,
}

impl CandidateFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Family from explicit unit vectors, labelled as exact states.
    pub fn from_vectors(vectors: Vec<Vec<f64>>, energies: &[f64]) -> Self {
        Self {
            members: vectors
                .into_iter()
                .enumerate()
                .map(|(i, v)| FamilyMember {
                    label: MemberLabel::Exact { index: i },
                    energy: energies.get(i).copied().unwrap_or(f64::NAN),
                    symmetrized_norm: 1.0,
                    vector: v,
                })
                .collect(),
            rejected: Vec::new(),
        }
    }
}

/// Product of cluster states in the canonical electron order: cluster 0
/// holds the first `c_0` electrons, cluster 1 the next `c_1`, and so on.
pub fn cluster_product(factors: &[&[f64]]) -> Vec<f64> {
    factors.iter().fold(vec![1.0], |acc, f| kron(&acc, f))
}

/// Symmetrized products of cluster eigenvectors: the ground product, one
/// member per excited cluster level, and one per ionic minimizer. Members
/// that are annihilated by the statistics projector, or that duplicate an
/// earlier member, are rejected with a reason.
pub fn build_candidate_family(
    build: &ThresholdBuild,
    shape: TensorShape,
    statistics: Option<&StatisticsProjector>,
    tol: f64,
) -> Result<CandidateFamily> {
    let table = &build.table;
    let k = table.clusters.len();
    let mut raw: Vec<(MemberLabel, f64, Vec<f64>)> = Vec::new();
    let report = |j: usize, c: usize| {
        build.reports[j]
            .get(c)
            .and_then(|r| r.as_ref())
            .ok_or_else(|| Error::MissingEntry(format!("states of cluster {} with {} electrons", j, c)))
    };

    if k == 1 {
        let r = report(0, table.reference[0])?;
        let (e1, mult) = table.clusters[0]
            .excited(table.reference[0], table.tolerance)
            .ok_or(Error::TooFewEigenpairs {
                needed: 2,
                have: r.eigenvalues.len(),
            })?;
        for (i, (&e, v)) in r.eigenvalues.iter().zip(&r.eigenvectors).enumerate() {
            if e <= e1 + table.tolerance && i < r.eigenvectors.len() {
                raw.push((MemberLabel::Exact { index: i }, e, v.clone()));
            }
        }
        let _ = mult;
    } else {
        let reference = &table.reference;
        let grounds: Vec<Vec<f64>> = (0..k)
            .map(|j| ground_vector(build, j, reference[j]))
            .collect::<Result<_>>()?;
        let refs: Vec<&[f64]> = grounds.iter().map(|v| v.as_slice()).collect();
        raw.push((
            MemberLabel::Ground {
                occupation: reference.clone(),
            },
            table.e_inf_0,
            cluster_product(&refs),
        ));
        for l in 0..k {
            let c = reference[l];
            let r = report(l, c)?;
            let e0 = r.eigenvalues[0];
            let start = r
                .eigenvalues
                .iter()
                .position(|&e| e - e0 > table.tolerance)
                .ok_or(Error::TooFewEigenpairs {
                    needed: 2,
                    have: r.eigenvalues.len(),
                })?;
            for p in 0..table.excited_multiplicity[l] {
                let idx = start + p;
                if idx >= r.eigenvectors.len() {
                    break;
                }
                let mut factors = refs.clone();
                factors[l] = &r.eigenvectors[idx];
                raw.push((
                    MemberLabel::Excited { cluster: l, level: p },
                    table.e_inf_0_excited[l],
                    cluster_product(&factors),
                ));
            }
        }
        for occ in &table.ionic_minimizers {
            let vs: Vec<Vec<f64>> = (0..k)
                .map(|j| ground_vector(build, j, occ[j]))
                .collect::<Result<_>>()?;
            let refs: Vec<&[f64]> = vs.iter().map(|v| v.as_slice()).collect();
            raw.push((
                MemberLabel::Ionic {
                    occupation: occ.clone(),
                },
                table.ionic_energy(occ).unwrap_or(f64::NAN),
                cluster_product(&refs),
            ));
        }
    }

    let mut family = CandidateFamily {
        members: Vec::new(),
        rejected: Vec::new(),
    };
    for (label, energy, v) in raw {
        if v.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                expected: shape.len(),
                actual: v.len(),
            });
        }
        let mut s = v.clone();
        if let Some(q) = statistics {
            q.project(&v, &mut s);
        }
        let norm = linalg::normalize(&mut s);
        if !(norm > tol) {
            family.rejected.push(RejectedMember {
                label,
                reason: format!("annihilated by the statistics projector (norm {:.3e})", norm),
            });
            continue;
        }
        if let Some(dup) = family
            .members
            .iter()
            .position(|m| linalg::dot(&m.vector, &s).abs() > 1.0 - 1e-8)
        {
            family.rejected.push(RejectedMember {
                label,
                reason: format!("duplicates member {}", dup),
            });
            continue;
        }
        family.members.push(FamilyMember {
            label,
            energy,
            symmetrized_norm: norm,
            vector: s,
        });
    }
    Ok(family)
}

fn ground_vector(build: &ThresholdBuild, j: usize, c: usize) -> Result<Vec<f64>> {
    if c == 0 {
        return Ok(vec![1.0]);
    }
    build.reports[j]
        .get(c)
        .and_then(|r| r.as_ref())
        .and_then(|r| r.eigenvectors.first().cloned())
        .ok_or_else(|| Error::MissingEntry(format!("ground state of cluster {} with {} electrons", j, c)))
}

/// Orthogonal projection onto the span of a candidate family.
#[derive(Debug, Clone)]
pub struct FsProjection {
    pub family: CandidateFamily,
    pub gram: DenseSymmetric,
    pub gram_inverse: DenseSymmetric,
    pub condition: f64,
    pub min_gram_eigenvalue: f64,
    /// Löwdin-orthonormalized family `U = Φ g^{-1/2}`.
    pub basis: Vec<Vec<f64>>,
    dim: usize,
}

impl FsProjection {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// Largest `|g_ij|` with `i ≠ j`.
    pub fn max_offdiagonal(&self) -> f64 {
        let n = self.gram.n;
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self.gram.get(i, j).abs());
                }
            }
        }
        m
    }

    /// Coefficients `⟨u_i, x⟩` in the orthonormal basis.
    pub fn coefficients(&self, x: &[f64]) -> Vec<f64> {
        self.basis.iter().map(|u| linalg::dot(u, x)).collect()
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (u, &c) in self.basis.iter().zip(coeffs) {
            linalg::axpy(c, u, &mut out);
        }
        out
    }
}

impl Projector for FsProjection {
    fn dim(&self) -> usize {
        self.dim
    }

    fn project(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for u in &self.basis {
            let c = linalg::dot(u, x);
            linalg::axpy(c, u, out);
        }
    }
}

/// Gram matrix, its inverse and the orthonormalized basis of the family.
pub fn gram_and_inverse(family: CandidateFamily, dim: usize, floor: f64) -> Result<FsProjection> {
    let n = family.len();
    if let Some(m) = family.members.iter().find(|m| m.vector.len() != dim) {
        return Err(Error::ShapeMismatch {
            expected: dim,
            actual: m.vector.len(),
        });
    }
    let vs: Vec<&[f64]> = family.members.iter().map(|m| m.vector.as_slice()).collect();
    let gram = DenseSymmetric::from_fn(n, |i, j| linalg::dot(vs[i], vs[j])).symmetrized();
    let inv = linalg::spd_inverse(&gram, floor)?;
    let half = linalg::inverse_sqrt(&gram);
    let basis = (0..n)
        .map(|j| {
            let mut u = vec![0.0; dim];
            for (i, v) in vs.iter().enumerate() {
                linalg::axpy(half.get(i, j), v, &mut u);
            }
            u
        })
        .collect();
    Ok(FsProjection {
        condition: if n > 0 {
            inv.max_eigenvalue / inv.min_eigenvalue
        } else {
            1.0
        },
        min_gram_eigenvalue: if n > 0 { inv.min_eigenvalue } else { 1.0 },
        gram,
        gram_inverse: inv.inverse,
        basis,
        family,
        dim,
    })
}

/// `P⊥ = S − P` (or `1 − P` without a statistics projector).
pub struct Complement<'a> {
    pub projection: &'a FsProjection,
    pub statistics: Option<&'a dyn Projector>,
}

impl Projector for Complement<'_> {
    fn dim(&self) -> usize {
        self.projection.dim
    }

    fn project(&self, x: &[f64], out: &mut [f64]) {
        match self.statistics {
            Some(s) => s.project(x, out),
            None => out.copy_from_slice(x),
        }
        for u in &self.projection.basis {
            let c = linalg::dot(u, out);
            linalg::axpy(-c, u, out);
        }
    }
}

/// `F_P(λ)` in the orthonormal family basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsOperator {
    pub lambda: f64,
    pub matrix: Vec<Vec<f64>>,
    /// The Schur correction `PHP⊥(P⊥HP⊥ − λ)⁻¹P⊥HP`.
    pub correction: Vec<Vec<f64>>,
    /// Eigenvalues `ν_i(λ)`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Largest `|F_ij − F_ji|` before symmetrization.
    pub asymmetry: f64,
    /// `μ_min − λ`, where `μ_min` is the bottom of the complement spectrum.
    pub complement_gap: f64,
    pub inner_iterations: usize,
    pub inner_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsOptions {
    /// Relative residual of the inner conjugate-gradient solves.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Relative tolerance of the fixed-point iteration.
    pub fixed_point_tol: f64,
    pub max_fixed_point_iter: usize,
    pub solver: SolverOptions,
}

impl Default for FsOptions {
    fn default() -> Self {
        Self {
            inner_tol: 1e-10,
            inner_max_iter: 20_000,
            fixed_point_tol: 1e-10,
            max_fixed_point_iter: 100,
            solver: SolverOptions::default(),
        }
    }
}

/// One sample of `g(λ) = ν_i(λ) − λ` during a fixed-point solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub lambda: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub index: usize,
    pub lambda: f64,
    /// Eigenvector of `F_P(λ)` in the orthonormal family basis.
    pub coefficients: Vec<f64>,
    pub bracket: (f64, f64),
    pub trace: Vec<TracePoint>,
    pub complement_gap: f64,
}

/// Closeness measures of the family at one separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsDiagnostics {
    pub lambda: f64,
    /// Largest off-diagonal Gram entry.
    pub gram_offdiagonal: f64,
    /// Largest `|⟨φ_i, Hφ_j⟩ − E_i δ_ij|`.
    pub hamiltonian_deviation: f64,
    /// Largest entry of the Schur correction.
    pub schur_correction: f64,
}

/// Feshbach–Schur map of one operator and one family.
pub struct FsMap<'a> {
    op: &'a dyn LinearOperator,
    projection: &'a FsProjection,
    statistics: Option<&'a dyn Projector>,
    preconditioner: Option<&'a dyn ShiftedInverse>,
    opts: FsOptions,
    /// `H u_i`.
    images: Vec<Vec<f64>>,
    /// `P⊥ H u_i`.
    cross: Vec<Vec<f64>>,
    /// `⟨u_i, H u_j⟩`.
    block: DenseSymmetric,
    complement_floor: Option<f64>,
    warm: Vec<Vec<f64>>,
}

struct ShiftedPreconditioner<'a> {
    inner: &'a dyn ShiftedInverse,
    shift: f64,
}

impl Preconditioner for ShiftedPreconditioner<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn precondition(&self, r: &[f64], out: &mut [f64]) {
        self.inner.apply_shifted(r, self.shift, out)
    }
}

impl<'a> FsMap<'a> {
    pub fn new(
        op: &'a dyn LinearOperator,
        projection: &'a FsProjection,
        statistics: Option<&'a dyn Projector>,
        preconditioner: Option<&'a dyn ShiftedInverse>,
        opts: FsOptions,
    ) -> Self {
        let images: Vec<Vec<f64>> = projection.basis.iter().map(|u| op.apply_vec(u)).collect();
        let comp = Complement {
            projection,
            statistics,
        };
        let cross = images
            .iter()
            .map(|h| {
                let mut c = vec![0.0; h.len()];
                comp.project(h, &mut c);
                c
            })
            .collect();
        let r = projection.rank();
        let block =
            DenseSymmetric::from_fn(r, |i, j| linalg::dot(&projection.basis[i], &images[j])).symmetrized();
        Self {
            op,
            projection,
            statistics,
            preconditioner,
            opts,
            images,
            cross,
            block,
            complement_floor: None,
            warm: vec![Vec::new(); r],
        }
    }

    pub fn rank(&self) -> usize {
        self.projection.rank()
    }

    pub fn complement(&self) -> Complement<'_> {
        Complement {
            projection: self.projection,
            statistics: self.statistics,
        }
    }

    /// Eigenvalues of `PHP` in the family span (Rayleigh–Ritz values).
    pub fn ritz_values(&self) -> Vec<f64> {
        linalg::symmetric_eigen(&self.block).values
    }

    /// Bottom `μ_min` of the spectrum of `P⊥HP⊥` on `Ran P⊥`; `+∞` when the
    /// complement is trivial.
    pub fn complement_floor(&mut self) -> Result<f64> {
        if let Some(m) = self.complement_floor {
            return Ok(m);
        }
        let comp = self.complement();
        let solver = &self.opts.solver;
        let report = match self.preconditioner {
            Some(m) if !(solver.dense && self.op.dim() <= crate::operators::DENSE_LIMIT) && self.op.dim() > 64 => {
                spectra::block_davidson(self.op, 1, Some(&comp), m, solver)
            }
            _ => spectra::lowest_eigenpairs(self.op, 1, Some(&comp), solver),
        };
        let mu = match report {
            Ok(r) if r.eigenvalues.is_empty() => f64::INFINITY,
            Ok(r) => {
                r.ensure_converged(solver.tol.max(1e-6))?;
                r.eigenvalues[0]
            }
            Err(Error::Annihilated { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        self.complement_floor = Some(mu);
        Ok(mu)
    }

    /// `μ_min − λ`; positive values certify that the resolvent exists with
    /// norm at most its inverse.
    pub fn complement_gap(&mut self, lambda: f64) -> Result<f64> {
        Ok(self.complement_floor()? - lambda)
    }

    /// Solves `(P⊥HP⊥ − λ) x_i = P⊥Hu_i` for every basis vector.
    fn resolvent_columns(&mut self, lambda: f64) -> Result<(Vec<Vec<f64>>, usize, f64)> {
        let comp = Complement {
            projection: self.projection,
            statistics: self.statistics,
        };
        let shifted = CompressedOperator {
            op: self.op,
            projector: Some(&comp),
            shift: lambda,
        };
        let pre = self.preconditioner.map(|m| ShiftedPreconditioner {
            inner: m,
            shift: (-lambda).max(0.0) + 0.1,
        });
        let mut cols = Vec::with_capacity(self.rank());
        let mut iterations = 0;
        let mut worst = 0.0f64;
        for i in 0..self.rank() {
            let x0 = if self.warm[i].is_empty() {
                None
            } else {
                Some(self.warm[i].as_slice())
            };
            let out = linalg::preconditioned_cg(
                &shifted,
                Some(&comp),
                pre.as_ref().map(|p| p as &dyn Preconditioner),
                &self.cross[i],
                x0,
                self.opts.inner_tol,
                self.opts.inner_max_iter,
            )?;
            iterations += out.iterations;
            worst = worst.max(out.relative_residual);
            cols.push(out.solution);
        }
        self.warm = cols.clone();
        Ok((cols, iterations, worst))
    }

    /// `F_P(λ)`; fails when `λ` is not below the complement spectrum.
    pub fn evaluate(&mut self, lambda: f64) -> Result<FsOperator> {
        let gap = self.complement_gap(lambda)?;
        if !(gap > 0.0) {
            return Err(Error::ComplementGapClosed { lambda, gap });
        }
        let (cols, inner_iterations, inner_residual) = self.resolvent_columns(lambda)?;
        let r = self.rank();
        let correction: Vec<Vec<f64>> = (0..r)
            .map(|i| (0..r).map(|j| linalg::dot(&self.cross[i], &cols[j])).collect())
            .collect();
        let raw = DenseSymmetric::from_fn(r, |i, j| self.block.get(i, j) - correction[i][j]);
        let asymmetry = raw.max_asymmetry();
        let f = raw.symmetrized();
        let eigenvalues = linalg::symmetric_eigen(&f).values;
        Ok(FsOperator {
            lambda,
            matrix: (0..r).map(|i| (0..r).map(|j| f.get(i, j)).collect()).collect(),
            correction,
            eigenvalues,
            asymmetry,
            complement_gap: gap,
            inner_iterations,
            inner_residual,
        })
    }

    /// `Q_P(λ)φ = φ − (P⊥HP⊥ − λ)⁻¹P⊥Hφ` for `φ = Σ c_i u_i`.
    pub fn q_map(&mut self, lambda: f64, coefficients: &[f64]) -> Result<Vec<f64>> {
        let gap = self.complement_gap(lambda)?;
        if !(gap > 0.0) {
            return Err(Error::ComplementGapClosed { lambda, gap });
        }
        let (cols, _, _) = self.resolvent_columns(lambda)?;
        let mut psi = self.projection.synthesize(coefficients);
        for (x, &c) in cols.iter().zip(coefficients) {
            linalg::axpy(-c, x, &mut psi);
        }
        Ok(psi)
    }

    fn g(&mut self, index: usize, lambda: f64, trace: &mut Vec<TracePoint>) -> Result<f64> {
        let f = self.evaluate(lambda)?;
        let nu = *f.eigenvalues.get(index).ok_or(Error::TooFewEigenpairs {
            needed: index + 1,
            have: f.eigenvalues.len(),
        })?;
        let g = nu - lambda;
        trace.push(TracePoint { lambda, g });
        Ok(g)
    }

    /// Root of `ν_index(λ) = λ` on `bracket`, by safeguarded secant steps.
    /// The bracket is widened downward, and upward towards the complement
    /// spectrum, until `g` changes sign.
    pub fn solve_fixed_point(&mut self, index: usize, bracket: (f64, f64)) -> Result<FixedPoint> {
        if index >= self.rank() {
            return Err(Error::TooFewEigenpairs {
                needed: index + 1,
                have: self.rank(),
            });
        }
        let floor = self.complement_floor()?;
        let (mut lo, mut hi) = bracket;
        if !(lo < hi) {
            return Err(Error::InvalidConfig("fixed-point bracket must satisfy lo < hi".into()));
        }
        // keep the resolvent well conditioned at the upper end
        hi = hi.min(floor - 1e-3 * (floor - lo).abs().max(1e-12));
        if lo >= hi {
            return Err(Error::ComplementGapClosed {
                lambda: lo,
                gap: floor - lo,
            });
        }
        let mut trace = Vec::new();
        let mut g_lo = self.g(index, lo, &mut trace)?;
        let mut widen = 0;
        while g_lo < 0.0 {
            widen += 1;
            if widen > 40 {
                return Err(Error::NoSignChange { index, lo, hi });
            }
            let width = hi - lo;
            hi = lo;
            lo -= 2.0 * width;
            g_lo = self.g(index, lo, &mut trace)?;
        }
        let mut g_hi = self.g(index, hi, &mut trace)?;
        widen = 0;
        while g_hi > 0.0 {
            widen += 1;
            if widen > 40 || !floor.is_finite() && widen > 20 {
                return Err(Error::NoSignChange { index, lo, hi });
            }
            lo = hi;
            g_lo = g_hi;
            hi = if floor.is_finite() {
                hi + 0.5 * (floor - hi)
            } else {
                hi + 2.0 * (hi - bracket.0).abs().max(1.0)
            };
            g_hi = self.g(index, hi, &mut trace)?;
        }
        let initial = (lo, hi);
        // Illinois-modified regula falsi with bisection fallback
        let mut side = 0i8;
        let mut lambda = lo;
        for _ in 0..self.opts.max_fixed_point_iter {
            let tol = self.opts.fixed_point_tol * lambda.abs().max(1e-4);
            if g_lo == 0.0 {
                lambda = lo;
                break;
            }
            if g_hi == 0.0 {
                lambda = hi;
                break;
            }
            let mut x = hi - g_hi * (hi - lo) / (g_hi - g_lo);
            if !(x > lo && x < hi) {
                x = 0.5 * (lo + hi);
            }
            let gx = self.g(index, x, &mut trace)?;
            lambda = x;
            if gx.abs() <= tol || (hi - lo) <= tol {
                break;
            }
            if gx > 0.0 {
                lo = x;
                g_lo = gx;
                if side == 1 {
                    g_hi *= 0.5;
                }
                side = 1;
            } else {
                hi = x;
                g_hi = gx;
                if side == -1 {
                    g_lo *= 0.5;
                }
                side = -1;
            }
        }
        let f = self.evaluate(lambda)?;
        let fm = DenseSymmetric {
            n: f.matrix.len(),
            data: f.matrix.iter().flatten().copied().collect(),
        };
        let eig = linalg::symmetric_eigen(&fm);
        let mut coefficients = eig.vectors[index].clone();
        spectra::fix_sign(&mut coefficients);
        Ok(FixedPoint {
            index,
            lambda,
            coefficients,
            bracket: initial,
            trace,
            complement_gap: floor - lambda,
        })
    }

    /// Closeness of the family to an exact eigenbasis at spectral parameter
    /// `λ`.
    pub fn diagnostics(&mut self, lambda: f64) -> Result<FsDiagnostics> {
        let fam = &self.projection.family;
        let n = fam.len();
        let mut dev = 0.0f64;
        for i in 0..n {
            let hv = self.op.apply_vec(&fam.members[i].vector);
            for j in 0..n {
                let mut x = linalg::dot(&fam.members[j].vector, &hv);
                if i == j {
                    x -= fam.members[i].energy;
                }
                dev = dev.max(x.abs());
            }
        }
        let f = self.evaluate(lambda)?;
        let schur = f
            .correction
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        Ok(FsDiagnostics {
            lambda,
            gram_offdiagonal: self.projection.max_offdiagonal(),
            hamiltonian_deviation: dev,
            schur_correction: schur,
        })
    }

    /// `H u_i`, cached at construction.
    pub fn images(&self) -> &[Vec<f64>] {
        &self.images
    }
}

/// Initial brackets for the two lowest fixed points from threshold data.
pub fn default_bracket(index: usize, table: &ThresholdTable) -> (f64, f64) {
    let g = table.gaps.g.unwrap_or((table.e_inf_1 - table.e_inf_0).abs().max(1e-3));
    match index {
        0 => (table.e_inf_0 - 5.0 * g, 0.5 * (table.e_inf_0 + table.e_inf_1)),
        _ => (table.e_inf_1 - 5.0 * g, table.e_inf_1 + g),
    }
}
