//! Low-lying eigenpairs of symmetric operators within a symmetry subspace,
//! gaps, ionization thresholds and exponential localization fits.
//!
//! The iterative solver is a block Lanczos method with full
//! reorthogonalization and thick restarts: the basis is expanded with
//! `H` applied to the newest block, the projected matrix `VᵀHV` is
//! diagonalized densely, and on overflow the basis is compressed onto the
//! lowest Ritz vectors. An optional projector is applied to every new basis
//! vector so the whole Krylov space stays inside one statistics sector.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, TensorShape};
use crate::linalg::{self, CompressedOperator, DenseSymmetric, LinearOperator, Projector, ShiftedInverse};
use crate::model::{ModelParams, NuclearConfiguration, Statistics};
use crate::operators::{self, KineticPreconditioner, ManyBodyOperator, Terms, DENSE_LIMIT};
use crate::rng;
use crate::symmetry::StatisticsProjector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual bound `‖Hψ − Eψ‖` for convergence.
    pub tol: f64,
    /// Block size; defaults to the number of requested pairs.
    pub block_size: Option<usize>,
    /// Largest basis before a thick restart.
    pub max_basis: usize,
    pub max_matvecs: usize,
    pub seed: u64,
    /// Materialize and diagonalize densely whenever the dimension allows.
    pub dense: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            block_size: None,
            max_basis: 72,
            max_matvecs: 60_000,
            seed: 0x5eed,
            dense: false,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub spacing: f64,
    pub stencil_order: u8,
}

/// Ascending eigenpairs with residuals and degeneracy grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub degeneracy_groups: Vec<Vec<usize>>,
    pub degeneracy_tolerance: f64,
    /// Statistics sector the solve was restricted to.
    pub subspace: String,
    pub discretization: Option<Discretization>,
    pub converged: bool,
    pub matvecs: usize,
}

impl SpectralReport {
    pub fn ensure_converged(&self, tol: f64) -> Result<()> {
        let worst = self.residuals.iter().fold(0.0f64, |m, r| m.max(*r));
        if self.converged && worst <= tol {
            Ok(())
        } else {
            Err(Error::NotConverged {
                solver: "block Lanczos",
                iterations: self.matvecs,
                residual: worst,
            })
        }
    }

    pub fn ground(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Re-groups eigenvalues with a new absolute tolerance.
    pub fn regroup(&mut self, tol: f64) {
        self.degeneracy_tolerance = tol;
        self.degeneracy_groups = degeneracy_groups(&self.eigenvalues, tol);
    }
}

/// Consecutive eigenvalues closer than `tol` share a group.
pub fn degeneracy_groups(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (v - values[*g.last().unwrap()]).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Default absolute degeneracy tolerance, `rel · |E₀|`.
pub fn default_degeneracy_tol(e0: f64, rel: f64) -> f64 {
    rel * e0.abs().max(1e-300)
}

/// Flips `v` so its entries have nonnegative sum.
pub fn fix_sign(v: &mut [f64]) {
    if v.iter().sum::<f64>() < 0.0 {
        linalg::scale(-1.0, v);
    }
}

/// `k` lowest eigenpairs of `op` inside the range of `subspace`.
///
/// Non-convergence is reported through `converged = false`; call
/// [`SpectralReport::ensure_converged`] to turn it into an error.
pub fn lowest_eigenpairs(
    op: &dyn LinearOperator,
    k: usize,
    subspace: Option<&dyn Projector>,
    opts: &SolverOptions,
) -> Result<SpectralReport> {
    if k == 0 {
        return Err(Error::InvalidConfig("requested zero eigenpairs".into()));
    }
    let dim = op.dim();
    if (opts.dense && dim <= DENSE_LIMIT) || dim <= 64 {
        dense_eigenpairs(op, k, subspace)
    } else {
        block_lanczos(op, k, subspace, opts)
    }
}

/// Dense reference solve: materializes `QHQ + c(I − Q)` with `c` above the
/// spectrum so the unwanted complement is pushed to the top.
pub fn dense_eigenpairs(
    op: &dyn LinearOperator,
    k: usize,
    subspace: Option<&dyn Projector>,
) -> Result<SpectralReport> {
    let dim = op.dim();
    if dim > DENSE_LIMIT {
        return Err(Error::DimensionBudget {
            dimension: dim,
            budget: DENSE_LIMIT,
        });
    }
    let base = DenseSymmetric::materialize(op);
    let bound = (0..dim)
        .map(|i| (0..dim).map(|j| base.get(i, j).abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let (matrix, sector_dim) = match subspace {
        Some(q) => {
            let qm = DenseSymmetric::materialize(&ProjectorAsOperator(q));
            let qhq = DenseSymmetric::materialize(&CompressedOperator {
                op,
                projector: Some(q),
                shift: 0.0,
            });
            let trace: f64 = (0..dim).map(|i| qm.get(i, i)).sum();
            let c = 2.0 * bound + 1.0;
            (
                DenseSymmetric::from_fn(dim, |i, j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    qhq.get(i, j) + c * (id - qm.get(i, j))
                }),
                Float::round(trace) as usize,
            )
        }
        None => (base, dim),
    };
    let eig = linalg::symmetric_eigen(&matrix);
    let take = k.min(sector_dim);
    let mut vectors: Vec<Vec<f64>> = eig.vectors.into_iter().take(take).collect();
    for v in vectors.iter_mut() {
        fix_sign(v);
    }
    let values: Vec<f64> = eig.values.into_iter().take(take).collect();
    let residuals = residual_norms(op, subspace, &values, &vectors);
    Ok(SpectralReport {
        degeneracy_groups: degeneracy_groups(&values, 0.0),
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        degeneracy_tolerance: 0.0,
        subspace: String::from(if subspace.is_some() { "projected" } else { "full" }),
        discretization: None,
        converged: true,
        matvecs: dim,
    })
}

struct ProjectorAsOperator<'a>(&'a dyn Projector);

impl LinearOperator for ProjectorAsOperator<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.0.project(x, out)
    }
}

/// Residuals of `QHQ` on the range of `Q`.
fn residual_norms(
    op: &dyn LinearOperator,
    subspace: Option<&dyn Projector>,
    values: &[f64],
    vectors: &[Vec<f64>],
) -> Vec<f64> {
    let op = CompressedOperator {
        op,
        projector: subspace,
        shift: 0.0,
    };
    values
        .iter()
        .zip(vectors)
        .map(|(&e, v)| {
            let mut hv = op.apply_vec(v);
            linalg::axpy(-e, v, &mut hv);
            linalg::norm(&hv)
        })
        .collect()
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (b, &c) in basis.iter().zip(coeffs) {
        if c != 0.0 {
            linalg::axpy(c, b, &mut out);
        }
    }
    out
}

struct Basis {
    vectors: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
    /// `VᵀHV`, row-major with stride `cap`.
    t: Vec<f64>,
    cap: usize,
}

impl Basis {
    fn new(cap: usize) -> Self {
        Self {
            vectors: Vec::new(),
            images: Vec::new(),
            t: vec![0.0; cap * cap],
            cap,
        }
    }

    fn len(&self) -> usize {
        self.vectors.len()
    }

    fn push(&mut self, v: Vec<f64>, w: Vec<f64>) {
        let m = self.len();
        for (i, bi) in self.vectors.iter().enumerate() {
            let c = linalg::dot(bi, &w);
            self.t[i * self.cap + m] = c;
            self.t[m * self.cap + i] = c;
        }
        self.t[m * self.cap + m] = linalg::dot(&v, &w);
        self.vectors.push(v);
        self.images.push(w);
    }

    fn projected(&self) -> DenseSymmetric {
        let cap = self.cap;
        DenseSymmetric::from_fn(self.len(), |i, j| self.t[i * cap + j])
    }
}

/// Thick-restart block Lanczos with full reorthogonalization.
pub fn block_lanczos(
    op: &dyn LinearOperator,
    k: usize,
    subspace: Option<&dyn Projector>,
    opts: &SolverOptions,
) -> Result<SpectralReport> {
    let dim = op.dim();
    let b = opts.block_size.unwrap_or(k).max(1).min(dim);
    let cap = opts.max_basis.max(3 * k + 2 * b).min(dim);
    let keep = (cap / 2).max(k + b).min(cap.saturating_sub(b)).max(k.min(cap));
    let mut rng = rng::seeded(opts.seed);
    let project = |v: &mut Vec<f64>| {
        if let Some(q) = subspace {
            q.project_in_place(v);
        }
    };

    let mut basis = Basis::new(cap);
    let mut matvecs = 0usize;
    let mut pending: Vec<Vec<f64>> = (0..b).map(|_| rng::uniform_vector(&mut rng, dim)).collect();
    let mut since_check = 0usize;
    let mut refills = 0usize;

    loop {
        let mut added = 0;
        for mut v in core::mem::take(&mut pending) {
            if basis.len() >= cap {
                break;
            }
            project(&mut v);
            let before = linalg::norm(&v);
            let after = linalg::orthogonalize(&basis.vectors, &mut v);
            if !(after > 1e-10 * before) {
                continue;
            }
            let mut w = op.apply_vec(&v);
            project(&mut w);
            matvecs += 1;
            basis.push(v, w);
            added += 1;
        }

        let mut exhausted = false;
        if added == 0 {
            // the block collapsed into the basis: restart it randomly, and
            // stop once random vectors no longer add a direction
            refills += 1;
            if basis.len() >= cap.min(dim) || refills > 3 {
                exhausted = true;
            } else {
                pending = (0..b).map(|_| rng::uniform_vector(&mut rng, dim)).collect();
                continue;
            }
        }
        since_check += added;

        let m = basis.len();
        let eig = linalg::symmetric_eigen(&basis.projected());
        let want = k.min(m);
        let full = m + b > cap;
        let out_of_budget = matvecs >= opts.max_matvecs;
        if !(exhausted || full || out_of_budget || since_check >= 24) {
            pending = basis.images[m - added..].to_vec();
            continue;
        }
        since_check = 0;

        let ritz: Vec<Vec<f64>> = (0..want).map(|i| combine(&basis.vectors, &eig.vectors[i])).collect();
        let residual_vecs: Vec<Vec<f64>> = (0..want)
            .map(|i| {
                let mut r = combine(&basis.images, &eig.vectors[i]);
                linalg::axpy(-eig.values[i], &ritz[i], &mut r);
                r
            })
            .collect();
        let converged = want == k && residual_vecs.iter().all(|r| linalg::norm(r) <= opts.tol);

        if converged || exhausted || out_of_budget {
            let values = eig.values[..want].to_vec();
            let mut vectors = ritz;
            for v in vectors.iter_mut() {
                linalg::normalize(v);
                fix_sign(v);
            }
            let residuals = residual_norms(op, subspace, &values, &vectors);
            let ok = want == k
                && (residuals.iter().all(|&r| r <= opts.tol) || exhausted && m == dim);
            return Ok(SpectralReport {
                degeneracy_groups: degeneracy_groups(&values, 0.0),
                eigenvalues: values,
                eigenvectors: vectors,
                residuals,
                degeneracy_tolerance: 0.0,
                subspace: String::from(if subspace.is_some() { "projected" } else { "full" }),
                discretization: None,
                converged: ok,
                matvecs,
            });
        }

        if full {
            let keep = keep.min(m);
            let mut fresh = Basis::new(cap);
            for i in 0..keep {
                let mut v = combine(&basis.vectors, &eig.vectors[i]);
                let w = combine(&basis.images, &eig.vectors[i]);
                let nrm = linalg::orthogonalize(&fresh.vectors, &mut v);
                if nrm > 0.5 {
                    // images follow from linearity; rescale for the tiny
                    // normalization change
                    let mut w = w;
                    linalg::scale(1.0 / nrm, &mut w);
                    fresh.push(v, w);
                }
            }
            basis = fresh;
            // continue from the residuals of the lowest unconverged pairs
            let mut order: Vec<usize> = (0..want).collect();
            order.sort_by(|&a, &c| {
                linalg::norm(&residual_vecs[c])
                    .partial_cmp(&linalg::norm(&residual_vecs[a]))
                    .unwrap_or(core::cmp::Ordering::Equal)
            });
            pending = order.into_iter().take(b).map(|i| residual_vecs[i].clone()).collect();
            while pending.len() < b {
                pending.push(rng::uniform_vector(&mut rng, dim));
            }
        } else {
            pending = basis.images[m - added..].to_vec();
        }
    }
}

/// Block Davidson iteration: the basis grows by preconditioned residuals
/// `M(θ_i)⁻¹ r_i` of the lowest unconverged Ritz pairs, and restarts onto
/// the lowest Ritz vectors when full.
pub fn block_davidson(
    op: &dyn LinearOperator,
    k: usize,
    subspace: Option<&dyn Projector>,
    preconditioner: &dyn ShiftedInverse,
    opts: &SolverOptions,
) -> Result<SpectralReport> {
    let dim = op.dim();
    let b = opts.block_size.unwrap_or(k).max(1).min(dim);
    let cap = (opts.max_basis / 2).max(4 * k + 2 * b).min(dim);
    let keep = (cap / 2).max(k + 1).min(cap.saturating_sub(b)).max(k.min(cap));
    let mut rng = rng::seeded(opts.seed);
    let project = |v: &mut Vec<f64>| {
        if let Some(q) = subspace {
            q.project_in_place(v);
        }
    };

    let mut basis = Basis::new(cap);
    let mut matvecs = 0usize;
    let mut pending: Vec<Vec<f64>> = (0..b.max(k)).map(|_| rng::uniform_vector(&mut rng, dim)).collect();
    loop {
        let mut added = 0;
        for mut v in core::mem::take(&mut pending) {
            if basis.len() >= cap {
                break;
            }
            project(&mut v);
            let before = linalg::norm(&v);
            let after = linalg::orthogonalize(&basis.vectors, &mut v);
            if !(after > 1e-10 * before) {
                continue;
            }
            let mut w = op.apply_vec(&v);
            project(&mut w);
            matvecs += 1;
            basis.push(v, w);
            added += 1;
        }
        let m = basis.len();
        if m == 0 {
            return Err(Error::Annihilated { norm: 0.0 });
        }
        let eig = linalg::symmetric_eigen(&basis.projected());
        let want = k.min(m);
        let ritz: Vec<Vec<f64>> = (0..want).map(|i| combine(&basis.vectors, &eig.vectors[i])).collect();
        let residuals: Vec<Vec<f64>> = (0..want)
            .map(|i| {
                let mut r = combine(&basis.images, &eig.vectors[i]);
                linalg::axpy(-eig.values[i], &ritz[i], &mut r);
                r
            })
            .collect();
        let norms: Vec<f64> = residuals.iter().map(|r| linalg::norm(r)).collect();
        let converged = want == k && norms.iter().all(|&r| r <= opts.tol);
        let exhausted = added == 0 && m >= dim.min(cap);
        if converged || exhausted || matvecs >= opts.max_matvecs || (added == 0 && m == dim) {
            let values = eig.values[..want].to_vec();
            let mut vectors = ritz;
            for v in vectors.iter_mut() {
                linalg::normalize(v);
                fix_sign(v);
            }
            let final_res = residual_norms(op, subspace, &values, &vectors);
            let ok = want == k && final_res.iter().all(|&r| r <= opts.tol);
            return Ok(SpectralReport {
                degeneracy_groups: degeneracy_groups(&values, 0.0),
                eigenvalues: values,
                eigenvectors: vectors,
                residuals: final_res,
                degeneracy_tolerance: 0.0,
                subspace: String::from(if subspace.is_some() { "projected" } else { "full" }),
                discretization: None,
                converged: ok,
                matvecs,
            });
        }

        let targets: Vec<usize> = (0..want).filter(|&i| norms[i] > opts.tol).take(b).collect();
        let mut fresh: Vec<Vec<f64>> = targets
            .iter()
            .map(|&i| {
                let theta = eig.values[i];
                let shift = (-theta).max(0.0) + 0.1;
                let mut t = vec![0.0; dim];
                preconditioner.apply_shifted(&residuals[i], shift, &mut t);
                t
            })
            .collect();
        if added == 0 {
            // preconditioned residuals fell inside the basis: fall back to
            // the raw residuals and a random direction
            fresh = targets.iter().map(|&i| residuals[i].clone()).collect();
            fresh.push(rng::uniform_vector(&mut rng, dim));
        }
        if m + fresh.len() > cap {
            let keep = keep.min(m);
            let mut next = Basis::new(cap);
            for i in 0..keep {
                let mut v = combine(&basis.vectors, &eig.vectors[i]);
                let mut w = combine(&basis.images, &eig.vectors[i]);
                let nrm = linalg::orthogonalize(&next.vectors, &mut v);
                if nrm > 0.5 {
                    linalg::scale(1.0 / nrm, &mut w);
                    next.push(v, w);
                }
            }
            basis = next;
        }
        pending = fresh;
    }
}

/// Solves `op` restricted to the sector selected by `statistics`.
pub fn solve_sector(
    op: &ManyBodyOperator,
    k: usize,
    statistics: Statistics,
    opts: &SolverOptions,
) -> Result<SpectralReport> {
    let shape = op.shape();
    let projector = StatisticsProjector::for_statistics(statistics, shape);
    let subspace = projector.as_ref().map(|p| p as &dyn Projector);
    let preconditioner = KineticPreconditioner::new(op, 0.0);
    let mut report = match &preconditioner {
        Some(m) if !(opts.dense && op.dim() <= DENSE_LIMIT) && op.dim() > 64 => {
            block_davidson(op, k, subspace, m, opts)?
        }
        _ => lowest_eigenpairs(op, k, subspace, opts)?,
    };
    report.subspace = String::from(match (statistics, &projector) {
        (_, None) => "full",
        (Statistics::Fermionic, Some(_)) => "antisymmetric",
        _ => "symmetric",
    });
    report.discretization = Some(Discretization {
        spacing: op.grid().spacing(),
        stencil_order: op.stencil_order,
    });
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub ground: f64,
    pub first_excited: f64,
    pub gap: f64,
    pub ground_multiplicity: usize,
}

/// Gap between the ground level and the next distinct level.
///
/// Levels within `degeneracy_tol` of `E₀` count as the ground level.
pub fn gap(report: &SpectralReport, degeneracy_tol: f64) -> Result<GapResult> {
    let values = &report.eigenvalues;
    if values.len() < 2 {
        return Err(Error::TooFewEigenpairs {
            needed: 2,
            have: values.len(),
        });
    }
    let e0 = values[0];
    match values.iter().position(|&e| e - e0 > degeneracy_tol) {
        Some(j) => Ok(GapResult {
            ground: e0,
            first_excited: values[j],
            gap: values[j] - e0,
            ground_multiplicity: j,
        }),
        None => Err(Error::TooFewEigenpairs {
            needed: values.len() + 1,
            have: values.len(),
        }),
    }
}

/// Ground energy of `electrons` electrons in the field of `nuclei`; zero for
/// no electrons.
pub fn ground_energy(
    model: &ModelParams,
    nuclei: &NuclearConfiguration,
    electrons: usize,
    statistics: Statistics,
    opts: &SolverOptions,
) -> Result<f64> {
    if electrons == 0 {
        return Ok(if nuclei.include_nuclear_repulsion {
            operators::nuclear_repulsion(model, nuclei)
        } else {
            0.0
        });
    }
    let mut terms = Terms::ELECTRONIC;
    terms.nuclear_repulsion = nuclei.include_nuclear_repulsion;
    let op = operators::assemble_with_terms(model, nuclei, electrons, terms)?;
    let report = solve_sector(&op, 1, statistics, opts)?;
    report.ensure_converged(opts.tol.max(1e-6))?;
    Ok(report.ground())
}

/// Ground energy after removing one electron to infinity.
pub fn ionization_threshold(
    model: &ModelParams,
    nuclei: &NuclearConfiguration,
    electrons: usize,
    statistics: Statistics,
    opts: &SolverOptions,
) -> Result<f64> {
    if electrons == 0 {
        return Err(Error::InvalidConfig("no electron to ionize".into()));
    }
    ground_energy(model, nuclei, electrons - 1, statistics, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationFit {
    /// Fitted decay rate of the shell norms.
    pub alpha: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub shells: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationOptions {
    pub shell_width: f64,
    /// Distances below this are excluded from the fit.
    pub inner_radius: f64,
    /// Fraction of the box near each wall that is excluded.
    pub wall_margin: f64,
    /// Shells below `floor · max` are treated as numerical noise.
    pub floor: f64,
    pub min_shells: usize,
}

impl Default for LocalizationOptions {
    fn default() -> Self {
        Self {
            shell_width: 0.5,
            inner_radius: 3.0,
            wall_margin: 0.2,
            floor: 1e-11,
            min_shells: 5,
        }
    }
}

/// Fits `−log ρ(d) ≈ α d + c`, where `ρ(d)` is the root-mean-square
/// amplitude over grid nodes at distance `d` from the nearest-center
/// configuration.
pub fn localization_rate(
    psi: &[f64],
    shape: TensorShape,
    grid: &Grid,
    centers: &[f64],
    opts: &LocalizationOptions,
) -> Result<LocalizationFit> {
    if psi.len() != shape.len() {
        return Err(Error::ShapeMismatch {
            expected: shape.len(),
            actual: psi.len(),
        });
    }
    if centers.is_empty() {
        return Err(Error::InvalidConfig("no localization centers".into()));
    }
    let coords = grid.coords();
    let limit = grid.extent * (1.0 - opts.wall_margin);
    let nearest: Vec<f64> = coords
        .iter()
        .map(|&x| centers.iter().map(|&z| (x - z) * (x - z)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut sums: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    shape.for_each(|flat, idx| {
        if idx.iter().any(|&i| coords[i].abs() > limit) {
            return;
        }
        let d = Float::sqrt(idx.iter().map(|&i| nearest[i]).sum::<f64>());
        let s = Float::floor(d / opts.shell_width) as usize;
        if s >= sums.len() {
            sums.resize(s + 1, 0.0);
            counts.resize(s + 1, 0);
        }
        sums[s] += psi[flat] * psi[flat];
        counts[s] += 1;
    });
    let shells: Vec<(f64, f64)> = sums
        .iter()
        .zip(&counts)
        .enumerate()
        .filter(|(_, (_, &c))| c > 0)
        .map(|(s, (&sum, &c))| ((s as f64 + 0.5) * opts.shell_width, Float::sqrt(sum / c as f64)))
        .collect();
    let peak = shells.iter().fold(0.0f64, |m, s| m.max(s.1));
    // shells reaching past the excluded wall region are incomplete
    let reach = limit - centers.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let usable: Vec<(f64, f64)> = shells
        .iter()
        .copied()
        .filter(|&(d, v)| {
            d >= opts.inner_radius && d + 0.5 * opts.shell_width <= reach && v > opts.floor * peak
        })
        .collect();
    // the window stops at the first shell lost in the floor
    let mut window: Vec<(f64, f64)> = Vec::new();
    for p in usable {
        if let Some(last) = window.last() {
            if p.0 - last.0 > 1.5 * opts.shell_width {
                break;
            }
        }
        window.push(p);
    }
    if window.len() < opts.min_shells {
        return Err(Error::TooFewShells {
            needed: opts.min_shells,
            have: window.len(),
        });
    }
    let xs: Vec<f64> = window.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = window.iter().map(|p| -Float::ln(p.1)).collect();
    let (slope, r2) = linear_fit(&xs, &ys);
    Ok(LocalizationFit {
        alpha: slope,
        r_squared: r2,
        window: (xs[0], *xs.last().unwrap()),
        shells,
    })
}

/// Least-squares slope and coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}
