//! Per-geometry analysis: direct solve, cluster thresholds, the
//! Feshbach–Schur reduction and the localization fits, plus the scan and
//! the degeneracy demo built on top of it.

use clustergap_core::clusters::{
    build_threshold_table, detect_partition, NuclearPartition, ThresholdBuild, ThresholdTable,
};
use clustergap_core::fsmap::{
    build_candidate_family, default_bracket, gram_and_inverse, FixedPoint, FsDiagnostics, FsMap,
    FsOptions, FsProjection, MemberLabel,
};
use clustergap_core::model::{ExperimentConfig, NuclearConfiguration, Statistics};
use clustergap_core::operators::{self, KineticPreconditioner, ManyBodyOperator};
use clustergap_core::spectra::{
    self, localization_rate, LocalizationOptions, SolverOptions, SpectralReport,
};
use clustergap_core::symmetry::StatisticsProjector;
use clustergap_core::{Error, LinearOperator, Projector, Result};
use serde::{Deserialize, Serialize};

/// Eigenpairs requested from every direct and cluster solve.
pub const LEVELS: usize = 4;

/// Absolute norm below which a symmetrized product counts as annihilated.
const ANNIHILATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum PointStatus {
    Ok,
    Failed { stage: String, message: String },
}

impl PointStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, PointStatus::Ok)
    }

    pub fn label(&self) -> String {
        match self {
            PointStatus::Ok => String::from("ok"),
            PointStatus::Failed { stage, .. } => format!("failed:{}", stage),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationEntry {
    /// Cluster index, or `None` for eigenvectors of the whole system.
    pub cluster: Option<usize>,
    pub electrons: usize,
    pub level: usize,
    pub alpha: f64,
    pub r_squared: f64,
    /// `√(2m(Σ − E))` with `Σ` the ground energy of the cluster with one
    /// electron fewer; reported next to the fit, not enforced.
    pub alpha_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub factor: f64,
    pub positions: Vec<f64>,
    /// Least internuclear distance `R(y)`.
    pub min_distance: Option<f64>,
    pub status: PointStatus,
    pub e0: Option<f64>,
    pub e1: Option<f64>,
    pub gap: Option<f64>,
    pub ground_multiplicity: Option<usize>,
    pub direct_levels: Vec<f64>,
    pub direct_matvecs: Option<usize>,
    pub e_inf_0: Option<f64>,
    pub e_inf_1: Option<f64>,
    pub threshold_gap_constant: Option<f64>,
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    /// `μ_min − λ₁` on the complement of the family.
    pub complement_gap: Option<f64>,
    pub complement_floor: Option<f64>,
    /// Rayleigh–Ritz values of `H` on the family span.
    pub ritz_values: Vec<f64>,
    pub family_size: Option<usize>,
    pub family_labels: Vec<MemberLabel>,
    pub rejected: Vec<String>,
    pub gram_condition: Option<f64>,
    pub diagnostics: Option<FsDiagnostics>,
    pub localization: Vec<LocalizationEntry>,
}

impl ScanPoint {
    fn new(factor: f64, geometry: &NuclearConfiguration) -> Self {
        Self {
            factor,
            positions: geometry.positions.clone(),
            min_distance: geometry.min_distance(),
            status: PointStatus::Ok,
            e0: None,
            e1: None,
            gap: None,
            ground_multiplicity: None,
            direct_levels: Vec::new(),
            direct_matvecs: None,
            e_inf_0: None,
            e_inf_1: None,
            threshold_gap_constant: None,
            lambda0: None,
            lambda1: None,
            complement_gap: None,
            complement_floor: None,
            ritz_values: Vec::new(),
            family_size: None,
            family_labels: Vec::new(),
            rejected: Vec::new(),
            gram_condition: None,
            diagnostics: None,
            localization: Vec::new(),
        }
    }
}

/// Everything a point analysis produces, including the vectors the report
/// leaves out.
pub struct PointAnalysis {
    pub point: ScanPoint,
    pub direct: Option<SpectralReport>,
    pub thresholds: Option<ThresholdBuild>,
    pub fixed_points: Vec<FixedPoint>,
}

/// Run-time knobs that are not part of the config document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Settings {
    /// Force dense diagonalization wherever the dimension allows.
    pub dense: bool,
}

pub fn solver_options(cfg: &ExperimentConfig, settings: Settings) -> SolverOptions {
    SolverOptions {
        tol: cfg.tolerances.solver,
        seed: cfg.seed,
        dense: settings.dense,
        ..SolverOptions::default()
    }
}

pub fn fs_options(cfg: &ExperimentConfig, solver: &SolverOptions) -> FsOptions {
    FsOptions {
        inner_tol: cfg.tolerances.inner,
        fixed_point_tol: cfg.tolerances.fixed_point,
        solver: solver.clone(),
        ..FsOptions::default()
    }
}

pub fn degeneracy_tol(cfg: &ExperimentConfig, e0: f64) -> f64 {
    spectra::default_degeneracy_tol(e0, cfg.tolerances.degeneracy)
}

/// Lowest levels of the full operator in the configured sector.
pub fn direct_solve(
    cfg: &ExperimentConfig,
    geometry: &NuclearConfiguration,
    levels: usize,
    opts: &SolverOptions,
) -> Result<(ManyBodyOperator, SpectralReport)> {
    let op = operators::assemble_full(cfg, geometry)?;
    let report = spectra::solve_sector(&op, levels, cfg.particles.statistics, opts)?;
    report.ensure_converged(opts.tol.max(1e-6))?;
    Ok((op, report))
}

pub fn thresholds(
    cfg: &ExperimentConfig,
    geometry: &NuclearConfiguration,
    partition: &NuclearPartition,
    opts: &SolverOptions,
) -> Result<ThresholdBuild> {
    build_threshold_table(
        &cfg.model,
        geometry,
        partition,
        cfg.particles.electron_count,
        cfg.particles.statistics,
        LEVELS,
        cfg.tolerances.degeneracy,
        opts,
    )
}

/// Family, projection and preconditioner for the reduction of `op`.
pub struct Reduction {
    pub projection: FsProjection,
    pub statistics: Option<StatisticsProjector>,
    pub preconditioner: Option<KineticPreconditioner>,
}

pub fn reduction(
    cfg: &ExperimentConfig,
    op: &ManyBodyOperator,
    build: &ThresholdBuild,
) -> Result<Reduction> {
    let statistics = StatisticsProjector::for_statistics(cfg.particles.statistics, op.shape());
    let family = build_candidate_family(build, op.shape(), statistics.as_ref(), ANNIHILATION_TOL)?;
    let projection = gram_and_inverse(family, op.dim(), cfg.tolerances.gram_floor)?;
    Ok(Reduction {
        projection,
        statistics,
        preconditioner: KineticPreconditioner::new(op, 0.0),
    })
}

impl Reduction {
    pub fn map<'a>(&'a self, op: &'a ManyBodyOperator, opts: FsOptions) -> FsMap<'a> {
        FsMap::new(
            op,
            &self.projection,
            self.statistics.as_ref().map(|p| p as &dyn Projector),
            self.preconditioner
                .as_ref()
                .map(|p| p as &dyn clustergap_core::linalg::ShiftedInverse),
            opts,
        )
    }
}

/// Decay fits for every bound eigenvector entering the family.
pub fn localization_fits(
    cfg: &ExperimentConfig,
    geometry: &NuclearConfiguration,
    partition: &NuclearPartition,
    build: &ThresholdBuild,
) -> Result<Vec<LocalizationEntry>> {
    let table = &build.table;
    let grid = cfg.model.grid();
    let lopts = LocalizationOptions::default();
    let mut used: Vec<(usize, usize, usize)> = Vec::new();
    let k = table.clusters.len();
    for j in 0..k {
        let c = table.reference[j];
        if c > 0 {
            used.push((j, c, 0));
            if let Some(r) = build.reports[j].get(c).and_then(|r| r.as_ref()) {
                let e0 = r.eigenvalues[0];
                if let Some(start) = r.eigenvalues.iter().position(|&e| e - e0 > table.tolerance) {
                    for p in 0..table.excited_multiplicity[j] {
                        used.push((j, c, start + p));
                    }
                }
            }
        }
    }
    for occ in &table.ionic_minimizers {
        for (j, &c) in occ.iter().enumerate() {
            if c > 0 && !used.iter().any(|&(a, b, l)| a == j && b == c && l == 0) {
                used.push((j, c, 0));
            }
        }
    }
    let mut out = Vec::with_capacity(used.len());
    for (j, c, level) in used {
        let report = build.reports[j]
            .get(c)
            .and_then(|r| r.as_ref())
            .ok_or_else(|| Error::MissingEntry(format!("cluster {} with {} electrons", j, c)))?;
        let psi = report.eigenvectors.get(level).ok_or(Error::TooFewEigenpairs {
            needed: level + 1,
            have: report.eigenvectors.len(),
        })?;
        let centers: Vec<f64> = partition.blocks[j]
            .iter()
            .map(|&i| geometry.positions[i])
            .collect();
        let shape = clustergap_core::grid::TensorShape::new(grid.points, c);
        let fit = localization_rate(psi, shape, &grid, &centers, &lopts)?;
        let energy = report.eigenvalues[level];
        let alpha_bound = table.clusters[j]
            .ground(c - 1)
            .filter(|&sigma| sigma > energy)
            .map(|sigma| (2.0 * cfg.model.electron_mass * (sigma - energy)).sqrt());
        out.push(LocalizationEntry {
            cluster: if k == 1 { None } else { Some(j) },
            electrons: c,
            level,
            alpha: fit.alpha,
            r_squared: fit.r_squared,
            alpha_bound,
        });
    }
    Ok(out)
}

struct Stage<'a> {
    point: &'a mut ScanPoint,
}

impl Stage<'_> {
    fn fail(&mut self, stage: &str, err: &Error) {
        self.point.status = PointStatus::Failed {
            stage: stage.to_string(),
            message: err.to_string(),
        };
    }
}

/// Runs every stage at one geometry; the first failing stage is recorded
/// and the remaining ones are skipped.
pub fn analyze_point(
    cfg: &ExperimentConfig,
    settings: Settings,
    factor: f64,
    geometry: &NuclearConfiguration,
    blocks: &[Vec<usize>],
) -> PointAnalysis {
    let mut point = ScanPoint::new(factor, geometry);
    let mut out = PointAnalysis {
        point: point.clone(),
        direct: None,
        thresholds: None,
        fixed_points: Vec::new(),
    };
    let opts = solver_options(cfg, settings);
    let mut stage = Stage { point: &mut point };

    let (op, direct) = match direct_solve(cfg, geometry, LEVELS, &opts) {
        Ok(x) => x,
        Err(e) => {
            stage.fail("direct", &e);
            out.point = point;
            return out;
        }
    };
    stage.point.direct_levels = direct.eigenvalues.clone();
    stage.point.direct_matvecs = Some(direct.matvecs);
    match spectra::gap(&direct, degeneracy_tol(cfg, direct.ground())) {
        Ok(g) => {
            stage.point.e0 = Some(g.ground);
            stage.point.e1 = Some(g.first_excited);
            stage.point.gap = Some(g.gap);
            stage.point.ground_multiplicity = Some(g.ground_multiplicity);
        }
        Err(e) => {
            stage.fail("gap", &e);
            out.point = point;
            out.direct = Some(direct);
            return out;
        }
    }
    out.direct = Some(direct);

    let result = (|| -> std::result::Result<(), (&'static str, Error)> {
        let partition = NuclearPartition::from_blocks(geometry, blocks.to_vec())
            .map_err(|e| ("partition", e))?;
        let build = thresholds(cfg, geometry, &partition, &opts).map_err(|e| ("thresholds", e))?;
        stage.point.e_inf_0 = Some(build.table.e_inf_0);
        stage.point.e_inf_1 = Some(build.table.e_inf_1);
        stage.point.threshold_gap_constant = build.table.gaps.g;
        let fits = localization_fits(cfg, geometry, &partition, &build);
        let red = reduction(cfg, &op, &build).map_err(|e| ("family", e))?;
        stage.point.family_size = Some(red.projection.rank());
        stage.point.family_labels = red
            .projection
            .family
            .members
            .iter()
            .map(|m| m.label.clone())
            .collect();
        stage.point.rejected = red
            .projection
            .family
            .rejected
            .iter()
            .map(|r| format!("{:?}: {}", r.label, r.reason))
            .collect();
        stage.point.gram_condition = Some(red.projection.condition);
        let mut map = red.map(&op, fs_options(cfg, &opts));
        stage.point.ritz_values = map.ritz_values();
        let floor = map.complement_floor().map_err(|e| ("complement", e))?;
        stage.point.complement_floor = Some(floor);
        let fp0 = map
            .solve_fixed_point(0, default_bracket(0, &build.table))
            .map_err(|e| ("fixed_point", e))?;
        stage.point.lambda0 = Some(fp0.lambda);
        let diag = map.diagnostics(fp0.lambda).map_err(|e| ("diagnostics", e))?;
        stage.point.diagnostics = Some(diag);
        if map.rank() > 1 {
            let fp1 = map
                .solve_fixed_point(1, default_bracket(1, &build.table))
                .map_err(|e| ("fixed_point", e))?;
            stage.point.lambda1 = Some(fp1.lambda);
            stage.point.complement_gap = Some(fp1.complement_gap);
            out.fixed_points = vec![fp0, fp1];
        } else {
            stage.point.complement_gap = Some(fp0.complement_gap);
            out.fixed_points = vec![fp0];
        }
        stage.point.localization = fits.map_err(|e| ("localization", e))?;
        out.thresholds = Some(build);
        Ok(())
    })();
    if let Err((name, e)) = result {
        stage.fail(name, &e);
    }
    out.point = point;
    out
}

/// Geometry of a scan point: the base layout scaled about the center of
/// the first cluster, then translated onto grid nodes in the middle of
/// the box.
pub fn scan_geometry(
    cfg: &ExperimentConfig,
    first_block: &[usize],
    factor: f64,
) -> NuclearConfiguration {
    let base = &cfg.nuclei;
    let center = first_block.iter().map(|&i| base.positions[i]).sum::<f64>() / first_block.len() as f64;
    base.scaled_about(center, factor)
        .centered_on(&cfg.model.grid())
}

/// Threshold for cluster detection: the configured value, or half the
/// smallest internuclear distance at the first scan factor.
pub fn partition_threshold(cfg: &ExperimentConfig, factors: &[f64]) -> f64 {
    if let Some(t) = cfg.scan.as_ref().and_then(|s| s.partition_threshold) {
        return t;
    }
    let f0 = factors.first().copied().unwrap_or(1.0);
    cfg.nuclei
        .scaled_about(0.0, f0)
        .min_distance()
        .map(|d| 0.5 * d)
        .unwrap_or(1.0)
}

/// Scale factors, the geometry at each factor, and the cluster blocks.
pub type ScanPlan = (Vec<f64>, Vec<NuclearConfiguration>, Vec<Vec<usize>>);

/// Scan geometries and the cluster blocks detected along them.
pub fn scan_plan(cfg: &ExperimentConfig) -> Result<ScanPlan> {
    let factors = cfg
        .scan
        .as_ref()
        .map(|s| s.factors.clone())
        .unwrap_or_else(|| vec![1.0]);
    let threshold = partition_threshold(cfg, &factors);
    // block membership is scale-free under uniform scaling; detect it on
    // the raw scaled layouts, then place each one on the grid
    let raw: Vec<NuclearConfiguration> = factors.iter().map(|&f| cfg.nuclei.scaled_about(0.0, f)).collect();
    let detection = detect_partition(&raw, threshold)?;
    let blocks = detection.partition.blocks.clone();
    let geometries = factors
        .iter()
        .map(|&f| scan_geometry(cfg, &blocks[0], f))
        .collect();
    Ok((factors, geometries, blocks))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Level {
    pub separation: f64,
    pub statistics: Statistics,
    pub levels: Vec<f64>,
    /// `E₁ − E₀` of the two lowest eigenvalues, degenerate or not.
    pub splitting: f64,
    /// Gap to the first level above the degeneracy tolerance.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H2Demo {
    pub atomic_levels: Vec<f64>,
    pub atomic_gap: f64,
    pub rows: Vec<H2Level>,
}

impl H2Demo {
    pub fn row(&self, separation: f64, statistics: Statistics) -> Option<&H2Level> {
        self.rows
            .iter()
            .find(|r| r.statistics == statistics && (r.separation - separation).abs() < 1e-9)
    }
}

/// Two-electron diatomic at each separation under distinguishable and
/// bosonic statistics, next to the single-atom excitation gap.
pub fn run_h2_demo(cfg: &ExperimentConfig, settings: Settings, separations: &[f64]) -> Result<H2Demo> {
    if cfg.nuclei.count() != 2 || cfg.particles.electron_count != 2 || !cfg.is_neutral() {
        return Err(Error::InvalidConfig(
            "the degeneracy demo needs a neutral diatomic with two electrons".into(),
        ));
    }
    let opts = solver_options(cfg, settings);
    let atom = NuclearConfiguration::new(vec![0.0], vec![cfg.nuclei.charges[0]]);
    let mut atom_cfg = cfg.clone();
    atom_cfg.particles.electron_count = cfg.nuclei.charges[0] as usize;
    atom_cfg.nuclei = atom.clone();
    let (_, atomic) = direct_solve(&atom_cfg, &atom, LEVELS, &opts)?;
    let atomic_gap = spectra::gap(&atomic, degeneracy_tol(cfg, atomic.ground()))?.gap;
    let mut rows = Vec::new();
    for &r in separations {
        let geometry = NuclearConfiguration {
            positions: vec![-r / 2.0, r / 2.0],
            ..cfg.nuclei.clone()
        }
        .centered_on(&cfg.model.grid());
        for statistics in [Statistics::Distinguishable, Statistics::Bosonic] {
            let mut c = cfg.clone();
            c.particles.statistics = statistics;
            let (_, report) = direct_solve(&c, &geometry, LEVELS, &opts)?;
            let v = &report.eigenvalues;
            rows.push(H2Level {
                separation: r,
                statistics,
                levels: v.clone(),
                splitting: v[1] - v[0],
                gap: spectra::gap(&report, degeneracy_tol(cfg, v[0])).ok().map(|g| g.gap),
            });
        }
    }
    Ok(H2Demo {
        atomic_levels: atomic.eigenvalues,
        atomic_gap,
        rows,
    })
}

/// Table of the threshold energies at one geometry, for the CLI.
pub fn threshold_table(
    cfg: &ExperimentConfig,
    settings: Settings,
    geometry: &NuclearConfiguration,
    blocks: &[Vec<usize>],
) -> Result<ThresholdTable> {
    let partition = NuclearPartition::from_blocks(geometry, blocks.to_vec())?;
    Ok(thresholds(cfg, geometry, &partition, &solver_options(cfg, settings))?.table)
}
