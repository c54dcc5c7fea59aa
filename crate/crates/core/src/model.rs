//! Physical model parameters, nuclear geometry, particle content and the
//! experiment configuration, plus the physical sanity checks run on them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::grid::Grid;

/// Largest electron count whose tensor grid is buildable at desk scale.
pub const MAX_ELECTRONS: usize = 3;

/// Atomic units throughout: `hbar = m_e = e = 1` unless overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default = "one")]
    pub electron_mass: f64,
    #[serde(default = "one")]
    pub charge_unit: f64,
    /// Softening length `a` in `q1 q2 / sqrt(r^2 + a^2)`.
    #[serde(default = "one")]
    pub softening: f64,
    /// Half-width `L` of the box `[-L, L]`.
    pub grid_extent: f64,
    pub grid_points: usize,
    #[serde(default = "default_stencil")]
    pub stencil_order: u8,
    /// Upper bound on the tensor dimension `n^N` of any assembled operator.
    #[serde(default = "default_max_dimension")]
    pub max_dimension: usize,
}

fn one() -> f64 {
    1.0
}

fn default_stencil() -> u8 {
    2
}

fn default_max_dimension() -> usize {
    4_000_000
}

impl ModelParams {
    pub fn new(softening: f64, grid_extent: f64, grid_points: usize) -> Self {
        Self {
            electron_mass: 1.0,
            charge_unit: 1.0,
            softening,
            grid_extent,
            grid_points,
            stencil_order: 2,
            max_dimension: default_max_dimension(),
        }
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.grid_extent, self.grid_points)
    }

    pub fn spacing(&self) -> f64 {
        self.grid().spacing()
    }

    /// Coupling `e^2` entering every Coulomb term.
    pub fn coupling(&self) -> f64 {
        self.charge_unit * self.charge_unit
    }
}

/// Nuclei on the line: positions `y_j` and integer charges `Z_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuclearConfiguration {
    pub positions: Vec<f64>,
    pub charges: Vec<u32>,
    #[serde(default)]
    pub include_nuclear_repulsion: bool,
}

impl NuclearConfiguration {
    pub fn new(positions: Vec<f64>, charges: Vec<u32>) -> Self {
        Self {
            positions,
            charges,
            include_nuclear_repulsion: false,
        }
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn total_charge(&self) -> u32 {
        self.charges.iter().sum()
    }

    /// Least inter-nuclear distance `R(y)`; undefined for a single nucleus.
    pub fn min_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.positions.len() {
            for j in 0..i {
                let d = (self.positions[i] - self.positions[j]).abs();
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// Nuclei restricted to the given indices, keeping their positions.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            positions: indices.iter().map(|&i| self.positions[i]).collect(),
            charges: indices.iter().map(|&i| self.charges[i]).collect(),
            include_nuclear_repulsion: self.include_nuclear_repulsion,
        }
    }

    /// Positions scaled by `factor` about `center`.
    pub fn scaled_about(&self, center: f64, factor: f64) -> Self {
        Self {
            positions: self
                .positions
                .iter()
                .map(|&y| center + factor * (y - center))
                .collect(),
            ..self.clone()
        }
    }

    pub fn translated(&self, shift: f64) -> Self {
        Self {
            positions: self.positions.iter().map(|&y| y + shift).collect(),
            ..self.clone()
        }
    }

    /// Translation placing the geometry's midpoint at the box center, rounded
    /// to whole grid spacings so nodes stay aligned with the nuclei.
    pub fn centered_on(&self, grid: &Grid) -> Self {
        let (lo, hi) = self
            .positions
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
                (lo.min(y), hi.max(y))
            });
        if !lo.is_finite() {
            return self.clone();
        }
        self.translated(grid.snap_shift(-0.5 * (lo + hi)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Bosonic,
    Distinguishable,
    Fermionic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSystem {
    pub electron_count: usize,
    #[serde(default = "default_statistics")]
    pub statistics: Statistics,
}

fn default_statistics() -> Statistics {
    Statistics::Bosonic
}

/// Geometric separation schedule applied to the base nuclear layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSchedule {
    pub factors: Vec<f64>,
    /// Distance threshold for cluster detection; defaults to a fraction of
    /// the smallest scaled separation.
    #[serde(default)]
    pub partition_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Residual bound `||H psi - E psi||` for accepted eigenpairs.
    #[serde(default = "default_solver_tol")]
    pub solver: f64,
    /// Relative degeneracy tolerance; levels closer than `degeneracy * |E0|`
    /// are grouped.
    #[serde(default = "default_degeneracy")]
    pub degeneracy: f64,
    /// Relative residual of inner conjugate-gradient solves.
    #[serde(default = "default_inner_tol")]
    pub inner: f64,
    /// Relative tolerance of Feshbach–Schur fixed points.
    #[serde(default = "default_fixed_point_tol")]
    pub fixed_point: f64,
    /// Smallest admissible Gram eigenvalue for the candidate family.
    #[serde(default = "default_gram_floor")]
    pub gram_floor: f64,
}

fn default_solver_tol() -> f64 {
    1e-7
}
fn default_degeneracy() -> f64 {
    1e-8
}
fn default_inner_tol() -> f64 {
    1e-10
}
fn default_fixed_point_tol() -> f64 {
    1e-10
}
fn default_gram_floor() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solver: default_solver_tol(),
            degeneracy: default_degeneracy(),
            inner: default_inner_tol(),
            fixed_point: default_fixed_point_tol(),
            gram_floor: default_gram_floor(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    Plot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

fn default_out_dir() -> String {
    String::from("out")
}

fn default_formats() -> Vec<OutputFormat> {
    alloc::vec![OutputFormat::Json, OutputFormat::Csv, OutputFormat::Plot]
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub nuclei: NuclearConfiguration,
    pub particles: ParticleSystem,
    #[serde(default)]
    pub scan: Option<ScanSchedule>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    /// Seed for every random starting block.
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn is_neutral(&self) -> bool {
        self.particles.electron_count == self.nuclei.total_charge() as usize
    }
}

/// Outcome of [`validate_config`]: hard errors and physics warnings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub neutral: bool,
    /// `R(y)`, absent for a single nucleus.
    pub min_distance: Option<f64>,
    pub spacing: f64,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Lieb's bound: a system with total charge `Z` and `M` nuclei binds fewer
/// than `2Z + M` electrons.
pub fn lieb_binding_possible(electrons: usize, total_charge: u32, nuclei: usize) -> bool {
    electrons < 2 * total_charge as usize + nuclei
}

pub fn validate_config(cfg: &ExperimentConfig) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let m = &cfg.model;

    if !(m.softening > 0.0) {
        errors.push(String::from("softening must be positive"));
    }
    if !(m.electron_mass > 0.0) {
        errors.push(String::from("electron_mass must be positive"));
    }
    if !(m.charge_unit > 0.0) {
        errors.push(String::from("charge_unit must be positive"));
    }
    if !(m.grid_extent > 0.0) {
        errors.push(String::from("grid_extent must be positive"));
    }
    if m.grid_points < 16 {
        errors.push(format!("grid_points must be at least 16, got {}", m.grid_points));
    }
    if m.stencil_order != 2 && m.stencil_order != 4 {
        errors.push(format!("stencil_order must be 2 or 4, got {}", m.stencil_order));
    }

    let nuc = &cfg.nuclei;
    if nuc.positions.is_empty() {
        errors.push(String::from("at least one nucleus is required (M >= 1)"));
    }
    if nuc.positions.len() != nuc.charges.len() {
        errors.push(format!(
            "{} positions but {} charges",
            nuc.positions.len(),
            nuc.charges.len()
        ));
    }
    if nuc.charges.contains(&0) {
        errors.push(String::from("nuclear charges must be positive integers"));
    }
    if nuc.positions.iter().any(|y| !y.is_finite()) {
        errors.push(String::from("nuclear positions must be finite"));
    }
    let min_distance = nuc.min_distance();
    if matches!(min_distance, Some(d) if d <= 0.0) {
        errors.push(String::from("nuclear positions must be pairwise distinct"));
    }
    if m.grid_extent > 0.0 && nuc.positions.iter().any(|y| y.abs() > m.grid_extent) {
        warnings.push(String::from("a nucleus lies outside the grid box"));
    }

    let n = cfg.particles.electron_count;
    if n == 0 {
        errors.push(String::from("electron_count must be positive"));
    }
    if n > MAX_ELECTRONS {
        errors.push(format!(
            "electron_count {} exceeds the desk-scale limit of {}",
            n, MAX_ELECTRONS
        ));
    }
    if m.grid_points >= 16 && n <= MAX_ELECTRONS {
        match m.grid().tensor_dim(n) {
            Some(d) if d <= m.max_dimension => {}
            _ => errors.push(format!(
                "tensor dimension {}^{} exceeds max_dimension {}",
                m.grid_points, n, m.max_dimension
            )),
        }
    }

    let t = &cfg.tolerances;
    for (name, v) in [
        ("solver", t.solver),
        ("degeneracy", t.degeneracy),
        ("inner", t.inner),
        ("fixed_point", t.fixed_point),
        ("gram_floor", t.gram_floor),
    ] {
        if !(v > 0.0) {
            errors.push(format!("tolerance {} must be strictly positive", name));
        }
    }

    if let Some(scan) = &cfg.scan {
        if scan.factors.is_empty() {
            errors.push(String::from("scan factors must not be empty"));
        }
        if scan.factors.iter().any(|&f| !(f > 0.0)) {
            errors.push(String::from("scan factors must be positive"));
        }
        if scan.factors.windows(2).any(|w| !(w[1] > w[0])) {
            errors.push(String::from("scan factors must be strictly increasing"));
        }
        if matches!(scan.partition_threshold, Some(d) if !(d > 0.0)) {
            errors.push(String::from("partition_threshold must be positive"));
        }
    }

    let z = nuc.total_charge();
    if n > 0 && !nuc.positions.is_empty() && !lieb_binding_possible(n, z, nuc.positions.len()) {
        warnings.push(format!(
            "N >= 2Z+M ({} >= {}): binding not expected",
            n,
            2 * z as usize + nuc.positions.len()
        ));
    }
    let neutral = n == z as usize;
    if n < z as usize {
        warnings.push(String::from("non-neutral (cation): N < Z"));
    } else if n > z as usize {
        warnings.push(String::from("non-neutral (anion): N > Z"));
    }

    ValidationReport {
        errors,
        warnings,
        neutral,
        min_distance,
        spacing: if m.grid_points > 1 { m.spacing() } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn config(positions: Vec<f64>, charges: Vec<u32>, n: usize) -> ExperimentConfig {
        ExperimentConfig {
            model: ModelParams::new(1.0, 20.0, 101),
            nuclei: NuclearConfiguration::new(positions, charges),
            particles: ParticleSystem {
                electron_count: n,
                statistics: Statistics::Bosonic,
            },
            scan: None,
            tolerances: Tolerances::default(),
            output: OutputSpec::default(),
            seed: 0,
        }
    }

    #[test]
    fn dianion_of_hydrogen_is_flagged() {
        let r = validate_config(&config(vec![0.0], vec![1], 3));
        assert!(r.is_ok(), "{:?}", r.errors);
        assert!(r.warnings.iter().any(|w| w.contains("binding not expected")));
    }

    #[test]
    fn neutral_diatomic_has_no_warnings() {
        let r = validate_config(&config(vec![-1.0, 1.0], vec![1, 1], 2));
        assert!(r.is_ok());
        assert!(r.warnings.is_empty(), "{:?}", r.warnings);
        assert!(r.neutral);
    }

    #[test]
    fn helium_cation_is_non_neutral() {
        let r = validate_config(&config(vec![0.0], vec![2], 1));
        assert!(r.warnings.iter().any(|w| w.contains("cation")));
        assert!(!r.neutral);
    }

    #[test]
    fn duplicate_positions_rejected() {
        let r = validate_config(&config(vec![0.0, 0.0], vec![1, 1], 2));
        assert!(r.errors.iter().any(|e| e.contains("pairwise distinct")));
    }

    #[test]
    fn single_nucleus_has_no_min_distance() {
        let r = validate_config(&config(vec![0.0], vec![1], 1));
        assert_eq!(r.min_distance, None);
        assert!((r.spacing - 0.4).abs() < 1e-15);
    }

    #[test]
    fn lieb_filter_never_flags_n_at_most_z() {
        for z in 1..6u32 {
            for m in 1..4usize {
                for n in 0..=z as usize {
                    assert!(lieb_binding_possible(n, z, m));
                }
            }
        }
    }
}
