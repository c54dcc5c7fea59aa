//! Cluster bookkeeping: nuclear partitions, electron assignments, ion
//! charges and the threshold energies that the low-lying spectrum
//! approaches as clusters separate.
//!
//! Cluster energies are indexed by the number of electrons a cluster holds.
//! A cluster with `c` electrons and nuclear charge `Z̃` has ion charge
//! `δ = c − Z̃`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lieb_binding_possible, ModelParams, NuclearConfiguration, Statistics};
use crate::operators;
use crate::spectra::{self, SolverOptions, SpectralReport};

/// Smallest cluster radius, so single-nucleus clusters keep a finite size.
pub const MIN_CLUSTER_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuclearPartition {
    pub blocks: Vec<Vec<usize>>,
    pub centers: Vec<f64>,
    /// `C_j`: every nucleus of block `j` lies within `C_j / 2` of `z_j`.
    pub radii: Vec<f64>,
    /// Offsets `y_i − z_j` of the block members, in block order.
    pub offsets: Vec<Vec<f64>>,
    /// `r_ij = |z_i − z_j|`.
    pub separations: Vec<Vec<f64>>,
    /// `Z̃_j`.
    pub charges: Vec<u32>,
}

impl NuclearPartition {
    /// Builds the partition geometry for explicit blocks.
    pub fn from_blocks(nuclei: &NuclearConfiguration, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let m = nuclei.count();
        if blocks.is_empty() || blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::InvalidConfig("partition blocks must be nonempty".into()));
        }
        let mut seen = vec![false; m];
        for &i in blocks.iter().flatten() {
            if i >= m || seen[i] {
                return Err(Error::InvalidConfig(format!(
                    "nucleus {} repeated or out of range in partition",
                    i
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidConfig("partition does not cover every nucleus".into()));
        }
        let pos = &nuclei.positions;
        let centers: Vec<f64> = blocks
            .iter()
            .map(|b| b.iter().map(|&i| pos[i]).sum::<f64>() / b.len() as f64)
            .collect();
        let offsets: Vec<Vec<f64>> = blocks
            .iter()
            .zip(&centers)
            .map(|(b, z)| b.iter().map(|&i| pos[i] - z).collect())
            .collect();
        let radii = offsets
            .iter()
            .map(|o| {
                let spread = o.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
                (2.0 * spread).max(MIN_CLUSTER_RADIUS)
            })
            .collect();
        let separations = centers
            .iter()
            .map(|a| centers.iter().map(|b| (a - b).abs()).collect())
            .collect();
        let charges = blocks
            .iter()
            .map(|b| b.iter().map(|&i| nuclei.charges[i]).sum())
            .collect();
        Ok(Self {
            blocks,
            centers,
            radii,
            offsets,
            separations,
            charges,
        })
    }

    /// All nuclei in one cluster.
    pub fn single(nuclei: &NuclearConfiguration) -> Result<Self> {
        Self::from_blocks(nuclei, vec![(0..nuclei.count()).collect()])
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn min_separation(&self) -> Option<f64> {
        let k = self.len();
        (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| self.separations[i][j])
            .reduce(f64::min)
    }

    pub fn total_charge(&self) -> u32 {
        self.charges.iter().sum()
    }
}

/// Boundedness/divergence pattern observed over a configuration sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceCheck {
    pub intra_bounded: bool,
    pub inter_increasing: bool,
    pub offsets_constant: bool,
    pub violations: Vec<String>,
}

impl SequenceCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionDetection {
    pub partition: NuclearPartition,
    /// Set when several nuclei all ended up in one block.
    pub no_breakup: bool,
    pub sequence: Option<SequenceCheck>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Connected components of the graph joining nuclei closer than
/// `threshold` in the last configuration; earlier configurations are only
/// used to check that the blocks behave like receding clusters.
pub fn detect_partition(
    configs: &[NuclearConfiguration],
    threshold: f64,
) -> Result<PartitionDetection> {
    let last = configs
        .last()
        .ok_or_else(|| Error::InvalidConfig("no configurations given".into()))?;
    if !(threshold > 0.0) {
        return Err(Error::InvalidConfig("partition threshold must be positive".into()));
    }
    let m = last.count();
    if configs.iter().any(|c| c.count() != m) {
        return Err(Error::ShapeMismatch {
            expected: m,
            actual: configs.iter().map(|c| c.count()).find(|&c| c != m).unwrap_or(m),
        });
    }
    let mut parent: Vec<usize> = (0..m).collect();
    for i in 0..m {
        for j in 0..i {
            if (last.positions[i] - last.positions[j]).abs() <= threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut root_block: Vec<Option<usize>> = vec![None; m];
    for i in 0..m {
        let r = find(&mut parent, i);
        match root_block[r] {
            Some(b) => blocks[b].push(i),
            None => {
                root_block[r] = Some(blocks.len());
                blocks.push(vec![i]);
            }
        }
    }
    let partition = NuclearPartition::from_blocks(last, blocks)?;
    let no_breakup = m >= 2 && partition.len() == 1;
    let sequence = if configs.len() > 1 {
        Some(verify_sequence(configs, &partition, threshold)?)
    } else {
        None
    };
    Ok(PartitionDetection {
        partition,
        no_breakup,
        sequence,
    })
}

/// Checks a configuration sequence against fixed blocks: intra-block
/// distances stay below `threshold`, inter-block center distances grow
/// strictly, and the internal offsets stay fixed.
pub fn verify_sequence(
    configs: &[NuclearConfiguration],
    partition: &NuclearPartition,
    threshold: f64,
) -> Result<SequenceCheck> {
    let geoms = configs
        .iter()
        .map(|c| NuclearPartition::from_blocks(c, partition.blocks.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    let mut intra_bounded = true;
    for (n, c) in configs.iter().enumerate() {
        for b in &partition.blocks {
            for (x, &i) in b.iter().enumerate() {
                for &j in &b[..x] {
                    let d = (c.positions[i] - c.positions[j]).abs();
                    if d > threshold {
                        intra_bounded = false;
                        violations.push(format!(
                            "configuration {}: nuclei {} and {} in one block are {:.6} apart",
                            n, i, j, d
                        ));
                    }
                }
            }
        }
    }
    let mut inter_increasing = true;
    let k = partition.len();
    for w in geoms.windows(2) {
        for i in 0..k {
            for j in i + 1..k {
                if !(w[1].separations[i][j] > w[0].separations[i][j]) {
                    inter_increasing = false;
                    violations.push(format!(
                        "separation of clusters {} and {} does not increase ({:.6} -> {:.6})",
                        i, j, w[0].separations[i][j], w[1].separations[i][j]
                    ));
                }
            }
        }
    }
    let mut offsets_constant = true;
    for g in &geoms[1..] {
        let drift = g
            .offsets
            .iter()
            .flatten()
            .zip(geoms[0].offsets.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if drift > 1e-9 {
            offsets_constant = false;
        }
    }
    Ok(SequenceCheck {
        intra_bounded,
        inter_increasing,
        offsets_constant,
        violations,
    })
}

/// All set partitions of `{0, …, m-1}`, blocks ordered by smallest element.
pub fn enumerate_set_partitions(m: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; m];
    fn rec(i: usize, max: usize, labels: &mut [usize], out: &mut Vec<Vec<Vec<usize>>>) {
        if i == labels.len() {
            let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); max];
            for (e, &l) in labels.iter().enumerate() {
                blocks[l].push(e);
            }
            out.push(blocks);
            return;
        }
        for l in 0..=max {
            labels[i] = l;
            rec(i + 1, max.max(l + 1), labels, out);
        }
    }
    if m > 0 {
        rec(0, 0, &mut labels, &mut out);
    }
    out
}

/// Occupation numbers `(|E_1|, …, |E_k|)` plus an optional trailing
/// "away from every cluster" slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectronAssignment {
    pub occupation: Vec<usize>,
    pub free_slot: bool,
    /// False when some cluster holds at least `2Z̃_j + |N_j|` electrons.
    pub lieb_feasible: bool,
}

impl ElectronAssignment {
    pub fn cluster_occupation(&self) -> &[usize] {
        if self.free_slot {
            &self.occupation[..self.occupation.len() - 1]
        } else {
            &self.occupation
        }
    }

    pub fn electron_count(&self) -> usize {
        self.occupation.iter().sum()
    }
}

/// Compositions of `n` into `parts` nonnegative parts, lexicographically
/// descending.
pub fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if n == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in (0..=n).rev() {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn lieb_feasible(occupation: &[usize], partition: &NuclearPartition) -> bool {
    occupation
        .iter()
        .zip(&partition.charges)
        .zip(&partition.blocks)
        .all(|((&c, &z), b)| lieb_binding_possible(c, z, b.len()))
}

pub fn enumerate_assignments(
    electrons: usize,
    partition: &NuclearPartition,
    allow_free_slot: bool,
) -> Vec<ElectronAssignment> {
    let slots = partition.len() + usize::from(allow_free_slot);
    compositions(electrons, slots)
        .into_iter()
        .map(|occupation| {
            let lieb = lieb_feasible(&occupation[..partition.len()], partition);
            ElectronAssignment {
                occupation,
                free_slot: allow_free_slot,
                lieb_feasible: lieb,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IonCharges {
    /// `δ_j = |E_j| − Z̃_j`.
    pub deltas: Vec<i64>,
    pub cluster_charges: Vec<u32>,
}

impl IonCharges {
    pub fn is_neutral(&self) -> bool {
        self.deltas.iter().all(|&d| d == 0)
    }

    pub fn total(&self) -> i64 {
        self.deltas.iter().sum()
    }
}

pub fn ion_charges(assignment: &ElectronAssignment, partition: &NuclearPartition) -> Result<IonCharges> {
    let occ = assignment.cluster_occupation();
    if occ.len() != partition.len() {
        return Err(Error::ShapeMismatch {
            expected: partition.len(),
            actual: occ.len(),
        });
    }
    Ok(IonCharges {
        deltas: occ
            .iter()
            .zip(&partition.charges)
            .map(|(&c, &z)| c as i64 - z as i64)
            .collect(),
        cluster_charges: partition.charges.clone(),
    })
}

/// A nuclear partition together with the cluster each electron belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDecomposition {
    pub partition: NuclearPartition,
    pub electron_cluster: Vec<usize>,
}

impl ClusterDecomposition {
    pub fn new(partition: NuclearPartition, electron_cluster: Vec<usize>) -> Result<Self> {
        if electron_cluster.iter().any(|&c| c >= partition.len()) {
            return Err(Error::InvalidConfig("electron assigned to a missing cluster".into()));
        }
        Ok(Self {
            partition,
            electron_cluster,
        })
    }

    /// Electrons `0..c_0` go to cluster 0, the next `c_1` to cluster 1, and
    /// so on.
    pub fn canonical(partition: NuclearPartition, occupation: &[usize]) -> Result<Self> {
        if occupation.len() != partition.len() {
            return Err(Error::ShapeMismatch {
                expected: partition.len(),
                actual: occupation.len(),
            });
        }
        let owners = occupation
            .iter()
            .enumerate()
            .flat_map(|(j, &c)| core::iter::repeat_n(j, c))
            .collect();
        Self::new(partition, owners)
    }

    pub fn electron_count(&self) -> usize {
        self.electron_cluster.len()
    }

    pub fn occupation(&self, j: usize) -> usize {
        self.electron_cluster.iter().filter(|&&c| c == j).count()
    }

    pub fn occupations(&self) -> Vec<usize> {
        (0..self.partition.len()).map(|j| self.occupation(j)).collect()
    }

    /// Electron labels held by cluster `j`, ascending.
    pub fn electrons_of(&self, j: usize) -> Vec<usize> {
        (0..self.electron_count())
            .filter(|&l| self.electron_cluster[l] == j)
            .collect()
    }

    /// Electron groups, one per cluster.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        (0..self.partition.len()).map(|j| self.electrons_of(j)).collect()
    }
}

/// Every map from `electrons` labelled electrons to the partition's
/// clusters.
pub fn enumerate_decompositions(
    electrons: usize,
    partition: &NuclearPartition,
) -> Vec<ClusterDecomposition> {
    let k = partition.len();
    let total = k.pow(electrons as u32);
    (0..total)
        .map(|mut code| {
            let owners = (0..electrons)
                .map(|_| {
                    let c = code % k;
                    code /= k;
                    c
                })
                .collect();
            ClusterDecomposition {
                partition: partition.clone(),
                electron_cluster: owners,
            }
        })
        .collect()
}

/// Low-lying levels of one cluster at each electron count that was solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLevels {
    pub charge: u32,
    pub nuclei: usize,
    /// Electron count of the reference (neutral) configuration.
    pub reference_count: usize,
    /// `levels[c]`: ascending energies with `c` electrons; `None` when not
    /// solved. Zero electrons give the bare repulsion of the block's nuclei.
    pub levels: Vec<Option<Vec<f64>>>,
}

impl ClusterLevels {
    pub fn ground(&self, count: usize) -> Option<f64> {
        self.levels.get(count)?.as_ref()?.first().copied()
    }

    /// Lowest level above the ground level by more than `tol`, with its
    /// multiplicity.
    pub fn excited(&self, count: usize, tol: f64) -> Option<(f64, usize)> {
        let lv = self.levels.get(count)?.as_ref()?;
        let e0 = *lv.first()?;
        let j = lv.iter().position(|&e| e - e0 > tol)?;
        let e1 = lv[j];
        let mult = lv[j..].iter().take_while(|&&e| e - e1 <= tol).count();
        Some((e1, mult))
    }

    /// Second distinct level above the ground level.
    pub fn second_excited(&self, count: usize, tol: f64) -> Option<f64> {
        let lv = self.levels.get(count)?.as_ref()?;
        let (e1, _) = self.excited(count, tol)?;
        lv.iter().copied().find(|&e| e - e1 > tol)
    }

    /// Whether `count` electrons form a state below the threshold of
    /// `count − 1` electrons; zero electrons count as bound.
    pub fn is_bound(&self, count: usize, tol: f64) -> Option<bool> {
        if count == 0 {
            return Some(true);
        }
        Some(self.ground(count)? < self.ground(count - 1)? - tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonicEntry {
    pub occupation: Vec<usize>,
    pub charges: IonCharges,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapConstants {
    /// Excitation gaps of the neutral clusters.
    pub g1: Option<f64>,
    /// Excitation gaps of clusters in ionic minimizers.
    pub g2: Option<f64>,
    /// Binding margin of cations in ionic minimizers against gaining an electron.
    pub g3: Option<f64>,
    /// Distance of non-minimizing ionic configurations above `E_∞,1`.
    pub g4: Option<f64>,
    pub g: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CandidateKind {
    Ground,
    Excited { cluster: usize },
    Ionic { occupation: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub kind: CandidateKind,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub electrons: usize,
    pub charges: Vec<u32>,
    pub clusters: Vec<ClusterLevels>,
    /// Reference occupation, neutral whenever the system is.
    pub reference: Vec<usize>,
    pub e_inf_0: f64,
    /// One cluster raised to its first excited level, per cluster.
    pub e_inf_0_excited: Vec<f64>,
    pub excited_multiplicity: Vec<usize>,
    /// Feasible ionic configurations: Lieb-admissible and every cluster bound.
    pub ionic: Vec<IonicEntry>,
    /// Occupations rejected because some cluster has no bound ground state.
    pub unbound: Vec<Vec<usize>>,
    pub e_inf_1: f64,
    /// Ionic configurations attaining `E_∞,1`.
    pub ionic_minimizers: Vec<Vec<usize>>,
    /// Lowest ionic configuration, whether or not it attains `E_∞,1`.
    pub ionic_argmin: Option<Vec<usize>>,
    pub gaps: GapConstants,
    pub tolerance: f64,
}

impl ThresholdTable {
    pub fn single_cluster(&self) -> bool {
        self.clusters.len() == 1
    }

    pub fn ionic_energy(&self, occupation: &[usize]) -> Option<f64> {
        self.ionic
            .iter()
            .find(|e| e.occupation == occupation)
            .map(|e| e.energy)
    }

    /// Every candidate level, sorted by energy.
    pub fn candidates(&self) -> Vec<Candidate> {
        let mut out = vec![Candidate {
            kind: CandidateKind::Ground,
            energy: self.e_inf_0,
        }];
        out.extend(self.e_inf_0_excited.iter().enumerate().map(|(l, &e)| Candidate {
            kind: CandidateKind::Excited { cluster: l },
            energy: e,
        }));
        out.extend(self.ionic.iter().map(|e| Candidate {
            kind: CandidateKind::Ionic {
                occupation: e.occupation.clone(),
            },
            energy: e.energy,
        }));
        out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        out
    }

    /// Human-readable listing of the candidates.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "clusters: {}  electrons: {}  E_inf_0 = {:.10}  E_inf_1 = {:.10}\n",
            self.clusters.len(),
            self.electrons,
            self.e_inf_0,
            self.e_inf_1
        );
        for c in self.candidates() {
            let label = match &c.kind {
                CandidateKind::Ground => String::from("ground product"),
                CandidateKind::Excited { cluster } => format!("cluster {} excited", cluster),
                CandidateKind::Ionic { occupation } => format!("ionic {:?}", occupation),
            };
            s.push_str(&format!("  {:>16.10}  {}\n", c.energy, label));
        }
        let g = &self.gaps;
        s.push_str(&format!(
            "gap constants: G1={:?} G2={:?} G3={:?} G4={:?} G={:?}\n",
            g.g1, g.g2, g.g3, g.g4, g.g
        ));
        s
    }
}

fn min_opt(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    values.into_iter().reduce(f64::min)
}

/// Assembles threshold energies and gap constants from per-cluster levels.
///
/// `tol` is the absolute tolerance used for degeneracy, binding and
/// minimizer decisions.
pub fn assemble_table(
    partition: &NuclearPartition,
    clusters: Vec<ClusterLevels>,
    electrons: usize,
    tol: f64,
) -> Result<ThresholdTable> {
    let k = partition.len();
    if clusters.len() != k {
        return Err(Error::ShapeMismatch {
            expected: k,
            actual: clusters.len(),
        });
    }
    let reference: Vec<usize> = clusters.iter().map(|c| c.reference_count).collect();
    if reference.iter().sum::<usize>() != electrons {
        return Err(Error::InvalidConfig(format!(
            "reference occupation {:?} does not hold {} electrons",
            reference, electrons
        )));
    }
    let missing = |j: usize, c: usize| Error::MissingEntry(format!("cluster {} with {} electrons", j, c));

    let mut e_inf_0 = 0.0;
    for (j, cl) in clusters.iter().enumerate() {
        e_inf_0 += cl.ground(cl.reference_count).ok_or_else(|| missing(j, cl.reference_count))?;
    }
    let mut e_inf_0_excited = Vec::with_capacity(k);
    let mut excited_multiplicity = Vec::with_capacity(k);
    let mut g1_terms = Vec::new();
    for (j, cl) in clusters.iter().enumerate() {
        let c = cl.reference_count;
        let e0 = cl.ground(c).ok_or_else(|| missing(j, c))?;
        let (e1, mult) = cl.excited(c, tol).ok_or_else(|| {
            Error::TooFewEigenpairs {
                needed: 2,
                have: cl.levels.get(c).and_then(|l| l.as_ref()).map_or(0, |l| l.len()),
            }
        })?;
        e_inf_0_excited.push(e_inf_0 - e0 + e1);
        excited_multiplicity.push(mult);
        g1_terms.push(e1 - e0);
        if let Some(e2) = cl.second_excited(c, tol) {
            g1_terms.push(e2 - e1);
        }
    }

    let mut ionic = Vec::new();
    let mut unbound = Vec::new();
    if k >= 2 {
        for occ in compositions(electrons, k) {
            if occ == reference || !lieb_feasible(&occ, partition) {
                continue;
            }
            let mut bound = true;
            let mut energy = 0.0;
            for (j, (&c, cl)) in occ.iter().zip(&clusters).enumerate() {
                match cl.is_bound(c, tol) {
                    Some(true) => energy += cl.ground(c).ok_or_else(|| missing(j, c))?,
                    Some(false) => bound = false,
                    None => return Err(missing(j, c)),
                }
            }
            if bound {
                let assignment = ElectronAssignment {
                    occupation: occ.clone(),
                    free_slot: false,
                    lieb_feasible: true,
                };
                ionic.push(IonicEntry {
                    charges: ion_charges(&assignment, partition)?,
                    occupation: occ,
                    energy,
                });
            } else {
                unbound.push(occ);
            }
        }
    }

    let excited_min = min_opt(e_inf_0_excited.iter().copied()).unwrap_or(f64::INFINITY);
    let ionic_min = min_opt(ionic.iter().map(|e| e.energy));
    let e_inf_1 = excited_min.min(ionic_min.unwrap_or(f64::INFINITY));
    let ionic_minimizers: Vec<Vec<usize>> = ionic
        .iter()
        .filter(|e| e.energy <= e_inf_1 + tol)
        .map(|e| e.occupation.clone())
        .collect();
    let ionic_argmin = ionic
        .iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
        .map(|e| e.occupation.clone());

    let mut g2_terms = Vec::new();
    let mut g3_terms = Vec::new();
    for occ in &ionic_minimizers {
        for (j, (&c, cl)) in occ.iter().zip(&clusters).enumerate() {
            if c > 0 {
                if let Some((e1, _)) = cl.excited(c, tol) {
                    g2_terms.push(e1 - cl.ground(c).ok_or_else(|| missing(j, c))?);
                }
            }
            if (c as u32) < cl.charge {
                if let (Some(e), Some(e_plus)) = (cl.ground(c), cl.ground(c + 1)) {
                    g3_terms.push(e - e_plus);
                }
            }
        }
    }
    let g4 = min_opt(
        ionic
            .iter()
            .filter(|e| !ionic_minimizers.contains(&e.occupation))
            .map(|e| e.energy - e_inf_1),
    );
    let g1 = min_opt(g1_terms);
    let g2 = min_opt(g2_terms);
    let g3 = min_opt(g3_terms);
    let g = min_opt([g1, g2, g3, g4].into_iter().flatten());

    Ok(ThresholdTable {
        electrons,
        charges: partition.charges.clone(),
        clusters,
        reference,
        e_inf_0,
        e_inf_0_excited,
        excited_multiplicity,
        ionic,
        unbound,
        e_inf_1,
        ionic_minimizers,
        ionic_argmin,
        gaps: GapConstants { g1, g2, g3, g4, g },
        tolerance: tol,
    })
}

/// Solver reports behind a threshold table: `reports[j][c]` holds the
/// spectrum of cluster `j` with `c` electrons.
#[derive(Debug, Clone)]
pub struct ThresholdBuild {
    pub table: ThresholdTable,
    pub reports: Vec<Vec<Option<SpectralReport>>>,
}

/// Solves every cluster at the electron counts the table needs and
/// assembles the threshold table.
///
/// `levels` is the number of eigenpairs computed per solve; the
/// degeneracy/binding tolerance is `rel_tol · |E_∞,0|`.
#[allow(clippy::too_many_arguments)]
pub fn build_threshold_table(
    model: &ModelParams,
    nuclei: &NuclearConfiguration,
    partition: &NuclearPartition,
    electrons: usize,
    statistics: Statistics,
    levels: usize,
    rel_tol: f64,
    opts: &SolverOptions,
) -> Result<ThresholdBuild> {
    let k = partition.len();
    let reference: Vec<usize> = if k == 1 {
        vec![electrons]
    } else if electrons as u32 == partition.total_charge() {
        partition.charges.iter().map(|&z| z as usize).collect()
    } else {
        return Err(Error::Unsupported(
            "thresholds over several clusters need a neutral system".into(),
        ));
    };

    // counts whose energies the table consults, closed under c -> c-1
    let mut needed: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k];
    for j in 0..k {
        needed[j].insert(reference[j]);
    }
    if k >= 2 {
        for occ in compositions(electrons, k) {
            if lieb_feasible(&occ, partition) {
                for j in 0..k {
                    needed[j].insert(occ[j]);
                    if (occ[j] as u32) < partition.charges[j] {
                        needed[j].insert(occ[j] + 1);
                    }
                }
            }
        }
    }
    let mut reports: Vec<Vec<Option<SpectralReport>>> = Vec::with_capacity(k);
    let mut clusters = Vec::with_capacity(k);
    for j in 0..k {
        let top = needed[j].iter().copied().max().unwrap_or(0).min(electrons);
        let mut per_count: Vec<Option<SpectralReport>> = vec![None; top + 1];
        let mut lv: Vec<Option<Vec<f64>>> = vec![None; top + 1];
        lv[0] = Some(vec![operators::block_repulsion(model, nuclei, &partition.blocks[j])]);
        for c in 1..=top {
            let op = operators::cluster_operator(model, nuclei, &partition.blocks[j], c)?;
            let report = spectra::solve_sector(&op, levels, statistics, opts)?;
            report.ensure_converged(opts.tol.max(1e-6))?;
            lv[c] = Some(report.eigenvalues.clone());
            per_count[c] = Some(report);
        }
        clusters.push(ClusterLevels {
            charge: partition.charges[j],
            nuclei: partition.blocks[j].len(),
            reference_count: reference[j],
            levels: lv,
        });
        reports.push(per_count);
    }
    let e_scale: f64 = clusters
        .iter()
        .map(|c| c.ground(c.reference_count).unwrap_or(0.0))
        .sum::<f64>()
        .abs();
    let tol = rel_tol * e_scale.max(1e-300);
    let table = assemble_table(partition, clusters, electrons, tol)?;
    Ok(ThresholdBuild { table, reports })
}

/// Outcome of checking that an ionic configuration carries a genuine
/// ground state: every cluster sits strictly below the threshold obtained
/// by removing one of its electrons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenstateCheck {
    pub holds: bool,
    pub failing_cluster: Option<usize>,
    /// Smallest `E_j(c_j − 1) − E_j(c_j)` over clusters holding electrons.
    pub margin: Option<f64>,
}

pub fn minimizer_has_eigenstate(table: &ThresholdTable, occupation: &[usize]) -> Result<EigenstateCheck> {
    if occupation.len() != table.clusters.len() {
        return Err(Error::ShapeMismatch {
            expected: table.clusters.len(),
            actual: occupation.len(),
        });
    }
    let mut margin: Option<f64> = None;
    for (j, (&c, cl)) in occupation.iter().zip(&table.clusters).enumerate() {
        if c == 0 {
            continue;
        }
        let missing = |n: usize| Error::MissingEntry(format!("cluster {} with {} electrons", j, n));
        let e = cl.ground(c).ok_or_else(|| missing(c))?;
        let below = cl.ground(c - 1).ok_or_else(|| missing(c - 1))?;
        let m = below - e;
        margin = Some(margin.map_or(m, |x: f64| x.min(m)));
        if !(m > table.tolerance) {
            return Ok(EigenstateCheck {
                holds: false,
                failing_cluster: Some(j),
                margin,
            });
        }
    }
    Ok(EigenstateCheck {
        holds: true,
        failing_cluster: None,
        margin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalNeutralityReport {
    pub holds: bool,
    /// `min_I E_∞,0^I − E_∞,0`; `None` without ionic configurations.
    pub margin: Option<f64>,
    pub minimizer: Vec<usize>,
    pub message: String,
}

/// Whether the reference (neutral) occupation is the unique minimizer of
/// the summed cluster ground energies over all occupations.
pub fn check_local_neutrality(table: &ThresholdTable) -> LocalNeutralityReport {
    if table.single_cluster() {
        return LocalNeutralityReport {
            holds: true,
            margin: None,
            minimizer: table.reference.clone(),
            message: String::from("single cluster: nothing to compare"),
        };
    }
    let best = table
        .ionic
        .iter()
        .min_by(|a, b| a.energy.total_cmp(&b.energy));
    match best {
        None => LocalNeutralityReport {
            holds: true,
            margin: None,
            minimizer: table.reference.clone(),
            message: String::from("no bound ionic configuration"),
        },
        Some(b) => {
            let margin = b.energy - table.e_inf_0;
            let holds = margin > table.tolerance;
            LocalNeutralityReport {
                holds,
                margin: Some(margin),
                minimizer: if margin >= 0.0 {
                    table.reference.clone()
                } else {
                    b.occupation.clone()
                },
                message: if holds {
                    format!("neutral configuration is the strict minimizer (margin {:.3e})", margin)
                } else {
                    format!(
                        "local neutrality violated for this instance: {:?} reaches {:.10}",
                        b.occupation, b.energy
                    )
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nuclei(pos: &[f64], z: &[u32]) -> NuclearConfiguration {
        NuclearConfiguration::new(pos.to_vec(), z.to_vec())
    }

    #[test]
    fn diatomic_split() {
        let d = detect_partition(&[nuclei(&[0.0, 30.0], &[1, 1])], 5.0).unwrap();
        assert_eq!(d.partition.blocks, vec![vec![0], vec![1]]);
        assert_eq!(d.partition.separations[0][1], 30.0);
        assert!(!d.no_breakup);
    }

    #[test]
    fn close_pair_forms_a_block() {
        let d = detect_partition(&[nuclei(&[0.0, 1.0, 30.0], &[1, 1, 1])], 5.0).unwrap();
        assert_eq!(d.partition.blocks, vec![vec![0, 1], vec![2]]);
        assert_eq!(d.partition.centers[0], 0.5);
        assert_eq!(d.partition.radii[0], 1.0);
        assert_eq!(d.partition.charges, vec![2, 1]);
    }

    #[test]
    fn large_threshold_means_no_breakup() {
        let d = detect_partition(&[nuclei(&[0.0, 3.0], &[1, 1])], 50.0).unwrap();
        assert_eq!(d.partition.len(), 1);
        assert!(d.no_breakup);
    }

    #[test]
    fn receding_sequence_verified() {
        let seq: Vec<_> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&n| nuclei(&[0.0, 1.0, n], &[1, 1, 1]))
            .collect();
        let d = detect_partition(&seq, 5.0).unwrap();
        assert_eq!(d.partition.blocks, vec![vec![0, 1], vec![2]]);
        let s = d.sequence.unwrap();
        assert!(s.passed(), "{:?}", s.violations);
        assert!(s.offsets_constant);
    }

    #[test]
    fn shrinking_sequence_flagged() {
        let seq = vec![nuclei(&[0.0, 40.0], &[1, 1]), nuclei(&[0.0, 20.0], &[1, 1])];
        let s = detect_partition(&seq, 5.0).unwrap().sequence.unwrap();
        assert!(!s.inter_increasing);
    }

    #[test]
    fn set_partitions_are_bell_numbers() {
        let counts: Vec<usize> = (1..6).map(|m| enumerate_set_partitions(m).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52]);
    }

    #[test]
    fn assignments_of_two_electrons() {
        let p = NuclearPartition::from_blocks(&nuclei(&[0.0, 30.0], &[1, 1]), vec![vec![0], vec![1]])
            .unwrap();
        let a: Vec<_> = enumerate_assignments(2, &p, false)
            .into_iter()
            .map(|a| a.occupation)
            .collect();
        assert_eq!(a, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let b: Vec<_> = enumerate_assignments(2, &p, true)
            .into_iter()
            .map(|a| a.occupation)
            .collect();
        assert_eq!(b.len(), 6);
        for extra in [vec![1, 0, 1], vec![0, 1, 1], vec![0, 0, 2]] {
            assert!(b.contains(&extra));
        }
        let three = enumerate_assignments(3, &p, false);
        assert!(!three.iter().find(|a| a.occupation == vec![3, 0]).unwrap().lieb_feasible);
    }

    #[test]
    fn ion_charge_examples() {
        let p = NuclearPartition::from_blocks(&nuclei(&[0.0, 30.0], &[1, 1]), vec![vec![0], vec![1]])
            .unwrap();
        let a = |occ: Vec<usize>| ElectronAssignment {
            occupation: occ,
            free_slot: false,
            lieb_feasible: true,
        };
        assert!(ion_charges(&a(vec![1, 1]), &p).unwrap().is_neutral());
        assert_eq!(ion_charges(&a(vec![2, 0]), &p).unwrap().deltas, vec![1, -1]);
        let q = NuclearPartition::from_blocks(&nuclei(&[0.0, 30.0], &[2, 1]), vec![vec![0], vec![1]])
            .unwrap();
        assert_eq!(ion_charges(&a(vec![1, 2]), &q).unwrap().deltas, vec![-1, 1]);
    }

    fn hand_table() -> ThresholdTable {
        let p = NuclearPartition::from_blocks(&nuclei(&[0.0, 30.0], &[1, 1]), vec![vec![0], vec![1]])
            .unwrap();
        let cl = ClusterLevels {
            charge: 1,
            nuclei: 1,
            reference_count: 1,
            levels: vec![Some(vec![0.0]), Some(vec![-0.67, -0.28, -0.15]), Some(vec![-0.70, -0.5])],
        };
        assemble_table(&p, vec![cl.clone(), cl], 2, 1e-9).unwrap()
    }

    #[test]
    fn hand_evaluated_thresholds() {
        let t = hand_table();
        assert!((t.e_inf_0 + 1.34).abs() < 1e-12);
        assert!((t.e_inf_0_excited[0] + 0.95).abs() < 1e-12);
        assert!((t.ionic_energy(&[2, 0]).unwrap() + 0.70).abs() < 1e-12);
        assert!((t.e_inf_1 + 0.95).abs() < 1e-12);
        assert!(t.ionic_minimizers.is_empty());
        assert_eq!(t.ionic_argmin.as_ref().unwrap().iter().sum::<usize>(), 2);
        let g = t.gaps;
        assert!((g.g4.unwrap() - 0.25).abs() < 1e-12);
        assert!((g.g1.unwrap() - 0.13).abs() < 1e-12);
        assert!((g.g.unwrap() - 0.13).abs() < 1e-12);
        assert!(check_local_neutrality(&t).holds);
    }

    #[test]
    fn eigenstate_check() {
        let t = hand_table();
        assert!(minimizer_has_eigenstate(&t, &[1, 1]).unwrap().holds);
        assert!(minimizer_has_eigenstate(&t, &[2, 0]).unwrap().holds);
        let mut u = t.clone();
        u.clusters[0].levels[2] = Some(vec![-0.67]);
        let c = minimizer_has_eigenstate(&u, &[2, 0]).unwrap();
        assert!(!c.holds);
        assert_eq!(c.failing_cluster, Some(0));
    }

    #[test]
    fn violated_neutrality_is_reported() {
        let mut t = hand_table();
        t.ionic[0].energy = -2.0;
        let r = check_local_neutrality(&t);
        assert!(!r.holds);
        assert!(r.message.contains("violated"));
    }

    #[test]
    fn canonical_decomposition() {
        let p = NuclearPartition::from_blocks(&nuclei(&[0.0, 30.0], &[1, 1]), vec![vec![0], vec![1]])
            .unwrap();
        let d = ClusterDecomposition::canonical(p.clone(), &[2, 1]).unwrap();
        assert_eq!(d.electron_cluster, vec![0, 0, 1]);
        assert_eq!(d.groups(), vec![vec![0, 1], vec![2]]);
        assert_eq!(enumerate_decompositions(2, &p).len(), 4);
    }
}
