//! Numerical checks of the localization machinery at one geometry.

use clustergap_core::clusters::NuclearPartition;
use clustergap_core::ims::{build_cutoffs, ims_defect, max_scale, CutoffFamily};
use clustergap_core::model::{ExperimentConfig, ModelParams, NuclearConfiguration};
use clustergap_core::operators::{self, Terms};
use clustergap_core::Result;
use serde::{Deserialize, Serialize};

pub const IMS_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub scale: f64,
    pub width: f64,
    pub unity_defect: f64,
    pub max_gradient_sq: f64,
    /// `d = R · max|∇J|²`.
    pub gradient_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImsCheck {
    pub clusters: usize,
    pub electrons: usize,
    pub scales: Vec<ScaleRow>,
    /// Largest relative deviation of `d` from its mean over the scales.
    pub gradient_constant_spread: f64,
    pub coarse_points: usize,
    pub fine_points: usize,
    pub defect_coarse: f64,
    pub defect_fine: f64,
    pub defect_ratio: f64,
}

/// Default scales: the largest one the geometry admits and its half.
pub fn default_scales(partition: &NuclearPartition) -> Vec<f64> {
    let r = max_scale(partition);
    if r.is_finite() {
        vec![0.5 * r, r]
    } else {
        vec![1.0, 2.0]
    }
}

fn ims_operator(model: &ModelParams, nuclei: &NuclearConfiguration, electrons: usize) -> Result<operators::ManyBodyOperator> {
    operators::assemble_with_terms(model, nuclei, electrons, Terms::ELECTRONIC)
}

/// Partition of unity at each scale, then the localization defect at the
/// configured resolution and at half the spacing, both at the largest
/// scale.
pub fn ims_check(
    cfg: &ExperimentConfig,
    geometry: &NuclearConfiguration,
    blocks: &[Vec<usize>],
    electrons: usize,
    scales: &[f64],
) -> Result<(ImsCheck, CutoffFamily)> {
    let partition = NuclearPartition::from_blocks(geometry, blocks.to_vec())?;
    let grid = cfg.model.grid();
    let mut rows = Vec::new();
    let mut last = None;
    for &r in scales {
        let fam = build_cutoffs(&partition, &grid, electrons, r, None)?;
        rows.push(ScaleRow {
            scale: r,
            width: fam.width,
            unity_defect: fam.unity_defect(),
            max_gradient_sq: fam.max_gradient_sq,
            gradient_constant: fam.gradient_constant,
        });
        last = Some(fam);
    }
    let fam = last.ok_or_else(|| clustergap_core::Error::InvalidConfig("no cutoff scale given".into()))?;
    let mean = rows.iter().map(|r| r.gradient_constant).sum::<f64>() / rows.len() as f64;
    let spread = if mean > 0.0 {
        rows.iter()
            .map(|r| (r.gradient_constant / mean - 1.0).abs())
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let coarse = ims_defect(&ims_operator(&cfg.model, geometry, electrons)?, &fam, IMS_SAMPLES, cfg.seed)?;
    let mut fine_model = cfg.model.clone();
    fine_model.grid_points = 2 * cfg.model.grid_points - 1;
    let fine_fam = build_cutoffs(&partition, &fine_model.grid(), electrons, fam.scale, Some(fam.width))?;
    let fine = ims_defect(&ims_operator(&fine_model, geometry, electrons)?, &fine_fam, IMS_SAMPLES, cfg.seed)?;
    Ok((
        ImsCheck {
            clusters: partition.len(),
            electrons,
            scales: rows,
            gradient_constant_spread: spread,
            coarse_points: cfg.model.grid_points,
            fine_points: fine_model.grid_points,
            defect_coarse: coarse.defect,
            defect_fine: fine.defect,
            defect_ratio: coarse.defect / fine.defect,
        },
        fam,
    ))
}
