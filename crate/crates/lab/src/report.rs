//! Gap scans and the files they leave behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clustergap_core::model::{ExperimentConfig, OutputFormat, Statistics};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::config_hash;
use crate::error::{LabError, LabResult};
use crate::pipeline::{analyze_point, scan_plan, PointAnalysis, ScanPoint, Settings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapScanReport {
    pub config_hash: String,
    /// Seconds since the Unix epoch when the report was assembled.
    pub timestamp: u64,
    pub softening: f64,
    pub spacing: f64,
    pub stencil_order: u8,
    pub electrons: usize,
    pub statistics: Statistics,
    pub blocks: Vec<Vec<usize>>,
    pub points: Vec<ScanPoint>,
    /// Smallest direct gap over the successful points.
    pub min_gap: Option<f64>,
    /// `|E₀ − E_∞,0|` at the largest successful separation.
    pub limit_deviation_0: Option<f64>,
    /// `|E₁ − E_∞,1|` at the largest successful separation.
    pub limit_deviation_1: Option<f64>,
}

impl GapScanReport {
    pub fn successful(&self) -> impl Iterator<Item = &ScanPoint> {
        self.points.iter().filter(|p| p.status.is_ok())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Scan report plus the per-point analyses it was built from.
pub struct ScanRun {
    pub report: GapScanReport,
    pub analyses: Vec<PointAnalysis>,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn assemble_report(cfg: &ExperimentConfig, blocks: Vec<Vec<usize>>, points: Vec<ScanPoint>) -> GapScanReport {
    let ok: Vec<&ScanPoint> = points.iter().filter(|p| p.status.is_ok()).collect();
    let min_gap = ok.iter().filter_map(|p| p.gap).reduce(f64::min);
    let last = ok.last();
    let dev = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => Some((a - b).abs()),
        _ => None,
    };
    GapScanReport {
        config_hash: config_hash(cfg),
        timestamp: now(),
        softening: cfg.model.softening,
        spacing: cfg.model.spacing(),
        stencil_order: cfg.model.stencil_order,
        electrons: cfg.particles.electron_count,
        statistics: cfg.particles.statistics,
        blocks,
        min_gap,
        limit_deviation_0: last.and_then(|p| dev(p.e0, p.e_inf_0)),
        limit_deviation_1: last.and_then(|p| dev(p.e1, p.e_inf_1)),
        points,
    }
}

/// Analyzes every scan point on up to `workers` threads. Failures stay
/// inside their point.
pub fn run_scan(cfg: &ExperimentConfig, settings: Settings, workers: usize) -> LabResult<ScanRun> {
    let (factors, geometries, blocks) = scan_plan(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LabError::Format {
            path: PathBuf::from("<thread pool>"),
            message: e.to_string(),
        })?;
    let analyses: Vec<PointAnalysis> = pool.install(|| {
        factors
            .par_iter()
            .zip(geometries.par_iter())
            .map(|(&f, g)| analyze_point(cfg, settings, f, g, &blocks))
            .collect()
    });
    let points = analyses.iter().map(|a| a.point.clone()).collect();
    Ok(ScanRun {
        report: assemble_report(cfg, blocks, points),
        analyses,
    })
}

pub const CSV_HEADER: [&str; 17] = [
    "factor",
    "min_distance",
    "status",
    "e0",
    "e1",
    "gap",
    "lambda0",
    "lambda1",
    "e_inf_0",
    "e_inf_1",
    "complement_gap",
    "gram_offdiagonal",
    "hamiltonian_deviation",
    "schur_correction",
    "family_size",
    "softening",
    "config_hash",
];

fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{:.12e}", v)).unwrap_or_default()
}

pub fn scan_csv(report: &GapScanReport) -> LabResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let bad = |e: csv::Error| LabError::Format {
        path: PathBuf::from("scan.csv"),
        message: e.to_string(),
    };
    w.write_record(CSV_HEADER).map_err(bad)?;
    for p in &report.points {
        let d = p.diagnostics;
        w.write_record([
            format!("{}", p.factor),
            cell(p.min_distance),
            p.status.label(),
            cell(p.e0),
            cell(p.e1),
            cell(p.gap),
            cell(p.lambda0),
            cell(p.lambda1),
            cell(p.e_inf_0),
            cell(p.e_inf_1),
            cell(p.complement_gap),
            cell(d.map(|d| d.gram_offdiagonal)),
            cell(d.map(|d| d.hamiltonian_deviation)),
            cell(d.map(|d| d.schur_correction)),
            p.family_size.map(|n| n.to_string()).unwrap_or_default(),
            format!("{}", report.softening),
            report.config_hash.clone(),
        ])
        .map_err(bad)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Format {
        path: PathBuf::from("scan.csv"),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Standalone matplotlib script reading `scan.csv` next to it.
pub fn plot_script(report: &GapScanReport) -> String {
    format!(
        r#"# gap scan plot, config {hash}
# usage: python3 plot_scan.py  (reads scan.csv from this directory)
import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
rows = [r for r in csv.DictReader(open(os.path.join(here, "scan.csv"))) if r["status"] == "ok"]
r = [float(x["min_distance"]) for x in rows]
col = lambda k: [float(x[k]) for x in rows]

fig, (a, b) = plt.subplots(1, 2, figsize=(10, 4))
a.plot(r, col("gap"), "o-", label="E1 - E0")
a.plot(r, [e1 - e0 for e0, e1 in zip(col("e_inf_0"), col("e_inf_1"))], "k--", label="threshold gap")
a.set_xlabel("separation")
a.set_ylabel("gap")
a.legend()
b.plot(r, col("e0"), "o-", label="E0")
b.plot(r, col("e1"), "s-", label="E1")
b.plot(r, col("e_inf_0"), "k--", label="E_inf,0")
b.plot(r, col("e_inf_1"), "k:", label="E_inf,1")
b.set_xlabel("separation")
b.set_ylabel("energy")
b.legend()
fig.suptitle("softening a = {a}")
fig.tight_layout()
fig.savefig(os.path.join(here, "scan.png"), dpi=150)
"#,
        hash = report.config_hash,
        a = report.softening
    )
}

pub fn write_file(path: &Path, contents: &[u8]) -> LabResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    f.write_all(contents).map_err(|e| LabError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> LabResult<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    write_file(path, text.as_bytes())
}

/// Writes the requested formats into `dir` and returns the paths written.
pub fn emit_report(report: &GapScanReport, formats: &[OutputFormat], dir: &Path) -> LabResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    for f in formats {
        let (name, body) = match f {
            OutputFormat::Json => ("scan.json", report.to_json()),
            OutputFormat::Csv => ("scan.csv", scan_csv(report)?),
            OutputFormat::Plot => ("plot_scan.py", plot_script(report)),
        };
        let path = dir.join(name);
        write_file(&path, body.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_report(path: &Path) -> LabResult<GapScanReport> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| LabError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Little-endian dump: magic `CGEV`, then `u64` count, `u64` length and
/// `f64` values, followed by the vectors back to back.
pub fn eigenvector_dump(values: &[f64], vectors: &[Vec<f64>]) -> Vec<u8> {
    let len = vectors.first().map_or(0, |v| v.len());
    let mut out = Vec::with_capacity(20 + 8 * (values.len() + vectors.len() * len));
    out.extend_from_slice(b"CGEV");
    out.extend_from_slice(&(vectors.len() as u64).to_le_bytes());
    out.extend_from_slice(&(len as u64).to_le_bytes());
    for v in values.iter().take(vectors.len()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in vectors {
        for x in v {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn read_eigenvector_dump(bytes: &[u8]) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    if bytes.len() < 20 || &bytes[..4] != b"CGEV" {
        return None;
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap()) as usize;
    let (count, len) = (word(4), word(12));
    let float = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    if bytes.len() != 20 + 8 * (count + count * len) {
        return None;
    }
    let values = (0..count).map(|i| float(20 + 8 * i)).collect();
    let base = 20 + 8 * count;
    let vectors = (0..count)
        .map(|k| (0..len).map(|i| float(base + 8 * (k * len + i))).collect())
        .collect();
    Some((values, vectors))
}
