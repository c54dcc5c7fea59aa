use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use clustergap::checks::{default_scales, ims_check};
use clustergap::config::{config_hash, parse_unchecked};
use clustergap::error::{LabError, LabResult};
use clustergap::pipeline::{self, Settings};
use clustergap::report::{self, emit_report, run_scan, write_file, write_json};
use clustergap_core::clusters::NuclearPartition;
use clustergap_core::model::{validate_config, ExperimentConfig, NuclearConfiguration};
use clustergap_core::operators::soft_coulomb;
use clustergap_core::spectra;

#[derive(Parser)]
#[command(name = "clustergap", version, about = "Spectral gaps of few-electron molecules with receding nuclear clusters")]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the one named in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for scans.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Overrides the seed of every random starting block.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Diagonalize densely wherever the dimension allows.
    #[arg(long, global = true)]
    dense_oracle: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the config and print the validation report.
    Validate,
    /// Lowest levels of the configured system.
    Spectrum,
    /// Cluster threshold table of the configured geometry.
    Thresholds,
    /// Feshbach–Schur fixed points and diagnostics at the configured geometry.
    Fsmap,
    /// Partition-of-unity checks at the configured geometry.
    ImsCheck {
        /// Cutoff scales R; defaults to the largest admissible one and its half.
        #[arg(long, value_delimiter = ',')]
        scales: Vec<f64>,
    },
    /// Gap scan over the configured scale factors.
    Scan,
    /// Distinguishable versus bosonic two-electron diatomic.
    H2Demo {
        /// Separations; defaults to the scan factors times the base separation, or 6,20.
        #[arg(long, value_delimiter = ',')]
        separations: Vec<f64>,
    },
}

struct Run {
    cfg: ExperimentConfig,
    out: PathBuf,
    workers: usize,
    settings: Settings,
}

fn load(cli: &Cli) -> LabResult<Run> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| LabError::Validation(vec!["--config <path> is required".into()]))?;
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let mut cfg = parse_unchecked(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let report = validate_config(&cfg);
    if !report.is_ok() {
        return Err(LabError::Validation(report.errors));
    }
    for w in &report.warnings {
        eprintln!("warning: {}", w);
    }
    Ok(Run {
        out: cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir)),
        cfg,
        workers: cli.workers,
        settings: Settings {
            dense: cli.dense_oracle,
        },
    })
}

/// Blocks of a single geometry: nuclei closer than the configured
/// threshold share a cluster.
fn single_blocks(cfg: &ExperimentConfig) -> LabResult<Vec<Vec<usize>>> {
    let threshold = pipeline::partition_threshold(cfg, &[1.0]);
    Ok(clustergap_core::clusters::detect_partition(std::slice::from_ref(&cfg.nuclei), threshold)?
        .partition
        .blocks)
}

fn potential_csv(cfg: &ExperimentConfig, nuclei: &NuclearConfiguration) -> String {
    let m = &cfg.model;
    let mut s = String::from("x,v_en\n");
    for x in m.grid().coords() {
        let v: f64 = nuclei
            .positions
            .iter()
            .zip(&nuclei.charges)
            .map(|(&y, &z)| soft_coulomb(-m.charge_unit, z as f64 * m.charge_unit, m.softening, x - y))
            .sum();
        s.push_str(&format!("{:.10},{:.12e}\n", x, v));
    }
    s
}

fn spectrum(run: &Run) -> LabResult<()> {
    let opts = pipeline::solver_options(&run.cfg, run.settings);
    let (_, report) = pipeline::direct_solve(&run.cfg, &run.cfg.nuclei, pipeline::LEVELS, &opts)?;
    for (i, (e, r)) in report.eigenvalues.iter().zip(&report.residuals).enumerate() {
        println!("E{} = {:.12}   residual {:.2e}", i, e, r);
    }
    if let Ok(g) = spectra::gap(&report, pipeline::degeneracy_tol(&run.cfg, report.ground())) {
        println!("gap = {:.12} (ground multiplicity {})", g.gap, g.ground_multiplicity);
    }
    write_json(&run.out.join("spectrum.json"), &report)?;
    write_file(
        &run.out.join("eigenvectors.bin"),
        &report::eigenvector_dump(&report.eigenvalues, &report.eigenvectors),
    )?;
    write_file(&run.out.join("potential.csv"), potential_csv(&run.cfg, &run.cfg.nuclei).as_bytes())
}

fn thresholds(run: &Run) -> LabResult<()> {
    let blocks = single_blocks(&run.cfg)?;
    let table = pipeline::threshold_table(&run.cfg, run.settings, &run.cfg.nuclei, &blocks)?;
    let summary = table.summary();
    print!("{}", summary);
    write_json(&run.out.join("thresholds.json"), &table)?;
    write_file(&run.out.join("thresholds.txt"), summary.as_bytes())
}

fn fsmap(run: &Run) -> LabResult<ExitCode> {
    let blocks = single_blocks(&run.cfg)?;
    let a = pipeline::analyze_point(&run.cfg, run.settings, 1.0, &run.cfg.nuclei, &blocks);
    let p = &a.point;
    println!("status: {}", p.status.label());
    if let pipeline::PointStatus::Failed { message, .. } = &p.status {
        println!("  {}", message);
    }
    for (name, direct, fs) in [("0", p.e0, p.lambda0), ("1", p.e1, p.lambda1)] {
        if let (Some(e), Some(l)) = (direct, fs) {
            println!("E{n} = {:.12}   lambda{n} = {:.12}   |diff| = {:.2e}", e, l, (e - l).abs(), n = name);
        }
    }
    if let Some(d) = p.diagnostics {
        println!(
            "gram off-diagonal {:.3e}, <phi,H phi> deviation {:.3e}, Schur correction {:.3e}",
            d.gram_offdiagonal, d.hamiltonian_deviation, d.schur_correction
        );
    }
    write_json(
        &run.out.join("fsmap.json"),
        &serde_json::json!({
            "config_hash": config_hash(&run.cfg),
            "point": p,
            "fixed_points": a.fixed_points,
        }),
    )?;
    let mut trace = String::from("index,lambda,g\n");
    for fp in &a.fixed_points {
        for t in &fp.trace {
            trace.push_str(&format!("{},{:.15e},{:.15e}\n", fp.index, t.lambda, t.g));
        }
    }
    write_file(&run.out.join("fs_trace.csv"), trace.as_bytes())?;
    Ok(if p.status.is_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn ims(run: &Run, scales: &[f64]) -> LabResult<()> {
    let blocks = single_blocks(&run.cfg)?;
    let partition = NuclearPartition::from_blocks(&run.cfg.nuclei, blocks.clone())?;
    let scales = if scales.is_empty() {
        default_scales(&partition)
    } else {
        scales.to_vec()
    };
    let (check, family) = ims_check(
        &run.cfg,
        &run.cfg.nuclei,
        &blocks,
        run.cfg.particles.electron_count,
        &scales,
    )?;
    for r in &check.scales {
        println!(
            "R = {:.4}: sum J^2 defect {:.2e}, max |grad J|^2 {:.4e}, d = {:.4}",
            r.scale, r.unity_defect, r.max_gradient_sq, r.gradient_constant
        );
    }
    println!(
        "localization defect: n={} {:.3e}, n={} {:.3e}, ratio {:.3}",
        check.coarse_points, check.defect_coarse, check.fine_points, check.defect_fine, check.defect_ratio
    );
    write_json(&run.out.join("ims.json"), &check)?;
    let mut csv = String::from("x");
    for s in 0..family.profiles.len() {
        csv.push_str(&format!(",q{}", s));
    }
    csv.push('\n');
    for row in family.profile_table() {
        let cells: Vec<String> = row.iter().map(|v| format!("{:.12e}", v)).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    write_file(&run.out.join("cutoffs.csv"), csv.as_bytes())
}

fn scan(run: &Run) -> LabResult<ExitCode> {
    if run.cfg.scan.is_none() {
        return Err(LabError::Validation(vec!["the config has no scan schedule".into()]));
    }
    let result = run_scan(&run.cfg, run.settings, run.workers)?;
    let rep = &result.report;
    println!("{:>8} {:>10} {:>16} {:>16} {:>14}  status", "factor", "R(y)", "E0", "E1", "gap");
    for p in &rep.points {
        println!(
            "{:>8} {:>10} {:>16} {:>16} {:>14}  {}",
            p.factor,
            fmt(p.min_distance, 4),
            fmt(p.e0, 10),
            fmt(p.e1, 10),
            fmt(p.gap, 8),
            p.status.label()
        );
    }
    for path in emit_report(rep, &run.cfg.output.formats, &run.out)? {
        println!("wrote {}", path.display());
    }
    Ok(if rep.points.iter().all(|p| p.status.is_ok()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn fmt(x: Option<f64>, digits: usize) -> String {
    x.map(|v| format!("{:.*}", digits, v)).unwrap_or_else(|| "-".into())
}

fn h2_demo(run: &Run, separations: &[f64]) -> LabResult<()> {
    let seps = if !separations.is_empty() {
        separations.to_vec()
    } else if let (Some(scan), Some(d)) = (&run.cfg.scan, run.cfg.nuclei.min_distance()) {
        scan.factors.iter().map(|f| f * d).collect()
    } else {
        vec![6.0, 20.0]
    };
    let demo = pipeline::run_h2_demo(&run.cfg, run.settings, &seps)?;
    println!("single-atom gap: {:.10}", demo.atomic_gap);
    for r in &demo.rows {
        println!(
            "r = {:>6}  {:<16} E1-E0 = {:.3e}  gap = {}",
            r.separation,
            format!("{:?}", r.statistics),
            r.splitting,
            fmt(r.gap, 10)
        );
    }
    write_json(&run.out.join("h2_demo.json"), &demo)
}

fn dispatch(cli: &Cli) -> LabResult<ExitCode> {
    if let Command::Validate = cli.command {
        return validate(cli.config.as_deref());
    }
    let run = load(cli)?;
    match &cli.command {
        Command::Validate => unreachable!(),
        Command::Spectrum => spectrum(&run).map(|_| ExitCode::SUCCESS),
        Command::Thresholds => thresholds(&run).map(|_| ExitCode::SUCCESS),
        Command::Fsmap => fsmap(&run),
        Command::ImsCheck { scales } => ims(&run, scales).map(|_| ExitCode::SUCCESS),
        Command::Scan => scan(&run),
        Command::H2Demo { separations } => h2_demo(&run, separations).map(|_| ExitCode::SUCCESS),
    }
}

fn validate(path: Option<&Path>) -> LabResult<ExitCode> {
    let path = path.ok_or_else(|| LabError::Validation(vec!["--config <path> is required".into()]))?;
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let cfg = parse_unchecked(&text)?;
    let report = validate_config(&cfg);
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(if report.is_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
