//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line before asserting.
//!
//! Runs without the libtest harness so every verdict line is printed:
//! `cargo test -p clustergap --test acceptance`.
#![allow(clippy::needless_range_loop)]

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use clustergap::checks::ims_check;
use clustergap::config::load_config;
use clustergap::pipeline::{run_h2_demo, Settings};
use clustergap::report::{run_scan, GapScanReport};
use clustergap_core::clusters::{
    assemble_table, build_threshold_table, compositions, enumerate_decompositions,
    enumerate_set_partitions, lieb_feasible, minimizer_has_eigenstate, ClusterLevels,
    NuclearPartition, ThresholdTable,
};
use clustergap_core::fsmap::{gram_and_inverse, CandidateFamily, FsMap, FsOptions};
use clustergap_core::ims::build_cutoffs;
use clustergap_core::linalg::DenseSymmetric;
use clustergap_core::model::{ExperimentConfig, ModelParams, NuclearConfiguration, Statistics};
use clustergap_core::operators::{self, Terms};
use clustergap_core::rng;
use clustergap_core::spectra::{self, SolverOptions};
use clustergap_core::symmetry::StatisticsProjector;
use clustergap_core::{LinearOperator, Projector};

fn verdict(n: u32, name: &str, ok: bool, detail: String) {
    println!(
        "criterion {:>2} [{}]: {}  {}",
        n,
        name,
        if ok { "PASS" } else { "FAIL" },
        detail
    );
    assert!(ok, "criterion {} failed: {}", n, detail);
}

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    load_config(&path).unwrap().0
}

fn timed_scan() -> &'static (GapScanReport, Duration) {
    static SCAN: OnceLock<(GapScanReport, Duration)> = OnceLock::new();
    SCAN.get_or_init(|| {
        let cfg = config("soft_h2_scan.json");
        let start = Instant::now();
        let run = run_scan(&cfg, Settings::default(), 1).unwrap();
        (run.report, start.elapsed())
    })
}

fn scan() -> &'static GapScanReport {
    &timed_scan().0
}

// ---------------------------------------------------------------------------
// independent dense oracle

/// Cyclic Jacobi eigen-decomposition: ascending eigenvalues and the
/// matching orthonormal eigenvectors.
fn jacobi(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Ground energy of one electron bound to a single nucleus at `y`, from a
/// dense three-point finite-difference matrix.
fn one_electron_ground(model: &ModelParams, y: f64, z: f64) -> f64 {
    let grid = model.grid();
    let h = grid.spacing();
    let n = grid.points;
    let xs = grid.coords();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0 / (h * h) - z / ((xs[i] - y).powi(2) + model.softening.powi(2)).sqrt()
                    } else if i.abs_diff(j) == 1 {
                        -0.5 / (h * h)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    jacobi(&a).0[0]
}

// ---------------------------------------------------------------------------

fn criterion_01_fs_map_oracle_equivalence() {
    let start = Instant::now();
    let mut worst_value = 0.0f64;
    let mut worst_overlap = 1.0f64;
    let mut fixed_points = 0;
    let mut instances = 0;
    let mut attempt = 0u64;
    let mut failures = Vec::new();
    while instances < 50 {
        attempt += 1;
        let n = 8 + (attempt as usize % 9);
        let r = 2 + (attempt as usize % 3);
        let mut g = rng::seeded(1000 + attempt);
        // spectrum in [1, 11] with a forced double level among the lowest
        let mut eig: Vec<f64> = rng::uniform_vector(&mut g, n).iter().map(|x| 6.0 + 5.0 * x).collect();
        eig.sort_by(f64::total_cmp);
        if attempt.is_multiple_of(2) {
            eig[1] = eig[0];
        }
        let mut q: Vec<Vec<f64>> = Vec::new();
        while q.len() < n {
            let mut v = rng::uniform_vector(&mut g, n);
            for u in &q {
                let c = dot(u, &v);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
            }
            let s = norm(&v);
            if s > 1e-3 {
                q.push(v.iter().map(|x| x / s).collect());
            }
        }
        let h = DenseSymmetric::from_fn(n, |i, j| (0..n).map(|k| q[k][i] * eig[k] * q[k][j]).sum());
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| h.get(i, j)).collect()).collect();
        let (values, vectors) = jacobi(&rows);
        let family: Vec<Vec<f64>> = (0..r)
            .map(|i| {
                let noise = rng::uniform_vector(&mut g, n);
                vectors[i].iter().zip(&noise).map(|(a, b)| a + 0.15 * b).collect()
            })
            .collect();
        let projection = gram_and_inverse(CandidateFamily::from_vectors(family, &[]), n, 1e-8).unwrap();
        let opts = FsOptions {
            inner_tol: 1e-14,
            fixed_point_tol: 1e-14,
            max_fixed_point_iter: 200,
            ..FsOptions::default()
        };
        let mut map = FsMap::new(&h, &projection, None, None, opts);
        let floor = map.complement_floor().unwrap();
        // keep instances whose complement block stays invertible with room
        // below its spectrum for every level the family should capture
        if values[r - 1] > floor - 0.05 {
            continue;
        }
        instances += 1;
        for i in 0..r {
            let fp = match map.solve_fixed_point(i, (values[0] - 1.0, floor - 0.01)) {
                Ok(fp) => fp,
                Err(e) => {
                    failures.push(format!("instance {} level {}: {}", attempt, i, e));
                    continue;
                }
            };
            fixed_points += 1;
            let rel = (fp.lambda - values[i]).abs() / values[i].abs();
            worst_value = worst_value.max(rel);
            let mut psi = map.q_map(fp.lambda, &fp.coefficients).unwrap();
            let s = norm(&psi);
            psi.iter_mut().for_each(|x| *x /= s);
            // overlap with the whole eigenspace of the level
            let captured: f64 = values
                .iter()
                .zip(&vectors)
                .filter(|(e, _)| (*e - values[i]).abs() <= 1e-9 * values[i].abs())
                .map(|(_, v)| dot(v, &psi).powi(2))
                .sum::<f64>()
                .sqrt();
            worst_overlap = worst_overlap.min(captured);
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty()
        && worst_value <= 1e-10
        && worst_overlap >= 1.0 - 1e-8
        && elapsed.as_secs_f64() < 10.0;
    verdict(
        1,
        "FS fixed points = dense eigenvalues",
        ok,
        format!(
            "{} instances, {} fixed points, max rel err {:.2e}, min overlap 1-{:.2e}, {:.2?} {:?}",
            instances,
            fixed_points,
            worst_value,
            1.0 - worst_overlap,
            elapsed,
            failures
        ),
    );
}

fn criterion_02_split_identity() {
    let start = Instant::now();
    let model = ModelParams::new(1.0, 10.0, 41);
    let mut nuclei = NuclearConfiguration::new(vec![-6.0, 0.0, 6.0], vec![1, 2, 1]);
    nuclei.include_nuclear_repulsion = true;
    let full = operators::assemble_with_terms(
        &model,
        &nuclei,
        2,
        Terms {
            nuclear_repulsion: true,
            ..Terms::ELECTRONIC
        },
    )
    .unwrap();
    let mut g = rng::seeded(2);
    let vs: Vec<Vec<f64>> = (0..20).map(|_| rng::unit_vector(&mut g, full.dim())).collect();
    let mut worst = 0.0f64;
    let mut count = 0;
    for blocks in enumerate_set_partitions(3) {
        let partition = NuclearPartition::from_blocks(&nuclei, blocks).unwrap();
        for decomp in enumerate_decompositions(2, &partition) {
            count += 1;
            let he = operators::assemble_decomposed(&model, &nuclei, &decomp).unwrap();
            let ie = if partition.len() > 1 {
                Some(operators::assemble_interaction(&model, &nuclei, &decomp).unwrap())
            } else {
                None
            };
            for v in &vs {
                let mut sum = he.apply_vec(v);
                if let Some(ie) = &ie {
                    sum.iter_mut().zip(ie.apply_vec(v)).for_each(|(a, b)| *a += b);
                }
                worst = worst.max(diff_norm(&full.apply_vec(v), &sum));
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        2,
        "H = H_E + I_E",
        worst <= 1e-12 && count == 1 + 3 * 4 + 9 && elapsed.as_secs_f64() < 30.0,
        format!("{} decompositions x 20 vectors, max |residual| {:.2e}, {:.2?}", count, worst, elapsed),
    );
}

fn criterion_03_gap_scan_limits() {
    let (rep, elapsed) = timed_scan();
    let pts: Vec<_> = rep.points.iter().collect();
    let all_ok = pts.iter().all(|p| p.status.is_ok());
    let dev0: Vec<f64> = pts
        .iter()
        .map(|p| (p.e0.unwrap_or(f64::NAN) - p.e_inf_0.unwrap_or(f64::NAN)).abs())
        .collect();
    let monotone = dev0.windows(2).all(|w| w[1] < w[0]);
    let last = pts.last().unwrap();
    let dev1 = (last.e1.unwrap_or(f64::NAN) - last.e_inf_1.unwrap_or(f64::NAN)).abs();
    let gap_ok = pts.iter().all(|p| match (p.gap, p.e_inf_0, p.e_inf_1) {
        (Some(g), Some(a), Some(b)) => g >= 0.9 * (b - a),
        _ => false,
    });
    // independent check of the separated-atom limit: twice the dense
    // one-electron ground energy at the same resolution
    let cfg = config("soft_h2_scan.json");
    let y = last.positions[1];
    let oracle = 2.0 * one_electron_ground(&cfg.model, y, 1.0);
    let oracle_err = (last.e_inf_0.unwrap_or(f64::NAN) - oracle).abs();
    let ok = all_ok
        && monotone
        && dev0.last().copied().unwrap_or(f64::NAN) <= 1e-3
        && dev1 <= 5e-3
        && gap_ok
        && oracle_err <= 1e-9
        && elapsed.as_secs_f64() < 600.0;
    verdict(
        3,
        "gap-scan limits",
        ok,
        format!(
            "|E0-Einf0| = {:?}, |E1-Einf1|(r=30) = {:.2e}, min gap/threshold gap = {:.4}, Einf0 vs dense oracle {:.1e}, scan {:.1?}",
            dev0.iter().map(|d| format!("{:.2e}", d)).collect::<Vec<_>>(),
            dev1,
            pts.iter()
                .filter_map(|p| Some(p.gap? / (p.e_inf_1? - p.e_inf_0?)))
                .fold(f64::INFINITY, f64::min),
            oracle_err,
            elapsed
        ),
    );
}

fn criterion_04_symmetrization_degeneracy() {
    let cfg = config("soft_h2_scan.json");
    let demo = run_h2_demo(&cfg, Settings::default(), &[6.0, 20.0]).unwrap();
    let d6 = demo.row(6.0, Statistics::Distinguishable).unwrap().splitting;
    let d20 = demo.row(20.0, Statistics::Distinguishable).unwrap().splitting;
    let b20 = demo.row(20.0, Statistics::Bosonic).unwrap().gap.unwrap_or(f64::NAN);
    let rel = (b20 - demo.atomic_gap).abs() / demo.atomic_gap;
    verdict(
        4,
        "symmetrization removes the degeneracy",
        d20 <= 1e-6 && rel <= 0.1 && d6 >= 10.0 * d20,
        format!(
            "distinguishable splitting r=6 {:.2e}, r=20 {:.2e}; bosonic gap r=20 {:.6} vs atomic {:.6} ({:.2}%)",
            d6,
            d20,
            b20,
            demo.atomic_gap,
            100.0 * rel
        ),
    );
}

fn criterion_05_projector_algebra() {
    let model = ModelParams::new(1.0, 8.0, 16);
    let nuclei = NuclearConfiguration::new(vec![-2.0, 2.0], vec![1, 1]);
    let h = operators::assemble_with_terms(&model, &nuclei, 3, Terms::ELECTRONIC).unwrap();
    let s = StatisticsProjector::symmetric(h.shape());
    let a = StatisticsProjector::antisymmetric(h.shape());
    let apply = |p: &StatisticsProjector, v: &[f64]| {
        let mut out = vec![0.0; v.len()];
        p.project(v, &mut out);
        out
    };
    let mut g = rng::seeded(5);
    let mut worst = [0.0f64; 5];
    for _ in 0..100 {
        let v = rng::unit_vector(&mut g, h.dim());
        let sv = apply(&s, &v);
        let av = apply(&a, &v);
        worst[0] = worst[0].max(diff_norm(&apply(&s, &sv), &sv));
        worst[1] = worst[1].max(diff_norm(&apply(&a, &av), &av));
        worst[2] = worst[2].max(norm(&apply(&s, &av)));
        worst[3] = worst[3].max(norm(&apply(&a, &sv)));
        worst[4] = worst[4].max(diff_norm(&apply(&s, &h.apply_vec(&v)), &h.apply_vec(&sv)));
    }
    verdict(
        5,
        "projector algebra",
        worst.iter().all(|&w| w <= 1e-10),
        format!(
            "S^2-S {:.1e}, A^2-A {:.1e}, SA {:.1e}, AS {:.1e}, [S,H] {:.1e} (N=3, dim {})",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            worst[4],
            h.dim()
        ),
    );
}

fn criterion_06_ims_identity() {
    let cfg = config("ims_diatomic.json");
    let blocks = vec![vec![0], vec![1]];
    let partition = NuclearPartition::from_blocks(&cfg.nuclei, blocks.clone()).unwrap();
    let r_max = clustergap_core::ims::max_scale(&partition);
    let (check, _) = ims_check(&cfg, &cfg.nuclei, &blocks, 1, &[0.5 * r_max, r_max]).unwrap();
    let two = build_cutoffs(&partition, &cfg.model.grid(), 2, r_max, None).unwrap();
    let unity = check
        .scales
        .iter()
        .map(|r| r.unity_defect)
        .fold(two.unity_defect(), f64::max);
    let d = check.scales.iter().map(|r| r.gradient_constant).fold(0.0, f64::max);
    let bound_holds = check.scales.iter().all(|r| r.max_gradient_sq <= d / r.scale * (1.0 + 1e-12));
    let ok = unity <= 1e-12
        && (3.0..=5.0).contains(&check.defect_ratio)
        && check.gradient_constant_spread <= 0.2
        && bound_holds;
    verdict(
        6,
        "IMS partition of unity",
        ok,
        format!(
            "sum J^2 defect {:.1e}; defect n={} {:.3e} / n={} {:.3e} = {:.2}; d = {:?} (spread {:.2}%)",
            unity,
            check.coarse_points,
            check.defect_coarse,
            check.fine_points,
            check.defect_fine,
            check.defect_ratio,
            check.scales.iter().map(|r| format!("{:.4}", r.gradient_constant)).collect::<Vec<_>>(),
            100.0 * check.gradient_constant_spread
        ),
    );
}

fn criterion_07_nuclear_repulsion_invariance() {
    let model = ModelParams::new(1.0, 10.0, 41);
    let opts = SolverOptions {
        dense: true,
        ..SolverOptions::default()
    };
    let mut gaps = Vec::new();
    let mut grounds = Vec::new();
    for with in [false, true] {
        let mut nuclei = NuclearConfiguration::new(vec![-2.0, 2.0], vec![1, 1]);
        nuclei.include_nuclear_repulsion = with;
        let op = operators::assemble_with_terms(
            &model,
            &nuclei,
            2,
            Terms {
                nuclear_repulsion: with,
                ..Terms::ELECTRONIC
            },
        )
        .unwrap();
        let report = spectra::solve_sector(&op, 3, Statistics::Bosonic, &opts).unwrap();
        let g = spectra::gap(&report, 1e-9).unwrap();
        gaps.push(g.gap);
        grounds.push(g.ground);
    }
    let vn = operators::nuclear_repulsion(&model, &NuclearConfiguration::new(vec![-2.0, 2.0], vec![1, 1]));
    let diff = (gaps[0] - gaps[1]).abs();
    let shift = (grounds[1] - grounds[0] - vn).abs();
    verdict(
        7,
        "gap invariant under V_n",
        diff <= 1e-12 && shift <= 1e-12,
        format!("gap {:.12} vs {:.12} (diff {:.1e}); E0 shift - V_n = {:.1e}", gaps[0], gaps[1], diff, shift),
    );
}

/// `E_∞,1` by brute force over every candidate: one cluster excited at the
/// reference occupation, or any Lieb-admissible non-reference occupation
/// with every cluster bound.
fn brute_force_e_inf_1(table: &ThresholdTable, partition: &NuclearPartition) -> f64 {
    let k = table.clusters.len();
    let tol = table.tolerance;
    let ground = |occ: &[usize]| -> Option<f64> {
        let mut e = 0.0;
        for j in 0..k {
            e += table.clusters[j].levels.get(occ[j])?.as_ref()?[0];
        }
        Some(e)
    };
    let e0 = ground(&table.reference).unwrap();
    let mut best = f64::INFINITY;
    for j in 0..k {
        let c = table.reference[j];
        let lv = table.clusters[j].levels[c].as_ref().unwrap();
        if let Some(&e1) = lv.iter().find(|&&e| e - lv[0] > tol) {
            best = best.min(e0 - lv[0] + e1);
        }
    }
    if k > 1 {
        for occ in compositions(table.electrons, k) {
            if occ == table.reference || !lieb_feasible(&occ, partition) {
                continue;
            }
            let bound = (0..k).all(|j| {
                let c = occ[j];
                c == 0
                    || matches!(
                        (table.clusters[j].ground(c), table.clusters[j].ground(c - 1)),
                        (Some(a), Some(b)) if a < b - tol
                    )
            });
            if bound {
                if let Some(e) = ground(&occ) {
                    best = best.min(e);
                }
            }
        }
    }
    best
}

fn criterion_08_threshold_combinatorics() {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut check = |name: &str, table: &ThresholdTable, partition: &NuclearPartition| {
        let brute = brute_force_e_inf_1(table, partition);
        let exact = brute == table.e_inf_1;
        let minimizers_ok = table
            .ionic_minimizers
            .iter()
            .all(|occ| minimizer_has_eigenstate(table, occ).map(|c| c.holds).unwrap_or(false));
        let mut lieb_ok = true;
        for occ in compositions(table.electrons, partition.len()) {
            let excluded = occ
                .iter()
                .zip(&partition.charges)
                .zip(&partition.blocks)
                .any(|((&c, &z), b)| c >= 2 * z as usize + b.len());
            let listed = table.ionic.iter().any(|e| e.occupation == occ);
            if excluded && (lieb_feasible(&occ, partition) || listed) {
                lieb_ok = false;
            }
            if !excluded && !lieb_feasible(&occ, partition) {
                lieb_ok = false;
            }
        }
        ok &= exact && minimizers_ok && lieb_ok;
        lines.push(format!(
            "{}: E_inf_1 {:.10} (brute force equal: {}), {} ionic minimizer(s) ok: {}, Lieb filter ok: {}",
            name,
            table.e_inf_1,
            exact,
            table.ionic_minimizers.len(),
            minimizers_ok,
            lieb_ok
        ));
    };

    // soft H2 at r = 20
    let cfg = config("soft_h2_scan.json");
    let opts = SolverOptions::default();
    let h2 = NuclearConfiguration {
        positions: vec![-10.0, 10.0],
        ..cfg.nuclei.clone()
    };
    let p2 = NuclearPartition::from_blocks(&h2, vec![vec![0], vec![1]]).unwrap();
    let t2 = build_threshold_table(&cfg.model, &h2, &p2, 2, Statistics::Bosonic, 4, 1e-8, &opts)
        .unwrap()
        .table;
    check("soft H2 r=20", &t2, &p2);

    // three hydrogen-like clusters, three electrons
    let model = ModelParams::new(1.0, 15.0, 61);
    let mut h3 = NuclearConfiguration::new(vec![-10.0, 0.0, 10.0], vec![1, 1, 1]);
    h3.include_nuclear_repulsion = true;
    let p3 = NuclearPartition::from_blocks(&h3, vec![vec![0], vec![1], vec![2]]).unwrap();
    let t3 = build_threshold_table(&model, &h3, &p3, 3, Statistics::Bosonic, 4, 1e-8, &opts)
        .unwrap()
        .table;
    check("H-H-H", &t3, &p3);

    // hand-made levels where an ionic configuration attains E_inf_1
    let nuc = NuclearConfiguration::new(vec![-10.0, 10.0], vec![1, 1]);
    let pp = NuclearPartition::from_blocks(&nuc, vec![vec![0], vec![1]]).unwrap();
    let levels = |l: Vec<Option<Vec<f64>>>| ClusterLevels {
        charge: 1,
        nuclei: 1,
        reference_count: 1,
        levels: l,
    };
    let tt = assemble_table(
        &pp,
        vec![
            levels(vec![Some(vec![0.0]), Some(vec![-1.0, -0.5]), Some(vec![-1.295, -1.0])]),
            levels(vec![Some(vec![0.0]), Some(vec![-0.3, -0.29]), Some(vec![-0.31, -0.2])]),
        ],
        2,
        1e-9,
    )
    .unwrap();
    check("ionic minimizer", &tt, &pp);
    let ionic_seen = !tt.ionic_minimizers.is_empty();
    verdict(
        8,
        "threshold combinatorics",
        ok && ionic_seen,
        lines.join("; "),
    );
}

fn criterion_09_closeness_diagnostics() {
    let rep = scan();
    let diags: Vec<_> = rep.points.iter().map(|p| p.diagnostics).collect();
    let ok_all = diags.iter().all(|d| d.is_some());
    let series = |f: fn(&clustergap_core::fsmap::FsDiagnostics) -> f64| -> Vec<f64> {
        diags.iter().map(|d| d.map(|d| f(&d)).unwrap_or(f64::NAN)).collect()
    };
    let gram = series(|d| d.gram_offdiagonal);
    let ham = series(|d| d.hamiltonian_deviation);
    let schur = series(|d| d.schur_correction);
    let decreasing = |s: &[f64]| s.windows(2).all(|w| w[1] < w[0]);
    let small = |s: &[f64]| s.last().is_some_and(|&x| x < 1e-3);
    let ok = ok_all
        && [&gram, &ham, &schur].iter().all(|s| decreasing(s) && small(s));
    let fmt = |s: &[f64]| s.iter().map(|x| format!("{:.1e}", x)).collect::<Vec<_>>().join(" ");
    verdict(
        9,
        "closeness diagnostics shrink",
        ok,
        format!("gram [{}], <phi,H phi> [{}], schur [{}]", fmt(&gram), fmt(&ham), fmt(&schur)),
    );
}

fn criterion_10_localization() {
    let rep = scan();
    let entries: Vec<_> = rep.points.iter().flat_map(|p| p.localization.iter()).collect();
    let per_point = rep.points.iter().all(|p| !p.localization.is_empty());
    let min_alpha = entries.iter().map(|e| e.alpha).fold(f64::INFINITY, f64::min);
    let min_r2 = entries.iter().map(|e| e.r_squared).fold(f64::INFINITY, f64::min);
    verdict(
        10,
        "exponential localization",
        per_point && min_alpha > 0.0 && min_r2 >= 0.98,
        format!(
            "{} fits, min alpha {:.4}, min R^2 {:.5}, {} of {} below the threshold bound",
            entries.len(),
            min_alpha,
            min_r2,
            entries
                .iter()
                .filter(|e| e.alpha_bound.is_some_and(|b| e.alpha <= b))
                .count(),
            entries.iter().filter(|e| e.alpha_bound.is_some()).count()
        ),
    );
}

fn scan_methods_agree_and_respect_min_max() {
    let rep = scan();
    let mut worst = 0.0f64;
    let mut minmax = f64::INFINITY;
    for p in rep.successful() {
        worst = worst
            .max((p.lambda0.unwrap() - p.e0.unwrap()).abs())
            .max((p.lambda1.unwrap() - p.e1.unwrap()).abs());
        minmax = minmax.min(p.ritz_values[1] - p.e1.unwrap());
    }
    println!("invariant [FS vs direct]: max |lambda_i - E_i| = {:.2e}; min (Ritz_1 - E1) = {:.2e}", worst, minmax);
    assert!(worst <= 1e-7);
    assert!(minmax >= -1e-9);
}

fn scan_points_increase_in_separation() {
    let rep = scan();
    let r: Vec<f64> = rep.points.iter().map(|p| p.min_distance.unwrap()).collect();
    assert!(r.windows(2).all(|w| w[1] > w[0]), "{r:?}");
}

fn main() {
    let checks: &[(&str, fn())] = &[
        ("criterion_01_fs_map_oracle_equivalence", criterion_01_fs_map_oracle_equivalence),
        ("criterion_02_split_identity", criterion_02_split_identity),
        ("criterion_03_gap_scan_limits", criterion_03_gap_scan_limits),
        ("criterion_04_symmetrization_degeneracy", criterion_04_symmetrization_degeneracy),
        ("criterion_05_projector_algebra", criterion_05_projector_algebra),
        ("criterion_06_ims_identity", criterion_06_ims_identity),
        ("criterion_07_nuclear_repulsion_invariance", criterion_07_nuclear_repulsion_invariance),
        ("criterion_08_threshold_combinatorics", criterion_08_threshold_combinatorics),
        ("criterion_09_closeness_diagnostics", criterion_09_closeness_diagnostics),
        ("criterion_10_localization", criterion_10_localization),
        ("scan_methods_agree_and_respect_min_max", scan_methods_agree_and_respect_min_max),
        ("scan_points_increase_in_separation", scan_points_increase_in_separation),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        if std::panic::catch_unwind(check).is_err() {
            failed.push(*name);
        }
    }
    println!("acceptance: {} of {} checks passed", ran - failed.len(), ran);
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
