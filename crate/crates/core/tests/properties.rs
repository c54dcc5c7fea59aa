use clustergap_core::clusters::{
    assemble_table, compositions, enumerate_decompositions, enumerate_set_partitions, lieb_feasible,
    ClusterLevels, NuclearPartition,
};
use clustergap_core::fsmap::{gram_and_inverse, CandidateFamily, FsMap, FsOptions};
use clustergap_core::ims::{build_cutoffs, max_scale};
use clustergap_core::linalg::{self, DenseSymmetric};
use clustergap_core::operators::{self, Terms};
use clustergap_core::spectra::{self, SolverOptions};
use clustergap_core::symmetry::{permute, Permutation, StatisticsProjector};
use clustergap_core::{rng, LinearOperator, ModelParams, NuclearConfiguration, Projector, Statistics};
use proptest::prelude::*;

fn positions(spread: f64, count: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-spread..spread, count).prop_filter("distinct", |p| {
        p.iter()
            .enumerate()
            .all(|(i, a)| p[i + 1..].iter().all(|b| (a - b).abs() > 0.3))
    })
}

fn apply(p: &dyn Projector, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    p.project(v, &mut out);
    out
}

fn diff(a: &[f64], b: &[f64]) -> f64 {
    linalg::norm(&linalg::sub(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_is_symmetric_and_permutation_invariant(
        pos in positions(4.0, 2),
        electrons in 1usize..=3,
        order in prop::sample::select(vec![2u8, 4]),
        seed in any::<u64>(),
    ) {
        let mut model = ModelParams::new(1.0, 6.0, 11);
        model.stencil_order = order;
        let nuclei = NuclearConfiguration::new(pos, vec![1, 2]);
        let h = operators::assemble_with_terms(&model, &nuclei, electrons, Terms::ELECTRONIC).unwrap();
        let mut g = rng::seeded(seed);
        let u = rng::unit_vector(&mut g, h.dim());
        let v = rng::unit_vector(&mut g, h.dim());
        let lhs = linalg::dot(&u, &h.apply_vec(&v));
        let rhs = linalg::dot(&h.apply_vec(&u), &v);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * h.norm_bound());
        for pi in Permutation::all(electrons) {
            let a = h.apply_vec(&permute(&v, &pi, h.shape()).unwrap());
            let b = permute(&h.apply_vec(&v), &pi, h.shape()).unwrap();
            prop_assert!(diff(&a, &b) <= 1e-12);
        }
    }

    #[test]
    fn statistics_projectors_are_complementary_idempotents(
        electrons in 2usize..=3,
        points in 4usize..=9,
        seed in any::<u64>(),
    ) {
        let shape = clustergap_core::grid::TensorShape::new(points, electrons);
        let s = StatisticsProjector::symmetric(shape);
        let a = StatisticsProjector::antisymmetric(shape);
        let mut g = rng::seeded(seed);
        let v = rng::unit_vector(&mut g, shape.len());
        let sv = apply(&s, &v);
        let av = apply(&a, &v);
        prop_assert!(diff(&apply(&s, &sv), &sv) <= 1e-12);
        prop_assert!(diff(&apply(&a, &av), &av) <= 1e-12);
        prop_assert!(linalg::norm(&apply(&s, &av)) <= 1e-12);
        prop_assert!(linalg::norm(&apply(&a, &sv)) <= 1e-12);
        // symmetric vectors pick up no sign, antisymmetric ones pick up the parity
        for pi in Permutation::all(electrons) {
            prop_assert!(diff(&permute(&sv, &pi, shape).unwrap(), &sv) <= 1e-12);
            let signed: Vec<f64> = av.iter().map(|x| pi.sign() * x).collect();
            prop_assert!(diff(&permute(&av, &pi, shape).unwrap(), &signed) <= 1e-12);
        }
    }

    #[test]
    fn decomposition_splits_the_hamiltonian(
        pos in positions(5.0, 3),
        electrons in 1usize..=2,
        repulsion in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let model = ModelParams::new(1.0, 7.0, 13);
        let mut nuclei = NuclearConfiguration::new(pos, vec![1, 1, 2]);
        nuclei.include_nuclear_repulsion = repulsion;
        let terms = Terms { nuclear_repulsion: repulsion, ..Terms::ELECTRONIC };
        let h = operators::assemble_with_terms(&model, &nuclei, electrons, terms).unwrap();
        let mut g = rng::seeded(seed);
        let v = rng::unit_vector(&mut g, h.dim());
        let hv = h.apply_vec(&v);
        for blocks in enumerate_set_partitions(3) {
            let partition = NuclearPartition::from_blocks(&nuclei, blocks).unwrap();
            for d in enumerate_decompositions(electrons, &partition) {
                let mut sum = operators::assemble_decomposed(&model, &nuclei, &d).unwrap().apply_vec(&v);
                if partition.len() > 1 {
                    let ie = operators::assemble_interaction(&model, &nuclei, &d).unwrap();
                    linalg::axpy(1.0, &ie.apply_vec(&v), &mut sum);
                }
                prop_assert!(diff(&hv, &sum) <= 1e-12);
            }
        }
    }

    #[test]
    fn cutoffs_square_sum_to_one(
        separation in 12.0f64..30.0,
        electrons in 1usize..=2,
        fraction in 0.3f64..1.0,
    ) {
        let nuclei = NuclearConfiguration::new(vec![-0.5 * separation, 0.5 * separation], vec![1, 1]);
        let partition = NuclearPartition::from_blocks(&nuclei, vec![vec![0], vec![1]]).unwrap();
        let grid = ModelParams::new(1.0, 20.0, 81).grid();
        let r = fraction * max_scale(&partition);
        let fam = build_cutoffs(&partition, &grid, electrons, r, None).unwrap();
        prop_assert!(fam.unity_defect() <= 1e-12);
        for b in 0..fam.profiles.len().min(4) {
            prop_assert!(fam.cutoff(b).iter().all(|&j| (0.0..=1.0).contains(&j)));
        }
    }

    #[test]
    fn threshold_table_is_the_minimum_over_candidates(
        a in prop::collection::vec(-2.0f64..0.0, 6),
        b in prop::collection::vec(-2.0f64..0.0, 6),
    ) {
        let nuclei = NuclearConfiguration::new(vec![-10.0, 10.0], vec![1, 1]);
        let partition = NuclearPartition::from_blocks(&nuclei, vec![vec![0], vec![1]]).unwrap();
        let levels = |x: &[f64]| {
            let sorted = |s: &[f64]| {
                let mut s = s.to_vec();
                s.sort_by(f64::total_cmp);
                s
            };
            ClusterLevels {
                charge: 1,
                nuclei: 1,
                reference_count: 1,
                levels: vec![Some(vec![0.0]), Some(sorted(&x[..3])), Some(sorted(&x[3..]))],
            }
        };
        let tol = 1e-9;
        let t = assemble_table(&partition, vec![levels(&a), levels(&b)], 2, tol).unwrap();
        let mut lowest = f64::INFINITY;
        for e in &t.e_inf_0_excited {
            lowest = lowest.min(*e);
        }
        for e in &t.ionic {
            prop_assert!(lieb_feasible(&e.occupation, &partition));
            lowest = lowest.min(e.energy);
        }
        prop_assert_eq!(t.e_inf_1, lowest);
        prop_assert!(t.ionic.len() + t.unbound.len() < compositions(2, 2).len());
        for occ in &t.ionic_minimizers {
            prop_assert!(t.ionic_energy(occ).unwrap() <= t.e_inf_1 + tol);
        }
    }

    #[test]
    fn ritz_values_bound_the_spectrum_from_above(
        n in 6usize..14,
        rank in 1usize..4,
        seed in any::<u64>(),
    ) {
        let mut g = rng::seeded(seed);
        let m = rng::uniform_vector(&mut g, n * n);
        let h = DenseSymmetric::from_fn(n, |i, j| m[i * n + j] + m[j * n + i]);
        let dense = linalg::symmetric_eigen(&h);
        let family: Vec<Vec<f64>> = (0..rank).map(|_| rng::unit_vector(&mut g, n)).collect();
        let p = gram_and_inverse(CandidateFamily::from_vectors(family, &[]), n, 1e-10).unwrap();
        let map = FsMap::new(&h, &p, None, None, FsOptions::default());
        for (i, r) in map.ritz_values().iter().enumerate() {
            prop_assert!(*r >= dense.values[i] - 1e-10);
        }
    }

    #[test]
    fn nuclear_repulsion_shifts_the_spectrum_rigidly(
        separation in 1.0f64..6.0,
    ) {
        let model = ModelParams::new(1.0, 6.0, 31);
        let mut nuclei = NuclearConfiguration::new(vec![-0.5 * separation, 0.5 * separation], vec![1, 1]);
        let opts = SolverOptions { dense: true, ..SolverOptions::default() };
        let bare = operators::assemble_with_terms(&model, &nuclei, 2, Terms::ELECTRONIC).unwrap();
        nuclei.include_nuclear_repulsion = true;
        let full = operators::assemble_with_terms(
            &model,
            &nuclei,
            2,
            Terms { nuclear_repulsion: true, ..Terms::ELECTRONIC },
        )
        .unwrap();
        let vn = operators::nuclear_repulsion(&model, &nuclei);
        let e_bare = spectra::solve_sector(&bare, 2, Statistics::Bosonic, &opts).unwrap().eigenvalues;
        let e_full = spectra::solve_sector(&full, 2, Statistics::Bosonic, &opts).unwrap().eigenvalues;
        for (x, y) in e_bare.iter().zip(&e_full) {
            prop_assert!((y - x - vn).abs() <= 1e-10);
        }
    }
}
