mod common;

use common::*;
use fglm::model::{build_design, fit_pointwise, fit_reduced, Factor, ModelSpec};
use fglm::permute::{generate_permutations, FreedmanLane};
use fglm::stats::{f_max_test, pairwise_vectors};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    let scale = 1.0 + a.amax().max(b.amax());
    (a - b).amax() <= tol * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ranks_and_p_survive_monotone_maps(m in integer_matrix(), maps in monotone_maps()) {
        check_monotone_invariance(&m, &maps)?;
    }

    #[test]
    fn exits_agree_with_p_value(m in continuous_matrix(), alpha in 0.05..0.3f64) {
        check_envelope_p_consistency(&m, alpha)?;
    }

    #[test]
    fn larger_alpha_gives_narrower_envelope(m in continuous_matrix(), a1 in 0.02..0.5f64, a2 in 0.02..0.5f64) {
        check_alpha_monotonicity(&m, a1, a2)?;
    }

    #[test]
    fn pairwise_differences_form_a_cocycle((j, betas) in beta_stack()) {
        check_cocycle(j, &betas)?;
    }

    #[test]
    fn effects_sum_to_zero((sizes, seed) in grouped_design()) {
        check_sum_to_zero(&sizes, seed)?;
    }

    #[test]
    fn p_value_lies_on_the_permutation_lattice(m in continuous_matrix()) {
        let p = erl_p(&m);
        let count = m.nrows() as f64;
        prop_assert!(p >= 1.0 / count && p <= 1.0);
        prop_assert!(((p * count) - (p * count).round()).abs() < 1e-9);
    }

    #[test]
    fn nuisance_effects_are_absorbed(seed in any::<u64>(), shift in prop::collection::vec(-5.0..5.0f64, 6)) {
        // Adding Zδ to Y leaves every Freedman-Lane replicate unchanged.
        let n = 14;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let factors = vec![groups("g", &[4, 5, 5]), Factor::continuous("x", x.clone())];
        let design = build_design(&ModelSpec::new(&["g"], &["x"]), &factors, n).unwrap();
        let y = random_matrix(n, 6, seed);
        let shifted = DMatrix::from_fn(n, 6, |r, c| y[(r, c)] + shift[c] * x[r] + shift[(c + 3) % 6]);
        let perms = generate_permutations(n, 30, seed).unwrap();
        let a = FreedmanLane::new(&sample(y), &design).unwrap().fit_batch(&perms).unwrap();
        let b = FreedmanLane::new(&sample(shifted), &design).unwrap().fit_batch(&perms).unwrap();
        for (fa, fb) in a.iter().zip(&b) {
            prop_assert!(close(&fa.beta, &fb.beta, 1e-9));
        }
    }

    #[test]
    fn constant_shift_leaves_effects_unchanged(seed in any::<u64>(), c in prop::collection::vec(-100.0..100.0f64, 5)) {
        let n = 12;
        let design = build_design(&ModelSpec::new(&["g"], &[]), &[groups("g", &[3, 4, 5])], n).unwrap();
        let y = random_matrix(n, 5, seed);
        let moved = DMatrix::from_fn(n, 5, |r, k| y[(r, k)] + c[k]);
        let a = fit_pointwise(&sample(y), &design).unwrap();
        let b = fit_pointwise(&sample(moved), &design).unwrap();
        prop_assert!(close(&a.beta, &b.beta, 1e-10));
    }

    #[test]
    fn relabeling_rows_keeps_the_fit(seed in any::<u64>()) {
        let sizes = [3, 4, 2];
        let n = 9;
        let g = groups("g", &sizes);
        let labels: Vec<String> = match &g.kind {
            fglm::model::FactorKind::Categorical { levels, codes } => codes.iter().map(|&c| levels[c].clone()).collect(),
            _ => unreachable!(),
        };
        let perm = fglm::permute::permutation_at(n, seed, 1);
        let y = random_matrix(n, 4, seed);
        let y2 = DMatrix::from_fn(n, 4, |r, k| y[(perm[r], k)]);
        let labels2: Vec<String> = perm.iter().map(|&p| labels[p].clone()).collect();
        let d1 = build_design(&ModelSpec::new(&["g"], &[]), &[g.clone()], n).unwrap();
        let g2 = Factor::from_labels("g", &labels2).unwrap();
        let d2 = build_design(&ModelSpec::new(&["g"], &[]), &[g2.clone()], n).unwrap();
        let b1 = fit_pointwise(&sample(y), &d1).unwrap().beta;
        let b2 = fit_pointwise(&sample(y2), &d2).unwrap().beta;
        // Effects follow level names, whose order may change with the relabeling.
        let levels = |f: &Factor| match &f.kind {
            fglm::model::FactorKind::Categorical { levels, .. } => levels.clone(),
            _ => unreachable!(),
        };
        let (l1, l2) = (levels(&g), levels(&g2));
        for (row1, name) in l1.iter().enumerate() {
            let row2 = l2.iter().position(|l| l == name).unwrap();
            for k in 0..4 {
                prop_assert!((b1[(row1, k)] - b2[(row2, k)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn full_model_fits_at_least_as_well(seed in any::<u64>(), sizes in prop::collection::vec(2usize..5, 2..4)) {
        let n: usize = sizes.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let factors = vec![groups("g", &sizes), Factor::continuous("x", x)];
        let design = build_design(&ModelSpec::new(&["g"], &["x"]), &factors, n).unwrap();
        let y = sample(random_matrix(n, 7, seed));
        let full = fit_pointwise(&y, &design).unwrap();
        let reduced = fit_reduced(&y, &design).unwrap();
        for (f, r) in full.sse.iter().zip(&reduced.sse) {
            prop_assert!(*f <= r * (1.0 + 1e-12) + 1e-14);
        }
    }

    #[test]
    fn two_group_difference_is_twice_the_first_effect(seed in any::<u64>(), a in 2usize..6, b in 2usize..6) {
        let n = a + b;
        let design = build_design(&ModelSpec::new(&["g"], &[]), &[groups("g", &[a, b])], n).unwrap();
        let y = sample(random_matrix(n, 5, seed));
        let beta = fit_pointwise(&y, &design).unwrap().beta;
        let tv = pairwise_vectors([&beta], &design.j_labels, y.grid()).unwrap();
        for k in 0..5 {
            prop_assert!((tv.values[(0, k)] - 2.0 * beta[(0, k)]).abs() < 1e-12);
        }
    }

    #[test]
    fn f_max_is_affine_invariant(seed in any::<u64>(), scale in 0.1..50.0f64, c in prop::collection::vec(-10.0..10.0f64, 6)) {
        let n = 15;
        let design = build_design(&ModelSpec::new(&["g"], &[]), &[groups("g", &[5, 5, 5])], n).unwrap();
        let y = random_matrix(n, 6, seed);
        let moved = DMatrix::from_fn(n, 6, |r, k| scale * y[(r, k)] + c[k]);
        let perms = generate_permutations(n, 100, seed).unwrap();
        let a = f_max_test(&sample(y), &design, &perms).unwrap();
        let b = f_max_test(&sample(moved), &design, &perms).unwrap();
        prop_assert_eq!(a.p_value, b.p_value);
        for (fa, fb) in a.observed_f.iter().zip(&b.observed_f) {
            prop_assert!((fa - fb).abs() <= 1e-8 * (1.0 + fa.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn results_do_not_depend_on_thread_count(seed in any::<u64>()) {
        check_thread_determinism(seed)?;
    }
}
