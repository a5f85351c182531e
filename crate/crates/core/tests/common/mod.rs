#![allow(dead_code)]

use fglm::envelope::{erl_order, erl_p_value, excluded_count, global_envelope_test, rank_columns};
use fglm::model::{build_design, Factor, FunctionalSample, ModelSpec};
use fglm::permute::{generate_permutations, FreedmanLane};
use fglm::stats::{coefficient_vectors, pairwise_vectors, ElementLabel, Layout, TestVectorMatrix};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn grid(k: usize) -> Vec<f64> {
    (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn sample(values: DMatrix<f64>) -> FunctionalSample {
    let (n, k) = values.shape();
    FunctionalSample::new(grid(k), values, ids(n)).unwrap()
}

/// Group labels `g0, g1, ...` with the given group sizes, in blocks.
pub fn groups(name: &str, sizes: &[usize]) -> Factor {
    let labels: Vec<String> = sizes
        .iter()
        .enumerate()
        .flat_map(|(g, &s)| std::iter::repeat_n(format!("g{g}"), s))
        .collect();
    Factor::from_labels(name, &labels).unwrap()
}

pub fn single_panel(values: DMatrix<f64>) -> TestVectorMatrix {
    let labels = (0..values.ncols())
        .map(|e| ElementLabel {
            panel: 0,
            panel_label: "x".into(),
            grid_index: e,
            t: e as f64,
        })
        .collect();
    TestVectorMatrix::new(values, labels, Layout::Coefficients).unwrap()
}

pub fn erl_p(values: &DMatrix<f64>) -> f64 {
    erl_p_value(&erl_order(&rank_columns(values)), values.nrows()).unwrap()
}

pub fn bits(m: &DMatrix<f64>) -> Vec<u64> {
    m.iter().map(|v| v.to_bits()).collect()
}

/// Test-vector matrices with integer entries, so ties occur.
pub fn integer_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (20usize..50, 1usize..8).prop_flat_map(|(i, l)| {
        prop::collection::vec(-6i32..6, i * l).prop_map(move |v| {
            DMatrix::from_iterator(i, l, v.into_iter().map(f64::from))
        })
    })
}

/// Test-vector matrices with continuous entries.
pub fn continuous_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (20usize..80, 1usize..12, any::<u64>()).prop_map(|(i, l, seed)| random_matrix(i, l, seed))
}

/// Per-column strictly increasing maps `x -> a·x³ + b·x + c`.
pub fn monotone_maps() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.0..2.0f64, 0.5..3.0f64, -5.0..5.0f64), 12)
}

pub fn check_monotone_invariance(m: &DMatrix<f64>, maps: &[(f64, f64, f64)]) -> Result<(), TestCaseError> {
    let mapped = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
        let (a, b, s) = maps[c % maps.len()];
        let x = m[(r, c)];
        a * x * x * x + b * x + s
    });
    let before = rank_columns(m);
    let after = rank_columns(&mapped);
    prop_assert_eq!(&before.s, &after.s);
    prop_assert_eq!(erl_order(&before).measure, erl_order(&after).measure);
    prop_assert_eq!(erl_p(m).to_bits(), erl_p(&mapped).to_bits());
    Ok(())
}

/// Rejection by exits agrees with `p ≤ α` unless the observed vector or the
/// cutoff sits inside an ERL tie.
pub fn check_envelope_p_consistency(m: &DMatrix<f64>, alpha: f64) -> Result<(), TestCaseError> {
    let count = m.nrows();
    let Ok(removed) = excluded_count(count, alpha) else {
        return Ok(());
    };
    let ord = erl_order(&rank_columns(m));
    let tied_observed = (1..count).any(|i| ord.compare(0, i).is_eq());
    let tied_cut = ord.measure[ord.order_index[removed]] == ord.measure[ord.order_index[removed - 1]];
    prop_assume!(!tied_observed && !tied_cut);
    let res = global_envelope_test(&single_panel(m.clone()), alpha).unwrap();
    prop_assert_eq!(res.rejected, res.p_value <= alpha, "p = {}, exits = {}", res.p_value, res.exits.len());
    Ok(())
}

pub fn check_alpha_monotonicity(m: &DMatrix<f64>, a1: f64, a2: f64) -> Result<(), TestCaseError> {
    let (lo_a, hi_a) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
    prop_assume!(excluded_count(m.nrows(), lo_a).is_ok() && excluded_count(m.nrows(), hi_a).is_ok());
    let tv = single_panel(m.clone());
    let wide = global_envelope_test(&tv, lo_a).unwrap();
    let narrow = global_envelope_test(&tv, hi_a).unwrap();
    for e in 0..m.ncols() {
        prop_assert!(wide.low[e] <= narrow.low[e] && narrow.upp[e] <= wide.upp[e]);
    }
    prop_assert!(wide.exits.len() <= narrow.exits.len());
    Ok(())
}

/// Random effects matrices `J x K` for a few permutations.
pub fn beta_stack() -> impl Strategy<Value = (usize, Vec<DMatrix<f64>>)> {
    (3usize..6, 2usize..6, any::<u64>()).prop_map(|(j, k, seed)| {
        let betas = (0..4).map(|r| random_matrix(j, k, seed.wrapping_add(r))).collect();
        (j, betas)
    })
}

pub fn check_cocycle(j: usize, betas: &[DMatrix<f64>]) -> Result<(), TestCaseError> {
    let k = betas[0].ncols();
    let labels: Vec<String> = (0..j).map(|g| format!("g{g}")).collect();
    let tv = pairwise_vectors(betas.iter(), &labels, &grid(k)).unwrap();
    let pairs = fglm::stats::effect_pairs(j);
    let index = |a: usize, b: usize| pairs.iter().position(|&p| p == (a, b)).unwrap();
    for row in 0..tv.count() {
        for a in 0..j {
            for b in a + 1..j {
                for c in b + 1..j {
                    for t in 0..k {
                        let d = |x, y| tv.values[(row, index(x, y) * k + t)];
                        let lhs = d(a, b) + d(b, c);
                        prop_assert!((lhs - d(a, c)).abs() <= 1e-12 * (1.0 + lhs.abs()));
                    }
                }
            }
        }
    }
    Ok(())
}

/// One categorical interest factor with random group sizes, a continuous nuisance.
pub fn grouped_design() -> impl Strategy<Value = (Vec<usize>, u64)> {
    (prop::collection::vec(1usize..5, 2..5), any::<u64>())
}

pub fn check_sum_to_zero(sizes: &[usize], seed: u64) -> Result<(), TestCaseError> {
    let n: usize = sizes.iter().sum();
    prop_assume!(n >= sizes.len() + 3);
    let y = sample(random_matrix(n, 6, seed));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let factors = vec![groups("g", sizes), Factor::continuous("x", x)];
    let design = build_design(&ModelSpec::new(&["g"], &["x"]), &factors, n).unwrap();
    let perms = generate_permutations(n, 20, seed).unwrap();
    let fits = FreedmanLane::new(&y, &design).unwrap().stats_batch(&perms, false).unwrap();
    for f in &fits {
        prop_assert_eq!(f.beta.nrows(), sizes.len());
        for col in f.beta.column_iter() {
            let scale = 1.0 + col.amax();
            prop_assert!(col.sum().abs() <= 1e-10 * scale, "sum = {}", col.sum());
        }
    }
    let tv = coefficient_vectors(fits.iter().map(|f| &f.beta), &design.j_labels, y.grid()).unwrap();
    prop_assert_eq!(tv.len(), sizes.len() * 6);
    Ok(())
}

/// A permutation test on fixed data gives bitwise identical effects and
/// p-values in a 1-thread and a 4-thread pool.
pub fn check_thread_determinism(seed: u64) -> Result<(), TestCaseError> {
    let sizes = [5, 6, 7];
    let y = sample(random_matrix(18, 15, seed));
    let design = build_design(&ModelSpec::new(&["g"], &[]), &[groups("g", &sizes)], 18).unwrap();
    let perms = generate_permutations(18, 200, seed).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let fits = FreedmanLane::new(&y, &design).unwrap().stats_batch(&perms, true).unwrap();
            let tv = coefficient_vectors(fits.iter().map(|f| &f.beta), &design.j_labels, y.grid()).unwrap();
            let fmax = fglm::stats::f_max_test(&y, &design, &perms).unwrap();
            (bits(&tv.values), erl_p(&tv.values).to_bits(), fmax.p_value.to_bits())
        })
    };
    prop_assert_eq!(run(1), run(4));
    Ok(())
}
