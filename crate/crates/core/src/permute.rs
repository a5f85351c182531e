//! Permutation sets and the Freedman-Lane residual permutation scheme.
//!
//! For a permutation `π` the pseudo-data are `Y* = Zγ̂ + π(ε_Z)`, where
//! `γ̂` and `ε_Z` come from the reduced (nuisance-only) fit of the original
//! data. Row `r` of `π(ε_Z)` is row `π[r]` of `ε_Z`. The full model is then
//! refitted on `Y*`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::column_ss;
use crate::model::{DesignPair, FitResult, FunctionalSample, GlmSolver};

/// Largest `n` accepted for exhaustive enumeration (`8! = 40320`).
pub const MAX_EXHAUSTIVE_N: usize = 8;

/// `I` permutations of `0..n`, the identity first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationSet {
    perms: Vec<Vec<usize>>,
    seed: Option<u64>,
}

impl PermutationSet {
    pub fn from_perms(perms: Vec<Vec<usize>>) -> Result<Self> {
        let first = perms
            .first()
            .ok_or_else(|| Error::InvalidInput("empty permutation set".into()))?;
        let n = first.len();
        for p in &perms {
            if p.len() != n {
                return Err(Error::ShapeMismatch("permutations differ in length".into()));
            }
            check_bijection(p)?;
        }
        if !is_identity(first) {
            return Err(Error::InvalidInput("first permutation must be the identity".into()));
        }
        Ok(Self { perms, seed: None })
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn n(&self) -> usize {
        self.perms[0].len()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn get(&self, index: usize) -> &[usize] {
        &self.perms[index]
    }
}

pub fn is_identity(perm: &[usize]) -> bool {
    perm.iter().enumerate().all(|(i, &p)| i == p)
}

pub fn check_bijection(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidInput(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}

/// The `index`-th random permutation for `seed`.
///
/// Every index has its own ChaCha stream, so a permutation does not depend on
/// how many others were drawn before it or on which thread draws it.
pub fn permutation_at(n: usize, seed: u64, index: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    perm
}

/// Identity followed by `count - 1` independent uniform permutations.
/// Duplicates are allowed.
pub fn generate_permutations(n: usize, count: usize, seed: u64) -> Result<PermutationSet> {
    if n < 2 || count < 2 {
        return Err(Error::InvalidInput(format!(
            "need n >= 2 and at least 2 permutations (got n = {n}, count = {count})"
        )));
    }
    let perms = std::iter::once((0..n).collect())
        .chain((1..count as u64).map(|j| permutation_at(n, seed, j)))
        .collect();
    Ok(PermutationSet {
        perms,
        seed: Some(seed),
    })
}

/// All `n!` permutations in lexicographic order (identity first).
pub fn exhaustive_permutations(n: usize) -> Result<PermutationSet> {
    if !(2..=MAX_EXHAUSTIVE_N).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "exhaustive enumeration supports 2 <= n <= {MAX_EXHAUSTIVE_N}, got {n}"
        )));
    }
    let mut current: Vec<usize> = (0..n).collect();
    let mut perms = vec![current.clone()];
    while next_permutation(&mut current) {
        perms.push(current.clone());
    }
    Ok(PermutationSet { perms, seed: None })
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Per-permutation quantities needed by the test statistics.
#[derive(Debug, Clone)]
pub struct PermutedStats {
    pub beta: DMatrix<f64>,
    pub sse_full: Vec<f64>,
    pub sse_reduced: Vec<f64>,
    /// Column sums of squares of the pseudo-data, used as a scale for
    /// rounding-level residuals.
    pub total_ss: Vec<f64>,
}

/// Freedman-Lane state for one sample and design: the factored models and
/// the reduced fit, computed once and shared by every permutation.
#[derive(Debug, Clone)]
pub struct FreedmanLane {
    solver: GlmSolver,
    y: DMatrix<f64>,
    fitted_reduced: DMatrix<f64>,
    resid_reduced: DMatrix<f64>,
}

impl FreedmanLane {
    pub fn new(y: &FunctionalSample, design: &DesignPair) -> Result<Self> {
        let solver = GlmSolver::new(design)?;
        let reduced = solver.fit_reduced(y.values())?;
        Ok(Self {
            fitted_reduced: y.values() - &reduced.residuals,
            resid_reduced: reduced.residuals,
            y: y.values().clone(),
            solver,
        })
    }

    pub fn solver(&self) -> &GlmSolver {
        &self.solver
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    /// Reduced-model residuals `ε_Z`.
    pub fn reduced_residuals(&self) -> &DMatrix<f64> {
        &self.resid_reduced
    }

    /// `Y* = Zγ̂ + π(ε_Z)`; the identity returns `Y` itself.
    pub fn permuted_data(&self, perm: &[usize]) -> Result<DMatrix<f64>> {
        if perm.len() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "permutation of length {} for {} observations",
                perm.len(),
                self.n()
            )));
        }
        check_bijection(perm)?;
        Ok(self.permuted_unchecked(perm))
    }

    fn permuted_unchecked(&self, perm: &[usize]) -> DMatrix<f64> {
        if is_identity(perm) {
            return self.y.clone();
        }
        let (n, k) = self.y.shape();
        DMatrix::from_fn(n, k, |r, c| {
            self.fitted_reduced[(r, c)] + self.resid_reduced[(perm[r], c)]
        })
    }

    /// Full-model refit of the permuted data.
    pub fn fit(&self, perm: &[usize]) -> Result<FitResult> {
        let y_star = self.permuted_data(perm)?;
        Ok(self.solver.fit_full_unchecked(&y_star))
    }

    /// Interest effects and the sums of squares used by the F statistic.
    pub fn stats(&self, perm: &[usize], with_sse: bool) -> Result<PermutedStats> {
        let y_star = self.permuted_data(perm)?;
        if !with_sse {
            return Ok(PermutedStats {
                beta: self.solver.beta(&y_star),
                sse_full: Vec::new(),
                sse_reduced: Vec::new(),
                total_ss: Vec::new(),
            });
        }
        let full = self.solver.fit_full_unchecked(&y_star);
        let (_, reduced_resid) = self.solver.reduced().solve(&y_star);
        Ok(PermutedStats {
            beta: full.beta,
            sse_full: full.sse,
            sse_reduced: column_ss(&reduced_resid),
            total_ss: column_ss(&y_star),
        })
    }

    pub fn fit_batch(&self, perms: &PermutationSet) -> Result<Vec<FitResult>> {
        self.check_set(perms)?;
        Ok(perms
            .perms()
            .par_iter()
            .map(|p| self.solver.fit_full_unchecked(&self.permuted_unchecked(p)))
            .collect())
    }

    pub fn stats_batch(&self, perms: &PermutationSet, with_sse: bool) -> Result<Vec<PermutedStats>> {
        self.check_set(perms)?;
        perms
            .perms()
            .par_iter()
            .map(|p| self.stats(p, with_sse))
            .collect()
    }

    fn check_set(&self, perms: &PermutationSet) -> Result<()> {
        if perms.n() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "permutations of {} elements for {} observations",
                perms.n(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// Freedman-Lane refit of `Y` under a single permutation.
pub fn freedman_lane(y: &FunctionalSample, design: &DesignPair, perm: &[usize]) -> Result<FitResult> {
    FreedmanLane::new(y, design)?.fit(perm)
}

/// One full-model fit per permutation, in the order of `perms`.
pub fn permuted_beta_batch(
    y: &FunctionalSample,
    design: &DesignPair,
    perms: &PermutationSet,
) -> Result<Vec<FitResult>> {
    FreedmanLane::new(y, design)?.fit_batch(perms)
}
