//! Test vectors for the envelope test and the pointwise-F / F-max baseline.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{DesignPair, FitResult, FunctionalSample};
use crate::permute::{FreedmanLane, PermutationSet, PermutedStats};

/// Which quantity the elements of a test vector hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// `β_j(t_k)` for every effect `j`.
    Coefficients,
    /// `β_j(t_k) - β_j'(t_k)` for every pair `j < j'`.
    PairwiseDifferences,
    /// One scalar statistic per grid point.
    ScalarStat,
}

/// Identifies one element of a test vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementLabel {
    /// Panel index (effect `j` or pair index).
    pub panel: usize,
    pub panel_label: String,
    pub grid_index: usize,
    pub t: f64,
}

/// `I x L` matrix of test vectors; row 0 is the observed vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TestVectorMatrix {
    pub values: DMatrix<f64>,
    pub labels: Vec<ElementLabel>,
    pub layout: Layout,
}

impl TestVectorMatrix {
    pub fn new(values: DMatrix<f64>, labels: Vec<ElementLabel>, layout: Layout) -> Result<Self> {
        if values.ncols() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} elements",
                labels.len(),
                values.ncols()
            )));
        }
        if values.nrows() < 1 {
            return Err(Error::InvalidInput("no test vectors".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFiniteInput("test vectors"));
        }
        Ok(Self { values, labels, layout })
    }

    /// Number of vectors `I`.
    pub fn count(&self) -> usize {
        self.values.nrows()
    }

    /// Vector length `L`.
    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn observed(&self) -> Vec<f64> {
        self.values.row(0).iter().copied().collect()
    }

    /// Distinct panels in element order.
    pub fn panels(&self) -> Vec<(usize, String)> {
        let mut out: Vec<(usize, String)> = Vec::new();
        for l in &self.labels {
            if out.last().map(|(p, _)| *p) != Some(l.panel) {
                out.push((l.panel, l.panel_label.clone()));
            }
        }
        out
    }
}

fn check_grid(j_labels: &[String], grid: &[f64], beta: &DMatrix<f64>) -> Result<()> {
    if beta.nrows() != j_labels.len() || beta.ncols() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "coefficients are {}x{}, expected {}x{}",
            beta.nrows(),
            beta.ncols(),
            j_labels.len(),
            grid.len()
        )));
    }
    Ok(())
}

/// Coefficient test vectors from raw `J x K` effect matrices.
pub fn coefficient_vectors<'a>(
    betas: impl IntoIterator<Item = &'a DMatrix<f64>>,
    j_labels: &[String],
    grid: &[f64],
) -> Result<TestVectorMatrix> {
    let betas: Vec<&DMatrix<f64>> = betas.into_iter().collect();
    let (j, k) = (j_labels.len(), grid.len());
    for b in &betas {
        check_grid(j_labels, grid, b)?;
    }
    let values = DMatrix::from_fn(betas.len(), j * k, |i, e| betas[i][(e / k, e % k)]);
    let labels = (0..j * k)
        .map(|e| ElementLabel {
            panel: e / k,
            panel_label: j_labels[e / k].clone(),
            grid_index: e % k,
            t: grid[e % k],
        })
        .collect();
    TestVectorMatrix::new(values, labels, Layout::Coefficients)
}

/// Pairs `(j, j')`, `j < j'`, in the order (1,2), (1,3), ..., (J-1,J).
pub fn effect_pairs(j: usize) -> Vec<(usize, usize)> {
    (0..j)
        .flat_map(|a| (a + 1..j).map(move |b| (a, b)))
        .collect()
}

/// Pairwise-difference test vectors from raw `J x K` effect matrices.
pub fn pairwise_vectors<'a>(
    betas: impl IntoIterator<Item = &'a DMatrix<f64>>,
    j_labels: &[String],
    grid: &[f64],
) -> Result<TestVectorMatrix> {
    let betas: Vec<&DMatrix<f64>> = betas.into_iter().collect();
    let (j, k) = (j_labels.len(), grid.len());
    if j < 2 {
        return Err(Error::NotApplicable(
            "pairwise differences need at least two group effects".into(),
        ));
    }
    for b in &betas {
        check_grid(j_labels, grid, b)?;
    }
    let pairs = effect_pairs(j);
    let values = DMatrix::from_fn(betas.len(), pairs.len() * k, |i, e| {
        let (a, b) = pairs[e / k];
        betas[i][(a, e % k)] - betas[i][(b, e % k)]
    });
    let labels = (0..pairs.len() * k)
        .map(|e| {
            let (a, b) = pairs[e / k];
            ElementLabel {
                panel: e / k,
                panel_label: format!("({},{})", a + 1, b + 1),
                grid_index: e % k,
                t: grid[e % k],
            }
        })
        .collect();
    TestVectorMatrix::new(values, labels, Layout::PairwiseDifferences)
}

/// Row `i` is `fits[i].beta` flattened in `(j, k)` order.
pub fn test_vector_coeff(fits: &[FitResult], j_labels: &[String], grid: &[f64]) -> Result<TestVectorMatrix> {
    coefficient_vectors(fits.iter().map(|f| &f.beta), j_labels, grid)
}

/// Row `i` holds `β_j - β_j'` for all pairs `j < j'`, `K` elements per pair.
pub fn test_vector_pairwise(fits: &[FitResult], j_labels: &[String], grid: &[f64]) -> Result<TestVectorMatrix> {
    pairwise_vectors(fits.iter().map(|f| &f.beta), j_labels, grid)
}

/// Nested-model F statistic at every grid point.
///
/// `0/0` gives 0 and `positive/0` gives `+∞`. A negative numerator (possible
/// only through rounding) is clamped to zero.
pub fn f_pointwise(sse_full: &[f64], sse_reduced: &[f64], df1: usize, df2: usize) -> Result<Vec<f64>> {
    if sse_full.len() != sse_reduced.len() {
        return Err(Error::ShapeMismatch("SSE vectors differ in length".into()));
    }
    if df1 == 0 || df2 == 0 {
        return Err(Error::InvalidInput(format!(
            "F needs positive degrees of freedom (df1 = {df1}, df2 = {df2})"
        )));
    }
    Ok(sse_full
        .iter()
        .zip(sse_reduced)
        .map(|(&full, &reduced)| {
            let explained = (reduced - full).max(0.0);
            if full <= 0.0 {
                if explained > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                (explained / df1 as f64) / (full / df2 as f64)
            }
        })
        .collect())
}

/// Relative size below which a sum of squares is treated as exact zero.
const SSE_SNAP: f64 = 1e-20;

fn snap(values: &[f64], scale: &[f64]) -> Vec<f64> {
    values
        .iter()
        .zip(scale)
        .map(|(&v, &s)| if v <= SSE_SNAP * s { 0.0 } else { v })
        .collect()
}

/// Result of the F-max permutation test.
#[derive(Debug, Clone, PartialEq)]
pub struct FmaxResult {
    pub p_value: f64,
    pub observed_f: Vec<f64>,
    /// `max_k F(k)` for every permutation, observed first.
    pub max_distribution: Vec<f64>,
    pub df1: usize,
    pub df2: usize,
}

impl FmaxResult {
    /// Largest value the observed maximum may take without rejecting at
    /// `alpha`: the `(floor(I·alpha) + 1)`-th largest permutation maximum.
    /// The test rejects exactly when some `F(k)` exceeds it.
    pub fn critical_value(&self, alpha: f64) -> Result<f64> {
        let count = self.max_distribution.len();
        let removed = crate::envelope::excluded_count(count, alpha)?;
        let mut sorted = self.max_distribution.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        Ok(sorted[removed])
    }
}

/// Degrees of freedom of the nested F test.
pub fn f_degrees_of_freedom(full_rank: usize, reduced_rank: usize, n: usize) -> Result<(usize, usize)> {
    let df1 = full_rank.saturating_sub(reduced_rank);
    let df2 = n.saturating_sub(full_rank);
    if df1 == 0 || df2 == 0 {
        return Err(Error::NotApplicable(format!(
            "F statistic undefined with df1 = {df1}, df2 = {df2}"
        )));
    }
    Ok((df1, df2))
}

/// F-max from per-permutation sums of squares (observed first).
pub fn f_max_from_stats(stats: &[PermutedStats], df1: usize, df2: usize) -> Result<FmaxResult> {
    let curves = stats
        .iter()
        .map(|s| {
            f_pointwise(
                &snap(&s.sse_full, &s.total_ss),
                &snap(&s.sse_reduced, &s.total_ss),
                df1,
                df2,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let maxima: Vec<f64> = curves
        .iter()
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let observed = maxima[0];
    let floor = if observed.is_finite() {
        observed - crate::envelope::TIE_RTOL * observed.abs()
    } else {
        observed
    };
    let at_least = maxima.iter().filter(|&&m| m >= floor).count();
    Ok(FmaxResult {
        p_value: at_least as f64 / maxima.len() as f64,
        observed_f: curves.into_iter().next().unwrap_or_default(),
        max_distribution: maxima,
        df1,
        df2,
    })
}

/// F-max permutation test with Freedman-Lane pseudo-data.
pub fn f_max_test(y: &FunctionalSample, design: &DesignPair, perms: &PermutationSet) -> Result<FmaxResult> {
    let fl = FreedmanLane::new(y, design)?;
    let (df1, df2) = f_degrees_of_freedom(fl.solver().full_rank(), fl.solver().reduced_rank(), y.n())?;
    let stats = fl.stats_batch(perms, true)?;
    f_max_from_stats(&stats, df1, df2)
}
