//! Functional observations, factor declarations, design matrices and the
//! pointwise least-squares fits of the full and reduced models.
//!
//! A functional GLM is fitted independently at every grid point `t_k`:
//!
//! ```text
//! full:     Y = X β + Z γ + ε
//! reduced:  Y = Z γ + ε_Z
//! ```
//!
//! Categorical interest factors use deviation (sum-to-zero) coding. `X` then
//! holds `J - 1` contrast columns per factor and [`DesignPair::expansion`]
//! maps the fitted contrasts back to the `J` group effects, which sum to zero
//! by construction.

use std::collections::{HashMap, HashSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_ss, rank_of, LeastSquares};

/// `n` functions observed on a shared grid of `K` points.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    grid: Vec<f64>,
    values: DMatrix<f64>,
    ids: Vec<String>,
}

impl FunctionalSample {
    pub fn new(grid: Vec<f64>, values: DMatrix<f64>, ids: Vec<String>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::Grid(format!("need at least 2 grid points, got {}", grid.len())));
        }
        if grid.iter().any(|t| !t.is_finite()) {
            return Err(Error::Grid("grid values must be finite".into()));
        }
        if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Grid(format!(
                "grid must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        if values.ncols() != grid.len() || values.nrows() != ids.len() {
            return Err(Error::ShapeMismatch(format!(
                "values are {}x{}, expected {}x{}",
                values.nrows(),
                values.ncols(),
                ids.len(),
                grid.len()
            )));
        }
        if ids.is_empty() {
            return Err(Error::InvalidInput("sample has no functions".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("function values"));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self { grid, values, ids })
    }

    /// Same grid and ids, new values.
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.ids.clone())
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// The `n x K` value matrix; row `i` is function `y_i`.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn k(&self) -> usize {
        self.values.ncols()
    }
}

/// Per-observation data of a factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Continuous { values: Vec<f64> },
    Categorical { levels: Vec<String>, codes: Vec<usize> },
    Interaction { first: String, second: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub kind: FactorKind,
}

impl Factor {
    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            kind: FactorKind::Continuous { values },
        }
    }

    pub fn categorical(name: impl Into<String>, levels: Vec<String>, codes: Vec<usize>) -> Result<Self> {
        let name = name.into();
        if levels.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "categorical factor `{name}` needs at least 2 levels"
            )));
        }
        if let Some(&bad) = codes.iter().find(|&&c| c >= levels.len()) {
            return Err(Error::InvalidInput(format!(
                "factor `{name}` has level index {bad} but only {} levels",
                levels.len()
            )));
        }
        Ok(Self {
            name,
            kind: FactorKind::Categorical { levels, codes },
        })
    }

    /// Categorical factor from raw labels; levels are taken in order of first appearance.
    pub fn from_labels<S: AsRef<str>>(name: impl Into<String>, labels: &[S]) -> Result<Self> {
        let mut levels: Vec<String> = Vec::new();
        let mut codes = Vec::with_capacity(labels.len());
        for label in labels {
            let label = label.as_ref();
            let code = match levels.iter().position(|l| l == label) {
                Some(c) => c,
                None => {
                    levels.push(label.to_string());
                    levels.len() - 1
                }
            };
            codes.push(code);
        }
        Self::categorical(name, levels, codes)
    }

    /// Interaction named `first:second`.
    pub fn interaction(first: impl Into<String>, second: impl Into<String>) -> Self {
        let (first, second) = (first.into(), second.into());
        Self {
            name: format!("{first}:{second}"),
            kind: FactorKind::Interaction { first, second },
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FactorKind::Categorical { .. })
    }
}

fn default_true() -> bool {
    true
}

/// Which factors form `X` (tested) and which form `Z` (controlled for).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub interest: Vec<String>,
    #[serde(default)]
    pub nuisance: Vec<String>,
    #[serde(default = "default_true")]
    pub include_intercept: bool,
}

impl ModelSpec {
    pub fn new(interest: &[&str], nuisance: &[&str]) -> Self {
        Self {
            interest: interest.iter().map(|s| s.to_string()).collect(),
            nuisance: nuisance.iter().map(|s| s.to_string()).collect(),
            include_intercept: true,
        }
    }
}

/// How one model term was turned into columns.
#[derive(Debug, Clone, PartialEq)]
pub enum Coding {
    Intercept,
    /// One mean-centered column.
    Centered,
    /// `levels - 1` deviation columns; the last level carries minus the sum.
    Deviation { levels: usize },
    /// Products of the deviation columns of two categorical factors.
    DeviationProduct { first_levels: usize, second_levels: usize },
    /// Deviation columns of a categorical factor times a centered covariate.
    DeviationSlope { levels: usize },
    /// Product of two centered covariates.
    CenteredProduct,
    /// Columns supplied directly by the caller.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermCoding {
    pub term: String,
    pub coding: Coding,
    /// Number of columns the term occupies in `X` or `Z`.
    pub columns: usize,
    /// Number of recoverable effects (only meaningful for interest terms).
    pub effects: usize,
}

/// Interest and nuisance design matrices for one sample.
#[derive(Debug, Clone)]
pub struct DesignPair {
    /// `n x p` interest columns.
    pub x: DMatrix<f64>,
    /// `n x q` nuisance columns (intercept first when present).
    pub z: DMatrix<f64>,
    /// `J x p` map from fitted interest coefficients to the `J` effects.
    pub expansion: DMatrix<f64>,
    /// `n x J` matrix with `x_effects * expansion == x`.
    pub x_effects: DMatrix<f64>,
    pub j_labels: Vec<String>,
    pub coding_map: Vec<TermCoding>,
    /// True when every interest effect belongs to a sum-to-zero group.
    pub grouped: bool,
}

impl DesignPair {
    /// Wraps caller-supplied matrices; interest effects are the raw coefficients.
    pub fn from_matrices(x: DMatrix<f64>, z: DMatrix<f64>) -> Result<Self> {
        if x.nrows() != z.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "X has {} rows but Z has {}",
                x.nrows(),
                z.nrows()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidInput("X has no columns".into()));
        }
        let p = x.ncols();
        Ok(Self {
            expansion: DMatrix::identity(p, p),
            x_effects: x.clone(),
            j_labels: (1..=p).map(|j| format!("beta{j}")).collect(),
            coding_map: vec![
                TermCoding {
                    term: "X".into(),
                    coding: Coding::Raw,
                    columns: p,
                    effects: p,
                },
                TermCoding {
                    term: "Z".into(),
                    coding: Coding::Raw,
                    columns: z.ncols(),
                    effects: 0,
                },
            ],
            grouped: false,
            x,
            z,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of interest effects `J`.
    pub fn j(&self) -> usize {
        self.expansion.nrows()
    }

    /// `[X | Z]`.
    pub fn combined(&self) -> DMatrix<f64> {
        let n = self.n();
        let (p, q) = (self.x.ncols(), self.z.ncols());
        let mut m = DMatrix::zeros(n, p + q);
        m.columns_mut(0, p).copy_from(&self.x);
        m.columns_mut(p, q).copy_from(&self.z);
        m
    }

    /// Pairwise differences of effects are meaningful: a single grouped
    /// interest term with at least two effects.
    pub fn supports_pairwise(&self) -> bool {
        self.grouped && self.j() >= 2
    }
}

struct TermBlock {
    columns: DMatrix<f64>,
    effects: DMatrix<f64>,
    expansion: DMatrix<f64>,
    labels: Vec<String>,
    coding: Coding,
    grouped: bool,
}

enum Resolved<'a> {
    Continuous(&'a [f64]),
    Categorical { levels: &'a [String], codes: &'a [usize] },
}

struct FactorTable<'a> {
    by_name: HashMap<&'a str, &'a Factor>,
    n: usize,
}

impl<'a> FactorTable<'a> {
    fn new(factors: &'a [Factor], n: usize) -> Result<Self> {
        let mut by_name = HashMap::new();
        for f in factors {
            if by_name.insert(f.name.as_str(), f).is_some() {
                return Err(Error::InvalidInput(format!("factor `{}` declared twice", f.name)));
            }
        }
        let table = Self { by_name, n };
        for f in factors {
            match &f.kind {
                FactorKind::Continuous { values } => {
                    table.check_len(&f.name, values.len())?;
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFiniteInput("continuous factor"));
                    }
                }
                FactorKind::Categorical { levels, codes } => {
                    table.check_len(&f.name, codes.len())?;
                    if levels.len() < 2 || codes.iter().any(|&c| c >= levels.len()) {
                        return Err(Error::InvalidInput(format!(
                            "factor `{}` has invalid level codes",
                            f.name
                        )));
                    }
                }
                FactorKind::Interaction { first, second } => {
                    if first == second {
                        return Err(Error::InvalidInput(format!(
                            "interaction `{}` references `{first}` twice",
                            f.name
                        )));
                    }
                    for parent in [first, second] {
                        match table.by_name.get(parent.as_str()) {
                            None => return Err(Error::UnknownFactor(parent.clone())),
                            Some(p) if matches!(p.kind, FactorKind::Interaction { .. }) => {
                                return Err(Error::InvalidInput(format!(
                                    "interaction `{}` nests another interaction",
                                    f.name
                                )))
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        Ok(table)
    }

    fn check_len(&self, name: &str, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::ShapeMismatch(format!(
                "factor `{name}` has {len} observations, sample has {}",
                self.n
            )));
        }
        Ok(())
    }

    fn get(&self, name: &str) -> Result<&'a Factor> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownFactor(name.to_string()))
    }

    fn resolve(&self, name: &str) -> Result<Resolved<'a>> {
        match &self.get(name)?.kind {
            FactorKind::Continuous { values } => Ok(Resolved::Continuous(values)),
            FactorKind::Categorical { levels, codes } => Ok(Resolved::Categorical { levels, codes }),
            FactorKind::Interaction { .. } => Err(Error::InvalidInput(format!(
                "`{name}` is an interaction, expected a main effect"
            ))),
        }
    }

    fn block(&self, name: &str) -> Result<TermBlock> {
        let factor = self.get(name)?;
        match &factor.kind {
            FactorKind::Continuous { values } => {
                let col = centered(values);
                Ok(TermBlock {
                    columns: col.clone(),
                    effects: col,
                    expansion: DMatrix::from_element(1, 1, 1.0),
                    labels: vec![name.to_string()],
                    coding: Coding::Centered,
                    grouped: false,
                })
            }
            FactorKind::Categorical { levels, codes } => {
                check_levels(name, levels, codes)?;
                let dev = deviation_columns(codes, levels.len());
                Ok(TermBlock {
                    columns: dev,
                    effects: indicators(codes, levels.len()),
                    expansion: deviation_expansion(levels.len()),
                    labels: levels.iter().map(|l| format!("{name}={l}")).collect(),
                    coding: Coding::Deviation { levels: levels.len() },
                    grouped: true,
                })
            }
            FactorKind::Interaction { first, second } => {
                let a = self.resolve(first)?;
                let b = self.resolve(second)?;
                match (a, b) {
                    (
                        Resolved::Categorical { levels: la, codes: ca },
                        Resolved::Categorical { levels: lb, codes: cb },
                    ) => {
                        check_levels(first, la, ca)?;
                        check_levels(second, lb, cb)?;
                        let (na, nb) = (la.len(), lb.len());
                        let cells: Vec<usize> = ca.iter().zip(cb).map(|(&a, &b)| a * nb + b).collect();
                        let mut labels = Vec::with_capacity(na * nb);
                        for a in la {
                            for b in lb {
                                labels.push(format!("{first}={a}:{second}={b}"));
                            }
                        }
                        let cell_names: Vec<String> = la
                            .iter()
                            .flat_map(|a| lb.iter().map(move |b| format!("{a}:{b}")))
                            .collect();
                        check_levels(name, &cell_names, &cells)?;
                        let da = deviation_columns(ca, na);
                        let db = deviation_columns(cb, nb);
                        let n = ca.len();
                        let mut columns = DMatrix::zeros(n, (na - 1) * (nb - 1));
                        for i in 0..na - 1 {
                            for j in 0..nb - 1 {
                                let col = i * (nb - 1) + j;
                                for r in 0..n {
                                    columns[(r, col)] = da[(r, i)] * db[(r, j)];
                                }
                            }
                        }
                        Ok(TermBlock {
                            columns,
                            effects: indicators(&cells, na * nb),
                            expansion: deviation_expansion(na).kronecker(&deviation_expansion(nb)),
                            labels,
                            coding: Coding::DeviationProduct {
                                first_levels: na,
                                second_levels: nb,
                            },
                            grouped: true,
                        })
                    }
                    (Resolved::Categorical { levels, codes }, Resolved::Continuous(x))
                    | (Resolved::Continuous(x), Resolved::Categorical { levels, codes }) => {
                        let (cat_name, cont_name) = if matches!(self.resolve(first)?, Resolved::Categorical { .. }) {
                            (first, second)
                        } else {
                            (second, first)
                        };
                        check_levels(cat_name, levels, codes)?;
                        let xc = centered(x);
                        let scale = |m: DMatrix<f64>| {
                            let mut m = m;
                            for mut col in m.column_iter_mut() {
                                col.component_mul_assign(&xc.column(0));
                            }
                            m
                        };
                        Ok(TermBlock {
                            columns: scale(deviation_columns(codes, levels.len())),
                            effects: scale(indicators(codes, levels.len())),
                            expansion: deviation_expansion(levels.len()),
                            labels: levels
                                .iter()
                                .map(|l| format!("{cat_name}={l}:{cont_name}"))
                                .collect(),
                            coding: Coding::DeviationSlope { levels: levels.len() },
                            grouped: true,
                        })
                    }
                    (Resolved::Continuous(x1), Resolved::Continuous(x2)) => {
                        let mut col = centered(x1);
                        col.component_mul_assign(&centered(x2));
                        Ok(TermBlock {
                            columns: col.clone(),
                            effects: col,
                            expansion: DMatrix::from_element(1, 1, 1.0),
                            labels: vec![name.to_string()],
                            coding: Coding::CenteredProduct,
                            grouped: false,
                        })
                    }
                }
            }
        }
    }
}

fn centered(values: &[f64]) -> DMatrix<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    DMatrix::from_iterator(values.len(), 1, values.iter().map(|v| v - mean))
}

fn check_levels<S: AsRef<str>>(name: &str, levels: &[S], codes: &[usize]) -> Result<()> {
    let mut counts = vec![0usize; levels.len()];
    for &c in codes {
        counts[c] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyLevel {
            factor: name.to_string(),
            level: levels[empty].as_ref().to_string(),
        });
    }
    Ok(())
}

fn indicators(codes: &[usize], levels: usize) -> DMatrix<f64> {
    DMatrix::from_fn(codes.len(), levels, |r, c| if codes[r] == c { 1.0 } else { 0.0 })
}

/// Deviation coding: level `c < L-1` gets a 1 in column `c`, the last level
/// gets -1 in every column.
fn deviation_columns(codes: &[usize], levels: usize) -> DMatrix<f64> {
    DMatrix::from_fn(codes.len(), levels - 1, |r, c| {
        if codes[r] == levels - 1 {
            -1.0
        } else if codes[r] == c {
            1.0
        } else {
            0.0
        }
    })
}

/// `L x (L-1)` map from deviation contrasts to the `L` group effects.
fn deviation_expansion(levels: usize) -> DMatrix<f64> {
    DMatrix::from_fn(levels, levels - 1, |r, c| {
        if r == levels - 1 {
            -1.0
        } else if r == c {
            1.0
        } else {
            0.0
        }
    })
}

/// Builds `X` and `Z` for a sample of `n` observations.
pub fn build_design(spec: &ModelSpec, factors: &[Factor], n: usize) -> Result<DesignPair> {
    if spec.interest.is_empty() {
        return Err(Error::InvalidInput("model has no factor of interest".into()));
    }
    if let Some(both) = spec.interest.iter().find(|f| spec.nuisance.contains(f)) {
        return Err(Error::InvalidInput(format!(
            "factor `{both}` is both of interest and nuisance"
        )));
    }
    let table = FactorTable::new(factors, n)?;
    let in_model = |name: &str| spec.interest.iter().chain(&spec.nuisance).any(|f| f == name);
    for name in spec.interest.iter().chain(&spec.nuisance) {
        if let FactorKind::Interaction { first, second } = &table.get(name)?.kind {
            for parent in [first, second] {
                if !in_model(parent) {
                    return Err(Error::InvalidInput(format!(
                        "interaction `{name}` requires its main effect `{parent}` in the model"
                    )));
                }
            }
        }
    }

    let mut coding_map = Vec::new();
    let mut z_cols: Vec<DMatrix<f64>> = Vec::new();
    if spec.include_intercept {
        z_cols.push(DMatrix::from_element(n, 1, 1.0));
        coding_map.push(TermCoding {
            term: "(intercept)".into(),
            coding: Coding::Intercept,
            columns: 1,
            effects: 0,
        });
    }
    for name in &spec.nuisance {
        let block = table.block(name)?;
        coding_map.push(TermCoding {
            term: name.clone(),
            coding: block.coding.clone(),
            columns: block.columns.ncols(),
            effects: 0,
        });
        z_cols.push(block.columns);
    }

    let blocks: Vec<TermBlock> = spec
        .interest
        .iter()
        .map(|name| table.block(name))
        .collect::<Result<_>>()?;
    let p: usize = blocks.iter().map(|b| b.columns.ncols()).sum();
    let j: usize = blocks.iter().map(|b| b.labels.len()).sum();
    let mut x = DMatrix::zeros(n, p);
    let mut x_effects = DMatrix::zeros(n, j);
    let mut expansion = DMatrix::zeros(j, p);
    let mut j_labels = Vec::with_capacity(j);
    let (mut col, mut eff) = (0, 0);
    for (name, block) in spec.interest.iter().zip(&blocks) {
        let (bp, bj) = (block.columns.ncols(), block.labels.len());
        x.columns_mut(col, bp).copy_from(&block.columns);
        x_effects.columns_mut(eff, bj).copy_from(&block.effects);
        expansion.view_mut((eff, col), (bj, bp)).copy_from(&block.expansion);
        j_labels.extend(block.labels.iter().cloned());
        coding_map.push(TermCoding {
            term: name.clone(),
            coding: block.coding.clone(),
            columns: bp,
            effects: bj,
        });
        col += bp;
        eff += bj;
    }
    let grouped = blocks.len() == 1 && blocks[0].grouped;

    let q: usize = z_cols.iter().map(|c| c.ncols()).sum();
    let mut z = DMatrix::zeros(n, q);
    let mut at = 0;
    for c in &z_cols {
        z.columns_mut(at, c.ncols()).copy_from(c);
        at += c.ncols();
    }

    let design = DesignPair {
        x,
        z,
        expansion,
        x_effects,
        j_labels,
        coding_map,
        grouped,
    };
    let rank_z = rank_of(&design.z);
    let rank_full = rank_of(&design.combined());
    if rank_full < rank_z + p {
        return Err(Error::ConfoundedDesign {
            full: rank_full,
            expected: rank_z + p,
        });
    }
    Ok(design)
}

/// Pointwise fit of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// `J x K` interest effects (empty for the reduced model).
    pub beta: DMatrix<f64>,
    /// `q x K` nuisance effects.
    pub gamma: DMatrix<f64>,
    /// `n x K` residuals.
    pub residuals: DMatrix<f64>,
    /// Residual sum of squares at each grid point.
    pub sse: Vec<f64>,
    pub model_rank: usize,
}

/// Factored full and reduced models for one design, reusable across responses.
#[derive(Debug, Clone)]
pub struct GlmSolver {
    full: LeastSquares,
    reduced: LeastSquares,
    expansion: DMatrix<f64>,
    p: usize,
}

impl GlmSolver {
    pub fn new(design: &DesignPair) -> Result<Self> {
        if design.z.nrows() != design.x.nrows() || design.x_effects.nrows() != design.x.nrows() {
            return Err(Error::ShapeMismatch("design blocks disagree on row count".into()));
        }
        if design.expansion.ncols() != design.x.ncols() {
            return Err(Error::ShapeMismatch("expansion does not match X".into()));
        }
        Ok(Self {
            full: LeastSquares::new(design.combined())?,
            reduced: LeastSquares::new(design.z.clone())?,
            expansion: design.expansion.clone(),
            p: design.x.ncols(),
        })
    }

    pub fn n(&self) -> usize {
        self.full.nrows()
    }

    pub fn full_rank(&self) -> usize {
        self.full.rank()
    }

    pub fn reduced_rank(&self) -> usize {
        self.reduced.rank()
    }

    pub fn full(&self) -> &LeastSquares {
        &self.full
    }

    pub fn reduced(&self) -> &LeastSquares {
        &self.reduced
    }

    fn check(&self, y: &DMatrix<f64>) -> Result<()> {
        if y.nrows() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "response has {} rows, design has {}",
                y.nrows(),
                self.n()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("response"));
        }
        Ok(())
    }

    /// Interest effects only, `J x K`.
    pub fn beta(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let pinv_x = self.full.pseudo_inverse().rows(0, self.p);
        &self.expansion * (pinv_x * y)
    }

    pub fn fit_full(&self, y: &DMatrix<f64>) -> Result<FitResult> {
        self.check(y)?;
        Ok(self.fit_full_unchecked(y))
    }

    pub(crate) fn fit_full_unchecked(&self, y: &DMatrix<f64>) -> FitResult {
        let (coef, residuals) = self.full.solve(y);
        let q = coef.nrows() - self.p;
        FitResult {
            beta: &self.expansion * coef.rows(0, self.p),
            gamma: coef.rows(self.p, q).into_owned(),
            sse: column_ss(&residuals),
            residuals,
            model_rank: self.full.rank(),
        }
    }

    pub fn fit_reduced(&self, y: &DMatrix<f64>) -> Result<FitResult> {
        self.check(y)?;
        let (gamma, residuals) = self.reduced.solve(y);
        Ok(FitResult {
            beta: DMatrix::zeros(0, y.ncols()),
            gamma,
            sse: column_ss(&residuals),
            residuals,
            model_rank: self.reduced.rank(),
        })
    }
}

/// Least-squares fit of `Y = Xβ + Zγ + ε` at every grid point.
pub fn fit_pointwise(y: &FunctionalSample, design: &DesignPair) -> Result<FitResult> {
    GlmSolver::new(design)?.fit_full(y.values())
}

/// Least-squares fit of the nuisance-only model `Y = Zγ + ε_Z`.
pub fn fit_reduced(y: &FunctionalSample, design: &DesignPair) -> Result<FitResult> {
    GlmSolver::new(design)?.fit_reduced(y.values())
}
