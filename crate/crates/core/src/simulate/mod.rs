//! Synthetic functional data and Monte-Carlo power studies.
//!
//! Every simulated function is
//!
//! ```text
//! y(t) = 3(5+2i) t (1-t)^(5+2i) + max(0, 64(1-t)(t-0.75))^j + t(1-t) k/100 + e(t)
//! ```
//!
//! on `K` equidistant points of `[0, 1]` (endpoints included), where the
//! group of the function fixes `i`, `j`, `k` or ties them to a continuous
//! covariate drawn uniformly per function.

pub mod catalog;

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::{erl_order, erl_p_value, rank_columns};
use crate::error::{Error, Result};
use crate::model::{build_design, Factor, FunctionalSample, ModelSpec};
use crate::permute::{generate_permutations, FreedmanLane};
use crate::stats::{coefficient_vectors, f_degrees_of_freedom, f_max_from_stats, pairwise_vectors};

pub use catalog::{builtin, builtin_names, table_scenarios, TableId};

/// Three-summand model function; `t` in `[0, 1]`.
pub fn model_function(i: f64, j: f64, k: f64, t: f64) -> f64 {
    let a = 5.0 + 2.0 * i;
    let first = 3.0 * a * t * (1.0 - t).powf(a);
    let second = (64.0 * (1.0 - t) * (t - 0.75)).max(0.0).powf(j);
    let third = t * (1.0 - t) * k / 100.0;
    first + second + third
}

/// `K` equidistant points `t_k = k/(K-1)`, `k = 0..K`.
pub fn unit_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| k as f64 / (points - 1) as f64).collect()
}

/// `K` independent `N(0, sigma²)` draws.
pub fn gen_iid_error<R: Rng + ?Sized>(sigma: f64, points: usize, rng: &mut R) -> Vec<f64> {
    (0..points)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Discrete Brownian motion: cumulative sum of `K` Gaussian increments with
/// standard deviation `sigma_at_1 / √K`, so the last element has standard
/// deviation `sigma_at_1`.
pub fn gen_brownian_error<R: Rng + ?Sized>(sigma_at_1: f64, points: usize, rng: &mut R) -> Vec<f64> {
    let step = sigma_at_1 / (points as f64).sqrt();
    let mut level = 0.0;
    (0..points)
        .map(|_| {
            level += step * rng.sample::<f64, _>(StandardNormal);
            level
        })
        .collect()
}

/// Noise added to each function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ErrorModel {
    Iid { sigma: f64 },
    Brownian { sigma_at_1: f64 },
}

impl ErrorModel {
    pub fn sigma(&self) -> f64 {
        match *self {
            ErrorModel::Iid { sigma } => sigma,
            ErrorModel::Brownian { sigma_at_1 } => sigma_at_1,
        }
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        match self {
            ErrorModel::Iid { .. } => ErrorModel::Iid { sigma },
            ErrorModel::Brownian { .. } => ErrorModel::Brownian { sigma_at_1: sigma },
        }
    }

    fn draw<R: Rng + ?Sized>(&self, points: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            ErrorModel::Iid { sigma } => gen_iid_error(sigma, points, rng),
            ErrorModel::Brownian { sigma_at_1 } => gen_brownian_error(sigma_at_1, points, rng),
        }
    }
}

/// A model-function parameter: a constant or the value of a continuous factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Fixed(f64),
    Covariate { covariate: String },
}

impl Param {
    pub fn covariate(name: &str) -> Self {
        Param::Covariate {
            covariate: name.to_string(),
        }
    }
}

/// One group of functions sharing the same parameter triplet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub i: Param,
    pub j: Param,
    pub k: Param,
    pub size: usize,
}

/// A factor of the simulated design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FactorDecl {
    /// Level of each group (`group_levels[g]` indexes `levels`).
    Categorical {
        name: String,
        levels: Vec<String>,
        group_levels: Vec<usize>,
    },
    /// Drawn uniformly from `[low, high]` for every function.
    Continuous { name: String, low: f64, high: f64 },
    Interaction { first: String, second: String },
}

impl FactorDecl {
    pub fn name(&self) -> String {
        match self {
            FactorDecl::Categorical { name, .. } | FactorDecl::Continuous { name, .. } => name.clone(),
            FactorDecl::Interaction { first, second } => format!("{first}:{second}"),
        }
    }
}

fn default_points() -> usize {
    100
}

/// A complete simulation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub groups: Vec<GroupSpec>,
    pub factors: Vec<FactorDecl>,
    pub model: ModelSpec,
    pub error: ErrorModel,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    /// Which effects are present, e.g. `F1!=0,F2=0`.
    #[serde(default)]
    pub truth: String,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn n(&self) -> usize {
        self.groups.iter().map(|g| g.size).sum()
    }

    pub fn sigma(&self) -> f64 {
        self.error.sigma()
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self {
            error: self.error.with_sigma(sigma),
            ..self.clone()
        }
    }

    fn continuous(&self, name: &str) -> Option<(f64, f64)> {
        self.factors.iter().find_map(|f| match f {
            FactorDecl::Continuous { name: n, low, high } if n == name => Some((*low, *high)),
            _ => None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("scenario `{}`: {msg}", self.name)));
        if self.groups.is_empty() || self.groups.iter().any(|g| g.size == 0) {
            return bad("every group needs at least one function".into());
        }
        if self.grid_points < 2 {
            return bad("grid needs at least 2 points".into());
        }
        let sigma = self.error.sigma();
        if !(sigma.is_finite() && sigma >= 0.0) {
            return bad(format!("error standard deviation must be >= 0, got {sigma}"));
        }
        for f in &self.factors {
            match f {
                FactorDecl::Categorical { levels, group_levels, name } => {
                    if group_levels.len() != self.groups.len() || group_levels.iter().any(|&l| l >= levels.len()) {
                        return bad(format!("factor `{name}` needs one valid level per group"));
                    }
                }
                FactorDecl::Continuous { name, low, high } => {
                    if !(low.is_finite() && high.is_finite() && low < high) {
                        return bad(format!("factor `{name}` needs low < high"));
                    }
                }
                FactorDecl::Interaction { .. } => {}
            }
        }
        for g in &self.groups {
            for (label, param) in [("i", &g.i), ("j", &g.j), ("k", &g.k)] {
                let range = match param {
                    Param::Fixed(v) if v.is_finite() => (*v, *v),
                    Param::Fixed(_) => return bad(format!("parameter {label} must be finite")),
                    Param::Covariate { covariate } => match self.continuous(covariate) {
                        Some(r) => r,
                        None => return bad(format!("parameter {label} refers to unknown covariate `{covariate}`")),
                    },
                };
                if label == "j" && range.0 < 1.0 {
                    return bad("parameter j must be >= 1".into());
                }
            }
        }
        Ok(())
    }
}

/// Draws one dataset: the functions and the factor table of the scenario.
pub fn simulate_dataset(sc: &Scenario, seed: u64) -> Result<(FunctionalSample, Vec<Factor>)> {
    sc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sc.n();
    let grid = unit_grid(sc.grid_points);
    let covariates: Vec<(&str, f64, f64)> = sc
        .factors
        .iter()
        .filter_map(|f| match f {
            FactorDecl::Continuous { name, low, high } => Some((name.as_str(), *low, *high)),
            _ => None,
        })
        .collect();
    let mut covariate_values = vec![Vec::with_capacity(n); covariates.len()];
    let mut group_of = Vec::with_capacity(n);
    let mut values = DMatrix::zeros(n, grid.len());
    let mut row = 0;
    for (g, group) in sc.groups.iter().enumerate() {
        for _ in 0..group.size {
            let drawn: Vec<f64> = covariates
                .iter()
                .map(|&(_, low, high)| rng.random_range(low..=high))
                .collect();
            let resolve = |p: &Param| match p {
                Param::Fixed(v) => *v,
                Param::Covariate { covariate } => {
                    let idx = covariates.iter().position(|c| c.0 == covariate).unwrap();
                    drawn[idx]
                }
            };
            let (i, j, k) = (resolve(&group.i), resolve(&group.j), resolve(&group.k));
            let noise = sc.error.draw(grid.len(), &mut rng);
            for (c, &t) in grid.iter().enumerate() {
                values[(row, c)] = model_function(i, j, k, t) + noise[c];
            }
            for (store, v) in covariate_values.iter_mut().zip(&drawn) {
                store.push(*v);
            }
            group_of.push(g);
            row += 1;
        }
    }
    let ids = (1..=n).map(|i| format!("f{i}")).collect();
    let sample = FunctionalSample::new(grid, values, ids)?;

    let mut factors = Vec::with_capacity(sc.factors.len());
    let mut cov = covariate_values.into_iter();
    for decl in &sc.factors {
        factors.push(match decl {
            FactorDecl::Categorical {
                name,
                levels,
                group_levels,
            } => Factor::categorical(
                name.clone(),
                levels.clone(),
                group_of.iter().map(|&g| group_levels[g]).collect(),
            )?,
            FactorDecl::Continuous { name, .. } => Factor::continuous(name.clone(), cov.next().unwrap()),
            FactorDecl::Interaction { first, second } => Factor::interaction(first.clone(), second.clone()),
        });
    }
    Ok((sample, factors))
}

/// Tests compared in a power study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Envelope test on the coefficient vectors.
    #[serde(rename = "GETP")]
    Getp,
    /// Envelope test on the pairwise differences of group effects.
    #[serde(rename = "GETDP")]
    Getdp,
    #[serde(rename = "F-max")]
    Fmax,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Getp, Method::Getdp, Method::Fmax];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Getp => "GETP",
            Method::Getdp => "GETDP",
            Method::Fmax => "F-max",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "getp" => Ok(Method::Getp),
            "getdp" => Ok(Method::Getdp),
            "fmax" | "f-max" => Ok(Method::Fmax),
            other => Err(Error::InvalidInput(format!("unknown method `{other}`"))),
        }
    }
}

/// p-values of one replication; `None` where a method does not apply.
pub fn replicate_p_values(
    sc: &Scenario,
    methods: &[Method],
    nperm: usize,
    data_seed: u64,
    perm_seed: u64,
) -> Result<Vec<Option<f64>>> {
    let (sample, factors) = simulate_dataset(sc, data_seed)?;
    let design = build_design(&sc.model, &factors, sample.n())?;
    let fl = FreedmanLane::new(&sample, &design)?;
    let perms = generate_permutations(sample.n(), nperm, perm_seed)?;
    let with_sse = methods.contains(&Method::Fmax);
    let stats = fl.stats_batch(&perms, with_sse)?;
    let betas = || stats.iter().map(|s| &s.beta);
    let erl_p = |values: &DMatrix<f64>| -> Result<f64> {
        let ord = erl_order(&rank_columns(values));
        erl_p_value(&ord, values.nrows())
    };
    methods
        .iter()
        .map(|m| match m {
            Method::Getp => {
                let tv = coefficient_vectors(betas(), &design.j_labels, sample.grid())?;
                erl_p(&tv.values).map(Some)
            }
            Method::Getdp => {
                if !design.supports_pairwise() {
                    return Ok(None);
                }
                let tv = pairwise_vectors(betas(), &design.j_labels, sample.grid())?;
                erl_p(&tv.values).map(Some)
            }
            Method::Fmax => {
                let solver = fl.solver();
                let (df1, df2) = f_degrees_of_freedom(solver.full_rank(), solver.reduced_rank(), sample.n())?;
                Ok(Some(f_max_from_stats(&stats, df1, df2)?.p_value))
            }
        })
        .collect()
}

/// Seeds for the data and the permutations of one replication.
pub fn replication_seeds(master: u64, scenario_index: usize, rep: usize) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((scenario_index as u64) << 32) | rep as u64);
    (rng.next_u64(), rng.next_u64())
}

/// Estimated rejection probability of one method on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCell {
    pub scenario: String,
    pub truth: String,
    pub method: Method,
    pub sigma: f64,
    pub rejections: usize,
    /// `None` when the method does not apply to the scenario.
    pub estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerTable {
    pub cells: Vec<PowerCell>,
    pub reps: usize,
    pub nperm: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl PowerTable {
    pub fn cell(&self, scenario: &str, method: Method, sigma: f64) -> Option<&PowerCell> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.method == method && c.sigma == sigma)
    }
}

/// Rejection rates (`p <= alpha`) over `reps` replications of every scenario.
///
/// Replications run in parallel; each draws its data and permutations from
/// its own stream, so the table depends only on the arguments.
pub fn run_power_study(
    scenarios: &[Scenario],
    methods: &[Method],
    reps: usize,
    nperm: usize,
    alpha: f64,
    seed: u64,
) -> Result<PowerTable> {
    if reps < 1 {
        return Err(Error::InvalidInput("need at least one replication".into()));
    }
    if nperm < 20 {
        return Err(Error::InvalidInput(format!("need at least 20 permutations, got {nperm}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut cells = Vec::with_capacity(scenarios.len() * methods.len());
    for (s, sc) in scenarios.iter().enumerate() {
        sc.validate()?;
        let outcomes = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let (data_seed, perm_seed) = replication_seeds(seed, s, rep);
                replicate_p_values(sc, methods, nperm, data_seed, perm_seed)
            })
            .collect::<Result<Vec<_>>>()?;
        for (m, &method) in methods.iter().enumerate() {
            let applicable = outcomes.iter().all(|o| o[m].is_some());
            let rejections = outcomes
                .iter()
                .filter(|o| o[m].is_some_and(|p| p <= alpha))
                .count();
            cells.push(PowerCell {
                scenario: sc.name.clone(),
                truth: sc.truth.clone(),
                method,
                sigma: sc.sigma(),
                rejections,
                estimate: applicable.then(|| rejections as f64 / reps as f64),
            });
        }
    }
    Ok(PowerTable {
        cells,
        reps,
        nperm,
        alpha,
        seed,
    })
}
