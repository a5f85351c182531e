//! The `test`, `reproduce` and `simulate` commands behind the `fglm` binary.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::envelope::{global_envelope_test, ExitDirection};
use crate::error::{Error, Result};
use crate::io::{load_factors_with, load_functions, save_factors, save_functions};
use crate::model::{build_design, Factor, ModelSpec};
use crate::permute::{exhaustive_permutations, generate_permutations, FreedmanLane};
use crate::plot::{panels_from_envelope, render_svg, Panel};
use crate::simulate::{builtin, run_power_study, simulate_dataset, table_scenarios, Method, PowerTable, Scenario, TableId};
use crate::stats::{coefficient_vectors, f_max_test, pairwise_vectors};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "FGLM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Coeff,
    Pairwise,
    Fmax,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Coeff => "coeff",
            Statistic::Pairwise => "pairwise",
            Statistic::Fmax => "fmax",
        }
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coeff" => Ok(Statistic::Coeff),
            "pairwise" => Ok(Statistic::Pairwise),
            "fmax" | "f-max" => Ok(Statistic::Fmax),
            other => Err(Error::InvalidInput(format!(
                "unknown statistic `{other}` (expected coeff, pairwise or fmax)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_path: PathBuf,
    pub factor_path: PathBuf,
    pub interest: Vec<String>,
    pub nuisance: Vec<String>,
    /// Pairs `(A, B)` declaring the interaction factor `A:B`.
    pub interactions: Vec<(String, String)>,
    /// Factor columns read as categorical even when their labels are numeric.
    pub categorical: Vec<String>,
    pub include_intercept: bool,
    pub statistic: Statistic,
    pub nperm: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Enumerate all `n!` permutations instead of sampling `nperm`.
    pub exhaustive: bool,
    pub results_path: Option<PathBuf>,
    pub envelope_path: Option<PathBuf>,
    pub svg_path: Option<PathBuf>,
    /// Plot only the panels in which the observed curve leaves the envelope.
    pub only_significant: bool,
}

impl RunConfig {
    pub fn new(data_path: impl Into<PathBuf>, factor_path: impl Into<PathBuf>, interest: &[&str]) -> Self {
        Self {
            data_path: data_path.into(),
            factor_path: factor_path.into(),
            interest: interest.iter().map(|s| s.to_string()).collect(),
            nuisance: Vec::new(),
            interactions: Vec::new(),
            categorical: Vec::new(),
            include_intercept: true,
            statistic: Statistic::Coeff,
            nperm: 1000,
            alpha: 0.05,
            seed: 0,
            exhaustive: false,
            results_path: None,
            envelope_path: None,
            svg_path: None,
            only_significant: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.exhaustive && self.nperm < 20 {
            return Err(Error::InvalidInput(format!(
                "need at least 20 permutations, got {}",
                self.nperm
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.interest.is_empty() {
            return Err(Error::InvalidInput("no factor of interest given".into()));
        }
        Ok(())
    }
}

/// Parses an `A:B` interaction declaration.
pub fn parse_interaction(text: &str) -> Result<(String, String)> {
    match text.split_once(':') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() && !b.contains(':') => Ok((a.to_string(), b.to_string())),
        _ => Err(Error::InvalidInput(format!("interaction `{text}` must have the form A:B"))),
    }
}

/// One row of the envelope CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeRow {
    pub label: String,
    pub t: f64,
    pub low: f64,
    pub observed: f64,
    pub upp: f64,
    pub exit: Option<ExitDirection>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub statistic: Statistic,
    pub p_value: f64,
    pub rejected: bool,
    /// Number of permutations `I`, identity included.
    pub count: usize,
    pub alpha: f64,
    pub rows: Vec<EnvelopeRow>,
    pub panels: Vec<Panel>,
}

impl TestOutcome {
    pub fn exits(&self) -> impl Iterator<Item = &EnvelopeRow> {
        self.rows.iter().filter(|r| r.exit.is_some())
    }

    /// `"<1/I"` when `p` sits at its smallest attainable value, else `p` itself.
    pub fn p_report(&self) -> String {
        let floor = 1.0 / self.count as f64;
        if self.p_value <= floor {
            format!("<{floor}")
        } else {
            self.p_value.to_string()
        }
    }
}

fn load_inputs(cfg: &RunConfig) -> Result<(crate::model::FunctionalSample, Vec<Factor>)> {
    let sample = load_functions(&cfg.data_path)?;
    let mut factors = load_factors_with(&cfg.factor_path, sample.ids(), &cfg.categorical)?;
    for (a, b) in &cfg.interactions {
        factors.push(Factor::interaction(a.clone(), b.clone()));
    }
    Ok((sample, factors))
}

/// Runs a test and returns its outcome without writing any file.
pub fn run_test(cfg: &RunConfig) -> Result<TestOutcome> {
    cfg.validate()?;
    let (sample, factors) = load_inputs(cfg)?;
    let spec = ModelSpec {
        interest: cfg.interest.clone(),
        nuisance: cfg.nuisance.clone(),
        include_intercept: cfg.include_intercept,
    };
    let design = build_design(&spec, &factors, sample.n())?;
    if cfg.statistic == Statistic::Pairwise && !design.supports_pairwise() {
        return Err(Error::NotApplicable(
            "pairwise differences need categorical factors of interest".into(),
        ));
    }
    let perms = if cfg.exhaustive {
        exhaustive_permutations(sample.n())?
    } else {
        generate_permutations(sample.n(), cfg.nperm, cfg.seed)?
    };
    match cfg.statistic {
        Statistic::Coeff | Statistic::Pairwise => {
            let fits = FreedmanLane::new(&sample, &design)?.stats_batch(&perms, false)?;
            let betas = fits.iter().map(|s| &s.beta);
            let tv = if cfg.statistic == Statistic::Coeff {
                coefficient_vectors(betas, &design.j_labels, sample.grid())?
            } else {
                pairwise_vectors(betas, &design.j_labels, sample.grid())?
            };
            let res = global_envelope_test(&tv, cfg.alpha)?;
            let mut exit = vec![None; tv.len()];
            for e in &res.exits {
                exit[e.element] = Some(e.direction);
            }
            let rows = tv
                .labels
                .iter()
                .enumerate()
                .map(|(e, l)| EnvelopeRow {
                    label: l.panel_label.clone(),
                    t: l.t,
                    low: res.low[e],
                    observed: res.observed[e],
                    upp: res.upp[e],
                    exit: exit[e],
                })
                .collect();
            Ok(TestOutcome {
                statistic: cfg.statistic,
                p_value: res.p_value,
                rejected: res.rejected,
                count: res.count,
                alpha: cfg.alpha,
                rows,
                panels: panels_from_envelope(&res, &tv.labels),
            })
        }
        Statistic::Fmax => {
            let res = f_max_test(&sample, &design, &perms)?;
            let crit = res.critical_value(cfg.alpha)?;
            let rows: Vec<EnvelopeRow> = sample
                .grid()
                .iter()
                .zip(&res.observed_f)
                .map(|(&t, &f)| EnvelopeRow {
                    label: "F".into(),
                    t,
                    low: 0.0,
                    observed: f,
                    upp: crit,
                    exit: (f > crit).then_some(ExitDirection::Above),
                })
                .collect();
            let panel = Panel {
                label: "F".into(),
                t: sample.grid().to_vec(),
                low: vec![0.0; rows.len()],
                observed: res.observed_f.clone(),
                upp: vec![crit; rows.len()],
                exit: rows.iter().map(|r| r.exit.is_some()).collect(),
            };
            Ok(TestOutcome {
                statistic: cfg.statistic,
                p_value: res.p_value,
                rejected: res.p_value <= cfg.alpha,
                count: res.max_distribution.len(),
                alpha: cfg.alpha,
                rows,
                panels: vec![panel],
            })
        }
    }
}

fn direction_name(d: ExitDirection) -> &'static str {
    match d {
        ExitDirection::Below => "below",
        ExitDirection::Above => "above",
    }
}

/// Single-row results table; exits are listed as `label@t:direction`, separated by `;`.
pub fn write_results<W: Write>(outcome: &TestOutcome, seed: u64, output: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(output);
    wtr.write_record([
        "statistic", "nperm", "alpha", "seed", "p_value", "p_report", "rejected", "n_exits", "exits",
    ])?;
    let exits: Vec<String> = outcome
        .exits()
        .map(|r| format!("{}@{}:{}", r.label, r.t, direction_name(r.exit.expect("filtered"))))
        .collect();
    wtr.write_record([
        outcome.statistic.name().to_string(),
        outcome.count.to_string(),
        outcome.alpha.to_string(),
        seed.to_string(),
        outcome.p_value.to_string(),
        outcome.p_report(),
        outcome.rejected.to_string(),
        exits.len().to_string(),
        exits.join(";"),
    ])?;
    wtr.flush()?;
    Ok(())
}

pub fn write_envelope<W: Write>(outcome: &TestOutcome, output: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(output);
    wtr.write_record(["label_j", "t", "low", "observed", "upp", "exit_flag"])?;
    for r in &outcome.rows {
        wtr.write_record([
            r.label.clone(),
            r.t.to_string(),
            r.low.to_string(),
            r.observed.to_string(),
            r.upp.to_string(),
            u8::from(r.exit.is_some()).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn svg_for(outcome: &TestOutcome, only_significant: bool) -> String {
    let panels: Vec<Panel> = outcome
        .panels
        .iter()
        .filter(|p| !only_significant || p.has_exits())
        .cloned()
        .collect();
    let title = format!(
        "{}: p = {} (I = {}), {:.0}% global envelope",
        outcome.statistic.name(),
        outcome.p_report(),
        outcome.count,
        100.0 * (1.0 - outcome.alpha)
    );
    render_svg(&panels, &title)
}

/// Runs a test and writes every requested artifact.
pub fn cmd_test(cfg: &RunConfig) -> Result<TestOutcome> {
    let outcome = run_test(cfg)?;
    if let Some(path) = &cfg.results_path {
        write_results(&outcome, cfg.seed, File::create(path)?)?;
    }
    if let Some(path) = &cfg.envelope_path {
        write_envelope(&outcome, File::create(path)?)?;
    }
    if let Some(path) = &cfg.svg_path {
        std::fs::write(path, svg_for(&outcome, cfg.only_significant))?;
    }
    Ok(outcome)
}

/// Long-format power table; inapplicable cells hold `NA`.
pub fn write_power_table<W: Write>(table_id: &str, table: &PowerTable, output: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(output);
    wtr.write_record([
        "table", "scenario", "truth", "sigma", "method", "estimate", "rejections", "reps", "nperm", "alpha", "seed",
    ])?;
    for c in &table.cells {
        let (estimate, rejections) = match c.estimate {
            Some(e) => (e.to_string(), c.rejections.to_string()),
            None => ("NA".to_string(), "NA".to_string()),
        };
        wtr.write_record([
            table_id.to_string(),
            c.scenario.clone(),
            c.truth.clone(),
            c.sigma.to_string(),
            c.method.name().to_string(),
            estimate,
            rejections,
            table.reps.to_string(),
            table.nperm.to_string(),
            table.alpha.to_string(),
            table.seed.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Estimates every cell of a power table and writes it to `out`.
pub fn cmd_reproduce(table_id: &str, reps: usize, nperm: usize, alpha: f64, seed: u64, out: &Path) -> Result<PowerTable> {
    let table = TableId::from_str(table_id)?;
    let result = run_power_study(&table_scenarios(table), &Method::ALL, reps, nperm, alpha, seed)?;
    write_power_table(table.name(), &result, File::create(out)?)?;
    Ok(result)
}

/// A built-in scenario name, or the path of a JSON scenario file.
pub fn resolve_scenario(name_or_path: &str) -> Result<Scenario> {
    let path = Path::new(name_or_path);
    if path.is_file() {
        return Scenario::from_json(&std::fs::read_to_string(path)?);
    }
    builtin(name_or_path)
}

/// Draws one dataset and writes the function and factor CSVs.
pub fn cmd_simulate(
    scenario: &str,
    sigma: Option<f64>,
    seed: u64,
    functions_out: &Path,
    factors_out: &Path,
) -> Result<Scenario> {
    let mut sc = resolve_scenario(scenario)?;
    if let Some(s) = sigma {
        sc = sc.with_sigma(s);
    }
    let (sample, factors) = simulate_dataset(&sc, seed)?;
    save_functions(&sample, functions_out)?;
    save_factors(&factors, sample.ids(), factors_out)?;
    Ok(sc)
}

/// Worker-thread count requested through [`THREADS_ENV`], if any.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        _ => Ok(None),
    }
}
