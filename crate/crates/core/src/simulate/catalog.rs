//! Built-in scenarios: six groups of ten functions each.
//!
//! * `t1`/`t4`: 3-level categorical interest `F1`, 2-level categorical nuisance `F2`.
//! * `t2`/`t5`: continuous interest `F1` on `[0, 100]`, 3-level categorical
//!   nuisance `F2` (continuous on `[0, 2]` in model 5).
//! * `t3`/`t6`: interest in the interaction `F1:F2` of a 3-level and a
//!   2-level factor, both main effects as nuisance.
//!
//! Tables `t1`–`t3` use i.i.d. errors, `t4`–`t6` the same settings with
//! Brownian-motion errors.

use std::str::FromStr;

use super::{ErrorModel, FactorDecl, GroupSpec, Param, Scenario};
use crate::error::{Error, Result};
use crate::model::ModelSpec;

const GROUP_SIZE: usize = 10;
const IID_SIGMAS: [f64; 3] = [0.3, 0.5, 0.8];
const BROWNIAN_SIGMAS: [f64; 3] = [3.0, 5.0, 8.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
}

impl TableId {
    pub const ALL: [TableId; 6] = [TableId::T1, TableId::T2, TableId::T3, TableId::T4, TableId::T5, TableId::T6];

    pub fn name(&self) -> &'static str {
        match self {
            TableId::T1 => "t1",
            TableId::T2 => "t2",
            TableId::T3 => "t3",
            TableId::T4 => "t4",
            TableId::T5 => "t5",
            TableId::T6 => "t6",
        }
    }

    pub fn models(&self) -> usize {
        match self {
            TableId::T3 | TableId::T6 => 4,
            _ => 6,
        }
    }

    pub fn brownian(&self) -> bool {
        matches!(self, TableId::T4 | TableId::T5 | TableId::T6)
    }

    pub fn sigmas(&self) -> [f64; 3] {
        if self.brownian() {
            BROWNIAN_SIGMAS
        } else {
            IID_SIGMAS
        }
    }

    fn design(&self) -> Design {
        match self {
            TableId::T1 | TableId::T4 => Design::Categorical,
            TableId::T2 | TableId::T5 => Design::Continuous,
            TableId::T3 | TableId::T6 => Design::Interaction,
        }
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TableId::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownTable(s.to_string()))
    }
}

enum Design {
    Categorical,
    Continuous,
    Interaction,
}

/// Per-group parameter values; `None` means "driven by a covariate".
type Triplet = [Option<f64>; 6];

const ONES: Triplet = [Some(1.0); 6];
const I_012: Triplet = [Some(0.0), Some(1.0), Some(2.0), Some(0.0), Some(1.0), Some(2.0)];
const I_012_111: Triplet = [Some(0.0), Some(1.0), Some(2.0), Some(1.0), Some(1.0), Some(1.0)];
const J_124: Triplet = [Some(1.0), Some(2.0), Some(4.0), Some(1.0), Some(2.0), Some(4.0)];
const J_111_222: Triplet = [Some(1.0), Some(1.0), Some(1.0), Some(2.0), Some(2.0), Some(2.0)];
const K_1_50: Triplet = [Some(1.0), Some(1.0), Some(1.0), Some(50.0), Some(50.0), Some(50.0)];
const DRAWN: Triplet = [None; 6];

/// `(i, j, k, truth)` of every model of a table.
fn rows(design: &Design) -> Vec<(Triplet, Triplet, Triplet, &'static str)> {
    match design {
        Design::Categorical => vec![
            (ONES, ONES, ONES, "F1=0,F2=0"),
            (ONES, ONES, K_1_50, "F1=0,F2!=0"),
            (I_012, ONES, ONES, "F1!=0,F2=0"),
            (I_012, ONES, K_1_50, "F1!=0,F2!=0"),
            (ONES, J_124, ONES, "F1!=0,F2=0"),
            (ONES, J_124, K_1_50, "F1!=0,F2!=0"),
        ],
        Design::Continuous => vec![
            (ONES, ONES, ONES, "F1=0,F2=0"),
            (I_012, ONES, ONES, "F1=0,F2!=0"),
            (ONES, ONES, DRAWN, "F1!=0,F2=0"),
            (I_012, ONES, DRAWN, "F1!=0,F2!=0"),
            (DRAWN, ONES, DRAWN, "F1!=0,F2=0"),
            (ONES, J_124, DRAWN, "F1!=0,F2!=0"),
        ],
        Design::Interaction => vec![
            (I_012, ONES, K_1_50, "I=0"),
            (I_012_111, ONES, K_1_50, "I!=0"),
            (I_012, J_111_222, ONES, "I=0"),
            (I_012_111, J_111_222, ONES, "I!=0"),
        ],
    }
}

/// Non-numeric level names, so written factor tables read back as categorical.
fn labels(n: usize) -> Vec<String> {
    ["A", "B", "C"][..n].iter().map(|l| l.to_string()).collect()
}

fn three_levels(name: &str) -> FactorDecl {
    FactorDecl::Categorical {
        name: name.into(),
        levels: labels(3),
        group_levels: vec![0, 1, 2, 0, 1, 2],
    }
}

fn two_levels(name: &str) -> FactorDecl {
    FactorDecl::Categorical {
        name: name.into(),
        levels: labels(2),
        group_levels: vec![0, 0, 0, 1, 1, 1],
    }
}

fn build(table: TableId, model: usize) -> Result<Scenario> {
    let design = table.design();
    let all = rows(&design);
    let (i, j, k, truth) = all
        .get(model.wrapping_sub(1))
        .copied()
        .ok_or_else(|| Error::UnknownScenario(format!("{}m{model}", table.name())))?;
    let continuous_nuisance = matches!(design, Design::Continuous) && model == 5;
    let (factors, spec, i_cov, k_cov) = match design {
        Design::Categorical => (
            vec![three_levels("F1"), two_levels("F2")],
            ModelSpec::new(&["F1"], &["F2"]),
            None,
            None,
        ),
        Design::Continuous => {
            let nuisance = if continuous_nuisance {
                FactorDecl::Continuous {
                    name: "F2".into(),
                    low: 0.0,
                    high: 2.0,
                }
            } else {
                three_levels("F2")
            };
            (
                vec![
                    FactorDecl::Continuous {
                        name: "F1".into(),
                        low: 0.0,
                        high: 100.0,
                    },
                    nuisance,
                ],
                ModelSpec::new(&["F1"], &["F2"]),
                Some("F2"),
                Some("F1"),
            )
        }
        Design::Interaction => (
            vec![
                three_levels("F1"),
                two_levels("F2"),
                FactorDecl::Interaction {
                    first: "F1".into(),
                    second: "F2".into(),
                },
            ],
            ModelSpec::new(&["F1:F2"], &["F1", "F2"]),
            None,
            None,
        ),
    };
    let param = |v: Option<f64>, cov: Option<&str>| match (v, cov) {
        (Some(v), _) => Ok(Param::Fixed(v)),
        (None, Some(name)) => Ok(Param::covariate(name)),
        (None, None) => Err(Error::InvalidInput("drawn parameter without covariate".into())),
    };
    let groups = (0..6)
        .map(|g| {
            Ok(GroupSpec {
                i: param(i[g], i_cov)?,
                j: param(j[g], None)?,
                k: param(k[g], k_cov)?,
                size: GROUP_SIZE,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sigma = table.sigmas()[0];
    let error = if table.brownian() {
        ErrorModel::Brownian { sigma_at_1: sigma }
    } else {
        ErrorModel::Iid { sigma }
    };
    Ok(Scenario {
        name: format!("{}m{model}", table.name()),
        groups,
        factors,
        model: spec,
        error,
        grid_points: 100,
        truth: truth.into(),
    })
}

/// Built-in scenario by name (`t1m1` ... `t6m4`), at the table's first noise level.
pub fn builtin(name: &str) -> Result<Scenario> {
    let lower = name.to_ascii_lowercase();
    let (table, model) = lower
        .split_once('m')
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
    let table = TableId::from_str(table).map_err(|_| Error::UnknownScenario(name.to_string()))?;
    let model: usize = model.parse().map_err(|_| Error::UnknownScenario(name.to_string()))?;
    build(table, model).map_err(|_| Error::UnknownScenario(name.to_string()))
}

pub fn builtin_names() -> Vec<String> {
    TableId::ALL
        .iter()
        .flat_map(|t| (1..=t.models()).map(move |m| format!("{}m{m}", t.name())))
        .collect()
}

/// Every model of a table at each of its three noise levels, model-major.
pub fn table_scenarios(table: TableId) -> Vec<Scenario> {
    (1..=table.models())
        .flat_map(|m| {
            let sc = build(table, m).expect("catalog rows are complete");
            table.sigmas().map(|s| sc.with_sigma(s))
        })
        .collect()
}
