//! Global extreme rank length (ERL) envelope test.
//!
//! For `I` test vectors of length `L` (row 0 observed):
//!
//! 1. `S_i(k)` is the rank of `T_i(k)` among the `I` values at element `k`
//!    (ties get mid-ranks; see [`TIE_RTOL`]).
//! 2. `R_i(k) = min(S_i(k), I - S_i(k) + 1)` is the two-sided extreme rank.
//! 3. Each vector's `R_i(·)` is sorted ascending and vectors are compared
//!    lexicographically: smaller means more extreme.
//! 4. `p = 1 - #{i : T_1 ≺ T_i} / I`.
//! 5. The `floor(I·α)` most extreme vectors are dropped; the pointwise min and
//!    max of the rest form the envelope.
//!
//! The observed vector exits at `k` when it lies strictly below the lower or
//! strictly above the upper envelope. Off exact ERL ties at the cutoff this
//! makes "some exit" equivalent to `p ≤ α`.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stats::{ElementLabel, TestVectorMatrix};

/// Pointwise one-sided ranks `S` and two-sided extreme ranks `R`, both `I x L`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    pub s: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl RankMatrix {
    pub fn count(&self) -> usize {
        self.s.nrows()
    }
}

/// Values closer than this fraction of the column's largest magnitude are
/// tied, so rounding noise cannot split values that are equal in exact
/// arithmetic (e.g. permutations that only reorder rows within a group).
pub const TIE_RTOL: f64 = 1e-10;

/// Column-wise mid-ranks (1-based) and their two-sided fold.
pub fn rank_columns(values: &DMatrix<f64>) -> RankMatrix {
    let (count, len) = values.shape();
    let mut s = DMatrix::zeros(count, len);
    let mut order: Vec<usize> = (0..count).collect();
    for k in 0..len {
        let col = values.column(k);
        let tol = TIE_RTOL * col.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut start = 0;
        while start < count {
            let first = col[order[start]];
            let mut end = start + 1;
            // ties are measured from the first member, so groups never chain
            while end < count && (col[order[end]] == first || col[order[end]] - first <= tol) {
                end += 1;
            }
            // positions start..end hold ranks start+1..=end
            let mid = (start + 1 + end) as f64 / 2.0;
            for &i in &order[start..end] {
                s[(i, k)] = mid;
            }
            start = end;
        }
    }
    let top = count as f64 + 1.0;
    let r = s.map(|v| v.min(top - v));
    RankMatrix { s, r }
}

pub fn pointwise_ranks(t: &TestVectorMatrix) -> Result<RankMatrix> {
    if t.count() < 2 {
        return Err(Error::InvalidInput(format!(
            "ranking needs at least 2 test vectors, got {}",
            t.count()
        )));
    }
    Ok(rank_columns(&t.values))
}

/// Vectors ordered by extreme rank length.
#[derive(Debug, Clone, PartialEq)]
pub struct ErlOrdering {
    /// Row `i`: `R_i(·)` sorted ascending.
    pub sorted_ranks: Vec<Vec<f64>>,
    /// Vector indices from most to least extreme; ties keep index order.
    pub order_index: Vec<usize>,
    /// ERL rank of each vector (1 = most extreme); tied vectors share the
    /// smallest rank of their group.
    pub measure: Vec<usize>,
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl ErlOrdering {
    pub fn count(&self) -> usize {
        self.sorted_ranks.len()
    }

    /// `Less` when vector `a` is strictly more extreme than `b`.
    pub fn compare(&self, a: usize, b: usize) -> Ordering {
        lex(&self.sorted_ranks[a], &self.sorted_ranks[b])
    }

    /// The extreme rank `min_k R_i(k)`.
    pub fn extreme_rank(&self, i: usize) -> f64 {
        self.sorted_ranks[i].first().copied().unwrap_or(f64::INFINITY)
    }
}

pub fn erl_order(ranks: &RankMatrix) -> ErlOrdering {
    let sorted_ranks: Vec<Vec<f64>> = ranks
        .r
        .row_iter()
        .map(|row| {
            let mut v: Vec<f64> = row.iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let mut order_index: Vec<usize> = (0..sorted_ranks.len()).collect();
    order_index.sort_by(|&a, &b| lex(&sorted_ranks[a], &sorted_ranks[b]));
    let mut measure = vec![0; sorted_ranks.len()];
    for (pos, &i) in order_index.iter().enumerate() {
        measure[i] = match pos {
            0 => 1,
            _ => {
                let prev = order_index[pos - 1];
                if lex(&sorted_ranks[prev], &sorted_ranks[i]).is_eq() {
                    measure[prev]
                } else {
                    pos + 1
                }
            }
        };
    }
    ErlOrdering {
        sorted_ranks,
        order_index,
        measure,
    }
}

/// `p = 1 - #{i : T_1 ≺ T_i} / I`; vectors tied with `T_1` do not count as
/// less extreme.
pub fn erl_p_value(ord: &ErlOrdering, count: usize) -> Result<f64> {
    if ord.count() != count || count == 0 {
        return Err(Error::ShapeMismatch(format!(
            "ordering covers {} vectors, expected {count}",
            ord.count()
        )));
    }
    let less_extreme = (0..count).filter(|&i| ord.compare(0, i).is_lt()).count();
    Ok((count - less_extreme) as f64 / count as f64)
}

/// `floor(I·alpha)`, the number of vectors excluded from the envelope.
pub fn excluded_count(count: usize, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    // Guard against products such as 100 * 0.07 landing just below an integer.
    let removed = (count as f64 * alpha + 1e-9).floor() as usize;
    if removed == 0 {
        return Err(Error::AlphaTooSmall { alpha, count });
    }
    if removed >= count {
        return Err(Error::InvalidInput(format!(
            "alpha = {alpha} would exclude all {count} vectors"
        )));
    }
    Ok(removed)
}

/// Pointwise min and max over the vectors left after dropping the
/// `floor(I·alpha)` most extreme ones.
pub fn build_envelope(t: &TestVectorMatrix, ord: &ErlOrdering, alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if ord.count() != t.count() {
        return Err(Error::ShapeMismatch("ordering does not match test vectors".into()));
    }
    let removed = excluded_count(t.count(), alpha)?;
    let keep = &ord.order_index[removed..];
    let mut low = vec![f64::INFINITY; t.len()];
    let mut upp = vec![f64::NEG_INFINITY; t.len()];
    for &i in keep {
        for (e, &v) in t.values.row(i).iter().enumerate() {
            low[e] = low[e].min(v);
            upp[e] = upp[e].max(v);
        }
    }
    Ok((low, upp))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitDirection {
    Below,
    Above,
}

/// An element where the observed vector leaves the envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Exit {
    pub element: usize,
    pub label: ElementLabel,
    pub direction: ExitDirection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub p_value: f64,
    pub observed: Vec<f64>,
    pub low: Vec<f64>,
    pub upp: Vec<f64>,
    pub rejected: bool,
    pub exits: Vec<Exit>,
    pub alpha: f64,
    /// Number of test vectors `I`.
    pub count: usize,
    /// ERL rank of the observed vector.
    pub observed_measure: usize,
}

/// Runs the full test on `t` (row 0 observed) at level `alpha`.
pub fn global_envelope_test(t: &TestVectorMatrix, alpha: f64) -> Result<EnvelopeResult> {
    let ranks = pointwise_ranks(t)?;
    let ord = erl_order(&ranks);
    let p_value = erl_p_value(&ord, t.count())?;
    let (low, upp) = build_envelope(t, &ord, alpha)?;
    let observed = t.observed();
    let exits: Vec<Exit> = observed
        .iter()
        .enumerate()
        .filter_map(|(e, &v)| {
            let direction = if v < low[e] {
                ExitDirection::Below
            } else if v > upp[e] {
                ExitDirection::Above
            } else {
                return None;
            };
            Some(Exit {
                element: e,
                label: t.labels[e].clone(),
                direction,
            })
        })
        .collect();
    Ok(EnvelopeResult {
        p_value,
        rejected: !exits.is_empty(),
        observed,
        low,
        upp,
        exits,
        alpha,
        count: t.count(),
        observed_measure: ord.measure[0],
    })
}
