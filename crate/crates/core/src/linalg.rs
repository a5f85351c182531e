//! Dense least-squares kernel shared by every pointwise fit.
//!
//! The design does not depend on the grid position, so the factorization is
//! computed once and applied to all `K` response columns at the same time.

use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
const RANK_RTOL: f64 = 1e-10;

/// A factored design matrix `M` (n x m).
///
/// Coefficients are the minimum-norm least-squares solution `M⁺ Y`, which is
/// the ordinary solution whenever `M` has full column rank.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    design: DMatrix<f64>,
    pinv: DMatrix<f64>,
    rank: usize,
}

impl LeastSquares {
    pub fn new(design: DMatrix<f64>) -> Result<Self> {
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("design matrix"));
        }
        let n = design.nrows();
        if design.ncols() == 0 {
            return Ok(Self {
                pinv: DMatrix::zeros(0, n),
                design,
                rank: 0,
            });
        }
        let svd = SVD::new(design.clone(), true, true);
        let smax = svd.singular_values.max();
        let tol = smax * RANK_RTOL;
        let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
        let u = svd.u.expect("left singular vectors requested");
        let v_t = svd.v_t.expect("right singular vectors requested");
        let mut pinv = DMatrix::zeros(design.ncols(), n);
        for (idx, &s) in svd.singular_values.iter().enumerate() {
            if s <= tol {
                continue;
            }
            let v_col = v_t.row(idx).transpose();
            let u_col = u.column(idx);
            pinv.ger(1.0 / s, &v_col, &u_col, 1.0);
        }
        Ok(Self { design, pinv, rank })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn nrows(&self) -> usize {
        self.design.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.design.ncols()
    }

    /// Rows of the pseudo-inverse; row `c` maps responses to coefficient `c`.
    pub fn pseudo_inverse(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    /// Coefficients for every column of `y` (m x K).
    pub fn coefficients(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        &self.pinv * y
    }

    /// Coefficients and residuals for every column of `y`.
    pub fn solve(&self, y: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let coef = self.coefficients(y);
        let residuals = if self.ncols() == 0 {
            y.clone()
        } else {
            y - &self.design * &coef
        };
        (coef, residuals)
    }
}

/// Column sums of squares.
pub fn column_ss(m: &DMatrix<f64>) -> Vec<f64> {
    m.column_iter().map(|c| c.norm_squared()).collect()
}

/// Numerical rank, with the same tolerance as [`LeastSquares`].
pub fn rank_of(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let svd = SVD::new(m.clone(), false, false);
    let tol = svd.singular_values.max() * RANK_RTOL;
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}
