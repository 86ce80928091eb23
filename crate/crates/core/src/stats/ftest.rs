use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::regression::RegressionFit;
use crate::error::{Error, Result};

/// RSS values below this count as an exact fit.
pub const ZERO_RSS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FTestResult {
    /// May be `+inf` when the full model fits exactly.
    pub statistic: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
    pub reject_h0: bool,
    pub alpha: f64,
}

/// `((rss_reduced - rss_full) / 1) / (rss_full / df2)`, with the exact-fit
/// conventions: a perfect full model gives `+inf`, two perfect models give 0.
pub fn f_statistic(rss_reduced: f64, rss_full: f64, df2: usize) -> f64 {
    if rss_full < ZERO_RSS {
        return if rss_reduced < ZERO_RSS { 0.0 } else { f64::INFINITY };
    }
    // response-scale RSS of non-gaussian fits need not decrease
    let gain = (rss_reduced - rss_full).max(0.0);
    gain / (rss_full / df2 as f64)
}

/// Upper tail of the F(1, df2) distribution.
pub fn f_sf(statistic: f64, df2: usize) -> f64 {
    if statistic.is_infinite() {
        return 0.0;
    }
    if statistic <= 0.0 {
        return 1.0;
    }
    let d2 = df2 as f64;
    // P(F > s) = I_{d2/(d2+s)}(d2/2, 1/2)
    beta_reg(d2 / 2.0, 0.5, d2 / (d2 + statistic))
}

/// Single-restriction F-test from raw residual sums of squares over `r`
/// observations, the full model having `full_params` coefficients.
pub fn f_test_rss(rss_reduced: f64, rss_full: f64, r: usize, full_params: usize, alpha: f64) -> Result<FTestResult> {
    if r <= full_params {
        return Err(Error::DegreesOfFreedom(r));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let df2 = r - full_params;
    let statistic = f_statistic(rss_reduced, rss_full, df2);
    let p_value = f_sf(statistic, df2);
    Ok(FTestResult {
        statistic,
        df1: 1,
        df2,
        p_value,
        reject_h0: statistic.is_infinite() || p_value < alpha,
        alpha,
    })
}

/// Nested comparison of a reduced fit against a full fit with one extra parameter.
pub fn f_test_nested(reduced: &RegressionFit, full: &RegressionFit, alpha: f64) -> Result<FTestResult> {
    if reduced.n_obs != full.n_obs {
        return Err(Error::DimensionMismatch {
            expected: reduced.n_obs,
            found: full.n_obs,
        });
    }
    if full.n_params != reduced.n_params + 1 {
        return Err(Error::DimensionMismatch {
            expected: reduced.n_params + 1,
            found: full.n_params,
        });
    }
    f_test_rss(reduced.rss, full.rss, full.n_obs, full.n_params, alpha)
}
