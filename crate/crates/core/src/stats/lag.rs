//! VAR lag order selection by AIC.

use nalgebra::{DMatrix, DVector};

use super::linalg::solve_spd;
use crate::error::{Error, Result};
use crate::panel::TimeSeriesPanel;

/// AIC of a VAR(`d`) with intercepts, fitted by per-equation least squares on
/// the rows `start..T` so that every candidate order sees the same sample.
pub fn var_aic(panel: &TimeSeriesPanel, d: usize, start: usize) -> Result<f64> {
    let p = panel.n_vars();
    let t_len = panel.len();
    if d == 0 || d > start || start >= t_len {
        return Err(Error::LagTooLarge { lag: d, len: t_len });
    }
    let rows = t_len - start;
    let k = 1 + p * d;
    let cols = panel.columns();
    let z = DMatrix::from_fn(rows, k, |i, c| {
        if c == 0 {
            1.0
        } else {
            let (j, lag) = ((c - 1) / d, (c - 1) % d + 1);
            cols[j][start + i - lag]
        }
    });
    let gram = z.tr_mul(&z);
    let mut residuals = DMatrix::zeros(rows, p);
    for (j, col) in cols.iter().enumerate() {
        let y = DVector::from_column_slice(&col[start..]);
        let beta = solve_spd(&gram, &z.tr_mul(&y))?;
        residuals.set_column(j, &(y - &z * beta));
    }
    let sigma = residuals.tr_mul(&residuals) / rows as f64;
    let chol = sigma.cholesky().ok_or(Error::SingularDesign)?;
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let n = rows as f64;
    let pf = p as f64;
    let loglik = -0.5 * n * (pf * (2.0 * std::f64::consts::PI).ln() + log_det + pf);
    let n_coef = (p * k) as f64;
    Ok(-2.0 * loglik + 2.0 * n_coef)
}

/// Lag in `1..=d_max` minimizing the VAR AIC; ties go to the smaller lag.
pub fn select_lag_aic(panel: &TimeSeriesPanel, d_max: usize) -> Result<usize> {
    if d_max == 0 {
        return Err(Error::InvalidConfig("maximum lag must be positive".into()));
    }
    if 3 * d_max >= panel.len() {
        return Err(Error::LagTooLarge {
            lag: d_max,
            len: panel.len(),
        });
    }
    if d_max == 1 {
        return Ok(1);
    }
    let mut best = (1, var_aic(panel, 1, d_max)?);
    for d in 2..=d_max {
        let aic = var_aic(panel, d, d_max)?;
        if aic < best.1 {
            best = (d, aic);
        }
    }
    Ok(best.0)
}
