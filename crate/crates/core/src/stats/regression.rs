//! Maximum-likelihood regression with an intercept under the supported families.
//!
//! Gaussian uses ordinary least squares. Gamma and Poisson use the log link and
//! are fitted by iteratively reweighted least squares. Lognormal is least squares
//! on the log response. RSS is always reported on the response scale.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::distribution::Family;
use super::linalg::{solve_spd, weighted_normal_equations};
use super::special::gamma_shape_from_log_gap;
use crate::error::{Error, Result};

const IRLS_MAX_ITER: usize = 100;
const IRLS_TOL: f64 = 1e-12;
/// Smallest variance used in a gaussian log-likelihood, keeping perfect fits finite.
const MIN_VARIANCE: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub family: Family,
    /// Intercept first, then one coefficient per design column.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub rss: f64,
    pub loglik: f64,
    pub n_obs: usize,
    pub n_params: usize,
}

/// Fits `response ~ 1 + columns` under `family`.
pub fn fit_regression<C: AsRef<[f64]>>(response: &[f64], columns: &[C], family: Family) -> Result<RegressionFit> {
    let r = response.len();
    let cols: Vec<&[f64]> = columns.iter().map(AsRef::as_ref).collect();
    for c in &cols {
        if c.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: c.len(),
            });
        }
    }
    let n_params = cols.len() + 1;
    if r <= n_params {
        return Err(Error::TooFewSamples {
            needed: n_params + 1,
            found: r,
        });
    }
    match family {
        Family::Gaussian => fit_gaussian(response, &cols),
        Family::LogNormal => fit_lognormal(response, &cols),
        Family::Gamma | Family::Poisson => fit_log_link(response, &cols, family),
    }
}

fn linear_predictor(cols: &[&[f64]], beta: &DVector<f64>, i: usize) -> f64 {
    beta[0] + cols.iter().enumerate().map(|(j, c)| beta[j + 1] * c[i]).sum::<f64>()
}

fn rss_of(response: &[f64], fitted: &[f64]) -> f64 {
    response.iter().zip(fitted).map(|(y, f)| (y - f).powi(2)).sum()
}

pub(crate) fn gaussian_loglik(rss: f64, r: usize) -> f64 {
    let n = r as f64;
    let var = (rss / n).max(MIN_VARIANCE);
    -0.5 * n * ((2.0 * std::f64::consts::PI * var).ln() + 1.0)
}

fn ols(response: &[f64], cols: &[&[f64]]) -> Result<(DVector<f64>, Vec<f64>)> {
    let (gram, rhs) = weighted_normal_equations(cols, response, None);
    let beta = solve_spd(&gram, &rhs)?;
    let fitted = (0..response.len()).map(|i| linear_predictor(cols, &beta, i)).collect();
    Ok((beta, fitted))
}

fn fit_gaussian(response: &[f64], cols: &[&[f64]]) -> Result<RegressionFit> {
    let (beta, fitted) = ols(response, cols)?;
    let rss = rss_of(response, &fitted);
    Ok(RegressionFit {
        family: Family::Gaussian,
        coefficients: beta.iter().copied().collect(),
        loglik: gaussian_loglik(rss, response.len()),
        fitted,
        rss,
        n_obs: response.len(),
        n_params: cols.len() + 1,
    })
}

fn require_positive(response: &[f64], family: Family) -> Result<()> {
    if response.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::Degenerate(format!(
            "{} regression needs a strictly positive response",
            family.name()
        )));
    }
    Ok(())
}

fn fit_lognormal(response: &[f64], cols: &[&[f64]]) -> Result<RegressionFit> {
    require_positive(response, Family::LogNormal)?;
    let logs: Vec<f64> = response.iter().map(|y| y.ln()).collect();
    let (beta, eta) = ols(&logs, cols)?;
    let n = response.len() as f64;
    let rss_log = rss_of(&logs, &eta);
    let var = (rss_log / n).max(MIN_VARIANCE);
    let fitted: Vec<f64> = eta.iter().map(|e| (e + var / 2.0).exp()).collect();
    let loglik = -logs.iter().sum::<f64>() + gaussian_loglik(rss_log, response.len());
    Ok(RegressionFit {
        family: Family::LogNormal,
        coefficients: beta.iter().copied().collect(),
        rss: rss_of(response, &fitted),
        fitted,
        loglik,
        n_obs: response.len(),
        n_params: cols.len() + 1,
    })
}

fn fit_log_link(response: &[f64], cols: &[&[f64]], family: Family) -> Result<RegressionFit> {
    match family {
        Family::Gamma => require_positive(response, family)?,
        _ => {
            if response.iter().any(|&y| !(y >= 0.0)) {
                return Err(Error::Degenerate("poisson regression needs a nonnegative response".into()));
            }
        }
    }
    let r = response.len();
    let offset = if family == Family::Poisson { 0.5 } else { 0.0 };
    let start: Vec<f64> = response.iter().map(|y| (y + offset).ln()).collect();
    let (mut beta, mut eta) = ols(&start, cols)?;
    let mut dev = deviance(response, &eta, family);

    for _ in 0..IRLS_MAX_ITER {
        let mu: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
        let z: Vec<f64> = eta.iter().zip(response.iter().zip(&mu)).map(|(e, (y, m))| e + (y - m) / m).collect();
        // log link: gamma weights are constant, poisson weights are mu
        let weights: Vec<f64> = match family {
            Family::Poisson => mu.clone(),
            _ => vec![1.0; r],
        };
        let (gram, rhs) = weighted_normal_equations(cols, &z, Some(&weights));
        let proposal = solve_spd(&gram, &rhs)?;

        // step halving keeps the deviance from increasing
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand = &beta + (&proposal - &beta) * step;
            let cand_eta: Vec<f64> = (0..r).map(|i| linear_predictor(cols, &cand, i)).collect();
            let cand_dev = deviance(response, &cand_eta, family);
            if cand_dev.is_finite() && cand_dev <= dev * (1.0 + 1e-12) + 1e-300 {
                accepted = Some((cand, cand_eta, cand_dev));
                break;
            }
            step /= 2.0;
        }
        let Some((next_beta, next_eta, next_dev)) = accepted else {
            break;
        };
        let change = (dev - next_dev).abs() / (next_dev.abs() + 0.1);
        beta = next_beta;
        eta = next_eta;
        dev = next_dev;
        if change < IRLS_TOL {
            break;
        }
    }

    let fitted: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
    let loglik = match family {
        Family::Poisson => response
            .iter()
            .zip(&fitted)
            .map(|(y, m)| y * m.ln() - m - ln_gamma(y + 1.0))
            .sum(),
        _ => gamma_loglik(response, &fitted),
    };
    Ok(RegressionFit {
        family,
        coefficients: beta.iter().copied().collect(),
        rss: rss_of(response, &fitted),
        fitted,
        loglik,
        n_obs: r,
        n_params: cols.len() + 1,
    })
}

fn deviance(response: &[f64], eta: &[f64], family: Family) -> f64 {
    response
        .iter()
        .zip(eta)
        .map(|(&y, &e)| {
            let mu = e.exp();
            match family {
                Family::Poisson => {
                    let term = if y > 0.0 { y * (y / mu).ln() } else { 0.0 };
                    2.0 * (term - (y - mu))
                }
                _ => 2.0 * (-(y / mu).ln() + (y - mu) / mu),
            }
        })
        .sum()
}

/// Gamma log-likelihood at the given means with the shape profiled out by ML.
fn gamma_loglik(response: &[f64], mu: &[f64]) -> f64 {
    let n = response.len() as f64;
    let gap = -response
        .iter()
        .zip(mu)
        .map(|(y, m)| (y / m).ln() - y / m)
        .sum::<f64>()
        / n
        - 1.0;
    let shape = if gap > 1e-12 { gamma_shape_from_log_gap(gap) } else { 1e12 };
    response
        .iter()
        .zip(mu)
        .map(|(y, m)| shape * (shape / m).ln() + (shape - 1.0) * y.ln() - shape * y / m - ln_gamma(shape))
        .sum()
}
