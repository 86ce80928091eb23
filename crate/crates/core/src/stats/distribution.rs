//! Maximum-likelihood fitting of candidate response families, ranked by the
//! Kolmogorov-Smirnov distance between the empirical and fitted CDFs.

use serde::{Deserialize, Serialize};
use statrs::distribution::{DiscreteCDF, Gamma, LogNormal, Normal, Poisson};
use statrs::distribution::ContinuousCDF;

use super::special::{gamma_shape_from_log_gap, kolmogorov_sf};
use crate::error::{Error, Result};

pub const MIN_FIT_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Gamma,
    LogNormal,
    /// Poisson counts, used when every observation is a nonnegative integer.
    Poisson,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Gamma => "gamma",
            Family::LogNormal => "lognormal",
            Family::Poisson => "poisson",
        }
    }
}

/// A fitted family. `params` are `[mean, std]` (gaussian), `[shape, scale]`
/// (gamma), `[mu, sigma]` of the log (lognormal) or `[rate]` (poisson).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedDistribution {
    pub family: Family,
    pub params: Vec<f64>,
    pub ks_statistic: f64,
    pub ks_pvalue: f64,
}

impl FittedDistribution {
    /// Plain gaussian placeholder for callers that skip fitting.
    pub fn gaussian() -> Self {
        Self {
            family: Family::Gaussian,
            params: vec![0.0, 1.0],
            ks_statistic: 0.0,
            ks_pvalue: 1.0,
        }
    }
}

/// Fits every applicable family and keeps the one with the smallest KS statistic.
/// Ties keep the earlier family in the order gaussian, gamma, lognormal, poisson.
pub fn fit_distribution_ks(series: &[f64]) -> Result<FittedDistribution> {
    if series.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_FIT_SAMPLES,
            found: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate("non-finite sample".into()));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::Degenerate("constant sample has no fitted CDF".into()));
    }

    let candidates = [
        fit_gaussian(&sorted),
        fit_gamma(&sorted),
        fit_lognormal(&sorted),
        fit_poisson(&sorted),
    ];
    candidates
        .into_iter()
        .flatten()
        .fold(None::<FittedDistribution>, |best, cand| match best {
            Some(b) if b.ks_statistic <= cand.ks_statistic => Some(b),
            _ => Some(cand),
        })
        .ok_or_else(|| Error::Degenerate("no family could be fitted".into()))
}

fn finish(family: Family, params: Vec<f64>, ks: f64, n: usize) -> FittedDistribution {
    FittedDistribution {
        family,
        params,
        ks_statistic: ks,
        ks_pvalue: kolmogorov_sf((n as f64).sqrt() * ks),
    }
}

fn fit_gaussian(sorted: &[f64]) -> Option<FittedDistribution> {
    let (mean, std) = crate::panel::mean_std(sorted);
    let dist = Normal::new(mean, std).ok()?;
    let ks = ks_continuous(sorted, |x| dist.cdf(x));
    Some(finish(Family::Gaussian, vec![mean, std], ks, sorted.len()))
}

fn fit_gamma(sorted: &[f64]) -> Option<FittedDistribution> {
    if sorted[0] <= 0.0 {
        return None;
    }
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let mean_log = sorted.iter().map(|v| v.ln()).sum::<f64>() / n;
    let gap = mean.ln() - mean_log;
    if !(gap > 0.0) {
        return None;
    }
    let shape = gamma_shape_from_log_gap(gap);
    let scale = mean / shape;
    // statrs parameterizes by rate
    let dist = Gamma::new(shape, 1.0 / scale).ok()?;
    let ks = ks_continuous(sorted, |x| dist.cdf(x));
    Some(finish(Family::Gamma, vec![shape, scale], ks, sorted.len()))
}

fn fit_lognormal(sorted: &[f64]) -> Option<FittedDistribution> {
    if sorted[0] <= 0.0 {
        return None;
    }
    let logs: Vec<f64> = sorted.iter().map(|v| v.ln()).collect();
    let (mu, sigma) = crate::panel::mean_std(&logs);
    let dist = LogNormal::new(mu, sigma).ok()?;
    let ks = ks_continuous(sorted, |x| dist.cdf(x));
    Some(finish(Family::LogNormal, vec![mu, sigma], ks, sorted.len()))
}

fn fit_poisson(sorted: &[f64]) -> Option<FittedDistribution> {
    let is_count = |v: &f64| *v >= 0.0 && (v - v.round()).abs() < 1e-9;
    if !sorted.iter().all(is_count) || sorted[sorted.len() - 1] > 1e7 {
        return None;
    }
    let n = sorted.len() as f64;
    let rate = sorted.iter().sum::<f64>() / n;
    let dist = Poisson::new(rate).ok()?;
    let max = sorted[sorted.len() - 1].round() as u64;
    let mut idx = 0;
    let mut ks: f64 = 0.0;
    for k in 0..=max {
        while idx < sorted.len() && sorted[idx].round() as u64 <= k {
            idx += 1;
        }
        ks = ks.max((idx as f64 / n - dist.cdf(k)).abs());
    }
    Some(finish(Family::Poisson, vec![rate], ks, sorted.len()))
}

/// Two-sided KS statistic of a sorted sample against a continuous CDF.
pub fn ks_continuous(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (((i + 1) as f64 / n) - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma as GammaDist, Normal as NormalDist, Poisson as PoissonDist};

    fn draws<D: Distribution<f64>>(dist: D, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    }

    /// Brute-force KS: evaluates the sup over a fine grid plus both one-sided
    /// limits at every sample point.
    fn brute_ks(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        let n = sample.len() as f64;
        let ecdf = |x: f64, strict: bool| {
            sample.iter().filter(|&&v| if strict { v < x } else { v <= x }).count() as f64 / n
        };
        sample
            .iter()
            .map(|&x| (ecdf(x, false) - cdf(x)).abs().max((ecdf(x, true) - cdf(x)).abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn normal_sample_picks_gaussian() {
        let sample = draws(NormalDist::new(0.0, 1.0).unwrap(), 2000, 7);
        let fit = fit_distribution_ks(&sample).unwrap();
        assert_eq!(fit.family, Family::Gaussian);
        assert!(fit.params[0].abs() < 0.1);
        assert!((fit.params[1] - 1.0).abs() < 0.1);
        assert!((0.0..=1.0).contains(&fit.ks_statistic));
        assert!((0.0..=1.0).contains(&fit.ks_pvalue));
    }

    #[test]
    fn gamma_sample_prefers_gamma_over_gaussian() {
        let sample = draws(GammaDist::new(2.0, 1.0).unwrap(), 2000, 11);
        let fit = fit_distribution_ks(&sample).unwrap();
        assert_eq!(fit.family, Family::Gamma);
        assert!((fit.params[0] - 2.0).abs() < 0.25);
        assert!((fit.params[1] - 1.0).abs() < 0.15);
        let gauss = fit_gaussian(&{
            let mut s = sample.clone();
            s.sort_by(f64::total_cmp);
            s
        })
        .unwrap();
        assert!(gauss.ks_statistic > fit.ks_statistic);
    }

    #[test]
    fn counts_can_pick_poisson() {
        let sample = draws(PoissonDist::new(3.0).unwrap(), 2000, 5);
        let fit = fit_distribution_ks(&sample).unwrap();
        assert_eq!(fit.family, Family::Poisson);
        assert!((fit.params[0] - 3.0).abs() < 0.15);
    }

    #[test]
    fn ks_statistic_matches_brute_force() {
        let mut sample = draws(GammaDist::new(3.0, 0.5).unwrap(), 300, 3);
        sample.sort_by(f64::total_cmp);
        let dist = Normal::new(1.5, 0.9).unwrap();
        let fast = ks_continuous(&sample, |x| dist.cdf(x));
        let slow = brute_ks(&sample, |x| dist.cdf(x));
        assert!((fast - slow).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_distribution_ks(&[1.0; 10]), Err(Error::TooFewSamples { .. })));
        assert!(matches!(fit_distribution_ks(&[4.0; 50]), Err(Error::Degenerate(_))));
    }
}
