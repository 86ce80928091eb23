//! Graphical-Granger parent discovery for a single target.
//!
//! Every candidate regressor set is scored by a two-part message length
//! (negative log-likelihood of the ML fit, half a log-sample-size per free
//! coefficient, plus the code for which variables were chosen). This is an
//! approximation of the full MML criterion; the search picks the shortest
//! message either exhaustively or with a genetic algorithm.
//!
//! Any other time-series causal method can be plugged in through
//! [`CausalBackend`].

mod score;
mod search;

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use score::{codelength, ln_binomial, mml_score, SubsetScore, SubsetScorer};
pub use search::{search_exhaustive, search_genetic, GeneticConfig, MAX_EXHAUSTIVE_VARIABLES};

use crate::error::{Error, Result};
use crate::panel::{build_lag_design, LagDesign, StandardizedPanel};
use crate::stats::{fit_distribution_ks, Family, FittedDistribution};

/// A parent must have at least one lag coefficient above this in magnitude.
pub const COEFFICIENT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalParents {
    pub target: String,
    /// Parent name to its `d` lag coefficients (lag 1 first).
    pub coefficients: BTreeMap<String, Vec<f64>>,
    pub d: usize,
    /// Half-open row range of the panel the parents were inferred on.
    pub interval: (usize, usize),
    pub codelength: f64,
    pub distribution: Family,
}

impl CausalParents {
    pub fn parents(&self) -> impl Iterator<Item = &str> {
        self.coefficients.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.coefficients.contains_key(name)
    }

    pub fn range(&self) -> Range<usize> {
        self.interval.0..self.interval.1
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Search {
    #[default]
    Exhaustive,
    Genetic(GeneticConfig),
}

/// A causal discovery method for one target on one interval.
pub trait CausalBackend: Sync {
    fn infer(&self, panel: &StandardizedPanel, target: &str, interval: Range<usize>, d: usize) -> Result<CausalParents>;
}

/// MML-scored subset search over all panel variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Hmml {
    pub search: Search,
}

impl CausalBackend for Hmml {
    fn infer(&self, panel: &StandardizedPanel, target: &str, interval: Range<usize>, d: usize) -> Result<CausalParents> {
        infer_parents(panel, target, interval, d, &self.search)
    }
}

/// Restricts the panel to `interval`, builds the lag design over every
/// variable (the target's own history included), fits the target's response
/// family and returns the winning subset with its lag coefficients.
pub fn infer_parents(
    panel: &StandardizedPanel,
    target: &str,
    interval: Range<usize>,
    d: usize,
    search: &Search,
) -> Result<CausalParents> {
    panel.index_of(target)?;
    let len = interval.len();
    if interval.end > panel.len() || d == 0 || len < d + 4 {
        return Err(Error::IntervalTooShort { len, lag: d });
    }
    let window = panel.slice(interval.clone())?;
    let design = build_lag_design(&window, window.names(), target, d)?;
    let distribution = response_family(&design.target_rows)?;
    let scorer = SubsetScorer::new(&design, distribution.family)?;
    let best = match search {
        Search::Exhaustive => search_exhaustive(&scorer)?,
        Search::Genetic(cfg) => search_genetic(&scorer, cfg)?,
    };
    Ok(parents_from_score(&design, &best, target, (interval.start, interval.end), distribution.family))
}

/// KS-selected family of the target rows; short samples default to gaussian.
pub fn response_family(target_rows: &[f64]) -> Result<FittedDistribution> {
    match fit_distribution_ks(target_rows) {
        Err(Error::TooFewSamples { .. }) => Ok(FittedDistribution::gaussian()),
        other => other,
    }
}

fn parents_from_score(
    design: &LagDesign,
    best: &SubsetScore,
    target: &str,
    interval: (usize, usize),
    family: Family,
) -> CausalParents {
    let d = design.d;
    let coefficients = best
        .subset
        .iter()
        .enumerate()
        .map(|(i, name)| {
            // coefficients[0] is the intercept
            let lags = best.fit.coefficients[1 + i * d..1 + (i + 1) * d].to_vec();
            (name.clone(), lags)
        })
        .filter(|(_, lags)| lags.iter().any(|c| c.abs() > COEFFICIENT_TOLERANCE))
        .collect();
    CausalParents {
        target: target.to_string(),
        coefficients,
        d,
        interval,
        codelength: best.codelength,
        distribution: family,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::standardize;
    use crate::synth::gen_var_panel;

    #[test]
    fn autoregressive_target_is_its_own_parent() {
        let mut hits = 0;
        for seed in 0..20 {
            let coef = vec![vec![vec![0.8, 0.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]]];
            let p = standardize(&gen_var_panel(3, 200, 1, &coef, 1.0, seed).unwrap()).unwrap();
            let parents = infer_parents(&p, "x1", 0..200, 1, &Search::Exhaustive).unwrap();
            if parents.parents().collect::<Vec<_>>() == ["x1"] {
                hits += 1;
            }
            for lags in parents.coefficients.values() {
                assert!(lags.iter().any(|c| c.abs() > COEFFICIENT_TOLERANCE));
                assert_eq!(lags.len(), 1);
            }
        }
        assert!(hits >= 18, "{hits}/20");
    }

    #[test]
    fn noise_panel_has_few_parents() {
        let mut empty = 0;
        for seed in 0..20 {
            let coef = vec![vec![vec![0.0; 4]; 4]];
            let p = standardize(&gen_var_panel(4, 200, 1, &coef, 1.0, seed).unwrap()).unwrap();
            if infer_parents(&p, "x2", 0..200, 2, &Search::Exhaustive).unwrap().is_empty() {
                empty += 1;
            }
        }
        assert!(empty >= 16, "{empty}/20");
    }

    #[test]
    fn short_interval() {
        let coef = vec![vec![vec![0.0; 2]; 2]];
        let p = standardize(&gen_var_panel(2, 100, 1, &coef, 1.0, 1).unwrap()).unwrap();
        assert_eq!(
            infer_parents(&p, "x1", 10..15, 2, &Search::Exhaustive).unwrap_err(),
            Error::IntervalTooShort { len: 5, lag: 2 }
        );
        assert!(infer_parents(&p, "x1", 10..16, 2, &Search::Exhaustive).is_ok());
        assert!(infer_parents(&p, "nope", 0..100, 2, &Search::Exhaustive).is_err());
    }
}
