use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::panel::LagDesign;
use crate::stats::linalg::{solve_spd, weighted_normal_equations};
use crate::stats::{fit_regression, gaussian_loglik, Family, RegressionFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetScore {
    /// Selected variables, in design order.
    pub subset: Vec<String>,
    pub codelength: f64,
    pub fit: RegressionFit,
}

/// `ln C(m, k)`: the cost of naming which `k` of `m` variables are used.
pub fn ln_binomial(m: usize, k: usize) -> f64 {
    ln_gamma(m as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((m - k) as f64 + 1.0)
}

/// Two-part message length of a fitted subset model:
/// `-loglik + (k d + 1) ln(r) / 2 + ln C(m, k)`.
pub fn codelength(loglik: f64, k: usize, m: usize, d: usize, r: usize) -> f64 {
    -loglik + 0.5 * (k * d + 1) as f64 * (r as f64).ln() + ln_binomial(m, k)
}

/// Scores subsets of a design's variables, encoded as bitmasks over
/// `design.variable_order`.
pub struct SubsetScorer<'a> {
    design: &'a LagDesign,
    family: Family,
    columns: Vec<Vec<f64>>,
    /// Gaussian only: normal equations of the full design, intercept first.
    gram: Option<(DMatrix<f64>, DVector<f64>)>,
}

impl<'a> SubsetScorer<'a> {
    pub fn new(design: &'a LagDesign, family: Family) -> Result<Self> {
        if design.m() > 63 {
            return Err(Error::TooManyVariables { m: design.m(), max: 63 });
        }
        let columns: Vec<Vec<f64>> = design.matrix.column_iter().map(|c| c.iter().copied().collect()).collect();
        let gram = (family == Family::Gaussian).then(|| {
            let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
            weighted_normal_equations(&refs, &design.target_rows, None)
        });
        Ok(Self {
            design,
            family,
            columns,
            gram,
        })
    }

    pub fn m(&self) -> usize {
        self.design.m()
    }

    pub fn design(&self) -> &LagDesign {
        self.design
    }

    pub fn mask_of<S: AsRef<str>>(&self, subset: &[S]) -> Result<u64> {
        let mut mask = 0u64;
        for name in subset {
            let j = self
                .design
                .variable_order
                .iter()
                .position(|v| v == name.as_ref())
                .ok_or_else(|| Error::UnknownVariable(name.as_ref().to_string()))?;
            mask |= 1 << j;
        }
        Ok(mask)
    }

    pub fn names_of(&self, mask: u64) -> Vec<String> {
        (0..self.m())
            .filter(|j| mask >> j & 1 == 1)
            .map(|j| self.design.variable_order[j].clone())
            .collect()
    }

    pub fn score(&self, mask: u64) -> Result<SubsetScore> {
        let d = self.design.d;
        let cols: Vec<&[f64]> = (0..self.m())
            .filter(|j| mask >> j & 1 == 1)
            .flat_map(|j| (j * d..(j + 1) * d).map(|c| self.columns[c].as_slice()))
            .collect();
        let fit = match &self.gram {
            Some((gram, rhs)) => self.gaussian_fit(gram, rhs, mask, &cols)?,
            None => fit_regression(&self.design.target_rows, &cols, self.family)?,
        };
        let k = mask.count_ones() as usize;
        let codelength = codelength(fit.loglik, k, self.m(), d, fit.n_obs);
        Ok(SubsetScore {
            subset: self.names_of(mask),
            codelength,
            fit,
        })
    }

    /// Least squares on a sub-block of the precomputed normal equations.
    fn gaussian_fit(&self, gram: &DMatrix<f64>, rhs: &DVector<f64>, mask: u64, cols: &[&[f64]]) -> Result<RegressionFit> {
        let d = self.design.d;
        let y = &self.design.target_rows;
        let r = y.len();
        let n_params = cols.len() + 1;
        if r <= n_params {
            return Err(Error::TooFewSamples {
                needed: n_params + 1,
                found: r,
            });
        }
        let idx: Vec<usize> = std::iter::once(0)
            .chain((0..self.m()).filter(|j| mask >> j & 1 == 1).flat_map(|j| (j * d..(j + 1) * d).map(|c| c + 1)))
            .collect();
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| gram[(idx[a], idx[b])]);
        let sub_rhs = DVector::from_fn(idx.len(), |a, _| rhs[idx[a]]);
        let beta = solve_spd(&sub, &sub_rhs)?;
        let fitted: Vec<f64> = (0..r)
            .map(|i| beta[0] + cols.iter().enumerate().map(|(j, c)| beta[j + 1] * c[i]).sum::<f64>())
            .collect();
        let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
        Ok(RegressionFit {
            family: Family::Gaussian,
            coefficients: beta.iter().copied().collect(),
            fitted,
            rss,
            loglik: gaussian_loglik(rss, r),
            n_obs: r,
            n_params,
        })
    }

    /// Codelength, or `+inf` when the subset cannot be fitted.
    pub(crate) fn codelength_or_inf(&self, mask: u64) -> f64 {
        self.score(mask).map_or(f64::INFINITY, |s| s.codelength)
    }

    /// Orders candidates by codelength, then size, then sorted names.
    pub(crate) fn better(&self, a: (u64, f64), b: (u64, f64)) -> bool {
        if a.1 != b.1 {
            return a.1 < b.1;
        }
        let (ka, kb) = (a.0.count_ones(), b.0.count_ones());
        if ka != kb {
            return ka < kb;
        }
        let sorted = |m: u64| self.names_of(m).into_iter().collect::<BTreeSet<_>>();
        sorted(a.0) < sorted(b.0)
    }
}

/// Scores one subset of `design`'s variables against its target rows.
pub fn mml_score<S: AsRef<str>>(design: &LagDesign, subset: &[S], family: Family) -> Result<SubsetScore> {
    let scorer = SubsetScorer::new(design, family)?;
    let mask = scorer.mask_of(subset)?;
    scorer.score(mask)
}
