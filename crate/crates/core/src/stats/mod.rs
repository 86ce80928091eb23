//! Distribution fitting, regression, lag selection and the nested F-test.

mod distribution;
mod ftest;
mod lag;
pub(crate) mod linalg;
mod regression;
pub(crate) mod special;

pub use distribution::{fit_distribution_ks, ks_continuous, Family, FittedDistribution, MIN_FIT_SAMPLES};
pub use ftest::{f_sf, f_statistic, f_test_nested, f_test_rss, FTestResult, ZERO_RSS};
pub use lag::{select_lag_aic, var_aic};
pub use regression::{fit_regression, RegressionFit};
pub(crate) use regression::gaussian_loglik;
