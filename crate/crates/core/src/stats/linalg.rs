use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative Cholesky pivot below which a system is declared rank deficient.
const SINGULAR_PIVOT: f64 = 1e-10;
/// Relative pivot below which the ridge term is applied.
const ILL_CONDITIONED_PIVOT: f64 = 1e-6;
/// Ridge added to the normal-equations diagonal (scaled by the diagonal entry).
pub const RIDGE: f64 = 1e-8;

/// Solves the symmetric positive definite system `gram * x = rhs`.
///
/// A pivot `L_jj^2 / A_jj` measures how much of column `j` is not explained by
/// the preceding columns. Exact collinearity fails with `SingularDesign`; nearly
/// collinear systems get a small diagonal ridge.
pub fn solve_spd(gram: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let n = gram.nrows();
    let diag: Vec<f64> = (0..n).map(|j| gram[(j, j)]).collect();
    if diag.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::SingularDesign);
    }
    let chol = gram.clone().cholesky().ok_or(Error::SingularDesign)?;
    let min_pivot = min_relative_pivot(chol.l_dirty(), &diag);
    if min_pivot < SINGULAR_PIVOT {
        return Err(Error::SingularDesign);
    }
    if min_pivot >= ILL_CONDITIONED_PIVOT {
        return Ok(chol.solve(rhs));
    }
    let mut ridged = gram.clone();
    for (j, d) in diag.iter().enumerate() {
        ridged[(j, j)] += RIDGE * d;
    }
    let chol = ridged.cholesky().ok_or(Error::SingularDesign)?;
    Ok(chol.solve(rhs))
}

fn min_relative_pivot(l: &DMatrix<f64>, diag: &[f64]) -> f64 {
    diag.iter()
        .enumerate()
        .map(|(j, d)| l[(j, j)].powi(2) / d)
        .fold(f64::INFINITY, f64::min)
}

/// `Z' W Z` and `Z' W z` for a design with an implicit leading intercept column.
pub fn weighted_normal_equations(
    columns: &[&[f64]],
    response: &[f64],
    weights: Option<&[f64]>,
) -> (DMatrix<f64>, DVector<f64>) {
    let k = columns.len() + 1;
    let r = response.len();
    let mut gram = DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    let col = |j: usize, i: usize| if j == 0 { 1.0 } else { columns[j - 1][i] };
    for i in 0..r {
        let w = weights.map_or(1.0, |w| w[i]);
        for a in 0..k {
            let za = col(a, i) * w;
            rhs[a] += za * response[i];
            for b in 0..=a {
                gram[(a, b)] += za * col(b, i);
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    (gram, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_duplicate_is_singular() {
        let x = [1.0, 2.0, 3.0, 5.0, 8.0];
        let y = [1.0, 0.0, 2.0, 1.0, 3.0];
        let (g, b) = weighted_normal_equations(&[&x, &x], &y, None);
        assert_eq!(solve_spd(&g, &b).unwrap_err(), Error::SingularDesign);
    }

    #[test]
    fn zero_column_is_singular() {
        let x = [0.0; 4];
        let (g, b) = weighted_normal_equations(&[&x], &[1.0, 2.0, 3.0, 4.0], None);
        assert_eq!(solve_spd(&g, &b).unwrap_err(), Error::SingularDesign);
    }

    #[test]
    fn nearly_collinear_still_solves() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let z: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + 1e-4 * (i as f64 * 1.3).cos()).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v).collect();
        let (g, b) = weighted_normal_equations(&[&x, &z], &y, None);
        let beta = solve_spd(&g, &b).unwrap();
        // the ridge spreads the slope across both columns but keeps the fit
        assert!((beta[0] - 1.0).abs() < 1e-4);
        assert!((beta[1] + beta[2] - 2.0).abs() < 1e-3);
        for i in 0..50 {
            let fit = beta[0] + beta[1] * x[i] + beta[2] * z[i];
            assert!((fit - y[i]).abs() < 1e-3);
        }
    }
}
