//! Panel representation, standardization and lagged design matrices.
//!
//! A [`TimeSeriesPanel`] holds the aligned series of one grid cell. All inference
//! runs on a [`StandardizedPanel`] (population z-scores) and on [`LagDesign`]s built
//! from it. Lagged columns are laid out in per-variable contiguous blocks with the
//! most recent lag first, so the block of a single variable can be dropped as a
//! contiguous column range.

use std::collections::HashSet;
use std::ops::{Deref, Range};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard deviations at or below this are treated as constant series.
pub const MIN_STD: f64 = 1e-12;

/// Grid provenance of a panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellMeta {
    pub longitude: f64,
    pub latitude: f64,
    pub pressure_level: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    timestamps: Vec<i64>,
    cell_meta: Option<CellMeta>,
}

impl TimeSeriesPanel {
    /// Builds a panel from named columns and strictly increasing timestamps
    /// (seconds since the Unix epoch).
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>, timestamps: Vec<i64>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                found: columns.len(),
            });
        }
        if names.is_empty() {
            return Err(Error::InvalidPanel("panel has no variables".into()));
        }
        let len = timestamps.len();
        if len < 2 {
            return Err(Error::InvalidPanel(format!("panel needs at least 2 time steps, got {len}")));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateVariable(name.clone()));
            }
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != len {
                return Err(Error::InvalidPanel(format!(
                    "column `{name}` has {} rows, expected {len}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidPanel(format!("column `{name}` has missing or non-finite values")));
            }
        }
        if timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPanel("timestamps are not strictly increasing".into()));
        }
        Ok(Self {
            names,
            columns,
            timestamps,
            cell_meta: None,
        })
    }

    /// Panel with timestamps `0, 1, ..., T-1`.
    pub fn from_columns<S: Into<String>>(names: impl IntoIterator<Item = S>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let len = columns.first().map_or(0, Vec::len);
        Self::new(
            names.into_iter().map(Into::into).collect(),
            columns,
            (0..len as i64).collect(),
        )
    }

    pub fn with_cell_meta(mut self, meta: CellMeta) -> Self {
        self.cell_meta = Some(meta);
        self
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn cell_meta(&self) -> Option<CellMeta> {
        self.cell_meta
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.index_of(name)?])
    }

    /// Appends a column, replacing an existing one of the same name.
    pub fn with_column(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: values.len(),
            });
        }
        match self.names.iter().position(|n| n == name) {
            Some(i) => self.columns[i] = values,
            None => {
                self.names.push(name.to_string());
                self.columns.push(values);
            }
        }
        Ok(self)
    }

    /// Keeps only the named variables, in the given order.
    pub fn select<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            columns.push(self.column(name.as_ref())?.to_vec());
        }
        let mut out = Self::new(
            names.iter().map(|n| n.as_ref().to_string()).collect(),
            columns,
            self.timestamps.clone(),
        )?;
        out.cell_meta = self.cell_meta;
        Ok(out)
    }

    /// Rows in `range` as a new panel.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.start >= range.end {
            return Err(Error::EmptyRange);
        }
        let mut out = Self::new(
            self.names.clone(),
            self.columns.iter().map(|c| c[range.clone()].to_vec()).collect(),
            self.timestamps[range].to_vec(),
        )?;
        out.cell_meta = self.cell_meta;
        Ok(out)
    }
}

/// A panel whose columns have been z-scored, keeping the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedPanel {
    panel: TimeSeriesPanel,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl StandardizedPanel {
    /// Wraps a panel unchanged, recording an identity transform.
    pub fn assume(panel: TimeSeriesPanel) -> Self {
        let n = panel.n_vars();
        Self {
            panel,
            means: vec![0.0; n],
            stds: vec![1.0; n],
        }
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn panel(&self) -> &TimeSeriesPanel {
        &self.panel
    }

    /// Maps the standardized values back onto the original scale.
    pub fn inverse(&self) -> TimeSeriesPanel {
        let columns = self
            .panel
            .columns
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(col, (&mean, &std))| col.iter().map(|z| z * std + mean).collect())
            .collect();
        TimeSeriesPanel {
            columns,
            ..self.panel.clone()
        }
    }
}

impl Deref for StandardizedPanel {
    type Target = TimeSeriesPanel;

    fn deref(&self) -> &TimeSeriesPanel {
        &self.panel
    }
}

/// Population mean and standard deviation (divisor `T`).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Z-scores every column with the population standard deviation.
pub fn standardize(panel: &TimeSeriesPanel) -> Result<StandardizedPanel> {
    let mut means = Vec::with_capacity(panel.n_vars());
    let mut stds = Vec::with_capacity(panel.n_vars());
    let mut columns = Vec::with_capacity(panel.n_vars());
    for (name, col) in panel.names.iter().zip(&panel.columns) {
        let (mean, std) = mean_std(col);
        if std <= MIN_STD {
            return Err(Error::ConstantSeries(name.clone()));
        }
        columns.push(col.iter().map(|v| (v - mean) / std).collect());
        means.push(mean);
        stds.push(std);
    }
    Ok(StandardizedPanel {
        panel: TimeSeriesPanel {
            columns,
            ..panel.clone()
        },
        means,
        stds,
    })
}

/// Lagged regressors over an interval of length `n` with shared lag `d`.
///
/// Row `i` predicts time `t = i + d` (0-based) and holds, for each variable in
/// `variable_order`, the block `x[t-1], x[t-2], ..., x[t-d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagDesign {
    pub matrix: DMatrix<f64>,
    pub n: usize,
    pub d: usize,
    pub variable_order: Vec<String>,
    pub target_rows: Vec<f64>,
}

impl LagDesign {
    pub fn m(&self) -> usize {
        self.variable_order.len()
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// Column range of a variable's lag block.
    pub fn block(&self, name: &str) -> Result<Range<usize>> {
        let j = self
            .variable_order
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        Ok(j * self.d..(j + 1) * self.d)
    }

    /// Lag (>= 1) carried by a column.
    pub fn column_lag(&self, col: usize) -> usize {
        col % self.d + 1
    }

    /// Variable that owns a column.
    pub fn column_variable(&self, col: usize) -> &str {
        &self.variable_order[col / self.d]
    }
}

pub fn build_lag_design<S: AsRef<str>>(
    panel: &TimeSeriesPanel,
    variables: &[S],
    target: &str,
    d: usize,
) -> Result<LagDesign> {
    let n = panel.len();
    if d == 0 {
        return Err(Error::InvalidConfig("lag must be positive".into()));
    }
    if d >= n {
        return Err(Error::LagTooLarge { lag: d, len: n });
    }
    if variables.is_empty() {
        return Err(Error::EmptyDesign);
    }
    let target_col = panel.column(target)?;
    let rows = n - d;
    let m = variables.len();
    let mut matrix = DMatrix::zeros(rows, m * d);
    for (j, var) in variables.iter().enumerate() {
        let col = panel.column(var.as_ref())?;
        for lag in 1..=d {
            let c = j * d + lag - 1;
            for i in 0..rows {
                matrix[(i, c)] = col[i + d - lag];
            }
        }
    }
    Ok(LagDesign {
        matrix,
        n,
        d,
        variable_order: variables.iter().map(|v| v.as_ref().to_string()).collect(),
        target_rows: target_col[d..].to_vec(),
    })
}

/// Drops the lag block of `name`, keeping the order of the remaining columns.
pub fn remove_variable_block(design: &LagDesign, name: &str) -> Result<LagDesign> {
    let block = design.block(name)?;
    if design.m() == 1 {
        return Err(Error::EmptyDesign);
    }
    let matrix = design.matrix.clone().remove_columns(block.start, block.len());
    Ok(LagDesign {
        matrix,
        n: design.n,
        d: design.d,
        variable_order: design.variable_order.iter().filter(|v| *v != name).cloned().collect(),
        target_rows: design.target_rows.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Row sums, `X * 1`.
    #[default]
    Unit,
    /// Fitted linear predictor, `X * beta`.
    Coefficient,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(Aggregation::Unit),
            "coefficient" => Ok(Aggregation::Coefficient),
            other => Err(Error::InvalidConfig(format!("unknown aggregation mode `{other}`"))),
        }
    }
}

/// Collapses a design into one aggregated regressor per row.
pub fn aggregate_design(design: &LagDesign, mode: Aggregation, coefficients: Option<&[f64]>) -> Result<Vec<f64>> {
    let cols = design.matrix.ncols();
    let weights = match mode {
        Aggregation::Unit => DVector::from_element(cols, 1.0),
        Aggregation::Coefficient => {
            let beta = coefficients.ok_or(Error::DimensionMismatch {
                expected: cols,
                found: 0,
            })?;
            if beta.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: beta.len(),
                });
            }
            DVector::from_column_slice(beta)
        }
    };
    Ok((&design.matrix * weights).iter().copied().collect())
}
