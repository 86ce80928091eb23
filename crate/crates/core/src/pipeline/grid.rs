use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::GridCellKey;
use crate::algorithm::{run, AlgorithmConfig, AlgorithmOutput};
use crate::error::{Error, Result};
use crate::panel::TimeSeriesPanel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Status {
    Ok { pairs: usize },
    Skipped { reason: String },
    Error { code: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStatus {
    pub cell: GridCellKey,
    #[serde(flatten)]
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRun {
    /// Successful cells in key order.
    pub outputs: Vec<(GridCellKey, AlgorithmOutput)>,
    /// One entry per attempted cell, in key order.
    pub statuses: Vec<CellStatus>,
}

impl GridRun {
    pub fn n_errors(&self) -> usize {
        self.statuses.iter().filter(|s| matches!(s.status, Status::Error { .. })).count()
    }
}

/// Runs the algorithm on every cell with `workers` threads. Cell failures are
/// recorded, not propagated; results do not depend on `workers`.
pub fn run_grid(
    cells: &[(GridCellKey, TimeSeriesPanel)],
    target: &str,
    config: &AlgorithmConfig,
    workers: usize,
) -> Result<GridRun> {
    if workers == 0 {
        return Err(Error::InvalidConfig("worker count must be positive".into()));
    }
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let mut results: Vec<(GridCellKey, Result<AlgorithmOutput>)> = pool.install(|| {
        cells
            .par_iter()
            .map(|(key, panel)| (*key, run(panel, target, config)))
            .collect()
    });
    results.sort_by_key(|r| r.0);

    let mut outputs = Vec::new();
    let mut statuses = Vec::with_capacity(results.len());
    for (cell, result) in results {
        let status = match result {
            Ok(out) => {
                let status = Status::Ok { pairs: out.pairs.len() };
                outputs.push((cell, out));
                status
            }
            Err(e) => Status::Error {
                code: e.code().to_string(),
                reason: e.to_string(),
            },
        };
        statuses.push(CellStatus { cell, status });
    }
    Ok(GridRun { outputs, statuses })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub input: PathBuf,
    pub target: String,
    pub variables: Vec<String>,
    pub config: AlgorithmConfig,
    pub seed: u64,
    pub version: String,
    /// Every attempted cell, in key order.
    pub cells: Vec<CellStatus>,
}

impl RunManifest {
    pub fn new(
        input: PathBuf,
        target: &str,
        variables: Vec<String>,
        config: AlgorithmConfig,
        seed: u64,
        skipped: &[(GridCellKey, String)],
        run: &GridRun,
    ) -> Self {
        let mut cells: Vec<CellStatus> = skipped
            .iter()
            .map(|(cell, reason)| CellStatus {
                cell: *cell,
                status: Status::Skipped { reason: reason.clone() },
            })
            .chain(run.statuses.iter().cloned())
            .collect();
        cells.sort_by_key(|c| c.cell);
        Self {
            input,
            target: target.to_string(),
            variables,
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            cells,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is always serializable") + "\n"
    }
}
