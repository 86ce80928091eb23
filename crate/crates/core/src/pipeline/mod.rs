//! Batch processing of gridded reanalysis extracts: CSV ingestion, derived
//! wind variables, one algorithm run per (location, pressure level), and the
//! pairs, plot-data and manifest outputs.

mod config;
mod grid;
mod ingest;
mod output;
mod wind;

use std::path::{Path, PathBuf};

pub use config::{load_scenario, scenario_from_toml, AlgorithmSection, AnalysisConfig, BackendName, LagSetting};
pub use grid::{run_grid, CellStatus, GridRun, RunManifest, Status};
pub use ingest::{ingest_csv, ingest_reader, parse_time, write_cells_csv, CsvSchema, GridCellKey, Ingested, PRESSURE_LEVELS};
pub use output::{
    color_table, height_km, pair_records, plot_data, read_pairs, read_pairs_csv, read_plot2d, read_plot3d,
    read_plotdata, write_pairs, write_pairs_csv, write_plot, write_plotdata, PairRecord, Plot2dRecord, Plot3dRecord,
    PlotData, PlotHeader, KNOWN_VARIABLES, PAIRS_HEADER, PLOT2D_SCHEMA, PLOT3D_SCHEMA, PLOT_VERSION,
};
pub use wind::{derive_wind_vars, wind_direction, wind_speed};

use crate::error::{Error, Result};
use crate::panel::TimeSeriesPanel;

pub const PAIRS_FILE: &str = "pairs.csv";
pub const PLOT2D_FILE: &str = "plot2d.jsonl";
pub const PLOT3D_FILE: &str = "plot3d.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Adds the wind variables when `u` and `v` are present (or `sin_wd` from a
/// precomputed `wd`), then keeps `variables` with the target first. Without an
/// explicit list, raw `u`, `v` and `wd` are dropped in favour of the derived ones.
pub fn prepare_panel(panel: &TimeSeriesPanel, target: &str, variables: Option<&[String]>) -> Result<TimeSeriesPanel> {
    let mut panel = panel.clone();
    let has = |p: &TimeSeriesPanel, n: &str| p.contains(n);
    if has(&panel, "u") && has(&panel, "v") && !has(&panel, "ws") {
        panel = derive_wind_vars(&panel)?;
    } else if has(&panel, "wd") && !has(&panel, "sin_wd") {
        let sin_wd = panel.column("wd")?.iter().map(|d| d.to_radians().sin()).collect();
        panel = panel.with_column("sin_wd", sin_wd)?;
    }
    let mut names: Vec<String> = match variables {
        Some(vars) => vars.to_vec(),
        None => panel
            .names()
            .iter()
            .filter(|n| !["u", "v", "wd"].contains(&n.as_str()))
            .cloned()
            .collect(),
    };
    names.retain(|n| n != target);
    names.insert(0, target.to_string());
    panel.select(&names)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub manifest: RunManifest,
    pub run: GridRun,
    pub n_pairs: usize,
    pub pairs_path: PathBuf,
    pub plot2d_path: PathBuf,
    pub plot3d_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Ingest, derive, run every cell and write the outputs into `config.output_dir`.
/// Per-cell failures are recorded in the manifest; only configuration and I/O
/// problems are returned as errors.
pub fn analyze(config: &AnalysisConfig, workers: usize) -> Result<AnalysisReport> {
    let input = config
        .input
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("config.input missing".into()))?;
    let algorithm = config.algorithm.resolve(config.seed)?;
    let ingested = ingest_csv(input, &CsvSchema::default())?;

    let mut cells = Vec::with_capacity(ingested.cells.len());
    let mut skipped = ingested.skipped.clone();
    let mut variables: Option<Vec<String>> = None;
    for (key, panel) in &ingested.cells {
        match prepare_panel(panel, &config.target, config.variables.as_deref()) {
            Ok(p) => {
                variables.get_or_insert_with(|| p.names().to_vec());
                cells.push((*key, p));
            }
            Err(e) => skipped.push((*key, e.to_string())),
        }
    }
    let run = run_grid(&cells, &config.target, &algorithm, workers)?;
    let variables = variables.unwrap_or_else(|| ingested.variables.clone());
    let manifest = RunManifest::new(
        input.to_path_buf(),
        &config.target,
        variables,
        algorithm,
        config.seed,
        &skipped,
        &run,
    );

    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = |name: &str| dir.join(name);
    write_pairs_csv(&run.outputs, path(PAIRS_FILE))?;
    write_plotdata(&run.outputs, path(PLOT2D_FILE), path(PLOT3D_FILE))?;
    write_text(&path(MANIFEST_FILE), &manifest.to_json())?;
    Ok(AnalysisReport {
        n_pairs: run.outputs.iter().map(|(_, o)| o.pairs.len()).sum(),
        manifest,
        run,
        pairs_path: path(PAIRS_FILE),
        plot2d_path: path(PLOT2D_FILE),
        plot3d_path: path(PLOT3D_FILE),
        manifest_path: path(MANIFEST_FILE),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
