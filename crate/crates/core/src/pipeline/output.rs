use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ingest::GridCellKey;
use crate::algorithm::AlgorithmOutput;
use crate::error::{Error, Result};

pub const PAIRS_HEADER: [&str; 7] = [
    "longitude",
    "latitude",
    "pressure_level",
    "cause",
    "trigger",
    "f_statistic",
    "p_value",
];

pub const PLOT2D_SCHEMA: &str = "cause-trigger/plot2d";
pub const PLOT3D_SCHEMA: &str = "cause-trigger/plot3d";
pub const PLOT_VERSION: u32 = 1;

/// Fixed color ids for the reanalysis variables; others are numbered after these
/// in name order.
pub const KNOWN_VARIABLES: [&str; 12] = ["d", "z", "o3", "pv", "r", "w", "t", "u", "v", "ws", "wd", "sin_wd"];

/// Approximate height in km of an analysis pressure level.
pub fn height_km(pressure_level: u32) -> Option<f64> {
    match pressure_level {
        500 => Some(5.5),
        700 => Some(3.0),
        975 => Some(0.6),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub longitude: f64,
    pub latitude: f64,
    pub pressure_level: u32,
    pub cause: String,
    pub trigger: String,
    pub f_statistic: f64,
    pub p_value: f64,
}

/// One row per pair, cells in key order, pairs in emission order.
pub fn pair_records(outputs: &[(GridCellKey, AlgorithmOutput)]) -> Vec<PairRecord> {
    let mut sorted: Vec<&(GridCellKey, AlgorithmOutput)> = outputs.iter().collect();
    sorted.sort_by_key(|s| s.0);
    sorted
        .into_iter()
        .flat_map(|(key, out)| {
            out.pairs.iter().map(move |p| PairRecord {
                longitude: key.longitude,
                latitude: key.latitude,
                pressure_level: key.pressure_level,
                cause: p.cause.clone(),
                trigger: p.trigger.clone(),
                f_statistic: p.moderation.f.statistic,
                p_value: p.moderation.f.p_value,
            })
        })
        .collect()
}

pub fn write_pairs<W: Write>(records: &[PairRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| Error::io("pairs csv", e);
    w.write_record(PAIRS_HEADER).map_err(fail)?;
    for r in records {
        w.write_record([
            r.longitude.to_string(),
            r.latitude.to_string(),
            r.pressure_level.to_string(),
            r.cause.clone(),
            r.trigger.clone(),
            r.f_statistic.to_string(),
            r.p_value.to_string(),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| Error::io("pairs csv", e))
}

pub fn write_pairs_csv(outputs: &[(GridCellKey, AlgorithmOutput)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_pairs(&pair_records(outputs), std::io::BufWriter::new(file)).map_err(|e| relabel(e, path))
}

pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<PairRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Schema(e.to_string()))?;
    if headers.iter().ne(PAIRS_HEADER) {
        return Err(Error::Schema(format!("unexpected pairs header {headers:?}")));
    }
    rdr.deserialize()
        .map(|r| r.map_err(|e: csv::Error| Error::Schema(e.to_string())))
        .collect()
}

pub fn read_pairs_csv(path: impl AsRef<Path>) -> Result<Vec<PairRecord>> {
    let path = path.as_ref();
    read_pairs(std::fs::File::open(path).map_err(|e| Error::io(path, e))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotHeader {
    pub schema: String,
    pub version: u32,
    /// Variable name to color id.
    pub colors: BTreeMap<String, usize>,
}

/// Triggers active at one location and level (one pie).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plot2dRecord {
    pub pressure_level: u32,
    pub longitude: f64,
    pub latitude: f64,
    pub triggers: Vec<String>,
}

/// One trigger at one location (one cube).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plot3dRecord {
    pub longitude: f64,
    pub latitude: f64,
    pub height_km: f64,
    pub pressure_level: u32,
    pub trigger: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub colors: BTreeMap<String, usize>,
    pub records_2d: Vec<Plot2dRecord>,
    pub records_3d: Vec<Plot3dRecord>,
}

/// Stable color ids: the known variables first, then any other name in order.
pub fn color_table<'a>(extra: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, usize> {
    let mut table: BTreeMap<String, usize> = KNOWN_VARIABLES.iter().enumerate().map(|(i, v)| (v.to_string(), i)).collect();
    let mut others: Vec<&str> = extra.into_iter().filter(|v| !table.contains_key(*v)).collect();
    others.sort_unstable();
    others.dedup();
    for v in others {
        let id = table.len();
        table.insert(v.to_string(), id);
    }
    table
}

/// Plot records for cells with at least one confirmed trigger.
pub fn plot_data(outputs: &[(GridCellKey, AlgorithmOutput)]) -> Result<PlotData> {
    let mut sorted: Vec<&(GridCellKey, AlgorithmOutput)> = outputs.iter().filter(|(_, o)| !o.pairs.is_empty()).collect();
    sorted.sort_by_key(|s| s.0);
    let mut records_2d = Vec::new();
    let mut records_3d = Vec::new();
    for (key, out) in sorted {
        let height = height_km(key.pressure_level)
            .ok_or_else(|| Error::Schema(format!("no height for pressure level {}", key.pressure_level)))?;
        let mut triggers: Vec<String> = out.pairs.iter().map(|p| p.trigger.clone()).collect();
        triggers.sort();
        triggers.dedup();
        for t in &triggers {
            records_3d.push(Plot3dRecord {
                longitude: key.longitude,
                latitude: key.latitude,
                height_km: height,
                pressure_level: key.pressure_level,
                trigger: t.clone(),
            });
        }
        records_2d.push(Plot2dRecord {
            pressure_level: key.pressure_level,
            longitude: key.longitude,
            latitude: key.latitude,
            triggers,
        });
    }
    let colors = color_table(records_3d.iter().map(|r| r.trigger.as_str()));
    Ok(PlotData {
        colors,
        records_2d,
        records_3d,
    })
}

fn write_jsonl<W: Write, T: Serialize>(mut w: W, header: &PlotHeader, records: &[T]) -> std::io::Result<()> {
    writeln!(w, "{}", serde_json::to_string(header).map_err(std::io::Error::other)?)?;
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r).map_err(std::io::Error::other)?)?;
    }
    w.flush()
}

fn header(data: &PlotData, schema: &str) -> PlotHeader {
    PlotHeader {
        schema: schema.to_string(),
        version: PLOT_VERSION,
        colors: data.colors.clone(),
    }
}

pub fn write_plot<W2: Write, W3: Write>(data: &PlotData, writer_2d: W2, writer_3d: W3) -> Result<()> {
    write_jsonl(writer_2d, &header(data, PLOT2D_SCHEMA), &data.records_2d).map_err(|e| Error::io("plot2d", e))?;
    write_jsonl(writer_3d, &header(data, PLOT3D_SCHEMA), &data.records_3d).map_err(|e| Error::io("plot3d", e))
}

pub fn write_plotdata(
    outputs: &[(GridCellKey, AlgorithmOutput)],
    path_2d: impl AsRef<Path>,
    path_3d: impl AsRef<Path>,
) -> Result<()> {
    let data = plot_data(outputs)?;
    let (p2, p3) = (path_2d.as_ref(), path_3d.as_ref());
    let create = |p: &Path| {
        std::fs::File::create(p)
            .map(std::io::BufWriter::new)
            .map_err(|e| Error::io(p, e))
    };
    write_jsonl(create(p2)?, &header(&data, PLOT2D_SCHEMA), &data.records_2d).map_err(|e| Error::io(p2, e))?;
    write_jsonl(create(p3)?, &header(&data, PLOT3D_SCHEMA), &data.records_3d).map_err(|e| Error::io(p3, e))
}

fn read_jsonl<R: Read, T: for<'de> Deserialize<'de>>(reader: R, schema: &str) -> Result<(PlotHeader, Vec<T>)> {
    let mut lines = BufReader::new(reader).lines();
    let parse_err = |e: serde_json::Error| Error::Schema(e.to_string());
    let first = lines
        .next()
        .ok_or_else(|| Error::Schema("empty plot-data file".into()))?
        .map_err(|e| Error::io(schema, e))?;
    let header: PlotHeader = serde_json::from_str(&first).map_err(parse_err)?;
    if header.schema != schema || header.version != PLOT_VERSION {
        return Err(Error::Schema(format!(
            "expected {schema} v{PLOT_VERSION}, found {} v{}",
            header.schema, header.version
        )));
    }
    let mut records = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(schema, e))?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line).map_err(parse_err)?);
        }
    }
    Ok((header, records))
}

pub fn read_plot2d<R: Read>(reader: R) -> Result<(PlotHeader, Vec<Plot2dRecord>)> {
    read_jsonl(reader, PLOT2D_SCHEMA)
}

pub fn read_plot3d<R: Read>(reader: R) -> Result<(PlotHeader, Vec<Plot3dRecord>)> {
    read_jsonl(reader, PLOT3D_SCHEMA)
}

/// Reads both files back into one [`PlotData`]; the color tables must agree.
pub fn read_plotdata(path_2d: impl AsRef<Path>, path_3d: impl AsRef<Path>) -> Result<PlotData> {
    let open = |p: &Path| std::fs::File::open(p).map_err(|e| Error::io(p, e));
    let (h2, records_2d) = read_plot2d(open(path_2d.as_ref())?)?;
    let (h3, records_3d) = read_plot3d(open(path_3d.as_ref())?)?;
    if h2.colors != h3.colors {
        return Err(Error::Schema("2D and 3D color tables differ".into()));
    }
    Ok(PlotData {
        colors: h2.colors,
        records_2d,
        records_3d,
    })
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { message, .. } => Error::io(path, message),
        other => other,
    }
}
