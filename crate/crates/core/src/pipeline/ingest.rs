use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{CellMeta, TimeSeriesPanel};

/// Pressure levels (hPa) the analysis runs on.
pub const PRESSURE_LEVELS: [u32; 3] = [500, 700, 975];

const KEY_COLUMNS: [&str; 4] = ["time", "longitude", "latitude", "pressure_level"];

/// One grid location at one pressure level. Orders by level, then latitude,
/// then longitude.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridCellKey {
    pub longitude: f64,
    pub latitude: f64,
    pub pressure_level: u32,
}

impl GridCellKey {
    pub fn new(longitude: f64, latitude: f64, pressure_level: u32) -> Result<Self> {
        if !PRESSURE_LEVELS.contains(&pressure_level) {
            return Err(Error::Schema(format!(
                "pressure level {pressure_level} hPa is not one of {PRESSURE_LEVELS:?}"
            )));
        }
        if !(longitude.is_finite() && latitude.is_finite()) {
            return Err(Error::Schema("non-finite cell coordinates".into()));
        }
        Ok(Self {
            longitude,
            latitude,
            pressure_level,
        })
    }

    pub fn meta(&self) -> CellMeta {
        CellMeta {
            longitude: self.longitude,
            latitude: self.latitude,
            pressure_level: self.pressure_level,
        }
    }
}

impl From<CellMeta> for GridCellKey {
    fn from(m: CellMeta) -> Self {
        Self {
            longitude: m.longitude,
            latitude: m.latitude,
            pressure_level: m.pressure_level,
        }
    }
}

impl Ord for GridCellKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.pressure_level
            .cmp(&other.pressure_level)
            .then(self.latitude.total_cmp(&other.latitude))
            .then(self.longitude.total_cmp(&other.longitude))
    }
}

impl PartialOrd for GridCellKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for GridCellKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for GridCellKey {}

impl fmt::Display for GridCellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {} hPa)", self.longitude, self.latitude, self.pressure_level)
    }
}

/// Which variable columns to read. `None` reads every non-key column.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub variables: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    /// Variable columns, in file order.
    pub variables: Vec<String>,
    pub cells: Vec<(GridCellKey, TimeSeriesPanel)>,
    /// Cells dropped during ingestion and why.
    pub skipped: Vec<(GridCellKey, String)>,
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Ingested> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, schema)
}

type Rows = Vec<(i64, Vec<Option<f64>>)>;

/// Groups rows by cell, sorts each cell by time and checks for a constant
/// sampling interval.
pub fn ingest_reader<R: Read>(reader: R, schema: &CsvSchema) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Schema(e.to_string()))?.clone();
    let position = |name: &str| headers.iter().position(|h| h == name);
    let mut key_idx = [0usize; 4];
    for (slot, name) in key_idx.iter_mut().zip(KEY_COLUMNS) {
        *slot = position(name).ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))?;
    }
    let variables: Vec<String> = match &schema.variables {
        Some(vars) => vars.clone(),
        None => headers
            .iter()
            .filter(|h| !KEY_COLUMNS.contains(h))
            .map(String::from)
            .collect(),
    };
    if variables.is_empty() {
        return Err(Error::Schema("no variable columns".into()));
    }
    let var_idx = variables
        .iter()
        .map(|v| position(v).ok_or_else(|| Error::Schema(format!("missing variable column `{v}`"))))
        .collect::<Result<Vec<_>>>()?;

    let mut by_cell: BTreeMap<GridCellKey, Rows> = BTreeMap::new();
    let mut unsupported: BTreeMap<GridCellKey, String> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Schema(format!("line {line}: {e}")))?;
        let field = |j: usize| record.get(j).unwrap_or("");
        let number = |j: usize, what: &str| {
            field(j)
                .parse::<f64>()
                .map_err(|_| Error::Schema(format!("line {line}: bad {what} `{}`", field(j))))
        };
        let time = parse_time(field(key_idx[0])).ok_or_else(|| {
            Error::Schema(format!("line {line}: bad time `{}`", field(key_idx[0])))
        })?;
        let lon = number(key_idx[1], "longitude")?;
        let lat = number(key_idx[2], "latitude")?;
        let level = number(key_idx[3], "pressure_level")?;
        if level.fract() != 0.0 || level < 0.0 {
            return Err(Error::Schema(format!("line {line}: bad pressure_level `{level}`")));
        }
        let values = var_idx.iter().map(|&j| parse_value(field(j))).collect::<Option<Vec<_>>>();
        let values = values.ok_or_else(|| Error::Schema(format!("line {line}: non-numeric value")))?;
        let key = match GridCellKey::new(lon, lat, level as u32) {
            Ok(key) => key,
            Err(_) => {
                let key = GridCellKey {
                    longitude: lon,
                    latitude: lat,
                    pressure_level: level as u32,
                };
                unsupported.insert(key, format!("pressure level {} hPa is not analysed", level as u32));
                continue;
            }
        };
        by_cell.entry(key).or_default().push((time, values));
    }

    let mut cells = Vec::new();
    let mut skipped: Vec<(GridCellKey, String)> = unsupported.into_iter().collect();
    for (key, mut rows) in by_cell {
        rows.sort_by_key(|(t, _)| *t);
        check_spacing(&key, &rows)?;
        if rows.iter().any(|(_, v)| v.iter().any(Option::is_none)) {
            skipped.push((key, "missing values".to_string()));
            continue;
        }
        let timestamps = rows.iter().map(|(t, _)| *t).collect();
        let columns = (0..variables.len())
            .map(|j| rows.iter().map(|(_, v)| v[j].expect("checked above")).collect())
            .collect();
        match TimeSeriesPanel::new(variables.clone(), columns, timestamps) {
            Ok(panel) => cells.push((key, panel.with_cell_meta(key.meta()))),
            Err(e) => skipped.push((key, e.to_string())),
        }
    }
    skipped.sort_by_key(|s| s.0);
    Ok(Ingested {
        variables,
        cells,
        skipped,
    })
}

/// Writes panels in the input format read by [`ingest_reader`]. Every panel
/// must have the same variables; timestamps are written as UTC.
pub fn write_cells_csv<W: std::io::Write>(cells: &[(GridCellKey, TimeSeriesPanel)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| Error::io("cells csv", e);
    let names = cells.first().map(|(_, p)| p.names().to_vec()).unwrap_or_default();
    let header = KEY_COLUMNS.iter().map(|s| s.to_string()).chain(names.iter().cloned());
    w.write_record(header).map_err(fail)?;
    for (key, panel) in cells {
        if panel.names() != names.as_slice() {
            return Err(Error::Schema(format!("cell {key} has different variables")));
        }
        for (i, &t) in panel.timestamps().iter().enumerate() {
            let time = DateTime::from_timestamp(t, 0)
                .ok_or_else(|| Error::Schema(format!("timestamp {t} out of range")))?
                .format("%Y-%m-%dT%H:%M:%SZ")
                .to_string();
            let mut row = vec![
                time,
                key.longitude.to_string(),
                key.latitude.to_string(),
                key.pressure_level.to_string(),
            ];
            row.extend(panel.columns().iter().map(|c| c[i].to_string()));
            w.write_record(&row).map_err(fail)?;
        }
    }
    w.flush().map_err(|e| Error::io("cells csv", e))
}

fn check_spacing(key: &GridCellKey, rows: &Rows) -> Result<()> {
    let mut step = None;
    for w in rows.windows(2) {
        let dt = w[1].0 - w[0].0;
        if dt == 0 {
            return Err(Error::NonUniformSampling(format!("{key}: duplicate timestamp {}", w[0].0)));
        }
        match step {
            None => step = Some(dt),
            Some(s) if s != dt => {
                return Err(Error::NonUniformSampling(format!("{key}: step {dt} s after {} s steps", s)));
            }
            _ => {}
        }
    }
    Ok(())
}

/// `None` for non-numeric text; `Some(None)` for a missing value.
fn parse_value(s: &str) -> Option<Option<f64>> {
    if s.is_empty() || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("na") {
        return Some(None);
    }
    s.parse::<f64>().ok().map(|v| v.is_finite().then_some(v))
}

/// ISO-8601 timestamp to seconds since the Unix epoch (UTC when no offset is given).
pub fn parse_time(s: &str) -> Option<i64> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp());
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.and_utc().timestamp())
}
