use crate::error::{Error, Result};
use crate::panel::TimeSeriesPanel;

pub fn wind_speed(u: f64, v: f64) -> f64 {
    u.hypot(v)
}

/// Meteorological direction the wind blows from, degrees clockwise from north
/// in `[0, 360)`. Calm air is assigned 0.
pub fn wind_direction(u: f64, v: f64) -> f64 {
    if u == 0.0 && v == 0.0 {
        return 0.0;
    }
    let wd = (180.0 + u.atan2(v).to_degrees()).rem_euclid(360.0);
    // rem_euclid can round up to exactly 360
    if wd >= 360.0 {
        0.0
    } else {
        wd
    }
}

/// Adds `ws`, `wd` and `sin_wd` computed from the `u` and `v` columns.
pub fn derive_wind_vars(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    let u = panel.column("u").map_err(|_| Error::MissingComponent("u".into()))?;
    let v = panel.column("v").map_err(|_| Error::MissingComponent("v".into()))?;
    let ws = u.iter().zip(v).map(|(&a, &b)| wind_speed(a, b)).collect();
    let wd: Vec<f64> = u.iter().zip(v).map(|(&a, &b)| wind_direction(a, b)).collect();
    let sin_wd = wd.iter().map(|d| d.to_radians().sin()).collect();
    panel
        .clone()
        .with_column("ws", ws)?
        .with_column("wd", wd)?
        .with_column("sin_wd", sin_wd)
}
