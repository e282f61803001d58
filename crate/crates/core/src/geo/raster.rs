//! Georeferenced raster grids and the ESRI ASCII grid interchange format.
//!
//! The lower-left corner is a WGS84 point while the cell size is in meters;
//! cells are laid out in the local frame of [`geo_to_enu`] around that
//! corner. Values are row-major with the northernmost row first, which is
//! also the order rows appear in an `.asc` file.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{enu_to_geo, geo_to_enu, EnuPoint, GeoPoint};
use crate::error::{Error, Result};

pub const DEFAULT_NODATA: f64 = -9999.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterGrid {
    origin: GeoPoint,
    cell_size: f64,
    ncols: usize,
    nrows: usize,
    nodata: f64,
    values: Vec<f64>,
}

impl RasterGrid {
    pub fn new(
        origin: GeoPoint,
        cell_size: f64,
        ncols: usize,
        nrows: usize,
        nodata: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        origin.validate()?;
        if ncols == 0 || nrows == 0 {
            return Err(Error::config(format!(
                "raster dimensions must be positive, got {ncols}x{nrows}"
            )));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::config(format!("cell size must be positive, got {cell_size}")));
        }
        if values.len() != ncols * nrows {
            return Err(Error::config(format!(
                "raster holds {} values, expected {}x{} = {}",
                values.len(),
                ncols,
                nrows,
                ncols * nrows
            )));
        }
        Ok(RasterGrid {
            origin,
            cell_size,
            ncols,
            nrows,
            nodata,
            values,
        })
    }

    /// A grid with every cell set to `value`.
    pub fn filled(
        origin: GeoPoint,
        cell_size: f64,
        ncols: usize,
        nrows: usize,
        nodata: f64,
        value: f64,
    ) -> Result<Self> {
        Self::new(origin, cell_size, ncols, nrows, nodata, vec![value; ncols * nrows])
    }

    /// Same georeferencing as `self`, new contents.
    pub fn with_values(&self, nodata: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(self.origin, self.cell_size, self.ncols, self.nrows, nodata, values)
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata || (v.is_nan() && self.nodata.is_nan())
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.ncols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.values[row * self.ncols + col] = v;
    }

    /// True when both grids cover the same cells.
    pub fn same_layout(&self, other: &RasterGrid) -> bool {
        self.origin == other.origin
            && self.cell_size == other.cell_size
            && self.ncols == other.ncols
            && self.nrows == other.nrows
    }

    /// Width and height of the grid in meters.
    pub fn extent_m(&self) -> (f64, f64) {
        (
            self.ncols as f64 * self.cell_size,
            self.nrows as f64 * self.cell_size,
        )
    }

    /// Center of a cell in the local frame anchored at the lower-left corner.
    pub fn cell_center_enu(&self, row: usize, col: usize) -> EnuPoint {
        EnuPoint {
            x: (col as f64 + 0.5) * self.cell_size,
            y: ((self.nrows - 1 - row) as f64 + 0.5) * self.cell_size,
        }
    }

    pub fn cell_center(&self, row: usize, col: usize) -> GeoPoint {
        enu_to_geo(self.origin, self.cell_center_enu(row, col))
    }

    /// Local-frame coordinates of `p` relative to the lower-left corner.
    pub fn to_local(&self, p: GeoPoint) -> Result<EnuPoint> {
        geo_to_enu(self.origin, p)
    }

    /// Cell containing a local-frame point, if inside the extent.
    pub fn locate_enu(&self, p: EnuPoint) -> Option<(usize, usize)> {
        let col = (p.x / self.cell_size).floor();
        let row_from_south = (p.y / self.cell_size).floor();
        if !(col >= 0.0 && row_from_south >= 0.0) {
            return None;
        }
        let (col, row_from_south) = (col as usize, row_from_south as usize);
        if col >= self.ncols || row_from_south >= self.nrows {
            return None;
        }
        Some((self.nrows - 1 - row_from_south, col))
    }

    pub fn locate(&self, p: GeoPoint) -> Option<(usize, usize)> {
        self.to_local(p).ok().and_then(|e| self.locate_enu(e))
    }

    /// Value of the cell containing `p`; `None` outside the extent or on a nodata cell.
    pub fn value_at(&self, p: GeoPoint) -> Option<f64> {
        let (r, c) = self.locate(p)?;
        let v = self.get(r, c);
        (!self.is_nodata(v)).then_some(v)
    }
}

/// Nearest-cell lookup; returns the grid's nodata value outside its extent.
pub fn raster_lookup(grid: &RasterGrid, p: GeoPoint) -> f64 {
    match grid.locate(p) {
        Some((r, c)) => grid.get(r, c),
        None => grid.nodata,
    }
}

const HEADER_KEYS: [&str; 6] = [
    "ncols",
    "nrows",
    "xllcorner",
    "yllcorner",
    "cellsize",
    "nodata_value",
];

/// Parses an ESRI ASCII grid. `xllcorner`/`yllcorner` are read as
/// longitude/latitude in degrees and `cellsize` as meters.
pub fn parse_ascii_grid(text: &str) -> Result<RasterGrid> {
    parse_ascii_grid_named(text, "<grid>")
}

/// As [`parse_ascii_grid`], naming `source_name` in errors.
pub fn parse_ascii_grid_named(text: &str, source_name: &str) -> Result<RasterGrid> {
    let err = |line: usize, msg: String| Error::parse(source_name, line, msg);

    let mut header: [Option<f64>; 6] = [None; 6];
    let mut lines = text.lines().enumerate().peekable();

    // Header lines are `key value`; the first line starting with a number ends the header.
    while let Some(&(idx, line)) = lines.peek() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            lines.next();
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let key = parts.next().unwrap_or_default();
        if key.parse::<f64>().is_ok() {
            break;
        }
        let lower = key.to_ascii_lowercase();
        let Some(slot) = HEADER_KEYS.iter().position(|k| *k == lower) else {
            if lower == "xllcenter" || lower == "yllcenter" {
                return Err(err(idx + 1, format!("{key} is not supported, use xllcorner/yllcorner")));
            }
            return Err(err(idx + 1, format!("unknown header key '{key}'")));
        };
        let value = parts
            .next()
            .ok_or_else(|| err(idx + 1, format!("header key '{key}' has no value")))?;
        if parts.next().is_some() {
            return Err(err(idx + 1, format!("header key '{key}' has trailing tokens")));
        }
        let value: f64 = value
            .parse()
            .map_err(|_| err(idx + 1, format!("header value '{value}' for '{key}' is not a number")))?;
        if header[slot].replace(value).is_some() {
            return Err(err(idx + 1, format!("duplicate header key '{key}'")));
        }
        lines.next();
    }

    let header_end = lines.peek().map(|(i, _)| *i + 1).unwrap_or(text.lines().count() + 1);
    let required = |slot: usize| {
        header[slot].ok_or_else(|| err(header_end, format!("missing header key '{}'", HEADER_KEYS[slot])))
    };
    let as_count = |slot: usize| -> Result<usize> {
        let v = required(slot)?;
        if v.fract() != 0.0 || v < 1.0 {
            return Err(err(header_end, format!("{} must be a positive integer, got {v}", HEADER_KEYS[slot])));
        }
        Ok(v as usize)
    };
    let ncols = as_count(0)?;
    let nrows = as_count(1)?;
    let lon = required(2)?;
    let lat = required(3)?;
    let cell_size = required(4)?;
    let nodata = header[5].unwrap_or(DEFAULT_NODATA);

    let expected = ncols * nrows;
    let mut values = Vec::with_capacity(expected);
    let mut last_line = header_end;
    for (idx, line) in lines {
        last_line = idx + 1;
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| err(idx + 1, format!("cell value '{tok}' is not a number")))?;
            if values.len() == expected {
                return Err(err(idx + 1, format!("more than the {expected} declared values")));
            }
            values.push(v);
        }
    }
    if values.len() < expected {
        return Err(err(
            last_line,
            format!(
                "expected {expected} values ({ncols}x{nrows}), found {}: short by {}",
                values.len(),
                expected - values.len()
            ),
        ));
    }

    let origin = GeoPoint { lat, lon };
    origin
        .validate()
        .map_err(|e| err(header_end, format!("invalid lower-left corner: {e}")))?;
    RasterGrid::new(origin, cell_size, ncols, nrows, nodata, values)
        .map_err(|e| err(header_end, e.to_string()))
}

/// Serializes a grid so that [`parse_ascii_grid`] recovers it bit-exactly.
pub fn write_ascii_grid(grid: &RasterGrid) -> String {
    let mut out = String::with_capacity(grid.values.len() * 8 + 128);
    let _ = writeln!(out, "ncols         {}", grid.ncols);
    let _ = writeln!(out, "nrows         {}", grid.nrows);
    let _ = writeln!(out, "xllcorner     {}", grid.origin.lon);
    let _ = writeln!(out, "yllcorner     {}", grid.origin.lat);
    let _ = writeln!(out, "cellsize      {}", grid.cell_size);
    let _ = writeln!(out, "NODATA_value  {}", grid.nodata);
    for row in grid.values.chunks(grid.ncols) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}
