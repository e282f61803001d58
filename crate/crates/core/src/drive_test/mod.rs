//! Drive-test post-processing: scanner log ingestion, distance resampling,
//! Lee local-mean filtering and UE speed-test statistics.

mod lee;
mod stats;

use serde::{Deserialize, Serialize};

pub use lee::{
    fading_residual, lee_local_mean, resample_route, resample_uniform, LeeParams, Residual, SegmentSpread,
    UniformSeries, DEFAULT_SEGMENT_M,
};
pub use stats::{parse_ue_csv, summarize, throughput_stats, MetricSummary, StatsSummary, UeTestSample, CLT_MIN_SAMPLES};

use crate::error::{Error, Result};
use crate::geo::{cumulative_route_distance, GeoPoint, Route};
use crate::radio_math::{db_to_linear, linear_to_db};

pub const BEAM_INDEX_MAX: u8 = 7;
pub const NRSRP_MIN_DBM: f64 = -160.0;
pub const NRSRP_MAX_DBM: f64 = -20.0;
/// NRSRQ reporting range, dB.
pub const NRSRQ_MIN_DB: f64 = -43.0;
pub const NRSRQ_MAX_DB: f64 = 20.0;

pub const SCANNER_COLUMNS: [&str; 6] = ["timestamp_ms", "lat", "lon", "beam_index", "nrsrp_dbm", "nrsrq_db"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScannerSample {
    pub timestamp_ms: i64,
    pub position: GeoPoint,
    pub beam_index: u8,
    pub nrsrp_dbm: f64,
    pub nrsrq_db: f64,
}

impl ScannerSample {
    /// Reasons this sample fails the plausibility gates, if any.
    pub fn implausibility(&self) -> Option<String> {
        if let Err(e) = self.position.validate() {
            return Some(e.to_string());
        }
        if self.beam_index > BEAM_INDEX_MAX {
            return Some(format!("beam index {} outside 0..{BEAM_INDEX_MAX}", self.beam_index));
        }
        if !(NRSRP_MIN_DBM..=NRSRP_MAX_DBM).contains(&self.nrsrp_dbm) {
            return Some(format!(
                "NRSRP {} dBm outside [{NRSRP_MIN_DBM}, {NRSRP_MAX_DBM}]",
                self.nrsrp_dbm
            ));
        }
        if !(NRSRQ_MIN_DB..=NRSRQ_MAX_DB).contains(&self.nrsrq_db) {
            return Some(format!("NRSRQ {} dB outside [{NRSRQ_MIN_DB}, {NRSRQ_MAX_DB}]", self.nrsrq_db));
        }
        None
    }
}

/// A non-fatal remark about a specific input row (1-based file line).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

/// Which NRSRP series to extract from a multi-beam log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SeriesMode {
    /// Strongest beam at each logged position.
    #[default]
    BestBeam,
    /// A single SSB beam.
    Beam(u8),
}

/// One NRSRP reading placed along the route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredPoint {
    pub distance_m: f64,
    pub position: GeoPoint,
    pub nrsrp_dbm: f64,
}

/// Validated, time-ordered scanner samples and the route they trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveLog {
    samples: Vec<ScannerSample>,
    route: Route,
}

impl DriveLog {
    /// Builds a log, sorting by timestamp (stable).
    pub fn new(mut samples: Vec<ScannerSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Insufficient("no samples".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if let Some(why) = s.implausibility() {
                return Err(Error::domain(format!("sample {i}: {why}")));
            }
        }
        samples.sort_by_key(|s| s.timestamp_ms);
        let positions: Vec<GeoPoint> = samples.iter().map(|s| s.position).collect();
        let route = cumulative_route_distance(&positions)?;
        Ok(DriveLog { samples, route })
    }

    pub fn samples(&self) -> &[ScannerSample] {
        &self.samples
    }

    pub fn route(&self) -> &Route {
        &self.route
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// NRSRP readings along the route for the requested beam selection.
    pub fn measurement_points(&self, mode: SeriesMode) -> Vec<MeasuredPoint> {
        let dist = self.route.cumulative_m();
        let mut out: Vec<MeasuredPoint> = Vec::new();
        let mut last_key: Option<(i64, GeoPoint)> = None;
        for (i, s) in self.samples.iter().enumerate() {
            match mode {
                SeriesMode::Beam(b) if s.beam_index != b => continue,
                SeriesMode::Beam(_) => {}
                SeriesMode::BestBeam => {
                    // samples sharing a timestamp and position are one scan across beams
                    let key = (s.timestamp_ms, s.position);
                    if last_key == Some(key) {
                        let p = out.last_mut().expect("previous point exists");
                        p.nrsrp_dbm = p.nrsrp_dbm.max(s.nrsrp_dbm);
                        continue;
                    }
                    last_key = Some(key);
                }
            }
            out.push(MeasuredPoint {
                distance_m: dist[i],
                position: s.position,
                nrsrp_dbm: s.nrsrp_dbm,
            });
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SCANNER_COLUMNS).expect("in-memory write");
        for s in &self.samples {
            w.write_record([
                s.timestamp_ms.to_string(),
                s.position.lat.to_string(),
                s.position.lon.to_string(),
                s.beam_index.to_string(),
                s.nrsrp_dbm.to_string(),
                s.nrsrq_db.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Columns of a point series file (envelope or measured points).
pub const POINT_COLUMNS: [&str; 4] = ["distance_m", "lat", "lon", "nrsrp_dbm"];

pub fn points_to_csv(points: &[MeasuredPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(POINT_COLUMNS).expect("in-memory write");
    for p in points {
        w.write_record([
            p.distance_m.to_string(),
            p.position.lat.to_string(),
            p.position.lon.to_string(),
            p.nrsrp_dbm.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Parses a `distance_m,lat,lon,nrsrp_dbm` point series (columns in any order).
pub fn parse_points_csv(text: &str, source: &str) -> Result<Vec<MeasuredPoint>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(source, 1, format!("unreadable header: {e}")))?
        .clone();
    let mut cols = [0; 4];
    for (slot, name) in POINT_COLUMNS.iter().enumerate() {
        cols[slot] = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::parse(source, 1, format!("missing column '{name}'")))?;
    }
    let mut out: Vec<MeasuredPoint> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(source, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let f = |slot: usize| -> Result<f64> {
            let v: f64 = field(&rec, cols[slot], POINT_COLUMNS[slot], line, source)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::parse(source, line, format!("field '{}' must be finite", POINT_COLUMNS[slot])))
            }
        };
        let point = MeasuredPoint {
            distance_m: f(0)?,
            position: GeoPoint { lat: f(1)?, lon: f(2)? },
            nrsrp_dbm: f(3)?,
        };
        point
            .position
            .validate()
            .map_err(|e| Error::parse(source, line, e.to_string()))?;
        if out.last().is_some_and(|q| point.distance_m < q.distance_m) {
            return Err(Error::parse(source, line, "distance_m must be nondecreasing"));
        }
        out.push(point);
    }
    if out.is_empty() {
        return Err(Error::Insufficient(format!("{source}: no points")));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLog {
    pub log: DriveLog,
    pub diagnostics: Vec<Diagnostic>,
    pub rejected: usize,
    pub collapsed: usize,
}

fn column_index(headers: &csv::StringRecord, source: &str) -> Result<[usize; 6]> {
    let mut idx = [0; 6];
    for (slot, name) in SCANNER_COLUMNS.iter().enumerate() {
        idx[slot] = headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::parse(source, 1, format!("missing column '{name}'")))?;
    }
    Ok(idx)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, col: usize, name: &str, line: usize, source: &str) -> Result<T> {
    let raw = rec
        .get(col)
        .ok_or_else(|| Error::parse(source, line, format!("missing field '{name}'")))?
        .trim();
    raw.parse()
        .map_err(|_| Error::parse(source, line, format!("field '{name}' = '{raw}' is not a valid number")))
}

/// Parses a scanner CSV (`timestamp_ms,lat,lon,beam_index,nrsrp_dbm,nrsrq_db`).
///
/// Implausible rows are dropped with a diagnostic. Rows repeating the
/// timestamp, position and beam of an earlier row are merged into their
/// linear-power mean.
pub fn parse_scanner_csv(text: &str) -> Result<ParsedLog> {
    parse_scanner_csv_named(text, "<scanner csv>")
}

pub fn parse_scanner_csv_named(text: &str, source: &str) -> Result<ParsedLog> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(source, 1, format!("unreadable header: {e}")))?
        .clone();
    let cols = column_index(&headers, source)?;

    let mut diagnostics = Vec::new();
    let mut rejected = 0;
    let mut rows: Vec<(usize, ScannerSample)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(source, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let beam: i64 = field(&rec, cols[3], "beam_index", line, source)?;
        let sample = ScannerSample {
            timestamp_ms: field(&rec, cols[0], "timestamp_ms", line, source)?,
            position: GeoPoint {
                lat: field(&rec, cols[1], "lat", line, source)?,
                lon: field(&rec, cols[2], "lon", line, source)?,
            },
            beam_index: u8::try_from(beam).unwrap_or(u8::MAX),
            nrsrp_dbm: field(&rec, cols[4], "nrsrp_dbm", line, source)?,
            nrsrq_db: field(&rec, cols[5], "nrsrq_db", line, source)?,
        };
        let why = if (0..=i64::from(BEAM_INDEX_MAX)).contains(&beam) {
            sample.implausibility()
        } else {
            Some(format!("beam index {beam} outside 0..{BEAM_INDEX_MAX}"))
        };
        if let Some(why) = why {
            diagnostics.push(Diagnostic {
                line,
                message: format!("row rejected: {why}"),
            });
            rejected += 1;
            continue;
        }
        rows.push((line, sample));
    }
    if rows.is_empty() {
        return Err(Error::Insufficient(format!("{source}: no samples")));
    }

    if rows.windows(2).any(|w| w[1].1.timestamp_ms < w[0].1.timestamp_ms) {
        diagnostics.push(Diagnostic {
            line: 0,
            message: "rows were not in time order and have been sorted by timestamp".into(),
        });
        rows.sort_by_key(|(_, s)| s.timestamp_ms);
    }

    // merge exact repeats (same timestamp, position and beam)
    let mut merged: Vec<(ScannerSample, f64, f64, usize)> = Vec::with_capacity(rows.len());
    let mut collapsed = 0;
    for (line, s) in rows {
        let same_time_from = merged.partition_point(|m| m.0.timestamp_ms < s.timestamp_ms);
        let existing = merged[same_time_from..]
            .iter_mut()
            .find(|m| m.0.position == s.position && m.0.beam_index == s.beam_index);
        match existing {
            Some(m) => {
                m.1 += db_to_linear(s.nrsrp_dbm);
                m.2 += db_to_linear(s.nrsrq_db);
                m.3 += 1;
                collapsed += 1;
                diagnostics.push(Diagnostic {
                    line,
                    message: "duplicate timestamp, position and beam merged by linear-power mean".into(),
                });
            }
            None => merged.push((s, db_to_linear(s.nrsrp_dbm), db_to_linear(s.nrsrq_db), 1)),
        }
    }
    let samples = merged
        .into_iter()
        .map(|(mut s, p, q, n)| {
            if n > 1 {
                s.nrsrp_dbm = linear_to_db(p / n as f64).expect("positive power");
                s.nrsrq_db = linear_to_db(q / n as f64).expect("positive ratio");
            }
            s
        })
        .collect();

    Ok(ParsedLog {
        log: DriveLog::new(samples)?,
        diagnostics,
        rejected,
        collapsed,
    })
}
