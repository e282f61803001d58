//! Distance resampling and Lee's local-mean estimator.
//!
//! The received envelope is modeled as a slowly varying local mean times a
//! unit-mean fast-fading factor. Averaging the envelope over a window of
//! `2L` wavelengths, sampled every `d` wavelengths, removes the fast factor
//! and leaves the local mean.

use serde::{Deserialize, Serialize};

use super::{DriveLog, MeasuredPoint, SeriesMode};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::radio_math::{amplitude_to_dbm, db_to_linear, dbm_to_amplitude, linear_to_db, wavelength};

/// Segment length for the fast-fading spread report.
pub const DEFAULT_SEGMENT_M: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeeParams {
    /// Averaging window `2L` in wavelengths.
    pub window_wavelengths: f64,
    /// Minimum samples each emitted average must contain (`N`).
    pub min_samples: usize,
    /// Sample spacing `d` in wavelengths.
    pub resample_wavelengths: f64,
    pub carrier_freq_mhz: f64,
}

impl Default for LeeParams {
    fn default() -> Self {
        LeeParams {
            window_wavelengths: 40.0,
            min_samples: 36,
            resample_wavelengths: 0.8,
            carrier_freq_mhz: 3500.0,
        }
    }
}

impl LeeParams {
    pub fn for_frequency(carrier_freq_mhz: f64) -> Self {
        LeeParams {
            carrier_freq_mhz,
            ..LeeParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        wavelength(self.carrier_freq_mhz)?;
        if !(self.window_wavelengths.is_finite() && self.window_wavelengths > 0.0) {
            return Err(Error::config(format!("window must be positive, got {} wavelengths", self.window_wavelengths)));
        }
        if !(self.resample_wavelengths.is_finite() && self.resample_wavelengths > 0.0) {
            return Err(Error::config(format!(
                "sample spacing must be positive, got {} wavelengths",
                self.resample_wavelengths
            )));
        }
        if self.min_samples == 0 {
            return Err(Error::config("minimum samples per window must be at least 1"));
        }
        if self.window_samples() < self.min_samples {
            return Err(Error::config(format!(
                "a {}λ window at {}λ spacing holds {} samples, fewer than the required {}",
                self.window_wavelengths,
                self.resample_wavelengths,
                self.window_samples(),
                self.min_samples
            )));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> Result<f64> {
        wavelength(self.carrier_freq_mhz)
    }

    /// Window length `2L` in meters.
    pub fn window_m(&self) -> Result<f64> {
        Ok(self.window_wavelengths * self.wavelength_m()?)
    }

    /// Sample spacing `d` in meters.
    pub fn spacing_m(&self) -> Result<f64> {
        Ok(self.resample_wavelengths * self.wavelength_m()?)
    }

    /// Samples per averaging window.
    pub fn window_samples(&self) -> usize {
        (self.window_wavelengths / self.resample_wavelengths).round() as usize
    }

    /// One-line human summary in centimeters.
    pub fn describe(&self) -> Result<String> {
        self.validate()?;
        Ok(format!(
            "f = {} MHz: λ = {:.2} cm, window {:.2} cm (2L = {}λ), spacing {:.2} cm (d = {}λ), window samples {} >= N = {}",
            self.carrier_freq_mhz,
            self.wavelength_m()? * 100.0,
            self.window_m()? * 100.0,
            self.window_wavelengths,
            self.spacing_m()? * 100.0,
            self.resample_wavelengths,
            self.window_samples(),
            self.min_samples
        ))
    }
}

/// NRSRP sampled at a fixed spacing along the route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformSeries {
    start_m: f64,
    spacing_m: f64,
    nrsrp_dbm: Vec<f64>,
    positions: Vec<GeoPoint>,
}

impl UniformSeries {
    pub fn new(start_m: f64, spacing_m: f64, nrsrp_dbm: Vec<f64>, positions: Vec<GeoPoint>) -> Result<Self> {
        if !(spacing_m.is_finite() && spacing_m > 0.0) {
            return Err(Error::domain(format!("spacing must be positive, got {spacing_m}")));
        }
        if nrsrp_dbm.len() != positions.len() {
            return Err(Error::Mismatch(format!(
                "{} values but {} positions",
                nrsrp_dbm.len(),
                positions.len()
            )));
        }
        Ok(UniformSeries {
            start_m,
            spacing_m,
            nrsrp_dbm,
            positions,
        })
    }

    pub fn start_m(&self) -> f64 {
        self.start_m
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    pub fn values(&self) -> &[f64] {
        &self.nrsrp_dbm
    }

    pub fn positions(&self) -> &[GeoPoint] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.nrsrp_dbm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nrsrp_dbm.is_empty()
    }

    pub fn distance(&self, i: usize) -> f64 {
        self.start_m + i as f64 * self.spacing_m
    }

    pub fn distances(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.distance(i))
    }

    /// `distance_m,lat,lon,nrsrp_dbm` rows.
    pub fn to_csv(&self) -> String {
        super::points_to_csv(&self.points())
    }

    /// Points with their positions, e.g. to compare against a prediction.
    pub fn points(&self) -> Vec<MeasuredPoint> {
        (0..self.len())
            .map(|i| MeasuredPoint {
                distance_m: self.distance(i),
                position: self.positions[i],
                nrsrp_dbm: self.nrsrp_dbm[i],
            })
            .collect()
    }
}

/// Collapses runs at the same route distance into one point (linear-power mean).
fn collapse_stationary(points: &[MeasuredPoint]) -> Vec<MeasuredPoint> {
    let mut out: Vec<(MeasuredPoint, f64, usize)> = Vec::with_capacity(points.len());
    for p in points {
        match out.last_mut() {
            Some((q, sum, n)) if q.distance_m == p.distance_m => {
                *sum += db_to_linear(p.nrsrp_dbm);
                *n += 1;
                let _ = q;
            }
            _ => out.push((*p, db_to_linear(p.nrsrp_dbm), 1)),
        }
    }
    out.into_iter()
        .map(|(mut p, sum, n)| {
            if n > 1 {
                p.nrsrp_dbm = linear_to_db(sum / n as f64).expect("positive power");
            }
            p
        })
        .collect()
}

/// Resamples irregular route points at exact `spacing_m` steps from the
/// first point, interpolating linearly in the envelope (amplitude) domain.
pub fn resample_uniform(points: &[MeasuredPoint], spacing_m: f64) -> Result<UniformSeries> {
    if !(spacing_m.is_finite() && spacing_m > 0.0) {
        return Err(Error::domain(format!("spacing must be positive, got {spacing_m}")));
    }
    if points.is_empty() {
        return Err(Error::Insufficient("no points to resample".into()));
    }
    if points.windows(2).any(|w| w[1].distance_m < w[0].distance_m) {
        return Err(Error::domain("route distances must be nondecreasing"));
    }
    let pts = collapse_stationary(points);
    let start = pts[0].distance_m;
    let total = pts[pts.len() - 1].distance_m - start;
    let count = (total / spacing_m + 1e-9).floor() as usize + 1;

    let mut values = Vec::with_capacity(count);
    let mut positions = Vec::with_capacity(count);
    let mut j = 0;
    for k in 0..count {
        let d = start + k as f64 * spacing_m;
        while j + 2 < pts.len() && pts[j + 1].distance_m < d {
            j += 1;
        }
        if pts.len() == 1 {
            values.push(pts[0].nrsrp_dbm);
            positions.push(pts[0].position);
            continue;
        }
        let (a, b) = (&pts[j], &pts[j + 1]);
        let f = ((d - a.distance_m) / (b.distance_m - a.distance_m)).clamp(0.0, 1.0);
        let amp = (1.0 - f) * dbm_to_amplitude(a.nrsrp_dbm) + f * dbm_to_amplitude(b.nrsrp_dbm);
        values.push(amplitude_to_dbm(amp)?);
        positions.push(GeoPoint {
            lat: a.position.lat + f * (b.position.lat - a.position.lat),
            lon: a.position.lon + f * (b.position.lon - a.position.lon),
        });
    }
    UniformSeries::new(start, spacing_m, values, positions)
}

/// Resamples a drive log at the spacing `d` of `params`.
pub fn resample_route(log: &DriveLog, params: &LeeParams, mode: SeriesMode) -> Result<UniformSeries> {
    params.validate()?;
    let window = params.window_m()?;
    let points = log.measurement_points(mode);
    if points.is_empty() {
        return Err(Error::Insufficient(format!("no samples for {mode:?}")));
    }
    let length = points[points.len() - 1].distance_m - points[0].distance_m;
    if length < window {
        return Err(Error::Insufficient(format!(
            "route covers {length:.3} m but Lee averaging needs at least one window of {window:.4} m"
        )));
    }
    resample_uniform(&points, params.spacing_m()?)
}

/// Centered moving average of the envelope over `2L`.
///
/// Point `i` averages samples `[i − w/2, i − w/2 + w)` with `w` the window
/// sample count; points whose window would run past either end of the
/// series are not emitted.
pub fn lee_local_mean(series: &UniformSeries, params: &LeeParams) -> Result<UniformSeries> {
    params.validate()?;
    let spacing = params.spacing_m()?;
    if (series.spacing_m - spacing).abs() > 1e-9 * spacing {
        return Err(Error::Mismatch(format!(
            "series spacing {} m does not match Lee spacing {} m",
            series.spacing_m, spacing
        )));
    }
    if series.nrsrp_dbm.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("series contains non-finite values"));
    }
    let w = params.window_samples();
    if series.len() < w {
        return Err(Error::Insufficient(format!(
            "series has {} samples, one window needs {w}",
            series.len()
        )));
    }
    let half = w / 2;
    let amps: Vec<f64> = series.nrsrp_dbm.iter().map(|v| dbm_to_amplitude(*v)).collect();
    let first = half;
    let last = series.len() - (w - half);
    let mut values = Vec::with_capacity(last - first + 1);
    for i in first..=last {
        let window = &amps[i - half..i - half + w];
        let mean = window.iter().sum::<f64>() / w as f64;
        values.push(amplitude_to_dbm(mean)?);
    }
    UniformSeries::new(
        series.distance(first),
        series.spacing_m,
        values,
        series.positions[first..=last].to_vec(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpread {
    pub start_m: f64,
    pub samples: usize,
    pub peak_to_peak_db: f64,
}

/// Fast-fading residual `measured − local mean` at each envelope point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub distance_m: Vec<f64>,
    pub residual_db: Vec<f64>,
    pub segments: Vec<SegmentSpread>,
}

impl Residual {
    /// Mean of the residual as an envelope ratio, expressed in dB.
    pub fn linear_mean_db(&self) -> f64 {
        let n = self.residual_db.len() as f64;
        let m = self.residual_db.iter().map(|r| dbm_to_amplitude(*r)).sum::<f64>() / n;
        20.0 * m.log10()
    }

    /// `distance_m,residual_db` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("distance_m,residual_db\n");
        for (d, r) in self.distance_m.iter().zip(&self.residual_db) {
            out.push_str(&format!("{d},{r}\n"));
        }
        out
    }

    /// `start_m,samples,peak_to_peak_db` rows.
    pub fn segments_csv(&self) -> String {
        let mut out = String::from("start_m,samples,peak_to_peak_db\n");
        for s in &self.segments {
            out.push_str(&format!("{},{},{}\n", s.start_m, s.samples, s.peak_to_peak_db));
        }
        out
    }

    /// Share of segments whose peak-to-peak spread reaches `db`.
    pub fn fraction_of_segments_at_least(&self, db: f64) -> f64 {
        if self.segments.is_empty() {
            return 0.0;
        }
        self.segments.iter().filter(|s| s.peak_to_peak_db >= db).count() as f64 / self.segments.len() as f64
    }
}

pub fn fading_residual(series: &UniformSeries, envelope: &UniformSeries, segment_m: f64) -> Result<Residual> {
    if !(segment_m > 0.0) {
        return Err(Error::domain(format!("segment length must be positive, got {segment_m}")));
    }
    if (series.spacing_m - envelope.spacing_m).abs() > 1e-12 * series.spacing_m {
        return Err(Error::Mismatch("series and envelope spacings differ".into()));
    }
    let offset = (envelope.start_m - series.start_m) / series.spacing_m;
    let k = offset.round();
    if (offset - k).abs() > 1e-6 || k < 0.0 || k as usize + envelope.len() > series.len() {
        return Err(Error::Mismatch(format!(
            "envelope starting at {} m with {} points does not align with the series grid",
            envelope.start_m,
            envelope.len()
        )));
    }
    let k = k as usize;
    let residual_db: Vec<f64> = envelope
        .nrsrp_dbm
        .iter()
        .enumerate()
        .map(|(i, e)| series.nrsrp_dbm[k + i] - e)
        .collect();
    let distance_m: Vec<f64> = envelope.distances().collect();

    let mut segments: Vec<SegmentSpread> = Vec::new();
    if let Some(first) = distance_m.first().copied() {
        let mut current: Option<(usize, f64, f64, usize)> = None;
        for (d, r) in distance_m.iter().zip(&residual_db) {
            let idx = ((d - first) / segment_m).floor() as usize;
            match current.as_mut() {
                Some((s, lo, hi, n)) if *s == idx => {
                    *lo = lo.min(*r);
                    *hi = hi.max(*r);
                    *n += 1;
                }
                _ => {
                    if let Some((s, lo, hi, n)) = current.take() {
                        segments.push(SegmentSpread {
                            start_m: first + s as f64 * segment_m,
                            samples: n,
                            peak_to_peak_db: hi - lo,
                        });
                    }
                    current = Some((idx, *r, *r, 1));
                }
            }
        }
        if let Some((s, lo, hi, n)) = current {
            segments.push(SegmentSpread {
                start_m: first + s as f64 * segment_m,
                samples: n,
                peak_to_peak_db: hi - lo,
            });
        }
    }

    Ok(Residual {
        distance_m,
        residual_db,
        segments,
    })
}
