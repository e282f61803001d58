//! Python bindings: rasters, link budgets, coverage prediction, Lee
//! filtering, comparison/tuning and UE statistics.
//!
//! Structured results (budget, statistics, reports) are returned as plain
//! dicts built from the same JSON the command-line tool writes.

use std::collections::BTreeMap;

use cellplan::calibrate::{self, TuneOptions};
use cellplan::drive_test::{self, LeeParams, MeasuredPoint, SeriesMode, UeTestSample, UniformSeries};
use cellplan::geo::{self, GeoPoint, RasterGrid};
use cellplan::link_budget::{self, LinkBudget};
use cellplan::propagation::{self, PredictOptions, SiteConfig, StudyArea};
use cellplan::radio_math::{self, ActivityFactor};
use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn value_error(e: cellplan::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn points_from_tuples(points: Vec<(f64, f64, f64)>) -> Vec<MeasuredPoint> {
    points
        .into_iter()
        .enumerate()
        .map(|(i, (lat, lon, nrsrp_dbm))| MeasuredPoint {
            distance_m: i as f64,
            position: GeoPoint { lat, lon },
            nrsrp_dbm,
        })
        .collect()
}

/// Georeferenced grid (DTM, clutter class ids or NRSRP), north row first.
#[pyclass(name = "RasterGrid", module = "cellplan_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRasterGrid {
    inner: RasterGrid,
}

#[pymethods]
impl PyRasterGrid {
    /// Grid with lower-left corner at (`lat`, `lon`) and `values` listed north row first.
    #[new]
    #[pyo3(signature = (lat, lon, cell_size, ncols, nrows, values, nodata = geo::DEFAULT_NODATA))]
    fn new(lat: f64, lon: f64, cell_size: f64, ncols: usize, nrows: usize, values: Vec<f64>, nodata: f64) -> PyResult<Self> {
        let inner = RasterGrid::new(GeoPoint { lat, lon }, cell_size, ncols, nrows, nodata, values).map_err(value_error)?;
        Ok(PyRasterGrid { inner })
    }

    /// Parses ESRI ASCII grid text.
    #[staticmethod]
    fn from_ascii(text: &str) -> PyResult<Self> {
        Ok(PyRasterGrid {
            inner: geo::parse_ascii_grid(text).map_err(value_error)?,
        })
    }

    fn to_ascii(&self) -> String {
        geo::write_ascii_grid(&self.inner)
    }

    #[getter]
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    #[getter]
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    #[getter]
    fn cell_size(&self) -> f64 {
        self.inner.cell_size()
    }

    #[getter]
    fn nodata(&self) -> f64 {
        self.inner.nodata()
    }

    /// Lower-left corner as (lat, lon).
    #[getter]
    fn origin(&self) -> (f64, f64) {
        let o = self.inner.origin();
        (o.lat, o.lon)
    }

    fn get(&self, row: usize, col: usize) -> PyResult<f64> {
        if row >= self.inner.nrows() || col >= self.inner.ncols() {
            return Err(PyIndexError::new_err(format!(
                "cell ({row}, {col}) outside {}x{} grid",
                self.inner.nrows(),
                self.inner.ncols()
            )));
        }
        Ok(self.inner.get(row, col))
    }

    /// Value of the cell containing (`lat`, `lon`); None outside the grid or on nodata.
    fn value_at(&self, lat: f64, lon: f64) -> Option<f64> {
        self.inner.value_at(GeoPoint { lat, lon })
    }

    /// (lat, lon) of a cell center.
    fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let p = self.inner.cell_center(row, col);
        (p.lat, p.lon)
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn __repr__(&self) -> String {
        let o = self.inner.origin();
        format!(
            "RasterGrid({}x{} at {} m, origin ({}, {}))",
            self.inner.ncols(),
            self.inner.nrows(),
            self.inner.cell_size(),
            o.lat,
            o.lon
        )
    }
}

/// Lee averaging parameters: window 2L and spacing d in wavelengths.
#[pyclass(name = "LeeParams", module = "cellplan_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyLeeParams {
    inner: LeeParams,
}

#[pymethods]
impl PyLeeParams {
    #[new]
    #[pyo3(signature = (carrier_freq_mhz = 3500.0, window_wavelengths = 40.0, resample_wavelengths = 0.8, min_samples = 36))]
    fn new(carrier_freq_mhz: f64, window_wavelengths: f64, resample_wavelengths: f64, min_samples: usize) -> PyResult<Self> {
        let inner = LeeParams {
            window_wavelengths,
            min_samples,
            resample_wavelengths,
            carrier_freq_mhz,
        };
        inner.validate().map_err(value_error)?;
        Ok(PyLeeParams { inner })
    }

    #[getter]
    fn wavelength_m(&self) -> PyResult<f64> {
        self.inner.wavelength_m().map_err(value_error)
    }

    #[getter]
    fn window_m(&self) -> PyResult<f64> {
        self.inner.window_m().map_err(value_error)
    }

    #[getter]
    fn spacing_m(&self) -> PyResult<f64> {
        self.inner.spacing_m().map_err(value_error)
    }

    #[getter]
    fn window_samples(&self) -> usize {
        self.inner.window_samples()
    }

    fn describe(&self) -> PyResult<String> {
        self.inner.describe().map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!("LeeParams({:?})", self.inner)
    }
}

#[pyfunction]
fn haversine_distance(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    geo::haversine_distance(GeoPoint { lat: lat1, lon: lon1 }, GeoPoint { lat: lat2, lon: lon2 })
}

#[pyfunction]
fn wavelength(freq_mhz: f64) -> PyResult<f64> {
    radio_math::wavelength(freq_mhz).map_err(value_error)
}

#[pyfunction]
fn thermal_noise(bandwidth_mhz: f64, noise_figure_db: f64) -> PyResult<f64> {
    radio_math::thermal_noise(bandwidth_mhz, noise_figure_db).map_err(value_error)
}

/// Linear SINR from linear NRSRQ over `n` resource blocks with activity factor `x`.
#[pyfunction]
fn sinr_from_nrsrq(nrsrq: f64, n: u32, x: f64) -> PyResult<f64> {
    radio_math::sinr_from_nrsrq(nrsrq, n, ActivityFactor::new(x).map_err(value_error)?).map_err(value_error)
}

#[pyfunction]
fn nrsrq_from_sinr(sinr: f64, n: u32, x: f64) -> PyResult<f64> {
    radio_math::nrsrq_from_sinr(sinr, n, ActivityFactor::new(x).map_err(value_error)?).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (throughput_mbps, bandwidth_mhz, layers, efficiency = link_budget::DEFAULT_EFFICIENCY))]
fn required_sinr_for_throughput(throughput_mbps: f64, bandwidth_mhz: f64, layers: u32, efficiency: f64) -> PyResult<f64> {
    radio_math::required_sinr_for_throughput(throughput_mbps, bandwidth_mhz, layers, efficiency).map_err(value_error)
}

/// Urban-macro path loss in dB.
#[pyfunction]
#[pyo3(signature = (distance_3d_m, freq_mhz, h_bs_m, h_ut_m = propagation::DEFAULT_UE_HEIGHT_M, los = true))]
fn path_loss(distance_3d_m: f64, freq_mhz: f64, h_bs_m: f64, h_ut_m: f64, los: bool) -> PyResult<f64> {
    Ok(propagation::path_loss(distance_3d_m, freq_mhz, h_bs_m, h_ut_m, los)
        .map_err(value_error)?
        .loss_db)
}

/// Evaluates a budget JSON document; returns EIRP, SINR, sensitivity, MAPL and required NRSRP.
#[pyfunction]
#[pyo3(signature = (budget_json, throughput_mbps = None))]
fn evaluate_budget<'py>(py: Python<'py>, budget_json: &str, throughput_mbps: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let mut budget = LinkBudget::from_json(budget_json).map_err(value_error)?;
    if let Some(t) = throughput_mbps {
        budget = budget.with_target(t);
    }
    to_py(py, &link_budget::evaluate_budget(&budget).map_err(value_error)?)
}

/// Predicts best-beam NRSRP; returns (nrsrp, best_beam) grids.
#[pyfunction]
#[pyo3(signature = (dtm, clutter, sites_json, threads = 0, indoor = false, ue_height_m = propagation::DEFAULT_UE_HEIGHT_M))]
fn predict_coverage(
    py: Python<'_>,
    dtm: &PyRasterGrid,
    clutter: &PyRasterGrid,
    sites_json: &str,
    threads: usize,
    indoor: bool,
    ue_height_m: f64,
) -> PyResult<(PyRasterGrid, PyRasterGrid)> {
    let sites = SiteConfig::from_json(sites_json).map_err(value_error)?;
    let study = StudyArea::new(dtm.inner.clone(), clutter.inner.clone()).map_err(value_error)?;
    let options = PredictOptions {
        ue_height_m,
        indoor,
        threads,
    };
    let map = py
        .detach(|| propagation::predict_coverage(&sites.sectors, &study, &sites.clutter, &sites.carrier, options))
        .map_err(value_error)?;
    Ok((PyRasterGrid { inner: map.nrsrp }, PyRasterGrid { inner: map.best_beam }))
}

/// Band index per pixel for strictly increasing thresholds (dBm).
#[pyfunction]
#[pyo3(signature = (nrsrp, thresholds = propagation::DEFAULT_BAND_THRESHOLDS.to_vec()))]
fn classify_bands(nrsrp: &PyRasterGrid, thresholds: Vec<f64>) -> PyResult<PyRasterGrid> {
    let map = propagation::CoverageMap {
        nrsrp: nrsrp.inner.clone(),
        best_beam: nrsrp.inner.clone(),
    };
    Ok(PyRasterGrid {
        inner: propagation::classify_bands(&map, &thresholds).map_err(value_error)?,
    })
}

fn series_tuples(series: &UniformSeries) -> Vec<(f64, f64, f64, f64)> {
    series
        .points()
        .iter()
        .map(|p| (p.distance_m, p.position.lat, p.position.lon, p.nrsrp_dbm))
        .collect()
}

/// Runs a scanner CSV through resampling and Lee filtering.
///
/// Returns a dict with `envelope` as (distance_m, lat, lon, nrsrp_dbm)
/// tuples, `residual_db`, and per-segment peak-to-peak spreads.
#[pyfunction]
#[pyo3(signature = (scanner_csv, params = None, beam = None, segment_m = drive_test::DEFAULT_SEGMENT_M))]
fn lee_filter<'py>(
    py: Python<'py>,
    scanner_csv: &str,
    params: Option<PyLeeParams>,
    beam: Option<u8>,
    segment_m: f64,
) -> PyResult<Bound<'py, PyAny>> {
    #[derive(Serialize)]
    struct Out {
        envelope: Vec<(f64, f64, f64, f64)>,
        residual_db: Vec<f64>,
        segment_peak_to_peak_db: Vec<f64>,
        rejected_rows: usize,
    }
    let params = params.map_or_else(LeeParams::default, |p| p.inner);
    let parsed = drive_test::parse_scanner_csv(scanner_csv).map_err(value_error)?;
    let mode = beam.map_or(SeriesMode::BestBeam, SeriesMode::Beam);
    let series = drive_test::resample_route(&parsed.log, &params, mode).map_err(value_error)?;
    let envelope = drive_test::lee_local_mean(&series, &params).map_err(value_error)?;
    let residual = drive_test::fading_residual(&series, &envelope, segment_m).map_err(value_error)?;
    to_py(
        py,
        &Out {
            envelope: series_tuples(&envelope),
            residual_db: residual.residual_db.clone(),
            segment_peak_to_peak_db: residual.segments.iter().map(|s| s.peak_to_peak_db).collect(),
            rejected_rows: parsed.rejected,
        },
    )
}

/// Lee local mean of an already uniform series (dBm values at the params' spacing).
#[pyfunction]
#[pyo3(signature = (values_dbm, params = None))]
fn lee_local_mean(values_dbm: Vec<f64>, params: Option<PyLeeParams>) -> PyResult<(f64, Vec<f64>)> {
    let params = params.map_or_else(LeeParams::default, |p| p.inner);
    let spacing = params.spacing_m().map_err(value_error)?;
    let positions = vec![GeoPoint { lat: 0.0, lon: 0.0 }; values_dbm.len()];
    let series = UniformSeries::new(0.0, spacing, values_dbm, positions).map_err(value_error)?;
    let envelope = drive_test::lee_local_mean(&series, &params).map_err(value_error)?;
    Ok((envelope.start_m(), envelope.values().to_vec()))
}

/// Compares measured (lat, lon, nrsrp_dbm) points against a prediction.
#[pyfunction]
fn compare<'py>(py: Python<'py>, prediction: &PyRasterGrid, points: Vec<(f64, f64, f64)>) -> PyResult<Bound<'py, PyAny>> {
    let report = calibrate::compare(&prediction.inner, &points_from_tuples(points)).map_err(value_error)?;
    to_py(py, &report)
}

/// Fits per-clutter offsets (dB of extra loss) against a prediction.
#[pyfunction]
#[pyo3(signature = (prediction, clutter, points, min_points_per_class = calibrate::DEFAULT_MIN_POINTS_PER_CLASS))]
fn tune_offsets<'py>(
    py: Python<'py>,
    prediction: &PyRasterGrid,
    clutter: &PyRasterGrid,
    points: Vec<(f64, f64, f64)>,
    min_points_per_class: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let result = calibrate::tune_offsets_on_map(
        &prediction.inner,
        &clutter.inner,
        &points_from_tuples(points),
        TuneOptions { min_points_per_class },
    )
    .map_err(value_error)?;
    to_py(py, &result)
}

/// Summary statistics of (dl_mbps, ul_mbps, latency_ms, nrsrp_dbm) rows.
#[pyfunction]
fn throughput_stats<'py>(py: Python<'py>, rows: Vec<(f64, f64, f64, f64)>) -> PyResult<Bound<'py, PyAny>> {
    let samples: Vec<UeTestSample> = rows
        .into_iter()
        .map(|(dl_mbps, ul_mbps, latency_ms, nrsrp_dbm)| UeTestSample {
            dl_mbps,
            ul_mbps,
            latency_ms,
            nrsrp_dbm,
        })
        .collect();
    to_py(py, &drive_test::throughput_stats(&samples).map_err(value_error)?)
}

/// Clutter class id → offset applied to a site JSON; returns the updated JSON.
#[pyfunction]
fn apply_offsets(sites_json: &str, offsets: BTreeMap<u32, f64>) -> PyResult<String> {
    let mut sites = SiteConfig::from_json(sites_json).map_err(value_error)?;
    sites.clutter = sites.clutter.with_added_losses(&offsets).map_err(value_error)?;
    Ok(sites.to_json())
}

#[pymodule]
fn cellplan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRasterGrid>()?;
    m.add_class::<PyLeeParams>()?;
    m.add_function(wrap_pyfunction!(haversine_distance, m)?)?;
    m.add_function(wrap_pyfunction!(wavelength, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_noise, m)?)?;
    m.add_function(wrap_pyfunction!(sinr_from_nrsrq, m)?)?;
    m.add_function(wrap_pyfunction!(nrsrq_from_sinr, m)?)?;
    m.add_function(wrap_pyfunction!(required_sinr_for_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(path_loss, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_budget, m)?)?;
    m.add_function(wrap_pyfunction!(predict_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(classify_bands, m)?)?;
    m.add_function(wrap_pyfunction!(lee_filter, m)?)?;
    m.add_function(wrap_pyfunction!(lee_local_mean, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(tune_offsets, m)?)?;
    m.add_function(wrap_pyfunction!(throughput_stats, m)?)?;
    m.add_function(wrap_pyfunction!(apply_offsets, m)?)?;
    Ok(())
}
