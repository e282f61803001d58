//! Summary statistics for UE speed-test results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rule-of-thumb sample size above which the sample mean is treated as
/// approximately normal.
pub const CLT_MIN_SAMPLES: usize = 30;

pub const UE_COLUMNS: [&str; 4] = ["dl_mbps", "ul_mbps", "latency_ms", "nrsrp_dbm"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeTestSample {
    pub dl_mbps: f64,
    pub ul_mbps: f64,
    pub latency_ms: f64,
    pub nrsrp_dbm: f64,
}

impl UeTestSample {
    pub fn validate(&self) -> Result<()> {
        if !(self.dl_mbps.is_finite() && self.dl_mbps >= 0.0) || !(self.ul_mbps.is_finite() && self.ul_mbps >= 0.0) {
            return Err(Error::domain(format!(
                "throughputs must be finite and non-negative, got dl {} ul {}",
                self.dl_mbps, self.ul_mbps
            )));
        }
        if !(self.latency_ms.is_finite() && self.latency_ms > 0.0) {
            return Err(Error::domain(format!("latency must be positive, got {}", self.latency_ms)));
        }
        if !self.nrsrp_dbm.is_finite() {
            return Err(Error::domain("NRSRP must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample variance (n − 1 denominator); zero for a single sample.
    pub variance: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    /// Indices of samples more than three standard deviations from the mean.
    pub outliers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub n: usize,
    pub dl_mbps: MetricSummary,
    pub ul_mbps: MetricSummary,
    pub latency_ms: MetricSummary,
    pub nrsrp_dbm: MetricSummary,
    pub clt_normality_assumable: bool,
}

pub fn summarize(values: &[f64]) -> Result<MetricSummary> {
    if values.is_empty() {
        return Err(Error::Insufficient("no samples to summarize".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("values must be finite"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let std_dev = variance.sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let outliers = if std_dev > 0.0 {
        values
            .iter()
            .enumerate()
            .filter(|(_, v)| (*v - mean).abs() > 3.0 * std_dev)
            .map(|(i, _)| i)
            .collect()
    } else {
        Vec::new()
    };
    Ok(MetricSummary {
        n,
        mean,
        median,
        variance,
        std_dev,
        min: sorted[0],
        max: sorted[n - 1],
        outliers,
    })
}

pub fn throughput_stats(samples: &[UeTestSample]) -> Result<StatsSummary> {
    if samples.is_empty() {
        return Err(Error::Insufficient("no UE test samples".into()));
    }
    for (i, s) in samples.iter().enumerate() {
        s.validate()
            .map_err(|e| Error::domain(format!("sample {}: {e}", i + 1)))?;
    }
    let column = |f: fn(&UeTestSample) -> f64| -> Result<MetricSummary> {
        summarize(&samples.iter().map(f).collect::<Vec<_>>())
    };
    Ok(StatsSummary {
        n: samples.len(),
        dl_mbps: column(|s| s.dl_mbps)?,
        ul_mbps: column(|s| s.ul_mbps)?,
        latency_ms: column(|s| s.latency_ms)?,
        nrsrp_dbm: column(|s| s.nrsrp_dbm)?,
        clt_normality_assumable: samples.len() >= CLT_MIN_SAMPLES,
    })
}

/// Parses `dl_mbps,ul_mbps,latency_ms,nrsrp_dbm` (columns in any order).
pub fn parse_ue_csv(text: &str, source: &str) -> Result<Vec<UeTestSample>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(source, 1, e.to_string()))?
        .clone();
    let mut idx = [0usize; 4];
    for (k, name) in UE_COLUMNS.iter().enumerate() {
        idx[k] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or_else(|| Error::parse(source, 1, format!("missing column '{name}'")))?;
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(source, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut vals = [0.0; 4];
        for (k, name) in UE_COLUMNS.iter().enumerate() {
            let raw = record.get(idx[k]).unwrap_or("");
            vals[k] = raw
                .parse::<f64>()
                .map_err(|_| Error::parse(source, line, format!("column '{name}': '{raw}' is not a number")))?;
        }
        let sample = UeTestSample {
            dl_mbps: vals[0],
            ul_mbps: vals[1],
            latency_ms: vals[2],
            nrsrp_dbm: vals[3],
        };
        sample.validate().map_err(|e| Error::parse(source, line, e.to_string()))?;
        out.push(sample);
    }
    if out.is_empty() {
        return Err(Error::Insufficient(format!("{source}: no samples")));
    }
    Ok(out)
}
