//! Scalar radio math: dB conversions, wavelength, thermal noise, the
//! NRSRQ/SINR relationship and Shannon-based throughput sizing.
//!
//! NRSRQ and SINR are linear ratios here; convert at the I/O boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Propagation speed used for wavelengths. Rounded so that the n78
/// wavelength comes out as 8.57 cm and 40 wavelengths as 342.86 cm.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DENSITY_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Duplex {
    Tdd,
    Fdd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarrierConfig {
    pub center_freq_mhz: f64,
    pub bandwidth_mhz: f64,
    /// Subcarriers across the carrier; `n` in the NRSRQ/SINR relation and
    /// the wideband-to-per-resource-element conversion.
    pub subcarrier_count: u32,
    pub duplex: Duplex,
}

impl CarrierConfig {
    pub fn new(center_freq_mhz: f64, bandwidth_mhz: f64, subcarrier_count: u32, duplex: Duplex) -> Result<Self> {
        let c = CarrierConfig {
            center_freq_mhz,
            bandwidth_mhz,
            subcarrier_count,
            duplex,
        };
        c.validate()?;
        Ok(c)
    }

    /// 60 MHz TDD at 3.5 GHz with 30 kHz subcarrier spacing (162 PRBs).
    pub fn n78_60mhz() -> Self {
        CarrierConfig {
            center_freq_mhz: 3500.0,
            bandwidth_mhz: 60.0,
            subcarrier_count: 162 * 12,
            duplex: Duplex::Tdd,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_freq_mhz.is_finite() && self.center_freq_mhz > 0.0) {
            return Err(Error::config(format!("center frequency must be positive, got {}", self.center_freq_mhz)));
        }
        if !(self.bandwidth_mhz.is_finite() && self.bandwidth_mhz > 0.0) {
            return Err(Error::config(format!("bandwidth must be positive, got {}", self.bandwidth_mhz)));
        }
        if self.subcarrier_count == 0 {
            return Err(Error::config("subcarrier count must be at least 1"));
        }
        Ok(())
    }

    /// 10·log10(subcarrier_count): wideband power minus this is power per resource element.
    pub fn per_re_offset_db(&self) -> f64 {
        10.0 * f64::from(self.subcarrier_count).log10()
    }
}

/// Per-antenna subcarrier activity factor, in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ActivityFactor(f64);

impl ActivityFactor {
    pub fn new(x: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain(format!("activity factor {x} outside [0, 1]")));
        }
        Ok(ActivityFactor(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ActivityFactor {
    type Error = Error;
    fn try_from(x: f64) -> Result<Self> {
        ActivityFactor::new(x)
    }
}

impl From<ActivityFactor> for f64 {
    fn from(a: ActivityFactor) -> f64 {
        a.0
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(ratio: f64) -> Result<f64> {
    if !(ratio > 0.0) {
        return Err(Error::domain(format!("cannot take dB of nonpositive ratio {ratio}")));
    }
    Ok(10.0 * ratio.log10())
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

/// Envelope (voltage-like) amplitude of a power level, `10^(dBm/20)`.
pub fn dbm_to_amplitude(dbm: f64) -> f64 {
    10f64.powf(dbm / 20.0)
}

pub fn amplitude_to_dbm(amplitude: f64) -> Result<f64> {
    if !(amplitude > 0.0) {
        return Err(Error::domain(format!("cannot take dB of nonpositive amplitude {amplitude}")));
    }
    Ok(20.0 * amplitude.log10())
}

/// Wavelength in meters for a frequency in MHz.
pub fn wavelength(freq_mhz: f64) -> Result<f64> {
    if !(freq_mhz.is_finite() && freq_mhz > 0.0) {
        return Err(Error::domain(format!("frequency must be positive, got {freq_mhz} MHz")));
    }
    Ok(SPEED_OF_LIGHT / (freq_mhz * 1e6))
}

/// Receiver noise floor in dBm over `bandwidth_mhz`.
pub fn thermal_noise(bandwidth_mhz: f64, noise_figure_db: f64) -> Result<f64> {
    if !(bandwidth_mhz.is_finite() && bandwidth_mhz > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth_mhz} MHz")));
    }
    Ok(THERMAL_NOISE_DENSITY_DBM_HZ + 10.0 * (bandwidth_mhz * 1e6).log10() + noise_figure_db)
}

/// `SINR = 1 / (1/(n·NRSRQ) − x)`, all linear.
pub fn sinr_from_nrsrq(nrsrq: f64, n: u32, x: ActivityFactor) -> Result<f64> {
    let nq = f64::from(n) * nrsrq;
    if !(nq > 0.0) {
        return Err(Error::domain(format!("n·NRSRQ must be positive, got {nq}")));
    }
    if x.value() == 0.0 {
        // no interference from loaded REs: the relation is exactly proportional
        return Ok(nq);
    }
    let denom = 1.0 / nq - x.value();
    if !(denom > 0.0) {
        return Err(Error::domain(format!(
            "NRSRQ {nrsrq} with n = {n} is inconsistent with activity factor {}: 1/(n·NRSRQ) must exceed x",
            x.value()
        )));
    }
    Ok(1.0 / denom)
}

/// Inverse of [`sinr_from_nrsrq`]: `NRSRQ = 1 / (n·(1/SINR + x))`.
pub fn nrsrq_from_sinr(sinr: f64, n: u32, x: ActivityFactor) -> Result<f64> {
    if !(sinr > 0.0 && sinr.is_finite()) {
        return Err(Error::domain(format!("SINR must be positive, got {sinr}")));
    }
    if n == 0 {
        return Err(Error::domain("subcarrier count must be at least 1"));
    }
    if x.value() == 0.0 {
        return Ok(sinr / f64::from(n));
    }
    Ok(1.0 / (f64::from(n) * (1.0 / sinr + x.value())))
}

/// SINR in dB needed to carry `throughput_mbps` over `layers` spatial layers,
/// using Shannon capacity derated by `efficiency`.
pub fn required_sinr_for_throughput(
    throughput_mbps: f64,
    bandwidth_mhz: f64,
    layers: u32,
    efficiency: f64,
) -> Result<f64> {
    if !(throughput_mbps.is_finite() && throughput_mbps > 0.0) {
        return Err(Error::domain(format!("throughput must be positive, got {throughput_mbps} Mbps")));
    }
    if !(bandwidth_mhz.is_finite() && bandwidth_mhz > 0.0) {
        return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth_mhz} MHz")));
    }
    if layers == 0 {
        return Err(Error::domain("layer count must be at least 1"));
    }
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::domain(format!("efficiency must be in (0, 1], got {efficiency}")));
    }
    let spectral = throughput_mbps / (f64::from(layers) * bandwidth_mhz * efficiency);
    linear_to_db(spectral.exp2() - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn af(x: f64) -> ActivityFactor {
        ActivityFactor::new(x).unwrap()
    }

    #[test]
    fn db_conversions() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert_eq!(db_to_linear(10.0), 10.0);
        assert!((db_to_linear(3.0) - 1.9953).abs() < 1e-4);
        assert!(linear_to_db(0.0).is_err());
        assert!(linear_to_db(-1.0).is_err());
        assert_eq!(linear_to_db(100.0).unwrap(), 20.0);
    }

    #[test]
    fn wavelengths() {
        let l = wavelength(3500.0).unwrap();
        assert_eq!(format!("{:.2}", l * 100.0), "8.57");
        assert!((l - 0.08571).abs() < 1e-5);
        assert_eq!(wavelength(300.0).unwrap(), 1.0);
        assert!((wavelength(700.0).unwrap() - 0.4286).abs() < 1e-4);
        assert!(wavelength(0.0).is_err());
        assert!(wavelength(-5.0).is_err());
    }

    #[test]
    fn noise_floor() {
        assert!((thermal_noise(1e-6, 0.0).unwrap() + 174.0).abs() < 1e-9);
        assert!((thermal_noise(60.0, 0.0).unwrap() + 96.22).abs() < 0.01);
        assert!((thermal_noise(60.0, 7.0).unwrap() + 89.22).abs() < 0.01);
        assert!(thermal_noise(0.0, 7.0).is_err());
    }

    #[test]
    fn sinr_nrsrq_examples() {
        assert!((sinr_from_nrsrq(1.0 / 24.0, 12, af(0.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!((sinr_from_nrsrq(1.0 / 24.0, 12, af(1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((nrsrq_from_sinr(0.5, 12, af(0.0)).unwrap() - 1.0 / 24.0).abs() < 1e-15);
        assert!((nrsrq_from_sinr(1.0, 12, af(1.0)).unwrap() - 1.0 / 24.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn zero_activity_is_exactly_proportional(q in 1e-6f64..1.0, n in 1u32..3300) {
            prop_assert_eq!(sinr_from_nrsrq(q, n, af(0.0)).unwrap(), f64::from(n) * q);
        }
    }

    #[test]
    fn sinr_domain_errors() {
        // 1/(12·0.1) = 0.833 < x = 0.9
        assert!(sinr_from_nrsrq(0.1, 12, af(0.9)).is_err());
        assert!(sinr_from_nrsrq(0.0, 12, af(0.0)).is_err());
        assert!(sinr_from_nrsrq(-0.1, 12, af(0.0)).is_err());
        assert!(nrsrq_from_sinr(0.0, 12, af(0.5)).is_err());
        assert!(ActivityFactor::new(1.5).is_err());
        assert!(ActivityFactor::new(-0.1).is_err());
    }

    #[test]
    fn throughput_sizing() {
        // one bit per second per hertz per layer
        let v = required_sinr_for_throughput(90.0, 60.0, 2, 0.75).unwrap();
        assert!(v.abs() < 1e-12);
        let v = required_sinr_for_throughput(200.0, 60.0, 2, 0.75).unwrap();
        assert!((v - 5.64).abs() < 0.05, "{v}");
        assert!(required_sinr_for_throughput(0.0, 60.0, 2, 0.75).is_err());
        assert!(required_sinr_for_throughput(10.0, 60.0, 0, 0.75).is_err());
        assert!(required_sinr_for_throughput(10.0, 60.0, 2, 1.5).is_err());
    }

    #[test]
    fn slope_grows_towards_asymptote() {
        // finite-difference dSINR/dNRSRQ, x > 0
        let n = 12;
        let x = af(0.5);
        let slope = |q: f64| {
            let h = q * 1e-6;
            (sinr_from_nrsrq(q + h, n, x).unwrap() - sinr_from_nrsrq(q - h, n, x).unwrap()) / (2.0 * h)
        };
        // asymptote at 1/(n·x) = 1/6
        let low = slope(0.01);
        let high = slope(0.15);
        assert!(high > low * 10.0, "low {low} high {high}");
    }

    proptest! {
        #[test]
        fn round_trip(n in 1u32..4000, x in 0.0f64..=1.0, s_db in -20.0f64..40.0) {
            let x = af(x);
            let sinr = db_to_linear(s_db);
            let q = nrsrq_from_sinr(sinr, n, x).unwrap();
            let back = sinr_from_nrsrq(q, n, x).unwrap();
            prop_assert!(((back - sinr) / sinr).abs() < 1e-9);
        }

        #[test]
        fn strictly_increasing(n in 1u32..4000, x in 0.0f64..=1.0, a in -30.0f64..30.0, b in -30.0f64..30.0) {
            prop_assume!(a != b);
            let x = af(x);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let q_lo = nrsrq_from_sinr(db_to_linear(lo), n, x).unwrap();
            let q_hi = nrsrq_from_sinr(db_to_linear(hi), n, x).unwrap();
            prop_assert!(q_lo < q_hi);
            prop_assert!(sinr_from_nrsrq(q_lo, n, x).unwrap() < sinr_from_nrsrq(q_hi, n, x).unwrap());
        }

        #[test]
        fn noise_figure_is_additive(bw in 0.1f64..400.0, nf in 0.0f64..20.0) {
            let with = thermal_noise(bw, nf).unwrap();
            let without = thermal_noise(bw, 0.0).unwrap();
            prop_assert_eq!(with, without + nf);
        }

        #[test]
        fn sizing_monotone(t in 1.0f64..2000.0, dt in 0.01f64..100.0) {
            let a = required_sinr_for_throughput(t, 60.0, 2, 0.75).unwrap();
            let b = required_sinr_for_throughput(t + dt, 60.0, 2, 0.75).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn db_round_trip(v in -150.0f64..150.0) {
            let back = linear_to_db(db_to_linear(v)).unwrap();
            prop_assert!((back - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}
