//! Urban-macro style path loss, standing in for a proprietary ray-tracing model.

use crate::error::{Error, Result};
use crate::radio_math::SPEED_OF_LIGHT;

/// Distances below this are clamped.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub loss_db: f64,
    /// The 3D distance was below [`MIN_DISTANCE_M`] and was clamped.
    pub clamped: bool,
}

pub fn free_space_path_loss(distance_m: f64, freq_mhz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m * freq_mhz * 1e6 / SPEED_OF_LIGHT).log10()
}

/// LOS: `28.0 + 22·log10(d) + 20·log10(f_GHz)`.
/// NLOS: `max(LOS, 13.54 + 39.08·log10(d) + 20·log10(f_GHz) − 0.6·(h_ut − 1.5))`.
/// Both are floored at free-space loss minus 1 dB.
///
/// `h_bs_m` is validated but does not enter the simplified formulas.
pub fn path_loss(distance_3d_m: f64, freq_mhz: f64, h_bs_m: f64, h_ut_m: f64, los: bool) -> Result<PathLoss> {
    if !(freq_mhz.is_finite() && freq_mhz > 0.0) {
        return Err(Error::domain(format!("frequency must be positive, got {freq_mhz} MHz")));
    }
    if !(h_bs_m > 0.0 && h_ut_m > 0.0) {
        return Err(Error::domain(format!(
            "antenna heights must be positive, got h_bs = {h_bs_m}, h_ut = {h_ut_m}"
        )));
    }
    if distance_3d_m.is_nan() {
        return Err(Error::domain("distance is NaN"));
    }
    Ok(path_loss_unchecked(distance_3d_m, freq_mhz, h_ut_m, los))
}

pub(crate) fn path_loss_unchecked(distance_3d_m: f64, freq_mhz: f64, h_ut_m: f64, los: bool) -> PathLoss {
    let clamped = distance_3d_m < MIN_DISTANCE_M;
    let d = distance_3d_m.max(MIN_DISTANCE_M);
    let f_ghz_term = 20.0 * (freq_mhz / 1000.0).log10();
    let los_loss = 28.0 + 22.0 * d.log10() + f_ghz_term;
    let loss = if los {
        los_loss
    } else {
        let nlos = 13.54 + 39.08 * d.log10() + f_ghz_term - 0.6 * (h_ut_m - 1.5);
        los_loss.max(nlos)
    };
    let floor = free_space_path_loss(d, freq_mhz) - 1.0;
    PathLoss {
        loss_db: loss.max(floor),
        clamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn los_at_100m() {
        let pl = path_loss(100.0, 3500.0, 27.77, 1.5, true).unwrap();
        let expect = 28.0 + 44.0 + 20.0 * 3.5f64.log10();
        assert!((expect - 82.88).abs() < 0.01);
        assert!((pl.loss_db - 82.88).abs() < 0.01);
        assert!(!pl.clamped);
    }

    #[test]
    fn doubling_distance_adds_slope() {
        let a = path_loss(200.0, 3500.0, 25.0, 1.5, true).unwrap().loss_db;
        let b = path_loss(400.0, 3500.0, 25.0, 1.5, true).unwrap().loss_db;
        assert!((b - a - 6.62).abs() < 0.01);
    }

    #[test]
    fn clamp_and_floor() {
        let pl = path_loss(0.2, 3500.0, 25.0, 1.5, true).unwrap();
        assert!(pl.clamped);
        assert_eq!(pl.loss_db, path_loss(1.0, 3500.0, 25.0, 1.5, true).unwrap().loss_db);
        // at 1 m the LOS fit undershoots free space, so the floor applies
        assert!((pl.loss_db - (free_space_path_loss(1.0, 3500.0) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(path_loss(10.0, 0.0, 25.0, 1.5, true).is_err());
        assert!(path_loss(10.0, 3500.0, 0.0, 1.5, true).is_err());
        assert!(path_loss(10.0, 3500.0, 25.0, -1.0, true).is_err());
        assert!(path_loss(f64::NAN, 3500.0, 25.0, 1.5, true).is_err());
    }

    proptest! {
        #[test]
        fn nlos_never_below_los(d in 0.5f64..20_000.0, f in 500.0f64..6000.0, h_ut in 1.0f64..22.5) {
            let los = path_loss(d, f, 25.0, h_ut, true).unwrap().loss_db;
            let nlos = path_loss(d, f, 25.0, h_ut, false).unwrap().loss_db;
            prop_assert!(nlos >= los);
            prop_assert!(los >= free_space_path_loss(d.max(1.0), f) - 1.0);
        }

        #[test]
        fn monotone_in_distance(d in 1.0f64..10_000.0, k in 1.0001f64..3.0, los in any::<bool>()) {
            let a = path_loss(d, 3500.0, 25.0, 1.5, los).unwrap().loss_db;
            let b = path_loss(d * k, 3500.0, 25.0, 1.5, los).unwrap().loss_db;
            prop_assert!(b > a);
        }
    }
}
