//! Sector geometry and the parameterized SSB beam pattern.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

pub const BEAM_COUNT: usize = 8;

/// Per-plane attenuation floor of the beam pattern, dB.
pub const MAX_ATTENUATION_DB: f64 = 30.0;

const MAX_TILT_DEG: f64 = 15.0;

/// Wraps an angle difference into (−180, 180].
pub fn wrap_deg(d: f64) -> f64 {
    let r = d.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Eight identical beams whose boresights fan out across the sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BeamSetConfig", into = "BeamSetConfig")]
pub struct BeamSet {
    pub(crate) boresights_deg: [f64; BEAM_COUNT],
    pub(crate) az_beamwidth_deg: f64,
    pub(crate) el_beamwidth_deg: f64,
    pub(crate) peak_gain_dbi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BeamSetConfig {
    /// Explicit boresight offsets from the sector azimuth. When absent the
    /// beams are spread evenly across `envelope_deg`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boresights_deg: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    envelope_deg: Option<f64>,
    az_beamwidth_deg: f64,
    el_beamwidth_deg: f64,
    peak_gain_dbi: f64,
}

impl TryFrom<BeamSetConfig> for BeamSet {
    type Error = Error;

    fn try_from(c: BeamSetConfig) -> Result<Self> {
        match (c.boresights_deg, c.envelope_deg) {
            (Some(_), Some(_)) => Err(Error::config("give either boresights_deg or envelope_deg, not both")),
            (Some(b), None) => BeamSet::new(&b, c.az_beamwidth_deg, c.el_beamwidth_deg, c.peak_gain_dbi),
            (None, env) => BeamSet::evenly_spaced(
                env.unwrap_or(BeamSet::DEFAULT_ENVELOPE_DEG),
                c.az_beamwidth_deg,
                c.el_beamwidth_deg,
                c.peak_gain_dbi,
            ),
        }
    }
}

impl From<BeamSet> for BeamSetConfig {
    fn from(b: BeamSet) -> Self {
        BeamSetConfig {
            boresights_deg: Some(b.boresights_deg.to_vec()),
            envelope_deg: None,
            az_beamwidth_deg: b.az_beamwidth_deg,
            el_beamwidth_deg: b.el_beamwidth_deg,
            peak_gain_dbi: b.peak_gain_dbi,
        }
    }
}

impl Default for BeamSet {
    fn default() -> Self {
        BeamSet::evenly_spaced(BeamSet::DEFAULT_ENVELOPE_DEG, 18.0, 10.0, 17.0).expect("default beams are valid")
    }
}

impl BeamSet {
    pub const DEFAULT_ENVELOPE_DEG: f64 = 120.0;

    pub fn new(boresights_deg: &[f64], az_beamwidth_deg: f64, el_beamwidth_deg: f64, peak_gain_dbi: f64) -> Result<Self> {
        let boresights: [f64; BEAM_COUNT] = boresights_deg.try_into().map_err(|_| {
            Error::config(format!("a beam set has {BEAM_COUNT} beams, got {}", boresights_deg.len()))
        })?;
        if boresights.iter().any(|b| !b.is_finite()) {
            return Err(Error::config("beam boresights must be finite"));
        }
        if boresights.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("beam boresights must be strictly increasing"));
        }
        for i in 0..BEAM_COUNT / 2 {
            if (boresights[i] + boresights[BEAM_COUNT - 1 - i]).abs() > 1e-9 {
                return Err(Error::config("beam boresights must be symmetric about the sector azimuth"));
            }
        }
        for (name, v) in [("az_beamwidth_deg", az_beamwidth_deg), ("el_beamwidth_deg", el_beamwidth_deg)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if !peak_gain_dbi.is_finite() {
            return Err(Error::config("peak gain must be finite"));
        }
        Ok(BeamSet {
            boresights_deg: boresights,
            az_beamwidth_deg,
            el_beamwidth_deg,
            peak_gain_dbi,
        })
    }

    /// Boresights at the centers of eight equal slices of `envelope_deg`.
    pub fn evenly_spaced(envelope_deg: f64, az_beamwidth_deg: f64, el_beamwidth_deg: f64, peak_gain_dbi: f64) -> Result<Self> {
        if !(envelope_deg > 0.0 && envelope_deg <= 360.0) {
            return Err(Error::config(format!("beam envelope must be in (0, 360], got {envelope_deg}")));
        }
        let step = envelope_deg / BEAM_COUNT as f64;
        let b: Vec<f64> = (0..BEAM_COUNT)
            .map(|i| (i as f64 - (BEAM_COUNT as f64 - 1.0) / 2.0) * step)
            .collect();
        BeamSet::new(&b, az_beamwidth_deg, el_beamwidth_deg, peak_gain_dbi)
    }

    pub(crate) fn gain_from(&self, boresight_deg: f64, az_offset_deg: f64, el_offset_deg: f64) -> f64 {
        let daz = wrap_deg(az_offset_deg - boresight_deg);
        let horizontal = (12.0 * (daz / self.az_beamwidth_deg).powi(2)).min(MAX_ATTENUATION_DB);
        let vertical = (12.0 * (el_offset_deg / self.el_beamwidth_deg).powi(2)).min(MAX_ATTENUATION_DB);
        self.peak_gain_dbi - horizontal - vertical
    }

    pub fn boresights_deg(&self) -> &[f64; BEAM_COUNT] {
        &self.boresights_deg
    }

    pub fn az_beamwidth_deg(&self) -> f64 {
        self.az_beamwidth_deg
    }

    pub fn el_beamwidth_deg(&self) -> f64 {
        self.el_beamwidth_deg
    }

    pub fn peak_gain_dbi(&self) -> f64 {
        self.peak_gain_dbi
    }
}

/// Gain of one beam in dBi.
///
/// `az_offset_deg` is measured from the sector azimuth, `el_offset_deg` from
/// the tilted boresight (callers subtract the total downtilt).
pub fn beam_gain(beams: &BeamSet, beam_idx: usize, az_offset_deg: f64, el_offset_deg: f64) -> Result<f64> {
    let boresight = beams
        .boresights_deg
        .get(beam_idx)
        .ok_or_else(|| Error::domain(format!("beam index {beam_idx} outside 0..{}", BEAM_COUNT - 1)))?;
    Ok(beams.gain_from(*boresight, az_offset_deg, el_offset_deg))
}

/// One sector of a gNodeB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    #[serde(default)]
    pub name: String,
    pub site_position: GeoPoint,
    /// Antenna center line above ground, meters.
    pub acl_height_m: f64,
    /// Degrees clockwise from north.
    pub azimuth_deg: f64,
    pub electrical_tilt_deg: f64,
    pub mechanical_tilt_deg: f64,
    pub tx_power_per_beam_dbm: f64,
    #[serde(default)]
    pub beams: BeamSet,
    /// Ground elevation at the mast; taken from the DTM when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_ground_m: Option<f64>,
}

impl Sector {
    pub fn validate(&self) -> Result<()> {
        self.site_position.validate()?;
        let who = if self.name.is_empty() { "sector" } else { &self.name };
        if !(self.acl_height_m.is_finite() && self.acl_height_m > 0.0) {
            return Err(Error::config(format!("{who}: ACL height must be positive, got {}", self.acl_height_m)));
        }
        if !(0.0..360.0).contains(&self.azimuth_deg) {
            return Err(Error::config(format!("{who}: azimuth must be in [0, 360), got {}", self.azimuth_deg)));
        }
        for (name, t) in [("electrical", self.electrical_tilt_deg), ("mechanical", self.mechanical_tilt_deg)] {
            if !(-MAX_TILT_DEG..=MAX_TILT_DEG).contains(&t) {
                return Err(Error::config(format!("{who}: {name} tilt must be in [-15, 15], got {t}")));
            }
        }
        if !self.tx_power_per_beam_dbm.is_finite() {
            return Err(Error::config(format!("{who}: transmit power must be finite")));
        }
        if let Some(g) = self.site_ground_m {
            if !g.is_finite() {
                return Err(Error::config(format!("{who}: site ground elevation must be finite")));
            }
        }
        Ok(())
    }

    pub fn total_tilt_deg(&self) -> f64 {
        self.electrical_tilt_deg + self.mechanical_tilt_deg
    }

    /// Gain of `beam_idx` towards a target at `bearing_deg` seen
    /// `depression_deg` below the horizon from the antenna.
    pub fn gain_towards(&self, beam_idx: usize, bearing_deg: f64, depression_deg: f64) -> Result<f64> {
        beam_gain(
            &self.beams,
            beam_idx,
            wrap_deg(bearing_deg - self.azimuth_deg),
            depression_deg - self.total_tilt_deg(),
        )
    }
}
