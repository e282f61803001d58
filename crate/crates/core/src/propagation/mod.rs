//! Coverage prediction for a beam-swept gNodeB over DTM and clutter rasters.
//!
//! Each pixel is evaluated independently: UE 1.5 m above the DTM, LOS by
//! sampling the terrain-plus-clutter profile under the straight ray from
//! the antenna, urban-macro path loss, per-beam antenna gain and an additive
//! per-clutter loss. The pixel keeps the best beam over all sectors.

mod antenna;
mod pathloss;
mod render;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use antenna::{beam_gain, wrap_deg, BeamSet, Sector, BEAM_COUNT, MAX_ATTENUATION_DB};
pub use pathloss::{free_space_path_loss, path_loss, PathLoss, MIN_DISTANCE_M};
pub use render::{band_color, render_ppm};

use crate::error::{Error, Result};
use crate::geo::{EnuPoint, GeoPoint, RasterGrid, DEFAULT_NODATA};
use crate::radio_math::CarrierConfig;
use pathloss::path_loss_unchecked;

pub const DEFAULT_UE_HEIGHT_M: f64 = 1.5;

/// Band index for values below the lowest threshold.
pub const BELOW_COVERAGE: f64 = -1.0;

/// The default legend: the 200 Mbps "orange" band is [−100, −90).
pub const DEFAULT_BAND_THRESHOLDS: [f64; 4] = [-110.0, -100.0, -90.0, -80.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterClass {
    pub id: u32,
    pub name: String,
    pub extra_loss_db: f64,
    pub representative_height_m: f64,
    /// Added on top of `extra_loss_db` for indoor predictions.
    #[serde(default)]
    pub indoor_extra_loss_db: f64,
}

impl ClutterClass {
    fn loss(&self, indoor: bool) -> f64 {
        if indoor {
            self.extra_loss_db + self.indoor_extra_loss_db
        } else {
            self.extra_loss_db
        }
    }
}

/// Clutter classes keyed by the id stored in the clutter raster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ClutterClass>", into = "Vec<ClutterClass>")]
pub struct ClutterTable {
    classes: BTreeMap<u32, ClutterClass>,
}

impl TryFrom<Vec<ClutterClass>> for ClutterTable {
    type Error = Error;
    fn try_from(v: Vec<ClutterClass>) -> Result<Self> {
        ClutterTable::new(v)
    }
}

impl From<ClutterTable> for Vec<ClutterClass> {
    fn from(t: ClutterTable) -> Self {
        t.classes.into_values().collect()
    }
}

impl ClutterTable {
    pub fn new(classes: Vec<ClutterClass>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for c in classes {
            // A calibrated extra loss may go negative (the class propagates
            // better than the base model); it only has to be finite.
            if !c.extra_loss_db.is_finite() {
                return Err(Error::config(format!("clutter class {} ({}): extra_loss_db must be finite", c.id, c.name)));
            }
            for (what, v) in [
                ("indoor_extra_loss_db", c.indoor_extra_loss_db),
                ("representative_height_m", c.representative_height_m),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::config(format!("clutter class {} ({}): {what} must be nonnegative, got {v}", c.id, c.name)));
                }
            }
            let id = c.id;
            if map.insert(id, c).is_some() {
                return Err(Error::config(format!("duplicate clutter class id {id}")));
            }
        }
        if map.is_empty() {
            return Err(Error::config("clutter table is empty"));
        }
        Ok(ClutterTable { classes: map })
    }

    pub fn get(&self, id: u32) -> Option<&ClutterClass> {
        self.classes.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ClutterClass> {
        self.classes.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.classes.keys().copied()
    }

    /// Adds `delta` dB to every listed class's extra loss.
    pub fn with_added_losses(&self, deltas: &BTreeMap<u32, f64>) -> Result<ClutterTable> {
        let mut out = self.clone();
        for (id, d) in deltas {
            let class = out
                .classes
                .get_mut(id)
                .ok_or_else(|| Error::config(format!("no clutter class with id {id}")))?;
            if !d.is_finite() {
                return Err(Error::config(format!("clutter class {id}: loss adjustment must be finite, got {d}")));
            }
            class.extra_loss_db += d;
        }
        Ok(out)
    }
}

/// The site description document: carrier, sectors and clutter table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteConfig {
    pub carrier: CarrierConfig,
    pub sectors: Vec<Sector>,
    pub clutter: ClutterTable,
}

impl SiteConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SiteConfig = serde_json::from_str(text).map_err(|e| Error::config(format!("site config: {e}")))?;
        cfg.carrier.validate()?;
        if cfg.sectors.is_empty() {
            return Err(Error::config("site config lists no sectors"));
        }
        for s in &cfg.sectors {
            s.validate()?;
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("site config serializes")
    }
}

/// Co-registered terrain and clutter rasters.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyArea {
    dtm: RasterGrid,
    clutter: RasterGrid,
}

impl StudyArea {
    pub fn new(dtm: RasterGrid, clutter: RasterGrid) -> Result<Self> {
        if !dtm.same_layout(&clutter) {
            return Err(Error::Mismatch(format!(
                "DTM ({}x{} @ {} m from {:?}) and clutter ({}x{} @ {} m from {:?}) do not share extent and resolution",
                dtm.ncols(),
                dtm.nrows(),
                dtm.cell_size(),
                dtm.origin(),
                clutter.ncols(),
                clutter.nrows(),
                clutter.cell_size(),
                clutter.origin()
            )));
        }
        Ok(StudyArea { dtm, clutter })
    }

    pub fn dtm(&self) -> &RasterGrid {
        &self.dtm
    }

    pub fn clutter(&self) -> &RasterGrid {
        &self.clutter
    }

    fn clutter_id(&self, row: usize, col: usize) -> Option<u32> {
        let v = self.clutter.get(row, col);
        if self.clutter.is_nodata(v) || v < 0.0 || v.fract() != 0.0 {
            None
        } else {
            Some(v as u32)
        }
    }

    fn ground(&self, row: usize, col: usize) -> Option<f64> {
        let v = self.dtm.get(row, col);
        (!self.dtm.is_nodata(v)).then_some(v)
    }

    /// Every clutter cell must be nodata or a class id present in `table`.
    pub fn check_clutter_ids(&self, table: &ClutterTable) -> Result<()> {
        for row in 0..self.clutter.nrows() {
            for col in 0..self.clutter.ncols() {
                let v = self.clutter.get(row, col);
                if self.clutter.is_nodata(v) {
                    continue;
                }
                let known = v >= 0.0 && v.fract() == 0.0 && table.get(v as u32).is_some();
                if !known {
                    return Err(Error::config(format!(
                        "clutter raster cell (row {row}, col {col}) holds {v}, which is not a class id in the clutter table"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when nothing on the terrain-plus-clutter profile rises above the
    /// straight ray between the two points. The cells holding the endpoints
    /// are not treated as obstacles.
    pub fn line_of_sight(&self, table: &ClutterTable, from: EnuPoint, from_abs_m: f64, to: EnuPoint, to_abs_m: f64) -> bool {
        let horizontal = from.distance_to(&to);
        let step = self.dtm.cell_size() / 2.0;
        let n = (horizontal / step).ceil() as usize;
        if n < 2 {
            return true;
        }
        let from_cell = self.dtm.locate_enu(from);
        let to_cell = self.dtm.locate_enu(to);
        for i in 1..n {
            let t = i as f64 / n as f64;
            let p = EnuPoint::new(from.x + t * (to.x - from.x), from.y + t * (to.y - from.y));
            let Some(cell) = self.dtm.locate_enu(p) else { continue };
            if Some(cell) == from_cell || Some(cell) == to_cell {
                continue;
            }
            let Some(ground) = self.ground(cell.0, cell.1) else { continue };
            let clutter_h = self
                .clutter_id(cell.0, cell.1)
                .and_then(|id| table.get(id))
                .map_or(0.0, |c| c.representative_height_m);
            let ray = from_abs_m + t * (to_abs_m - from_abs_m);
            if ground + clutter_h > ray {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictOptions {
    pub ue_height_m: f64,
    /// Apply each clutter class's indoor extra loss.
    pub indoor: bool,
    /// Worker threads; 0 uses the ambient rayon pool.
    pub threads: usize,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions {
            ue_height_m: DEFAULT_UE_HEIGHT_M,
            indoor: false,
            threads: 0,
        }
    }
}

/// Everything a single-point prediction needs besides the sector and target.
#[derive(Debug, Clone, Copy)]
pub struct Scene<'a> {
    pub study: &'a StudyArea,
    pub clutter_table: &'a ClutterTable,
    pub carrier: &'a CarrierConfig,
    pub options: PredictOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamChoice {
    pub beam: usize,
    pub nrsrp_dbm: f64,
}

/// Geometry of one antenna-to-UE link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub horizontal_m: f64,
    pub distance_3d_m: f64,
    pub bearing_deg: f64,
    /// Angle of the UE below the antenna's horizon.
    pub depression_deg: f64,
    pub los: bool,
}

/// A sector located in the study area's local frame.
#[derive(Debug, Clone)]
struct PlacedSector<'a> {
    sector: &'a Sector,
    position: EnuPoint,
    antenna_abs_m: f64,
}

impl<'a> PlacedSector<'a> {
    fn new(sector: &'a Sector, study: &StudyArea) -> Result<Self> {
        sector.validate()?;
        let position = study.dtm.to_local(sector.site_position)?;
        let ground = match sector.site_ground_m {
            Some(g) => g,
            None => study
                .dtm
                .locate_enu(position)
                .and_then(|(r, c)| study.ground(r, c))
                .ok_or_else(|| {
                    Error::config(format!(
                        "sector '{}' sits outside the DTM (or on nodata); set site_ground_m",
                        sector.name
                    ))
                })?,
        };
        Ok(PlacedSector {
            sector,
            position,
            antenna_abs_m: ground + sector.acl_height_m,
        })
    }

    fn geometry(&self, scene: &Scene<'_>, target: EnuPoint, target_ground_m: f64) -> LinkGeometry {
        let ue_abs = target_ground_m + scene.options.ue_height_m;
        let horizontal = self.position.distance_to(&target);
        let dz = self.antenna_abs_m - ue_abs;
        LinkGeometry {
            horizontal_m: horizontal,
            distance_3d_m: horizontal.hypot(dz),
            bearing_deg: self.position.bearing_to(&target),
            depression_deg: dz.atan2(horizontal).to_degrees(),
            los: scene
                .study
                .line_of_sight(scene.clutter_table, self.position, self.antenna_abs_m, target, ue_abs),
        }
    }

    fn per_beam(&self, scene: &Scene<'_>, geom: &LinkGeometry, clutter_loss_db: f64) -> [f64; BEAM_COUNT] {
        let pl = path_loss_unchecked(geom.distance_3d_m, scene.carrier.center_freq_mhz, scene.options.ue_height_m, geom.los);
        let s = self.sector;
        let az = wrap_deg(geom.bearing_deg - s.azimuth_deg);
        let el = geom.depression_deg - s.total_tilt_deg();
        let base = s.tx_power_per_beam_dbm - pl.loss_db - clutter_loss_db - scene.carrier.per_re_offset_db();
        let mut out = [0.0; BEAM_COUNT];
        for (o, b) in out.iter_mut().zip(s.beams.boresights_deg.iter()) {
            *o = base + s.beams.gain_from(*b, az, el);
        }
        out
    }
}

fn argmax(values: &[f64; BEAM_COUNT]) -> BeamChoice {
    let mut best = BeamChoice {
        beam: 0,
        nrsrp_dbm: values[0],
    };
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > best.nrsrp_dbm {
            best = BeamChoice { beam: i, nrsrp_dbm: *v };
        }
    }
    best
}

fn check_scene(scene: &Scene<'_>) -> Result<()> {
    scene.carrier.validate()?;
    if !(scene.options.ue_height_m.is_finite() && scene.options.ue_height_m > 0.0) {
        return Err(Error::config(format!("UE height must be positive, got {}", scene.options.ue_height_m)));
    }
    Ok(())
}

/// Geometry from a sector to a target point.
pub fn link_geometry(sector: &Sector, target: GeoPoint, target_ground_m: f64, scene: &Scene<'_>) -> Result<LinkGeometry> {
    let placed = PlacedSector::new(sector, scene.study)?;
    let t = scene.study.dtm.to_local(target)?;
    Ok(placed.geometry(scene, t, target_ground_m))
}

/// NRSRP of every beam of `sector` at `target`.
pub fn per_beam_nrsrp(
    sector: &Sector,
    target: GeoPoint,
    target_ground_m: f64,
    clutter: &ClutterClass,
    scene: &Scene<'_>,
) -> Result<[f64; BEAM_COUNT]> {
    check_scene(scene)?;
    let placed = PlacedSector::new(sector, scene.study)?;
    let t = scene.study.dtm.to_local(target)?;
    let geom = placed.geometry(scene, t, target_ground_m);
    Ok(placed.per_beam(scene, &geom, clutter.loss(scene.options.indoor)))
}

/// Strongest beam of `sector` at `target`; ties go to the lowest index.
pub fn best_beam_nrsrp(
    sector: &Sector,
    target: GeoPoint,
    target_ground_m: f64,
    clutter: &ClutterClass,
    scene: &Scene<'_>,
) -> Result<BeamChoice> {
    per_beam_nrsrp(sector, target, target_ground_m, clutter, scene).map(|v| argmax(&v))
}

/// Predicted NRSRP and serving beam per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMap {
    pub nrsrp: RasterGrid,
    pub best_beam: RasterGrid,
}

pub fn predict_coverage(
    sectors: &[Sector],
    study: &StudyArea,
    clutter_table: &ClutterTable,
    carrier: &CarrierConfig,
    options: PredictOptions,
) -> Result<CoverageMap> {
    if sectors.is_empty() {
        return Err(Error::config("no sectors to predict"));
    }
    let scene = Scene {
        study,
        clutter_table,
        carrier,
        options,
    };
    check_scene(&scene)?;
    study.check_clutter_ids(clutter_table)?;
    let placed = sectors
        .iter()
        .map(|s| PlacedSector::new(s, study))
        .collect::<Result<Vec<_>>>()?;

    let ncols = study.dtm.ncols();
    let n = ncols * study.dtm.nrows();
    let mut nrsrp = vec![DEFAULT_NODATA; n];
    let mut beam = vec![DEFAULT_NODATA; n];

    let fill = |nrsrp: &mut [f64], beam: &mut [f64]| {
        nrsrp
            .par_chunks_mut(ncols)
            .zip(beam.par_chunks_mut(ncols))
            .enumerate()
            .for_each(|(row, (nrsrp_row, beam_row))| {
                for col in 0..ncols {
                    let (Some(ground), Some(class)) = (
                        study.ground(row, col),
                        study.clutter_id(row, col).and_then(|id| clutter_table.get(id)),
                    ) else {
                        continue;
                    };
                    let target = study.dtm.cell_center_enu(row, col);
                    let loss = class.loss(options.indoor);
                    let mut best: Option<BeamChoice> = None;
                    for p in &placed {
                        let geom = p.geometry(&scene, target, ground);
                        let choice = argmax(&p.per_beam(&scene, &geom, loss));
                        if best.is_none_or(|b| choice.nrsrp_dbm > b.nrsrp_dbm) {
                            best = Some(choice);
                        }
                    }
                    let best = best.expect("at least one sector");
                    nrsrp_row[col] = best.nrsrp_dbm;
                    beam_row[col] = best.beam as f64;
                }
            });
    };

    if options.threads == 0 {
        fill(&mut nrsrp, &mut beam);
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.threads)
            .build()
            .map_err(|e| Error::config(format!("cannot start {} prediction threads: {e}", options.threads)))?;
        pool.install(|| fill(&mut nrsrp, &mut beam));
    }

    Ok(CoverageMap {
        nrsrp: study.dtm.with_values(DEFAULT_NODATA, nrsrp)?,
        best_beam: study.dtm.with_values(DEFAULT_NODATA, beam)?,
    })
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::config("at least one band threshold is required"));
    }
    if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(format!("band thresholds must be finite and strictly increasing, got {thresholds:?}")));
    }
    Ok(())
}

/// Band index of one value: `i` for `t[i] <= v < t[i+1]`, the last index at
/// or above the top threshold, [`BELOW_COVERAGE`] below the first.
pub fn band_index(value: f64, thresholds: &[f64]) -> f64 {
    match thresholds.iter().rposition(|t| value >= *t) {
        Some(i) => i as f64,
        None => BELOW_COVERAGE,
    }
}

pub fn classify_bands(map: &CoverageMap, thresholds: &[f64]) -> Result<RasterGrid> {
    check_thresholds(thresholds)?;
    let grid = &map.nrsrp;
    let values = grid
        .values()
        .iter()
        .map(|v| if grid.is_nodata(*v) { DEFAULT_NODATA } else { band_index(*v, thresholds) })
        .collect();
    grid.with_values(DEFAULT_NODATA, values)
}
