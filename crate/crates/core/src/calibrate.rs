//! Measured-versus-predicted comparison and per-clutter offset tuning.
//!
//! Offsets enter the prediction linearly (`predicted − offset[class]`), so
//! the least-squares fit has a closed form: each class's offset is the mean
//! of `predicted − measured` over the points falling in that class.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::drive_test::MeasuredPoint;
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, RasterGrid, DEFAULT_NODATA};
use crate::propagation::{predict_coverage, ClutterTable, PredictOptions, Sector, StudyArea};
use crate::radio_math::CarrierConfig;

/// Classes with fewer measured points than this keep their current loss.
pub const DEFAULT_MIN_POINTS_PER_CLASS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparedPoint {
    pub position: GeoPoint,
    pub measured_dbm: f64,
    pub predicted_dbm: f64,
    /// `measured − predicted`.
    pub delta_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub per_point: Vec<ComparedPoint>,
    pub mean_error: f64,
    /// Sample standard deviation (n − 1) of the deltas; zero for one point.
    pub std_error: f64,
    pub rmse: f64,
    /// Pearson correlation of measured and predicted; `None` when either
    /// side has no spread.
    pub correlation: Option<f64>,
    /// Measured points outside the map or over nodata pixels.
    pub excluded: usize,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

fn predicted_at(grid: &RasterGrid, p: GeoPoint) -> Option<(usize, usize, f64)> {
    let (row, col) = grid.locate(p)?;
    let v = grid.get(row, col);
    (!grid.is_nodata(v)).then_some((row, col, v))
}

/// Compares measured points against a predicted NRSRP raster.
pub fn compare(predicted: &RasterGrid, measured: &[MeasuredPoint]) -> Result<ComparisonReport> {
    let mut per_point = Vec::with_capacity(measured.len());
    let mut excluded = 0;
    for m in measured {
        if !m.nrsrp_dbm.is_finite() {
            return Err(Error::domain(format!("measured value at {:.3} m is not finite", m.distance_m)));
        }
        match predicted_at(predicted, m.position) {
            Some((_, _, p)) => per_point.push(ComparedPoint {
                position: m.position,
                measured_dbm: m.nrsrp_dbm,
                predicted_dbm: p,
                delta_db: m.nrsrp_dbm - p,
            }),
            None => excluded += 1,
        }
    }
    if per_point.is_empty() {
        return Err(Error::Insufficient(format!(
            "none of the {} measured points overlap the prediction",
            measured.len()
        )));
    }
    let deltas: Vec<f64> = per_point.iter().map(|p| p.delta_db).collect();
    let mean_error = mean(&deltas);
    let n = deltas.len();
    let std_error = if n > 1 {
        (deltas.iter().map(|d| (d - mean_error) * (d - mean_error)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let meas: Vec<f64> = per_point.iter().map(|p| p.measured_dbm).collect();
    let pred: Vec<f64> = per_point.iter().map(|p| p.predicted_dbm).collect();
    Ok(ComparisonReport {
        mean_error,
        std_error,
        rmse: rms(&deltas),
        correlation: pearson(&meas, &pred),
        per_point,
        excluded,
    })
}

impl ComparisonReport {
    /// `lat,lon,measured,predicted,delta` rows.
    pub fn delta_csv(&self) -> String {
        let mut out = String::from("lat,lon,measured,predicted,delta\n");
        for p in &self.per_point {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.position.lat, p.position.lon, p.measured_dbm, p.predicted_dbm, p.delta_db
            );
        }
        out
    }

    /// Mean delta of the points falling in each cell of `layout`; nodata
    /// where no point falls.
    pub fn delta_raster(&self, layout: &RasterGrid) -> Result<RasterGrid> {
        let n = layout.ncols() * layout.nrows();
        let mut sum = vec![0.0; n];
        let mut count = vec![0usize; n];
        for p in &self.per_point {
            if let Some((row, col)) = layout.locate(p.position) {
                let i = row * layout.ncols() + col;
                sum[i] += p.delta_db;
                count[i] += 1;
            }
        }
        let values = sum
            .iter()
            .zip(&count)
            .map(|(s, c)| if *c == 0 { DEFAULT_NODATA } else { s / *c as f64 })
            .collect();
        layout.with_values(DEFAULT_NODATA, values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuneOptions {
    pub min_points_per_class: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            min_points_per_class: DEFAULT_MIN_POINTS_PER_CLASS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    /// Extra loss to add to each tuned class, dB.
    pub offsets: BTreeMap<u32, f64>,
    pub pre_rmse: f64,
    pub post_rmse: f64,
    /// Classes seen in the data but with too few points to tune.
    pub frozen: Vec<u32>,
    pub points_per_class: BTreeMap<u32, usize>,
    /// Points outside the map, over nodata or unclassified pixels.
    pub excluded: usize,
    pub solver: String,
    pub iterations: usize,
}

impl TuneResult {
    /// The clutter table with the fitted offsets applied.
    pub fn apply(&self, table: &ClutterTable) -> Result<ClutterTable> {
        table.with_added_losses(&self.offsets)
    }
}

/// Fits per-class offsets against an existing prediction.
pub fn tune_offsets_on_map(
    predicted: &RasterGrid,
    clutter: &RasterGrid,
    measured: &[MeasuredPoint],
    options: TuneOptions,
) -> Result<TuneResult> {
    if !predicted.same_layout(clutter) {
        return Err(Error::Mismatch("prediction and clutter rasters have different layouts".into()));
    }
    if options.min_points_per_class == 0 {
        return Err(Error::config("minimum points per class must be at least 1"));
    }
    // (class, predicted, measured)
    let mut used: Vec<(u32, f64, f64)> = Vec::with_capacity(measured.len());
    let mut excluded = 0;
    for m in measured {
        if !m.nrsrp_dbm.is_finite() {
            return Err(Error::domain(format!("measured value at {:.3} m is not finite", m.distance_m)));
        }
        let Some((row, col, p)) = predicted_at(predicted, m.position) else {
            excluded += 1;
            continue;
        };
        let c = clutter.get(row, col);
        if clutter.is_nodata(c) || c < 0.0 || c.fract() != 0.0 {
            excluded += 1;
            continue;
        }
        used.push((c as u32, p, m.nrsrp_dbm));
    }
    if used.is_empty() {
        return Err(Error::Insufficient("no measured points overlap the prediction".into()));
    }

    let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for (c, p, m) in &used {
        let e = sums.entry(*c).or_insert((0.0, 0));
        e.0 += p - m;
        e.1 += 1;
    }
    let mut offsets = BTreeMap::new();
    let mut frozen = Vec::new();
    for (c, (s, n)) in &sums {
        if *n >= options.min_points_per_class {
            offsets.insert(*c, s / *n as f64);
        } else {
            frozen.push(*c);
        }
    }
    if offsets.is_empty() {
        return Err(Error::Insufficient(format!(
            "every clutter class has fewer than {} measured points",
            options.min_points_per_class
        )));
    }

    let pre: Vec<f64> = used.iter().map(|(_, p, m)| m - p).collect();
    let post: Vec<f64> = used
        .iter()
        .map(|(c, p, m)| m - (p - offsets.get(c).copied().unwrap_or(0.0)))
        .collect();
    Ok(TuneResult {
        pre_rmse: rms(&pre),
        post_rmse: rms(&post),
        points_per_class: sums.iter().map(|(c, (_, n))| (*c, *n)).collect(),
        offsets,
        frozen,
        excluded,
        solver: "closed-form least squares (per-class mean delta)".into(),
        iterations: 1,
    })
}

/// Predicts coverage with the current clutter table and fits per-class
/// offsets to the measured points.
pub fn tune_offsets(
    sectors: &[Sector],
    study: &StudyArea,
    clutter_table: &ClutterTable,
    carrier: &CarrierConfig,
    predict: PredictOptions,
    measured: &[MeasuredPoint],
    options: TuneOptions,
) -> Result<TuneResult> {
    let map = predict_coverage(sectors, study, clutter_table, carrier, predict)?;
    tune_offsets_on_map(&map.nrsrp, study.clutter(), measured, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::enu_to_geo;
    use crate::propagation::{BeamSet, ClutterClass};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    const ORIGIN: GeoPoint = GeoPoint { lat: -33.9, lon: 151.1 };

    fn grid(values: Vec<f64>, n: usize) -> RasterGrid {
        RasterGrid::new(ORIGIN, 10.0, n, n, DEFAULT_NODATA, values).unwrap()
    }

    fn ramp_grid(n: usize) -> RasterGrid {
        grid((0..n * n).map(|i| -70.0 - 0.37 * i as f64).collect(), n)
    }

    /// One point at each cell center, sampling the grid itself.
    fn sample_grid(g: &RasterGrid) -> Vec<MeasuredPoint> {
        let mut out = Vec::new();
        for row in 0..g.nrows() {
            for col in 0..g.ncols() {
                out.push(MeasuredPoint {
                    distance_m: out.len() as f64,
                    position: g.cell_center(row, col),
                    nrsrp_dbm: g.get(row, col),
                });
            }
        }
        out
    }

    #[test]
    fn self_comparison_is_zero() {
        let g = ramp_grid(8);
        let r = compare(&g, &sample_grid(&g)).unwrap();
        assert!(r.per_point.iter().all(|p| p.delta_db == 0.0));
        assert_eq!((r.mean_error, r.std_error, r.rmse, r.excluded), (0.0, 0.0, 0.0, 0));
        assert!((r.correlation.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_shift() {
        let g = ramp_grid(8);
        let shifted = g.with_values(DEFAULT_NODATA, g.values().iter().map(|v| v + 5.0).collect()).unwrap();
        let r = compare(&shifted, &sample_grid(&g)).unwrap();
        assert!((r.mean_error + 5.0).abs() < 1e-12);
        assert!(r.std_error < 1e-12);
        assert!((r.rmse - 5.0).abs() < 1e-12);
        assert!((r.correlation.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn outside_and_nodata_points_excluded() {
        let mut g = ramp_grid(4);
        g.set(0, 0, DEFAULT_NODATA);
        let mut pts = sample_grid(&g);
        pts.push(MeasuredPoint {
            distance_m: 99.0,
            position: enu_to_geo(ORIGIN, crate::geo::EnuPoint::new(-50.0, -50.0)),
            nrsrp_dbm: -80.0,
        });
        let r = compare(&g, &pts).unwrap();
        assert_eq!(r.excluded, 2);
        assert_eq!(r.per_point.len(), 15);
        let far = vec![pts[16]];
        assert!(matches!(compare(&g, &far), Err(Error::Insufficient(_))));
    }

    #[test]
    fn delta_outputs() {
        let g = ramp_grid(4);
        let mut pts = sample_grid(&g);
        pts[5].nrsrp_dbm += 2.0;
        let r = compare(&g, &pts).unwrap();
        let csv = r.delta_csv();
        assert!(csv.starts_with("lat,lon,measured,predicted,delta\n"));
        assert_eq!(csv.lines().count(), 17);
        let d = r.delta_raster(&g).unwrap();
        assert!((d.get(1, 1) - 2.0).abs() < 1e-12);
        assert_eq!(d.get(0, 0), 0.0);
    }

    /// Textbook formulas evaluated independently of the implementation.
    fn oracle(pairs: &[(f64, f64)]) -> (f64, f64, f64, f64) {
        let n = pairs.len() as f64;
        let mut sum = 0.0;
        for (m, p) in pairs {
            sum += m - p;
        }
        let mean = sum / n;
        let mut ss = 0.0;
        let mut sq = 0.0;
        for (m, p) in pairs {
            ss += (m - p - mean) * (m - p - mean);
            sq += (m - p) * (m - p);
        }
        let (mut mm, mut mp) = (0.0, 0.0);
        for (m, p) in pairs {
            mm += m;
            mp += p;
        }
        mm /= n;
        mp /= n;
        let (mut cov, mut vm, mut vp) = (0.0, 0.0, 0.0);
        for (m, p) in pairs {
            cov += (m - mm) * (p - mp);
            vm += (m - mm) * (m - mm);
            vp += (p - mp) * (p - mp);
        }
        (mean, (ss / (n - 1.0)).sqrt(), (sq / n).sqrt(), cov / (vm * vp).sqrt())
    }

    proptest! {
        #[test]
        fn compare_matches_oracle(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = grid((0..64).map(|_| rng.random_range(-130.0..-60.0)).collect(), 8);
            let mut pts = sample_grid(&g);
            for p in &mut pts {
                p.nrsrp_dbm = rng.random_range(-130.0..-60.0);
            }
            let r = compare(&g, &pts).unwrap();
            let pairs: Vec<(f64, f64)> = r.per_point.iter().map(|p| (p.measured_dbm, p.predicted_dbm)).collect();
            let (m, s, e, c) = oracle(&pairs);
            prop_assert_eq!(r.mean_error, m);
            prop_assert_eq!(r.std_error, s);
            prop_assert_eq!(r.rmse, e);
            prop_assert_eq!(r.correlation.unwrap(), c);
            prop_assert!(r.rmse + 1e-12 >= r.mean_error.abs());
        }

        #[test]
        fn translation_consistency(seed in any::<u64>(), c in -20.0f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = grid((0..36).map(|_| rng.random_range(-120.0..-70.0)).collect(), 6);
            let mut pts = sample_grid(&g);
            for p in &mut pts {
                p.nrsrp_dbm = rng.random_range(-120.0..-70.0);
            }
            let a = compare(&g, &pts).unwrap();
            for p in &mut pts {
                p.nrsrp_dbm += c;
            }
            let b = compare(&g, &pts).unwrap();
            prop_assert!((b.mean_error - a.mean_error - c).abs() < 1e-9);
            prop_assert!((b.std_error - a.std_error).abs() < 1e-9);
            prop_assert!((b.correlation.unwrap() - a.correlation.unwrap()).abs() < 1e-9);
        }

        #[test]
        fn tuning_never_worsens_fit(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = grid((0..100).map(|_| rng.random_range(-120.0..-70.0)).collect(), 10);
            let clutter = grid((0..100).map(|_| rng.random_range(0..4) as f64).collect(), 10);
            let mut pts = sample_grid(&g);
            for p in &mut pts {
                p.nrsrp_dbm += rng.random_range(-8.0..8.0);
            }
            let r = tune_offsets_on_map(&g, &clutter, &pts, TuneOptions { min_points_per_class: 5 }).unwrap();
            prop_assert!(r.post_rmse <= r.pre_rmse);
        }
    }

    fn class_grid(n: usize) -> RasterGrid {
        // three vertical stripes of classes 1, 2, 3
        grid((0..n * n).map(|i| (1 + (i % n) * 3 / n) as f64).collect(), n)
    }

    #[test]
    fn recovers_injected_offset_on_map() {
        let n = 30;
        let g = ramp_grid(n);
        let clutter = class_grid(n);
        let mut pts = sample_grid(&g);
        for p in &mut pts {
            let (row, col) = g.locate(p.position).unwrap();
            if clutter.get(row, col) == 2.0 {
                p.nrsrp_dbm -= 6.0;
            }
        }
        let r = tune_offsets_on_map(&g, &clutter, &pts, TuneOptions::default()).unwrap();
        assert!((r.offsets[&2] - 6.0).abs() < 1e-9);
        assert!(r.offsets[&1].abs() < 1e-9 && r.offsets[&3].abs() < 1e-9);
        assert!(r.post_rmse < 1e-9 && r.pre_rmse > 3.0);
    }

    #[test]
    fn identical_measurements_give_zero_offsets() {
        let g = ramp_grid(12);
        let r = tune_offsets_on_map(&g, &class_grid(12), &sample_grid(&g), TuneOptions::default()).unwrap();
        assert!(r.offsets.values().all(|o| *o == 0.0));
        assert_eq!((r.pre_rmse, r.post_rmse), (0.0, 0.0));
    }

    #[test]
    fn sparse_classes_frozen() {
        let g = ramp_grid(10);
        let mut clutter = grid(vec![1.0; 100], 10);
        for i in 0..5 {
            clutter.set(0, i, 7.0);
        }
        let r = tune_offsets_on_map(&g, &clutter, &sample_grid(&g), TuneOptions::default()).unwrap();
        assert_eq!(r.frozen, vec![7]);
        assert!(!r.offsets.contains_key(&7));
        assert_eq!(r.points_per_class[&7], 5);
        let e = tune_offsets_on_map(&g, &clutter, &sample_grid(&g), TuneOptions { min_points_per_class: 500 });
        assert!(matches!(e, Err(Error::Insufficient(_))));
    }

    #[test]
    fn layout_mismatch_rejected() {
        let g = ramp_grid(10);
        assert!(tune_offsets_on_map(&g, &class_grid(9), &sample_grid(&g), TuneOptions::default()).is_err());
    }

    #[test]
    fn noisy_offsets_recovered() {
        let n = 60;
        let g = ramp_grid(n);
        let clutter = grid((0..n * n).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect(), n);
        let truth = [(1u32, 3.0), (2u32, -3.0)];
        let noise = Normal::new(0.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts = Vec::new();
        let mut per_class = [0usize; 2];
        for row in 0..n {
            for col in 0..n {
                let c = clutter.get(row, col) as usize;
                if per_class[c - 1] == 500 {
                    continue;
                }
                per_class[c - 1] += 1;
                pts.push(MeasuredPoint {
                    distance_m: pts.len() as f64,
                    position: g.cell_center(row, col),
                    nrsrp_dbm: g.get(row, col) - truth[c - 1].1 + noise.sample(&mut rng),
                });
            }
        }
        let r = tune_offsets_on_map(&g, &clutter, &pts, TuneOptions::default()).unwrap();
        for (c, t) in truth {
            assert!((r.offsets[&c] - t).abs() < 0.3, "class {c}: {}", r.offsets[&c]);
        }
        assert!(r.post_rmse <= r.pre_rmse);
    }

    fn flat_study(n: usize) -> (StudyArea, ClutterTable, Vec<Sector>) {
        let dtm = RasterGrid::filled(ORIGIN, 10.0, n, n, DEFAULT_NODATA, 50.0).unwrap();
        let study = StudyArea::new(dtm, class_grid(n)).unwrap();
        let table = ClutterTable::new(
            (1..=3)
                .map(|id| ClutterClass {
                    id,
                    name: format!("class{id}"),
                    extra_loss_db: 2.0 * id as f64,
                    representative_height_m: 0.0,
                    indoor_extra_loss_db: 0.0,
                })
                .collect(),
        )
        .unwrap();
        let sector = Sector {
            name: "A".into(),
            site_position: study.dtm().cell_center(n / 2, n / 2),
            acl_height_m: 25.0,
            azimuth_deg: 0.0,
            electrical_tilt_deg: 3.0,
            mechanical_tilt_deg: 0.0,
            tx_power_per_beam_dbm: 30.0,
            beams: BeamSet::default(),
            site_ground_m: None,
        };
        (study, table, vec![sector])
    }

    #[test]
    fn full_round_trip_and_idempotence() {
        let n = 30;
        let (study, table, sectors) = flat_study(n);
        let carrier = CarrierConfig::n78_60mhz();
        let opts = PredictOptions::default();
        let base = predict_coverage(&sectors, &study, &table, &carrier, opts).unwrap();
        let truth: BTreeMap<u32, f64> = [(1, 6.0), (2, -3.0), (3, 0.0)].into_iter().collect();
        let mut pts = sample_grid(&base.nrsrp);
        for p in &mut pts {
            let (row, col) = base.nrsrp.locate(p.position).unwrap();
            p.nrsrp_dbm -= truth[&(study.clutter().get(row, col) as u32)];
        }
        let r = tune_offsets(&sectors, &study, &table, &carrier, opts, &pts, TuneOptions::default()).unwrap();
        for (c, t) in &truth {
            assert!((r.offsets[c] - t).abs() < 0.1, "class {c}: {}", r.offsets[c]);
        }
        let tuned = r.apply(&table).unwrap();
        let again = tune_offsets(&sectors, &study, &tuned, &carrier, opts, &pts, TuneOptions::default()).unwrap();
        assert!(again.offsets.values().all(|o| o.abs() < 1e-9), "{:?}", again.offsets);
        assert!(again.post_rmse <= again.pre_rmse);
    }
}
