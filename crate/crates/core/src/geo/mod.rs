//! Geodetic primitives: points, great-circle distance, a local east/north
//! frame and cumulative route distance.
//!
//! Everything here uses a spherical Earth. At drive-test scale (a few km)
//! the difference to an ellipsoid is far below GPS noise.

mod raster;

pub use raster::{
    parse_ascii_grid, parse_ascii_grid_named, raster_lookup, write_ascii_grid, RasterGrid,
    DEFAULT_NODATA,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Largest latitude/longitude separation accepted by [`geo_to_enu`].
pub const LOCAL_FRAME_LIMIT_DEG: f64 = 1.0;

/// WGS84 latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lat.is_finite() && (-90.0..=90.0).contains(&self.lat)) {
            return Err(Error::domain(format!("latitude {} outside [-90, 90]", self.lat)));
        }
        if !(self.lon.is_finite() && (-180.0..=180.0).contains(&self.lon)) {
            return Err(Error::domain(format!(
                "longitude {} outside [-180, 180]",
                self.lon
            )));
        }
        Ok(())
    }
}

/// Meters east (`x`) and north (`y`) of a local origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnuPoint {
    pub x: f64,
    pub y: f64,
}

impl EnuPoint {
    pub fn new(x: f64, y: f64) -> Self {
        EnuPoint { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance_to(&self, other: &EnuPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Bearing from `self` to `other` in degrees clockwise from north, in [0, 360).
    pub fn bearing_to(&self, other: &EnuPoint) -> f64 {
        let b = (other.x - self.x).atan2(other.y - self.y).to_degrees();
        if b < 0.0 {
            b + 360.0
        } else {
            b
        }
    }
}

/// Great-circle distance in meters.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let lat1 = a.lat.to_radians();
    let lat2 = b.lat.to_radians();
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

fn wrap_lon_delta(d: f64) -> f64 {
    if d > 180.0 {
        d - 360.0
    } else if d < -180.0 {
        d + 360.0
    } else {
        d
    }
}

/// Equirectangular projection of `p` into the frame centered on `origin`.
///
/// Fails when `p` is a degree or more away from `origin` in either axis.
pub fn geo_to_enu(origin: GeoPoint, p: GeoPoint) -> Result<EnuPoint> {
    let dlat = p.lat - origin.lat;
    let dlon = wrap_lon_delta(p.lon - origin.lon);
    if !(dlat.abs() < LOCAL_FRAME_LIMIT_DEG && dlon.abs() < LOCAL_FRAME_LIMIT_DEG) {
        return Err(Error::domain(format!(
            "point ({}, {}) is beyond the {LOCAL_FRAME_LIMIT_DEG} degree local frame around ({}, {})",
            p.lat, p.lon, origin.lat, origin.lon
        )));
    }
    Ok(EnuPoint {
        x: EARTH_RADIUS_M * dlon.to_radians() * origin.lat.to_radians().cos(),
        y: EARTH_RADIUS_M * dlat.to_radians(),
    })
}

/// Inverse of [`geo_to_enu`].
pub fn enu_to_geo(origin: GeoPoint, p: EnuPoint) -> GeoPoint {
    let lat = origin.lat + (p.y / EARTH_RADIUS_M).to_degrees();
    let lon = origin.lon + (p.x / (EARTH_RADIUS_M * origin.lat.to_radians().cos())).to_degrees();
    GeoPoint {
        lat,
        lon: wrap_lon_delta(lon),
    }
}

/// Ordered positions with the distance traveled up to each one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    points: Vec<GeoPoint>,
    cumulative_m: Vec<f64>,
}

impl Route {
    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    pub fn cumulative_m(&self) -> &[f64] {
        &self.cumulative_m
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.cumulative_m.last().copied().unwrap_or(0.0)
    }
}

pub fn cumulative_route_distance(points: &[GeoPoint]) -> Result<Route> {
    if points.is_empty() {
        return Err(Error::Insufficient("route needs at least one point".into()));
    }
    let mut cumulative_m = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    cumulative_m.push(acc);
    for pair in points.windows(2) {
        acc += haversine_distance(pair[0], pair[1]);
        cumulative_m.push(acc);
    }
    Ok(Route {
        points: points.to_vec(),
        cumulative_m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gp(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn haversine_identity_and_known_values() {
        let a = gp(-33.80, 151.00);
        assert_eq!(haversine_distance(a, a), 0.0);

        // R * 0.01 deg in radians
        let expected = EARTH_RADIUS_M * 0.01_f64.to_radians();
        assert!((expected - 1111.95).abs() < 0.1);
        let d = haversine_distance(a, gp(-33.79, 151.00));
        assert!((d - 1111.95).abs() < 0.1, "{d}");

        let d = haversine_distance(gp(0.0, 0.0), gp(0.0, 180.0));
        assert!((d - std::f64::consts::PI * EARTH_RADIUS_M).abs() < 1.0);
        assert!((d - 20_015_087.0).abs() < 1.0);
    }

    #[test]
    fn rejects_invalid_coordinates() {
        assert!(GeoPoint::new(90.5, 0.0).is_err());
        assert!(GeoPoint::new(0.0, -181.0).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn enu_origin_and_north_offset() {
        let o = gp(0.0, 0.0);
        assert_eq!(geo_to_enu(o, o).unwrap(), EnuPoint::new(0.0, 0.0));
        let p = geo_to_enu(o, gp(0.01, 0.0)).unwrap();
        assert!((p.y - 1111.95).abs() < 0.1);
        assert_eq!(p.x, 0.0);
    }

    #[test]
    fn enu_rejects_far_points() {
        let o = gp(-33.8, 151.0);
        assert!(geo_to_enu(o, gp(-32.5, 151.0)).is_err());
        assert!(geo_to_enu(o, gp(-33.8, 152.5)).is_err());
    }

    #[test]
    fn enu_round_trips() {
        let o = gp(-33.8, 151.0);
        let p = gp(-33.7912, 151.0077);
        let back = enu_to_geo(o, geo_to_enu(o, p).unwrap());
        assert!((back.lat - p.lat).abs() < 1e-12);
        assert!((back.lon - p.lon).abs() < 1e-12);
    }

    #[test]
    fn bearing_quadrants() {
        let o = EnuPoint::default();
        assert_eq!(o.bearing_to(&EnuPoint::new(0.0, 1.0)), 0.0);
        assert!((o.bearing_to(&EnuPoint::new(1.0, 0.0)) - 90.0).abs() < 1e-12);
        assert!((o.bearing_to(&EnuPoint::new(-1.0, 0.0)) - 270.0).abs() < 1e-12);
    }

    #[test]
    fn route_cases() {
        let r = cumulative_route_distance(&[gp(-33.8, 151.0)]).unwrap();
        assert_eq!(r.cumulative_m(), &[0.0]);

        assert!(cumulative_route_distance(&[]).is_err());

        let a = gp(-33.8, 151.0);
        let r = cumulative_route_distance(&[a, a, a]).unwrap();
        assert_eq!(r.cumulative_m(), &[0.0, 0.0, 0.0]);

        // 100 m due north
        let b = gp(-33.8 + (100.0 / EARTH_RADIUS_M).to_degrees(), 151.0);
        let r = cumulative_route_distance(&[a, b]).unwrap();
        assert!((r.cumulative_m()[1] - 100.0).abs() < 1e-6);
        assert!((r.total_length() - haversine_distance(a, b)).abs() < 1e-12);
    }

    fn arb_point() -> impl Strategy<Value = GeoPoint> {
        (-89.0..89.0f64, -179.0..179.0f64).prop_map(|(lat, lon)| GeoPoint { lat, lon })
    }

    fn arb_local(origin: GeoPoint) -> impl Strategy<Value = GeoPoint> {
        (-0.05..0.05f64, -0.05..0.05f64).prop_map(move |(a, b)| GeoPoint {
            lat: origin.lat + a,
            lon: origin.lon + b,
        })
    }

    proptest! {
        #[test]
        fn haversine_symmetric(a in arb_point(), b in arb_point()) {
            prop_assert_eq!(haversine_distance(a, b), haversine_distance(b, a));
            prop_assert!(haversine_distance(a, b) >= 0.0);
        }

        #[test]
        fn haversine_triangle(a in arb_point(), b in arb_point(), c in arb_point()) {
            let ab = haversine_distance(a, b);
            let bc = haversine_distance(b, c);
            let ac = haversine_distance(a, c);
            prop_assert!(ac <= ab + bc + 1e-6);
        }

        #[test]
        fn enu_agrees_with_haversine(p in arb_local(GeoPoint { lat: -33.8, lon: 151.0 })) {
            let o = GeoPoint { lat: -33.8, lon: 151.0 };
            let h = haversine_distance(o, p);
            prop_assume!(h > 1.0 && h < 10_000.0);
            let e = geo_to_enu(o, p).unwrap().norm();
            prop_assert!(((e - h) / h).abs() < 1e-3, "enu {} haversine {}", e, h);
        }

        #[test]
        fn route_nondecreasing(pts in prop::collection::vec(arb_point(), 1..40)) {
            let r = cumulative_route_distance(&pts).unwrap();
            prop_assert_eq!(r.cumulative_m()[0], 0.0);
            prop_assert_eq!(r.len(), pts.len());
            for w in r.cumulative_m().windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
        }
    }
}
