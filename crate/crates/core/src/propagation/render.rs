//! Plain-text PPM heatmap of a coverage map.
//!
//! Color ramp (NRSRP, dBm):
//!
//! | range          | color  | RGB           |
//! |----------------|--------|---------------|
//! | >= −80         | red    | 255, 0, 0     |
//! | [−90, −80)     | yellow | 255, 255, 0   |
//! | [−100, −90)    | orange | 255, 165, 0   |
//! | [−110, −100)   | green  | 0, 176, 80    |
//! | [−120, −110)   | blue   | 0, 112, 192   |
//! | < −120         | grey   | 191, 191, 191 |
//! | nodata         | black  | 0, 0, 0       |

use std::fmt::Write as _;

use super::CoverageMap;

const RAMP: [(f64, [u8; 3]); 5] = [
    (-80.0, [255, 0, 0]),
    (-90.0, [255, 255, 0]),
    (-100.0, [255, 165, 0]),
    (-110.0, [0, 176, 80]),
    (-120.0, [0, 112, 192]),
];
const BELOW: [u8; 3] = [191, 191, 191];

pub fn band_color(nrsrp_dbm: f64) -> [u8; 3] {
    RAMP.iter()
        .find(|(lo, _)| nrsrp_dbm >= *lo)
        .map_or(BELOW, |(_, c)| *c)
}

/// P3 image, north row first, one pixel per cell.
pub fn render_ppm(map: &CoverageMap) -> String {
    let g = &map.nrsrp;
    let mut out = String::with_capacity(g.values().len() * 12 + 32);
    let _ = writeln!(out, "P3\n{} {}\n255", g.ncols(), g.nrows());
    for row in g.values().chunks(g.ncols()) {
        let line: Vec<String> = row
            .iter()
            .map(|v| {
                let [r, gr, b] = if g.is_nodata(*v) { [0, 0, 0] } else { band_color(*v) };
                format!("{r} {gr} {b}")
            })
            .collect();
        out.push_str(&line.join("  "));
        out.push('\n');
    }
    out
}
