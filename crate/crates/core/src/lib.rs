//! 5G NR cell planning and drive-test analysis.
//!
//! - [`geo`]: coordinates, local projection, routes and ESRI ASCII rasters.
//! - [`radio_math`]: dB conversions, thermal noise, NRSRQ/SINR and Shannon sizing.
//! - [`link_budget`]: EIRP, sensitivity, required NRSRP and MAPL.
//! - [`propagation`]: beam-swept coverage prediction over DTM and clutter.
//! - [`drive_test`]: scanner log ingestion, Lee local-mean filtering, UE statistics.
//! - [`calibrate`]: measured-versus-predicted comparison and clutter offset tuning.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN too.

pub mod calibrate;
pub mod drive_test;
mod error;
pub mod geo;
pub mod link_budget;
pub mod propagation;
pub mod radio_math;

pub use error::{Error, Result};
