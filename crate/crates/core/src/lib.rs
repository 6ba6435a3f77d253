//! Analysis toolkit for millimeter-wave hand and body blockage of UE beam
//! patterns: spherical coverage statistics, region-of-interest definitions,
//! blockage-loss distributions and blockage-model comparison, plus a
//! synthetic phased-array pattern generator.

// `!(x > 0.0)` style guards are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod grid;
pub mod io;
pub mod models;
pub mod roi;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use grid::{AngularGrid, GridMask, Pattern, PatternKind, PatternSet, WeightField, FLOOR_DB};
