//! Multi-depth non-revisiting uniform coverage planning for multibeam
//! bathymetric surveys, with back-and-forth baselines and a survey simulator.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod coverage;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod partition;
pub mod pipeline;
pub mod planner;
pub mod sonar;
pub mod terrain;

pub use error::{Error, Result};
pub use geometry::Point2;
