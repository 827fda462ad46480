//! Evolution of a closed planar domain boundary in a Langmuir monolayer.
//!
//! The boundary moves with the normal velocity of the surface flow driven by
//! line tension: a local curvature term plus a nonlocal single-layer
//! interaction. [`scheme`] holds the parametric finite-element time stepper,
//! [`kernel`] the continuum kernel and off-curve velocity field used to check
//! it.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod diagnostics;
pub mod geometry;
pub mod initcurves;
pub mod kernel;
pub mod linsolve;
pub mod scheme;
pub mod verify;

pub use geometry::{PlaneVector, PolygonalCurve};
pub use kernel::SmoothCurveSample;
pub use scheme::{SimulationState, StepReport};
