//! Per-step observables, convergence orders and far-field decay fits.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{chord_arc_constant, midpoint_nodes, PolygonalCurve};
use crate::scheme::{SimulationState, StepReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub length: f64,
    pub area: f64,
    /// `L² / (4πA)`.
    pub isoperimetric_ratio: f64,
    pub min_edge: f64,
    pub chord_arc: f64,
    pub max_displacement: f64,
}

pub fn isoperimetric_ratio(curve: &PolygonalCurve) -> f64 {
    let l = curve.total_length();
    l * l / (4.0 * PI * curve.enclosed_area())
}

pub fn record(state: &SimulationState, report: &StepReport) -> DiagnosticsRecord {
    let curve = &state.curve;
    let length = curve.total_length();
    let area = curve.enclosed_area();
    DiagnosticsRecord {
        step: state.step,
        time: state.time,
        length,
        area,
        isoperimetric_ratio: length * length / (4.0 * PI * area),
        min_edge: curve.min_edge(),
        chord_arc: chord_arc_constant(curve, &midpoint_nodes(curve.len())),
        max_displacement: report.max_displacement,
    }
}

/// Least-squares slope of `log y` against `log x`.
fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Experimental order of convergence from `(h, error)` pairs with `h` strictly decreasing.
pub fn estimated_order(samples: &[(f64, f64)]) -> Result<f64, DiagnosticsError> {
    if samples.len() < 2 {
        return Err(DiagnosticsError::InsufficientSamples(samples.len()));
    }
    if samples.windows(2).any(|w| !(w[1].0 < w[0].0)) {
        return Err(DiagnosticsError::InvalidSample("mesh sizes must strictly decrease".into()));
    }
    if samples.iter().any(|&(h, e)| !(h > 0.0 && e > 0.0)) {
        return Err(DiagnosticsError::InvalidSample("mesh sizes and errors must be positive".into()));
    }
    let (h, e): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    Ok(log_log_slope(&h, &e))
}

/// Log-log slope of a far-field magnitude against radius.
pub fn decay_slope(radii: &[f64], magnitudes: &[f64]) -> Result<f64, DiagnosticsError> {
    if radii.len() != magnitudes.len() {
        return Err(DiagnosticsError::InvalidSample("radii and magnitudes differ in length".into()));
    }
    if radii.len() < 2 {
        return Err(DiagnosticsError::InsufficientSamples(radii.len()));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] <= 0.0 {
        return Err(DiagnosticsError::InvalidSample("radii must be positive and increasing".into()));
    }
    if magnitudes.iter().any(|m| !(*m > 0.0)) {
        return Err(DiagnosticsError::InvalidSample("magnitudes must be positive".into()));
    }
    Ok(log_log_slope(radii, magnitudes))
}

/// Symmetric Hausdorff distance between two polygons, measured point-to-segment.
pub fn hausdorff_distance(a: &PolygonalCurve, b: &PolygonalCurve) -> f64 {
    fn one_sided(from: &PolygonalCurve, to: &PolygonalCurve) -> f64 {
        let t = to.vertices();
        from.vertices()
            .iter()
            .map(|&p| {
                (0..t.len())
                    .map(|j| {
                        let (s0, s1) = (t[j], t[(j + 1) % t.len()]);
                        let seg = s1 - s0;
                        let u = ((p - s0).dot(seg) / seg.norm_squared()).clamp(0.0, 1.0);
                        (p - (s0 + seg * u)).norm()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
    one_sided(a, b).max(one_sided(b, a))
}

pub const CSV_HEADER: &str = "step,time,length,area,isoperimetric_ratio,min_edge,chord_arc,max_displacement";

/// Incremental `diagnostics.csv` writer; flushes after every row.
pub struct DiagnosticsWriter<W: Write> {
    out: W,
}

impl DiagnosticsWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> io::Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn write(&mut self, r: &DiagnosticsRecord) -> io::Result<()> {
        writeln!(
            self.out,
            "{},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e}",
            r.step, r.time, r.length, r.area, r.isoperimetric_ratio, r.min_edge, r.chord_arc, r.max_displacement
        )?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
