//! Linearly implicit parametric finite-element scheme.
//!
//! With piecewise-linear curve and curvature on the current polygon `γ^m`,
//! one time step solves the symmetric saddle-point system
//!
//! ```text
//! ⎡ (τ/π)M + (τ/2π)L   Nᵀ ⎤ ⎡ κ^{m+1} ⎤   ⎡ Nᵀγ^m ⎤
//! ⎣        N           −A ⎦ ⎣ γ^{m+1} ⎦ = ⎣   0   ⎦
//! ```
//!
//! where `M` is the lumped mass, `N` the weighted vertex normals, `A` the
//! stiffness matrix of the arclength Laplacian, and `L` the mass-lumped
//! nonlocal interaction. The second row is the weak identity `κν = −∂ₛ²γ`, so
//! `κ` is the geometric curvature.
//!
//! Unknowns are ordered `κ_0..κ_{n−1}, x_0, y_0, …, x_{n−1}, y_{n−1}`.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{chord_arc_constant, midpoint_nodes, GeometryError, PlaneVector, PolygonalCurve};
use crate::linsolve::{self, DenseSystem, SolveError};

/// Vertex pairs closer than this make `L` meaningless.
pub const COINCIDENCE_DISTANCE: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshFailure {
    #[error("minimum edge {min_edge:e} below {threshold:e}")]
    MinEdge { min_edge: f64, threshold: f64 },
    #[error("chord-arc constant {value:e} below {threshold:e}")]
    ChordArc { value: f64, threshold: f64 },
    #[error(transparent)]
    Invalid(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("vertices {j} and {k} coincide")]
    CoincidentVertices { j: usize, k: usize },
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("linear solve failed: {0}")]
    SolveFailed(#[from] SolveError),
    #[error("mesh degenerated: {0}")]
    MeshDegenerate(MeshFailure),
}

/// The assembled blocks for one polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeMatrices {
    n: usize,
    /// Row-major `n × n`.
    pub l: Vec<f64>,
    /// Diagonal of `M`.
    pub m: Vec<f64>,
    /// Diagonal of `N`.
    pub nw: Vec<PlaneVector>,
    /// `1 / r_j` for the edge entering vertex `j`; determines `A`.
    pub inv_edge: Vec<f64>,
}

/// `L_jk = [Nw_j·(γ_k−γ_j)] [Nw_k·(γ_k−γ_j)] / |γ_k−γ_j|³`, zero on the diagonal.
pub fn assemble_l(curve: &PolygonalCurve) -> Result<Vec<f64>, SchemeError> {
    let n = curve.len();
    let v = curve.vertices();
    let nw = curve.vertex_weighted_normals();
    let mut l = vec![0.0; n * n];
    l.par_chunks_mut(n).enumerate().try_for_each(|(j, row)| {
        for k in 0..n {
            if k == j {
                continue;
            }
            let d = v[k] - v[j];
            let r = d.norm();
            if r < COINCIDENCE_DISTANCE {
                return Err(SchemeError::CoincidentVertices { j: j.min(k), k: j.max(k) });
            }
            row[k] = nw[j].dot(d) * nw[k].dot(d) / (r * r * r);
        }
        Ok(())
    })?;
    Ok(l)
}

/// Lumped mass `M_jj = (r_j + r_{j+1}) / 2`.
pub fn assemble_m(curve: &PolygonalCurve) -> Vec<f64> {
    let r = curve.edge_lengths();
    let n = r.len();
    (0..n).map(|j| 0.5 * (r[j] + r[(j + 1) % n])).collect()
}

pub fn assemble_n(curve: &PolygonalCurve) -> Vec<PlaneVector> {
    curve.vertex_weighted_normals()
}

/// Reciprocal edge lengths; `A` is `diag(1/r_j + 1/r_{j+1})` with `−1/r_j`
/// coupling `j` to `j − 1` and `−1/r_{j+1}` coupling `j` to `j + 1`.
pub fn assemble_a(curve: &PolygonalCurve) -> Result<Vec<f64>, SchemeError> {
    curve
        .edge_lengths()
        .into_iter()
        .enumerate()
        .map(|(j, r)| {
            if r > 0.0 {
                Ok(1.0 / r)
            } else {
                Err(SchemeError::Geometry(GeometryError::DegenerateEdge { index: j }))
            }
        })
        .collect()
}

impl SchemeMatrices {
    pub fn assemble(curve: &PolygonalCurve) -> Result<Self, SchemeError> {
        Ok(Self {
            n: curve.len(),
            l: assemble_l(curve)?,
            m: assemble_m(curve),
            nw: assemble_n(curve),
            inv_edge: assemble_a(curve)?,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn l_entry(&self, j: usize, k: usize) -> f64 {
        self.l[j * self.n + k]
    }

    /// Scalar coefficient `A_jk` (the block is `A_jk I₂`).
    pub fn a_entry(&self, j: usize, k: usize) -> f64 {
        let n = self.n;
        let next = (j + 1) % n;
        let mut a = 0.0;
        if k == j {
            a += self.inv_edge[j] + self.inv_edge[next];
        }
        if k == (j + n - 1) % n {
            a -= self.inv_edge[j];
        }
        if k == next {
            a -= self.inv_edge[next];
        }
        a
    }

    /// `A` applied to a vertex field.
    pub fn apply_a(&self, field: &[PlaneVector]) -> Vec<PlaneVector> {
        let n = self.n;
        (0..n)
            .map(|j| {
                let prev = (j + n - 1) % n;
                let next = (j + 1) % n;
                (field[j] - field[prev]) * self.inv_edge[j] - (field[next] - field[j]) * self.inv_edge[next]
            })
            .collect()
    }

    /// Full `3n × 3n` system for time step `tau` starting from `positions`.
    pub fn block_system(&self, positions: &[PlaneVector], tau: f64) -> DenseSystem {
        let n = self.n;
        let mut sys = DenseSystem::zeros(3 * n);
        let local = tau / PI;
        let nonlocal = tau / (2.0 * PI);
        for j in 0..n {
            for k in 0..n {
                sys.set(j, k, nonlocal * self.l_entry(j, k));
            }
            sys.add(j, j, local * self.m[j]);

            let (gx, gy) = (n + 2 * j, n + 2 * j + 1);
            let w = self.nw[j];
            sys.set(j, gx, w.x);
            sys.set(j, gy, w.y);
            sys.set(gx, j, w.x);
            sys.set(gy, j, w.y);

            for k in [(j + n - 1) % n, j, (j + 1) % n] {
                let a = self.a_entry(j, k);
                sys.set(gx, n + 2 * k, -a);
                sys.set(gy, n + 2 * k + 1, -a);
            }
            sys.rhs_mut()[j] = w.dot(positions[j]);
        }
        sys
    }
}

/// Assemble the time-step system for `curve`.
pub fn build_block_system(curve: &PolygonalCurve, tau: f64) -> Result<DenseSystem, SchemeError> {
    if !(tau > 0.0) {
        return Err(SchemeError::InvalidTimeStep(tau));
    }
    Ok(SchemeMatrices::assemble(curve)?.block_system(curve.vertices(), tau))
}

/// Vertex curvatures solving `κ_j Nw_j = (Aγ)_j` in the least-squares sense.
pub fn discrete_curvature(curve: &PolygonalCurve) -> Vec<f64> {
    let mats = SchemeMatrices {
        n: curve.len(),
        l: Vec::new(),
        m: Vec::new(),
        nw: assemble_n(curve),
        inv_edge: curve.edge_lengths().into_iter().map(|r| 1.0 / r).collect(),
    };
    mats.apply_a(curve.vertices())
        .into_iter()
        .zip(&mats.nw)
        .map(|(ag, w)| ag.dot(*w) / w.norm_squared())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub curve: PolygonalCurve,
    pub curvature: Vec<f64>,
    pub step: usize,
    pub time: f64,
}

impl SimulationState {
    /// Step-zero state; curvature is recovered from the polygon itself.
    pub fn initial(curve: PolygonalCurve) -> Self {
        let curvature = discrete_curvature(&curve);
        Self { curve, curvature, step: 0, time: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// `max_j |γ_j^{m+1} − γ_j^m|`.
    pub max_displacement: f64,
    /// Relative residual of the linear solve.
    pub linear_residual: f64,
    pub min_edge_after: f64,
}

impl StepReport {
    pub fn at_rest(curve: &PolygonalCurve) -> Self {
        Self { max_displacement: 0.0, linear_residual: 0.0, min_edge_after: curve.min_edge() }
    }
}

/// Mesh-health thresholds checked after every step. Zero disables a check.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeshGuard {
    pub min_edge: f64,
    pub chord_arc_min: f64,
}

impl MeshGuard {
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn check(&self, curve: &PolygonalCurve) -> Result<(), MeshFailure> {
        let min_edge = curve.min_edge();
        if min_edge < self.min_edge {
            return Err(MeshFailure::MinEdge { min_edge, threshold: self.min_edge });
        }
        if self.chord_arc_min > 0.0 {
            let value = chord_arc_constant(curve, &midpoint_nodes(curve.len()));
            if value < self.chord_arc_min {
                return Err(MeshFailure::ChordArc { value, threshold: self.chord_arc_min });
            }
        }
        Ok(())
    }
}

/// Advance one time step of size `tau`.
pub fn step(
    state: &SimulationState,
    tau: f64,
    guard: &MeshGuard,
) -> Result<(SimulationState, StepReport), SchemeError> {
    let system = build_block_system(&state.curve, tau)?;
    let solution = linsolve::solve(&system)?;
    let n = state.curve.len();

    let curvature = solution.x[..n].to_vec();
    let positions: Vec<PlaneVector> = solution.x[n..]
        .chunks_exact(2)
        .map(|p| PlaneVector::new(p[0], p[1]))
        .collect();
    let max_displacement = positions
        .iter()
        .zip(state.curve.vertices())
        .map(|(a, b)| (*a - *b).norm())
        .fold(0.0, f64::max);

    let curve = PolygonalCurve::new(positions)
        .map_err(|e| SchemeError::MeshDegenerate(MeshFailure::Invalid(e)))?;
    guard.check(&curve).map_err(SchemeError::MeshDegenerate)?;

    let report = StepReport {
        max_displacement,
        linear_residual: solution.relative_residual,
        min_edge_after: curve.min_edge(),
    };
    let next = SimulationState {
        curve,
        curvature,
        step: state.step + 1,
        time: state.time + tau,
    };
    Ok((next, report))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    pub tau: f64,
    pub steps: usize,
    pub guard: MeshGuard,
}

#[derive(Debug, Error)]
pub enum RunError<E> {
    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        source: SchemeError,
        /// Last accepted state.
        last: Box<SimulationState>,
    },
    #[error("output sink failed: {0}")]
    Sink(E),
}

/// Run `params.steps` steps from `initial`, calling `sink` on the initial
/// state and after every accepted step.
pub fn run<E>(
    initial: PolygonalCurve,
    params: &RunParams,
    mut sink: impl FnMut(&SimulationState, &StepReport) -> Result<(), E>,
) -> Result<SimulationState, RunError<E>> {
    let mut state = SimulationState::initial(initial);
    sink(&state, &StepReport::at_rest(&state.curve)).map_err(RunError::Sink)?;
    for _ in 0..params.steps {
        match step(&state, params.tau, &params.guard) {
            Ok((next, report)) => {
                sink(&next, &report).map_err(RunError::Sink)?;
                state = next;
            }
            Err(source) => {
                return Err(RunError::Step { step: state.step + 1, source, last: Box::new(state) });
            }
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::convert::Infallible;
    use std::f64::consts::SQRT_2;

    fn square() -> PolygonalCurve {
        PolygonalCurve::new(vec![
            PlaneVector::new(1.0, 0.0),
            PlaneVector::new(0.0, 1.0),
            PlaneVector::new(-1.0, 0.0),
            PlaneVector::new(0.0, -1.0),
        ])
        .unwrap()
    }

    fn wobbly(n: usize) -> PolygonalCurve {
        let v = (0..n)
            .map(|j| {
                let t = std::f64::consts::TAU * (j as f64 + 0.5) / n as f64;
                let r = 1.0 + 0.2 * (3.0 * t).cos() + 0.05 * (5.0 * t).sin();
                PlaneVector::new(1.5 * r * t.cos() + 0.3, r * t.sin() - 0.1)
            })
            .collect();
        PolygonalCurve::new(v).unwrap()
    }

    #[test]
    fn square_blocks() {
        let m = SchemeMatrices::assemble(&square()).unwrap();
        for j in 0..4 {
            assert_eq!(m.m[j], SQRT_2);
            assert_eq!(m.l_entry(j, j), 0.0);
        }
        assert_eq!(m.nw[0], PlaneVector::new(1.0, 0.0));
        let sum: f64 = m.m.iter().sum();
        assert_relative_eq!(sum, square().total_length(), max_relative = 1e-15);
    }

    #[test]
    fn regular_polygon_blocks() {
        let n = 24;
        let c = PolygonalCurve::regular(n, 1.0).unwrap();
        let m = SchemeMatrices::assemble(&c).unwrap();
        let r = 2.0 * (PI / n as f64).sin();
        for j in 0..n {
            assert_relative_eq!(m.m[j], r, max_relative = 1e-13);
            assert_relative_eq!(m.a_entry(j, j), 2.0 / r, max_relative = 1e-13);
            assert_relative_eq!(m.a_entry(j, (j + 1) % n), -1.0 / r, max_relative = 1e-13);
            assert_relative_eq!(m.a_entry(j, (j + n - 1) % n), -1.0 / r, max_relative = 1e-13);
            assert_eq!(m.a_entry(j, (j + 5) % n), 0.0);
        }
    }

    #[test]
    fn a_kills_constants_and_is_symmetric() {
        let c = wobbly(17);
        let m = SchemeMatrices::assemble(&c).unwrap();
        let constant = vec![PlaneVector::new(2.5, -7.0); 17];
        for v in m.apply_a(&constant) {
            assert!(v.norm() < 1e-12);
        }
        for j in 0..17 {
            let row: f64 = (0..17).map(|k| m.a_entry(j, k)).sum();
            assert!(row.abs() < 1e-12);
            for k in 0..17 {
                assert_eq!(m.a_entry(j, k), m.a_entry(k, j));
                assert_eq!(m.l_entry(j, k), m.l_entry(k, j));
            }
        }
    }

    #[test]
    fn mirrored_curve_has_same_l() {
        let c = wobbly(12);
        // reflect x -> -x and reverse order to keep the orientation
        let mut v: Vec<_> = c.vertices().iter().map(|p| PlaneVector::new(-p.x, p.y)).collect();
        v.reverse();
        let mirror = PolygonalCurve::new(v).unwrap();
        let l = assemble_l(&c).unwrap();
        let lm = assemble_l(&mirror).unwrap();
        let n = 12;
        for j in 0..n {
            for k in 0..n {
                let (jm, km) = (n - 1 - j, n - 1 - k);
                assert_relative_eq!(l[j * n + k], lm[jm * n + km], max_relative = 1e-12, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn coincident_vertices_rejected() {
        let pinch = PlaneVector::new(0.0, 0.0);
        let c = PolygonalCurve::new(vec![
            PlaneVector::new(1.0, -1.0),
            pinch,
            PlaneVector::new(1.0, 1.0),
            PlaneVector::new(-1.0, 1.0),
            pinch,
            PlaneVector::new(-1.0, -1.0),
        ])
        .unwrap();
        assert_eq!(assemble_l(&c), Err(SchemeError::CoincidentVertices { j: 1, k: 4 }));
    }

    #[test]
    fn block_system_shape_and_consistency() {
        let c = PolygonalCurve::regular(10, 1.0).unwrap();
        let sys = build_block_system(&c, 1e-2).unwrap();
        assert_eq!(sys.dim(), 30);
        assert_eq!(sys.rhs().len(), 30);
        assert!(build_block_system(&c, 0.0).is_err());

        // system · (κ = 0, γ = γ^m) = (Nᵀγ^m, −Aγ^m)
        let mut x = vec![0.0; 30];
        for (j, p) in c.vertices().iter().enumerate() {
            x[10 + 2 * j] = p.x;
            x[10 + 2 * j + 1] = p.y;
        }
        let y = sys.apply(&x);
        let m = SchemeMatrices::assemble(&c).unwrap();
        let ag = m.apply_a(c.vertices());
        for j in 0..10 {
            assert_relative_eq!(y[j], sys.rhs()[j], max_relative = 1e-14);
            assert_relative_eq!(y[10 + 2 * j], -ag[j].x, max_relative = 1e-12, epsilon = 1e-14);
            assert_relative_eq!(y[10 + 2 * j + 1], -ag[j].y, max_relative = 1e-12, epsilon = 1e-14);
            // regular polygon: Aγ is radial
            assert!(ag[j].cross(c.vertices()[j]).abs() < 1e-13);
        }
        // symmetric saddle point matrix
        for i in 0..30 {
            for k in 0..30 {
                assert_eq!(sys.get(i, k), sys.get(k, i));
            }
        }
    }

    #[test]
    fn discrete_curvature_on_polygons() {
        // regular polygon of radius R: κ = 1 / (R cos(π/N))
        let c = PolygonalCurve::regular(64, 2.0).unwrap();
        for k in discrete_curvature(&c) {
            assert_relative_eq!(k, 1.0 / (2.0 * (PI / 64.0).cos()), max_relative = 1e-12);
        }
    }

    #[test]
    fn circle_is_nearly_stationary() {
        let state = SimulationState::initial(PolygonalCurve::regular(200, 1.0).unwrap());
        let (next, report) = step(&state, 1e-2, &MeshGuard::disabled()).unwrap();
        assert!(report.max_displacement <= 5e-4);
        assert!(report.linear_residual <= 1e-8);
        assert_eq!(next.step, 1);
        assert_relative_eq!(next.time, 1e-2);
        for k in &next.curvature {
            assert_relative_eq!(*k, 1.0, max_relative = 1e-3);
        }
    }

    #[test]
    fn translation_commutes_with_step() {
        let c = wobbly(20);
        let shift = PlaneVector::new(3.0, -2.0);
        let guard = MeshGuard::disabled();
        let (a, _) = step(&SimulationState::initial(c.clone()), 1e-2, &guard).unwrap();
        let (b, _) = step(&SimulationState::initial(c.translated(shift)), 1e-2, &guard).unwrap();
        for (p, q) in a.curve.vertices().iter().zip(b.curve.vertices()) {
            assert!((*p + shift - *q).norm() < 1e-12);
        }
        for (p, q) in a.curvature.iter().zip(&b.curvature) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn rotation_commutes_with_step() {
        let c = wobbly(20);
        let angle = 0.7;
        let guard = MeshGuard::disabled();
        let (a, _) = step(&SimulationState::initial(c.clone()), 1e-2, &guard).unwrap();
        let (b, _) = step(&SimulationState::initial(c.rotated(angle)), 1e-2, &guard).unwrap();
        let a_rot = a.curve.rotated(angle);
        for (p, q) in a_rot.vertices().iter().zip(b.curve.vertices()) {
            assert!((*p - *q).norm() < 1e-10);
        }
    }

    #[test]
    fn guard_trips() {
        let state = SimulationState::initial(PolygonalCurve::regular(16, 1.0).unwrap());
        let guard = MeshGuard { min_edge: 1.0, chord_arc_min: 0.0 };
        assert!(matches!(
            step(&state, 1e-2, &guard),
            Err(SchemeError::MeshDegenerate(MeshFailure::MinEdge { .. }))
        ));
        let guard = MeshGuard { min_edge: 0.0, chord_arc_min: 100.0 };
        assert!(matches!(
            step(&state, 1e-2, &guard),
            Err(SchemeError::MeshDegenerate(MeshFailure::ChordArc { .. }))
        ));
    }

    #[test]
    fn zero_steps_is_identity() {
        let c = wobbly(30);
        let params = RunParams { tau: 1e-2, steps: 0, guard: MeshGuard::disabled() };
        let mut calls = 0;
        let out = run(c.clone(), &params, |_, _| {
            calls += 1;
            Ok::<(), Infallible>(())
        })
        .unwrap();
        assert_eq!(out.curve, c);
        assert_eq!(out.step, 0);
        assert_eq!(calls, 1);
    }

    #[test]
    fn run_reports_failing_step() {
        let c = PolygonalCurve::regular(16, 1.0).unwrap();
        let params = RunParams { tau: 1e-2, steps: 5, guard: MeshGuard { min_edge: 1.0, chord_arc_min: 0.0 } };
        match run(c, &params, |_, _| Ok::<(), Infallible>(())) {
            Err(RunError::Step { step, last, .. }) => {
                assert_eq!(step, 1);
                assert_eq!(last.step, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
