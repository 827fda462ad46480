//! Self-checks run by `langmuir verify`: kernel oracles, exact scheme identities
//! and convergence studies, each reported as a named pass/fail line.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::time::Instant;

use crate::diagnostics::{decay_slope, estimated_order, isoperimetric_ratio};
use crate::geometry::{PlaneVector, PolygonalCurve};
use crate::initcurves::{bola, circle, ellipse, AnalyticCurve};
use crate::kernel::{
    interaction_kernel, normal_limit_velocity, off_curve_velocity, polygon_samples, SmoothCurveSample,
};
use crate::linsolve;
use crate::scheme::{self, discrete_curvature, MeshGuard, RunParams, SchemeMatrices, SimulationState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Kernel,
    Scheme,
    Convergence,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Run a suite, handing each check to `report` as soon as it finishes.
pub fn run_suite(suite: Suite, mut report: impl FnMut(&Check)) -> Vec<Check> {
    let groups: &[fn() -> Vec<Check>] = match suite {
        Suite::Kernel => &[kernel_checks],
        Suite::Scheme => &[scheme_checks],
        Suite::Convergence => &[convergence_checks],
        Suite::All => &[kernel_checks, scheme_checks, convergence_checks],
    };
    let mut all = Vec::new();
    for group in groups {
        for c in group() {
            report(&c);
            all.push(c);
        }
    }
    all
}

pub fn kernel_checks() -> Vec<Check> {
    vec![
        circle_kernel_oracle(),
        normal_limit_matching("normal limit matches one-sided limits (circle)", &circle(1.0, PlaneVector::ZERO).unwrap()),
        normal_limit_matching("normal limit matches one-sided limits (2:1 ellipse)", &ellipse(2.0, 1.0).unwrap()),
        one_sided_limits_converge(),
        ellipse_tip_retracts(),
        dipole_decay(),
    ]
}

pub fn scheme_checks() -> Vec<Check> {
    let (equilibrium, curvature) = circle_equilibrium_and_curvature();
    vec![exact_identities(), equilibrium, curvature]
}

pub fn convergence_checks() -> Vec<Check> {
    reference_bola_checks()
}

fn on_circle(radius: f64, angle: f64) -> SmoothCurveSample {
    let nu = PlaneVector::new(angle.cos(), angle.sin());
    SmoothCurveSample { position: nu * radius, unit_outward_normal: nu, curvature: 1.0 / radius, arc_weight: 0.0 }
}

fn circle_kernel_oracle() -> Check {
    let mut worst: f64 = 0.0;
    for &radius in &[0.3, 1.0, 2.5, 7.0] {
        for &phi in &[0.1, 1.0, 2.0, PI, 5.5] {
            let base = 0.37 * radius;
            let k = interaction_kernel(&on_circle(radius, base), &on_circle(radius, base + phi)).unwrap();
            worst = worst.max((k + (0.5 * phi).sin().abs() / (2.0 * radius)).abs());
        }
    }
    Check::new("circle kernel oracle", worst <= 1e-12, format!("max error {worst:.2e} over 20 (R, phi) pairs (tol 1e-12)"))
}

/// Distances from the curve used by the normal-limit checks.
const APPROACH: [f64; 2] = [1e-1, 1e-2];
const LIMIT_NODES: usize = 4096;

/// Compare `u(z ± ℓν)` with the normal limit at `z`; the quadrature error is
/// estimated by doubling the number of nodes.
fn normal_limit_matching(name: &'static str, curve: &AnalyticCurve) -> Check {
    let coarse = curve.smooth_samples(LIMIT_NODES);
    let fine = curve.smooth_samples(2 * LIMIT_NODES);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_side: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for frac in [0.0, 0.125, 0.3] {
        let i = (frac * LIMIT_NODES as f64) as usize;
        let z = coarse[i];
        let limit = normal_limit_velocity(&coarse, i);
        let limit_err = (limit - normal_limit_velocity(&fine, 2 * i)).norm();
        for &ell in &APPROACH {
            let mut side = [(PlaneVector::ZERO, 0.0); 2];
            for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
                let x = z.position + z.unit_outward_normal * (sign * ell);
                let u = off_curve_velocity(&coarse, x).unwrap();
                let quad = (u - off_curve_velocity(&fine, x).unwrap()).norm() + limit_err;
                let quad = quad.max(1e-15);
                let gap = (u - limit).norm();
                worst_gap = worst_gap.max(gap);
                worst_ratio = worst_ratio.max(gap / quad);
                side[k] = (u, quad);
            }
            let mismatch = (side[0].0 - side[1].0).norm() / (2.0 * (side[0].1 + side[1].1));
            worst_side = worst_side.max(mismatch);
        }
    }
    Check::new(
        name,
        worst_ratio <= 10.0 && worst_side <= 1.0,
        format!(
            "max gap {worst_gap:.2e}, max gap/quadrature error {worst_ratio:.2e} (tol 10), \
             max side mismatch/(2x error) {worst_side:.2e} (tol 1)"
        ),
    )
}

/// On the ellipse the one-sided gaps must vanish as `ℓ → 0`; the order is read
/// off the two smallest distances.
fn one_sided_limits_converge() -> Check {
    let s = ellipse(2.0, 1.0).unwrap().smooth_samples(32768);
    let ells = [1e-2, 1e-3];
    let mut worst_order = f64::INFINITY;
    for frac in [0.0, 0.125, 0.25] {
        let i = (frac * s.len() as f64) as usize;
        let limit = normal_limit_velocity(&s, i);
        for sign in [1.0, -1.0] {
            let gaps: Vec<(f64, f64)> = ells
                .iter()
                .map(|&ell| {
                    let x = s[i].position + s[i].unit_outward_normal * (sign * ell);
                    (ell, (off_curve_velocity(&s, x).unwrap() - limit).norm())
                })
                .collect();
            worst_order = worst_order.min(estimated_order(&gaps).unwrap_or(f64::NEG_INFINITY));
        }
    }
    Check::new(
        "one-sided gaps vanish as l -> 0 (2:1 ellipse)",
        worst_order >= 0.5,
        format!("min order in l {worst_order:.3} from l = 1e-2 to 1e-3, both sides (tol 0.5)"),
    )
}

fn ellipse_tip_retracts() -> Check {
    let s = ellipse(2.0, 1.0).unwrap().smooth_samples(4096);
    let tip = (0..s.len()).max_by(|&a, &b| s[a].position.x.total_cmp(&s[b].position.x)).unwrap();
    let un = normal_limit_velocity(&s, tip).dot(s[tip].unit_outward_normal);
    Check::new("ellipse tip retracts", un < 0.0, format!("normal velocity at (2,0) is {un:.5}"))
}

fn diameter(curve: &PolygonalCurve) -> f64 {
    let v = curve.vertices();
    v.iter().flat_map(|a| v.iter().map(move |b| (*a - *b).norm())).fold(0.0, f64::max)
}

fn dipole_decay() -> Check {
    let curve = bola(0.2, 0.4).unwrap().sample(200).unwrap();
    let samples = polygon_samples(&curve, &discrete_curvature(&curve));
    let diam = diameter(&curve);
    let dir = PlaneVector::new(0.6f64.cos(), 0.6f64.sin());
    let radii: Vec<f64> = (0..=10).map(|k| 10.0 * diam * 10f64.powf(k as f64 / 10.0)).collect();
    let mags: Vec<f64> = radii.iter().map(|&r| off_curve_velocity(&samples, dir * r).unwrap().norm()).collect();
    let slope = decay_slope(&radii, &mags).unwrap();
    Check::new(
        "dipole decay",
        (slope + 2.0).abs() <= 0.1,
        format!("slope {slope:.4} over radii [10, 100] x diameter (target -2 +/- 0.1)"),
    )
}

/// Deterministic star-shaped test curves with `8 ≤ N ≤ 64` vertices.
fn star_curves(count: usize) -> impl Iterator<Item = PolygonalCurve> {
    (0..count).map(|c| {
        let n = 8 + (c * 37) % 57;
        let a = 0.25 * ((c as f64) * 1.3).sin();
        let b = 0.15 * ((c as f64) * 0.7).cos();
        let k = 2 + c % 4;
        let shift = PlaneVector::new((c as f64).sin(), (c as f64 * 2.1).cos());
        let v = (0..n)
            .map(|j| {
                let t = TAU * (j as f64 + 0.3 * ((j * 7 + c) as f64).sin().abs()) / n as f64;
                let r = 1.0 + a * (k as f64 * t).cos() + b * (3.0 * t + 0.4).sin();
                shift + PlaneVector::new(r * t.cos(), r * t.sin())
            })
            .collect();
        PolygonalCurve::new(v).expect("star curve")
    })
}

fn exact_identities() -> Check {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for curve in star_curves(100) {
        let m = SchemeMatrices::assemble(&curve).unwrap();
        let n = m.len();
        let scale_l = m.l.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for j in 0..n {
            worst = worst.max(m.l_entry(j, j).abs());
            for k in 0..j {
                worst = worst.max((m.l_entry(j, k) - m.l_entry(k, j)).abs() / scale_l);
            }
        }
        let nw_sum = m.nw.iter().fold(PlaneVector::ZERO, |a, v| a + *v);
        worst = worst.max(nw_sum.norm() / curve.mean_edge());
        let constant = vec![PlaneVector::new(0.7, -1.9); n];
        let scale_a = m.inv_edge.iter().fold(0.0f64, |a, v| a.max(*v));
        for v in m.apply_a(&constant) {
            worst = worst.max(v.norm() / (2.0 * scale_a * 1.9));
        }
        let lumped: f64 = m.m.iter().sum();
        worst = worst.max((lumped - curve.total_length()).abs() / curve.total_length());
        count += 1;
    }
    Check::new(
        "exact discrete identities",
        worst <= 1e-13,
        format!("max relative defect {worst:.2e} over {count} curves (tol 1e-13)"),
    )
}

const REFINEMENT: [usize; 4] = [50, 100, 200, 400];

fn circle_equilibrium_and_curvature() -> (Check, Check) {
    let tau = 1e-2;
    let mut disp = Vec::new();
    let mut kerr = Vec::new();
    let mut worst_c: f64 = 0.0;
    for &n in &REFINEMENT {
        let state = SimulationState::initial(PolygonalCurve::regular(n, 1.0).unwrap());
        let (next, report) = scheme::step(&state, tau, &MeshGuard::disabled()).unwrap();
        let h = 1.0 / n as f64;
        let d = report.max_displacement / tau;
        worst_c = worst_c.max(d / (h * h));
        disp.push((h, d));
        kerr.push((h, next.curvature.iter().map(|k| (k - 1.0).abs()).fold(0.0, f64::max)));
    }
    let eoc_d = estimated_order(&disp).unwrap_or(f64::NAN);
    let eoc_k = estimated_order(&kerr).unwrap_or(f64::NAN);
    (
        Check::new(
            "circle equilibrium",
            worst_c <= 5.0 && eoc_d >= 1.8,
            format!("max N^2 disp/tau {worst_c:.3} (tol 5), EOC {eoc_d:.3} (tol 1.8)"),
        ),
        Check::new(
            "discrete curvature consistency",
            eoc_k >= 1.8,
            format!("max |kappa - 1| at N=400 {:.2e}, EOC {eoc_k:.3} (tol 1.8)", kerr[3].1),
        ),
    )
}

/// Observables of a bola run.
#[derive(Debug, Clone, PartialEq)]
pub struct BolaRun {
    pub steps_completed: usize,
    pub length_increases: usize,
    pub area_drift: f64,
    pub final_ratio: f64,
    pub max_residual: f64,
    pub failure: Option<String>,
    pub seconds: f64,
}

/// Evolve the default bola with the default mesh guard.
pub fn bola_run(n: usize, tau: f64, steps: usize) -> BolaRun {
    let start = Instant::now();
    let curve = bola(0.2, 0.4).unwrap().sample(n).unwrap();
    let area0 = curve.enclosed_area();
    let params = RunParams { tau, steps, guard: MeshGuard { min_edge: 0.05 * curve.mean_edge(), chord_arc_min: 0.05 } };
    let mut previous = f64::INFINITY;
    let mut length_increases = 0;
    let mut max_residual: f64 = 0.0;
    let result = scheme::run(curve, &params, |state, report| {
        let length = state.curve.total_length();
        if length > previous {
            length_increases += 1;
        }
        previous = length;
        max_residual = max_residual.max(report.linear_residual);
        Ok::<(), std::convert::Infallible>(())
    });
    let (last, failure) = match result {
        Ok(s) => (s, None),
        Err(scheme::RunError::Step { source, last, .. }) => (*last, Some(source.to_string())),
        Err(scheme::RunError::Sink(never)) => match never {},
    };
    BolaRun {
        steps_completed: last.step,
        length_increases,
        area_drift: (last.curve.enclosed_area() - area0).abs() / area0,
        final_ratio: isoperimetric_ratio(&last.curve),
        max_residual,
        failure,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn reference_bola_checks() -> Vec<Check> {
    let reference = bola_run(200, 1e-2, 1500);
    let refined = bola_run(400, 5e-3, 3000);
    let completed = |r: &BolaRun| r.failure.clone().unwrap_or_else(|| "none".into());
    vec![
        Check::new(
            "bola run: no mesh abort",
            reference.failure.is_none() && refined.failure.is_none(),
            format!("reference {} / refined {}", completed(&reference), completed(&refined)),
        ),
        Check::new(
            "bola run: length non-increasing",
            reference.length_increases == 0,
            format!("{} increases over {} steps", reference.length_increases, reference.steps_completed),
        ),
        Check::new(
            "bola run: area drift",
            reference.area_drift <= 0.02 && reference.area_drift >= 1.5 * refined.area_drift,
            format!(
                "drift {:.3e} (tol 2e-2), refined {:.3e}, reduction {:.2} (tol 1.5)",
                reference.area_drift,
                refined.area_drift,
                reference.area_drift / refined.area_drift
            ),
        ),
        Check::new(
            "bola run: final isoperimetric ratio",
            reference.final_ratio <= 1.01,
            format!("{:.6} (tol 1.01)", reference.final_ratio),
        ),
        Check::new(
            "bola run: linear residual",
            reference.max_residual <= linsolve::MAX_RELATIVE_RESIDUAL,
            format!("max relative residual {:.2e} (tol 1e-8)", reference.max_residual),
        ),
        Check::new(
            "bola run: wall time",
            reference.seconds <= 300.0,
            format!("reference {:.1} s (tol 300 s), refined {:.1} s", reference.seconds, refined.seconds),
        ),
    ]
}
