//! Single-layer kernel mathematics on the plane.
//!
//! The surface velocity generated by a line-tension force `−κν` concentrated
//! on a closed curve is the convolution of that force with the tensor
//! `E(x) = x⊗x / (2π|x|³)`. Everything here works on quadrature samples of
//! the curve ([`SmoothCurveSample`]) so analytic curves and polygons can be
//! treated alike. Integrals use the plain (periodic trapezoid / midpoint) rule
//! on the given samples.

use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{PlaneVector, PolygonalCurve};

/// Points closer than this are treated as coincident.
pub const SINGULAR_DISTANCE: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("fundamental solution is singular at |x| = {0:e}")]
    SingularPoint(f64),
    #[error("kernel evaluated at coincident points")]
    CoincidentPoints,
    #[error("evaluation point at distance {distance:e} from the curve, below the quadrature guard {guard:e}")]
    TooCloseToCurve { distance: f64, guard: f64 },
    #[error("radius must be positive, got {0}")]
    NonpositiveRadius(f64),
}

/// A 2×2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
}

impl Tensor2 {
    #[inline]
    pub fn apply(&self, v: PlaneVector) -> PlaneVector {
        PlaneVector::new(self.xx * v.x + self.xy * v.y, self.yx * v.x + self.yy * v.y)
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    #[inline]
    pub fn determinant(&self) -> f64 {
        self.xx * self.yy - self.xy * self.yx
    }

    pub fn is_symmetric(&self) -> bool {
        self.xy == self.yx
    }
}

/// One quadrature node of a closed curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothCurveSample {
    pub position: PlaneVector,
    pub unit_outward_normal: PlaneVector,
    /// Geometric curvature, positive where the curve is convex.
    pub curvature: f64,
    /// Arclength weight `ds` of this node.
    pub arc_weight: f64,
}

impl SmoothCurveSample {
    /// Line-tension force density `κν ds` carried by this node.
    #[inline]
    fn force(&self) -> PlaneVector {
        self.unit_outward_normal * (self.curvature * self.arc_weight)
    }
}

/// `E(x) = x⊗x / (2π|x|³)`.
pub fn fundamental_solution(x: PlaneVector) -> Result<Tensor2, KernelError> {
    let r = x.norm();
    if r < SINGULAR_DISTANCE {
        return Err(KernelError::SingularPoint(r));
    }
    let s = 1.0 / (2.0 * PI * r * r * r);
    let xy = s * x.x * x.y;
    Ok(Tensor2 {
        xx: s * x.x * x.x,
        xy,
        yx: xy,
        yy: s * x.y * x.y,
    })
}

/// `E(d) f` without forming the tensor.
#[inline]
fn single_layer_term(d: PlaneVector, f: PlaneVector) -> PlaneVector {
    let r2 = d.norm_squared();
    let r = r2.sqrt();
    d * (d.dot(f) / (2.0 * PI * r2 * r))
}

/// `K(z, y) = (ν(z)·(z−y)) (ν(y)·(z−y)) / |z−y|³`.
pub fn interaction_kernel(z: &SmoothCurveSample, y: &SmoothCurveSample) -> Result<f64, KernelError> {
    let d = z.position - y.position;
    let r = d.norm();
    if r < SINGULAR_DISTANCE {
        return Err(KernelError::CoincidentPoints);
    }
    Ok(z.unit_outward_normal.dot(d) * y.unit_outward_normal.dot(d) / (r * r * r))
}

/// `u(x) = −∫ E(x − y) ν(y) κ(y) ds(y)` for `x` off the curve.
pub fn off_curve_velocity(samples: &[SmoothCurveSample], x: PlaneVector) -> Result<PlaneVector, KernelError> {
    let guard = 2.0 * samples.iter().map(|s| s.arc_weight).fold(0.0, f64::max);
    let distance = samples
        .iter()
        .map(|s| (x - s.position).norm())
        .fold(f64::INFINITY, f64::min);
    if distance < guard {
        return Err(KernelError::TooCloseToCurve { distance, guard });
    }
    let mut u = PlaneVector::ZERO;
    for s in samples {
        u -= single_layer_term(x - s.position, s.force());
    }
    Ok(u)
}

/// Limit of the velocity at sample `at` along its normal (same from both sides):
/// `−κ(z)ν(z)/π − ∫ E(z − y) ν(y) κ(y) ds(y)`.
///
/// The integrand is bounded but direction-dependent at `y = z`; the self term
/// is omitted, which is the trapezoid value for its odd jump. Intended for
/// samples that resolve the curve (a few dozen nodes or more).
pub fn normal_limit_velocity(samples: &[SmoothCurveSample], at: usize) -> PlaneVector {
    let z = samples[at];
    let mut u = z.unit_outward_normal * (-z.curvature / PI);
    for (i, s) in samples.iter().enumerate() {
        if i == at {
            continue;
        }
        let d = z.position - s.position;
        if d.norm() < SINGULAR_DISTANCE {
            continue;
        }
        u -= single_layer_term(d, s.force());
    }
    u
}

/// Normal velocity `U = u·ν` of a circle of radius `radius`.
///
/// The local term `−1/(πR)` and the nonlocal term
/// `(1/(4πR)) ∫₀^{2π} |sin(φ/2)| dφ = 1/(πR)` cancel, so circles are stationary.
pub fn circle_normal_velocity_oracle(radius: f64) -> Result<f64, KernelError> {
    if !(radius > 0.0) {
        return Err(KernelError::NonpositiveRadius(radius));
    }
    let local = -1.0 / (PI * radius);
    // ∫₀^{2π} |sin(φ/2)| dφ = 4
    let nonlocal = 4.0 / (4.0 * PI * radius);
    Ok(local + nonlocal)
}

/// Quadrature samples of a polygon: normals along the weighted vertex normals,
/// lumped vertex weights `(r_j + r_{j+1})/2`, and the given vertex curvatures.
pub fn polygon_samples(curve: &PolygonalCurve, curvature: &[f64]) -> Vec<SmoothCurveSample> {
    assert_eq!(curve.len(), curvature.len());
    let r = curve.edge_lengths();
    let n = curve.len();
    (0..n)
        .map(|j| {
            let w = curve.vertex_weighted_normal(j);
            SmoothCurveSample {
                position: curve.vertices()[j],
                unit_outward_normal: w / w.norm(),
                curvature: curvature[j],
                arc_weight: 0.5 * (r[j] + r[(j + 1) % n]),
            }
        })
        .collect()
}

/// Net line-tension force `Σ κ_i ν_i w_i`; vanishes for closed curves as sampling refines.
pub fn net_force(samples: &[SmoothCurveSample]) -> PlaneVector {
    samples.iter().fold(PlaneVector::ZERO, |acc, s| acc + s.force())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, TAU};

    fn circle_sample(radius: f64, phi: f64, n: usize) -> SmoothCurveSample {
        let (s, c) = phi.sin_cos();
        SmoothCurveSample {
            position: PlaneVector::new(radius * c, radius * s),
            unit_outward_normal: PlaneVector::new(c, s),
            curvature: 1.0 / radius,
            arc_weight: TAU * radius / n as f64,
        }
    }

    fn circle(radius: f64, n: usize) -> Vec<SmoothCurveSample> {
        (0..n)
            .map(|j| circle_sample(radius, TAU * (j as f64 + 0.5) / n as f64, n))
            .collect()
    }

    #[test]
    fn fundamental_solution_values() {
        let e = fundamental_solution(PlaneVector::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(e.xx, 0.15915494309189535, max_relative = 1e-15);
        assert_eq!((e.xy, e.yx, e.yy), (0.0, 0.0, 0.0));
        let e = fundamental_solution(PlaneVector::new(0.0, 2.0)).unwrap();
        assert_relative_eq!(e.yy, 0.07957747154594767, max_relative = 1e-15);
        assert_eq!(e.xx, 0.0);

        let x = PlaneVector::new(0.3, -0.7);
        let e1 = fundamental_solution(x).unwrap();
        let e10 = fundamental_solution(x * 10.0).unwrap();
        assert_relative_eq!(e10.xx, e1.xx / 10.0, max_relative = 1e-14);
        assert_relative_eq!(e10.xy, e1.xy / 10.0, max_relative = 1e-14);
        assert_relative_eq!(e10.yy, e1.yy / 10.0, max_relative = 1e-14);
        assert!(e1.is_symmetric());
        assert_relative_eq!(e1.trace(), 1.0 / (TAU * x.norm()), max_relative = 1e-14);
        assert_relative_eq!(e1.determinant(), 0.0, epsilon = 1e-16);

        assert!(matches!(
            fundamental_solution(PlaneVector::new(1e-15, 0.0)),
            Err(KernelError::SingularPoint(_))
        ));
    }

    #[test]
    fn circle_kernel_closed_form() {
        let z = circle_sample(1.0, 0.0, 1);
        let k = interaction_kernel(&z, &circle_sample(1.0, PI, 1)).unwrap();
        assert_relative_eq!(k, -0.5, max_relative = 1e-14);
        let k = interaction_kernel(&z, &circle_sample(1.0, FRAC_PI_2, 1)).unwrap();
        assert_relative_eq!(k, -0.35355339059327373, max_relative = 1e-14);
        assert_eq!(interaction_kernel(&z, &z), Err(KernelError::CoincidentPoints));
    }

    #[test]
    fn kernel_is_symmetric_and_bounded_near_diagonal() {
        let z = SmoothCurveSample {
            position: PlaneVector::new(0.2, 1.1),
            unit_outward_normal: PlaneVector::new(0.6, 0.8),
            curvature: 0.0,
            arc_weight: 1.0,
        };
        let y = SmoothCurveSample {
            position: PlaneVector::new(-1.3, 0.4),
            unit_outward_normal: PlaneVector::new(-1.0, 0.0),
            curvature: 0.0,
            arc_weight: 1.0,
        };
        assert_eq!(interaction_kernel(&z, &y).unwrap(), interaction_kernel(&y, &z).unwrap());

        // ellipse, y -> z: K tends to a finite limit
        let (a, b) = (2.0, 1.0);
        let sample = |t: f64| {
            let (s, c) = t.sin_cos();
            let n = PlaneVector::new(b * c, a * s);
            SmoothCurveSample {
                position: PlaneVector::new(a * c, b * s),
                unit_outward_normal: n / n.norm(),
                curvature: 0.0,
                arc_weight: 1.0,
            }
        };
        let z = sample(0.3);
        let values: Vec<f64> = (1..8)
            .map(|k| interaction_kernel(&z, &sample(0.3 + 10f64.powi(-k))).unwrap())
            .collect();
        assert!(values.iter().all(|v| v.abs() < 10.0));
    }

    #[test]
    fn off_curve_velocity_center_and_guard() {
        let samples = circle(1.0, 256);
        let u = off_curve_velocity(&samples, PlaneVector::ZERO).unwrap();
        assert!(u.norm() < 1e-14);
        assert!(matches!(
            off_curve_velocity(&samples, PlaneVector::new(1.01, 0.0)),
            Err(KernelError::TooCloseToCurve { .. })
        ));
    }

    #[test]
    fn circle_normal_limit_vanishes() {
        for radius in [1.0, 2.0] {
            let mut prev = f64::INFINITY;
            for n in [64, 128, 256] {
                let samples = circle(radius, n);
                let u = normal_limit_velocity(&samples, 3).norm();
                assert!(u < 1.0 / (n * n) as f64, "R={radius} N={n}: {u}");
                assert!(u < prev);
                prev = u;
            }
        }
    }

    #[test]
    fn circle_oracle() {
        for r in [1.0, 0.5, 10.0] {
            assert_relative_eq!(circle_normal_velocity_oracle(r).unwrap(), 0.0, epsilon = 1e-15);
        }
        assert_eq!(circle_normal_velocity_oracle(0.0), Err(KernelError::NonpositiveRadius(0.0)));
    }

    #[test]
    fn polygon_samples_of_regular_polygon() {
        let c = PolygonalCurve::regular(32, 1.0).unwrap();
        let s = polygon_samples(&c, &vec![1.0; 32]);
        assert!(net_force(&s).norm() < 1e-14);
        for (j, sj) in s.iter().enumerate() {
            assert_relative_eq!(sj.unit_outward_normal.dot(c.vertices()[j]), 1.0, max_relative = 1e-14);
        }
    }
}
