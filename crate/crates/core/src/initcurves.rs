//! Initial curves: analytic shapes sampled at the midpoint nodes, and the
//! curve CSV format.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{chord_arc_constant, midpoint_nodes, signed_area, GeometryError, PlaneVector, PolygonalCurve};
use crate::kernel::SmoothCurveSample;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("invalid curve parameters: {0}")]
    InvalidParameters(String),
    #[error("radius must be positive, got {0}")]
    NonpositiveRadius(f64),
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sampled polygon is not a simple counter-clockwise curve (signed area {area:e}, chord-arc {chord_arc:e})")]
    SelfIntersectingSample { area: f64, chord_arc: f64 },
    #[error("{path}: line {line}: {message}")]
    ParseError { path: PathBuf, line: u64, message: String },
    #[error("{path}: {source}")]
    ValidationError { path: PathBuf, source: GeometryError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Bola { eps: f64, rho: f64, theta: f64 },
    Circle { radius: f64, center: PlaneVector },
    Ellipse { a: f64, b: f64 },
}

/// A closed curve `u ↦ γ(u)` on `u ∈ [0, 1)`, traversed counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticCurve {
    shape: Shape,
}

/// Value and first two parameter derivatives at one point.
#[derive(Debug, Clone, Copy)]
struct Jet {
    p: PlaneVector,
    d1: PlaneVector,
    d2: PlaneVector,
}

impl Jet {
    fn mirror_x(self) -> Self {
        // u ↦ (−f₁(½−u), f₂(½−u)): the chain rule flips odd derivatives.
        let flip = |v: PlaneVector| PlaneVector::new(-v.x, v.y);
        Jet { p: flip(self.p), d1: -flip(self.d1), d2: flip(self.d2) }
    }

    fn negate(self) -> Self {
        Jet { p: -self.p, d1: -self.d1, d2: -self.d2 }
    }
}

/// Dumbbell of two round lobes of radius `rho` joined by a straight neck of half-width `eps`.
pub fn bola(eps: f64, rho: f64) -> Result<AnalyticCurve, CurveError> {
    if !(eps > 0.0 && eps < rho) {
        return Err(CurveError::InvalidParameters(format!(
            "bola needs 0 < eps < rho, got eps={eps}, rho={rho}"
        )));
    }
    Ok(AnalyticCurve { shape: Shape::Bola { eps, rho, theta: (eps / rho).asin() } })
}

pub fn circle(radius: f64, center: PlaneVector) -> Result<AnalyticCurve, CurveError> {
    if !(radius > 0.0) {
        return Err(CurveError::NonpositiveRadius(radius));
    }
    Ok(AnalyticCurve { shape: Shape::Circle { radius, center } })
}

/// Axis-aligned ellipse with semi-axes `a` (along x) and `b`.
pub fn ellipse(a: f64, b: f64) -> Result<AnalyticCurve, CurveError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(CurveError::InvalidParameters(format!("ellipse needs positive semi-axes, got {a}, {b}")));
    }
    Ok(AnalyticCurve { shape: Shape::Ellipse { a, b } })
}

impl AnalyticCurve {
    pub fn eval(&self, u: f64) -> PlaneVector {
        self.jet(u).p
    }

    /// `θ_ε = arcsin(ε/ρ)` for the bola, `None` otherwise.
    pub fn neck_angle(&self) -> Option<f64> {
        match self.shape {
            Shape::Bola { theta, .. } => Some(theta),
            _ => None,
        }
    }

    fn jet(&self, u: f64) -> Jet {
        let u = u.rem_euclid(1.0);
        match self.shape {
            Shape::Circle { radius, center } => {
                let (s, c) = (TAU * u).sin_cos();
                let w = TAU;
                Jet {
                    p: center + PlaneVector::new(radius * c, radius * s),
                    d1: PlaneVector::new(-radius * w * s, radius * w * c),
                    d2: PlaneVector::new(-radius * w * w * c, -radius * w * w * s),
                }
            }
            Shape::Ellipse { a, b } => {
                let (s, c) = (TAU * u).sin_cos();
                let w = TAU;
                Jet {
                    p: PlaneVector::new(a * c, b * s),
                    d1: PlaneVector::new(-a * w * s, b * w * c),
                    d2: PlaneVector::new(-a * w * w * c, -b * w * w * s),
                }
            }
            Shape::Bola { eps, rho, theta } => {
                if u < 0.5 {
                    bola_half(eps, rho, theta, u)
                } else {
                    bola_half(eps, rho, theta, u - 0.5).negate()
                }
            }
        }
    }

    /// Polygon through `γ(x_j)` at the nodes `x_j = (j − 1/2)/n`.
    pub fn sample(&self, n: usize) -> Result<PolygonalCurve, CurveError> {
        if n < 3 {
            return Err(CurveError::TooFewSamples(n));
        }
        let nodes = midpoint_nodes(n);
        let vertices: Vec<PlaneVector> = nodes.iter().map(|&u| self.eval(u)).collect();
        let area = signed_area(&vertices);
        let curve = PolygonalCurve::new(vertices)
            .map_err(|_| CurveError::SelfIntersectingSample { area, chord_arc: f64::NAN })?;
        let chord_arc = chord_arc_constant(&curve, &nodes);
        if !(chord_arc > 0.0) {
            return Err(CurveError::SelfIntersectingSample { area, chord_arc });
        }
        Ok(curve)
    }

    /// Quadrature samples at the midpoint nodes with exact normals, curvature and
    /// arclength weights `|γ'(x_j)|/n`.
    pub fn smooth_samples(&self, n: usize) -> Vec<SmoothCurveSample> {
        midpoint_nodes(n)
            .into_iter()
            .map(|u| {
                let Jet { p, d1, d2 } = self.jet(u);
                let speed = d1.norm();
                let normal = crate::geometry::rotate_quarter(d1) / speed;
                SmoothCurveSample {
                    position: p,
                    unit_outward_normal: normal,
                    curvature: -normal.dot(d2) / (speed * speed),
                    arc_weight: speed / n as f64,
                }
            })
            .collect()
    }
}

/// `γ̄` on `[0, 1/2)`: the upper half of the bola, right lobe first.
fn bola_half(eps: f64, rho: f64, theta: f64, u: f64) -> Jet {
    if u < 0.25 {
        bola_quarter(eps, rho, theta, u)
    } else {
        bola_quarter(eps, rho, theta, 0.5 - u).mirror_x()
    }
}

/// `γ̂` on `[0, 1/4]`: lobe arc, then the straight neck.
fn bola_quarter(eps: f64, rho: f64, theta: f64, u: f64) -> Jet {
    if u < 0.125 {
        let w = 8.0 * (PI - theta);
        let (s, c) = (w * u).sin_cos();
        Jet {
            p: PlaneVector::new(5.0 + rho * (1.0 + c), rho * s),
            d1: PlaneVector::new(-rho * w * s, rho * w * c),
            d2: PlaneVector::new(-rho * w * w * c, -rho * w * w * s),
        }
    } else {
        let reach = 2.0 * (5.0 + rho * (1.0 - theta.cos()));
        Jet {
            p: PlaneVector::new(reach * (1.0 - 4.0 * u), eps),
            d1: PlaneVector::new(-4.0 * reach, 0.0),
            d2: PlaneVector::ZERO,
        }
    }
}

/// Initial-curve choice as written on the command line: `bola`, `bola:eps,rho`,
/// `circle:R`, `circle:R,cx,cy`, `ellipse:a,b` or `file:path`.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveDescriptor {
    Bola { eps: f64, rho: f64 },
    Circle { radius: f64, center: PlaneVector },
    Ellipse { a: f64, b: f64 },
    File(PathBuf),
}

impl CurveDescriptor {
    pub const DEFAULT_BOLA: CurveDescriptor = CurveDescriptor::Bola { eps: 0.2, rho: 0.4 };

    pub fn analytic(&self) -> Result<Option<AnalyticCurve>, CurveError> {
        Ok(Some(match *self {
            CurveDescriptor::Bola { eps, rho } => bola(eps, rho)?,
            CurveDescriptor::Circle { radius, center } => circle(radius, center)?,
            CurveDescriptor::Ellipse { a, b } => ellipse(a, b)?,
            CurveDescriptor::File(_) => return Ok(None),
        }))
    }

    /// Polygon with `n` vertices; files keep their own vertex count.
    pub fn build(&self, n: usize) -> Result<PolygonalCurve, CurveError> {
        match self {
            CurveDescriptor::File(path) => load_curve_csv(path),
            _ => self.analytic()?.expect("analytic descriptor").sample(n),
        }
    }
}

impl FromStr for CurveDescriptor {
    type Err = CurveError;

    fn from_str(s: &str) -> Result<Self, CurveError> {
        let (name, args) = match s.split_once(':') {
            Some((name, args)) => (name.trim(), Some(args.trim())),
            None => (s.trim(), None),
        };
        if name == "file" {
            return match args {
                Some(p) if !p.is_empty() => Ok(CurveDescriptor::File(PathBuf::from(p))),
                _ => Err(CurveError::InvalidParameters("file: needs a path".into())),
            };
        }
        let params: Vec<f64> = match args {
            None => Vec::new(),
            Some(a) => a
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| CurveError::InvalidParameters(format!("bad number `{t}` in `{s}`")))
                })
                .collect::<Result<_, _>>()?,
        };
        let bad = || CurveError::InvalidParameters(format!("wrong number of parameters in `{s}`"));
        match (name, params.as_slice()) {
            ("bola", []) => Ok(Self::DEFAULT_BOLA),
            ("bola", &[eps, rho]) => Ok(CurveDescriptor::Bola { eps, rho }),
            ("circle", []) => Ok(CurveDescriptor::Circle { radius: 1.0, center: PlaneVector::ZERO }),
            ("circle", &[radius]) => Ok(CurveDescriptor::Circle { radius, center: PlaneVector::ZERO }),
            ("circle", &[radius, cx, cy]) => {
                Ok(CurveDescriptor::Circle { radius, center: PlaneVector::new(cx, cy) })
            }
            ("ellipse", &[a, b]) => Ok(CurveDescriptor::Ellipse { a, b }),
            ("bola" | "circle" | "ellipse", _) => Err(bad()),
            _ => Err(CurveError::InvalidParameters(format!("unknown curve `{name}`"))),
        }
    }
}

impl fmt::Display for CurveDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveDescriptor::Bola { eps, rho } => write!(f, "bola:{eps},{rho}"),
            CurveDescriptor::Circle { radius, center } => write!(f, "circle:{radius},{},{}", center.x, center.y),
            CurveDescriptor::Ellipse { a, b } => write!(f, "ellipse:{a},{b}"),
            CurveDescriptor::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Read a `x,y` curve file (implicit closure, counter-clockwise).
pub fn load_curve_csv(path: impl AsRef<Path>) -> Result<PolygonalCurve, CurveError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let (ix, iy) = match (
        headers.iter().position(|h| h == "x"),
        headers.iter().position(|h| h == "y"),
    ) {
        (Some(ix), Some(iy)) => (ix, iy),
        _ => {
            return Err(CurveError::ParseError {
                path: path.into(),
                line: 1,
                message: format!("expected header `x,y`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            })
        }
    };

    let mut vertices = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64, CurveError> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>().map_err(|_| CurveError::ParseError {
                path: path.into(),
                line,
                message: format!("cannot parse `{raw}` as a number"),
            })
        };
        vertices.push(PlaneVector::new(field(ix)?, field(iy)?));
    }
    PolygonalCurve::new(vertices).map_err(|source| CurveError::ValidationError { path: path.into(), source })
}

fn csv_error(path: &Path, e: csv::Error) -> CurveError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CurveError::Io { path: path.into(), source },
        kind => CurveError::ParseError { path: path.into(), line, message: format!("{kind:?}") },
    }
}

/// Write vertices (and optionally a per-vertex curvature column) in the curve
/// CSV format, 17 significant digits.
pub fn write_curve_csv<W: Write>(out: W, curve: &PolygonalCurve, kappa: Option<&[f64]>) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    match kappa {
        Some(k) => {
            writeln!(out, "x,y,kappa")?;
            for (v, k) in curve.vertices().iter().zip(k) {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", v.x, v.y, k)?;
            }
        }
        None => {
            writeln!(out, "x,y")?;
            for v in curve.vertices() {
                writeln!(out, "{:.16e},{:.16e}", v.x, v.y)?;
            }
        }
    }
    out.flush()
}

pub fn save_curve_csv(path: impl AsRef<Path>, curve: &PolygonalCurve, kappa: Option<&[f64]>) -> Result<(), CurveError> {
    let path = path.as_ref();
    File::create(path)
        .and_then(|f| write_curve_csv(f, curve, kappa))
        .map_err(|source| CurveError::Io { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn default_bola() -> AnalyticCurve {
        bola(0.2, 0.4).unwrap()
    }

    fn close(a: PlaneVector, b: PlaneVector, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn bola_reference_points() {
        let c = default_bola();
        assert_relative_eq!(c.neck_angle().unwrap(), PI / 6.0, max_relative = 1e-15);
        assert!(close(c.eval(0.0), PlaneVector::new(5.8, 0.0), 1e-15));
        assert!(close(c.eval(0.25), PlaneVector::new(0.0, 0.2), 1e-14));
        assert!(close(c.eval(0.75), PlaneVector::new(0.0, -0.2), 1e-14));
        assert!(close(c.eval(0.5), PlaneVector::new(-5.8, 0.0), 1e-14));
        assert!(close(c.eval(1.0), c.eval(0.0), 0.0));
    }

    #[test]
    fn bola_is_continuous_at_junctions() {
        let c = default_bola();
        for u in [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0] {
            let left = c.eval(u - 1e-13);
            let right = c.eval(u);
            assert!(close(left, right, 1e-11), "jump at u={u}: {left:?} vs {right:?}");
        }
    }

    #[test]
    fn bola_point_symmetry() {
        let c = default_bola();
        // dyadic parameters keep u + 1/2 - 1/2 exact
        for k in 0..256 {
            let u = k as f64 / 512.0;
            assert_eq!(c.eval(u + 0.5), -c.eval(u));
        }
    }

    #[test]
    fn bola_rejects_wide_neck() {
        assert!(matches!(bola(0.4, 0.4), Err(CurveError::InvalidParameters(_))));
        assert!(matches!(bola(0.5, 0.4), Err(CurveError::InvalidParameters(_))));
    }

    #[test]
    fn bola_samples_are_valid() {
        let p = default_bola().sample(200).unwrap();
        assert_eq!(p.len(), 200);
        assert!(p.min_edge() > 0.0);
        assert!(p.enclosed_area() > 0.0);
    }

    #[test]
    fn bola_smooth_samples_curvature() {
        let s = default_bola().smooth_samples(400);
        // lobe nodes carry curvature 1/ρ, neck nodes zero
        assert_relative_eq!(s[0].curvature, 2.5, max_relative = 1e-12);
        assert_relative_eq!(s[60].curvature, 0.0, epsilon = 1e-12);
        assert_relative_eq!(s[0].unit_outward_normal.x, 1.0, max_relative = 1e-3);
        assert!(s[0].unit_outward_normal.y > 0.0);
    }

    #[test]
    fn circle_points() {
        let c = circle(1.0, PlaneVector::ZERO).unwrap();
        assert!(close(c.eval(0.0), PlaneVector::new(1.0, 0.0), 1e-15));
        assert!(close(c.eval(0.25), PlaneVector::new(0.0, 1.0), 1e-15));
        let p = c.sample(4).unwrap();
        for (j, v) in p.vertices().iter().enumerate() {
            let angle = TAU * (2 * j + 1) as f64 / 8.0;
            assert!(close(*v, PlaneVector::new(angle.cos(), angle.sin()), 1e-15));
        }
        let n = 37;
        let p = c.sample(n).unwrap();
        assert_relative_eq!(p.total_length(), 2.0 * n as f64 * (PI / n as f64).sin(), max_relative = 1e-13);

        let center = PlaneVector::new(0.5, -2.0);
        let p = circle(3.0, center).unwrap().sample(50).unwrap();
        for v in p.vertices() {
            assert_relative_eq!((*v - center).norm(), 3.0, max_relative = 1e-15);
        }
        assert!(matches!(circle(-1.0, PlaneVector::ZERO), Err(CurveError::NonpositiveRadius(_))));
        assert!(matches!(c.sample(2), Err(CurveError::TooFewSamples(2))));
    }

    #[test]
    fn ellipse_smooth_samples() {
        let s = ellipse(2.0, 1.0).unwrap().smooth_samples(1000);
        let perimeter: f64 = s.iter().map(|x| x.arc_weight).sum();
        // Ramanujan's approximation is accurate to ~1e-5 relative here
        let (a, b) = (2.0f64, 1.0f64);
        let h = ((a - b) / (a + b)).powi(2);
        let ramanujan = PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
        assert_relative_eq!(perimeter, ramanujan, max_relative = 1e-5);
        // curvature at the tip (node nearest u=0) is close to a/b² = 2
        assert_relative_eq!(s[0].curvature, 2.0, max_relative = 1e-4);
    }

    #[test]
    fn descriptors_parse() {
        assert_eq!("bola".parse::<CurveDescriptor>().unwrap(), CurveDescriptor::DEFAULT_BOLA);
        assert_eq!(
            "circle:1.5".parse::<CurveDescriptor>().unwrap(),
            CurveDescriptor::Circle { radius: 1.5, center: PlaneVector::ZERO }
        );
        assert_eq!(
            "ellipse:2,1".parse::<CurveDescriptor>().unwrap(),
            CurveDescriptor::Ellipse { a: 2.0, b: 1.0 }
        );
        assert_eq!(
            "file:square.csv".parse::<CurveDescriptor>().unwrap(),
            CurveDescriptor::File("square.csv".into())
        );
        assert!("ellipse:2".parse::<CurveDescriptor>().is_err());
        assert!("blob".parse::<CurveDescriptor>().is_err());
        assert!("circle:x".parse::<CurveDescriptor>().is_err());
        let d: CurveDescriptor = "circle:2,1,-1".parse().unwrap();
        assert_eq!(d.to_string().parse::<CurveDescriptor>().unwrap(), d);
    }
}
