//! Level-set domains and the symbolic existence classifier.
//!
//! Every domain is the compact region bounded by the level set `F = 1` of a
//! scalar field for which `1` is a regular value; the outward unit normal of
//! the boundary is `grad F / |grad F|`. Built-in families: the unit ball,
//! quadrics `sum_i a_i x_i^2 + b x_n + c` with `a_i` in `{-1, 0, 1}`,
//! surfaces of revolution about the last axis described by a positive
//! profile `f` via `x_1^2 + x_2^2 - f(x_3)^2 + 1`, ellipsoids of revolution
//! `(x_1^2 + x_2^2)/a^2 + x_3^2/b^2`, and caller-supplied fields. Numeric
//! evaluation is for ambient dimension 3; the quadric classifier is symbolic
//! and accepts any dimension.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Accepted |F - 1| for a point to count as lying on the boundary.
pub const LEVEL_TOL: f64 = 1e-12;

/// Gradient norms at or below this are treated as degenerate.
pub const GRAD_TOL: f64 = 1e-12;

const PROJECT_MAX_ITERS: usize = 50;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("invalid domain spec: {0}")]
    InvalidSpec(String),
    #[error("numeric evaluation needs ambient dimension 3, spec has n = {0}")]
    DimensionUnsupported(usize),
    #[error("query y = {y} outside profile interval [{y0}, {y1}]")]
    QueryOutsideProfileInterval { y: f64, y0: f64, y1: f64 },
    #[error("gradient degenerate (|grad F| = {norm:.3e}) at ({x:.6}, {y:.6}, {z:.6})")]
    DegenerateGradient { x: f64, y: f64, z: f64, norm: f64 },
    #[error("projection onto F = 1 stalled after {iters} iterations (|F - 1| = {residual:.3e})")]
    ProjectionDiverged { iters: usize, residual: f64 },
}

/// Quadric field `sum_i a_i x_i^2 + b x_n + c` with coefficients `a_i` in
/// `{-1, 0, 1}`. The linear term is attached to the last coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadricSpec {
    pub a: Vec<i8>,
    pub b: f64,
    pub c: f64,
}

impl QuadricSpec {
    pub fn new(a: Vec<i8>, b: f64, c: f64) -> Result<Self, DomainError> {
        if a.len() < 2 {
            return Err(DomainError::InvalidSpec(format!(
                "quadric needs at least 2 coefficients, got {}",
                a.len()
            )));
        }
        if let Some(bad) = a.iter().find(|v| ![-1, 0, 1].contains(*v)) {
            return Err(DomainError::InvalidSpec(format!(
                "quadric coefficients must be -1, 0 or 1, got {bad}"
            )));
        }
        if a.iter().all(|v| *v == 0) && b == 0.0 {
            return Err(DomainError::InvalidSpec(
                "quadric field is constant".into(),
            ));
        }
        if !b.is_finite() || !c.is_finite() {
            return Err(DomainError::InvalidSpec(
                "quadric b and c must be finite".into(),
            ));
        }
        Ok(QuadricSpec { a, b, c })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }
}

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots; zero at both ends.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, DomainError> {
        if x.len() != y.len() {
            return Err(DomainError::InvalidSpec(format!(
                "spline knot/value length mismatch: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 4 {
            return Err(DomainError::InvalidSpec(format!(
                "spline needs at least 4 knots, got {}",
                x.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DomainError::InvalidSpec(
                "spline knots must be strictly increasing".into(),
            ));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(DomainError::InvalidSpec(
                "spline data must be finite".into(),
            ));
        }
        let n = x.len();
        // Tridiagonal system for interior second derivatives (Thomas solve).
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Ok(CubicSpline { x, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    fn segment(&self, t: f64) -> usize {
        // Clamp to the end segments so boundary jitter extrapolates smoothly.
        match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.clamp(1, self.x.len() - 1) - 1,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (self.x[i + 1] - t) / h;
        let v = (t - self.x[i]) / h;
        u * self.y[i]
            + v * self.y[i + 1]
            + ((u * u * u - u) * self.m[i] + (v * v * v - v) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (self.x[i + 1] - t) / h;
        let v = (t - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((3.0 * v * v - 1.0) * self.m[i + 1] - (3.0 * u * u - 1.0) * self.m[i]) * h / 6.0
    }

    pub fn second_deriv(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let u = (self.x[i + 1] - t) / h;
        let v = (t - self.x[i]) / h;
        u * self.m[i] + v * self.m[i + 1]
    }
}

/// Closed-form profile families for surfaces of revolution.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileFamily {
    /// `f(y) = sqrt(radius^2 - y^2)`.
    Sphere { radius: f64 },
    /// `f(y) = scale * cosh(y / scale)`.
    Cosh { scale: f64 },
    /// `f(y) = slope * y + intercept`.
    Linear { slope: f64, intercept: f64 },
    /// `f(y) = radius`.
    Constant { radius: f64 },
    /// Natural cubic spline through sampled `(y, f)` pairs.
    Sampled(CubicSpline),
}

/// Positive profile `f` on `[y0, y1]` describing the surface of revolution
/// `x_1^2 + x_2^2 = f(x_3)^2` about the last axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub family: ProfileFamily,
    pub y0: f64,
    pub y1: f64,
}

impl ProfileCurve {
    pub fn new(family: ProfileFamily, y0: f64, y1: f64) -> Result<Self, DomainError> {
        if !(y0.is_finite() && y1.is_finite() && y0 < y1) {
            return Err(DomainError::InvalidSpec(format!(
                "profile interval [{y0}, {y1}] is not a valid interval"
            )));
        }
        match &family {
            ProfileFamily::Sphere { radius } if !(*radius > 0.0) => {
                return Err(DomainError::InvalidSpec(
                    "sphere profile needs radius > 0".into(),
                ));
            }
            ProfileFamily::Cosh { scale } if !(*scale > 0.0) => {
                return Err(DomainError::InvalidSpec(
                    "cosh profile needs scale > 0".into(),
                ));
            }
            ProfileFamily::Constant { radius } if !(*radius > 0.0) => {
                return Err(DomainError::InvalidSpec(
                    "constant profile needs radius > 0".into(),
                ));
            }
            ProfileFamily::Sampled(spline) => {
                let (a, b) = spline.domain();
                if (a - y0).abs() > 1e-12 || (b - y1).abs() > 1e-12 {
                    return Err(DomainError::InvalidSpec(
                        "sampled profile interval must match the knot range".into(),
                    ));
                }
            }
            _ => {}
        }
        let curve = ProfileCurve { family, y0, y1 };
        // Positivity on a dense grid; rejects spheres whose interval reaches
        // the poles and sampled data dipping through zero.
        for k in 0..=256 {
            let y = y0 + (y1 - y0) * k as f64 / 256.0;
            let v = curve.f_unchecked(y);
            if !(v > 0.0) || !v.is_finite() {
                return Err(DomainError::InvalidSpec(format!(
                    "profile must be positive on its interval; f({y}) = {v}"
                )));
            }
        }
        Ok(curve)
    }

    fn check_interval(&self, y: f64) -> Result<(), DomainError> {
        let slack = 1e-9 * (self.y1 - self.y0).max(1.0);
        if y < self.y0 - slack || y > self.y1 + slack {
            return Err(DomainError::QueryOutsideProfileInterval {
                y,
                y0: self.y0,
                y1: self.y1,
            });
        }
        Ok(())
    }

    fn f_unchecked(&self, y: f64) -> f64 {
        match &self.family {
            ProfileFamily::Sphere { radius } => (radius * radius - y * y).sqrt(),
            ProfileFamily::Cosh { scale } => scale * (y / scale).cosh(),
            ProfileFamily::Linear { slope, intercept } => slope * y + intercept,
            ProfileFamily::Constant { radius } => *radius,
            ProfileFamily::Sampled(s) => s.eval(y),
        }
    }

    pub fn f(&self, y: f64) -> Result<f64, DomainError> {
        self.check_interval(y)?;
        Ok(self.f_unchecked(y))
    }

    pub fn f_prime(&self, y: f64) -> Result<f64, DomainError> {
        self.check_interval(y)?;
        Ok(match &self.family {
            ProfileFamily::Sphere { radius } => -y / (radius * radius - y * y).sqrt(),
            ProfileFamily::Cosh { scale } => (y / scale).sinh(),
            ProfileFamily::Linear { slope, .. } => *slope,
            ProfileFamily::Constant { .. } => 0.0,
            ProfileFamily::Sampled(s) => s.deriv(y),
        })
    }

    pub fn f_second(&self, y: f64) -> Result<f64, DomainError> {
        self.check_interval(y)?;
        Ok(match &self.family {
            ProfileFamily::Sphere { radius } => {
                let r2 = radius * radius;
                let d = r2 - y * y;
                -r2 / (d * d.sqrt())
            }
            ProfileFamily::Cosh { scale } => (y / scale).cosh() / scale,
            ProfileFamily::Linear { .. } | ProfileFamily::Constant { .. } => 0.0,
            ProfileFamily::Sampled(s) => s.second_deriv(y),
        })
    }
}

/// Ellipsoid of revolution `(x_1^2 + x_2^2)/a^2 + x_3^2/b^2 = 1`, oblate or
/// round: `a >= b > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidSpec {
    pub a: f64,
    pub b: f64,
}

impl EllipsoidSpec {
    pub fn new(a: f64, b: f64) -> Result<Self, DomainError> {
        if !(b > 0.0 && a >= b && a.is_finite()) {
            return Err(DomainError::InvalidSpec(format!(
                "ellipsoid needs a >= b > 0, got a = {a}, b = {b}"
            )));
        }
        Ok(EllipsoidSpec { a, b })
    }

    /// Smallest principal curvature of the boundary, attained on the
    /// equator for an oblate shape: `b / a^2`.
    pub fn min_principal_curvature(&self) -> f64 {
        self.b / (self.a * self.a)
    }
}

/// Caller-supplied level-set field. All three closures must be consistent;
/// nothing here checks them against each other.
#[derive(Clone)]
pub struct CustomField {
    pub value: Arc<dyn Fn(&Point3<f64>) -> f64 + Send + Sync>,
    pub gradient: Arc<dyn Fn(&Point3<f64>) -> Vector3<f64> + Send + Sync>,
    pub hessian: Arc<dyn Fn(&Point3<f64>) -> Matrix3<f64> + Send + Sync>,
}

impl fmt::Debug for CustomField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomField {..}")
    }
}

#[derive(Debug, Clone)]
pub enum LevelSetDomain {
    /// Unit ball, `F = |x|^2`.
    Ball,
    Quadric(QuadricSpec),
    Rotational(ProfileCurve),
    Ellipsoid(EllipsoidSpec),
    Custom(CustomField),
}

impl LevelSetDomain {
    /// Field value, gradient and Hessian at a point.
    pub fn evaluate(
        &self,
        p: &Point3<f64>,
    ) -> Result<(f64, Vector3<f64>, Matrix3<f64>), DomainError> {
        match self {
            LevelSetDomain::Ball => Ok((
                p.coords.norm_squared(),
                2.0 * p.coords,
                2.0 * Matrix3::identity(),
            )),
            LevelSetDomain::Quadric(q) => {
                if q.dim() != 3 {
                    return Err(DomainError::DimensionUnsupported(q.dim()));
                }
                let a = [q.a[0] as f64, q.a[1] as f64, q.a[2] as f64];
                let value = a[0] * p.x * p.x + a[1] * p.y * p.y + a[2] * p.z * p.z
                    + q.b * p.z
                    + q.c;
                let grad = Vector3::new(
                    2.0 * a[0] * p.x,
                    2.0 * a[1] * p.y,
                    2.0 * a[2] * p.z + q.b,
                );
                let hess = Matrix3::from_diagonal(&Vector3::new(
                    2.0 * a[0],
                    2.0 * a[1],
                    2.0 * a[2],
                ));
                Ok((value, grad, hess))
            }
            LevelSetDomain::Rotational(curve) => {
                let y = p.z;
                let f = curve.f(y)?;
                let fp = curve.f_prime(y)?;
                let fpp = curve.f_second(y)?;
                let value = p.x * p.x + p.y * p.y - f * f + 1.0;
                let grad = Vector3::new(2.0 * p.x, 2.0 * p.y, -2.0 * f * fp);
                let hess = Matrix3::from_diagonal(&Vector3::new(
                    2.0,
                    2.0,
                    -2.0 * (fp * fp + f * fpp),
                ));
                Ok((value, grad, hess))
            }
            LevelSetDomain::Ellipsoid(e) => {
                let ia = 1.0 / (e.a * e.a);
                let ib = 1.0 / (e.b * e.b);
                let value = (p.x * p.x + p.y * p.y) * ia + p.z * p.z * ib;
                let grad = Vector3::new(2.0 * ia * p.x, 2.0 * ia * p.y, 2.0 * ib * p.z);
                let hess =
                    Matrix3::from_diagonal(&Vector3::new(2.0 * ia, 2.0 * ia, 2.0 * ib));
                Ok((value, grad, hess))
            }
            LevelSetDomain::Custom(c) => {
                Ok(((c.value)(p), (c.gradient)(p), (c.hessian)(p)))
            }
        }
    }

    /// Unit outward normal of the boundary field at a point (normalized
    /// gradient). Errors when the gradient degenerates.
    pub fn unit_normal(&self, p: &Point3<f64>) -> Result<Vector3<f64>, DomainError> {
        let (_, grad, _) = self.evaluate(p)?;
        let norm = grad.norm();
        if norm <= GRAD_TOL {
            return Err(DomainError::DegenerateGradient {
                x: p.x,
                y: p.y,
                z: p.z,
                norm,
            });
        }
        Ok(grad / norm)
    }

    /// Newton projection along the gradient onto `F = 1`, to |F - 1| at most
    /// [`LEVEL_TOL`] within 50 iterations.
    pub fn project_to_boundary(&self, p: &Point3<f64>) -> Result<Point3<f64>, DomainError> {
        let mut q = *p;
        let mut residual = f64::INFINITY;
        for _ in 0..PROJECT_MAX_ITERS {
            let (value, grad, _) = self.evaluate(&q)?;
            residual = (value - 1.0).abs();
            if residual <= LEVEL_TOL {
                return Ok(q);
            }
            let g2 = grad.norm_squared();
            if g2.sqrt() <= GRAD_TOL {
                return Err(DomainError::DegenerateGradient {
                    x: q.x,
                    y: q.y,
                    z: q.z,
                    norm: g2.sqrt(),
                });
            }
            q -= grad * ((value - 1.0) / g2);
        }
        Err(DomainError::ProjectionDiverged {
            iters: PROJECT_MAX_ITERS,
            residual,
        })
    }
}

/// Serializable domain description; the on-disk JSON format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Ball,
    Quadric {
        #[serde(default)]
        n: Option<usize>,
        a: Vec<i8>,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        c: f64,
    },
    Ellipsoid {
        a: f64,
        b: f64,
    },
    Profile {
        #[serde(flatten)]
        profile: ProfileSpec,
    },
}

/// Profile payload of a `"kind": "profile"` domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ProfileSpec {
    Sphere {
        #[serde(default = "default_one")]
        radius: f64,
        interval: [f64; 2],
    },
    Cosh {
        #[serde(default = "default_one")]
        scale: f64,
        interval: [f64; 2],
    },
    Linear {
        slope: f64,
        intercept: f64,
        interval: [f64; 2],
    },
    Constant {
        radius: f64,
        interval: [f64; 2],
    },
    Sampled {
        y: Vec<f64>,
        f: Vec<f64>,
    },
}

fn default_one() -> f64 {
    1.0
}

impl ProfileSpec {
    pub fn to_curve(&self) -> Result<ProfileCurve, DomainError> {
        match self {
            ProfileSpec::Sphere { radius, interval } => ProfileCurve::new(
                ProfileFamily::Sphere { radius: *radius },
                interval[0],
                interval[1],
            ),
            ProfileSpec::Cosh { scale, interval } => ProfileCurve::new(
                ProfileFamily::Cosh { scale: *scale },
                interval[0],
                interval[1],
            ),
            ProfileSpec::Linear {
                slope,
                intercept,
                interval,
            } => ProfileCurve::new(
                ProfileFamily::Linear {
                    slope: *slope,
                    intercept: *intercept,
                },
                interval[0],
                interval[1],
            ),
            ProfileSpec::Constant { radius, interval } => ProfileCurve::new(
                ProfileFamily::Constant { radius: *radius },
                interval[0],
                interval[1],
            ),
            ProfileSpec::Sampled { y, f } => {
                let spline = CubicSpline::new(y.clone(), f.clone())?;
                let (y0, y1) = spline.domain();
                ProfileCurve::new(ProfileFamily::Sampled(spline), y0, y1)
            }
        }
    }
}

impl DomainSpec {
    pub fn from_json(text: &str) -> Result<Self, DomainError> {
        serde_json::from_str(text)
            .map_err(|e| DomainError::InvalidSpec(format!("domain JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("domain spec serializes")
    }

    pub fn to_domain(&self) -> Result<LevelSetDomain, DomainError> {
        match self {
            DomainSpec::Ball => Ok(LevelSetDomain::Ball),
            DomainSpec::Quadric { n, a, b, c } => {
                if let Some(n) = n {
                    if *n != a.len() {
                        return Err(DomainError::InvalidSpec(format!(
                            "quadric declares n = {n} but has {} coefficients",
                            a.len()
                        )));
                    }
                }
                Ok(LevelSetDomain::Quadric(QuadricSpec::new(a.clone(), *b, *c)?))
            }
            DomainSpec::Ellipsoid { a, b } => {
                Ok(LevelSetDomain::Ellipsoid(EllipsoidSpec::new(*a, *b)?))
            }
            DomainSpec::Profile { profile } => {
                Ok(LevelSetDomain::Rotational(profile.to_curve()?))
            }
        }
    }
}

/// Classification outcome for a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// No compact free-boundary minimal surface exists.
    NoExistence,
    /// Flat equatorial disks are the only solutions.
    OnlyTotallyGeodesic,
    /// The classification rules do not apply.
    Unconstrained,
}

/// Classifier verdict: outcome, a human-readable description of the
/// solution set, and the identifier of the rule that fired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub description: String,
    pub citation: String,
}

const NO_EXISTENCE_TEXT: &str =
    "no compact free-boundary minimal surface exists in this domain";
const UNCONSTRAINED_TEXT: &str = "outside the classified families; no conclusion";

fn verdict(outcome: Outcome, description: &str, citation: &str) -> Verdict {
    Verdict {
        outcome,
        description: description.to_string(),
        citation: citation.to_string(),
    }
}

/// Symbolic existence classifier for quadric domains, any dimension.
///
/// Decision order: a linear term with a degenerate last axis kills
/// existence outright; otherwise, with no linear term, shifted spheres with
/// a single non-unit axis admit only flat disks, several non-unit axes kill
/// existence, and for shifts past the vertex the two-sheet and
/// cylinder-over-cone shapes kill existence as well.
pub fn classify_quadric(spec: &QuadricSpec) -> Verdict {
    let n = spec.dim();
    let an = spec.a[n - 1];
    if spec.b != 0.0 {
        if an == 0 {
            return verdict(Outcome::NoExistence, NO_EXISTENCE_TEXT, "quadric-linear-term");
        }
        return verdict(Outcome::Unconstrained, UNCONSTRAINED_TEXT, "unclassified");
    }
    let nonunit: Vec<i8> = spec.a.iter().copied().filter(|v| *v != 1).collect();
    if spec.c <= 0.0 {
        return match nonunit.as_slice() {
            [] => verdict(Outcome::Unconstrained, UNCONSTRAINED_TEXT, "unclassified"),
            [-1] => verdict(
                Outcome::OnlyTotallyGeodesic,
                "flat disk supported at the origin",
                "quadric-single-nonunit-axis",
            ),
            [0] => verdict(
                Outcome::OnlyTotallyGeodesic,
                "flat disks intersecting the boundary orthogonally",
                "quadric-single-nonunit-axis",
            ),
            _ => verdict(
                Outcome::NoExistence,
                NO_EXISTENCE_TEXT,
                "quadric-multiple-nonunit-axes",
            ),
        };
    }
    if spec.c >= 1.0 {
        let minus = nonunit.iter().filter(|v| **v == -1).count();
        let zero = nonunit.iter().filter(|v| **v == 0).count();
        if minus == 1 && zero == 0 {
            return verdict(Outcome::NoExistence, NO_EXISTENCE_TEXT, "quadric-two-sheets");
        }
        if minus == 1 && zero == 1 {
            return verdict(
                Outcome::NoExistence,
                NO_EXISTENCE_TEXT,
                "quadric-cylinder-over-cone",
            );
        }
    }
    verdict(Outcome::Unconstrained, UNCONSTRAINED_TEXT, "unclassified")
}

/// Classify any domain spec. The ball routes through the quadric rules as
/// the all-ones quadric; anisotropic ellipsoids sit outside the classified
/// families.
pub fn classify(spec: &DomainSpec) -> Result<Verdict, DomainError> {
    match spec {
        DomainSpec::Ball => Ok(classify_quadric(&QuadricSpec::new(
            vec![1, 1, 1],
            0.0,
            0.0,
        )?)),
        DomainSpec::Quadric { n, a, b, c } => {
            if let Some(n) = n {
                if *n != a.len() {
                    return Err(DomainError::InvalidSpec(format!(
                        "quadric declares n = {n} but has {} coefficients",
                        a.len()
                    )));
                }
            }
            Ok(classify_quadric(&QuadricSpec::new(a.clone(), *b, *c)?))
        }
        DomainSpec::Ellipsoid { a, b } => {
            EllipsoidSpec::new(*a, *b)?;
            Ok(verdict(Outcome::Unconstrained, UNCONSTRAINED_TEXT, "unclassified"))
        }
        DomainSpec::Profile { profile } => classify_profile(&profile.to_curve()?),
    }
}

/// Existence classifier for rotational domains via the sign of the profile
/// slope, sampled on a uniform 1024-point grid with zero tolerance 1e-10.
///
/// A monotone nondecreasing slope that touches zero pins every solution to
/// the flat disk at the zero; a strictly positive slope excludes solutions
/// entirely; a slope of mixed sign is out of scope.
pub fn classify_profile(curve: &ProfileCurve) -> Result<Verdict, DomainError> {
    const SAMPLES: usize = 1024;
    const ZERO_TOL: f64 = 1e-10;
    let mut min_slope = f64::INFINITY;
    let mut min_abs = f64::INFINITY;
    let mut min_abs_y = curve.y0;
    for k in 0..=SAMPLES {
        let y = curve.y0 + (curve.y1 - curve.y0) * k as f64 / SAMPLES as f64;
        let s = curve.f_prime(y)?;
        min_slope = min_slope.min(s);
        if s.abs() < min_abs {
            min_abs = s.abs();
            min_abs_y = y;
        }
    }
    if min_slope >= -ZERO_TOL {
        if min_abs <= ZERO_TOL {
            let description = if min_abs_y.abs() <= 1e-9 {
                "flat disk supported at the origin".to_string()
            } else {
                format!("flat disk at height {min_abs_y:.6}")
            };
            return Ok(Verdict {
                outcome: Outcome::OnlyTotallyGeodesic,
                description,
                citation: "profile-monotone-slope".to_string(),
            });
        }
        return Ok(verdict(
            Outcome::NoExistence,
            NO_EXISTENCE_TEXT,
            "profile-strictly-increasing",
        ));
    }
    Ok(verdict(
        Outcome::Unconstrained,
        UNCONSTRAINED_TEXT,
        "unclassified",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quadric(a: &[i8], b: f64, c: f64) -> QuadricSpec {
        QuadricSpec::new(a.to_vec(), b, c).unwrap()
    }

    #[test]
    fn ball_field_at_sample_points() {
        let d = LevelSetDomain::Ball;
        let (v, g, h) = d.evaluate(&Point3::new(0.5, 0.0, 0.0)).unwrap();
        assert_relative_eq!(v, 0.25);
        assert_relative_eq!(g, Vector3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(h, 2.0 * Matrix3::identity());
    }

    #[test]
    fn quadric_field_matches_hand_values() {
        let d = LevelSetDomain::Quadric(quadric(&[1, 1, -1], 0.0, 0.0));
        let (v, g, _) = d.evaluate(&Point3::new(1.0, 1.0, 1.0)).unwrap();
        assert_relative_eq!(v, 1.0);
        assert_relative_eq!(g, Vector3::new(2.0, 2.0, -2.0));
        let d = LevelSetDomain::Quadric(quadric(&[1, 0, 0], 3.0, -2.0));
        let (v, g, h) = d.evaluate(&Point3::new(2.0, 5.0, 1.0)).unwrap();
        assert_relative_eq!(v, 4.0 + 3.0 - 2.0);
        assert_relative_eq!(g, Vector3::new(4.0, 0.0, 3.0));
        assert_relative_eq!(h, Matrix3::from_diagonal(&Vector3::new(2.0, 0.0, 0.0)));
    }

    #[test]
    fn ellipsoid_field_matches_hand_values() {
        let d = LevelSetDomain::Ellipsoid(EllipsoidSpec::new(2.0, 1.0).unwrap());
        let (v, g, _) = d.evaluate(&Point3::new(2.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(v, 1.0);
        assert_relative_eq!(g, Vector3::new(1.0, 0.0, 0.0));
        let (v, g, _) = d.evaluate(&Point3::new(0.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(v, 1.0);
        assert_relative_eq!(g, Vector3::new(0.0, 0.0, 2.0));
    }

    #[test]
    fn sphere_profile_agrees_with_ball_on_boundary() {
        let curve =
            ProfileCurve::new(ProfileFamily::Sphere { radius: 1.0 }, -0.9, 0.9).unwrap();
        let rot = LevelSetDomain::Rotational(curve);
        let ball = LevelSetDomain::Ball;
        for k in 0..20 {
            let t = -0.85 + 1.7 * k as f64 / 19.0;
            let r = (1.0 - t * t).sqrt();
            let p = Point3::new(r * 0.6, r * 0.8, t);
            let (v1, g1, _) = rot.evaluate(&p).unwrap();
            let (v2, g2, _) = ball.evaluate(&p).unwrap();
            assert_relative_eq!(v1, v2, epsilon = 1e-12);
            assert_relative_eq!(g1, g2, epsilon = 1e-12);
        }
    }

    #[test]
    fn profile_query_outside_interval_is_an_error() {
        let curve =
            ProfileCurve::new(ProfileFamily::Cosh { scale: 1.0 }, -1.0, 1.0).unwrap();
        let d = LevelSetDomain::Rotational(curve);
        let err = d.evaluate(&Point3::new(0.1, 0.1, 2.0)).unwrap_err();
        assert!(matches!(
            err,
            DomainError::QueryOutsideProfileInterval { .. }
        ));
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let curves = vec![
            ProfileCurve::new(ProfileFamily::Sphere { radius: 2.0 }, -1.5, 1.5).unwrap(),
            ProfileCurve::new(ProfileFamily::Cosh { scale: 0.7 }, -1.0, 1.2).unwrap(),
            ProfileCurve::new(
                ProfileFamily::Linear {
                    slope: 0.3,
                    intercept: 1.0,
                },
                -1.0,
                1.0,
            )
            .unwrap(),
            ProfileCurve::new(ProfileFamily::Constant { radius: 1.3 }, -1.0, 1.0).unwrap(),
        ];
        let h = 1e-4;
        for curve in curves {
            for k in 1..10 {
                let y = curve.y0 + (curve.y1 - curve.y0) * k as f64 / 10.0;
                let fd1 = (curve.f(y + h).unwrap() - curve.f(y - h).unwrap()) / (2.0 * h);
                let fd2 = (curve.f(y + h).unwrap() - 2.0 * curve.f(y).unwrap()
                    + curve.f(y - h).unwrap())
                    / (h * h);
                assert_relative_eq!(curve.f_prime(y).unwrap(), fd1, max_relative = 1e-6, epsilon = 1e-7);
                assert_relative_eq!(
                    curve.f_second(y).unwrap(),
                    fd2,
                    max_relative = 1e-4,
                    epsilon = 1e-4
                );
            }
        }
    }

    #[test]
    fn spline_reproduces_cubic_data_closely() {
        // Natural spline is exact for linear data and close for smooth data.
        let y: Vec<f64> = (0..=20).map(|k| -1.0 + 2.0 * k as f64 / 20.0).collect();
        let f: Vec<f64> = y.iter().map(|t| 2.0 + 0.5 * t).collect();
        let s = CubicSpline::new(y.clone(), f).unwrap();
        for k in 0..40 {
            let t = -1.0 + 2.0 * k as f64 / 39.0;
            assert_relative_eq!(s.eval(t), 2.0 + 0.5 * t, epsilon = 1e-12);
            assert_relative_eq!(s.deriv(t), 0.5, epsilon = 1e-10);
        }
        let f: Vec<f64> = y.iter().map(|t| (1.0 + t * t).sqrt()).collect();
        let s = CubicSpline::new(y, f).unwrap();
        for k in 0..40 {
            let t = -0.9 + 1.8 * k as f64 / 39.0;
            assert_relative_eq!(s.eval(t), (1.0 + t * t).sqrt(), epsilon = 1e-4);
        }
    }

    #[test]
    fn sampled_profile_round_trips_through_json() {
        let y: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let f: Vec<f64> = y.iter().map(|t| 1.0 + t * t).collect();
        let spec = DomainSpec::Profile {
            profile: ProfileSpec::Sampled { y, f },
        };
        let text = spec.to_json();
        let back = DomainSpec::from_json(&text).unwrap();
        assert_eq!(spec, back);
        back.to_domain().unwrap();
    }

    #[test]
    fn projection_reaches_the_level_set() {
        let domains = vec![
            LevelSetDomain::Ball,
            LevelSetDomain::Ellipsoid(EllipsoidSpec::new(2.0, 1.0).unwrap()),
            LevelSetDomain::Quadric(quadric(&[1, 1, -1], 0.0, 0.0)),
        ];
        for d in domains {
            let p = Point3::new(0.4, 0.3, 0.2);
            let q = d.project_to_boundary(&p).unwrap();
            let (v, _, _) = d.evaluate(&q).unwrap();
            assert!((v - 1.0).abs() <= LEVEL_TOL);
            // Projecting a boundary point is the identity.
            let q2 = d.project_to_boundary(&q).unwrap();
            assert!((q - q2).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_from_the_origin_of_the_ball_degenerates() {
        let err = LevelSetDomain::Ball
            .project_to_boundary(&Point3::origin())
            .unwrap_err();
        assert!(matches!(err, DomainError::DegenerateGradient { .. }));
    }

    #[test]
    fn quadric_validation_rejects_bad_coefficients() {
        assert!(QuadricSpec::new(vec![1, 2, 1], 0.0, 0.0).is_err());
        assert!(QuadricSpec::new(vec![1], 0.0, 0.0).is_err());
        assert!(QuadricSpec::new(vec![0, 0, 0], 0.0, 0.0).is_err());
        assert!(QuadricSpec::new(vec![0, 0, 0], 1.0, 0.0).is_ok());
    }

    #[test]
    fn classifier_linear_term_with_degenerate_axis() {
        let v = classify_quadric(&quadric(&[1, 1, 0], 2.0, 0.0));
        assert_eq!(v.outcome, Outcome::NoExistence);
        assert_eq!(v.citation, "quadric-linear-term");
        // Linear term with a live last axis is out of scope.
        let v = classify_quadric(&quadric(&[1, 1, 1], 2.0, 0.0));
        assert_eq!(v.outcome, Outcome::Unconstrained);
    }

    #[test]
    fn classifier_single_nonunit_axis() {
        let v = classify_quadric(&quadric(&[1, 1, -1], 0.0, 0.0));
        assert_eq!(v.outcome, Outcome::OnlyTotallyGeodesic);
        assert_eq!(v.description, "flat disk supported at the origin");
        let v = classify_quadric(&quadric(&[1, 1, 0], 0.0, 0.0));
        assert_eq!(v.outcome, Outcome::OnlyTotallyGeodesic);
        assert_eq!(
            v.description,
            "flat disks intersecting the boundary orthogonally"
        );
        // Negative shifts keep the conclusion.
        let v = classify_quadric(&quadric(&[1, 1, -1], 0.0, -2.0));
        assert_eq!(v.outcome, Outcome::OnlyTotallyGeodesic);
    }

    #[test]
    fn classifier_multiple_nonunit_axes() {
        let v = classify_quadric(&quadric(&[1, 0, -1], 0.0, 0.0));
        assert_eq!(v.outcome, Outcome::NoExistence);
        assert_eq!(v.citation, "quadric-multiple-nonunit-axes");
        let v = classify_quadric(&quadric(&[1, -1, -1], 0.0, -1.0));
        assert_eq!(v.outcome, Outcome::NoExistence);
    }

    #[test]
    fn classifier_shifted_cases() {
        let v = classify_quadric(&quadric(&[1, 1, -1], 0.0, 1.5));
        assert_eq!(v.outcome, Outcome::NoExistence);
        assert_eq!(v.citation, "quadric-two-sheets");
        let v = classify_quadric(&quadric(&[1, 0, -1], 0.0, 1.0));
        assert_eq!(v.outcome, Outcome::NoExistence);
        assert_eq!(v.citation, "quadric-cylinder-over-cone");
        // The window between the uniqueness and nonexistence shifts is open.
        let v = classify_quadric(&quadric(&[1, 1, -1], 0.0, 0.5));
        assert_eq!(v.outcome, Outcome::Unconstrained);
        // Round sphere with a shift is out of scope.
        let v = classify_quadric(&quadric(&[1, 1, 1], 0.0, -1.0));
        assert_eq!(v.outcome, Outcome::Unconstrained);
    }

    #[test]
    fn classifier_is_invariant_under_permuting_the_first_axes() {
        let base = classify_quadric(&quadric(&[1, 0, -1, 1, 1], 0.0, 1.0));
        let permuted = classify_quadric(&quadric(&[0, 1, 1, -1, 1], 0.0, 1.0));
        assert_eq!(base, permuted);
    }

    #[test]
    fn profile_classifier_monotone_cases() {
        // Cosh on [0, 2]: slope sinh(y) >= 0 with a zero at the left end.
        let curve = ProfileCurve::new(ProfileFamily::Cosh { scale: 1.0 }, 0.0, 2.0).unwrap();
        let v = classify_profile(&curve).unwrap();
        assert_eq!(v.outcome, Outcome::OnlyTotallyGeodesic);
        assert_eq!(v.description, "flat disk supported at the origin");
        // Cosh on [0.5, 2]: slope sinh(y) is strictly positive there.
        let curve = ProfileCurve::new(ProfileFamily::Cosh { scale: 1.0 }, 0.5, 2.0).unwrap();
        let v = classify_profile(&curve).unwrap();
        assert_eq!(v.outcome, Outcome::NoExistence);
        assert_eq!(v.citation, "profile-strictly-increasing");
        // Zero slope away from the origin: the flat disk sits at the
        // smallest-|y| zero, here the left end of the window.
        let curve = ProfileCurve::new(ProfileFamily::Constant { radius: 1.0 }, 0.25, 1.25).unwrap();
        let v = classify_profile(&curve).unwrap();
        assert_eq!(v.outcome, Outcome::OnlyTotallyGeodesic);
        assert!(v.description.starts_with("flat disk at height 0.25"));
        // Strictly increasing cone profile.
        let curve = ProfileCurve::new(
            ProfileFamily::Linear {
                slope: 1.0,
                intercept: 1.0,
            },
            0.0,
            1.0,
        )
        .unwrap();
        let v = classify_profile(&curve).unwrap();
        assert_eq!(v.outcome, Outcome::NoExistence);
        assert_eq!(v.citation, "profile-strictly-increasing");
        // Sphere profile: slope changes sign.
        let curve =
            ProfileCurve::new(ProfileFamily::Sphere { radius: 1.0 }, -0.5, 0.5).unwrap();
        let v = classify_profile(&curve).unwrap();
        assert_eq!(v.outcome, Outcome::Unconstrained);
        // Constant profile: slope identically zero, every disk is flat.
        let curve =
            ProfileCurve::new(ProfileFamily::Constant { radius: 1.0 }, -0.5, 0.5).unwrap();
        let v = classify_profile(&curve).unwrap();
        assert_eq!(v.outcome, Outcome::OnlyTotallyGeodesic);
    }

    #[test]
    fn domain_spec_json_round_trip() {
        let specs = vec![
            DomainSpec::Ball,
            DomainSpec::Quadric {
                n: Some(3),
                a: vec![1, 1, -1],
                b: 0.0,
                c: 0.0,
            },
            DomainSpec::Ellipsoid { a: 2.0, b: 1.0 },
            DomainSpec::Profile {
                profile: ProfileSpec::Cosh {
                    scale: 1.0,
                    interval: [-1.0, 1.0],
                },
            },
        ];
        for spec in specs {
            let text = spec.to_json();
            let back = DomainSpec::from_json(&text).unwrap();
            assert_eq!(spec, back);
            back.to_domain().unwrap();
        }
    }

    #[test]
    fn domain_spec_rejects_malformed_input() {
        assert!(DomainSpec::from_json("{\"kind\": \"torus\"}").is_err());
        assert!(DomainSpec::from_json("{\"kind\": \"quadric\", \"a\": [2, 1, 1]}")
            .unwrap()
            .to_domain()
            .is_err());
        assert!(DomainSpec::from_json("{\"kind\": \"ellipsoid\", \"a\": 1.0, \"b\": 2.0}")
            .unwrap()
            .to_domain()
            .is_err());
    }

    #[test]
    fn custom_field_is_evaluated_verbatim() {
        let d = LevelSetDomain::Custom(CustomField {
            value: Arc::new(|p| p.x + 1.0),
            gradient: Arc::new(|_| Vector3::new(1.0, 0.0, 0.0)),
            hessian: Arc::new(|_| Matrix3::zeros()),
        });
        let (v, g, h) = d.evaluate(&Point3::new(0.5, 9.0, -3.0)).unwrap();
        assert_relative_eq!(v, 1.5);
        assert_relative_eq!(g, Vector3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(h, Matrix3::zeros());
    }
}
