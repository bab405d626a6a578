//! Curvature-gap predicates and boundary principal-direction diagnostics.
//!
//! The checks in this module test pointwise hypotheses whose truth forces
//! global conclusions: a pinching bound on the second fundamental form, a
//! support-weighted pinching bound inside an ellipsoid, the vanishing of the
//! support function under the stability operator, linear dependence of the
//! tangential position and its shape-operator image along boundary collars,
//! and a convexity floor for the boundary curve. Each check reports the
//! tested quantity per vertex, its extremum and witness, and whether the
//! hypothesis holds; none of them asserts the global conclusion itself.

use std::collections::BTreeSet;

use nalgebra::{Matrix2, SMatrix, SVector, Vector2, Vector3};
use serde::Serialize;
use thiserror::Error;

use crate::domains::{DomainError, EllipsoidSpec, LevelSetDomain};
use crate::geometry::{
    boundary_frame, laplacian_fit_filtered, two_ring, DiscreteGeometry, GeometryError,
};
use crate::identities::{classify_signs, SignPattern, BOUNDARY_LEVEL_TOL, MINIMALITY_GATE};
use crate::mesh::{MeshError, TriMesh};
use crate::solver::{free_boundary_residuals, SolveError};

/// Pinching bound `2 * dim` for surfaces in the unit ball.
pub const BALL_PINCHING_BOUND: f64 = 4.0;
/// Bound on the support-weighted pinching quantity in an ellipsoid.
pub const ELLIPSOID_GAP_BOUND: f64 = 2.0;
/// Acceptable normalized residual of the support function under the
/// stability operator.
pub const JACOBI_TOL: f64 = 5e-2;
/// Acceptable linear-dependence defect of the tangential position under the
/// shape operator over a boundary collar.
pub const DEPENDENCE_TOL: f64 = 5e-2;
/// Acceptable relative spread of the boundary eigenvalue along a loop.
pub const SPREAD_TOL: f64 = 2e-2;
/// Discretization slack for the boundary convexity floor.
pub const CONVEXITY_SLACK: f64 = 5e-2;
/// Discretization slack for the tangent Hessian eigenvalue floor.
pub const EIGENVALUE_SLACK: f64 = 5e-2;

/// Tolerance for the `hypothesis_satisfied <=> max <= bound` reporting rule.
const REPORT_TOL: f64 = 1e-9;
const TINY: f64 = 1e-12;
/// Tangential positions shorter than this cannot carry eigen-structure.
const TANGENT_FLOOR: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum GapError {
    #[error(
        "surface is not minimal within the gate: curvature residual \
         {residual_h:.3e} exceeds {gate:.1e}"
    )]
    HypothesisUnmet { residual_h: f64, gate: f64 },
    #[error("boundary vertex {vertex} is off the domain wall by {deviation:.3e}")]
    BoundaryOffLevelSet { vertex: usize, deviation: f64 },
    #[error(
        "tangential position vanishes at boundary vertex {vertex}; \
         principal-direction analysis is undefined there"
    )]
    TangentProjectionDegenerate { vertex: usize },
    #[error("this check requires {needed}")]
    UnsupportedDomain { needed: &'static str },
    #[error("mesh has no boundary loops")]
    NoBoundary,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

impl From<SolveError> for GapError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Domain(d) => GapError::Domain(d),
            SolveError::Geometry(g) => GapError::Geometry(g),
            // A one-shot residual probe never moves the mesh, so this can
            // only mean the input was unusable for the gate.
            SolveError::MeshDegenerated { .. } => GapError::HypothesisUnmet {
                residual_h: f64::INFINITY,
                gate: MINIMALITY_GATE,
            },
        }
    }
}

/// Per-loop summary of the boundary principal-direction analysis.
#[derive(Debug, Clone, Serialize)]
pub struct PrincipalLoop {
    pub loop_index: usize,
    pub vertex_count: usize,
    /// Vertices within graph distance two of the loop.
    pub collar_size: usize,
    /// Smallest tangential-position norm over the collar.
    pub min_tangent_norm: f64,
    /// Max over the collar of `|A x^T - lambda x^T| / (|A| |x^T|)`.
    pub dependence_defect: f64,
    pub lambda_mean: f64,
    /// `(max - min) / |mean|` of the boundary eigenvalue along the loop.
    pub lambda_spread: f64,
    /// Max mismatch of `|lambda| |x^T|` against the support-function
    /// gradient norm along the loop.
    pub gradient_match_defect: f64,
    pub tau_mean: f64,
    pub tau_spread: f64,
    /// Max mismatch between the frame value `2H - lambda` and an
    /// independent polyline estimate of the boundary normal curvature.
    pub curvature_split_defect: f64,
    /// Max disagreement of the two sides of the contracted rotation-field
    /// identity over the collar, relative to `|A| |x^T|^2`.
    pub rotation_field_defect: f64,
    /// Both the dependence defect and the eigenvalue spread are small, so
    /// the loop is compatible with a rotationally invariant configuration.
    pub rotationally_compatible: bool,
}

/// Per-loop summary of the boundary convexity check.
#[derive(Debug, Clone, Serialize)]
pub struct ConvexityLoop {
    pub loop_index: usize,
    pub vertex_count: usize,
    pub min_geodesic_curvature: f64,
    /// Required curvature floor; the smallest principal curvature of the
    /// domain wall.
    pub curvature_floor: f64,
    /// Max of `floor - k_g` along the loop.
    pub max_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum LoopSummary {
    Principal(PrincipalLoop),
    Convexity(ConvexityLoop),
}

/// Outcome of one gap check. `hypothesis_satisfied` holds exactly when
/// `max_value <= bound` within a fixed reporting tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub kind: String,
    pub max_value: f64,
    pub bound: f64,
    pub hypothesis_satisfied: bool,
    pub witness_vertex: Option<usize>,
    pub per_loop: Vec<LoopSummary>,
    /// Sign behavior of the support function; only for the stability check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub support_sign: Option<SignPattern>,
    /// Worst slack of the tangent Hessian eigenvalue floor; only for the
    /// ellipsoid check. Nonnegative means the floor holds exactly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalue_margin: Option<f64>,
    /// Tested quantity per vertex; zero where the check does not apply.
    #[serde(skip)]
    pub per_vertex: Vec<f64>,
}

impl GapReport {
    /// Per-vertex dump of the tested quantity.
    pub fn per_vertex_csv(&self) -> String {
        let mut out = String::from("vertex,value\n");
        for (v, value) in self.per_vertex.iter().enumerate() {
            out.push_str(&format!("{v},{value:.17e}\n"));
        }
        out
    }

    fn within(max_value: f64, bound: f64) -> bool {
        max_value <= bound + REPORT_TOL
    }
}

/// Both eigenvalues of a symmetric 2x2 matrix, ascending.
fn symmetric_eigen_2(m: &Matrix2<f64>) -> (f64, f64) {
    let tr = m.trace();
    let disc = (0.25 * tr * tr - m.determinant()).max(0.0).sqrt();
    (0.5 * tr - disc, 0.5 * tr + disc)
}

fn operator_norm_2(m: &Matrix2<f64>) -> f64 {
    let (lo, hi) = symmetric_eigen_2(m);
    lo.abs().max(hi.abs())
}

fn argmax(values: &[f64]) -> (Option<usize>, f64) {
    let mut witness = None;
    let mut max = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if witness.is_none() || v > max {
            witness = Some(i);
            max = v;
        }
    }
    (witness, max)
}

/// Boundary vertices must sit on the domain wall before any boundary
/// machinery is meaningful.
fn check_boundary(mesh: &TriMesh, domain: &LevelSetDomain) -> Result<(), GapError> {
    for lp in mesh.boundary_loops() {
        for &v in lp {
            let (value, _, _) = domain.evaluate(&mesh.vertices()[v])?;
            let deviation = (value - 1.0).abs();
            if deviation > BOUNDARY_LEVEL_TOL {
                return Err(GapError::BoundaryOffLevelSet { vertex: v, deviation });
            }
        }
    }
    Ok(())
}

/// The pinching checks presuppose a minimal surface; reject inputs whose
/// scale-free curvature residual exceeds the gate.
fn minimality_gate(mesh: &TriMesh, domain: &LevelSetDomain) -> Result<(), GapError> {
    check_boundary(mesh, domain)?;
    let (residual_h, _) = free_boundary_residuals(mesh, domain)?;
    if residual_h > MINIMALITY_GATE {
        return Err(GapError::HypothesisUnmet {
            residual_h,
            gate: MINIMALITY_GATE,
        });
    }
    Ok(())
}

/// Pinching check in the unit ball: `max |A|^2` against `2 * dim = 4`.
/// A pass is consistent with the surface being an equatorial disk.
pub fn gap_ball(mesh: &TriMesh, geom: &DiscreteGeometry) -> Result<GapReport, GapError> {
    minimality_gate(mesh, &LevelSetDomain::Ball)?;
    let per_vertex = geom.second_fundamental_norm_sq.clone();
    let (witness_vertex, max_value) = argmax(&per_vertex);
    Ok(GapReport {
        kind: "ball-gap".into(),
        max_value,
        bound: BALL_PINCHING_BOUND,
        hypothesis_satisfied: GapReport::within(max_value, BALL_PINCHING_BOUND),
        witness_vertex,
        per_loop: Vec::new(),
        support_sign: None,
        eigenvalue_margin: None,
        per_vertex,
    })
}

/// Support-weighted pinching check in the ellipsoid
/// `(x1^2 + x2^2)/a^2 + x3^2/b^2 = 1`: per vertex `|A|^2 g^2` against 2,
/// where `g = <x,N> + (a^2/b^2 - 1) <x,E3><N,E3>`. A pass is consistent
/// with disk or annulus topology. Alongside, the tangent Hessian of the
/// wall function is assembled in closed form and its smallest eigenvalue is
/// checked against the floor `min(1 - |A| g / sqrt 2, 1 + |A| g / sqrt 2)`.
pub fn gap_ellipsoid(
    mesh: &TriMesh,
    geom: &DiscreteGeometry,
    spec: &EllipsoidSpec,
) -> Result<GapReport, GapError> {
    let domain = LevelSetDomain::Ellipsoid(spec.clone());
    minimality_gate(mesh, &domain)?;
    let ratio = spec.a * spec.a / (spec.b * spec.b) - 1.0;
    let nv = mesh.vertex_count();
    let mut per_vertex = Vec::with_capacity(nv);
    let mut margin = f64::INFINITY;
    for v in 0..nv {
        let x = mesh.vertices()[v].coords;
        let n = geom.normal[v];
        let g = x.dot(&n) + ratio * x.z * n.z;
        let a_sq = geom.second_fundamental_norm_sq[v];
        per_vertex.push(a_sq * g * g);
        // Scaled tangent Hessian of the wall function in the vertex frame.
        // The curvature term enters with a minus because this crate's shape
        // operator is the normal derivative, not its negative.
        let e3t = Vector3::z() - n * n.z;
        let t = Vector2::new(e3t.dot(&geom.frame[v][0]), e3t.dot(&geom.frame[v][1]));
        let m = Matrix2::identity() - geom.shape[v] * g + t * t.transpose() * ratio;
        let m = (m + m.transpose()) * 0.5;
        let (min_eig, _) = symmetric_eigen_2(&m);
        let shift = (a_sq.sqrt() / 2.0_f64.sqrt()) * g;
        let floor = (1.0 - shift).min(1.0 + shift);
        margin = margin.min(min_eig - floor);
    }
    let (witness_vertex, max_value) = argmax(&per_vertex);
    Ok(GapReport {
        kind: "ellipsoid-gap".into(),
        max_value,
        bound: ELLIPSOID_GAP_BOUND,
        hypothesis_satisfied: GapReport::within(max_value, ELLIPSOID_GAP_BOUND),
        witness_vertex,
        per_loop: Vec::new(),
        support_sign: None,
        eigenvalue_margin: Some(margin),
        per_vertex,
    })
}

/// Residual of the support function `g = <x,N>` under the stability
/// operator: `Delta g + |A|^2 g` at interior vertices, normalized by the
/// larger of one and the field scale `max |g| |A|^2`. On a minimal surface
/// the residual vanishes; on a closed control surface it is order one. The
/// sign behavior of `g` is reported, never asserted.
pub fn jacobi_residual(
    mesh: &TriMesh,
    geom: &DiscreteGeometry,
) -> Result<GapReport, GapError> {
    let nv = mesh.vertex_count();
    let g: Vec<f64> = (0..nv)
        .map(|v| mesh.vertices()[v].coords.dot(&geom.normal[v]))
        .collect();
    // The field is built from the vertex normals, which are an order less
    // accurate at the one-sided boundary stencils; keep those samples out
    // of the interior Laplacian fits.
    let lap = laplacian_fit_filtered(mesh, &geom.normal, &g, |u| !mesh.is_boundary(u))?;
    let field_scale = (0..nv)
        .map(|v| g[v].abs() * geom.second_fundamental_norm_sq[v])
        .fold(0.0_f64, f64::max)
        .max(1.0);
    let mut per_vertex = vec![0.0; nv];
    for v in 0..nv {
        if mesh.is_boundary(v) {
            continue;
        }
        per_vertex[v] = (lap[v] + geom.second_fundamental_norm_sq[v] * g[v]) / field_scale;
    }
    let magnitudes: Vec<f64> = per_vertex.iter().map(|r| r.abs()).collect();
    let (witness_vertex, max_value) = argmax(&magnitudes);
    let g_max = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let g_min = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let g_hi = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sign = classify_signs(g_min, g_hi, 1e-2 * g_max.max(TINY));
    Ok(GapReport {
        kind: "jacobi".into(),
        max_value,
        bound: JACOBI_TOL,
        hypothesis_satisfied: GapReport::within(max_value, JACOBI_TOL),
        witness_vertex,
        per_loop: Vec::new(),
        support_sign: Some(sign),
        eigenvalue_margin: None,
        per_vertex,
    })
}

/// Both sides of the contracted rotation-field identity at every vertex
/// with a usable two-ring: the derivative side `<D_{x^T} omega, x^T>` with
/// `omega = N x x^T` fitted over the two-ring, and the closed-form side
/// `<x,N> <A x^T, omega>`. The two agree on any smooth surface; their
/// disagreement measures discretization noise.
pub(crate) fn rotation_identity_sides(
    mesh: &TriMesh,
    geom: &DiscreteGeometry,
) -> Vec<Option<(f64, f64)>> {
    let nv = mesh.vertex_count();
    let tangential: Vec<Vector3<f64>> = (0..nv)
        .map(|v| {
            let x = mesh.vertices()[v].coords;
            let n = geom.normal[v];
            x - n * x.dot(&n)
        })
        .collect();
    let omega: Vec<Vector3<f64>> = (0..nv)
        .map(|v| geom.normal[v].cross(&tangential[v]))
        .collect();
    let mut out = vec![None; nv];
    for v in 0..nv {
        let xt = tangential[v];
        if xt.norm() < TANGENT_FLOOR {
            // Both sides vanish with the tangential position.
            out[v] = Some((0.0, 0.0));
            continue;
        }
        let ring = two_ring(mesh, v);
        if ring.len() < 5 {
            continue;
        }
        let [f0, f1] = geom.frame[v];
        let center = mesh.vertices()[v].coords;
        let samples: Vec<(f64, f64, Vector3<f64>)> = ring
            .iter()
            .map(|&u| {
                let d = mesh.vertices()[u].coords - center;
                (d.dot(&f0), d.dot(&f1), omega[u] - omega[v])
            })
            .collect();
        let scale = samples
            .iter()
            .map(|(a, b, _)| (a * a + b * b).sqrt())
            .sum::<f64>()
            / samples.len() as f64;
        if scale <= 0.0 {
            continue;
        }
        let fscale = samples
            .iter()
            .map(|(_, _, d)| d.abs().max())
            .fold(0.0_f64, f64::max)
            .max(TINY);
        let mut ata = SMatrix::<f64, 5, 5>::zeros();
        let mut atb = SMatrix::<f64, 5, 3>::zeros();
        for (a, b, d) in &samples {
            let (a, b) = (a / scale, b / scale);
            let row = SVector::<f64, 5>::from([0.5 * a * a, a * b, 0.5 * b * b, a, b]);
            ata += row * row.transpose();
            atb += row * (d / fscale).transpose();
        }
        let coeffs = match ata.cholesky().map(|ch| ch.solve(&atb)) {
            Some(c) => c,
            None => match ata.lu().solve(&atb) {
                Some(c) => c,
                None => continue,
            },
        };
        // Row 3 and 4 carry the first derivatives along the frame.
        let xtf = Vector2::new(xt.dot(&f0), xt.dot(&f1));
        let mut derivative = Vector3::zeros();
        for i in 0..3 {
            derivative[i] =
                (coeffs[(3, i)] * xtf.x + coeffs[(4, i)] * xtf.y) * fscale / scale;
        }
        let lhs = derivative.dot(&xt);
        let g = center.dot(&geom.normal[v]);
        let rhs = g * geom.shape_apply(v, &xt).dot(&omega[v]);
        out[v] = Some((lhs, rhs));
    }
    out
}

/// P1 gradient of a vertex field, area-averaged back to vertices.
fn vertex_gradient(mesh: &TriMesh, field: &[f64]) -> Vec<Vector3<f64>> {
    let nv = mesh.vertex_count();
    let mut grad = vec![Vector3::zeros(); nv];
    let mut weight = vec![0.0; nv];
    for t in 0..mesh.triangle_count() {
        let [i, j, k] = mesh.triangles()[t];
        let [p, q, r] = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        if area <= 0.0 {
            continue;
        }
        let n = mesh.triangle_normal(t);
        let g = (n.cross(&(r - q)) * field[i]
            + n.cross(&(p - r)) * field[j]
            + n.cross(&(q - p)) * field[k])
            / (2.0 * area);
        for &v in &[i, j, k] {
            grad[v] += g * area;
            weight[v] += area;
        }
    }
    for v in 0..nv {
        if weight[v] > 0.0 {
            grad[v] /= weight[v];
        }
    }
    grad
}

/// Curvature vector of the boundary polyline at position `i` of an ordered
/// loop.
fn polyline_curvature(mesh: &TriMesh, lp: &[usize], i: usize) -> Vector3<f64> {
    let n = lp.len();
    let prev = mesh.vertices()[lp[(i + n - 1) % n]].coords;
    let here = mesh.vertices()[lp[i]].coords;
    let next = mesh.vertices()[lp[(i + 1) % n]].coords;
    let e1 = here - prev;
    let e2 = next - here;
    let l1 = e1.norm();
    let l2 = e2.norm();
    if l1 <= 0.0 || l2 <= 0.0 {
        return Vector3::zeros();
    }
    (e2 / l2 - e1 / l1) * 2.0 / (l1 + l2)
}

fn spread(values: &[f64]) -> f64 {
    let max_abs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max_abs <= TINY {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (max - min) / mean.abs().max(1e-2 * max_abs).max(TINY)
}

/// Boundary principal-direction analysis in the unit ball. Per loop: how
/// close the tangential position is to an eigenvector of the shape operator
/// over a two-ring collar, how constant the associated eigenvalue is along
/// the loop, its match against the support-function gradient, the split of
/// the mean curvature into the two boundary curvatures checked against an
/// independent polyline estimate, and the two sides of the contracted
/// rotation-field identity. A loop with small dependence defect and small
/// eigenvalue spread is compatible with a rotationally invariant surface.
pub fn boundary_principal(
    mesh: &TriMesh,
    geom: &DiscreteGeometry,
    domain: &LevelSetDomain,
) -> Result<GapReport, GapError> {
    if !matches!(domain, LevelSetDomain::Ball) {
        return Err(GapError::UnsupportedDomain {
            needed: "the unit ball",
        });
    }
    if mesh.boundary_loops().is_empty() {
        return Err(GapError::NoBoundary);
    }
    check_boundary(mesh, domain)?;
    let frames = boundary_frame(mesh, geom, domain)?;
    if let Some(f) = frames.iter().find(|f| f.tangent_degenerate) {
        return Err(GapError::TangentProjectionDegenerate { vertex: f.vertex });
    }
    let nv = mesh.vertex_count();
    let support: Vec<f64> = (0..nv)
        .map(|v| mesh.vertices()[v].coords.dot(&geom.normal[v]))
        .collect();
    let grad_support = vertex_gradient(mesh, &support);
    let rotation = rotation_identity_sides(mesh, geom);
    let mut per_vertex = vec![0.0; nv];
    let mut per_loop = Vec::new();
    let mut frame_start = 0;
    for (loop_index, lp) in mesh.boundary_loops().iter().enumerate() {
        let loop_frames = &frames[frame_start..frame_start + lp.len()];
        frame_start += lp.len();

        let mut collar: BTreeSet<usize> = lp.iter().copied().collect();
        for &v in lp {
            collar.extend(two_ring(mesh, v));
        }

        let mut min_tangent_norm = f64::INFINITY;
        let mut max_tangent_sq = 0.0_f64;
        let mut dependence_defect = 0.0_f64;
        let mut rotation_scale = 0.0_f64;
        let mut rotation_gap = 0.0_f64;
        for &v in &collar {
            let x = mesh.vertices()[v].coords;
            let n = geom.normal[v];
            let xt = x - n * x.dot(&n);
            let norm = xt.norm();
            min_tangent_norm = min_tangent_norm.min(norm);
            max_tangent_sq = max_tangent_sq.max(norm * norm);
            if norm < TANGENT_FLOOR {
                continue;
            }
            let xtf = Vector2::new(xt.dot(&geom.frame[v][0]), xt.dot(&geom.frame[v][1]));
            let s = geom.shape[v];
            let lambda = (s * xtf).dot(&xtf) / xtf.norm_squared();
            let residual = (s * xtf - xtf * lambda).norm();
            let a_op = operator_norm_2(&s);
            let defect = residual / (a_op * norm).max(TINY);
            per_vertex[v] = defect;
            dependence_defect = dependence_defect.max(defect);
            rotation_scale = rotation_scale.max(a_op * norm * norm);
            if let Some((lhs, rhs)) = rotation[v] {
                rotation_gap = rotation_gap.max((lhs - rhs).abs());
            }
        }
        // A flat patch has shape operator zero, so the natural scale
        // vanishes; floor it with the tangent extent to keep the defect
        // meaningful instead of amplifying fit noise.
        let rotation_field_defect =
            rotation_gap / rotation_scale.max(1e-2 * max_tangent_sq).max(TINY);

        let lambdas: Vec<f64> = loop_frames.iter().map(|f| f.lambda).collect();
        let taus: Vec<f64> = loop_frames.iter().map(|f| f.tau).collect();
        let lambda_mean = lambdas.iter().sum::<f64>() / lambdas.len() as f64;
        let tau_mean = taus.iter().sum::<f64>() / taus.len() as f64;

        let mut gradient_match_defect = 0.0_f64;
        let mut curvature_split_defect = 0.0_f64;
        for (i, frame) in loop_frames.iter().enumerate() {
            let v = frame.vertex;
            let expected = frame.lambda.abs() * frame.tangential_position.norm();
            let observed = grad_support[v].norm();
            let floor = expected.max(observed).max(1e-2);
            gradient_match_defect =
                gradient_match_defect.max((expected - observed).abs() / floor);

            let tau_curve = -polyline_curvature(mesh, lp, i).dot(&geom.normal[v]);
            let floor = frame.lambda.abs().max(tau_curve.abs()).max(1e-2);
            curvature_split_defect =
                curvature_split_defect.max((frame.tau - tau_curve).abs() / floor);
        }

        let lambda_spread = spread(&lambdas);
        per_loop.push(LoopSummary::Principal(PrincipalLoop {
            loop_index,
            vertex_count: lp.len(),
            collar_size: collar.len(),
            min_tangent_norm,
            dependence_defect,
            lambda_mean,
            lambda_spread,
            gradient_match_defect,
            tau_mean,
            tau_spread: spread(&taus),
            curvature_split_defect,
            rotation_field_defect,
            rotationally_compatible: dependence_defect <= DEPENDENCE_TOL + REPORT_TOL
                && lambda_spread <= SPREAD_TOL + REPORT_TOL,
        }));
    }
    let (witness_vertex, max_value) = argmax(&per_vertex);
    Ok(GapReport {
        kind: "boundary-principal".into(),
        max_value,
        bound: DEPENDENCE_TOL,
        hypothesis_satisfied: GapReport::within(max_value, DEPENDENCE_TOL),
        witness_vertex,
        per_loop,
        support_sign: None,
        eigenvalue_margin: None,
        per_vertex,
    })
}

/// Smallest principal curvature of the ellipsoid wall, taken over a dense
/// sample of the meridian. Agrees with the closed form `b / a^2`.
pub fn wall_curvature_floor(spec: &EllipsoidSpec) -> f64 {
    let (a, b) = (spec.a, spec.b);
    let n = 4096;
    let mut min = f64::INFINITY;
    for i in 0..=n {
        let t = std::f64::consts::FRAC_PI_2 * i as f64 / n as f64;
        let w = (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
        let meridian = a * b / (w * w * w);
        let parallel = b / (a * w);
        min = min.min(meridian).min(parallel);
    }
    min
}

/// Geodesic curvature of the boundary against the wall's curvature floor.
/// At each boundary vertex the polyline curvature vector is projected onto
/// the inward in-surface conormal; the hypothesis holds when no vertex
/// falls below the floor by more than the discretization slack.
pub fn boundary_convexity(
    mesh: &TriMesh,
    geom: &DiscreteGeometry,
    spec: &EllipsoidSpec,
) -> Result<GapReport, GapError> {
    if mesh.boundary_loops().is_empty() {
        return Err(GapError::NoBoundary);
    }
    let domain = LevelSetDomain::Ellipsoid(spec.clone());
    check_boundary(mesh, &domain)?;
    let floor = wall_curvature_floor(spec);
    let nv = mesh.vertex_count();
    let mut per_vertex = vec![0.0; nv];
    let mut per_loop = Vec::new();
    for (loop_index, lp) in mesh.boundary_loops().iter().enumerate() {
        let mut min_kg = f64::INFINITY;
        let mut max_violation = f64::NEG_INFINITY;
        for (i, &v) in lp.iter().enumerate() {
            let kappa = polyline_curvature(mesh, lp, i);
            let conormal = geom.conormal[v].unwrap_or_else(Vector3::zeros);
            let k_g = -kappa.dot(&conormal);
            min_kg = min_kg.min(k_g);
            per_vertex[v] = floor - k_g;
            max_violation = max_violation.max(floor - k_g);
        }
        per_loop.push(LoopSummary::Convexity(ConvexityLoop {
            loop_index,
            vertex_count: lp.len(),
            min_geodesic_curvature: min_kg,
            curvature_floor: floor,
            max_violation,
        }));
    }
    let (witness_vertex, max_value) = argmax(&per_vertex);
    Ok(GapReport {
        kind: "boundary-convexity".into(),
        max_value,
        bound: CONVEXITY_SLACK,
        hypothesis_satisfied: GapReport::within(max_value, CONVEXITY_SLACK),
        witness_vertex,
        per_loop,
        support_sign: None,
        eigenvalue_margin: None,
        per_vertex,
    })
}
