//! Per-vertex discrete differential geometry on triangle meshes.
//!
//! Building blocks: cotangent Laplacian with barycentric vertex areas,
//! angle-weighted vertex normals, mean curvature from the Laplacian of the
//! position (`H = -<Lx, N>/2`, so the unit sphere with outward normal has
//! `H = +1`), a shape operator per vertex from a local quadric fit over the
//! two-ring, boundary conormals and line elements, and mass-lumped surface
//! and boundary quadrature.

use nalgebra::{Matrix2, SMatrix, SVector, Vector2, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::domains::{DomainError, LevelSetDomain};
use crate::mesh::TriMesh;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("vertex {vertex} has a {got}-point two-ring, 5 needed for the shape fit")]
    InsufficientNeighborhood { vertex: usize, got: usize },
    #[error("shape fit at vertex {vertex} is rank deficient")]
    FitSingular { vertex: usize },
    #[error("vertex {vertex} has a degenerate normal")]
    DegenerateNormal { vertex: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Cotangent weights and barycentric vertex areas, assembled once per
/// vertex configuration.
pub(crate) struct CotanOperator {
    /// Per vertex: (neighbor, cot weight) pairs, neighbor-sorted.
    weights: Vec<Vec<(usize, f64)>>,
    pub(crate) vertex_area: Vec<f64>,
}

fn cot(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let cross = a.cross(b).norm();
    if cross <= f64::MIN_POSITIVE {
        return 0.0;
    }
    a.dot(b) / cross
}

pub(crate) fn assemble_cotan(mesh: &TriMesh) -> CotanOperator {
    let nv = mesh.vertex_count();
    let mut acc: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    let mut vertex_area = vec![0.0; nv];
    for t in 0..mesh.triangle_count() {
        let tri = mesh.triangles()[t];
        let p = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        for corner in 0..3 {
            let i = tri[corner];
            vertex_area[i] += area / 3.0;
            // The angle at `corner` weights the opposite edge.
            let a = p[(corner + 1) % 3] - p[corner];
            let b = p[(corner + 2) % 3] - p[corner];
            let w = 0.5 * cot(&a, &b);
            let u = tri[(corner + 1) % 3];
            let v = tri[(corner + 2) % 3];
            acc[u].push((v, w));
            acc[v].push((u, w));
        }
    }
    // Merge duplicate neighbor entries deterministically.
    let mut weights = Vec::with_capacity(nv);
    for mut row in acc {
        row.sort_unstable_by_key(|(j, _)| *j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len() / 2 + 1);
        for (j, w) in row {
            match merged.last_mut() {
                Some((last, acc_w)) if *last == j => *acc_w += w,
                _ => merged.push((j, w)),
            }
        }
        weights.push(merged);
    }
    CotanOperator {
        weights,
        vertex_area,
    }
}

impl CotanOperator {
    /// Area-normalized Laplacian of a scalar field:
    /// `(Lf)_i = (1/A_i) sum_j w_ij (f_j - f_i)`.
    pub(crate) fn apply_scalar(&self, field: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; field.len()];
        for (i, row) in self.weights.iter().enumerate() {
            let mut sum = 0.0;
            for &(j, w) in row {
                sum += w * (field[j] - field[i]);
            }
            out[i] = sum / self.vertex_area[i].max(f64::MIN_POSITIVE);
        }
        out
    }

    /// Area-normalized Laplacian of the position; `-2 H N` on interior
    /// vertices of a smooth mesh.
    pub(crate) fn apply_positions(&self, mesh: &TriMesh) -> Vec<Vector3<f64>> {
        let verts = mesh.vertices();
        let mut out = vec![Vector3::zeros(); verts.len()];
        for (i, row) in self.weights.iter().enumerate() {
            let mut sum = Vector3::zeros();
            for &(j, w) in row {
                sum += w * (verts[j] - verts[i]);
            }
            out[i] = sum / self.vertex_area[i].max(f64::MIN_POSITIVE);
        }
        out
    }
}

/// Area-normalized cotangent Laplacian of a vertex field. Interior rows
/// approximate the surface Laplacian; boundary rows see only half a stencil
/// and are unreliable on their own.
pub fn laplacian_apply(mesh: &TriMesh, field: &[f64]) -> Vec<f64> {
    assert_eq!(field.len(), mesh.vertex_count(), "field length mismatch");
    assemble_cotan(mesh).apply_scalar(field)
}

/// Laplacian with boundary rows replaced by the mean over interior
/// neighbors; boundary stencils are half-open and their raw rows are
/// useless for pointwise checks.
pub(crate) fn laplacian_extrapolated(op: &CotanOperator, mesh: &TriMesh, field: &[f64]) -> Vec<f64> {
    let mut lap = op.apply_scalar(field);
    let raw = lap.clone();
    for v in 0..mesh.vertex_count() {
        if mesh.is_boundary(v) {
            let mut sum = 0.0;
            let mut count = 0usize;
            for &u in mesh.neighbors(v) {
                if !mesh.is_boundary(u) {
                    sum += raw[u];
                    count += 1;
                }
            }
            if count > 0 {
                lap[v] = sum / count as f64;
            }
        }
    }
    lap
}

/// Light per-vertex geometry: enough for quadrature, residuals and the
/// solver, without the shape-operator fits.
pub(crate) struct LightGeometry {
    pub vertex_area: Vec<f64>,
    pub normal: Vec<Vector3<f64>>,
    pub line_element: Vec<f64>,
}

pub(crate) fn compute_light(mesh: &TriMesh) -> Result<LightGeometry, GeometryError> {
    if mesh.triangle_count() == 0 {
        return Err(GeometryError::EmptyMesh);
    }
    let nv = mesh.vertex_count();
    let mut vertex_area = vec![0.0; nv];
    let mut normal_acc = vec![Vector3::zeros(); nv];
    for t in 0..mesh.triangle_count() {
        let tri = mesh.triangles()[t];
        let p = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        let n = mesh.triangle_normal(t);
        for corner in 0..3 {
            vertex_area[tri[corner]] += area / 3.0;
            let a = p[(corner + 1) % 3] - p[corner];
            let b = p[(corner + 2) % 3] - p[corner];
            let denom = a.norm() * b.norm();
            if denom > 0.0 {
                let angle = (a.dot(&b) / denom).clamp(-1.0, 1.0).acos();
                normal_acc[tri[corner]] += angle * n;
            }
        }
    }
    let mut normal = vec![Vector3::zeros(); nv];
    for v in 0..nv {
        let norm = normal_acc[v].norm();
        if norm <= f64::MIN_POSITIVE {
            return Err(GeometryError::DegenerateNormal { vertex: v });
        }
        normal[v] = normal_acc[v] / norm;
    }

    // Boundary line elements from the oriented loops.
    let mut line_element = vec![0.0; nv];
    for lp in mesh.boundary_loops() {
        let n = lp.len();
        for idx in 0..n {
            let v = lp[idx];
            let prev = lp[(idx + n - 1) % n];
            let next = lp[(idx + 1) % n];
            let e_in = mesh.vertices()[v] - mesh.vertices()[prev];
            let e_out = mesh.vertices()[next] - mesh.vertices()[v];
            line_element[v] = 0.5 * (e_in.norm() + e_out.norm());
        }
    }
    Ok(LightGeometry {
        vertex_area,
        normal,
        line_element,
    })
}

/// Outward conormals along the boundary loops for a given normal field:
/// edge direction crossed with the vertex normal, forced into the tangent
/// plane and normalized.
fn conormal_field(mesh: &TriMesh, normal: &[Vector3<f64>]) -> Vec<Option<Vector3<f64>>> {
    let mut conormal: Vec<Option<Vector3<f64>>> = vec![None; mesh.vertex_count()];
    for lp in mesh.boundary_loops() {
        let n = lp.len();
        for idx in 0..n {
            let v = lp[idx];
            let prev = lp[(idx + n - 1) % n];
            let next = lp[(idx + 1) % n];
            let e_in = mesh.vertices()[v] - mesh.vertices()[prev];
            let e_out = mesh.vertices()[next] - mesh.vertices()[v];
            let mut dir = Vector3::zeros();
            for e in [e_in, e_out] {
                let l = e.norm();
                if l > 0.0 {
                    dir += (e / l).cross(&normal[v]);
                }
            }
            dir -= normal[v] * dir.dot(&normal[v]);
            let l = dir.norm();
            if l > f64::MIN_POSITIVE {
                conormal[v] = Some(dir / l);
            }
        }
    }
    conormal
}

/// Full per-vertex geometry of a mesh.
///
/// `mean_curvature` comes from the Laplacian of the position and is the
/// quantity driven to zero by the solver; `shape`, `shape_mean_curvature`
/// and `second_fundamental_norm_sq` come from the local quadric fit and
/// feed the rigidity diagnostics. Boundary entries of `mean_curvature` are
/// computed from half-open stencils and should not be trusted pointwise.
pub struct DiscreteGeometry {
    pub vertex_area: Vec<f64>,
    pub normal: Vec<Vector3<f64>>,
    pub mean_curvature: Vec<f64>,
    /// Shape operator in the per-vertex tangent frame.
    pub shape: Vec<Matrix2<f64>>,
    /// Orthonormal tangent frame `(e1, e2)` with `e1 x e2 = N`.
    pub frame: Vec<[Vector3<f64>; 2]>,
    /// Half the trace of the fitted shape operator.
    pub shape_mean_curvature: Vec<f64>,
    /// Squared Frobenius norm of the fitted shape operator.
    pub second_fundamental_norm_sq: Vec<f64>,
    /// Boundary arc length weight per vertex; zero off the boundary.
    pub line_element: Vec<f64>,
    /// Outward conormal at boundary vertices.
    pub conormal: Vec<Option<Vector3<f64>>>,
}

impl DiscreteGeometry {
    pub fn total_area(&self) -> f64 {
        self.vertex_area.iter().sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.line_element.iter().sum()
    }

    /// Shape operator applied to an ambient tangent vector at a vertex.
    pub fn shape_apply(&self, v: usize, t: &Vector3<f64>) -> Vector3<f64> {
        let [e1, e2] = self.frame[v];
        let coords = Vector2::new(t.dot(&e1), t.dot(&e2));
        let image = self.shape[v] * coords;
        e1 * image.x + e2 * image.y
    }
}

/// Stable orthonormal frame perpendicular to a unit vector.
fn tangent_frame(n: &Vector3<f64>) -> [Vector3<f64>; 2] {
    let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vector3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let e1 = (helper - n * helper.dot(n)).normalize();
    let e2 = n.cross(&e1);
    [e1, e2]
}

/// Inverse square root of a symmetric positive definite 2x2 matrix.
fn inv_sqrt_spd2(m: &Matrix2<f64>) -> Option<Matrix2<f64>> {
    let det = m.determinant();
    if !(det > 0.0) {
        return None;
    }
    let s = det.sqrt();
    let trace = m.m11 + m.m22;
    let denom_sq = trace + 2.0 * s;
    if !(denom_sq > 0.0) {
        return None;
    }
    // sqrt(M) = (M + sqrt(det) I) / sqrt(trace + 2 sqrt(det)).
    let sqrt_m = (m + Matrix2::identity() * s) / denom_sq.sqrt();
    sqrt_m.try_inverse()
}

/// Collect the vertices within `depth` edges of `v`, excluding `v` itself.
pub(crate) fn ring_patch(mesh: &TriMesh, v: usize, depth: usize) -> Vec<usize> {
    let mut out: Vec<usize> = mesh.neighbors(v).to_vec();
    out.push(v);
    out.sort_unstable();
    let mut frontier: Vec<usize> = mesh.neighbors(v).to_vec();
    for _ in 1..depth {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in mesh.neighbors(u) {
                if out.binary_search(&w).is_err() {
                    next.push(w);
                }
            }
        }
        next.sort_unstable();
        next.dedup();
        out.extend_from_slice(&next);
        out.sort_unstable();
        frontier = next;
    }
    out.retain(|&u| u != v);
    out
}

/// Collect the two-ring of a vertex (graph distance 1 and 2), excluding the
/// vertex itself.
pub(crate) fn two_ring(mesh: &TriMesh, v: usize) -> Vec<usize> {
    ring_patch(mesh, v, 2)
}

struct ShapeFit {
    shape: Matrix2<f64>,
    frame: [Vector3<f64>; 2],
    /// Linear terms of the height fit: the tilt of the supplied normal
    /// against the best-fit surface, in frame coordinates.
    slope: Vector2<f64>,
}

/// Least-squares height fit over the two-ring against a polynomial basis
/// whose first five entries are the quadric monomials, in coordinates
/// scaled to unit in-plane spread for conditioning. Returns the shape
/// operator `-I^{-1/2} (Hess h / W) I^{-1/2}` in the fitted frame, plus
/// the fitted tilt of the normal.
fn fit_shape_basis<const K: usize>(
    mesh: &TriMesh,
    normal: &[Vector3<f64>],
    v: usize,
    ring: &[usize],
    basis: impl Fn(f64, f64) -> SVector<f64, K>,
) -> Result<ShapeFit, GeometryError>
where
    nalgebra::Const<K>: nalgebra::ToTypenum
        + nalgebra::DimMin<nalgebra::Const<K>, Output = nalgebra::Const<K>>,
{
    if ring.len() < K {
        return Err(GeometryError::InsufficientNeighborhood {
            vertex: v,
            got: ring.len(),
        });
    }
    let n = normal[v];
    let frame = tangent_frame(&n);
    let p0 = mesh.vertices()[v];
    let mut samples: Vec<(f64, f64, f64)> = Vec::with_capacity(ring.len());
    let mut spread = 0.0;
    for &u in ring {
        let q = mesh.vertices()[u] - p0;
        let a = q.dot(&frame[0]);
        let b = q.dot(&frame[1]);
        let h = q.dot(&n);
        spread += (a * a + b * b).sqrt();
        samples.push((a, b, h));
    }
    let scale = spread / ring.len() as f64;
    if !(scale > f64::MIN_POSITIVE) {
        return Err(GeometryError::FitSingular { vertex: v });
    }
    let mut ata = SMatrix::<f64, K, K>::zeros();
    let mut atb = SVector::<f64, K>::zeros();
    for &(a, b, h) in &samples {
        let (a, b, h) = (a / scale, b / scale, h / scale);
        let row = basis(a, b);
        ata += row * row.transpose();
        atb += row * h;
    }
    let coeffs = ata
        .cholesky()
        .map(|ch| ch.solve(&atb))
        .or_else(|| ata.lu().solve(&atb))
        .ok_or(GeometryError::FitSingular { vertex: v })?;
    // Unscale: curvature coefficients pick up 1/scale, slopes are
    // dimensionless.
    let (p, q, r) = (coeffs[0] / scale, coeffs[1] / scale, coeffs[2] / scale);
    let (d, e) = (coeffs[3], coeffs[4]);
    let w = (1.0 + d * d + e * e).sqrt();
    let metric = Matrix2::new(1.0 + d * d, d * e, d * e, 1.0 + e * e);
    let second = Matrix2::new(p, q, q, r) / w;
    let half = inv_sqrt_spd2(&metric).ok_or(GeometryError::FitSingular { vertex: v })?;
    let shape = -(half * second * half);
    // Symmetrize away rounding asymmetry.
    let shape = (shape + shape.transpose()) * 0.5;
    Ok(ShapeFit {
        shape,
        frame,
        slope: Vector2::new(d, e),
    })
}

fn quadric_basis(a: f64, b: f64) -> SVector<f64, 5> {
    SVector::<f64, 5>::from([0.5 * a * a, a * b, 0.5 * b * b, a, b])
}

fn cubic_basis(a: f64, b: f64) -> SVector<f64, 9> {
    SVector::<f64, 9>::from([
        0.5 * a * a,
        a * b,
        0.5 * b * b,
        a,
        b,
        a * a * a,
        a * a * b,
        a * b * b,
        b * b * b,
    ])
}

/// Height fit with the richest basis the neighborhood supports: cubic when
/// the two-ring has comfortably more points than cubic coefficients,
/// quadric otherwise. The cubic terms soak up the odd truncation error a
/// quadric fit folds into its linear and quadratic coefficients, which is
/// what limits accuracy on one-sided boundary stencils.
fn fit_shape(mesh: &TriMesh, normal: &[Vector3<f64>], v: usize) -> Result<ShapeFit, GeometryError> {
    // One-sided stencils need extra reach: the boundary two-ring of a
    // structured mesh spans only three distance levels away from the rim,
    // which cannot pin down a cubic, so boundary vertices fit over the
    // three-ring.
    let depth = if mesh.is_boundary(v) { 3 } else { 2 };
    let ring = ring_patch(mesh, v, depth);
    if ring.len() >= 14 {
        if let Ok(fit) = fit_shape_basis(mesh, normal, v, &ring, cubic_basis) {
            return Ok(fit);
        }
    } else if !mesh.is_boundary(v) && ring.len() >= 10 {
        if let Ok(fit) = fit_shape_basis(mesh, normal, v, &ring, cubic_basis) {
            return Ok(fit);
        }
    }
    fit_shape_basis(mesh, normal, v, &ring, quadric_basis)
}

/// Pointwise Laplace-Beltrami estimate of a scalar field by a quadratic
/// least-squares fit over the two-ring in the tangent frame, with the
/// surface height fitted alongside to correct for the induced metric.
/// Unlike the mass-lumped cotangent rows, whose normalization depends on
/// vertex valence and does not converge pointwise on irregular meshes,
/// the fitted value reproduces quadratics exactly wherever the two-ring
/// has five independent points, boundary vertices included.
pub fn laplacian_fit(
    mesh: &TriMesh,
    normal: &[Vector3<f64>],
    field: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    laplacian_fit_filtered(mesh, normal, field, |_| true)
}

/// `laplacian_fit` with a sample filter: ring vertices rejected by `keep`
/// are dropped from each stencil as long as at least five samples survive,
/// otherwise the full ring is used. Lets a caller exclude samples it knows
/// to be less accurate, such as boundary values of a field derived from
/// one-sided normal estimates.
pub fn laplacian_fit_filtered(
    mesh: &TriMesh,
    normal: &[Vector3<f64>],
    field: &[f64],
    keep: impl Fn(usize) -> bool,
) -> Result<Vec<f64>, GeometryError> {
    assert_eq!(field.len(), mesh.vertex_count(), "field length mismatch");
    let nv = mesh.vertex_count();
    let mut out = vec![0.0; nv];
    for v in 0..nv {
        let mut ring = two_ring(mesh, v);
        let filtered: Vec<usize> = ring.iter().copied().filter(|&u| keep(u)).collect();
        // Six, not five: with the bare minimum the fit interpolates instead
        // of averaging and a skewed sample set can swing it arbitrarily.
        if filtered.len() >= 6 {
            ring = filtered;
        }
        if ring.len() < 5 {
            return Err(GeometryError::InsufficientNeighborhood {
                vertex: v,
                got: ring.len(),
            });
        }
        let n = normal[v];
        let frame = tangent_frame(&n);
        let p0 = mesh.vertices()[v];
        let mut samples: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(ring.len());
        let mut spread = 0.0;
        let mut field_spread = 0.0f64;
        for &u in &ring {
            let q = mesh.vertices()[u] - p0;
            let a = q.dot(&frame[0]);
            let b = q.dot(&frame[1]);
            let h = q.dot(&n);
            let f = field[u] - field[v];
            spread += (a * a + b * b).sqrt();
            field_spread = field_spread.max(f.abs());
            samples.push((a, b, h, f));
        }
        let scale = spread / ring.len() as f64;
        if !(scale > f64::MIN_POSITIVE) {
            return Err(GeometryError::FitSingular { vertex: v });
        }
        let fscale = if field_spread > f64::MIN_POSITIVE {
            field_spread
        } else {
            1.0
        };
        let mut ata = SMatrix::<f64, 5, 5>::zeros();
        let mut ath = SVector::<f64, 5>::zeros();
        let mut atf = SVector::<f64, 5>::zeros();
        for &(a, b, h, f) in &samples {
            let (a, b) = (a / scale, b / scale);
            let row = SVector::<f64, 5>::from([0.5 * a * a, a * b, 0.5 * b * b, a, b]);
            ata += row * row.transpose();
            ath += row * (h / scale);
            atf += row * (f / fscale);
        }
        let solve = |rhs: &SVector<f64, 5>| {
            ata.cholesky()
                .map(|ch| ch.solve(rhs))
                .or_else(|| ata.lu().solve(rhs))
                .ok_or(GeometryError::FitSingular { vertex: v })
        };
        let ch = solve(&ath)?;
        let cf = solve(&atf)?;
        // Unscale to the ambient coordinates.
        let hess_h = Matrix2::new(ch[0], ch[1], ch[1], ch[2]) / scale;
        let grad_h = Vector2::new(ch[3], ch[4]);
        let hess_f = Matrix2::new(cf[0], cf[1], cf[1], cf[2]) * (fscale / (scale * scale));
        let grad_f = Vector2::new(cf[3], cf[4]) * (fscale / scale);
        // Laplace-Beltrami of a field on the graph (a, b) -> h(a, b) at the
        // fit center: trace term minus the metric and Christoffel
        // corrections, which all contract against grad h.
        let w_sq = 1.0 + grad_h.norm_squared();
        let lap_h = hess_h.m11 + hess_h.m22;
        let trace_f = hess_f.m11 + hess_f.m22;
        let hff = (hess_f * grad_h).dot(&grad_h);
        let hhh = (hess_h * grad_h).dot(&grad_h);
        out[v] = trace_f - hff / w_sq - grad_h.dot(&grad_f) / w_sq * (lap_h - hhh / w_sq);
    }
    Ok(out)
}

/// Compute the full per-vertex geometry. Needs every vertex to have a
/// five-point two-ring for the shape fit.
pub fn compute_geometry(mesh: &TriMesh) -> Result<DiscreteGeometry, GeometryError> {
    let light = compute_light(mesh)?;
    let nv = mesh.vertex_count();
    // The assembled normals are second order accurate where the one-ring is
    // balanced but only first order on one-sided boundary stencils. The
    // linear terms of the quadric fit measure exactly that tilt, so one
    // corrective pass makes the normal second order everywhere; fields
    // derived from it (support function, conormal, shape) inherit the gain.
    // Each fit reads only the center vertex's normal, so both passes are
    // per-vertex independent and parallelize without changing results.
    let prior = light.normal;
    let normal = (0..nv)
        .into_par_iter()
        .map(|v| {
            let fit = fit_shape(mesh, &prior, v)?;
            let tilted =
                prior[v] - fit.frame[0] * fit.slope.x - fit.frame[1] * fit.slope.y;
            let len = tilted.norm();
            Ok(if len > f64::MIN_POSITIVE {
                tilted / len
            } else {
                prior[v]
            })
        })
        .collect::<Result<Vec<_>, GeometryError>>()?;
    let conormal = conormal_field(mesh, &normal);
    let op = assemble_cotan(mesh);
    let lap_pos = op.apply_positions(mesh);
    let fits = (0..nv)
        .into_par_iter()
        .map(|v| fit_shape(mesh, &normal, v))
        .collect::<Result<Vec<_>, GeometryError>>()?;
    let mut mean_curvature = vec![0.0; nv];
    let mut shape = vec![Matrix2::zeros(); nv];
    let mut frame = vec![[Vector3::zeros(); 2]; nv];
    let mut shape_mean = vec![0.0; nv];
    let mut norm_a_sq = vec![0.0; nv];
    for (v, fit) in fits.iter().enumerate() {
        mean_curvature[v] = -0.5 * lap_pos[v].dot(&normal[v]);
        shape_mean[v] = 0.5 * (fit.shape.m11 + fit.shape.m22);
        norm_a_sq[v] = fit.shape.m11 * fit.shape.m11
            + fit.shape.m22 * fit.shape.m22
            + 2.0 * fit.shape.m12 * fit.shape.m12;
        shape[v] = fit.shape;
        frame[v] = fit.frame;
    }
    Ok(DiscreteGeometry {
        vertex_area: light.vertex_area,
        normal,
        mean_curvature,
        shape,
        frame,
        shape_mean_curvature: shape_mean,
        second_fundamental_norm_sq: norm_a_sq,
        line_element: light.line_element,
        conormal,
    })
}

/// Mass-lumped surface integral of a vertex field.
pub fn integrate_surface(geom: &DiscreteGeometry, values: &[f64]) -> f64 {
    integrate_with_weights(&geom.vertex_area, values)
}

/// Mass-lumped boundary integral of a vertex field; off-boundary entries
/// carry zero weight.
pub fn integrate_boundary(geom: &DiscreteGeometry, values: &[f64]) -> f64 {
    integrate_with_weights(&geom.line_element, values)
}

pub(crate) fn integrate_with_weights(weights: &[f64], values: &[f64]) -> f64 {
    assert_eq!(weights.len(), values.len(), "field length mismatch");
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

/// Per-vertex boundary data against a domain: alignment of the surface
/// normal and conormal with the domain normal, the tangential position, and
/// the boundary eigenstructure of the shape operator.
#[derive(Debug, Clone)]
pub struct BoundaryVertexFrame {
    pub vertex: usize,
    pub loop_index: usize,
    pub conormal: Vector3<f64>,
    pub domain_normal: Vector3<f64>,
    /// `<N, Nbar>`; zero at an orthogonal free boundary.
    pub normal_alignment: f64,
    /// `<conormal, Nbar>`; one at an orthogonal free boundary.
    pub conormal_alignment: f64,
    /// Position projected onto the tangent plane.
    pub tangential_position: Vector3<f64>,
    /// Shape operator applied to the tangential position.
    pub shape_tangential: Vector3<f64>,
    /// Rayleigh quotient of the shape operator on the tangential position.
    pub lambda: f64,
    /// Complementary eigenvalue `2 H_fit - lambda`.
    pub tau: f64,
    /// Set when the tangential position is too short to define lambda.
    pub tangent_degenerate: bool,
}

/// Assemble boundary frames for every boundary vertex, loop by loop in
/// deterministic order.
pub fn boundary_frame(
    mesh: &TriMesh,
    geom: &DiscreteGeometry,
    domain: &LevelSetDomain,
) -> Result<Vec<BoundaryVertexFrame>, GeometryError> {
    let mut out = Vec::new();
    for (loop_index, lp) in mesh.boundary_loops().iter().enumerate() {
        for &v in lp {
            let nbar = domain.unit_normal(&mesh.vertices()[v])?;
            let n = geom.normal[v];
            let conormal = geom.conormal[v].unwrap_or_else(Vector3::zeros);
            let x = mesh.vertices()[v].coords;
            let x_t = x - n * x.dot(&n);
            let degenerate = x_t.norm() < 1e-8;
            let a_x_t = geom.shape_apply(v, &x_t);
            let lambda = if degenerate {
                f64::NAN
            } else {
                a_x_t.dot(&x_t) / x_t.norm_squared()
            };
            let tau = 2.0 * geom.shape_mean_curvature[v] - lambda;
            out.push(BoundaryVertexFrame {
                vertex: v,
                loop_index,
                conormal,
                domain_normal: nbar,
                normal_alignment: n.dot(&nbar),
                conormal_alignment: conormal.dot(&nbar),
                tangential_position: x_t,
                shape_tangential: a_x_t,
                lambda,
                tau,
                tangent_degenerate: degenerate,
            });
        }
    }
    Ok(out)
}

/// Per-vertex geometry as CSV for external inspection.
pub fn geometry_csv(mesh: &TriMesh, geom: &DiscreteGeometry) -> String {
    use std::fmt::Write as _;
    let mut out = String::from(
        "vertex,x,y,z,area,nx,ny,nz,mean_curvature,shape_mean_curvature,norm_a_sq,is_boundary,line_element\n",
    );
    for v in 0..mesh.vertex_count() {
        let p = mesh.vertices()[v];
        let n = geom.normal[v];
        writeln!(
            out,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e}",
            v,
            p.x,
            p.y,
            p.z,
            geom.vertex_area[v],
            n.x,
            n.y,
            n.z,
            geom.mean_curvature[v],
            geom.shape_mean_curvature[v],
            geom.second_fundamental_norm_sq[v],
            mesh.is_boundary(v) as u8,
            geom.line_element[v]
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use approx::assert_relative_eq;
    use nalgebra::Point3;

    /// Structured planar grid on [0,1]^2 with union-jack diagonals.
    fn planar_grid(n: usize) -> TriMesh {
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Point3::new(i as f64 / n as f64, j as f64 / n as f64, 0.0));
            }
        }
        let at = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let a = at(i, j);
                let b = at(i + 1, j);
                let c = at(i + 1, j + 1);
                let d = at(i, j + 1);
                if (i + j) % 2 == 0 {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                } else {
                    triangles.push([a, b, d]);
                    triangles.push([b, c, d]);
                }
            }
        }
        TriMesh::new(vertices, triangles).unwrap()
    }

    #[test]
    fn laplacian_annihilates_linear_fields_in_the_interior() {
        let m = planar_grid(8);
        let field: Vec<f64> = m
            .vertices()
            .iter()
            .map(|p| 3.0 * p.x - 2.0 * p.y + 0.5)
            .collect();
        let lap = laplacian_apply(&m, &field);
        for v in 0..m.vertex_count() {
            if !m.is_boundary(v) {
                assert!(lap[v].abs() < 1e-10, "lap[{v}] = {}", lap[v]);
            }
        }
    }

    #[test]
    fn fitted_laplacian_recovers_the_trace_of_quadratics() {
        // Raw normalized cotangent rows oscillate around the true value on
        // this grid because the vertex valence alternates between 4 and 8;
        // the two-ring fit is exact on quadratics at every vertex.
        let m = planar_grid(16);
        let geom = compute_geometry(&m).unwrap();
        let field: Vec<f64> = m
            .vertices()
            .iter()
            .map(|p| p.x * p.x + 3.0 * p.y * p.y - p.x * p.y + 2.0 * p.x - 1.0)
            .collect();
        let lap = laplacian_fit(&m, &geom.normal, &field).unwrap();
        for v in 0..m.vertex_count() {
            assert_relative_eq!(lap[v], 8.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn planar_geometry_is_flat() {
        let m = planar_grid(8);
        let geom = compute_geometry(&m).unwrap();
        assert_relative_eq!(geom.total_area(), 1.0, epsilon = 1e-12);
        for v in 0..m.vertex_count() {
            assert_relative_eq!(geom.normal[v], Vector3::z(), epsilon = 1e-12);
            if !m.is_boundary(v) {
                assert!(geom.mean_curvature[v].abs() < 1e-10);
            }
            assert!(geom.second_fundamental_norm_sq[v] < 1e-16);
        }
        // Boundary of the unit square has length 4.
        assert_relative_eq!(geom.boundary_length(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn sphere_curvatures_match_the_unit_sphere() {
        let m = reference::icosphere(4);
        let geom = compute_geometry(&m).unwrap();
        for v in 0..m.vertex_count() {
            let radial = m.vertices()[v].coords.normalize();
            assert!(geom.normal[v].dot(&radial) > 0.999);
            // The lumped position Laplacian carries a valence-dependent mass
            // error that does not shrink under refinement (about 14% at the
            // twelve valence-5 vertices); it is only trusted near zero, where
            // the solver uses it. Pointwise values come from the fit.
            assert_relative_eq!(geom.mean_curvature[v], 1.0, max_relative = 0.25);
            assert_relative_eq!(geom.shape_mean_curvature[v], 1.0, max_relative = 2e-2);
            assert_relative_eq!(
                geom.second_fundamental_norm_sq[v],
                2.0,
                max_relative = 5e-2
            );
        }
        assert_relative_eq!(
            geom.total_area(),
            4.0 * std::f64::consts::PI,
            max_relative = 5e-3
        );
    }

    #[test]
    fn disk_boundary_frame_is_radial() {
        let (m, _) = reference::make_reference(reference::ReferenceKind::EquatorialDisk { radius: 1.0 }, 16)
            .unwrap();
        let geom = compute_geometry(&m).unwrap();
        let frames = boundary_frame(&m, &geom, &LevelSetDomain::Ball).unwrap();
        assert!(!frames.is_empty());
        for f in &frames {
            let radial = m.vertices()[f.vertex].coords.normalize();
            assert!(f.conormal.dot(&radial) > 0.999, "conormal not radial");
            assert!(f.normal_alignment.abs() < 1e-12);
            assert!(f.conormal_alignment > 0.999);
            assert!(!f.tangent_degenerate);
            // Flat disk: the shape operator vanishes, so lambda ~ 0.
            assert!(f.lambda.abs() < 1e-10);
        }
        assert_relative_eq!(
            geom.boundary_length(),
            2.0 * std::f64::consts::PI,
            max_relative = 5e-3
        );
        let ones = vec![1.0; m.vertex_count()];
        assert_relative_eq!(
            integrate_surface(&geom, &ones),
            std::f64::consts::PI,
            max_relative = 5e-3
        );
    }

    #[test]
    fn insufficient_two_ring_is_detected() {
        // A single triangle: every vertex sees only 2 neighbors.
        let m = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(
            compute_geometry(&m),
            Err(GeometryError::InsufficientNeighborhood { .. })
        ));
    }

    #[test]
    fn inv_sqrt_spd2_squares_back() {
        let m = Matrix2::new(2.0, 0.3, 0.3, 1.5);
        let h = inv_sqrt_spd2(&m).unwrap();
        let should_be_inverse = h * h;
        let id = should_be_inverse * m;
        assert_relative_eq!(id, Matrix2::identity(), epsilon = 1e-12);
    }
}
