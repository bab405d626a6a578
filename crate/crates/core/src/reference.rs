//! Analytic reference surfaces with structured meshes and exact invariants.
//!
//! Supplies the flat equatorial disk, the critical catenoid of the unit
//! ball, meridian disks of ellipsoids of revolution, disks in cylinders,
//! plus two auxiliary constructions: the icosphere control surface and a
//! cylindrical band used to initialize annulus solves. Meshes carry the
//! union-jack diagonal pattern so they inherit the symmetries of the smooth
//! surfaces, and their boundary vertices satisfy |F - 1| <= 1e-12 in the
//! matching domain by construction.

use std::f64::consts::PI;

use nalgebra::Point3;
use serde::Serialize;

use crate::domains::DomainError;
use crate::mesh::TriMesh;

/// The critical catenoid `(c cosh(s) cos t, c cosh(s) sin t, c s)` for
/// `|s| <= s0`: the unique rotationally symmetric free-boundary minimal
/// annulus of the unit ball. `s0` solves `s tanh(s) = 1` and `c` scales the
/// boundary circles onto the unit sphere.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriticalCatenoid {
    pub s0: f64,
    pub c: f64,
}

/// Root of `s tanh(s) = 1` by bisection on [1, 1.5], driven to interval
/// width 1e-15.
pub fn solve_critical_catenoid() -> CriticalCatenoid {
    let f = |s: f64| s * s.tanh() - 1.0;
    let (mut lo, mut hi) = (1.0_f64, 1.5_f64);
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s0 = 0.5 * (lo + hi);
    let c = 1.0 / (s0.cosh().powi(2) + s0 * s0).sqrt();
    CriticalCatenoid { s0, c }
}

impl CriticalCatenoid {
    /// `2 pi c^2 (s0 + sinh(s0) cosh(s0))`.
    pub fn area(&self) -> f64 {
        2.0 * PI * self.c * self.c * (self.s0 + self.s0.sinh() * self.s0.cosh())
    }

    /// Two boundary circles of radius `c cosh(s0)`; equals twice the area
    /// exactly at the critical parameter.
    pub fn boundary_length(&self) -> f64 {
        4.0 * PI * self.c * self.s0.cosh()
    }

    pub fn neck_radius(&self) -> f64 {
        self.c
    }

    pub fn boundary_radius(&self) -> f64 {
        self.c * self.s0.cosh()
    }

    pub fn boundary_height(&self) -> f64 {
        self.c * self.s0
    }

    /// Squared norm of the second fundamental form at parameter `s`:
    /// `2 / (c cosh^2 s)^2`.
    pub fn norm_a_sq_at(&self, s: f64) -> f64 {
        let d = self.c * s.cosh() * s.cosh();
        2.0 / (d * d)
    }

    pub fn norm_a_sq_max(&self) -> f64 {
        self.norm_a_sq_at(0.0)
    }

    /// Support function `<x, N>` at parameter `s` with the normal pointing
    /// away from the axis; vanishes at `|s| = s0`.
    pub fn support_at(&self, s: f64) -> f64 {
        self.c * (s.cosh() - s * s.sinh()) / s.cosh()
    }

    /// Principal curvature along the boundary circle in the away-from-axis
    /// orientation: `1 / (c cosh^2 s0)`.
    pub fn boundary_circle_curvature(&self) -> f64 {
        1.0 / (self.c * self.s0.cosh() * self.s0.cosh())
    }
}

/// Reference surface families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceKind {
    /// Flat disk of the given radius in the plane `x3 = 0`, centered at the
    /// origin. Equator of the ball for radius 1, equatorial disk of an
    /// ellipsoid of revolution for radius `a`.
    EquatorialDisk { radius: f64 },
    /// The free-boundary minimal annulus of the unit ball.
    CriticalCatenoid,
    /// Flat disk in the plane `x2 = 0` spanning the meridian ellipse of the
    /// ellipsoid with semi-axes `a, b`.
    MeridianDisk { a: f64, b: f64 },
    /// Unit disk at height `h` inside the infinite unit cylinder.
    CylinderDisk { height: f64 },
}

/// Exact invariants attached to a reference mesh.
#[derive(Debug, Clone)]
pub struct ReferenceSurface {
    pub kind: ReferenceKind,
    pub exact_area: f64,
    pub exact_boundary_length: f64,
    pub catenoid: Option<CriticalCatenoid>,
}

#[derive(Serialize)]
struct SidecarJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    s0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    exact_area: f64,
    exact_boundary_length: f64,
}

impl ReferenceSurface {
    /// Machine-readable invariants: `exact_area`, `exact_boundary_length`,
    /// and for the catenoid also `s0` and `c`.
    pub fn sidecar_json(&self) -> String {
        let payload = SidecarJson {
            s0: self.catenoid.map(|cc| cc.s0),
            c: self.catenoid.map(|cc| cc.c),
            exact_area: self.exact_area,
            exact_boundary_length: self.exact_boundary_length,
        };
        serde_json::to_string_pretty(&payload).expect("sidecar serializes")
    }
}

/// Even angular count matching the radial spacing of `n` rings.
fn angular_count(n: usize) -> usize {
    (((PI * n as f64) / 2.0).round() as usize * 2).max(8)
}

/// Structured polar disk: `n` concentric rings with a constant angular
/// count, a center fan, and union-jack diagonals. Counterclockwise seen
/// from `+x3`, normal `+e3`.
fn polar_disk(radius: f64, n: usize) -> TriMesh {
    let n = n.max(2);
    let m = angular_count(n);
    let mut vertices = vec![Point3::new(0.0, 0.0, 0.0)];
    for j in 1..=n {
        let r = radius * j as f64 / n as f64;
        for k in 0..m {
            let theta = 2.0 * PI * k as f64 / m as f64;
            vertices.push(Point3::new(r * theta.cos(), r * theta.sin(), 0.0));
        }
    }
    let at = |j: usize, k: usize| 1 + (j - 1) * m + (k % m);
    let mut triangles = Vec::new();
    for k in 0..m {
        triangles.push([0, at(1, k), at(1, k + 1)]);
    }
    for j in 1..n {
        for k in 0..m {
            let a = at(j, k);
            let b = at(j, k + 1);
            let c = at(j + 1, k);
            let d = at(j + 1, k + 1);
            // Counterclockwise from +x3 the quad circuit is a, c, d, b.
            if (j + k) % 2 == 0 {
                triangles.push([a, d, b]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, c, b]);
                triangles.push([b, c, d]);
            }
        }
    }
    TriMesh::new(vertices, triangles).expect("structured disk is well formed")
}

/// Structured tube: rows of circles with union-jack diagonals, triangles
/// oriented so normals point away from the `x3` axis. `row(i)` returns the
/// radius and height of row `i` in `0..=n_rows`.
fn structured_tube(n_rows: usize, m: usize, row: impl Fn(usize) -> (f64, f64)) -> TriMesh {
    let mut vertices = Vec::with_capacity((n_rows + 1) * m);
    for i in 0..=n_rows {
        let (r, z) = row(i);
        for k in 0..m {
            let theta = 2.0 * PI * k as f64 / m as f64;
            vertices.push(Point3::new(r * theta.cos(), r * theta.sin(), z));
        }
    }
    let at = |i: usize, k: usize| i * m + (k % m);
    let mut triangles = Vec::new();
    // One diagonal direction throughout: every vertex of a row then shares
    // one stencil shape, so fitted quantities are constant along boundary
    // rings up to rounding and discretization error varies smoothly instead
    // of oscillating at grid frequency.
    for i in 0..n_rows {
        for k in 0..m {
            let a = at(i, k);
            let b = at(i, k + 1);
            let c = at(i + 1, k);
            let d = at(i + 1, k + 1);
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    TriMesh::new(vertices, triangles).expect("structured tube is well formed")
}

/// Conformally spaced critical catenoid mesh with `n_rows` rows (rounded up
/// to even so the neck row is present and the grid is symmetric in `x3`).
fn catenoid_mesh(cc: &CriticalCatenoid, n_rows: usize) -> TriMesh {
    let n = (n_rows.max(4) + 1) / 2 * 2;
    // Angular count matching the conformal row spacing 2 s0 / n.
    let m = (((PI * n as f64 / (2.0 * cc.s0)).round() as usize) * 2).max(8);
    structured_tube(n, m, |i| {
        // s_i = s0 (2i - n)/n, exactly antisymmetric; even radius profile
        // computed from |s| so the grid is bitwise symmetric under z -> -z.
        let s = cc.s0 * (2.0 * i as f64 - n as f64) / n as f64;
        (cc.c * s.abs().cosh(), cc.c * s)
    })
}

/// Cylindrical band of half-height `z_extent` whose boundary circles lie on
/// the unit sphere; the standard annulus initializer for the ball.
pub fn cylinder_band(z_extent: f64, n_rows: usize) -> TriMesh {
    assert!(z_extent > 0.0 && z_extent < 1.0, "band must fit in the ball");
    let n = (n_rows.max(4) + 1) / 2 * 2;
    let r0 = (1.0 - z_extent * z_extent).sqrt();
    let m = (((PI * r0 * n as f64 / (2.0 * z_extent)).round() as usize) * 2).max(8);
    structured_tube(n, m, |i| {
        (r0, z_extent * (2.0 * i as f64 - n as f64) / n as f64)
    })
}

/// Geodesic sphere: icosahedron with `subdivisions` rounds of midpoint
/// refinement, every vertex normalized onto the unit sphere. Outward
/// orientation.
pub fn icosphere(subdivisions: usize) -> TriMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let vertices: Vec<Point3<f64>> = raw
        .iter()
        .map(|&(x, y, z)| {
            let p = Point3::new(x, y, z);
            Point3::from(p.coords / p.coords.norm())
        })
        .collect();
    let faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut mesh = TriMesh::new(vertices, faces).expect("icosahedron is well formed");
    for _ in 0..subdivisions {
        mesh = crate::mesh::refine(&mesh, None).expect("refinement preserves validity");
        for p in mesh.vertices_mut() {
            let n = p.coords.norm();
            p.coords /= n;
        }
    }
    mesh
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Perimeter of the ellipse with semi-axes `a, b`.
pub(crate) fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let integrand =
        |t: f64| ((a * t.sin()).powi(2) + (b * t.cos()).powi(2)).sqrt();
    adaptive_simpson(&integrand, 0.0, 2.0 * PI, 1e-12)
}

/// Build a reference mesh and its exact invariants. `resolution` counts
/// rings for disks and rows for the catenoid; at least 4.
pub fn make_reference(
    kind: ReferenceKind,
    resolution: usize,
) -> Result<(TriMesh, ReferenceSurface), DomainError> {
    let resolution = resolution.max(4);
    match kind {
        ReferenceKind::EquatorialDisk { radius } => {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(DomainError::InvalidSpec(format!(
                    "disk radius must be positive, got {radius}"
                )));
            }
            let mesh = polar_disk(radius, resolution);
            Ok((
                mesh,
                ReferenceSurface {
                    kind,
                    exact_area: PI * radius * radius,
                    exact_boundary_length: 2.0 * PI * radius,
                    catenoid: None,
                },
            ))
        }
        ReferenceKind::CriticalCatenoid => {
            let cc = solve_critical_catenoid();
            let mesh = catenoid_mesh(&cc, resolution);
            Ok((
                mesh,
                ReferenceSurface {
                    kind,
                    exact_area: cc.area(),
                    exact_boundary_length: cc.boundary_length(),
                    catenoid: Some(cc),
                },
            ))
        }
        ReferenceKind::MeridianDisk { a, b } => {
            if !(b > 0.0 && a >= b && a.is_finite()) {
                return Err(DomainError::InvalidSpec(format!(
                    "meridian disk needs a >= b > 0, got a = {a}, b = {b}"
                )));
            }
            let unit = polar_disk(1.0, resolution);
            let vertices: Vec<Point3<f64>> = unit
                .vertices()
                .iter()
                .map(|p| Point3::new(a * p.x, 0.0, b * p.y))
                .collect();
            // The plane map sends the +e3 normal to -e2; flip triangles so
            // the mesh normal is +e2.
            let triangles: Vec<[usize; 3]> = unit
                .triangles()
                .iter()
                .map(|t| [t[0], t[2], t[1]])
                .collect();
            let mesh = TriMesh::new(vertices, triangles).expect("scaled disk is well formed");
            Ok((
                mesh,
                ReferenceSurface {
                    kind,
                    exact_area: PI * a * b,
                    exact_boundary_length: ellipse_perimeter(a, b),
                    catenoid: None,
                },
            ))
        }
        ReferenceKind::CylinderDisk { height } => {
            let mut mesh = polar_disk(1.0, resolution);
            for p in mesh.vertices_mut() {
                p.z = height;
            }
            Ok((
                mesh,
                ReferenceSurface {
                    kind,
                    exact_area: PI,
                    exact_boundary_length: 2.0 * PI,
                    catenoid: None,
                },
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::LevelSetDomain;
    use crate::mesh::validate;
    use approx::assert_relative_eq;

    // Critical catenoid constants, frozen from an independent computation
    // of the root of s tanh(s) = 1 and its closed forms.
    const S0: f64 = 1.1996786402577338;
    const C: f64 = 0.4604850882501339;
    const AREA: f64 = 5.2373903279879467;
    const BOUNDARY_LENGTH: f64 = 10.474780655975893;
    const NORM_A_SQ_MAX: f64 = 9.431892742237435;
    const BOUNDARY_RADIUS: f64 = 0.8335565596009647;
    const BOUNDARY_HEIGHT: f64 = 0.5524341245308832;
    const BOUNDARY_CIRCLE_CURVATURE: f64 = 0.6627434193491816;
    const ELLIPSE_PERIMETER_2_1: f64 = 9.688448220547676;

    #[test]
    fn critical_parameter_matches_frozen_values() {
        let cc = solve_critical_catenoid();
        assert!((cc.s0 * cc.s0.tanh() - 1.0).abs() < 1e-14);
        assert!((cc.s0 - S0).abs() < 5e-15);
        assert!((cc.c - C).abs() < 5e-15);
        // Boundary circles on the unit sphere.
        assert!((cc.c * cc.c * (cc.s0.cosh().powi(2) + cc.s0 * cc.s0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn catenoid_closed_forms_match_frozen_values() {
        let cc = solve_critical_catenoid();
        assert_relative_eq!(cc.area(), AREA, epsilon = 1e-13);
        assert_relative_eq!(cc.boundary_length(), BOUNDARY_LENGTH, epsilon = 1e-12);
        assert_relative_eq!(cc.norm_a_sq_max(), NORM_A_SQ_MAX, epsilon = 1e-12);
        assert_relative_eq!(cc.boundary_radius(), BOUNDARY_RADIUS, epsilon = 1e-14);
        assert_relative_eq!(cc.boundary_height(), BOUNDARY_HEIGHT, epsilon = 1e-14);
        assert_relative_eq!(
            cc.boundary_circle_curvature(),
            BOUNDARY_CIRCLE_CURVATURE,
            epsilon = 1e-14
        );
    }

    #[test]
    fn catenoid_area_agrees_with_quadrature() {
        let cc = solve_critical_catenoid();
        let integrand = |s: f64| 2.0 * PI * cc.c * cc.c * s.cosh() * s.cosh();
        let quad = adaptive_simpson(&integrand, -cc.s0, cc.s0, 1e-12);
        assert_relative_eq!(cc.area(), quad, epsilon = 1e-10);
    }

    #[test]
    fn boundary_length_is_twice_the_area_at_criticality() {
        let cc = solve_critical_catenoid();
        assert_relative_eq!(cc.boundary_length(), 2.0 * cc.area(), epsilon = 1e-12);
    }

    #[test]
    fn support_vanishes_on_the_boundary_and_peaks_at_the_neck() {
        let cc = solve_critical_catenoid();
        assert!(cc.support_at(cc.s0).abs() < 1e-14);
        assert!(cc.support_at(-cc.s0).abs() < 1e-14);
        assert_relative_eq!(cc.support_at(0.0), cc.c, epsilon = 1e-15);
        for k in 0..20 {
            let s = -cc.s0 + 2.0 * cc.s0 * k as f64 / 19.0;
            assert!(cc.support_at(s) >= -1e-14);
        }
    }

    #[test]
    fn disk_mesh_is_clean_and_converges_to_the_round_disk() {
        let (m, surface) =
            make_reference(ReferenceKind::EquatorialDisk { radius: 1.0 }, 16).unwrap();
        assert!(validate(&m).is_empty());
        assert_eq!(m.boundary_loops().len(), 1);
        assert_eq!(m.euler_characteristic(), 1);
        assert_relative_eq!(m.total_area(), surface.exact_area, max_relative = 5e-3);
        for &v in m.boundary_loops()[0].iter() {
            let p = m.vertices()[v];
            assert!((p.coords.norm_squared() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn catenoid_mesh_is_clean_symmetric_and_on_the_sphere() {
        let (m, surface) = make_reference(ReferenceKind::CriticalCatenoid, 24).unwrap();
        assert!(validate(&m).is_empty());
        assert_eq!(m.boundary_loops().len(), 2);
        assert_eq!(m.euler_characteristic(), 0);
        assert_relative_eq!(m.total_area(), surface.exact_area, max_relative = 5e-3);
        let d = LevelSetDomain::Ball;
        for lp in m.boundary_loops() {
            for &v in lp {
                let (value, _, _) = d.evaluate(&m.vertices()[v]).unwrap();
                assert!((value - 1.0).abs() <= 1e-12);
            }
        }
        // Bitwise mirror symmetry about the neck plane.
        let n = m.vertex_count();
        let m_cols = m.boundary_loops()[0].len();
        let rows = n / m_cols;
        for i in 0..rows {
            for k in 0..m_cols {
                let top = m.vertices()[(rows - 1 - i) * m_cols + k];
                let bot = m.vertices()[i * m_cols + k];
                assert_eq!(top.x, bot.x);
                assert_eq!(top.y, bot.y);
                assert_eq!(top.z, -bot.z);
            }
        }
    }

    #[test]
    fn meridian_disk_matches_the_frozen_perimeter() {
        let (m, surface) =
            make_reference(ReferenceKind::MeridianDisk { a: 2.0, b: 1.0 }, 16).unwrap();
        assert!(validate(&m).is_empty());
        assert_relative_eq!(
            surface.exact_boundary_length,
            ELLIPSE_PERIMETER_2_1,
            epsilon = 1e-10
        );
        assert_relative_eq!(surface.exact_area, 2.0 * PI, epsilon = 1e-12);
        assert_relative_eq!(m.total_area(), surface.exact_area, max_relative = 5e-3);
        // All vertices in the x2 = 0 plane, boundary on the ellipse.
        for p in m.vertices() {
            assert_eq!(p.y, 0.0);
        }
        for &v in m.boundary_loops()[0].iter() {
            let p = m.vertices()[v];
            let f = p.x * p.x / 4.0 + p.z * p.z;
            assert!((f - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn cylinder_disk_sits_at_height() {
        let (m, surface) =
            make_reference(ReferenceKind::CylinderDisk { height: 0.3 }, 12).unwrap();
        assert!(validate(&m).is_empty());
        assert_relative_eq!(surface.exact_area, PI);
        for p in m.vertices() {
            assert_eq!(p.z, 0.3);
        }
        for &v in m.boundary_loops()[0].iter() {
            let p = m.vertices()[v];
            assert!((p.x * p.x + p.y * p.y - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn icosphere_is_a_clean_outward_sphere() {
        let m = icosphere(3);
        assert!(validate(&m).is_empty());
        assert!(m.boundary_loops().is_empty());
        assert_eq!(m.euler_characteristic(), 2);
        for p in m.vertices() {
            assert_relative_eq!(p.coords.norm(), 1.0, epsilon = 1e-14);
        }
        for t in 0..m.triangle_count() {
            let [p0, p1, p2] = m.triangle_points(t);
            let centroid = (p0.coords + p1.coords + p2.coords) / 3.0;
            assert!(m.triangle_normal(t).dot(&centroid) > 0.0);
        }
        assert_relative_eq!(m.total_area(), 4.0 * PI, max_relative = 5e-3);
    }

    #[test]
    fn cylinder_band_boundary_circles_lie_on_the_sphere() {
        let band = cylinder_band(0.55, 12);
        assert!(validate(&band).is_empty());
        assert_eq!(band.boundary_loops().len(), 2);
        let d = LevelSetDomain::Ball;
        for lp in band.boundary_loops() {
            for &v in lp {
                let (value, _, _) = d.evaluate(&band.vertices()[v]).unwrap();
                assert!((value - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn sidecar_json_carries_the_invariants() {
        let (_, surface) = make_reference(ReferenceKind::CriticalCatenoid, 8).unwrap();
        let text = surface.sidecar_json();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!((parsed["s0"].as_f64().unwrap() - S0).abs() < 1e-12);
        assert!((parsed["c"].as_f64().unwrap() - C).abs() < 1e-12);
        assert!((parsed["exact_area"].as_f64().unwrap() - AREA).abs() < 1e-12);

        let (_, disk) =
            make_reference(ReferenceKind::EquatorialDisk { radius: 1.0 }, 8).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&disk.sidecar_json()).unwrap();
        assert!(parsed.get("s0").is_none());
        assert!((parsed["exact_boundary_length"].as_f64().unwrap() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn refinement_tightens_the_disk_area() {
        let (m, surface) =
            make_reference(ReferenceKind::EquatorialDisk { radius: 1.0 }, 8).unwrap();
        let coarse = (m.total_area() - surface.exact_area).abs();
        let fine_mesh = crate::mesh::refine(&m, Some(&LevelSetDomain::Ball)).unwrap();
        let fine = (fine_mesh.total_area() - surface.exact_area).abs();
        assert!(fine < 0.35 * coarse, "refinement must shrink the area gap");
    }
}
