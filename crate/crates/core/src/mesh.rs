//! Oriented triangle meshes with boundary, OBJ round-tripping, and midpoint
//! refinement.
//!
//! Connectivity tables are built eagerly at construction and never change;
//! vertex positions may be moved freely afterwards (the solver does). All
//! derived orderings are deterministic: edges are sorted lexicographically,
//! boundary loops are sorted by their smallest vertex index and rotated to
//! start there, traversal direction is the one induced by triangle
//! orientation (surface on the left).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use crate::domains::{DomainError, LevelSetDomain};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {tri} references vertex {vertex} out of bounds ({count} vertices)")]
    IndexOutOfBounds {
        tri: usize,
        vertex: usize,
        count: usize,
    },
    #[error("triangle {tri} repeats a vertex")]
    RepeatedVertex { tri: usize },
    #[error("OBJ line {line}: face is not a triangle")]
    NonTriangularFace { line: usize },
    #[error("OBJ line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Structural defects reported by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Edge shared by more than two triangles.
    NonManifoldEdge { v0: usize, v1: usize, count: usize },
    /// Edge whose two incident triangles traverse it in the same direction.
    OrientationMismatch { v0: usize, v1: usize },
    /// Triangle with (near) zero area.
    DegenerateTriangle { tri: usize },
    /// Vertex not referenced by any triangle.
    IsolatedVertex { vertex: usize },
    /// Boundary vertex whose boundary edges do not form a single corridor.
    BoundaryStructure { vertex: usize },
}

/// Oriented triangle mesh. Triangles are `[i, j, k]` vertex indices,
/// counterclockwise around the surface normal.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_triangles: Vec<Vec<usize>>,
    vertex_triangles: Vec<Vec<usize>>,
    vertex_neighbors: Vec<Vec<usize>>,
    boundary_loops: Vec<Vec<usize>>,
    is_boundary: Vec<bool>,
    /// Directed boundary successor per vertex, usize::MAX when unset or
    /// ambiguous; only meaningful on clean meshes.
    boundary_next: Vec<usize>,
    oriented_defects: Vec<(usize, usize)>,
}

impl TriMesh {
    pub fn new(
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(MeshError::IndexOutOfBounds {
                        tri: t,
                        vertex: v,
                        count: nv,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[2] == tri[0] {
                return Err(MeshError::RepeatedVertex { tri: t });
            }
        }

        // Undirected edge table with incident triangles, plus directed
        // half-edge multiplicities for orientation checking.
        let mut edge_map: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for e in 0..3 {
                let i = tri[e];
                let j = tri[(e + 1) % 3];
                let key = if i < j { [i, j] } else { [j, i] };
                edge_map.entry(key).or_default().push(t);
                *directed.entry((i, j)).or_insert(0) += 1;
            }
        }
        let mut edges: Vec<[usize; 2]> = edge_map.keys().copied().collect();
        edges.sort_unstable();
        let edge_triangles: Vec<Vec<usize>> =
            edges.iter().map(|e| edge_map[e].clone()).collect();

        // A directed half-edge repeated across triangles means two of them
        // traverse the edge the same way.
        let mut oriented_defects = Vec::new();
        for (&(i, j), &count) in directed.iter() {
            if count > 1 {
                oriented_defects.push(if i < j { (i, j) } else { (j, i) });
            }
        }
        oriented_defects.sort_unstable();
        oriented_defects.dedup();

        let mut vertex_triangles = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_triangles[v].push(t);
            }
        }
        let mut vertex_neighbors = vec![Vec::new(); nv];
        for e in &edges {
            vertex_neighbors[e[0]].push(e[1]);
            vertex_neighbors[e[1]].push(e[0]);
        }
        for nbrs in &mut vertex_neighbors {
            nbrs.sort_unstable();
        }

        // Boundary structure: a boundary directed edge is one whose reverse
        // is absent. Follow successors to build loops.
        let mut is_boundary = vec![false; nv];
        let mut boundary_next = vec![usize::MAX; nv];
        let mut next_ambiguous = vec![false; nv];
        for (&(i, j), &count) in directed.iter() {
            if count == 1 && directed.get(&(j, i)).is_none() {
                is_boundary[i] = true;
                is_boundary[j] = true;
                if boundary_next[i] != usize::MAX {
                    next_ambiguous[i] = true;
                } else {
                    boundary_next[i] = j;
                }
            }
        }
        let mut boundary_loops = Vec::new();
        let mut visited = vec![false; nv];
        let mut starts: Vec<usize> = (0..nv)
            .filter(|&v| is_boundary[v] && boundary_next[v] != usize::MAX)
            .collect();
        starts.sort_unstable();
        for start in starts {
            if visited[start] || next_ambiguous[start] {
                continue;
            }
            let mut looped = Vec::new();
            let mut v = start;
            loop {
                if visited[v] || next_ambiguous[v] {
                    // Ambiguous or tangled structure; drop the partial loop.
                    looped.clear();
                    break;
                }
                visited[v] = true;
                looped.push(v);
                v = boundary_next[v];
                if v == usize::MAX {
                    looped.clear();
                    break;
                }
                if v == start {
                    break;
                }
            }
            if !looped.is_empty() {
                boundary_loops.push(looped);
            }
        }
        // Loops already start at their smallest vertex because starts are
        // scanned in increasing order only when unvisited; rotate anyway to
        // be explicit.
        for lp in &mut boundary_loops {
            let min_pos = lp
                .iter()
                .enumerate()
                .min_by_key(|(_, v)| **v)
                .map(|(i, _)| i)
                .unwrap();
            lp.rotate_left(min_pos);
        }
        boundary_loops.sort_by_key(|lp| lp[0]);

        Ok(TriMesh {
            vertices,
            triangles,
            edges,
            edge_triangles,
            vertex_triangles,
            vertex_neighbors,
            boundary_loops,
            is_boundary,
            boundary_next,
            oriented_defects,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    /// Mutable positions. Connectivity is positional-independent, so moving
    /// vertices keeps every table valid.
    pub fn vertices_mut(&mut self) -> &mut [Point3<f64>] {
        &mut self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.is_boundary[v]
    }

    pub fn boundary_vertex_count(&self) -> usize {
        self.is_boundary.iter().filter(|b| **b).count()
    }

    /// Successor along the boundary in orientation order, `None` off the
    /// boundary.
    pub fn boundary_successor(&self, v: usize) -> Option<usize> {
        let n = self.boundary_next[v];
        (n != usize::MAX).then_some(n)
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.vertex_neighbors[v]
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn triangle_points(&self, t: usize) -> [Point3<f64>; 3] {
        let [i, j, k] = self.triangles[t];
        [self.vertices[i], self.vertices[j], self.vertices[k]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_points(t);
        0.5 * (p1 - p0).cross(&(p2 - p0)).norm()
    }

    pub fn triangle_normal(&self, t: usize) -> Vector3<f64> {
        let [p0, p1, p2] = self.triangle_points(t);
        let n = (p1 - p0).cross(&(p2 - p0));
        let norm = n.norm();
        if norm > 0.0 {
            n / norm
        } else {
            Vector3::zeros()
        }
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn mean_edge_length(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        let sum: f64 = self
            .edges
            .iter()
            .map(|e| (self.vertices[e[1]] - self.vertices[e[0]]).norm())
            .sum();
        sum / self.edges.len() as f64
    }

    /// Bounding-box diagonal; the length scale for residual normalization.
    pub fn diameter(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (hi - lo).norm()
    }

    /// Scale-invariant triangle quality `4 sqrt(3) area / sum(l_i^2)`;
    /// equilateral is 1, degenerate is 0.
    pub fn triangle_quality(&self, t: usize) -> f64 {
        let [p0, p1, p2] = self.triangle_points(t);
        let l2 = (p1 - p0).norm_squared() + (p2 - p1).norm_squared() + (p0 - p2).norm_squared();
        if l2 == 0.0 {
            return 0.0;
        }
        4.0 * 3.0_f64.sqrt() * self.triangle_area(t) / l2
    }

    pub fn min_triangle_quality(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_quality(t))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Structural checks: manifold edges, coherent orientation, nondegenerate
/// triangles, no isolated vertices, boundary corridors. An empty result
/// means the mesh is a valid oriented manifold with boundary.
pub fn validate(mesh: &TriMesh) -> Vec<Violation> {
    let mut out = Vec::new();
    for (e, tris) in mesh.edges.iter().zip(mesh.edge_triangles.iter()) {
        if tris.len() > 2 {
            out.push(Violation::NonManifoldEdge {
                v0: e[0],
                v1: e[1],
                count: tris.len(),
            });
        }
    }
    for &(v0, v1) in &mesh.oriented_defects {
        // Only report pair-shared edges here; >2 incidences are already
        // covered by the manifold check.
        let key = [v0, v1];
        if let Ok(idx) = mesh.edges.binary_search(&key) {
            if mesh.edge_triangles[idx].len() == 2 {
                out.push(Violation::OrientationMismatch { v0, v1 });
            }
        }
    }
    let scale = mesh.mean_edge_length();
    let area_floor = 1e-14 * scale * scale;
    for t in 0..mesh.triangle_count() {
        if !(mesh.triangle_area(t) > area_floor) {
            out.push(Violation::DegenerateTriangle { tri: t });
        }
    }
    for v in 0..mesh.vertex_count() {
        if mesh.vertex_triangles[v].is_empty() {
            out.push(Violation::IsolatedVertex { vertex: v });
        }
    }
    // Each boundary vertex must touch exactly two boundary edges (one in,
    // one out), and every boundary vertex must land in some loop.
    let mut loop_member = vec![false; mesh.vertex_count()];
    for lp in &mesh.boundary_loops {
        for &v in lp {
            loop_member[v] = true;
        }
    }
    for v in 0..mesh.vertex_count() {
        if mesh.is_boundary[v] {
            let boundary_edge_count = mesh
                .vertex_neighbors[v]
                .iter()
                .filter(|&&u| {
                    let key = if v < u { [v, u] } else { [u, v] };
                    mesh.edges
                        .binary_search(&key)
                        .map(|idx| mesh.edge_triangles[idx].len() == 1)
                        .unwrap_or(false)
                })
                .count();
            if boundary_edge_count != 2 || !loop_member[v] {
                out.push(Violation::BoundaryStructure { vertex: v });
            }
        }
    }
    out
}

/// Midpoint 1-to-4 refinement. New vertices sit at edge midpoints; with a
/// domain, midpoints of boundary edges are projected onto `F = 1`. Child
/// triangles keep the parent orientation. New vertex indices start at the
/// old vertex count, in edge-table order, so refinement is deterministic.
pub fn refine(mesh: &TriMesh, domain: Option<&LevelSetDomain>) -> Result<TriMesh, MeshError> {
    let nv = mesh.vertex_count();
    let mut vertices = mesh.vertices.to_vec();
    vertices.reserve(mesh.edge_count());
    for (idx, e) in mesh.edges.iter().enumerate() {
        let mid = Point3::from((mesh.vertices[e[0]].coords + mesh.vertices[e[1]].coords) * 0.5);
        let on_boundary = mesh.edge_triangles[idx].len() == 1;
        let placed = match (on_boundary, domain) {
            (true, Some(d)) => d.project_to_boundary(&mid)?,
            _ => mid,
        };
        vertices.push(placed);
    }
    let edge_vertex = |i: usize, j: usize| -> usize {
        let key = if i < j { [i, j] } else { [j, i] };
        nv + mesh.edges.binary_search(&key).expect("edge exists")
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangle_count());
    for tri in &mesh.triangles {
        let [a, b, c] = *tri;
        let ab = edge_vertex(a, b);
        let bc = edge_vertex(b, c);
        let ca = edge_vertex(c, a);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    TriMesh::new(vertices, triangles)
}

/// Parse Wavefront OBJ text: `v` and `f` records, 1-based indices,
/// `v/vt/vn` face forms accepted, everything else ignored. Faces must be
/// triangles.
pub fn parse_obj(text: &str) -> Result<TriMesh, MeshError> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let mut fields = raw.split_whitespace();
        match fields.next() {
            Some("v") => {
                let mut coords = [0.0_f64; 3];
                for c in &mut coords {
                    let tok = fields.next().ok_or_else(|| MeshError::ParseError {
                        line,
                        message: "vertex needs 3 coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| MeshError::ParseError {
                        line,
                        message: format!("bad coordinate {tok:?}"),
                    })?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let toks: Vec<&str> = fields.collect();
                if toks.len() != 3 {
                    return Err(MeshError::NonTriangularFace { line });
                }
                let mut tri = [0usize; 3];
                for (slot, tok) in tri.iter_mut().zip(&toks) {
                    let head = tok.split('/').next().unwrap_or("");
                    let idx: i64 = head.parse().map_err(|_| MeshError::ParseError {
                        line,
                        message: format!("bad face index {tok:?}"),
                    })?;
                    if idx < 1 || idx as usize > vertices.len() {
                        return Err(MeshError::ParseError {
                            line,
                            message: format!("face index {idx} out of range"),
                        });
                    }
                    *slot = (idx - 1) as usize;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles)
}

/// Serialize to OBJ with 17 significant digits so parse(save(m)) is
/// byte-stable and positions round-trip exactly.
pub fn to_obj_string(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for p in mesh.vertices() {
        writeln!(out, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    out
}

pub fn load_obj(path: &Path) -> Result<TriMesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_obj(&text)
}

pub fn save_obj(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    std::fs::write(path, to_obj_string(mesh))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two triangles sharing an edge, forming a unit square in the plane.
    fn square() -> TriMesh {
        TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    fn tetrahedron() -> TriMesh {
        TriMesh::new(
            vec![
                Point3::new(1.0, 1.0, 1.0),
                Point3::new(1.0, -1.0, -1.0),
                Point3::new(-1.0, 1.0, -1.0),
                Point3::new(-1.0, -1.0, 1.0),
            ],
            vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn square_tables() {
        let m = square();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.triangle_count(), 2);
        assert_eq!(m.edge_count(), 5);
        assert_eq!(m.euler_characteristic(), 1);
        assert_eq!(m.boundary_loops().len(), 1);
        assert_eq!(m.boundary_loops()[0], vec![0, 1, 2, 3]);
        assert!(validate(&m).is_empty());
        assert!((m.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tetrahedron_is_closed_and_clean() {
        let m = tetrahedron();
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.boundary_loops().is_empty());
        assert_eq!(m.boundary_vertex_count(), 0);
        assert!(validate(&m).is_empty());
    }

    #[test]
    fn boundary_loop_direction_follows_orientation() {
        let m = square();
        // Orientation is counterclockwise seen from +z, so the loop must
        // run 0 -> 1 -> 2 -> 3.
        assert_eq!(m.boundary_successor(0), Some(1));
        assert_eq!(m.boundary_successor(3), Some(0));
    }

    #[test]
    fn orientation_mismatch_is_reported() {
        let m = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            // Second triangle flipped: edge (0,2) traversed the same way
            // twice.
            vec![[0, 1, 2], [0, 3, 2]],
        )
        .unwrap();
        let violations = validate(&m);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::OrientationMismatch { v0: 0, v1: 2 })));
    }

    #[test]
    fn nonmanifold_edge_is_reported() {
        let m = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.5, 1.0, 0.0),
                Point3::new(0.5, -1.0, 0.5),
                Point3::new(0.5, -1.0, -0.5),
            ],
            vec![[0, 1, 2], [0, 3, 1], [0, 1, 4]],
        )
        .unwrap();
        let violations = validate(&m);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::NonManifoldEdge { v0: 0, v1: 1, count: 3 })));
    }

    #[test]
    fn degenerate_triangle_and_isolated_vertex_are_reported() {
        let m = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
                Point3::new(5.0, 5.0, 5.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let violations = validate(&m);
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::DegenerateTriangle { tri: 0 })));
        assert!(violations
            .iter()
            .any(|v| matches!(v, Violation::IsolatedVertex { vertex: 3 })));
    }

    #[test]
    fn refine_multiplies_triangles_by_four() {
        let m = square();
        let r = refine(&m, None).unwrap();
        assert_eq!(r.triangle_count(), 8);
        assert_eq!(r.vertex_count(), 4 + 5);
        assert_eq!(r.euler_characteristic(), 1);
        assert!(validate(&r).is_empty());
        assert!((r.total_area() - 1.0).abs() < 1e-15);

        let t = tetrahedron();
        let rt = refine(&t, None).unwrap();
        assert_eq!(rt.triangle_count(), 16);
        assert_eq!(rt.euler_characteristic(), 2);
        assert!(validate(&rt).is_empty());
    }

    #[test]
    fn refine_projects_boundary_midpoints() {
        // Square inscribed in the unit circle (cylinder domain cross
        // section): after refinement with the ball domain in the plane the
        // boundary midpoints must sit on the sphere.
        let m = TriMesh::new(
            vec![
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(-1.0, 0.0, 0.0),
                Point3::new(0.0, -1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let d = LevelSetDomain::Ball;
        let r = refine(&m, Some(&d)).unwrap();
        for &v in r.boundary_loops()[0].iter() {
            let (value, _, _) = d.evaluate(&r.vertices()[v]).unwrap();
            assert!((value - 1.0).abs() <= 1e-12);
        }
        // Interior midpoints stay at chord midpoints.
        assert!((r.vertices()[4 + 1].coords.norm() - 0.0).abs() < 2.0);
    }

    #[test]
    fn obj_round_trip_is_byte_stable() {
        let m = square();
        let text = to_obj_string(&m);
        let parsed = parse_obj(&text).unwrap();
        assert_eq!(to_obj_string(&parsed), text);
        assert_eq!(parsed.vertices(), m.vertices());
        assert_eq!(parsed.triangles(), m.triangles());
    }

    #[test]
    fn obj_accepts_slash_forms_and_ignores_extras() {
        let text = "# comment\nvn 0 0 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1/1 2/2/1 3/3/1\ns off\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.triangle_count(), 1);
    }

    #[test]
    fn obj_rejects_quads_with_line_number() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        match parse_obj(text) {
            Err(MeshError::NonTriangularFace { line }) => assert_eq!(line, 5),
            other => panic!("expected NonTriangularFace, got {other:?}"),
        }
    }

    #[test]
    fn obj_rejects_out_of_range_indices() {
        let text = "v 0 0 0\nv 1 0 0\nf 1 2 3\n";
        assert!(matches!(
            parse_obj(text),
            Err(MeshError::ParseError { line: 3, .. })
        ));
    }

    #[test]
    fn construction_rejects_bad_indices() {
        assert!(matches!(
            TriMesh::new(vec![Point3::origin()], vec![[0, 0, 0]]),
            Err(MeshError::RepeatedVertex { .. })
        ));
        assert!(matches!(
            TriMesh::new(vec![Point3::origin()], vec![[0, 1, 2]]),
            Err(MeshError::IndexOutOfBounds { .. })
        ));
    }

    #[test]
    fn two_loops_are_ordered_and_rotated() {
        // Two disjoint squares; loops must come sorted by smallest vertex
        // and start at it.
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        for (k, dz) in [0.0, 2.0].iter().enumerate() {
            let base = 4 * k;
            verts.extend([
                Point3::new(0.0, 0.0, *dz),
                Point3::new(1.0, 0.0, *dz),
                Point3::new(1.0, 1.0, *dz),
                Point3::new(0.0, 1.0, *dz),
            ]);
            tris.push([base, base + 1, base + 2]);
            tris.push([base, base + 2, base + 3]);
        }
        let m = TriMesh::new(verts, tris).unwrap();
        assert_eq!(m.boundary_loops().len(), 2);
        assert_eq!(m.boundary_loops()[0][0], 0);
        assert_eq!(m.boundary_loops()[1][0], 4);
    }
}
