//! Damped mean-curvature descent with a sliding free boundary.
//!
//! Interior vertices follow the area gradient preconditioned by the lumped
//! mass (the area-normalized Laplacian of the position, which equals
//! `-2 H N` plus tangential discretization noise). Boundary vertices feel
//! the same gradient with its component along the domain normal removed,
//! then are re-projected onto `F = 1`, so they slide on the boundary. The
//! stationary states of this flow are exactly the discrete free-boundary
//! minimal surfaces: zero interior mean curvature and orthogonal meeting.
//!
//! The energy (total area) is non-increasing along accepted iterations:
//! when a trial step raises the area, the tangential smoothing is dropped
//! first and the step is then halved until the area decreases. Convergence
//! is declared on the pair of residuals `max |H| * diameter` over interior
//! vertices and `max |<N, Nbar>|` over boundary vertices.

use nalgebra::{Point3, Vector3};
use serde::Serialize;
use thiserror::Error;

use crate::domains::{DomainError, LevelSetDomain};
use crate::geometry::{assemble_cotan, compute_light, GeometryError};
use crate::mesh::TriMesh;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("mesh degenerated at iteration {iteration}: min triangle quality {quality:.3e}")]
    MeshDegenerated { iteration: usize, quality: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Descent step; defaults to `0.1 * (mean edge length)^2` of the input.
    pub step: Option<f64>,
    pub max_iters: usize,
    /// Convergence threshold on `max |H| * diameter` over interior
    /// vertices.
    pub tol_h: f64,
    /// Convergence threshold on `max |<N, Nbar>|` over boundary vertices.
    pub tol_angle: f64,
    /// Halve the step when a trial raises the area.
    pub damping: bool,
    /// Weight of the tangential smoothing: an umbrella on interior
    /// vertices and an along-loop redistribution on boundary vertices.
    /// Zero disables both.
    pub tangential_smoothing: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            step: None,
            max_iters: 10_000,
            tol_h: 1e-3,
            tol_angle: 1e-2,
            damping: true,
            tangential_smoothing: 0.2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_area: f64,
    pub residual_h: f64,
    pub residual_angle: f64,
    pub converged: bool,
    /// Area after every accepted iteration, starting with the input mesh.
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
}

struct Residuals {
    h: f64,
    angle: f64,
}

/// Evolve the mesh inside the domain until the free-boundary residuals drop
/// under the configured thresholds. Non-convergence within `max_iters` is
/// not an error: the report carries `converged = false`.
pub fn solve_free_boundary(
    mesh: &TriMesh,
    domain: &LevelSetDomain,
    config: &SolveConfig,
) -> Result<(TriMesh, SolveReport), SolveError> {
    let mut mesh = mesh.clone();
    // Start from a consistent state: boundary vertices on the level set.
    for v in 0..mesh.vertex_count() {
        if mesh.is_boundary(v) {
            let p = mesh.vertices()[v];
            mesh.vertices_mut()[v] = domain.project_to_boundary(&p)?;
        }
    }

    let step0 = config
        .step
        .unwrap_or_else(|| 0.1 * mesh.mean_edge_length() * mesh.mean_edge_length());
    let mut step = step0;
    let quality_floor = 1e-3 * mesh.min_triangle_quality();

    let mut energy_trace = vec![mesh.total_area()];
    let mut iterations = 0usize;
    let mut converged = false;
    let mut residuals = compute_residuals(&mesh, domain)?;

    while iterations < config.max_iters {
        if residuals.h <= config.tol_h && residuals.angle <= config.tol_angle {
            converged = true;
            break;
        }
        let near_convergence =
            residuals.h <= 2.0 * config.tol_h && residuals.angle <= 2.0 * config.tol_angle;
        let smoothing_active = config.tangential_smoothing > 0.0
            && !near_convergence
            && iterations < config.max_iters * 9 / 10;

        let area_before = *energy_trace.last().unwrap();
        let mut accepted = false;
        let mut halvings = 0usize;
        // Damping ladder: full step, then without smoothing, then halved.
        let mut with_smoothing = smoothing_active;
        while !accepted {
            let candidate = descend(&mesh, domain, step, with_smoothing, config)?;
            let area_after = candidate_area(&mesh, &candidate);
            let tolerance = 1e-12 * area_before.abs().max(1.0);
            if !config.damping || area_after <= area_before + tolerance {
                let quality = min_quality(&mesh, &candidate);
                if quality < quality_floor {
                    return Err(SolveError::MeshDegenerated {
                        iteration: iterations,
                        quality,
                    });
                }
                mesh.vertices_mut().copy_from_slice(&candidate);
                energy_trace.push(area_after);
                accepted = true;
            } else if with_smoothing {
                with_smoothing = false;
            } else if halvings < 60 {
                step *= 0.5;
                halvings += 1;
            } else {
                // No decrease at any step size: the flow is stationary to
                // rounding. Stop and report the residuals as they stand.
                break;
            }
        }
        if !accepted {
            break;
        }
        iterations += 1;
        if halvings == 0 {
            step = (step * 1.05).min(step0);
        }
        residuals = compute_residuals(&mesh, domain)?;
    }
    if !converged && residuals.h <= config.tol_h && residuals.angle <= config.tol_angle {
        converged = true;
    }

    let report = SolveReport {
        iterations,
        final_area: *energy_trace.last().unwrap(),
        residual_h: residuals.h,
        residual_angle: residuals.angle,
        converged,
        energy_trace,
    };
    Ok((mesh, report))
}

/// Free-boundary residual pair of a mesh against a domain, as used by the
/// convergence test: `max |H| * diameter` over interior vertices and
/// `max |<N, Nbar>|` over boundary vertices.
pub fn free_boundary_residuals(
    mesh: &TriMesh,
    domain: &LevelSetDomain,
) -> Result<(f64, f64), SolveError> {
    let r = compute_residuals(mesh, domain)?;
    Ok((r.h, r.angle))
}

fn compute_residuals(mesh: &TriMesh, domain: &LevelSetDomain) -> Result<Residuals, SolveError> {
    let light = compute_light(mesh)?;
    let op = assemble_cotan(mesh);
    let lap = op.apply_positions(mesh);
    let diameter = mesh.diameter();
    let mut h = 0.0_f64;
    let mut angle = 0.0_f64;
    for v in 0..mesh.vertex_count() {
        if mesh.is_boundary(v) {
            let nbar = domain.unit_normal(&mesh.vertices()[v])?;
            angle = angle.max(light.normal[v].dot(&nbar).abs());
        } else {
            let mean_curv = -0.5 * lap[v].dot(&light.normal[v]);
            h = h.max(mean_curv.abs() * diameter);
        }
    }
    Ok(Residuals { h, angle })
}

/// One explicit step from the current positions; returns candidate
/// positions without mutating the mesh.
fn descend(
    mesh: &TriMesh,
    domain: &LevelSetDomain,
    step: f64,
    with_smoothing: bool,
    config: &SolveConfig,
) -> Result<Vec<Point3<f64>>, SolveError> {
    let light = compute_light(mesh)?;
    let op = assemble_cotan(mesh);
    let lap = op.apply_positions(mesh);
    let verts = mesh.vertices();
    let mut out: Vec<Point3<f64>> = Vec::with_capacity(verts.len());
    for v in 0..verts.len() {
        if mesh.is_boundary(v) {
            let nbar = domain.unit_normal(&verts[v])?;
            let force = lap[v] - nbar * lap[v].dot(&nbar);
            let slid = verts[v] + force * step;
            out.push(domain.project_to_boundary(&slid)?);
        } else {
            out.push(verts[v] + lap[v] * step);
        }
    }
    if with_smoothing && config.tangential_smoothing > 0.0 {
        // Area-weighted umbrella on interior vertices, projected onto the
        // tangent plane so the shape is preserved to second order. Boundary
        // vertices are redistributed along their loop instead: the discrete
        // area gradient rewards bunching boundary vertices (a clustered
        // inscribed polygon bounds less area), and without a counter-flow
        // the loop degenerates long before the residuals converge.
        let weight = config.tangential_smoothing;
        let mut pred = vec![usize::MAX; verts.len()];
        for v in 0..verts.len() {
            if let Some(s) = mesh.boundary_successor(v) {
                pred[s] = v;
            }
        }
        let mut smoothed = out.clone();
        for v in 0..verts.len() {
            if mesh.is_boundary(v) {
                let Some(next) = mesh.boundary_successor(v) else {
                    continue;
                };
                let prev = pred[v];
                if prev == usize::MAX || prev == next {
                    continue;
                }
                let chord = out[next] - out[prev];
                let norm = chord.norm();
                if norm <= f64::EPSILON {
                    continue;
                }
                let tangent = chord / norm;
                let mid = 0.5 * (out[prev].coords + out[next].coords);
                let disp = (mid - out[v].coords).dot(&tangent) * tangent;
                let slid = out[v] + weight * disp;
                smoothed[v] = domain.project_to_boundary(&slid)?;
            } else {
                let mut centroid = Vector3::zeros();
                let mut total = 0.0;
                for &u in mesh.neighbors(v) {
                    let w = light.vertex_area[u];
                    centroid += w * out[u].coords;
                    total += w;
                }
                if total <= 0.0 {
                    continue;
                }
                let mut disp = centroid / total - out[v].coords;
                let n = light.normal[v];
                disp -= n * disp.dot(&n);
                smoothed[v] = out[v] + weight * disp;
            }
        }
        return Ok(smoothed);
    }
    Ok(out)
}

fn candidate_area(mesh: &TriMesh, positions: &[Point3<f64>]) -> f64 {
    let mut area = 0.0;
    for t in mesh.triangles() {
        let p0 = positions[t[0]];
        let p1 = positions[t[1]];
        let p2 = positions[t[2]];
        area += 0.5 * (p1 - p0).cross(&(p2 - p0)).norm();
    }
    area
}

fn min_quality(mesh: &TriMesh, positions: &[Point3<f64>]) -> f64 {
    let mut min_q = f64::INFINITY;
    for t in mesh.triangles() {
        let p0 = positions[t[0]];
        let p1 = positions[t[1]];
        let p2 = positions[t[2]];
        let area = 0.5 * (p1 - p0).cross(&(p2 - p0)).norm();
        let l2 =
            (p1 - p0).norm_squared() + (p2 - p1).norm_squared() + (p0 - p2).norm_squared();
        let q = if l2 > 0.0 {
            4.0 * 3.0_f64.sqrt() * area / l2
        } else {
            0.0
        };
        min_q = min_q.min(q);
    }
    min_q
}
