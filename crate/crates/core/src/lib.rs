//! Numerical laboratory for free-boundary minimal surfaces in level-set
//! domains.
//!
//! A domain is the compact region bounded by the level set `F = 1` of a
//! smooth scalar field. A free-boundary minimal surface is a surface inside
//! the domain whose boundary lies on the level set and which meets it
//! orthogonally while having zero mean curvature. This crate provides the
//! domain families and their symbolic existence classifier ([`domains`]),
//! oriented triangle meshes ([`mesh`]), per-vertex discrete differential
//! geometry ([`geometry`]), analytic reference surfaces ([`reference`]), a
//! damped mean-curvature descent solver with sliding boundary ([`solver`]),
//! integral-identity checks with refinement studies ([`identities`]), and
//! rigidity-gap diagnostics ([`gap`]).
//!
//! Orientation and sign conventions, used consistently everywhere:
//!
//! * surfaces are oriented by a unit normal `N`; for closed control surfaces
//!   `N` points outward;
//! * the shape operator is the ambient derivative of `N`, so the unit sphere
//!   with outward normal has shape operator `+I` and mean curvature `+1`;
//! * mean curvature is the average of the principal curvatures, recovered
//!   discretely from the cotangent Laplacian of the position via
//!   `H = -<Lx, N> / 2`;
//! * the boundary conormal points out of the surface, along the domain
//!   normal at an orthogonal free boundary.

pub mod domains;
pub mod gap;
pub mod geometry;
pub mod identities;
pub mod mesh;
pub mod reference;
pub mod solver;

pub use domains::{classify, DomainError, DomainSpec, LevelSetDomain, Outcome, Verdict};
pub use gap::{
    boundary_convexity, boundary_principal, gap_ball, gap_ellipsoid, jacobi_residual,
    GapError, GapReport,
};
pub use geometry::{DiscreteGeometry, GeometryError};
pub use identities::{IdentityError, IdentityKind, IdentityReport};
pub use mesh::{MeshError, TriMesh};
pub use reference::{CriticalCatenoid, ReferenceKind, ReferenceSurface};
pub use solver::{SolveConfig, SolveError, SolveReport};
