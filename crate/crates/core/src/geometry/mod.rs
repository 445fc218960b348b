//! Uniformly convex planar domains and their triangulations.

mod domain;
mod mesh;

pub use domain::{check_domain, min_uniform_convexity_radius, ConvexDomain, DomainReport, Shape};
pub use mesh::{discrete_lipschitz, mesh_domain, mesh_domain_jittered, Mesh, MeshError};
