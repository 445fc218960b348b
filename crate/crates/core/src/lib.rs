//! Gradient-constrained minimizing movements for the parabolic problem
//! `∂ₜu − div ∇f(∇u) = 0` with time-dependent Dirichlet data.
//!
//! The crate is organised around the pieces of the construction:
//!
//! * [`integrand`]: convex integrands `f`, their conjugates `f*` and inverse gradients.
//! * [`geometry`]: uniformly convex planar domains and their triangulations.
//! * [`boundary`]: boundary data, time-dependent bounded slope certificates and
//!   exponential time smoothing of the data.
//! * [`mollify`]: exponential time mollification of nodal time series.
//! * [`solver`]: the minimizing-movements scheme with a per-element gradient constraint.
//! * [`barrier`]: Cellina-type sub/super-solutions built from `f*`.
//! * [`verify`]: comparison/maximum principle checks and the Lipschitz certificate.

pub mod barrier;
pub mod boundary;
pub mod fem;
pub mod geometry;
pub mod integrand;
pub mod mollify;
pub mod quadrature;
pub mod solver;
pub mod table;
pub mod verify;

pub use barrier::{Barrier, BarrierSign};
pub use boundary::{BoundaryDatum, SlopeCertificate};
pub use geometry::{ConvexDomain, Mesh};
pub use integrand::ConvexIntegrand;
pub use mollify::TimeSeriesField;
pub use solver::{SolverConfig, Trajectory};

use nalgebra::{DVector, Matrix2, Vector2};

/// Spatial dimension of the first release. Formulas that carry `n` use this.
pub const DIM: usize = 2;

/// A point (or gradient) in the plane.
pub type Point = Vector2<f64>;
pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Nodal values of a continuous piecewise-linear function on a [`geometry::Mesh`].
pub type Field = DVector<f64>;

