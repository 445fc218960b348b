//! Numerical comparison and maximum principles, the Lipschitz certificate and
//! Hölder quotients of computed trajectories.

use thiserror::Error;

use crate::barrier::{build_with, Barrier, BarrierError, SearchOptions};
use crate::boundary::{certify_tbsc_with, widen_slopes, BoundaryDatum, CertifyOptions};
use crate::geometry::{discrete_lipschitz, ConvexDomain};
use crate::integrand::ConvexIntegrand;
use crate::solver::Trajectory;
use crate::table::num;

/// Default ordering tolerance `1e-6 + 10·inner_tol` with `inner_tol = 1e-10`.
pub const COMPARISON_TOL: f64 = 1e-6 + 10.0 * 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("trajectories differ in mesh or time grid: {0}")]
    GridMismatch(String),
}

fn check_grids(a: &Trajectory, b: &Trajectory) -> Result<(), VerifyError> {
    if a.len() != b.len() {
        return Err(VerifyError::GridMismatch(format!("{} vs {} steps", a.len(), b.len())));
    }
    if (a.h() - b.h()).abs() > 1e-14 * a.h() {
        return Err(VerifyError::GridMismatch(format!("h = {} vs {}", a.h(), b.h())));
    }
    let (ma, mb) = (a.mesh(), b.mesh());
    if ma.n_vertices() != mb.n_vertices()
        || ma.triangles() != mb.triangles()
        || ma.vertices().iter().zip(mb.vertices()).any(|(p, q)| (p - q).norm() > 1e-12)
    {
        return Err(VerifyError::GridMismatch("meshes differ".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    /// `max (u_sub − u_super)` over nodes and steps.
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ComparisonReport {
    pub const CSV_HEADER: &'static str = "check,max_violation,tolerance,pass";

    pub fn csv_row(&self) -> String {
        format!("comparison,{},{},{}", num(self.max_violation), num(self.tolerance), self.pass)
    }
}

pub fn comparison_test(sub: &Trajectory, sup: &Trajectory) -> Result<ComparisonReport, VerifyError> {
    check_grids(sub, sup)?;
    let max_violation = sub
        .steps()
        .iter()
        .zip(sup.steps())
        .map(|(a, b)| (a - b).max())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ComparisonReport { max_violation, tolerance: COMPARISON_TOL, pass: max_violation <= COMPARISON_TOL })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPrincipleReport {
    /// `sup (u − ũ)` over interior nodes at positive times.
    pub interior_sup: f64,
    /// `sup (u − ũ)` over the initial slice and boundary nodes.
    pub boundary_sup: f64,
    pub pass: bool,
}

impl MaxPrincipleReport {
    pub const CSV_HEADER: &'static str = "check,interior_sup,boundary_sup,pass";

    pub fn csv_row(&self) -> String {
        format!("max_principle,{},{},{}", num(self.interior_sup), num(self.boundary_sup), self.pass)
    }
}

pub fn max_principle_test(a: &Trajectory, b: &Trajectory) -> Result<MaxPrincipleReport, VerifyError> {
    check_grids(a, b)?;
    let mesh = a.mesh();
    let mut interior_sup = f64::NEG_INFINITY;
    let mut boundary_sup = f64::NEG_INFINITY;
    for (i, (u, v)) in a.steps().iter().zip(b.steps()).enumerate() {
        for k in 0..mesh.n_vertices() {
            let d = u[k] - v[k];
            if i == 0 || mesh.is_boundary(k) {
                boundary_sup = boundary_sup.max(d);
            } else {
                interior_sup = interior_sup.max(d);
            }
        }
    }
    Ok(MaxPrincipleReport { interior_sup, boundary_sup, pass: interior_sup <= boundary_sup + COMPARISON_TOL })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzCertificate {
    /// `max_i ‖∇u_i‖∞`.
    pub computed_c: f64,
    /// `max{max Q̃, ‖∇g_o‖∞}` over the sampled barriers.
    pub bound: f64,
    pub constraint_active: bool,
}

impl LipschitzCertificate {
    pub const CSV_HEADER: &'static str = "check,computed_C,bound,constraint_active";

    pub fn csv_row(&self) -> String {
        format!("lipschitz,{},{},{}", num(self.computed_c), num(self.bound), self.constraint_active)
    }
}

/// Sampled `|∇v|` of a barrier over `Ω̄ × [0, T)`.
pub fn barrier_gradient_sup(b: &Barrier, space_samples: usize, time_samples: usize) -> Result<f64, BarrierError> {
    let pts = b.domain().closure_samples(space_samples, space_samples / 4 + 1);
    let mut sup: f64 = 0.0;
    for k in 0..time_samples.max(1) {
        let t = b.horizon() * k as f64 / time_samples.max(1) as f64;
        for x in &pts {
            sup = sup.max(b.grad(x, t)?.norm());
        }
    }
    Ok(sup)
}

/// Lower/upper barrier pairs at `points` equally spaced boundary points.
pub fn boundary_barriers(
    f: &ConvexIntegrand,
    dom: &ConvexDomain,
    data: &BoundaryDatum,
    points: usize,
    alpha: f64,
    opts: &SearchOptions,
) -> Result<Vec<(Barrier, Barrier)>, BarrierError> {
    let cert_opts = CertifyOptions { time_samples: opts.times + 1, ..opts.certify };
    dom.boundary_samples(points)
        .into_iter()
        .map(|(_, x_o, _)| {
            let cert = certify_tbsc_with(data, dom, &x_o, &cert_opts)?;
            let cert = widen_slopes(&cert, data, dom)?;
            Ok((
                build_with(f, dom, data, &cert, alpha.abs(), opts)?,
                build_with(f, dom, data, &cert, -alpha.abs(), opts)?,
            ))
        })
        .collect()
}

/// `computed_C` of the trajectory against the barrier budget `Q̃` (the sampled
/// barrier gradients).
pub fn lipschitz_certificate(
    traj: &Trajectory,
    barriers: &[(Barrier, Barrier)],
    data: &BoundaryDatum,
    lipschitz_bound: f64,
) -> Result<LipschitzCertificate, BarrierError> {
    let computed_c = traj.steps().iter().map(|u| discrete_lipschitz(u, traj.mesh())).fold(0.0, f64::max);
    let mut bound = data.bounds().grad_initial_sup;
    for (lo, up) in barriers {
        bound = bound.max(barrier_gradient_sup(lo, 64, 32)?).max(barrier_gradient_sup(up, 64, 32)?);
    }
    Ok(LipschitzCertificate {
        computed_c,
        bound,
        constraint_active: computed_c >= lipschitz_bound - 1e-8,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderReport {
    pub space_lip: f64,
    /// `max |u(x,t) − u(x,s)| / |t − s|^{1/2}` over nodes and step pairs.
    pub time_half_holder: f64,
}

impl HolderReport {
    pub const CSV_HEADER: &'static str = "check,space_lip,time_half_holder";

    pub fn csv_row(&self) -> String {
        format!("holder,{},{}", num(self.space_lip), num(self.time_half_holder))
    }
}

/// Diagnostic quotients of the step sequence; pairs of steps up to 64 apart.
pub fn holder_quotient(traj: &Trajectory) -> HolderReport {
    let steps = traj.steps();
    let space_lip = steps.iter().map(|u| discrete_lipschitz(u, traj.mesh())).fold(0.0, f64::max);
    let mut q: f64 = 0.0;
    for i in 0..steps.len() {
        for j in i + 1..steps.len().min(i + 65) {
            let dt = traj.time(j) - traj.time(i);
            q = q.max((&steps[j] - &steps[i]).amax() / dt.sqrt());
        }
    }
    HolderReport { space_lip, time_half_holder: q }
}
