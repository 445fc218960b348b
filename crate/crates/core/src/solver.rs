//! Minimizing movements with a per-element gradient constraint.
//!
//! Each step minimizes
//! `F_i[v] = ∫f(∇v) + (1/2h)‖v − u_{i−1}‖²`
//! over continuous P1 functions with `v = g(ih)` at boundary vertices and
//! `|∇v| ≤ L` on every triangle. The unconstrained minimizer is computed first
//! by Newton–CG; when it violates the constraint, accelerated projected
//! gradient (FISTA with restart) takes over, with the projection computed by
//! Dykstra's algorithm over the per-element constraint sets.

use std::sync::Arc;

use thiserror::Error;

use crate::boundary::BoundaryDatum;
use crate::fem::{mass, stiffness, CsrMatrix};
use crate::geometry::{discrete_lipschitz, Mesh};
use crate::integrand::{sym_eigenvalues, ConvexIntegrand};
use crate::mollify::TimeSeriesField;
use crate::quadrature::GaussRule;
use crate::table::{num, Table};
use crate::{Field, Vec2};

/// Slack tolerance of the telescoped energy estimate.
pub const ESTIMATE_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("gradient bound L = {bound} admits no competitor at step {step}: data gradient {gradient}")]
    InfeasibleConstraint { step: usize, gradient: f64, bound: f64 },
    #[error("inner solver stalled at step {step}: residual {residual:e} after {iterations} iterations")]
    InnerNonConvergence { step: usize, residual: f64, iterations: usize },
    #[error("energy estimate violated at step {index}: slack {slack:e}")]
    EstimateViolated { index: usize, slack: f64 },
    #[error("test function differs from the boundary datum by {diff:e} at t = {time}")]
    BoundaryMismatch { time: f64, diff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMode {
    /// Exact projection onto `{|∇v| ≤ L}`.
    Projection,
    /// Quadratic penalty `μ Σ_T |T| max(0, |∇v_T|² − L²)²` with doubling `μ`.
    Penalty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOptions {
    /// Stopping tolerance on nodal updates, relative to `max(1, ‖u‖∞)`.
    pub tol: f64,
    pub max_iter: usize,
    pub mode: ConstraintMode,
    pub projection_sweeps: usize,
    pub projection_tol: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 20_000,
            mode: ConstraintMode::Projection,
            projection_sweeps: 500,
            projection_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub mesh: Arc<Mesh>,
    pub integrand: ConvexIntegrand,
    pub data: BoundaryDatum,
    pub h: f64,
    pub steps: usize,
    /// The gradient bound `L`.
    pub lipschitz_bound: f64,
    pub inner: InnerOptions,
    /// Replaces the interpolant of `g_o` as `u_0` when set.
    pub initial: Option<Field>,
}

impl SolverConfig {
    /// Checks that `h` divides the horizon of `data`.
    pub fn new(
        mesh: Arc<Mesh>,
        integrand: ConvexIntegrand,
        data: BoundaryDatum,
        h: f64,
        lipschitz_bound: f64,
    ) -> Result<Self, SolverError> {
        if !(h > 0.0) || !(lipschitz_bound > 0.0) {
            return Err(SolverError::InvalidConfig("h and L must be positive".into()));
        }
        let ratio = data.horizon() / h;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "step {h} does not divide the horizon {}",
                data.horizon()
            )));
        }
        Ok(Self {
            mesh,
            integrand,
            data,
            h,
            steps: steps as usize,
            lipschitz_bound,
            inner: InnerOptions::default(),
            initial: None,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.h * self.steps as f64
    }

    /// `L > max{‖∇g_o‖∞, ‖∇g‖∞}`.
    pub fn check_lipschitz_bound(&self) -> Result<(), SolverError> {
        let b = self.data.bounds();
        let gradient = b.grad_sup.max(b.grad_initial_sup);
        if self.lipschitz_bound <= gradient {
            return Err(SolverError::InfeasibleConstraint { step: 0, gradient, bound: self.lipschitz_bound });
        }
        Ok(())
    }

    pub fn initial_field(&self) -> Field {
        self.initial.clone().unwrap_or_else(|| self.data.slice(&self.mesh, 0.0))
    }
}

/// Diagnostics of one minimization step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    pub residual: f64,
    pub objective: f64,
    /// Objective of the comparison function `u_{i−1} + g_i − g_{i−1}`.
    pub comparison_objective: f64,
    pub constraint_active: bool,
    pub max_gradient: f64,
}

/// Precomputed operators for repeated steps on one mesh.
pub struct Stepper<'a> {
    cfg: &'a SolverConfig,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    interior: Vec<bool>,
}

impl<'a> Stepper<'a> {
    pub fn new(cfg: &'a SolverConfig) -> Self {
        let mesh = &cfg.mesh;
        let interior = (0..mesh.n_vertices()).map(|i| !mesh.is_boundary(i)).collect();
        Self { cfg, mass: mass(mesh), stiffness: stiffness(mesh), interior }
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    fn mesh(&self) -> &Mesh {
        &self.cfg.mesh
    }

    fn mask(&self, v: &mut Field) {
        for (x, &free) in v.iter_mut().zip(&self.interior) {
            if !free {
                *x = 0.0;
            }
        }
    }

    /// `∫f(∇v)`.
    pub fn energy(&self, v: &Field) -> f64 {
        let mesh = self.mesh();
        (0..mesh.n_triangles())
            .map(|t| mesh.area(t) * self.cfg.integrand.value(&mesh.element_gradient(v, t)))
            .sum()
    }

    /// `F[v] = ∫f(∇v) + (1/2h)‖v − u_prev‖²`, plus the penalty term when `mu > 0`.
    fn objective(&self, v: &Field, u_prev: &Field, mu: f64) -> f64 {
        let d = v - u_prev;
        let mut value = self.energy(v) + self.mass.quadratic_form(&d) / (2.0 * self.cfg.h);
        if mu > 0.0 {
            value += mu * self.penalty(v);
        }
        value
    }

    fn penalty(&self, v: &Field) -> f64 {
        let mesh = self.mesh();
        let l2 = self.cfg.lipschitz_bound.powi(2);
        (0..mesh.n_triangles())
            .map(|t| mesh.area(t) * (mesh.element_gradient(v, t).norm_squared() - l2).max(0.0).powi(2))
            .sum()
    }

    /// Gradient of the objective with boundary entries zeroed.
    fn gradient(&self, v: &Field, u_prev: &Field, mu: f64) -> Field {
        let mesh = self.mesh();
        let mut g = self.mass.mul_vec(&(v - u_prev)) / self.cfg.h;
        let l2 = self.cfg.lipschitz_bound.powi(2);
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let xi = mesh.element_gradient(v, t);
            let mut flux = self.cfg.integrand.grad(&xi);
            if mu > 0.0 {
                let s = xi.norm_squared() - l2;
                if s > 0.0 {
                    flux += xi * (4.0 * mu * s);
                }
            }
            let a = mesh.area(t);
            for (k, gk) in mesh.grads(t).iter().enumerate() {
                g[tri[k]] += a * flux.dot(gk);
            }
        }
        self.mask(&mut g);
        g
    }

    fn hessian(&self, v: &Field, mu: f64) -> CsrMatrix {
        let mesh = self.mesh();
        let l2 = self.cfg.lipschitz_bound.powi(2);
        let mut trips = Vec::with_capacity(9 * mesh.n_triangles());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let xi = mesh.element_gradient(v, t);
            let mut d2 = self.cfg.integrand.hessian(&xi);
            if mu > 0.0 {
                let s = xi.norm_squared() - l2;
                if s > 0.0 {
                    d2 += (xi * xi.transpose()) * (8.0 * mu) + crate::Mat2::identity() * (4.0 * mu * s);
                }
            }
            let a = mesh.area(t);
            let g = mesh.grads(t);
            for k in 0..3 {
                for l in 0..3 {
                    trips.push((tri[k], tri[l], a * g[k].dot(&(d2 * g[l]))));
                }
            }
        }
        CsrMatrix::from_triplets(mesh.n_vertices(), trips).add_scaled(1.0 / self.cfg.h, &self.mass)
    }

    /// Jacobi-preconditioned CG on the interior block of `a`.
    fn cg(&self, a: &CsrMatrix, b: &Field) -> Field {
        let n = b.len();
        let diag = a.diagonal();
        let precond = |r: &Field| {
            Field::from_iterator(n, (0..n).map(|i| if self.interior[i] { r[i] / diag[i] } else { 0.0 }))
        };
        let mut x = Field::zeros(n);
        let mut r = b.clone();
        self.mask(&mut r);
        let b_norm = r.norm();
        if b_norm == 0.0 {
            return x;
        }
        let mut z = precond(&r);
        let mut p = z.clone();
        let mut rz = r.dot(&z);
        for _ in 0..10 * n.max(10) {
            let mut ap = a.mul_vec(&p);
            self.mask(&mut ap);
            let alpha = rz / p.dot(&ap);
            x.axpy(alpha, &p, 1.0);
            r.axpy(-alpha, &ap, 1.0);
            if r.norm() <= 1e-14 * b_norm {
                break;
            }
            z = precond(&r);
            let rz_new = r.dot(&z);
            p = &z + &p * (rz_new / rz);
            rz = rz_new;
        }
        x
    }

    /// Damped Newton–CG on the (optionally penalized) objective.
    fn newton(&self, start: Field, u_prev: &Field, mu: f64, step: usize) -> Result<(Field, usize), SolverError> {
        let tol = self.cfg.inner.tol * start.amax().max(1.0);
        let mut v = start;
        for it in 1..=200 {
            let g = self.gradient(&v, u_prev, mu);
            let hess = self.hessian(&v, mu);
            let d = self.cg(&hess, &(-&g));
            // At the minimizer rounding can defeat the line search.
            if d.amax() <= tol {
                return Ok((v, it));
            }
            let base = self.objective(&v, u_prev, mu);
            let slope = g.dot(&d);
            let mut s = 1.0;
            loop {
                let trial = &v + &d * s;
                let ok = self.objective(&trial, u_prev, mu) <= base + 1e-4 * s * slope
                    || self.gradient(&trial, u_prev, mu).norm() < g.norm();
                if ok {
                    v = trial;
                    break;
                }
                s *= 0.5;
                if s < 1e-12 {
                    return Err(SolverError::InnerNonConvergence { step, residual: d.amax(), iterations: it });
                }
            }
            if (&d * s).amax() <= tol {
                return Ok((v, it));
            }
        }
        Err(SolverError::InnerNonConvergence { step, residual: f64::NAN, iterations: 200 })
    }

    fn max_gradient(&self, v: &Field) -> f64 {
        discrete_lipschitz(v, self.mesh())
    }

    /// One minimization step from `u_prev` with boundary values `g_i`.
    pub fn step(&self, u_prev: &Field, g_i: &Field, g_prev: &Field, step: usize) -> Result<(Field, StepStats), SolverError> {
        let l = self.cfg.lipschitz_bound;
        let data_gradient = self.max_gradient(g_i);
        // Only elements without free vertices can make the admissible class empty,
        // but the interpolant itself must be admissible for the class to be non-empty.
        if data_gradient > l * (1.0 + 1e-12) {
            return Err(SolverError::InfeasibleConstraint { step, gradient: data_gradient, bound: l });
        }
        let mut start = u_prev + (g_i - g_prev);
        for (i, &free) in self.interior.iter().enumerate() {
            if !free {
                start[i] = g_i[i];
            }
        }
        let comparison_objective = self.objective(&start, u_prev, 0.0);

        let (mut v, mut iterations) = self.newton(start, u_prev, 0.0, step)?;
        let mut residual = 0.0;
        let mut active = false;
        if self.max_gradient(&v) > l {
            active = true;
            match self.cfg.inner.mode {
                ConstraintMode::Projection => {
                    let (x, it, res) = self.fista(v, u_prev, g_i, step)?;
                    v = x;
                    iterations += it;
                    residual = res;
                }
                ConstraintMode::Penalty => {
                    let mut mu = 1.0;
                    while self.max_gradient(&v) > l * (1.0 + 1e-10) {
                        if mu > 1e16 {
                            return Err(SolverError::InnerNonConvergence {
                                step,
                                residual: self.max_gradient(&v) - l,
                                iterations,
                            });
                        }
                        let (x, it) = self.newton(v, u_prev, mu, step)?;
                        v = x;
                        iterations += it;
                        mu *= 2.0;
                    }
                    residual = (self.max_gradient(&v) - l).max(0.0);
                }
            }
        }
        let stats = StepStats {
            iterations,
            residual,
            objective: self.objective(&v, u_prev, 0.0),
            comparison_objective,
            constraint_active: active,
            max_gradient: self.max_gradient(&v),
        };
        Ok((v, stats))
    }

    /// Largest eigenvalue bound of the objective Hessian on the feasible set.
    fn lipschitz_estimate(&self) -> f64 {
        let c = self.cfg.integrand.hess_bound_on_ball(self.cfg.lipschitz_bound);
        let n = self.interior.len();
        let mut x = Field::from_iterator(n, (0..n).map(|i| 1.0 + (i % 7) as f64 / 7.0));
        self.mask(&mut x);
        let mut lambda = 0.0;
        for _ in 0..60 {
            let norm = x.norm();
            if norm == 0.0 {
                return 1.0;
            }
            x /= norm;
            let mut y = self.stiffness.mul_vec(&x) * c + self.mass.mul_vec(&x) / self.cfg.h;
            self.mask(&mut y);
            lambda = x.dot(&y);
            x = y;
        }
        1.1 * lambda
    }

    fn fista(&self, start: Field, u_prev: &Field, g_i: &Field, step: usize) -> Result<(Field, usize, f64), SolverError> {
        let opts = &self.cfg.inner;
        let mut lip = self.lipschitz_estimate();
        let mut x = self.project(&start, g_i, step)?;
        let mut y = x.clone();
        let mut t = 1.0_f64;
        let scale = x.amax().max(1.0);
        let mut residual = f64::INFINITY;
        for it in 1..=opts.max_iter {
            let grad = self.gradient(&y, u_prev, 0.0);
            let fy = self.objective(&y, u_prev, 0.0);
            let x_new = loop {
                let cand = self.project(&(&y - &grad / lip), g_i, step)?;
                let d = &cand - &y;
                let model = fy + grad.dot(&d) + 0.5 * lip * d.norm_squared();
                if self.objective(&cand, u_prev, 0.0) <= model + 1e-14 * fy.abs().max(1.0) {
                    break cand;
                }
                lip *= 2.0;
            };
            residual = (&x_new - &y).amax();
            if residual <= opts.tol * scale {
                return Ok((x_new, it, residual));
            }
            if (&y - &x_new).dot(&(&x_new - &x)) > 0.0 {
                t = 1.0;
                y = x_new.clone();
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                y = &x_new + (&x_new - &x) * ((t - 1.0) / t_next);
                t = t_next;
            }
            x = x_new;
        }
        Err(SolverError::InnerNonConvergence { step, residual, iterations: opts.max_iter })
    }

    /// Euclidean projection of the interior values onto `{|∇v_T| ≤ L ∀T}` by
    /// Dykstra's algorithm; boundary values are reset to `g_i`.
    pub fn project(&self, z: &Field, g_i: &Field, step: usize) -> Result<Field, SolverError> {
        let mesh = self.mesh();
        let l = self.cfg.lipschitz_bound;
        let mut x = z.clone();
        for (i, &free) in self.interior.iter().enumerate() {
            if !free {
                x[i] = g_i[i];
            }
        }
        if self.max_gradient(&x) <= l {
            return Ok(x);
        }
        let opts = &self.cfg.inner;
        let mut incr = vec![[0.0_f64; 3]; mesh.n_triangles()];
        for _ in 0..opts.projection_sweeps {
            let mut change: f64 = 0.0;
            for (t, tri) in mesh.triangles().iter().enumerate() {
                let inc = incr[t];
                let mut w = [0.0; 3];
                for k in 0..3 {
                    w[k] = x[tri[k]] + inc[k];
                }
                let free = tri.map(|i| self.interior[i]);
                let y = project_element(mesh.grads(t), &w, &free, l).ok_or_else(|| {
                    SolverError::InfeasibleConstraint {
                        step,
                        gradient: mesh.element_gradient(&x, t).norm(),
                        bound: l,
                    }
                })?;
                for k in 0..3 {
                    if free[k] {
                        change = change.max((y[k] - x[tri[k]]).abs());
                        x[tri[k]] = y[k];
                        incr[t][k] = w[k] - y[k];
                    }
                }
            }
            if change <= opts.projection_tol && self.max_gradient(&x) <= l * (1.0 + opts.projection_tol) {
                break;
            }
        }
        // Dykstra can stall on thin intersections next to the boundary; pull the
        // remaining violation back along the segment to the strictly feasible `g_i`.
        let mut theta: f64 = 1.0;
        for t in 0..mesh.n_triangles() {
            let n = mesh.element_gradient(&x, t).norm();
            if n > l {
                let n_g = mesh.element_gradient(g_i, t).norm();
                theta = theta.min((l - n_g) / (n - n_g));
            }
        }
        if theta < 1.0 {
            x = g_i + (&x - g_i) * theta;
        }
        Ok(x)
    }
}

/// Projection of local values `w` onto `{|Σ_k w_k g_k| ≤ L}` moving only free entries.
fn project_element(grads: &[Vec2; 3], w: &[f64; 3], free: &[bool; 3], l: f64) -> Option<[f64; 3]> {
    let q: Vec2 = (0..3).map(|k| grads[k] * w[k]).sum();
    if q.norm() <= l {
        return Some(*w);
    }
    let cols: Vec<usize> = (0..3).filter(|&k| free[k]).collect();
    if cols.is_empty() {
        return None;
    }
    // B = AAᵀ with A the 2×k matrix of free hat gradients.
    let b: crate::Mat2 = cols.iter().map(|&k| grads[k] * grads[k].transpose()).sum();
    let (_, hi) = sym_eigenvalues(&b);
    let eig = nalgebra::SymmetricEigen::new(b);
    let u = eig.eigenvectors;
    let lam = eig.eigenvalues;
    let qh = u.transpose() * q;
    // Components in the null space of B cannot be reduced.
    let null_part: f64 = (0..2).filter(|&i| lam[i] <= 1e-14 * hi.max(1e-300)).map(|i| qh[i] * qh[i]).sum();
    if null_part.sqrt() > l {
        return None;
    }
    let p_norm = |mu: f64| -> f64 { (0..2).map(|i| (qh[i] / (1.0 + mu * lam[i].max(0.0))).powi(2)).sum::<f64>().sqrt() };
    // |p(μ)| decreases in μ: bracket the root, then safeguarded Newton on 1/|p| − 1/L.
    let (mut lo, mut hi) = (0.0, 1.0 / hi.max(1e-300));
    while p_norm(hi) > l {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..200 {
        let pn = p_norm(mu);
        let psi = 1.0 / pn - 1.0 / l;
        if psi < 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        if psi.abs() <= 1e-16 / l || hi - lo <= 1e-16 * hi {
            break;
        }
        let dpsi = (0..2)
            .map(|i| lam[i].max(0.0) * qh[i] * qh[i] / (1.0 + mu * lam[i].max(0.0)).powi(3))
            .sum::<f64>()
            / pn.powi(3);
        let next = mu - psi / dpsi;
        mu = if dpsi > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    let p = u * Vec2::new(qh[0] / (1.0 + mu * lam[0].max(0.0)), qh[1] / (1.0 + mu * lam[1].max(0.0)));
    let mut out = *w;
    for &k in &cols {
        out[k] = w[k] - mu * grads[k].dot(&p);
    }
    Some(out)
}

/// The solution sequence `u_0, …, u_ℓ` with per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    mesh: Arc<Mesh>,
    mass: Arc<CsrMatrix>,
    h: f64,
    steps: Vec<Field>,
    energies: Vec<f64>,
    increments: Vec<f64>,
    stats: Vec<StepStats>,
}

impl Trajectory {
    /// Assembles a trajectory from given fields; energies and increments are recomputed.
    pub fn from_steps(cfg: &SolverConfig, steps: Vec<Field>) -> Self {
        let stepper = Stepper::new(cfg);
        let energies = steps.iter().map(|u| stepper.energy(u)).collect();
        let increments = std::iter::once(0.0)
            .chain(steps.windows(2).map(|w| stepper.mass.quadratic_form(&(&w[1] - &w[0])) / (2.0 * cfg.h)))
            .collect();
        Self {
            mesh: cfg.mesh.clone(),
            mass: Arc::new(stepper.mass.clone()),
            h: cfg.h,
            steps,
            energies,
            increments,
            stats: Vec::new(),
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn steps(&self) -> &[Field] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.h * (self.steps.len() - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.h * i as f64
    }

    /// `∫f(∇u_i)` per step.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `(1/2h)‖u_i − u_{i−1}‖²` per step; zero for `i = 0`.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn stats(&self) -> &[StepStats] {
        &self.stats
    }

    /// Index `i` with `t ∈ ((i−1)h, ih]`; `0` for `t ≤ 0`.
    pub fn step_index(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let i = (t / self.h - 1e-12).ceil() as usize;
        i.clamp(1, self.steps.len() - 1)
    }

    /// `u^{(h)}(t)`.
    pub fn piecewise_constant(&self, t: f64) -> &Field {
        &self.steps[self.step_index(t)]
    }

    /// `ũ^{(h)}(t)`, linear between `u_{i−1}` and `u_i`.
    pub fn interpolant(&self, t: f64) -> Field {
        if t <= 0.0 {
            return self.steps[0].clone();
        }
        let i = self.step_index(t);
        let s = ((t - self.time(i - 1)) / self.h).clamp(0.0, 1.0);
        &self.steps[i - 1] * (1.0 - s) + &self.steps[i] * s
    }

    /// `ũ^{(h)}` as a time series on the step grid.
    pub fn as_time_series(&self) -> TimeSeriesField {
        let times = (0..self.steps.len()).map(|i| self.time(i)).collect();
        TimeSeriesField::new(times, self.steps.clone(), self.steps[0].clone()).expect("step grid is valid")
    }

    /// `‖u^{(h)}‖_{L²(Ω_T)}` of the difference of two trajectories on one mesh,
    /// sampled at the step times of `self` (rectangle rule in time).
    pub fn l2_distance(&self, other: &Trajectory) -> f64 {
        (1..self.steps.len())
            .map(|i| {
                let d = &self.steps[i] - other.piecewise_constant(self.time(i));
                self.h * self.mass.quadratic_form(&d)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `(x₁ x₂ u_i)` table for one step.
    pub fn step_table(&self, i: usize) -> Table {
        let mut t = Table::whitespace(["x1", "x2", "u"]);
        for (p, u) in self.mesh.vertices().iter().zip(self.steps[i].iter()) {
            t.push_numbers(&[p.x, p.y, *u]);
        }
        t
    }
}

/// Runs the scheme: `u_0` is the interpolant of `g_o` (or the configured initial field).
pub fn solve(cfg: &SolverConfig) -> Result<Trajectory, SolverError> {
    cfg.check_lipschitz_bound()?;
    let stepper = Stepper::new(cfg);
    let mesh = &cfg.mesh;
    let u0 = cfg.initial_field();
    if u0.len() != mesh.n_vertices() {
        return Err(SolverError::InvalidConfig("initial field has the wrong length".into()));
    }
    let g0 = cfg.data.slice(mesh, 0.0);
    let initial_gradient = discrete_lipschitz(&u0, mesh);
    if initial_gradient > cfg.lipschitz_bound * (1.0 + 1e-12) {
        return Err(SolverError::InfeasibleConstraint {
            step: 0,
            gradient: initial_gradient,
            bound: cfg.lipschitz_bound,
        });
    }
    let mut steps = vec![u0];
    let mut stats = Vec::with_capacity(cfg.steps);
    let mut g_prev = g0;
    for i in 1..=cfg.steps {
        let g_i = cfg.data.slice(mesh, cfg.h * i as f64);
        let (u, st) = stepper.step(&steps[i - 1], &g_i, &g_prev, i)?;
        steps.push(u);
        stats.push(st);
        g_prev = g_i;
    }
    let mut traj = Trajectory::from_steps(cfg, steps);
    traj.stats = stats;
    Ok(traj)
}

/// One step of the scheme from `u_prev` with boundary values `g_i`.
pub fn step(u_prev: &Field, g_i: &Field, cfg: &SolverConfig) -> Result<Field, SolverError> {
    let stepper = Stepper::new(cfg);
    stepper.step(u_prev, g_i, u_prev, 1).map(|(u, _)| u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub i: usize,
    pub energy: f64,
    pub increment: f64,
    pub data_term: f64,
    /// `∫f(∇u_i) + Σ_{j≤i} increments`.
    pub lhs: f64,
    /// `∫f(∇u_0) + Σ_{j≤i} data terms`.
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
    /// `sup_{|ξ| ≤ L + ‖∂ₜ∇g‖∞} |∇f(ξ)|`.
    pub k_const: f64,
    pub worst_slack: f64,
    pub worst_index: usize,
    /// `‖g‖∞ + L(1 + 2 diam)` with `diam` of the mesh.
    pub l1_bound: f64,
    /// `max_i ‖u_i‖∞ + ‖∇u_i‖∞`.
    pub l1_observed: f64,
}

impl EnergyReport {
    pub fn csv(&self) -> Table {
        let mut t = Table::csv(["i", "energy", "increment", "slack"]);
        for r in &self.rows {
            t.push_cells([r.i.to_string(), num(r.energy), num(r.increment), num(r.slack)]);
        }
        t
    }
}

fn mesh_diameter(mesh: &Mesh) -> f64 {
    let b = mesh.boundary_indices();
    let v = mesh.vertices();
    let mut d: f64 = 0.0;
    for (k, &i) in b.iter().enumerate() {
        for &j in &b[k + 1..] {
            d = d.max((v[i] - v[j]).norm());
        }
    }
    d
}

/// Evaluates the telescoped energy estimate for every prefix of the trajectory.
///
/// Data terms use the interpolant of `∂ₜg` and 8-point Gauss quadrature per step.
pub fn compute_energy_report(traj: &Trajectory, cfg: &SolverConfig) -> EnergyReport {
    let mesh = &cfg.mesh;
    let rule = GaussRule::new(8);
    let dt_grad_sup = cfg.data.bounds().dt_grad_sup;
    let mut data_terms = vec![0.0];
    let mut observed_dt_grad: f64 = 0.0;
    let mut per_step = Vec::new();
    for i in 1..traj.len() {
        let (a, b) = (traj.time(i - 1), traj.time(i));
        let mut half_sq = 0.0;
        let mut grad_l1 = 0.0;
        for (t, w) in rule.on(a, b) {
            let dg = cfg.data.dt_slice(mesh, t);
            half_sq += w * 0.5 * traj.mass.quadratic_form(&dg);
            for tri in 0..mesh.n_triangles() {
                let n = mesh.element_gradient(&dg, tri).norm();
                observed_dt_grad = observed_dt_grad.max(n);
                grad_l1 += w * mesh.area(tri) * n;
            }
        }
        per_step.push((half_sq, grad_l1));
    }
    let k_const = cfg.integrand.grad_bound_on_ball(cfg.lipschitz_bound + dt_grad_sup.max(observed_dt_grad));
    data_terms.extend(per_step.iter().map(|(q, g)| q + k_const * g));

    let base = traj.energies[0];
    let mut rows = Vec::with_capacity(traj.len());
    let (mut inc_sum, mut data_sum) = (0.0, 0.0);
    let (mut worst_slack, mut worst_index) = (f64::INFINITY, 0);
    for i in 0..traj.len() {
        inc_sum += traj.increments[i];
        data_sum += data_terms[i];
        let lhs = traj.energies[i] + inc_sum;
        let rhs = base + data_sum;
        let slack = rhs - lhs;
        if slack < worst_slack {
            worst_slack = slack;
            worst_index = i;
        }
        rows.push(EnergyRow {
            i,
            energy: traj.energies[i],
            increment: traj.increments[i],
            data_term: data_terms[i],
            lhs,
            rhs,
            slack,
        });
    }
    let l1_bound = cfg.data.bounds().value_sup + cfg.lipschitz_bound * (1.0 + 2.0 * mesh_diameter(mesh));
    let l1_observed = traj
        .steps
        .iter()
        .map(|u| u.amax() + discrete_lipschitz(u, mesh))
        .fold(0.0, f64::max);
    EnergyReport { rows, k_const, worst_slack, worst_index, l1_bound, l1_observed }
}

/// [`compute_energy_report`], failing when some prefix has slack below `−ESTIMATE_TOL`.
pub fn energy_report(traj: &Trajectory, cfg: &SolverConfig) -> Result<EnergyReport, SolverError> {
    let rep = compute_energy_report(traj, cfg);
    if rep.worst_slack < -ESTIMATE_TOL {
        return Err(SolverError::EstimateViolated { index: rep.worst_index, slack: rep.worst_slack });
    }
    Ok(rep)
}

/// Right-hand side minus left-hand side of the variational inequality on `Ω × [0, τ]`
/// for the test function `v`, with `u = u^{(h)}`:
///
/// `∬[∂ₜv(v−u) + f(∇v) − f(∇u)] + ½‖v(0) − u_0‖² − ½‖(v−u)(τ)‖²`.
///
/// Time integrals are exact for the bilinear term and trapezoidal for `f(∇v)`.
pub fn vi_residual(traj: &Trajectory, v: &TimeSeriesField, tau: f64, cfg: &SolverConfig) -> Result<f64, SolverError> {
    let mesh = &cfg.mesh;
    let stepper = Stepper::new(cfg);
    let boundary = mesh.boundary_indices();
    for (t, field) in v.times().iter().zip(v.values()) {
        let diff = boundary
            .iter()
            .map(|&i| (field[i] - cfg.data.value(&mesh.vertices()[i], *t)).abs())
            .fold(0.0, f64::max);
        if diff > 1e-8 * (1.0 + field.amax()) {
            return Err(SolverError::BoundaryMismatch { time: *t, diff });
        }
    }
    let mut breaks: Vec<f64> = v
        .times()
        .iter()
        .copied()
        .chain((0..traj.len()).map(|i| traj.time(i)))
        .filter(|&t| t > 0.0 && t < tau)
        .collect();
    breaks.push(0.0);
    breaks.push(tau.max(0.0));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * tau.max(1.0));

    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let u = traj.piecewise_constant(mid);
        let k = v.times().partition_point(|&s| s <= mid).saturating_sub(1).min(v.len().saturating_sub(2));
        let dv = if v.len() > 1 { v.slope_on(k) } else { Field::zeros(v.n_nodes()) };
        let fu = stepper.energy(u);
        let phi = |t: f64| {
            let vt = v.value_at(t);
            traj.mass.quadratic_form_pair(&dv, &(&vt - u)) + stepper.energy(&vt) - fu
        };
        total += 0.5 * (b - a) * (phi(a) + phi(b));
    }
    let v0 = v.value_at(0.0);
    let start = 0.5 * traj.mass.quadratic_form(&(&v0 - &traj.steps[0]));
    let end = 0.5 * traj.mass.quadratic_form(&(v.value_at(tau) - traj.piecewise_constant(tau)));
    Ok(total + start - end)
}

/// `(1/δ)∫₀^δ ‖(g − u^{(h)})(τ)‖² dτ` with `δ = 4h`, `g` interpolated at the nodes.
pub fn initial_attainment(traj: &Trajectory, data: &BoundaryDatum) -> f64 {
    let delta = (4.0 * traj.h).min(traj.horizon());
    let rule = GaussRule::new(8);
    let mut acc = 0.0;
    let mut a = 0.0;
    while a < delta - 1e-15 {
        let b = (a + traj.h).min(delta);
        for (t, w) in rule.on(a, b) {
            let d = data.slice(&traj.mesh, t) - traj.piecewise_constant(t);
            acc += w * traj.mass.quadratic_form(&d);
        }
        a = b;
    }
    acc / delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{Constant, RotatingAffine, StationaryAffine, TimeDatum};
    use crate::geometry::{mesh_domain, ConvexDomain, Mesh};
    use crate::{Point, Vec2};

    fn config(datum: Arc<dyn TimeDatum>, horizon: f64, h: f64, l: f64, edge: f64) -> SolverConfig {
        let dom = ConvexDomain::unit_disk();
        let mesh = Arc::new(mesh_domain(&dom, edge).unwrap());
        let data = BoundaryDatum::new(datum, horizon, &dom);
        SolverConfig::new(mesh, ConvexIntegrand::quadratic(1.0), data, h, l).unwrap()
    }

    #[test]
    fn affine_field_is_stationary() {
        let datum = Arc::new(StationaryAffine { slope: Vec2::new(0.7, -0.4), offset: 0.2 });
        let cfg = config(datum, 0.5, 0.1, 2.0, 0.2);
        let traj = solve(&cfg).unwrap();
        for u in traj.steps() {
            assert!((u - &traj.steps()[0]).amax() < 1e-12);
        }
        assert!(traj.increments().iter().all(|&x| x < 1e-24));
        assert!(initial_attainment(&traj, &cfg.data) < 1e-24);
    }

    #[test]
    fn single_boundary_triangle_returns_the_data() {
        let verts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        let mesh = Arc::new(Mesh::from_parts(verts, vec![[0, 1, 2]], vec![true; 3]).unwrap());
        let dom = ConvexDomain::unit_disk();
        let data = BoundaryDatum::new(Arc::new(RotatingAffine::unit()), 1.0, &dom);
        let cfg = SolverConfig::new(mesh.clone(), ConvexIntegrand::quadratic(1.0), data, 0.5, 2.0).unwrap();
        let g = cfg.data.slice(&mesh, 0.5);
        let u = step(&Field::zeros(3), &g, &cfg).unwrap();
        assert_eq!(u, g);
    }

    #[test]
    fn step_must_divide_horizon() {
        let dom = ConvexDomain::unit_disk();
        let mesh = Arc::new(mesh_domain(&dom, 0.3).unwrap());
        let data = BoundaryDatum::new(Arc::new(Constant { value: 0.0 }), 1.0, &dom);
        assert!(matches!(
            SolverConfig::new(mesh, ConvexIntegrand::quadratic(1.0), data, 0.3, 1.0),
            Err(SolverError::InvalidConfig(_))
        ));
    }

    #[test]
    fn small_bound_is_rejected() {
        let cfg = config(Arc::new(RotatingAffine::unit()), 0.5, 0.25, 0.5, 0.3);
        assert!(matches!(solve(&cfg), Err(SolverError::InfeasibleConstraint { .. })));
    }

    #[test]
    fn element_projection_lands_on_the_constraint() {
        let g = [Vec2::new(-1.0, -1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let w = [0.0, 0.5, 3.0];
        for free in [[true, true, true], [false, true, true], [false, false, true]] {
            let y = project_element(&g, &w, &free, 1.0).unwrap();
            let grad: Vec2 = (0..3).map(|k| g[k] * y[k]).sum();
            assert!((grad.norm() - 1.0).abs() < 1e-12, "{free:?}");
            for k in 0..3 {
                if !free[k] {
                    assert_eq!(y[k], w[k]);
                }
            }
        }
        // the fixed part alone already exceeds the bound
        assert!(project_element(&g, &[0.0, 3.0, 0.0], &[false, false, true], 1.0).is_none());
        assert!(project_element(&g, &w, &[false; 3], 1.0).is_none());
    }

    #[test]
    fn active_constraint_is_respected() {
        // fast rotation of the boundary slope pushes interior gradients past L
        let dom = ConvexDomain::unit_disk();
        let mesh = Arc::new(mesh_domain(&dom, 0.25).unwrap());
        let datum = Arc::new(RotatingAffine { amplitude: 1.0, omega: 10.0 });
        let data = BoundaryDatum::new(datum, 0.2, &dom);
        let cfg = SolverConfig::new(mesh.clone(), ConvexIntegrand::quadratic(1.0), data, 0.1, 1.2).unwrap();
        let traj = solve(&cfg).unwrap();
        for u in traj.steps() {
            assert!(discrete_lipschitz(u, &mesh) <= 1.2 + 1e-8, "{:?}", traj.stats());
        }
        assert!(traj.stats().iter().any(|s| s.constraint_active));
    }
}
