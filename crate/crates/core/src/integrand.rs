//! Convex integrands `f`, their Legendre–Fenchel conjugates and inverse gradients.
//!
//! The admissible integrands are `C^{1,1}` and uniformly convex outside the unit
//! ball: `D²f(ξ)(ζ,ζ) ≥ ε|ζ|²` for `|ξ| > 1`, with `‖D²f‖` bounded there. The
//! conjugate `f*(η) = sup_ξ {η·ξ − f(ξ)}` is evaluated in closed form when the
//! catalog entry knows it, otherwise by damped Newton on the concave dual
//! objective with a radial golden-section fallback.

use nalgebra::Cholesky;
use thiserror::Error;

use crate::{Mat2, Vec2};

/// Gradient-norm stopping tolerance of the inner maximization (scaled by `max(1, |η|)`).
const DUAL_GRAD_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConjugateError {
    #[error("maximizer for eta = ({}, {}) reached the search radius {radius}", eta[0], eta[1])]
    MaximizerOnBoundary { eta: [f64; 2], radius: f64 },
    #[error("dual maximization did not converge for eta = ({}, {}): residual {residual:e}", eta[0], eta[1])]
    NonConvergence { eta: [f64; 2], residual: f64 },
    #[error("inverse-gradient identity violated at eta = ({}, {}): |grad f(xi*) - eta| = {error:e}", eta[0], eta[1])]
    IdentityViolation { eta: [f64; 2], error: f64 },
    #[error("no finite constant bounds f* by (2/eps)|eta|^2 + c on the sample set")]
    GrowthViolation,
    #[error("finite-difference Hessian of f* never stabilises below the bound 1/eps on the sampled radii")]
    SmoothnessRadiusNotFound,
}

/// Catalog of integrands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegrandKind {
    /// `(a/2)|ξ|²`.
    Quadratic { scale: f64 },
    /// `¼|ξ|⁴`.
    Quartic,
    /// `max(0, |ξ|−1)² + ½|ξ|²`: only `C^{1,1}` across the unit sphere.
    FlatBottomed,
    /// `|ξ|`: linear growth, not uniformly convex. Kept as a negative example.
    Norm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexIntegrand {
    kind: IntegrandKind,
    epsilon: f64,
    hess_sup: f64,
    closed_form_conjugate: bool,
    smoothness_radius: Option<f64>,
}

impl ConvexIntegrand {
    pub fn quadratic(scale: f64) -> Self {
        assert!(scale > 0.0, "quadratic integrand needs a positive scale");
        Self {
            kind: IntegrandKind::Quadratic { scale },
            epsilon: scale,
            hess_sup: scale,
            closed_form_conjugate: true,
            smoothness_radius: None,
        }
    }

    /// `¼|ξ|⁴`. Its Hessian is unbounded, so `hess_sup` is infinite; the conjugate
    /// is computed numerically unless [`Self::with_closed_form_conjugate`] is used.
    pub fn quartic() -> Self {
        Self {
            kind: IntegrandKind::Quartic,
            epsilon: 1.0,
            hess_sup: f64::INFINITY,
            closed_form_conjugate: false,
            smoothness_radius: None,
        }
    }

    pub fn flat_bottomed() -> Self {
        Self {
            kind: IntegrandKind::FlatBottomed,
            epsilon: 1.0,
            hess_sup: 3.0,
            closed_form_conjugate: false,
            smoothness_radius: None,
        }
    }

    /// The norm `|ξ|` with a claimed `ε = 1` that [`check_uniform_convexity`] refutes.
    pub fn norm() -> Self {
        Self {
            kind: IntegrandKind::Norm,
            epsilon: 1.0,
            hess_sup: f64::INFINITY,
            closed_form_conjugate: false,
            smoothness_radius: None,
        }
    }

    /// Use the closed-form conjugate where the catalog knows one.
    pub fn with_closed_form_conjugate(mut self, enabled: bool) -> Self {
        self.closed_form_conjugate =
            enabled && matches!(self.kind, IntegrandKind::Quadratic { .. } | IntegrandKind::Quartic);
        self
    }

    pub fn kind(&self) -> IntegrandKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            IntegrandKind::Quadratic { .. } => "quadratic",
            IntegrandKind::Quartic => "quartic",
            IntegrandKind::FlatBottomed => "flat_bottomed",
            IntegrandKind::Norm => "norm",
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `‖D²f‖_{L∞(ℝⁿ∖B₁)}`.
    pub fn hess_sup(&self) -> f64 {
        self.hess_sup
    }

    pub fn smoothness_radius(&self) -> Option<f64> {
        self.smoothness_radius
    }

    pub fn set_smoothness_radius(&mut self, r: f64) {
        self.smoothness_radius = Some(r);
    }

    /// True when `f(−ξ) = f(ξ)`; every catalog entry is even.
    pub fn is_even(&self) -> bool {
        true
    }

    pub fn value(&self, xi: &Vec2) -> f64 {
        let s = xi.norm();
        match self.kind {
            IntegrandKind::Quadratic { scale } => 0.5 * scale * s * s,
            IntegrandKind::Quartic => 0.25 * s.powi(4),
            IntegrandKind::FlatBottomed => (s - 1.0).max(0.0).powi(2) + 0.5 * s * s,
            IntegrandKind::Norm => s,
        }
    }

    pub fn grad(&self, xi: &Vec2) -> Vec2 {
        let s = xi.norm();
        match self.kind {
            IntegrandKind::Quadratic { scale } => xi * scale,
            IntegrandKind::Quartic => xi * (s * s),
            IntegrandKind::FlatBottomed => {
                if s > 1.0 {
                    xi * (1.0 + 2.0 * (s - 1.0) / s)
                } else {
                    *xi
                }
            }
            IntegrandKind::Norm => {
                if s > 0.0 {
                    xi / s
                } else {
                    Vec2::zeros()
                }
            }
        }
    }

    /// Closed-form Hessian where it exists.
    pub fn hess(&self, xi: &Vec2) -> Option<Mat2> {
        let s = xi.norm();
        let id = Mat2::identity();
        match self.kind {
            IntegrandKind::Quadratic { scale } => Some(id * scale),
            IntegrandKind::Quartic => Some(id * (s * s) + xi * xi.transpose() * 2.0),
            IntegrandKind::FlatBottomed => {
                if s > 1.0 {
                    let radial = (xi * xi.transpose()) / (s * s);
                    Some(id + radial * 2.0 + (id - radial) * (2.0 * (1.0 - 1.0 / s)))
                } else if s < 1.0 {
                    Some(id)
                } else {
                    None
                }
            }
            IntegrandKind::Norm => {
                if s > 0.0 {
                    let radial = (xi * xi.transpose()) / (s * s);
                    Some((id - radial) / s)
                } else {
                    None
                }
            }
        }
    }

    /// Hessian, falling back to central differences of the gradient with step
    /// `1e-4·max(1, |ξ|)` where no closed form exists.
    pub fn hessian(&self, xi: &Vec2) -> Mat2 {
        self.hess(xi)
            .unwrap_or_else(|| fd_jacobian(|p| self.grad(&p), xi, 1e-4 * xi.norm().max(1.0)))
    }

    /// `sup_{|ξ| ≤ radius} ‖D²f(ξ)‖`.
    pub fn hess_bound_on_ball(&self, radius: f64) -> f64 {
        match self.kind {
            IntegrandKind::Quadratic { scale } => scale,
            IntegrandKind::Quartic => 3.0 * radius * radius,
            IntegrandKind::FlatBottomed => {
                if radius > 1.0 {
                    3.0
                } else {
                    1.0
                }
            }
            IntegrandKind::Norm => f64::INFINITY,
        }
    }

    /// `sup_{|ξ| ≤ radius} |∇f(ξ)|`.
    pub fn grad_bound_on_ball(&self, radius: f64) -> f64 {
        match self.kind {
            IntegrandKind::Quadratic { scale } => scale * radius,
            IntegrandKind::Quartic => radius.powi(3),
            IntegrandKind::FlatBottomed => {
                if radius > 1.0 {
                    3.0 * radius - 2.0
                } else {
                    radius
                }
            }
            IntegrandKind::Norm => 1.0_f64.min(radius / f64::EPSILON),
        }
    }

    /// Closed-form `f*(η)` when enabled for this integrand.
    pub fn closed_form_conjugate(&self, eta: &Vec2) -> Option<f64> {
        if !self.closed_form_conjugate {
            return None;
        }
        let s = eta.norm();
        match self.kind {
            IntegrandKind::Quadratic { scale } => Some(0.5 * s * s / scale),
            IntegrandKind::Quartic => Some(0.75 * s.powf(4.0 / 3.0)),
            _ => None,
        }
    }

    /// Closed-form `∇f*(η)` when enabled for this integrand.
    pub fn closed_form_grad_conjugate(&self, eta: &Vec2) -> Option<Vec2> {
        if !self.closed_form_conjugate {
            return None;
        }
        let s = eta.norm();
        match self.kind {
            IntegrandKind::Quadratic { scale } => Some(eta / scale),
            IntegrandKind::Quartic => {
                if s > 0.0 {
                    Some(eta * s.powf(-2.0 / 3.0))
                } else {
                    Some(Vec2::zeros())
                }
            }
            _ => None,
        }
    }
}

/// Central-difference Jacobian of a planar vector field.
pub(crate) fn fd_jacobian(mut field: impl FnMut(Vec2) -> Vec2, at: &Vec2, step: f64) -> Mat2 {
    let mut jac = Mat2::zeros();
    for j in 0..2 {
        let mut e = Vec2::zeros();
        e[j] = step;
        let col = (field(at + e) - field(at - e)) / (2.0 * step);
        jac.set_column(j, &col);
    }
    jac
}

/// Eigenvalues `(min, max)` of a symmetric 2×2 matrix (the symmetric part is used).
pub fn sym_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}

/// Spectral norm of the symmetric part of `m`.
pub fn sym_norm(m: &Mat2) -> f64 {
    let (lo, hi) = sym_eigenvalues(m);
    lo.abs().max(hi.abs())
}

/// Maximizer and value of `ξ ↦ η·ξ − f(ξ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSolution {
    pub value: f64,
    pub maximizer: Vec2,
    /// `|η − ∇f(ξ*)|` at the returned point.
    pub residual: f64,
}

/// A search radius that comfortably contains the maximizer for integrands with
/// `ε`-uniform convexity outside the unit ball.
pub fn default_search_radius(f: &ConvexIntegrand, eta: &Vec2) -> f64 {
    10.0 * (1.0 + eta.norm() / f.epsilon())
}

/// `f*(η)`, in closed form when available.
pub fn conjugate(f: &ConvexIntegrand, eta: &Vec2, search_radius: f64) -> Result<f64, ConjugateError> {
    match f.closed_form_conjugate(eta) {
        Some(v) => Ok(v),
        None => conjugate_numeric(f, eta, search_radius).map(|s| s.value),
    }
}

/// `f*(η)` by numerical maximization, ignoring any closed form.
pub fn conjugate_numeric(
    f: &ConvexIntegrand,
    eta: &Vec2,
    search_radius: f64,
) -> Result<DualSolution, ConjugateError> {
    let objective = |xi: &Vec2| eta.dot(xi) - f.value(xi);
    let tol = DUAL_GRAD_TOL * eta.norm().max(1.0);
    let on_boundary = || ConjugateError::MaximizerOnBoundary {
        eta: [eta.x, eta.y],
        radius: search_radius,
    };

    let mut xi = if eta.norm() < search_radius { *eta } else { eta * (0.5 * search_radius / eta.norm()) };
    let mut newton_ok = false;
    for _ in 0..NEWTON_MAX_ITER {
        let g = eta - f.grad(&xi);
        let gnorm = g.norm();
        if gnorm <= tol {
            newton_ok = true;
            break;
        }
        let h = f.hessian(&xi);
        let dir = match Cholesky::new(h) {
            Some(ch) => {
                let d = ch.solve(&g);
                if d.dot(&g) > 0.0 {
                    d
                } else {
                    g
                }
            }
            None => g,
        };
        let base = objective(&xi);
        let slope = g.dot(&dir);
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-14 {
            let trial = xi + dir * step;
            let better_value = objective(&trial) >= base + 1e-4 * step * slope;
            let better_grad = (eta - f.grad(&trial)).norm() < gnorm;
            if better_value || better_grad {
                xi = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        if xi.norm() > search_radius {
            return Err(on_boundary());
        }
    }

    if newton_ok {
        let residual = (eta - f.grad(&xi)).norm();
        return Ok(DualSolution { value: objective(&xi), maximizer: xi, residual });
    }

    // Radial golden-section fallback for non-smooth regions.
    let dir = if eta.norm() > 0.0 { eta / eta.norm() } else { Vec2::new(1.0, 0.0) };
    let s = golden_max(|s| objective(&(dir * s)), 0.0, search_radius, 1e-13 * search_radius.max(1.0));
    if s >= search_radius * (1.0 - 1e-6) {
        return Err(on_boundary());
    }
    let maximizer = dir * s;
    let residual = (eta - f.grad(&maximizer)).norm();
    if !residual.is_finite() {
        return Err(ConjugateError::NonConvergence { eta: [eta.x, eta.y], residual });
    }
    Ok(DualSolution { value: objective(&maximizer), maximizer, residual })
}

fn golden_max(mut phi: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = phi(c);
    let mut fd = phi(d);
    while (b - a) > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = phi(d);
        }
    }
    // Endpoints are admissible maximizers too.
    let mid = 0.5 * (a + b);
    [mid, a, b]
        .into_iter()
        .map(|s| (s, phi(s)))
        .fold((mid, f64::NEG_INFINITY), |best, cand| if cand.1 > best.1 { cand } else { best })
        .0
}

/// `∇f*(η)`, i.e. the maximizer `ξ*` with `∇f(ξ*) = η`.
pub fn grad_conjugate(f: &ConvexIntegrand, eta: &Vec2) -> Result<Vec2, ConjugateError> {
    let xi = match f.closed_form_grad_conjugate(eta) {
        Some(xi) => xi,
        None => conjugate_numeric(f, eta, default_search_radius(f, eta))?.maximizer,
    };
    let error = (f.grad(&xi) - eta).norm();
    if error > 1e-8 * eta.norm().max(1.0) {
        return Err(ConjugateError::IdentityViolation { eta: [eta.x, eta.y], error });
    }
    Ok(xi)
}

/// Finite-difference `D²f*(η)` from central differences of `∇f*`.
pub fn hess_conjugate_fd(f: &ConvexIntegrand, eta: &Vec2, step: f64) -> Result<Mat2, ConjugateError> {
    let mut jac = Mat2::zeros();
    for j in 0..2 {
        let mut e = Vec2::zeros();
        e[j] = step;
        let col = (grad_conjugate(f, &(eta + e))? - grad_conjugate(f, &(eta - e))?) / (2.0 * step);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub min_eigenvalue: f64,
    pub witness: Vec2,
    pub pass: bool,
}

/// Smallest sampled Hessian eigenvalue over `1 < |ξ| ≤ sample_radius`.
pub fn check_uniform_convexity(f: &ConvexIntegrand, samples: usize, sample_radius: f64) -> ConvexityReport {
    const DIRECTIONS: usize = 32;
    let samples = samples.max(1);
    let mut radii: Vec<f64> = vec![1.0 + 1e-6];
    radii.extend((1..=samples).map(|k| 1.0 + (sample_radius - 1.0) * k as f64 / samples as f64));
    let mut min_eigenvalue = f64::INFINITY;
    let mut witness = Vec2::zeros();
    for &r in &radii {
        for k in 0..DIRECTIONS {
            let th = 2.0 * std::f64::consts::PI * k as f64 / DIRECTIONS as f64;
            let xi = Vec2::new(r * th.cos(), r * th.sin());
            let (lo, _) = sym_eigenvalues(&f.hessian(&xi));
            if lo < min_eigenvalue {
                min_eigenvalue = lo;
                witness = xi;
            }
        }
    }
    ConvexityReport {
        min_eigenvalue,
        witness,
        pass: min_eigenvalue >= f.epsilon() - 1e-9,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthReport {
    /// Smallest sampled `c` with `f*(η) ≤ (2/ε)|η|² + c`.
    pub quadratic_upper_c: f64,
    /// Radius beyond which the sampled `D²f*` is stable and bounded by `1/ε`.
    pub smoothness_radius_r: f64,
    /// Largest sampled `‖D²f*‖` beyond the smoothness radius.
    pub conj_hess_bound: f64,
}

/// Sampled growth constants of `f*`; stores the smoothness radius on `f`.
pub fn conjugate_growth_report(f: &mut ConvexIntegrand) -> Result<GrowthReport, ConjugateError> {
    let report = growth_report(f)?;
    f.set_smoothness_radius(report.smoothness_radius_r);
    Ok(report)
}

fn growth_report(f: &ConvexIntegrand) -> Result<GrowthReport, ConjugateError> {
    const DIRECTIONS: usize = 16;
    const RADII: usize = 121;
    const RADIUS_STEP: f64 = 0.05;
    const STABILITY_TOL: f64 = 1e-3;

    let eps = f.epsilon();
    let mut c = f64::NEG_INFINITY;
    let mut ok = vec![true; RADII];
    let mut norms = vec![0.0_f64; RADII];
    for (k, ok_k) in ok.iter_mut().enumerate() {
        let r = k as f64 * RADIUS_STEP;
        for d in 0..DIRECTIONS {
            let th = 2.0 * std::f64::consts::PI * (d as f64 + 0.5) / DIRECTIONS as f64;
            let eta = Vec2::new(r * th.cos(), r * th.sin());
            let value = conjugate(f, &eta, default_search_radius(f, &eta)).map_err(|_| ConjugateError::GrowthViolation)?;
            if !value.is_finite() {
                return Err(ConjugateError::GrowthViolation);
            }
            c = c.max(value - 2.0 / eps * r * r);

            let step = 1e-4 * r.max(1.0);
            let fine = hess_conjugate_fd(f, &eta, step);
            let coarse = hess_conjugate_fd(f, &eta, 2.0 * step);
            match (fine, coarse) {
                (Ok(fine), Ok(coarse)) => {
                    let drift = (fine - coarse).abs().max();
                    let n = sym_norm(&fine);
                    norms[k] = norms[k].max(n);
                    if drift > STABILITY_TOL || n > 1.0 / eps + STABILITY_TOL {
                        *ok_k = false;
                    }
                }
                _ => *ok_k = false,
            }
        }
    }
    if !c.is_finite() {
        return Err(ConjugateError::GrowthViolation);
    }
    let first_stable = (0..RADII)
        .rev()
        .take_while(|&k| ok[k])
        .last()
        .ok_or(ConjugateError::SmoothnessRadiusNotFound)?;
    let bound = norms[first_stable..].iter().copied().fold(0.0, f64::max);
    Ok(GrowthReport {
        quadratic_upper_c: c,
        smoothness_radius_r: first_stable as f64 * RADIUS_STEP,
        conj_hess_bound: bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    /// Dense-grid brute force of `sup_ξ η·ξ − f(ξ)` over a square, refined
    /// around the best grid point. Independent of the Newton path.
    fn brute_force_conjugate(f: &ConvexIntegrand, eta: &Vec2, half_width: f64) -> f64 {
        let mut center = Vec2::zeros();
        let mut width = half_width;
        let mut best = f64::NEG_INFINITY;
        for _ in 0..40 {
            let n = 40;
            let mut best_pt = center;
            for i in 0..=n {
                for j in 0..=n {
                    let xi = center + v(
                        -width + 2.0 * width * i as f64 / n as f64,
                        -width + 2.0 * width * j as f64 / n as f64,
                    );
                    let val = eta.dot(&xi) - f.value(&xi);
                    if val > best {
                        best = val;
                        best_pt = xi;
                    }
                }
            }
            center = best_pt;
            width *= 0.5;
        }
        best
    }

    #[test]
    fn quadratic_conjugate_examples() {
        let f = ConvexIntegrand::quadratic(1.0);
        assert_eq!(conjugate(&f, &v(1.0, 0.0), 10.0).unwrap(), 0.5);
        assert_eq!(conjugate(&f, &v(0.0, 0.0), 10.0).unwrap(), 0.0);
        // the numerical route agrees with the closed form
        let num = conjugate_numeric(&f, &v(1.0, 0.0), 10.0).unwrap();
        assert!((num.value - 0.5).abs() < 1e-14);
    }

    #[test]
    fn quartic_conjugate_matches_brute_force_grid() {
        let f = ConvexIntegrand::quartic();
        let eta = v(2.0, 0.0);
        let oracle = brute_force_conjugate(&f, &eta, 6.0);
        let got = conjugate(&f, &eta, 10.0).unwrap();
        assert!((got - oracle).abs() <= 1e-6, "got {got}, oracle {oracle}");
        let closed = 0.75 * 2.0_f64.powf(4.0 / 3.0);
        assert!((got - closed).abs() <= 1e-10);
    }

    #[test]
    fn grad_conjugate_examples() {
        let q = ConvexIntegrand::quadratic(1.0);
        assert_eq!(grad_conjugate(&q, &v(3.0, 4.0)).unwrap(), v(3.0, 4.0));

        // radial root of |ξ|²ξ = η by bisection on s³ = |η|
        let quartic = ConvexIntegrand::quartic();
        let (mut lo, mut hi) = (0.0_f64, 8.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powi(3) < 8.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let got = grad_conjugate(&quartic, &v(8.0, 0.0)).unwrap();
        assert!((got - v(lo, 0.0)).norm() < 1e-9);

        let xi = v(1.5, -2.0);
        let back = grad_conjugate(&quartic, &quartic.grad(&xi)).unwrap();
        assert!((back - xi).norm() <= 1e-6);
    }

    #[test]
    fn maximizer_on_boundary_for_linear_growth() {
        let f = ConvexIntegrand::norm();
        let err = conjugate(&f, &v(2.0, 0.0), 5.0).unwrap_err();
        assert!(matches!(err, ConjugateError::MaximizerOnBoundary { .. }));
        // inside the unit ball the conjugate of |ξ| is zero
        let inside = conjugate(&f, &v(0.5, 0.0), 5.0).unwrap();
        assert!(inside.abs() < 1e-9);
    }

    #[test]
    fn uniform_convexity_reports() {
        let q = check_uniform_convexity(&ConvexIntegrand::quadratic(1.0), 20, 3.0);
        assert!(q.pass);
        assert!((q.min_eigenvalue - 1.0).abs() < 1e-15);

        let quartic = check_uniform_convexity(&ConvexIntegrand::quartic(), 20, 3.0);
        assert!(quartic.pass);
        assert!(quartic.min_eigenvalue >= 1.0);
        assert!(quartic.min_eigenvalue < 1.0 + 1e-5, "minimum sits at |xi| = 1+");

        let norm = check_uniform_convexity(&ConvexIntegrand::norm(), 20, 3.0);
        assert!(!norm.pass);
        assert!(norm.min_eigenvalue.abs() < 1e-12);

        assert!(check_uniform_convexity(&ConvexIntegrand::flat_bottomed(), 20, 3.0).pass);
    }

    #[test]
    fn growth_report_quadratic() {
        let mut f = ConvexIntegrand::quadratic(1.0);
        let rep = conjugate_growth_report(&mut f).unwrap();
        assert_eq!(rep.quadratic_upper_c, 0.0);
        assert!((rep.conj_hess_bound - 1.0).abs() < 1e-6);
        assert_eq!(rep.smoothness_radius_r, 0.0);
        assert_eq!(f.smoothness_radius(), Some(0.0));
    }

    #[test]
    fn growth_report_quartic() {
        let mut f = ConvexIntegrand::quartic();
        let rep = conjugate_growth_report(&mut f).unwrap();
        // max of ¾s^{4/3} − 2s² is 1/64 at s = 1/8; sampling sees at most that
        assert!(rep.quadratic_upper_c >= 0.0 && rep.quadratic_upper_c <= 1.0 / 64.0 + 1e-9);
        // ‖D²f*‖ = |η|^{-2/3} ≤ 1 exactly from |η| = 1 on
        assert!((rep.smoothness_radius_r - 1.0).abs() <= 0.051, "r = {}", rep.smoothness_radius_r);
        assert!(rep.conj_hess_bound <= 1.0 + 1e-3);
    }

    #[test]
    fn growth_report_rejects_linear_growth() {
        let mut f = ConvexIntegrand::norm();
        assert_eq!(conjugate_growth_report(&mut f).unwrap_err(), ConjugateError::GrowthViolation);
    }

    #[test]
    fn flat_bottomed_hessian_matches_finite_differences() {
        let f = ConvexIntegrand::flat_bottomed();
        for xi in [v(1.3, 0.4), v(-2.0, 3.0), v(0.2, 0.1)] {
            let exact = f.hess(&xi).unwrap();
            let fd = fd_jacobian(|p| f.grad(&p), &xi, 1e-5);
            assert!((exact - fd).abs().max() < 1e-8);
        }
    }
}
