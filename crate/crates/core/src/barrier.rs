//! Cellina-type barriers `v(x,t) = (n/α) f*((α/n)(x − y(t))) − c(t)`.
//!
//! A lower barrier touches the data at `x_o`, stays below it on the cylinder
//! and is a sub-solution for large `α`. Upper barriers (`α < 0`) are built as
//! the negated lower barrier of `−g`, which needs an even integrand.

use std::f64::consts::PI;
use std::sync::Arc;

use thiserror::Error;

use crate::boundary::{
    certify_slice, Affinely, BoundaryDatum, BoundaryError, CertifyOptions, RotatingAffine, SlopeCertificate,
};
use crate::geometry::ConvexDomain;
use crate::integrand::{
    conjugate, conjugate_growth_report, default_search_radius, grad_conjugate, hess_conjugate_fd, ConjugateError,
    ConvexIntegrand, IntegrandKind,
};
use crate::table::Table;
use crate::{Point, Vec2, DIM};

const N: f64 = DIM as f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BarrierError {
    #[error("parameter search for {0} exhausted its budget")]
    SearchExhausted(&'static str),
    #[error("alpha must be non-zero")]
    ZeroAlpha,
    #[error("upper barriers need an even integrand")]
    OddIntegrand,
    #[error(transparent)]
    Conjugate(#[from] ConjugateError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierSign {
    Lower,
    Upper,
}

impl BarrierSign {
    /// `+1` for lower, `−1` for upper barriers.
    pub fn factor(self) -> f64 {
        match self {
            BarrierSign::Lower => 1.0,
            BarrierSign::Upper => -1.0,
        }
    }
}

/// Sample densities of the parameter sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub directions: usize,
    pub times: usize,
    /// Geometric sweep multiplier.
    pub growth: f64,
    /// Conditions must also hold at `margin·candidate`.
    pub margin: f64,
    pub max_tries: usize,
    pub certify: CertifyOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { directions: 64, times: 64, growth: 1.25, margin: 0.9, max_tries: 80, certify: CertifyOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    pub m: f64,
    pub gamma: f64,
    pub rho0: f64,
    pub lambda: f64,
    /// Conjugate smoothness radius `r` used by the sweeps.
    pub r: f64,
    pub q1: f64,
}

/// `α₀ = max{n, diam·‖D²f‖·𝖰/ε + ‖∂ₜg‖∞}`.
pub fn alpha_min(f: &ConvexIntegrand, dom: &ConvexDomain, data: &BoundaryDatum, cert: &SlopeCertificate) -> f64 {
    N.max(dom.diam() * f.hess_sup() * cert.qdot / f.epsilon() + data.dt_sup())
}

fn directions(n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            Vec2::new(th.cos(), th.sin())
        })
        .collect()
}

fn sample_times(horizon: f64, n: usize) -> Vec<f64> {
    (0..n.max(1)).map(|k| horizon * k as f64 / n.max(1) as f64).collect()
}

/// `(n/α) f*((α/n) x)` for `α > 0`.
fn scaled_conjugate(f: &ConvexIntegrand, alpha: f64, x: &Vec2) -> Result<f64, ConjugateError> {
    let eta = x * (alpha / N);
    Ok(N / alpha * conjugate(f, &eta, default_search_radius(f, &eta))?)
}

/// Slopes feeding the construction: exact for the rotating example, otherwise
/// recertified per time and widened by `Q_o ν`.
#[derive(Debug, Clone)]
enum Slopes {
    Rotating,
    Certified { opts: CertifyOptions, q_o: f64 },
}

/// Lower barrier core (`α > 0`) for possibly negated data.
#[derive(Debug, Clone)]
struct Core {
    f: ConvexIntegrand,
    alpha: f64,
    x_o: Point,
    nu: Vec2,
    data: BoundaryDatum,
    dom: ConvexDomain,
    slopes: Slopes,
    lambda: f64,
    explicit: bool,
}

/// `y(t)`, `c(t)` and the slope `w̃(t)` at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub w: Vec2,
    pub z: Vec2,
    pub y: Vec2,
    pub c: f64,
}

impl Core {
    fn slope(&self, t: f64) -> Result<Vec2, BarrierError> {
        match &self.slopes {
            Slopes::Rotating => Ok(Vec2::new(t.cos(), t.sin())),
            Slopes::Certified { opts, q_o } => {
                let (m, _) = certify_slice(&self.data, &self.dom, &self.x_o, t, opts)?;
                Ok(m + self.nu * *q_o)
            }
        }
    }

    fn frame(&self, t: f64) -> Result<Frame, BarrierError> {
        let w = self.slope(t)?;
        if self.explicit {
            let a = 2.0 / self.alpha;
            let y = Vec2::new(a * (1.0 - t.cos()), -a * t.sin());
            let c = self.alpha / 4.0 + 1.0 + a * (1.0 - t.cos());
            return Ok(Frame { t, w, z: self.x_o - y, y, c });
        }
        let z = self.f.grad(&(w + self.nu * self.lambda)) * (N / self.alpha);
        let y = self.x_o - z;
        let c = scaled_conjugate(&self.f, self.alpha, &z)? - self.data.value(&self.x_o, t);
        Ok(Frame { t, w, z, y, c })
    }

    fn value(&self, fr: &Frame, x: &Point) -> Result<f64, BarrierError> {
        Ok(scaled_conjugate(&self.f, self.alpha, &(x - fr.y))? - fr.c)
    }

    fn grad(&self, fr: &Frame, x: &Point) -> Result<Vec2, BarrierError> {
        Ok(grad_conjugate(&self.f, &((x - fr.y) * (self.alpha / N)))?)
    }

    fn dt(&self, fr: &Frame, x: &Point) -> Result<f64, BarrierError> {
        if self.explicit {
            let t = fr.t;
            let a = 2.0 / self.alpha;
            let y_dot = Vec2::new(a * t.sin(), -a * t.cos());
            let c_dot = a * t.sin();
            return Ok(-(self.alpha / 2.0) * (x - fr.y).dot(&y_dot) - c_dot);
        }
        let delta = 1e-5 * self.data.horizon().max(1.0);
        let (t0, t1) = if fr.t >= delta { (fr.t - delta, fr.t + delta) } else { (fr.t, fr.t + delta) };
        let v0 = self.value(&self.frame(t0)?, x)?;
        let v1 = self.value(&self.frame(t1)?, x)?;
        Ok((v1 - v0) / (t1 - t0))
    }

    /// `div ∇f(∇v)` by central differences with step `1e-3·diam`.
    fn divergence(&self, fr: &Frame, x: &Point) -> Result<f64, BarrierError> {
        let step = 1e-3 * self.dom.diam();
        let mut div = 0.0;
        for j in 0..2 {
            let mut e = Vec2::zeros();
            e[j] = step;
            let fp = self.f.grad(&self.grad(fr, &(x + e))?);
            let fm = self.f.grad(&self.grad(fr, &(x - e))?);
            div += (fp[j] - fm[j]) / (2.0 * step);
        }
        Ok(div)
    }

    /// `v(x,t) − g(x_o,t) − w̃(t)·(x − x_o)`; non-positive exactly on `Ω̃_t`.
    fn defining(&self, fr: &Frame, x: &Point) -> Result<f64, BarrierError> {
        Ok(self.value(fr, x)? - self.data.value(&self.x_o, fr.t) - fr.w.dot(&(x - self.x_o)))
    }
}

/// Sweeps `M`, `Γ`, `ρ₀` and `λ` for a lower barrier with `α > 0`.
fn select_lower(
    f: &ConvexIntegrand,
    dom: &ConvexDomain,
    data: &BoundaryDatum,
    x_o: &Point,
    nu: &Vec2,
    q_o: f64,
    q1: f64,
    alpha: f64,
    opts: &SearchOptions,
) -> Result<BarrierParams, BarrierError> {
    let mut f = f.clone();
    let r = match f.smoothness_radius() {
        Some(r) => r,
        None => conjugate_growth_report(&mut f)?.smoothness_radius_r,
    };
    let eps = f.epsilon();
    let big_r = dom.uniform_convexity_radius();
    let dirs = directions(opts.directions);
    let probe = |m: f64| -> Vec<f64> {
        [opts.margin, 1.0, 1.25, 1.5625, 2.0, 4.0, 8.0, 16.0].iter().map(|k| k * m).collect()
    };
    let sweep = |start: f64, name: &'static str, ok: &dyn Fn(f64) -> Result<bool, BarrierError>| {
        let mut cand = start;
        for _ in 0..opts.max_tries {
            if ok(cand)? {
                return Ok(cand);
            }
            cand *= opts.growth;
        }
        Err(BarrierError::SearchExhausted(name))
    };

    // |∇f*(η)| > R/ε + Q₁ outside B_M.
    let m = sweep((r + dom.diam()).max(1e-3), "M", &|m| {
        for rho in probe(m) {
            for d in &dirs {
                if grad_conjugate(&f, &(d * rho))?.norm() <= big_r / eps + q1 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    })?;

    // Γ = max over |x| ≤ M, |w| ≤ Q₁ of (n/α)f*((α/n)x) − w·x.
    let mut gamma = f64::NEG_INFINITY;
    for k in 0..=32 {
        let rho = m * k as f64 / 32.0;
        for d in &dirs {
            gamma = gamma.max(scaled_conjugate(&f, alpha, &(d * rho))? + q1 * rho);
        }
    }

    let core = Core {
        f: f.clone(),
        alpha,
        x_o: *x_o,
        nu: *nu,
        data: data.clone(),
        dom: dom.clone(),
        slopes: Slopes::Certified { opts: opts.certify, q_o },
        lambda: 0.0,
        explicit: false,
    };
    let slopes: Vec<Vec2> =
        sample_times(data.horizon(), opts.times).into_iter().map(|t| core.slope(t)).collect::<Result<_, _>>()?;

    // B(t, η) ≥ Γ outside B_ρ₀.
    let rho0 = sweep(m, "rho0", &|rho0| {
        for rho in probe(rho0).into_iter().filter(|&p| p >= m) {
            for d in &dirs {
                let base = scaled_conjugate(&f, alpha, &(d * rho))?;
                if slopes.iter().any(|w| base - w.dot(&(d * rho)) < gamma) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    })?;

    // λ > Q₁ + max{1, r} with |z_λ(t)| ≥ ρ₀.
    let lambda0 = q1 + r.max(1.0);
    let lambda = sweep(lambda0 * opts.growth, "lambda", &|lambda| {
        Ok(slopes.iter().all(|w| (f.grad(&(w + nu * lambda)) * (N / alpha)).norm() >= rho0))
    })?;
    Ok(BarrierParams { m, gamma, rho0, lambda, r, q1 })
}

/// A built barrier; immutable once constructed.
#[derive(Debug, Clone)]
pub struct Barrier {
    sign: BarrierSign,
    alpha: f64,
    alpha_min: f64,
    core: Core,
    params: Option<BarrierParams>,
}

impl Barrier {
    /// The explicit lower barrier for `f = ½|ξ|²` on the unit disk with data
    /// `x₁cos t + x₂sin t` at `x_o = (−1, 0)`:
    /// `y(t) = (2/α)(1 − cos t, −sin t)`, `c(t) = α/4 + 1 + (2/α)(1 − cos t)`.
    pub fn rotating_example(alpha: f64, horizon: f64) -> Result<Self, BarrierError> {
        if !(alpha > 0.0) {
            return Err(BarrierError::ZeroAlpha);
        }
        let dom = ConvexDomain::unit_disk();
        let data = BoundaryDatum::new(Arc::new(RotatingAffine::unit()), horizon, &dom);
        let core = Core {
            f: ConvexIntegrand::quadratic(1.0),
            alpha,
            x_o: Point::new(-1.0, 0.0),
            nu: Vec2::new(-1.0, 0.0),
            data,
            dom,
            slopes: Slopes::Rotating,
            lambda: alpha / 2.0 + 1.0,
            explicit: true,
        };
        Ok(Self { sign: BarrierSign::Lower, alpha, alpha_min: 1.0, core, params: None })
    }

    pub fn sign(&self) -> BarrierSign {
        self.sign
    }

    /// Signed `α`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `α₀` for general constructions; `1` for the explicit example.
    pub fn alpha_min(&self) -> f64 {
        self.alpha_min
    }

    pub fn x_o(&self) -> Point {
        self.core.x_o
    }

    pub fn lambda(&self) -> f64 {
        self.core.lambda
    }

    pub fn params(&self) -> Option<&BarrierParams> {
        self.params.as_ref()
    }

    pub fn is_explicit(&self) -> bool {
        self.core.explicit
    }

    pub fn integrand(&self) -> &ConvexIntegrand {
        &self.core.f
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.core.dom
    }

    /// The datum the barrier is built for (not negated).
    pub fn data_value(&self, x: &Point, t: f64) -> f64 {
        self.sign.factor() * self.core.data.value(x, t)
    }

    pub fn horizon(&self) -> f64 {
        self.core.data.horizon()
    }

    /// Frame of the underlying lower construction; for upper barriers this is the
    /// frame of the lower barrier of `−g`.
    pub fn frame(&self, t: f64) -> Result<Frame, BarrierError> {
        self.core.frame(t)
    }

    /// `y(t)`; for upper barriers `v = (n/α)f*((α/n)(x − y)) − c` holds with
    /// the returned `y` and `c` negated.
    pub fn y(&self, t: f64) -> Result<Vec2, BarrierError> {
        Ok(self.core.frame(t)?.y)
    }

    pub fn c(&self, t: f64) -> Result<f64, BarrierError> {
        Ok(self.sign.factor() * self.core.frame(t)?.c)
    }

    pub fn z_lambda(&self, t: f64) -> Result<Vec2, BarrierError> {
        Ok(self.core.frame(t)?.z)
    }

    pub fn eval(&self, x: &Point, t: f64) -> Result<f64, BarrierError> {
        let fr = self.core.frame(t)?;
        Ok(self.sign.factor() * self.core.value(&fr, x)?)
    }

    pub fn grad(&self, x: &Point, t: f64) -> Result<Vec2, BarrierError> {
        let fr = self.core.frame(t)?;
        Ok(self.core.grad(&fr, x)? * self.sign.factor())
    }

    pub fn dt(&self, x: &Point, t: f64) -> Result<f64, BarrierError> {
        let fr = self.core.frame(t)?;
        Ok(self.sign.factor() * self.core.dt(&fr, x)?)
    }

    /// Defining function of `Ω̃_t`, signed so that the set is `{≤ 0}`.
    pub fn sublevel_function(&self, x: &Point, t: f64) -> Result<f64, BarrierError> {
        let fr = self.core.frame(t)?;
        self.core.defining(&fr, x)
    }

    /// Gradient bound `|α| diam/(εn) + λ + Q₁`; `2 + α/2` for the explicit example.
    pub fn lipschitz_budget(&self) -> f64 {
        if self.core.explicit {
            return 2.0 + self.alpha.abs() / 2.0;
        }
        let q1 = self.params.map_or(0.0, |p| p.q1);
        self.alpha.abs() * self.core.dom.diam() / (self.core.f.epsilon() * N) + self.core.lambda + q1
    }
}

/// Parameters `M, Γ, ρ₀, λ` for the given certificate and `|α|`.
pub fn select_parameters(
    f: &ConvexIntegrand,
    dom: &ConvexDomain,
    data: &BoundaryDatum,
    cert: &SlopeCertificate,
    alpha: f64,
) -> Result<BarrierParams, BarrierError> {
    select_parameters_with(f, dom, data, cert, alpha, &SearchOptions::default())
}

pub fn select_parameters_with(
    f: &ConvexIntegrand,
    dom: &ConvexDomain,
    data: &BoundaryDatum,
    cert: &SlopeCertificate,
    alpha: f64,
    opts: &SearchOptions,
) -> Result<BarrierParams, BarrierError> {
    if alpha == 0.0 {
        return Err(BarrierError::ZeroAlpha);
    }
    let q_o = cert.widening.as_ref().map_or(0.0, |w| w.q_o);
    let (data, cert) = oriented(data, cert, alpha);
    select_lower(f, dom, &data, &cert.x_o, &cert.nu, q_o, cert.q1(), alpha.abs(), opts)
}

/// Data and certificate seen by the lower construction: negated for `α < 0`.
fn oriented(data: &BoundaryDatum, cert: &SlopeCertificate, alpha: f64) -> (BoundaryDatum, SlopeCertificate) {
    if alpha > 0.0 {
        return (data.clone(), cert.clone());
    }
    let neg = Affinely { inner: data.datum().clone(), scale: -1.0, shift: 0.0 };
    (BoundaryDatum::with_bounds(Arc::new(neg), data.horizon(), *data.bounds()), cert.negated())
}

/// Builds the barrier at `cert.x_o`: lower for `α > 0`, upper for `α < 0`.
pub fn build(
    f: &ConvexIntegrand,
    dom: &ConvexDomain,
    data: &BoundaryDatum,
    cert: &SlopeCertificate,
    alpha: f64,
) -> Result<Barrier, BarrierError> {
    build_with(f, dom, data, cert, alpha, &SearchOptions::default())
}

pub fn build_with(
    f: &ConvexIntegrand,
    dom: &ConvexDomain,
    data: &BoundaryDatum,
    cert: &SlopeCertificate,
    alpha: f64,
    opts: &SearchOptions,
) -> Result<Barrier, BarrierError> {
    if alpha < 0.0 && !f.is_even() {
        return Err(BarrierError::OddIntegrand);
    }
    let params = select_parameters_with(f, dom, data, cert, alpha, opts)?;
    let q_o = cert.widening.as_ref().map_or(0.0, |w| w.q_o);
    let (odata, ocert) = oriented(data, cert, alpha);
    let mut f = f.clone();
    f.set_smoothness_radius(params.r);
    let core = Core {
        f: f.clone(),
        alpha: alpha.abs(),
        x_o: ocert.x_o,
        nu: ocert.nu,
        data: odata,
        dom: dom.clone(),
        slopes: Slopes::Certified { opts: opts.certify, q_o },
        lambda: params.lambda,
        explicit: false,
    };
    let sign = if alpha > 0.0 { BarrierSign::Lower } else { BarrierSign::Upper };
    Ok(Barrier { sign, alpha, alpha_min: alpha_min(&f, dom, data, cert), core, params: Some(params) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierReport {
    /// `max_t |v(x_o,t) − g(x_o,t)|`.
    pub pin_err: f64,
    /// `max sign·(v − g)` over samples of `Ω̄ × [0,T)`.
    pub ordering_viol: f64,
    /// `max sign·(∂ₜv − div∇f(∇v))`.
    pub subsol_viol: f64,
    /// `max |∇v|`.
    pub lip_const: f64,
    pub lip_budget: f64,
    /// `max |div∇f(∇v) − α|`.
    pub divergence_err: f64,
    /// `max |∂ₜv|`.
    pub dt_sup: f64,
}

/// Samples the barrier claims on `space_samples` points of `Ω̄` (a quarter on
/// `∂Ω`) and `time_samples` times `kT/time_samples`.
pub fn verify(b: &Barrier, space_samples: usize, time_samples: usize) -> Result<BarrierReport, BarrierError> {
    let core = &b.core;
    let n_bdry = (space_samples / 4).max(1);
    let pts = core.dom.closure_samples(space_samples.saturating_sub(n_bdry), n_bdry);
    let mut rep = BarrierReport {
        pin_err: 0.0,
        ordering_viol: f64::NEG_INFINITY,
        subsol_viol: f64::NEG_INFINITY,
        lip_const: 0.0,
        lip_budget: b.lipschitz_budget(),
        divergence_err: 0.0,
        dt_sup: 0.0,
    };
    for t in sample_times(core.data.horizon(), time_samples) {
        let fr = core.frame(t)?;
        // Everything is evaluated on the lower core; signs cancel in the differences.
        rep.pin_err = rep.pin_err.max((core.value(&fr, &core.x_o)? - core.data.value(&core.x_o, t)).abs());
        for x in &pts {
            let v = core.value(&fr, x)?;
            rep.ordering_viol = rep.ordering_viol.max(v - core.data.value(x, t));
            let dt = core.dt(&fr, x)?;
            let div = core.divergence(&fr, x)?;
            rep.subsol_viol = rep.subsol_viol.max(dt - div);
            rep.divergence_err = rep.divergence_err.max((div - core.alpha).abs());
            rep.lip_const = rep.lip_const.max(core.grad(&fr, x)?.norm());
            rep.dt_sup = rep.dt_sup.max(dt.abs());
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SublevelReport {
    /// `|defining function at x_o|`.
    pub x_o_gap: f64,
    pub x_o_on_boundary: bool,
    /// Largest defining-function value over samples of `Ω̄`.
    pub worst: f64,
    pub omega_contained: bool,
    pub witness: Point,
}

/// Checks `x_o ∈ ∂Ω̃_t` and `Ω̄ ⊂ Ω̃_t` on samples.
pub fn sublevel_geometry(b: &Barrier, t: f64, boundary_samples: usize) -> Result<SublevelReport, BarrierError> {
    let core = &b.core;
    let fr = core.frame(t)?;
    let x_o_gap = core.defining(&fr, &core.x_o)?.abs();
    let mut worst = f64::NEG_INFINITY;
    let mut witness = core.x_o;
    for x in core.dom.closure_samples(boundary_samples, boundary_samples) {
        if (x - core.x_o).norm() < 1e-12 {
            continue;
        }
        let d = core.defining(&fr, &x)?;
        if d > worst {
            worst = d;
            witness = x;
        }
    }
    Ok(SublevelReport {
        x_o_gap,
        x_o_on_boundary: x_o_gap <= 1e-10,
        worst,
        omega_contained: worst <= 1e-10,
        witness,
    })
}

/// Points of `∂Ω̃_t` by bisection along rays from the domain center.
pub fn sublevel_boundary(b: &Barrier, t: f64, samples: usize) -> Result<Vec<Point>, BarrierError> {
    let core = &b.core;
    let fr = core.frame(t)?;
    let center = core.dom.center();
    let mut out = Vec::with_capacity(samples);
    for d in directions(samples) {
        let (mut lo, mut hi) = (0.0, core.dom.diam().max(1.0));
        while core.defining(&fr, &(center + d * hi))? <= 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e12 {
                return Err(BarrierError::SearchExhausted("sublevel boundary"));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if core.defining(&fr, &(center + d * mid))? <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        out.push(center + d * (0.5 * (lo + hi)));
    }
    Ok(out)
}

/// Largest `R·κ` over sampled points of `∂Ω̃_t`, with `κ` the curvature of the
/// level set of the defining function. Values `≤ 1` mean the enclosing ball of
/// radius `R` fits inside `Ω̃_t` locally.
pub fn curvature_check(b: &Barrier, t: f64, samples: usize) -> Result<f64, BarrierError> {
    let core = &b.core;
    let fr = core.frame(t)?;
    let big_r = core.dom.uniform_convexity_radius();
    let scale = core.alpha / N;
    let mut worst: f64 = 0.0;
    for x in sublevel_boundary(b, t, samples)? {
        let eta = (x - fr.y) * scale;
        let normal = grad_conjugate(&core.f, &eta)? - fr.w;
        let hess = match (core.f.kind(), core.f.closed_form_grad_conjugate(&eta)) {
            (IntegrandKind::Quadratic { scale: a }, Some(_)) => crate::Mat2::identity() / a,
            _ => hess_conjugate_fd(&core.f, &eta, 1e-5 * eta.norm().max(1.0))?,
        };
        let tangent = Vec2::new(-normal.y, normal.x).normalize();
        let kappa = scale * tangent.dot(&(hess * tangent)) / normal.norm();
        worst = worst.max(kappa * big_r);
    }
    Ok(worst)
}

/// `θ x₁ x₂ g v` on `∂Ω` at time `t`.
pub fn boundary_trace(b: &Barrier, t: f64, samples: usize) -> Result<Table, BarrierError> {
    let mut table = Table::whitespace(["theta", "x1", "x2", "g", "v"]);
    for k in 0..samples {
        let th = 2.0 * PI * k as f64 / samples as f64;
        let x = b.core.dom.boundary_point(th);
        table.push_numbers(&[th, x.x, x.y, b.data_value(&x, t), b.eval(&x, t)?]);
    }
    Ok(table)
}

/// `θ x₁ x₂ v` on `∂Ω̃_t`, `θ` the ray angle from the domain center.
pub fn sublevel_trace(b: &Barrier, t: f64, samples: usize) -> Result<Table, BarrierError> {
    let mut table = Table::whitespace(["theta", "x1", "x2", "v"]);
    for (k, x) in sublevel_boundary(b, t, samples)?.into_iter().enumerate() {
        let th = 2.0 * PI * k as f64 / samples as f64;
        table.push_numbers(&[th, x.x, x.y, b.eval(&x, t)?]);
    }
    Ok(table)
}

/// `x₁ x₂ v` on a uniform grid restricted to `Ω̃_t`.
pub fn field_table(b: &Barrier, t: f64, grid: usize) -> Result<Table, BarrierError> {
    let pts = sublevel_boundary(b, t, 64)?;
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in &pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let fr = b.core.frame(t)?;
    let mut table = Table::whitespace(["x1", "x2", "v"]);
    let g = grid.max(2);
    for i in 0..g {
        for j in 0..g {
            let x = Point::new(
                lo.x + (hi.x - lo.x) * i as f64 / (g - 1) as f64,
                lo.y + (hi.y - lo.y) * j as f64 / (g - 1) as f64,
            );
            if b.core.defining(&fr, &x)? <= 0.0 {
                table.push_numbers(&[x.x, x.y, b.sign.factor() * b.core.value(&fr, &x)?]);
            }
        }
    }
    Ok(table)
}
