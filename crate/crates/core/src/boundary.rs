//! Time-dependent Dirichlet data, bounded slope certificates and exponential
//! time smoothing of the data.
//!
//! A datum `g` satisfies the time-dependent bounded slope condition at a
//! boundary point `x_o` when for every `t` there are slopes `w⁻(t)`, `w⁺(t)`
//! with `g(x_o,t) + w⁻(t)·(x−x_o) ≤ g(x,t) ≤ g(x_o,t) + w⁺(t)·(x−x_o)` for all
//! boundary points `x`. [`certify_tbsc`] finds sampled representatives,
//! [`widen_slopes`] extends the bounds to the whole closure of the domain.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, SVector, Vector1};
use thiserror::Error;

use crate::geometry::{ConvexDomain, Mesh};
use crate::quadrature::GaussRule;
use crate::table::{num, Table};
use crate::{Field, Point, Vec2};

const FD_STEP: f64 = 1e-6;

/// Soundness tolerance of the sampled affine bounds.
pub const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("no {side} supporting slope at t = {time} within the slope cap")]
    Infeasible { time: f64, side: Side },
    #[error("widened {side} bound violated by {violation:e} at x = ({}, {}), t = {time}", point[0], point[1])]
    WideningInsufficient { time: f64, point: [f64; 2], violation: f64, side: Side },
    #[error("x_o = ({}, {}) is not on the domain boundary", .0[0], .0[1])]
    NotOnBoundary([f64; 2]),
}

/// A scalar function on `ℝ² × [0, T]`. Derivatives default to central differences.
pub trait TimeDatum: Send + Sync + fmt::Debug {
    fn value(&self, x: &Point, t: f64) -> f64;

    fn time_derivative(&self, x: &Point, t: f64) -> f64 {
        (self.value(x, t + FD_STEP) - self.value(x, t - FD_STEP)) / (2.0 * FD_STEP)
    }

    fn gradient(&self, x: &Point, t: f64) -> Vec2 {
        let ex = Vec2::new(FD_STEP, 0.0);
        let ey = Vec2::new(0.0, FD_STEP);
        Vec2::new(
            self.value(&(x + ex), t) - self.value(&(x - ex), t),
            self.value(&(x + ey), t) - self.value(&(x - ey), t),
        ) / (2.0 * FD_STEP)
    }

    /// `∂ₜ∇g`.
    fn time_derivative_gradient(&self, x: &Point, t: f64) -> Vec2 {
        (self.gradient(x, t + FD_STEP) - self.gradient(x, t - FD_STEP)) / (2.0 * FD_STEP)
    }

    /// Exact sup-bounds over `Ω̄ × [0, T]` when known in closed form.
    fn exact_bounds(&self, _dom: &ConvexDomain, _horizon: f64) -> Option<DataBounds> {
        None
    }

    fn name(&self) -> String;
}

/// `amplitude·(x₁cos ωt + x₂sin ωt)`: an affine datum whose slope rotates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingAffine {
    pub amplitude: f64,
    pub omega: f64,
}

impl RotatingAffine {
    pub fn unit() -> Self {
        Self { amplitude: 1.0, omega: 1.0 }
    }

    pub fn slope(&self, t: f64) -> Vec2 {
        let wt = self.omega * t;
        Vec2::new(wt.cos(), wt.sin()) * self.amplitude
    }
}

impl TimeDatum for RotatingAffine {
    fn value(&self, x: &Point, t: f64) -> f64 {
        self.slope(t).dot(x)
    }
    fn time_derivative(&self, x: &Point, t: f64) -> f64 {
        self.time_derivative_gradient(x, t).dot(x)
    }
    fn gradient(&self, _x: &Point, t: f64) -> Vec2 {
        self.slope(t)
    }
    fn time_derivative_gradient(&self, _x: &Point, t: f64) -> Vec2 {
        let wt = self.omega * t;
        Vec2::new(-wt.sin(), wt.cos()) * (self.amplitude * self.omega)
    }
    fn exact_bounds(&self, dom: &ConvexDomain, _horizon: f64) -> Option<DataBounds> {
        let a = self.amplitude.abs();
        let r = dom.max_norm();
        Some(DataBounds {
            grad_sup: a,
            grad_initial_sup: a,
            dt_sup: a * self.omega.abs() * r,
            dt_grad_sup: a * self.omega.abs(),
            value_sup: a * r,
        })
    }
    fn name(&self) -> String {
        "rotating_affine".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub value: f64,
}

impl TimeDatum for Constant {
    fn value(&self, _x: &Point, _t: f64) -> f64 {
        self.value
    }
    fn time_derivative(&self, _x: &Point, _t: f64) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &Point, _t: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn time_derivative_gradient(&self, _x: &Point, _t: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn exact_bounds(&self, _dom: &ConvexDomain, _horizon: f64) -> Option<DataBounds> {
        Some(DataBounds { value_sup: self.value.abs(), ..DataBounds::zero() })
    }
    fn name(&self) -> String {
        "constant".into()
    }
}

/// `slope·x + offset`, constant in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryAffine {
    pub slope: Vec2,
    pub offset: f64,
}

impl TimeDatum for StationaryAffine {
    fn value(&self, x: &Point, _t: f64) -> f64 {
        self.slope.dot(x) + self.offset
    }
    fn time_derivative(&self, _x: &Point, _t: f64) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &Point, _t: f64) -> Vec2 {
        self.slope
    }
    fn time_derivative_gradient(&self, _x: &Point, _t: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn exact_bounds(&self, dom: &ConvexDomain, _horizon: f64) -> Option<DataBounds> {
        let s = self.slope.norm();
        Some(DataBounds {
            grad_sup: s,
            grad_initial_sup: s,
            value_sup: s * dom.max_norm() + self.offset.abs(),
            ..DataBounds::zero()
        })
    }
    fn name(&self) -> String {
        "stationary_affine".into()
    }
}

/// `rate·t`, spatially constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearInTime {
    pub rate: f64,
}

impl TimeDatum for LinearInTime {
    fn value(&self, _x: &Point, t: f64) -> f64 {
        self.rate * t
    }
    fn time_derivative(&self, _x: &Point, _t: f64) -> f64 {
        self.rate
    }
    fn gradient(&self, _x: &Point, _t: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn time_derivative_gradient(&self, _x: &Point, _t: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn exact_bounds(&self, _dom: &ConvexDomain, horizon: f64) -> Option<DataBounds> {
        Some(DataBounds {
            dt_sup: self.rate.abs(),
            value_sup: self.rate.abs() * horizon,
            ..DataBounds::zero()
        })
    }
    fn name(&self) -> String {
        "linear_in_time".into()
    }
}

/// One term `(re·Re zᵏ + im·Im zᵏ)·cos(ωt + φ)` with `z = x₁ + i x₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierTerm {
    pub k: u32,
    pub omega: f64,
    pub phase: f64,
    pub re: f64,
    pub im: f64,
}

/// Truncated series of harmonic polynomials modulated in time. On the unit
/// circle `Re zᵏ = cos kθ`, so the coefficients are the Fourier coefficients in `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fourier {
    pub terms: Vec<FourierTerm>,
}

fn complex_pow(x: &Point, k: u32) -> (f64, f64) {
    let (mut re, mut im) = (1.0, 0.0);
    for _ in 0..k {
        (re, im) = (re * x.x - im * x.y, re * x.y + im * x.x);
    }
    (re, im)
}

impl Fourier {
    fn spatial(term: &FourierTerm, x: &Point) -> (f64, Vec2) {
        let (re, im) = complex_pow(x, term.k);
        let value = term.re * re + term.im * im;
        if term.k == 0 {
            return (value, Vec2::zeros());
        }
        let (re1, im1) = complex_pow(x, term.k - 1);
        let k = term.k as f64;
        // ∂ₓ zᵏ = k zᵏ⁻¹, ∂ᵧ zᵏ = i k zᵏ⁻¹
        let grad_re = Vec2::new(k * re1, -k * im1);
        let grad_im = Vec2::new(k * im1, k * re1);
        (value, grad_re * term.re + grad_im * term.im)
    }
}

impl TimeDatum for Fourier {
    fn value(&self, x: &Point, t: f64) -> f64 {
        self.terms.iter().map(|tm| Self::spatial(tm, x).0 * (tm.omega * t + tm.phase).cos()).sum()
    }
    fn time_derivative(&self, x: &Point, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|tm| -tm.omega * Self::spatial(tm, x).0 * (tm.omega * t + tm.phase).sin())
            .sum()
    }
    fn gradient(&self, x: &Point, t: f64) -> Vec2 {
        self.terms.iter().map(|tm| Self::spatial(tm, x).1 * (tm.omega * t + tm.phase).cos()).sum()
    }
    fn time_derivative_gradient(&self, x: &Point, t: f64) -> Vec2 {
        self.terms
            .iter()
            .map(|tm| Self::spatial(tm, x).1 * (-tm.omega * (tm.omega * t + tm.phase).sin()))
            .sum()
    }
    fn name(&self) -> String {
        "fourier".into()
    }
}

/// `offset + scale·|x − center|²`, constant in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Paraboloid {
    pub center: Point,
    pub scale: f64,
    pub offset: f64,
}

impl TimeDatum for Paraboloid {
    fn value(&self, x: &Point, _t: f64) -> f64 {
        self.offset + self.scale * (x - self.center).norm_squared()
    }
    fn time_derivative(&self, _x: &Point, _t: f64) -> f64 {
        0.0
    }
    fn gradient(&self, x: &Point, _t: f64) -> Vec2 {
        (x - self.center) * (2.0 * self.scale)
    }
    fn time_derivative_gradient(&self, _x: &Point, _t: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn name(&self) -> String {
        "paraboloid".into()
    }
}

/// `upper` for `x₂ ≥ 0`, `lower` otherwise. Discontinuous, so it has no
/// bounded slopes where the jump meets the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub upper: f64,
    pub lower: f64,
}

impl TimeDatum for Step {
    fn value(&self, x: &Point, _t: f64) -> f64 {
        if x.y >= 0.0 {
            self.upper
        } else {
            self.lower
        }
    }
    fn time_derivative(&self, _x: &Point, _t: f64) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &Point, _t: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn time_derivative_gradient(&self, _x: &Point, _t: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn name(&self) -> String {
        "step".into()
    }
}

/// `scale·g + shift`.
#[derive(Debug, Clone)]
pub struct Affinely {
    pub inner: Arc<dyn TimeDatum>,
    pub scale: f64,
    pub shift: f64,
}

impl TimeDatum for Affinely {
    fn value(&self, x: &Point, t: f64) -> f64 {
        self.scale * self.inner.value(x, t) + self.shift
    }
    fn time_derivative(&self, x: &Point, t: f64) -> f64 {
        self.scale * self.inner.time_derivative(x, t)
    }
    fn gradient(&self, x: &Point, t: f64) -> Vec2 {
        self.inner.gradient(x, t) * self.scale
    }
    fn time_derivative_gradient(&self, x: &Point, t: f64) -> Vec2 {
        self.inner.time_derivative_gradient(x, t) * self.scale
    }
    fn exact_bounds(&self, dom: &ConvexDomain, horizon: f64) -> Option<DataBounds> {
        let b = self.inner.exact_bounds(dom, horizon)?;
        let s = self.scale.abs();
        Some(DataBounds {
            grad_sup: s * b.grad_sup,
            grad_initial_sup: s * b.grad_initial_sup,
            dt_sup: s * b.dt_sup,
            dt_grad_sup: s * b.dt_grad_sup,
            value_sup: s * b.value_sup + self.shift.abs(),
        })
    }
    fn name(&self) -> String {
        format!("{}*{}+{}", self.scale, self.inner.name(), self.shift)
    }
}

/// `g(x, t_frozen)` for every `t`.
#[derive(Debug, Clone)]
pub struct Frozen {
    pub inner: Arc<dyn TimeDatum>,
    pub at: f64,
}

impl TimeDatum for Frozen {
    fn value(&self, x: &Point, _t: f64) -> f64 {
        self.inner.value(x, self.at)
    }
    fn time_derivative(&self, _x: &Point, _t: f64) -> f64 {
        0.0
    }
    fn gradient(&self, x: &Point, _t: f64) -> Vec2 {
        self.inner.gradient(x, self.at)
    }
    fn time_derivative_gradient(&self, _x: &Point, _t: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn name(&self) -> String {
        format!("frozen({})", self.inner.name())
    }
}

/// `e^{−t/h}g_o + (1/h)∫₀ᵗ e^{(s−t)/h}g(s) ds`, evaluated by composite Gauss–Legendre.
#[derive(Debug, Clone)]
pub struct TimeSmoothed {
    pub inner: Arc<dyn TimeDatum>,
    pub h: f64,
    rule: GaussRule,
}

impl TimeSmoothed {
    pub fn new(inner: Arc<dyn TimeDatum>, h: f64) -> Self {
        assert!(h > 0.0, "smoothing scale must be positive");
        Self { inner, h, rule: GaussRule::new(8) }
    }

    fn smooth<const D: usize>(
        &self,
        t: f64,
        initial: SVector<f64, D>,
        mut at: impl FnMut(f64) -> SVector<f64, D>,
    ) -> SVector<f64, D> {
        if t <= 0.0 {
            return initial;
        }
        let panels = 8 * (t / self.h).ceil() as usize;
        let width = t / panels as f64;
        let mut acc = SVector::<f64, D>::zeros();
        for p in 0..panels {
            let lo = p as f64 * width;
            for (s, w) in self.rule.on(lo, lo + width) {
                acc += at(s) * (w * ((s - t) / self.h).exp());
            }
        }
        initial * (-t / self.h).exp() + acc / self.h
    }
}

impl TimeDatum for TimeSmoothed {
    fn value(&self, x: &Point, t: f64) -> f64 {
        let v = |s: f64| Vector1::new(self.inner.value(x, s));
        self.smooth(t, v(0.0), v).x
    }
    /// `∂ₜg_h = (g − g_h)/h`.
    fn time_derivative(&self, x: &Point, t: f64) -> f64 {
        (self.inner.value(x, t) - self.value(x, t)) / self.h
    }
    fn gradient(&self, x: &Point, t: f64) -> Vec2 {
        self.smooth(t, self.inner.gradient(x, 0.0), |s| self.inner.gradient(x, s))
    }
    fn time_derivative_gradient(&self, x: &Point, t: f64) -> Vec2 {
        (self.inner.gradient(x, t) - self.gradient(x, t)) / self.h
    }
    fn name(&self) -> String {
        format!("smoothed({}, h={})", self.inner.name(), self.h)
    }
}

/// Sup-norm bounds of a datum over `Ω̄ × [0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataBounds {
    /// `‖∇g‖∞`.
    pub grad_sup: f64,
    /// `‖∇g_o‖∞`.
    pub grad_initial_sup: f64,
    /// `‖∂ₜg‖∞`.
    pub dt_sup: f64,
    /// `‖∂ₜ∇g‖∞`.
    pub dt_grad_sup: f64,
    /// `‖g‖∞`.
    pub value_sup: f64,
}

impl DataBounds {
    pub fn zero() -> Self {
        Self { grad_sup: 0.0, grad_initial_sup: 0.0, dt_sup: 0.0, dt_grad_sup: 0.0, value_sup: 0.0 }
    }

    /// Sampled bounds over `closure_samples × time grid`.
    pub fn sampled(datum: &dyn TimeDatum, dom: &ConvexDomain, horizon: f64) -> Self {
        let pts = dom.closure_samples(300, 96);
        let times: Vec<f64> = (0..=32).map(|k| horizon * k as f64 / 32.0).collect();
        let mut b = Self::zero();
        for p in &pts {
            b.grad_initial_sup = b.grad_initial_sup.max(datum.gradient(p, 0.0).norm());
            for &t in &times {
                b.grad_sup = b.grad_sup.max(datum.gradient(p, t).norm());
                b.dt_sup = b.dt_sup.max(datum.time_derivative(p, t).abs());
                b.dt_grad_sup = b.dt_grad_sup.max(datum.time_derivative_gradient(p, t).norm());
                b.value_sup = b.value_sup.max(datum.value(p, t).abs());
            }
        }
        b
    }
}

/// A datum together with its horizon `T` and sup-norm bounds.
#[derive(Debug, Clone)]
pub struct BoundaryDatum {
    datum: Arc<dyn TimeDatum>,
    horizon: f64,
    bounds: DataBounds,
}

impl BoundaryDatum {
    /// Uses closed-form bounds when the datum provides them, sampled ones otherwise.
    pub fn new(datum: Arc<dyn TimeDatum>, horizon: f64, dom: &ConvexDomain) -> Self {
        assert!(horizon > 0.0, "horizon must be positive");
        let bounds = datum
            .exact_bounds(dom, horizon)
            .unwrap_or_else(|| DataBounds::sampled(datum.as_ref(), dom, horizon));
        Self { datum, horizon, bounds }
    }

    pub fn with_bounds(datum: Arc<dyn TimeDatum>, horizon: f64, bounds: DataBounds) -> Self {
        Self { datum, horizon, bounds }
    }

    pub fn datum(&self) -> &Arc<dyn TimeDatum> {
        &self.datum
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn bounds(&self) -> &DataBounds {
        &self.bounds
    }

    pub fn grad_sup(&self) -> f64 {
        self.bounds.grad_sup
    }

    pub fn dt_sup(&self) -> f64 {
        self.bounds.dt_sup
    }

    pub fn value(&self, x: &Point, t: f64) -> f64 {
        self.datum.value(x, t)
    }

    pub fn dt(&self, x: &Point, t: f64) -> f64 {
        self.datum.time_derivative(x, t)
    }

    pub fn grad(&self, x: &Point, t: f64) -> Vec2 {
        self.datum.gradient(x, t)
    }

    pub fn initial(&self, x: &Point) -> f64 {
        self.datum.value(x, 0.0)
    }

    /// Nodal interpolant of `g(·, t)`.
    pub fn slice(&self, mesh: &Mesh, t: f64) -> Field {
        mesh.interpolate(|p| self.datum.value(p, t))
    }

    /// Nodal interpolant of `∂ₜg(·, t)`.
    pub fn dt_slice(&self, mesh: &Mesh, t: f64) -> Field {
        mesh.interpolate(|p| self.datum.time_derivative(p, t))
    }

    pub fn name(&self) -> String {
        self.datum.name()
    }
}

/// Widened slopes valid on all of `Ω̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct Widening {
    /// Multiple of the outward normal added to the boundary slopes.
    pub q_o: f64,
    pub minus: Vec<Vec2>,
    pub plus: Vec<Vec2>,
    /// `Q + Q_o`.
    pub q1: f64,
}

/// Sampled slopes `w±(t)` at a boundary point, with their bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeCertificate {
    pub x_o: Point,
    /// Outward normal at `x_o`.
    pub nu: Vec2,
    pub times: Vec<f64>,
    pub w_minus: Vec<Vec2>,
    pub w_plus: Vec<Vec2>,
    /// `max_t |w±(t)|`.
    pub q: f64,
    /// Largest sampled difference quotient of `w±` in time.
    pub qdot: f64,
    pub widening: Option<Widening>,
}

fn interpolate_series(times: &[f64], values: &[Vec2], t: f64) -> Vec2 {
    let n = times.len();
    if n == 1 || t <= times[0] {
        return values[0];
    }
    if t >= times[n - 1] {
        return values[n - 1];
    }
    let k = times.partition_point(|&s| s <= t).min(n - 1).max(1);
    let (t0, t1) = (times[k - 1], times[k]);
    let s = (t - t0) / (t1 - t0);
    values[k - 1] * (1.0 - s) + values[k] * s
}

impl SlopeCertificate {
    /// `w⁻(t)`, linearly interpolated between sampled times.
    pub fn w_minus_at(&self, t: f64) -> Vec2 {
        interpolate_series(&self.times, &self.w_minus, t)
    }

    pub fn w_plus_at(&self, t: f64) -> Vec2 {
        interpolate_series(&self.times, &self.w_plus, t)
    }

    /// `w̃⁻(t)`; the boundary slope when no widening has been computed.
    pub fn widened_minus_at(&self, t: f64) -> Vec2 {
        match &self.widening {
            Some(w) => interpolate_series(&self.times, &w.minus, t),
            None => self.w_minus_at(t),
        }
    }

    pub fn widened_plus_at(&self, t: f64) -> Vec2 {
        match &self.widening {
            Some(w) => interpolate_series(&self.times, &w.plus, t),
            None => self.w_plus_at(t),
        }
    }

    /// `Q₁`, or `Q` when no widening has been computed.
    pub fn q1(&self) -> f64 {
        self.widening.as_ref().map_or(self.q, |w| w.q1)
    }

    /// Time table `t w⁻₁ w⁻₂ w⁺₁ w⁺₂ Q`.
    pub fn table(&self) -> Table {
        let mut t = Table::whitespace(["t", "wm1", "wm2", "wp1", "wp2", "Q"]);
        for (k, &time) in self.times.iter().enumerate() {
            let (m, p) = (self.w_minus[k], self.w_plus[k]);
            t.push_cells([num(time), num(m.x), num(m.y), num(p.x), num(p.y), num(self.q)]);
        }
        t
    }

    /// Mirror image for `−g`: lower and upper slopes swap and change sign.
    pub fn negated(&self) -> SlopeCertificate {
        let neg = |v: &Vec<Vec2>| v.iter().map(|w| -w).collect::<Vec<_>>();
        SlopeCertificate {
            x_o: self.x_o,
            nu: self.nu,
            times: self.times.clone(),
            w_minus: neg(&self.w_plus),
            w_plus: neg(&self.w_minus),
            q: self.q,
            qdot: self.qdot,
            widening: self.widening.as_ref().map(|w| Widening {
                q_o: w.q_o,
                minus: neg(&w.plus),
                plus: neg(&w.minus),
                q1: w.q1,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub time_samples: usize,
    pub boundary_samples: usize,
    /// Per-component cap on admissible slopes; larger slopes count as infeasible.
    pub max_slope: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { time_samples: 65, boundary_samples: 256, max_slope: 1e3 }
    }
}

/// Certifies the sampled time-dependent bounded slope condition at `x_o`.
///
/// Per time sample the admissible slopes form a convex polygon cut out by one
/// half-plane per boundary sample. Among them the slope closest to the
/// least-squares fit of the boundary data is returned, which recovers the
/// exact slope of affine data.
pub fn certify_tbsc(
    g: &BoundaryDatum,
    dom: &ConvexDomain,
    x_o: &Point,
    time_samples: usize,
    boundary_samples: usize,
) -> Result<SlopeCertificate, BoundaryError> {
    certify_tbsc_with(
        g,
        dom,
        x_o,
        &CertifyOptions { time_samples, boundary_samples, ..CertifyOptions::default() },
    )
}

pub fn certify_tbsc_with(
    g: &BoundaryDatum,
    dom: &ConvexDomain,
    x_o: &Point,
    opts: &CertifyOptions,
) -> Result<SlopeCertificate, BoundaryError> {
    let theta = dom.parameter_of(x_o);
    if (dom.boundary_point(theta) - x_o).norm() > 1e-9 * dom.diam() {
        return Err(BoundaryError::NotOnBoundary([x_o.x, x_o.y]));
    }
    let nu = dom.normal_at(x_o);
    let nt = opts.time_samples.max(2);
    let times: Vec<f64> = (0..nt).map(|k| g.horizon() * k as f64 / (nt - 1) as f64).collect();
    let offsets: Vec<Vec2> = dom
        .boundary_samples(opts.boundary_samples)
        .into_iter()
        .map(|(_, x, _)| x - x_o)
        .filter(|d| d.norm() > 1e-12)
        .collect();

    let mut w_minus = Vec::with_capacity(nt);
    let mut w_plus = Vec::with_capacity(nt);
    for &t in &times {
        let (m, p) = slice_slopes(g, x_o, &offsets, t, opts.max_slope)?;
        w_minus.push(m);
        w_plus.push(p);
    }
    let q = w_minus.iter().chain(&w_plus).map(|w| w.norm()).fold(0.0, f64::max);
    let qdot = [&w_minus, &w_plus]
        .iter()
        .flat_map(|ws| ws.windows(2).zip(times.windows(2)).map(|(w, t)| (w[1] - w[0]).norm() / (t[1] - t[0])))
        .fold(0.0, f64::max);
    Ok(SlopeCertificate { x_o: *x_o, nu, times, w_minus, w_plus, q, qdot, widening: None })
}

/// Lower and upper slopes `(w⁻(t), w⁺(t))` at a single time, chosen as in [`certify_tbsc_with`].
pub fn certify_slice(
    g: &BoundaryDatum,
    dom: &ConvexDomain,
    x_o: &Point,
    t: f64,
    opts: &CertifyOptions,
) -> Result<(Vec2, Vec2), BoundaryError> {
    let offsets: Vec<Vec2> = dom
        .boundary_samples(opts.boundary_samples)
        .into_iter()
        .map(|(_, x, _)| x - x_o)
        .filter(|d| d.norm() > 1e-12)
        .collect();
    slice_slopes(g, x_o, &offsets, t, opts.max_slope)
}

fn slice_slopes(
    g: &BoundaryDatum,
    x_o: &Point,
    offsets: &[Vec2],
    t: f64,
    max_slope: f64,
) -> Result<(Vec2, Vec2), BoundaryError> {
    let g0 = g.value(x_o, t);
    let rises: Vec<f64> = offsets.iter().map(|d| g.value(&(x_o + d), t) - g0).collect();
    let anchor = least_squares_slope(offsets, &rises);
    let lower: Vec<(Vec2, f64)> = offsets.iter().zip(&rises).map(|(d, r)| (*d, *r)).collect();
    let upper: Vec<(Vec2, f64)> = offsets.iter().zip(&rises).map(|(d, r)| (-d, -r)).collect();
    let m = closest_feasible(&lower, &anchor, max_slope).ok_or(BoundaryError::Infeasible { time: t, side: Side::Lower })?;
    let p = closest_feasible(&upper, &anchor, max_slope).ok_or(BoundaryError::Infeasible { time: t, side: Side::Upper })?;
    Ok((m, p))
}

/// Slope minimizing `Σ (rise_k − w·d_k)²`; zero when the offsets do not span the plane.
fn least_squares_slope(offsets: &[Vec2], rises: &[f64]) -> Vec2 {
    let mut normal = Matrix2::zeros();
    let mut rhs = Vec2::zeros();
    for (d, r) in offsets.iter().zip(rises) {
        normal += d * d.transpose();
        rhs += d * *r;
    }
    normal.try_inverse().map_or(Vec2::zeros(), |inv| inv * rhs)
}

/// Closest point to `anchor` in `{w : a·w ≤ b for (a, b)} ∩ [−cap, cap]²`.
fn closest_feasible(constraints: &[(Vec2, f64)], anchor: &Vec2, cap: f64) -> Option<Vec2> {
    let mut poly = vec![
        Vec2::new(-cap, -cap),
        Vec2::new(cap, -cap),
        Vec2::new(cap, cap),
        Vec2::new(-cap, cap),
    ];
    for (a, b) in constraints {
        let tol = 1e-12 * (1.0 + b.abs() + a.norm() * cap.min(1e3));
        poly = clip(&poly, a, *b, tol);
        if poly.is_empty() {
            return None;
        }
    }
    // A polygon touching the cap means the true slope set needs |w| beyond it.
    let cap_tol = cap * (1.0 - 1e-9);
    if poly.iter().all(|p| p.x.abs() >= cap_tol || p.y.abs() >= cap_tol) {
        return None;
    }
    if point_in_convex(&poly, anchor) {
        return Some(*anchor);
    }
    let n = poly.len();
    (0..n)
        .map(|k| closest_on_segment(&poly[k], &poly[(k + 1) % n], anchor))
        .min_by(|p, q| (p - anchor).norm().total_cmp(&(q - anchor).norm()))
}

/// Sutherland–Hodgman clip of a convex polygon by `a·w ≤ b + tol`.
fn clip(poly: &[Vec2], a: &Vec2, b: f64, tol: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        let fp = a.dot(&p) - b;
        let fq = a.dot(&q) - b;
        let p_in = fp <= tol;
        let q_in = fq <= tol;
        if p_in {
            out.push(p);
        }
        if p_in != q_in && (fp - fq).abs() > 0.0 {
            let s = fp / (fp - fq);
            out.push(p + (q - p) * s);
        }
    }
    out.dedup_by(|x, y| (*x - *y).norm() < 1e-15);
    out
}

fn point_in_convex(poly: &[Vec2], p: &Vec2) -> bool {
    let n = poly.len();
    if n < 3 {
        return n == 1 && (poly[0] - p).norm() < 1e-15;
    }
    let orient: f64 = (0..n)
        .map(|k| {
            let (a, b) = (poly[k], poly[(k + 1) % n]);
            a.x * b.y - a.y * b.x
        })
        .sum();
    (0..n).all(|k| {
        let (a, b) = (poly[k], poly[(k + 1) % n]);
        let e = b - a;
        let c = e.x * (p.y - a.y) - e.y * (p.x - a.x);
        c * orient.signum() >= -1e-14 * (1.0 + e.norm())
    })
}

fn closest_on_segment(a: &Vec2, b: &Vec2, p: &Vec2) -> Vec2 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    a + ab * ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
}

/// Largest violation of the certificate's affine bounds over boundary samples and its times.
pub fn certificate_violation(cert: &SlopeCertificate, g: &BoundaryDatum, dom: &ConvexDomain, samples: usize) -> f64 {
    let pts: Vec<Point> = dom.boundary_samples(samples).into_iter().map(|s| s.1).collect();
    bound_violation(&pts, &cert.times, cert.x_o, g, |k| (cert.w_minus[k], cert.w_plus[k])).0
}

fn bound_violation(
    pts: &[Point],
    times: &[f64],
    x_o: Point,
    g: &BoundaryDatum,
    slopes: impl Fn(usize) -> (Vec2, Vec2),
) -> (f64, Option<(f64, Point, Side)>) {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for (k, &t) in times.iter().enumerate() {
        let (wm, wp) = slopes(k);
        let g0 = g.value(&x_o, t);
        for x in pts {
            let d = x - x_o;
            let gx = g.value(x, t);
            let lower = g0 + wm.dot(&d) - gx;
            let upper = gx - g0 - wp.dot(&d);
            if lower > worst {
                worst = lower;
                at = Some((t, *x, Side::Lower));
            }
            if upper > worst {
                worst = upper;
                at = Some((t, *x, Side::Upper));
            }
        }
    }
    (worst, at)
}

/// Extends the boundary slopes to bounds on all of `Ω̄` by adding `Q_o·ν`.
///
/// `Q_o = 0` is tried first; if the interior samples reject it, `Q_o = ‖∇g‖∞`
/// is used. The widened slopes are `w̃⁻ = w⁻ + Q_o·ν`, `w̃⁺ = w⁺ − Q_o·ν`.
pub fn widen_slopes(
    cert: &SlopeCertificate,
    g: &BoundaryDatum,
    dom: &ConvexDomain,
) -> Result<SlopeCertificate, BoundaryError> {
    let pts = dom.closure_samples(400, 128);
    let mut last = None;
    for q_o in [0.0, g.grad_sup()] {
        let minus: Vec<Vec2> = cert.w_minus.iter().map(|w| w + cert.nu * q_o).collect();
        let plus: Vec<Vec2> = cert.w_plus.iter().map(|w| w - cert.nu * q_o).collect();
        let (viol, at) = bound_violation(&pts, &cert.times, cert.x_o, g, |k| (minus[k], plus[k]));
        if viol <= BOUND_TOL {
            let mut out = cert.clone();
            out.widening = Some(Widening { q_o, minus, plus, q1: cert.q + q_o });
            return Ok(out);
        }
        last = at.map(|(t, x, side)| BoundaryError::WideningInsufficient {
            time: t,
            point: [x.x, x.y],
            violation: viol,
            side,
        });
    }
    Err(last.expect("violation recorded"))
}

/// The exponentially smoothed datum `g_h` with `g_h(0) = g_o`.
pub fn time_smooth_boundary(g: &BoundaryDatum, h: f64) -> BoundaryDatum {
    let b = *g.bounds();
    // ‖∇g_h‖ ≤ max{‖∇g_o‖, ‖∇g‖}; ∂ₜ bounds carry over from the convex-combination form.
    let bounds = DataBounds { grad_sup: b.grad_sup.max(b.grad_initial_sup), ..b };
    BoundaryDatum::with_bounds(Arc::new(TimeSmoothed::new(g.datum().clone(), h)), g.horizon(), bounds)
}
