//! Exponential time mollification
//! `[v]_h(t) = e^{−t/h}v_o + (1/h)∫₀ᵗ e^{(s−t)/h}v(s) ds`
//! of nodal time series that are piecewise linear in time.

use thiserror::Error;

use crate::quadrature::GaussRule;
use crate::table::{num, Table};
use crate::Field;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MollifyError {
    #[error("time grid must start at 0 and increase strictly")]
    BadGrid,
    #[error("expected {expected} fields of length {len}, found a mismatch")]
    LengthMismatch { expected: usize, len: usize },
    #[error("initial value differs from v(0) by {0:e}")]
    InitialMismatch(f64),
}

/// Nodal fields `v(t_k)` on an increasing time grid with `t_0 = 0`, together
/// with the initial value `v_o` of the mollification.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesField {
    times: Vec<f64>,
    values: Vec<Field>,
    initial: Field,
}

impl TimeSeriesField {
    pub fn new(times: Vec<f64>, values: Vec<Field>, initial: Field) -> Result<Self, MollifyError> {
        if times.is_empty() || times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MollifyError::BadGrid);
        }
        let len = initial.len();
        if values.len() != times.len() || values.iter().any(|v| v.len() != len) {
            return Err(MollifyError::LengthMismatch { expected: times.len(), len });
        }
        Ok(Self { times, values, initial })
    }

    /// Samples `f(t)` on the grid; the initial value is `f(0)`.
    pub fn from_fn(times: Vec<f64>, mut f: impl FnMut(f64) -> Field) -> Result<Self, MollifyError> {
        let values: Vec<Field> = times.iter().map(|&t| f(t)).collect();
        let initial = values.first().cloned().ok_or(MollifyError::BadGrid)?;
        Self::new(times, values, initial)
    }

    pub fn with_initial(mut self, initial: Field) -> Result<Self, MollifyError> {
        if initial.len() != self.initial.len() {
            return Err(MollifyError::LengthMismatch { expected: self.times.len(), len: initial.len() });
        }
        self.initial = initial;
        Ok(self)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Field] {
        &self.values
    }

    pub fn initial(&self) -> &Field {
        &self.initial
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.initial.len()
    }

    /// Index `k` with `t ∈ [t_k, t_{k+1}]`, clamped to the grid.
    fn interval(&self, t: f64) -> usize {
        let n = self.times.len();
        if n < 2 {
            return 0;
        }
        self.times.partition_point(|&s| s <= t).saturating_sub(1).min(n - 2)
    }

    /// Linear interpolation in time; constant extrapolation outside the grid.
    pub fn value_at(&self, t: f64) -> Field {
        let n = self.times.len();
        if n == 1 || t <= 0.0 {
            return self.values[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1].clone();
        }
        let k = self.interval(t);
        let s = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        &self.values[k] * (1.0 - s) + &self.values[k + 1] * s
    }

    /// Piecewise-constant time derivative on `(t_k, t_{k+1})`.
    pub fn slope_on(&self, k: usize) -> Field {
        (&self.values[k + 1] - &self.values[k]) / (self.times[k + 1] - self.times[k])
    }

    /// Debug dump: one row per time, columns `t v_0 … v_{n−1}`.
    pub fn table(&self) -> Table {
        let mut header = vec!["t".to_string()];
        header.extend((0..self.n_nodes()).map(|i| format!("v{i}")));
        let mut t = Table::whitespace(header);
        for (time, v) in self.times.iter().zip(&self.values) {
            let mut row = vec![num(*time)];
            row.extend(v.iter().map(|x| num(*x)));
            t.push_cells(row);
        }
        t
    }
}

/// Kernel weights `(w0, w1)` of the left and right endpoint values for
/// `∫₀^a e^{−u}[v₁(1−u/a) + v₀u/a] du`, i.e. one interval of length `a·h`.
fn kernel_weights(a: f64) -> (f64, f64) {
    let one_minus_e = -(-a).exp_m1();
    let w1 = if a < 1e-3 {
        a / 2.0 - a * a / 6.0 + a.powi(3) / 24.0 - a.powi(4) / 120.0
    } else {
        1.0 - one_minus_e / a
    };
    (one_minus_e - w1, w1)
}

/// `[v]_h` on the grid of `v`, by the exact recurrence for piecewise-linear `v`.
pub fn mollify(v: &TimeSeriesField, h: f64) -> TimeSeriesField {
    assert!(h > 0.0, "mollification scale must be positive");
    let mut out = Vec::with_capacity(v.len());
    let mut m = v.initial.clone();
    out.push(m.clone());
    for k in 0..v.len() - 1 {
        let a = (v.times[k + 1] - v.times[k]) / h;
        let (w0, w1) = kernel_weights(a);
        m = &m * (-a).exp() + &v.values[k] * w0 + &v.values[k + 1] * w1;
        out.push(m.clone());
    }
    TimeSeriesField { times: v.times.clone(), values: out, initial: v.initial.clone() }
}

/// `[v]_h(t)` between grid points, from the mollified grid values.
fn mollified_between(v: &TimeSeriesField, mollified: &TimeSeriesField, h: f64, t: f64) -> Field {
    if t <= 0.0 {
        return v.initial.clone();
    }
    let k = v.interval(t);
    let tau = t - v.times[k];
    if tau <= 0.0 {
        return mollified.values[k].clone();
    }
    let a = tau / h;
    let (w0, w1) = kernel_weights(a);
    &mollified.values[k] * (-a).exp() + &v.values[k] * w0 + v.value_at(t) * w1
}

/// `∂ₜ[v]_h`, computed as the mollification of `∂ₜv` with zero initial value.
/// Requires `v_o = v(0)`.
pub fn mollify_time_derivative(v: &TimeSeriesField, h: f64) -> Result<TimeSeriesField, MollifyError> {
    assert!(h > 0.0, "mollification scale must be positive");
    let gap = (&v.initial - &v.values[0]).amax();
    let scale = 1.0 + v.initial.amax();
    if gap > 1e-12 * scale {
        return Err(MollifyError::InitialMismatch(gap));
    }
    let mut d = Field::zeros(v.n_nodes());
    let mut out = Vec::with_capacity(v.len());
    out.push(d.clone());
    for k in 0..v.len() - 1 {
        let a = (v.times[k + 1] - v.times[k]) / h;
        d = &d * (-a).exp() + v.slope_on(k) * (-(-a).exp_m1());
        out.push(d.clone());
    }
    Ok(TimeSeriesField { times: v.times.clone(), values: out, initial: Field::zeros(v.n_nodes()) })
}

/// Largest nodal residual of `∂ₜ[v]_h = (v − [v]_h)/h` over the grid.
pub fn ode_identity_residual(v: &TimeSeriesField, h: f64) -> Result<f64, MollifyError> {
    let d = mollify_time_derivative(v, h)?;
    let m = mollify(v, h);
    Ok((0..v.len())
        .map(|k| (&d.values[k] - (&v.values[k] - &m.values[k]) / h).amax())
        .fold(0.0, f64::max))
}

/// Time integrability exponent of an `L^r(0, t_o; X)` norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Checks `‖[v]_h‖_{L^r(0,t_o;X)} ≤ ‖v‖_{L^r(0,t_o;X)} + [(h/r)(1−e^{−t_o r/h})]^{1/r}‖v_o‖_X`
/// with the Euclidean norm over nodes as `X`; the bracket is 1 for `r = ∞`.
pub fn mollifier_norm_check(v: &TimeSeriesField, h: f64, r: Exponent, t_o: f64) -> NormReport {
    let m = mollify(v, h);
    let vo = v.initial.norm();
    let (lhs, rhs) = match r {
        Exponent::Infinity => {
            let lhs = time_samples(v, t_o)
                .map(|(t, _)| mollified_between(v, &m, h, t).norm())
                .fold(0.0, f64::max);
            let grid_sup = v
                .times
                .iter()
                .zip(&v.values)
                .filter(|(t, _)| **t <= t_o)
                .map(|(_, x)| x.norm())
                .fold(v.value_at(t_o).norm(), f64::max);
            (lhs, grid_sup + vo)
        }
        Exponent::Finite(r) => {
            assert!(r >= 1.0, "exponent must be at least 1");
            let lp = |f: &dyn Fn(f64) -> f64| {
                time_samples(v, t_o).map(|(t, w)| w * f(t).powf(r)).sum::<f64>().powf(1.0 / r)
            };
            let lhs = lp(&|t| mollified_between(v, &m, h, t).norm());
            let norm_v = lp(&|t| v.value_at(t).norm());
            let bracket = (h / r * (-(-t_o * r / h).exp_m1())).powf(1.0 / r);
            (lhs, norm_v + bracket * vo)
        }
    };
    NormReport { lhs, rhs, pass: lhs <= rhs + 1e-8 }
}

/// 8-point Gauss samples `(t, weight)` over the grid intervals clipped to `[0, t_o]`.
fn time_samples(v: &TimeSeriesField, t_o: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let rule = GaussRule::new(8);
    let mut breaks: Vec<f64> = v.times.iter().copied().filter(|&t| t < t_o).collect();
    breaks.push(t_o);
    let pieces: Vec<(f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1])).collect();
    pieces.into_iter().flat_map(move |(a, b)| rule.on(a, b).collect::<Vec<_>>())
}

/// `‖w‖_{L²(0,t_o;X)}` of a series that is piecewise linear in time.
pub fn l2_time_norm(w: &TimeSeriesField, t_o: f64) -> f64 {
    time_samples(w, t_o).map(|(t, wt)| wt * w.value_at(t).norm_squared()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, t_end: f64) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    fn scalar(times: Vec<f64>, f: impl Fn(f64) -> f64) -> TimeSeriesField {
        TimeSeriesField::from_fn(times, |t| Field::from_element(1, f(t))).unwrap()
    }

    #[test]
    fn constant_is_fixed() {
        let v = TimeSeriesField::from_fn(grid(10, 1.0), |_| Field::from_vec(vec![1.5, -2.0])).unwrap();
        let m = mollify(&v, 0.3);
        for x in m.values() {
            assert!((x - Field::from_vec(vec![1.5, -2.0])).amax() < 1e-15);
        }
    }

    #[test]
    fn linear_closed_form() {
        let h = 0.5;
        let v = scalar(grid(7, 1.0), |t| t);
        let m = mollify(&v, h);
        for (t, x) in v.times().iter().zip(m.values()) {
            let exact = t - h * (1.0 - (-t / h).exp());
            assert!((x[0] - exact).abs() < 1e-14);
        }
        assert!((m.values()[7][0] - 0.567_667_641_618_306_3).abs() < 1e-14);
        // derivative of the closed form
        let d = mollify_time_derivative(&v, h).unwrap();
        for (t, x) in v.times().iter().zip(d.values()) {
            assert!((x[0] - (1.0 - (-t / h).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn tiny_intervals_use_the_series() {
        let (w0, w1) = kernel_weights(1e-6);
        assert!((w1 - (0.5e-6 - 1e-12 / 6.0)).abs() < 1e-18);
        assert!((w0 + w1 - (-(-1e-6f64).exp_m1())).abs() < 1e-20);
    }

    #[test]
    fn ode_identity_for_sine() {
        let v = scalar(grid(200, 3.0), f64::sin);
        assert!(ode_identity_residual(&v, 0.2).unwrap() <= 1e-8);
    }

    #[test]
    fn initial_mismatch_is_reported() {
        let v = scalar(grid(4, 1.0), |t| t + 1.0).with_initial(Field::from_element(1, 0.0)).unwrap();
        assert!(matches!(mollify_time_derivative(&v, 0.1), Err(MollifyError::InitialMismatch(_))));
    }

    #[test]
    fn bad_grids_are_rejected() {
        let f = || Field::zeros(1);
        assert_eq!(TimeSeriesField::new(vec![0.1, 0.2], vec![f(), f()], f()).unwrap_err(), MollifyError::BadGrid);
        assert_eq!(TimeSeriesField::new(vec![0.0, 0.0], vec![f(), f()], f()).unwrap_err(), MollifyError::BadGrid);
    }

    #[test]
    fn norm_bound_equality_case() {
        let h = 0.25;
        let t_o = 1.0;
        let zero = TimeSeriesField::from_fn(grid(40, 1.0), |_| Field::zeros(2))
            .unwrap()
            .with_initial(Field::from_vec(vec![3.0, 4.0]))
            .unwrap();
        let rep = mollifier_norm_check(&zero, h, Exponent::Finite(2.0), t_o);
        let exact = 5.0 * (h / 2.0 * (1.0 - (-2.0 * t_o / h).exp())).sqrt();
        assert!((rep.lhs - exact).abs() < 1e-12);
        assert!((rep.rhs - exact).abs() < 1e-14);
        assert!(rep.pass);

        let inf = mollifier_norm_check(&zero, h, Exponent::Infinity, t_o);
        assert!((inf.rhs - 5.0).abs() < 1e-15);
        assert!(inf.pass);
    }

    #[test]
    fn contraction_with_zero_initial() {
        let v = scalar(grid(50, 2.0), |t| (3.0 * t).sin()).with_initial(Field::zeros(1)).unwrap();
        for r in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
            let rep = mollifier_norm_check(&v, 0.3, r, 1.7);
            assert!(rep.lhs <= rep.rhs + 1e-12, "{r:?}");
        }
    }

    #[test]
    fn derivative_contracts_in_l2() {
        let v = scalar(grid(300, 3.0), f64::sin);
        let d = mollify_time_derivative(&v, 0.4).unwrap();
        let mut dv_values = vec![v.slope_on(0)];
        dv_values.extend((0..v.len() - 1).map(|k| v.slope_on(k)));
        let dv = TimeSeriesField::new(v.times().to_vec(), dv_values.clone(), dv_values[0].clone()).unwrap();
        let ratio = l2_time_norm(&d, 3.0) / l2_time_norm(&dv, 3.0);
        assert!(ratio < 1.0, "ratio {ratio}");
    }
}
