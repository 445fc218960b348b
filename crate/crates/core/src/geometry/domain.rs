use std::f64::consts::PI;

use crate::{Point, Vec2};

/// Planar shapes supported by [`ConvexDomain`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk { center: Point, radius: f64 },
    /// Axis-aligned ellipse with semi-axes `a` (along x₁) and `b` (along x₂).
    Ellipse { center: Point, a: f64, b: f64 },
    /// Axis-aligned square with half side `half`. Convex but not uniformly convex.
    Square { center: Point, half: f64 },
}

/// A bounded convex domain with a claimed uniform-convexity radius `R`.
///
/// The boundary is parametrized by `θ ∈ [0, 2π)`; for the square the
/// parameter is proportional to arc length starting at the midpoint of the
/// right edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDomain {
    shape: Shape,
    radius: f64,
}

impl ConvexDomain {
    pub fn disk(center: Point, radius: f64) -> Self {
        assert!(radius > 0.0);
        Self { shape: Shape::Disk { center, radius }, radius }
    }

    pub fn unit_disk() -> Self {
        Self::disk(Point::zeros(), 1.0)
    }

    /// Ellipse with `R` set to its largest curvature radius `max(a,b)²/min(a,b)`.
    pub fn ellipse(center: Point, a: f64, b: f64) -> Self {
        assert!(a > 0.0 && b > 0.0);
        let r = a.max(b).powi(2) / a.min(b);
        Self { shape: Shape::Ellipse { center, a, b }, radius: r }
    }

    /// Square; `R` defaults to the circumradius, which the flat edges violate.
    pub fn square(center: Point, half: f64) -> Self {
        assert!(half > 0.0);
        Self { shape: Shape::Square { center, half }, radius: half * 2.0_f64.sqrt() }
    }

    /// Override the claimed uniform-convexity radius.
    pub fn with_radius(mut self, r: f64) -> Self {
        assert!(r > 0.0);
        self.radius = r;
        self
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// The claimed uniform-convexity radius `R`.
    pub fn uniform_convexity_radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> Point {
        match self.shape {
            Shape::Disk { center, .. } | Shape::Ellipse { center, .. } | Shape::Square { center, .. } => center,
        }
    }

    pub fn diam(&self) -> f64 {
        match self.shape {
            Shape::Disk { radius, .. } => 2.0 * radius,
            Shape::Ellipse { a, b, .. } => 2.0 * a.max(b),
            Shape::Square { half, .. } => 2.0 * 2.0_f64.sqrt() * half,
        }
    }

    pub fn area(&self) -> f64 {
        match self.shape {
            Shape::Disk { radius, .. } => PI * radius * radius,
            Shape::Ellipse { a, b, .. } => PI * a * b,
            Shape::Square { half, .. } => 4.0 * half * half,
        }
    }

    /// `sup_{x∈Ω̄} |x|`.
    pub fn max_norm(&self) -> f64 {
        match self.shape {
            Shape::Disk { center, radius } => center.norm() + radius,
            Shape::Ellipse { center, a, b } if center == Point::zeros() => a.max(b),
            Shape::Ellipse { .. } => {
                // Off-center ellipse: dense boundary scan with a small safety factor.
                (0..4096)
                    .map(|k| self.boundary_point(2.0 * PI * k as f64 / 4096.0).norm())
                    .fold(0.0, f64::max)
                    * (1.0 + 1e-6)
            }
            Shape::Square { center, half } => (center.abs() + Vec2::new(half, half)).norm(),
        }
    }

    pub fn boundary_point(&self, theta: f64) -> Point {
        match self.shape {
            Shape::Disk { center, radius } => center + Vec2::new(theta.cos(), theta.sin()) * radius,
            Shape::Ellipse { center, a, b } => center + Vec2::new(a * theta.cos(), b * theta.sin()),
            Shape::Square { center, half } => {
                let s = (theta.rem_euclid(2.0 * PI) / (2.0 * PI)) * 8.0;
                // Walk the perimeter counter-clockwise from (half, 0).
                let p = if s < 1.0 {
                    Vec2::new(1.0, s)
                } else if s < 3.0 {
                    Vec2::new(2.0 - s, 1.0)
                } else if s < 5.0 {
                    Vec2::new(-1.0, 4.0 - s)
                } else if s < 7.0 {
                    Vec2::new(s - 6.0, -1.0)
                } else {
                    Vec2::new(1.0, s - 8.0)
                };
                center + p * half
            }
        }
    }

    /// Outward unit normal at the boundary point with parameter `theta`.
    pub fn normal(&self, theta: f64) -> Vec2 {
        self.normal_at(&self.boundary_point(theta))
    }

    /// Outward unit normal at a boundary point, taken from the exact curve.
    /// Square corners get the diagonal direction.
    pub fn normal_at(&self, p: &Point) -> Vec2 {
        match self.shape {
            Shape::Disk { center, .. } => (p - center).normalize(),
            Shape::Ellipse { center, a, b } => {
                let d = p - center;
                Vec2::new(d.x / (a * a), d.y / (b * b)).normalize()
            }
            Shape::Square { center, .. } => {
                let d = p - center;
                let (ax, ay) = (d.x.abs(), d.y.abs());
                let tol = 1e-12 * ax.max(ay);
                if (ax - ay).abs() <= tol {
                    Vec2::new(d.x.signum(), d.y.signum()).normalize()
                } else if ax > ay {
                    Vec2::new(d.x.signum(), 0.0)
                } else {
                    Vec2::new(0.0, d.y.signum())
                }
            }
        }
    }

    /// Parameter of the boundary point closest (in angle about the center) to `p`.
    pub fn parameter_of(&self, p: &Point) -> f64 {
        let d = p - self.center();
        match self.shape {
            Shape::Disk { .. } => d.y.atan2(d.x).rem_euclid(2.0 * PI),
            Shape::Ellipse { a, b, .. } => (d.y / b).atan2(d.x / a).rem_euclid(2.0 * PI),
            Shape::Square { .. } => {
                let q = d / d.x.abs().max(d.y.abs()).max(f64::MIN_POSITIVE);
                let s = if q.x >= 1.0 - 1e-12 && q.y >= 0.0 {
                    q.y
                } else if q.y >= 1.0 - 1e-12 {
                    2.0 - q.x
                } else if q.x <= -1.0 + 1e-12 {
                    4.0 - q.y
                } else if q.y <= -1.0 + 1e-12 {
                    6.0 + q.x
                } else {
                    8.0 + q.y
                };
                (s / 8.0 * 2.0 * PI).rem_euclid(2.0 * PI)
            }
        }
    }

    /// Closed-domain membership with a relative tolerance of `1e-12`.
    pub fn contains(&self, p: &Point) -> bool {
        let d = p - self.center();
        match self.shape {
            Shape::Disk { radius, .. } => d.norm() <= radius * (1.0 + 1e-12),
            Shape::Ellipse { a, b, .. } => (d.x / a).powi(2) + (d.y / b).powi(2) <= 1.0 + 1e-12,
            Shape::Square { half, .. } => d.x.abs().max(d.y.abs()) <= half * (1.0 + 1e-12),
        }
    }

    /// Perimeter, exact for disk and square, by dense polyline for the ellipse.
    pub fn perimeter(&self) -> f64 {
        match self.shape {
            Shape::Disk { radius, .. } => 2.0 * PI * radius,
            Shape::Square { half, .. } => 8.0 * half,
            Shape::Ellipse { .. } => {
                let (_, cum) = self.arclength_table(1 << 14);
                *cum.last().unwrap()
            }
        }
    }

    fn arclength_table(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let thetas: Vec<f64> = (0..=n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let mut cum = vec![0.0; n + 1];
        for k in 1..=n {
            cum[k] = cum[k - 1] + (self.boundary_point(thetas[k]) - self.boundary_point(thetas[k - 1])).norm();
        }
        (thetas, cum)
    }

    /// `n` boundary parameters equally spaced in arc length, starting at `θ = 0`.
    pub fn arclength_parameters(&self, n: usize) -> Vec<f64> {
        match self.shape {
            Shape::Disk { .. } | Shape::Square { .. } => {
                (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
            }
            Shape::Ellipse { .. } => {
                let (thetas, cum) = self.arclength_table(64 * n.max(64));
                let total = *cum.last().unwrap();
                let mut out = Vec::with_capacity(n);
                let mut j = 0;
                for k in 0..n {
                    let target = total * k as f64 / n as f64;
                    while cum[j + 1] < target {
                        j += 1;
                    }
                    let frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
                    out.push(thetas[j] + frac * (thetas[j + 1] - thetas[j]));
                }
                out
            }
        }
    }

    /// `n` boundary samples `(θ, x, ν)` equally spaced in arc length.
    pub fn boundary_samples(&self, n: usize) -> Vec<(f64, Point, Vec2)> {
        self.arclength_parameters(n)
            .into_iter()
            .map(|th| (th, self.boundary_point(th), self.normal(th)))
            .collect()
    }

    /// Points covering `Ω̄`: `n_interior` sunflower-spiral interior points mapped
    /// into the domain plus `n_boundary` boundary points.
    pub fn closure_samples(&self, n_interior: usize, n_boundary: usize) -> Vec<Point> {
        let golden = PI * (3.0 - 5.0_f64.sqrt());
        let mut pts = Vec::with_capacity(n_interior + n_boundary);
        for k in 0..n_interior {
            let s = ((k as f64 + 0.5) / n_interior as f64).sqrt();
            let th = golden * k as f64;
            // Radial scaling of the boundary point keeps the sample inside a star-shaped domain.
            let c = self.center();
            pts.push(c + (self.boundary_point(self.parameter_of(&(c + Vec2::new(th.cos(), th.sin())))) - c) * s);
        }
        pts.extend(self.boundary_samples(n_boundary).into_iter().map(|(_, p, _)| p));
        pts
    }
}

/// Result of sampling the uniform-convexity inequality over boundary pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainReport {
    /// `max Rν_{x_o}·(x−x_o) + ½|x−x_o|²` over sampled pairs.
    pub worst_slack: f64,
    pub worst_pair: (Point, Point),
    pub pass: bool,
}

/// Samples `Rν_{x_o}·(x−x_o) ≤ −½|x−x_o|²` over all pairs of `n_samples` boundary points.
pub fn check_domain(dom: &ConvexDomain, n_samples: usize) -> DomainReport {
    let r = dom.uniform_convexity_radius();
    let samples = dom.boundary_samples(n_samples);
    let mut worst = f64::NEG_INFINITY;
    let mut pair = (Point::zeros(), Point::zeros());
    for (i, (_, xo, nu)) in samples.iter().enumerate() {
        for (j, (_, x, _)) in samples.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = x - xo;
            let slack = r * nu.dot(&d) + 0.5 * d.norm_squared();
            if slack > worst {
                worst = slack;
                pair = (*xo, *x);
            }
        }
    }
    DomainReport { worst_slack: worst, worst_pair: pair, pass: worst <= 1e-8 }
}

/// Smallest `R` for which the sampled boundary pairs satisfy the
/// uniform-convexity inequality; infinite when some pair has `ν·(x−x_o) ≥ 0`.
pub fn min_uniform_convexity_radius(dom: &ConvexDomain, n_samples: usize) -> f64 {
    let samples = dom.boundary_samples(n_samples);
    let mut need: f64 = 0.0;
    for (i, (_, xo, nu)) in samples.iter().enumerate() {
        for (j, (_, x, _)) in samples.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = x - xo;
            let proj = nu.dot(&d);
            if proj >= 0.0 {
                return f64::INFINITY;
            }
            need = need.max(d.norm_squared() / (-2.0 * proj));
        }
    }
    need
}
