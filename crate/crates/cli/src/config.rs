//! Flat `key = value` scenario files with `domain.*`, `integrand.*`, `datum.*`,
//! `solver.*` and `checks.*` namespaces. `#` starts a comment.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use minmove::boundary::{Affinely, Constant, Fourier, FourierTerm, RotatingAffine, TimeDatum};
use minmove::solver::ConstraintMode;
use minmove::{ConvexDomain, ConvexIntegrand, Point};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("`{key}`: {msg}")]
    Invalid { key: String, msg: String },
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), msg: msg.into() }
}

const KNOWN: &[&str] = &[
    "domain.shape",
    "domain.center",
    "domain.radius",
    "domain.a",
    "domain.b",
    "domain.half",
    "domain.mesh_edge",
    "domain.jitter",
    "integrand.name",
    "integrand.scale",
    "datum.name",
    "datum.value",
    "datum.terms",
    "datum.scale",
    "datum.shift",
    "solver.h",
    "solver.horizon",
    "solver.L",
    "solver.tol",
    "solver.max_iter",
    "solver.mode",
    "checks.list",
    "checks.alpha",
    "checks.x_o",
    "checks.trace_times",
    "checks.trace_samples",
    "checks.comparison_shift",
    "checks.comparison_tol",
    "checks.lipschitz_points",
    "checks.barrier_space_samples",
    "checks.barrier_time_samples",
    "checks.barrier_tol",
    "checks.energy_tol",
    "checks.certify_time_samples",
    "checks.certify_boundary_samples",
];

/// A scalar: a decimal number, `pi`, or a product/quotient such as `3*pi/4`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s),
    };
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = body;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let tok = rest[..end].trim();
        let x = if tok.eq_ignore_ascii_case("pi") { PI } else { tok.parse::<f64>().ok()? };
        value = if op == '*' { value * x } else { value / x };
        if end == rest.len() {
            break;
        }
        op = rest.as_bytes()[end] as char;
        rest = &rest[end + 1..];
    }
    Some(sign * value).filter(|v| v.is_finite())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Energy,
    Comparison,
    Lipschitz,
    Barrier,
    Tbsc,
    Holder,
}

impl Check {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "energy" => Check::Energy,
            "comparison" => Check::Comparison,
            "lipschitz" => Check::Lipschitz,
            "barrier" => Check::Barrier,
            "tbsc" => Check::Tbsc,
            "holder" => Check::Holder,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub enum DatumSpec {
    Rotating,
    Constant(f64),
    Fourier(Vec<FourierTerm>),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    /// Key/value pairs as read, echoed into the manifest.
    pub raw: BTreeMap<String, String>,
    pub domain: ConvexDomain,
    pub mesh_edge: f64,
    pub jitter: f64,
    pub integrand: ConvexIntegrand,
    pub datum: DatumSpec,
    pub datum_scale: f64,
    pub datum_shift: f64,
    pub h: f64,
    pub horizon: f64,
    pub lipschitz_bound: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub mode: ConstraintMode,
    pub checks: Vec<Check>,
    pub alpha: f64,
    pub x_o: Point,
    pub trace_times: Vec<f64>,
    pub trace_samples: usize,
    pub comparison_shift: f64,
    pub comparison_tol: f64,
    pub lipschitz_points: usize,
    pub barrier_space_samples: usize,
    pub barrier_time_samples: usize,
    pub barrier_tol: f64,
    pub energy_tol: f64,
    pub certify_time_samples: usize,
    pub certify_boundary_samples: usize,
}

struct Reader<'a> {
    raw: &'a BTreeMap<String, String>,
}

impl Reader<'_> {
    fn str(&self, key: &str) -> Option<&str> {
        self.raw.get(key).map(String::as_str)
    }

    fn num(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.str(key).map(|s| parse_number(s).ok_or_else(|| invalid(key, format!("not a number: {s}")))).transpose()
    }

    fn num_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    fn positive(&self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        let v = match (self.num(key)?, default) {
            (Some(v), _) | (None, Some(v)) => v,
            (None, None) => return Err(ConfigError::Missing(key.to_string())),
        };
        if v > 0.0 {
            Ok(v)
        } else {
            Err(invalid(key, "must be positive"))
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.str(key) {
            None => Ok(default),
            Some(s) => s.trim().parse().map_err(|_| invalid(key, format!("not a count: {s}"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.str(key)
            .map(|s| {
                s.split_whitespace()
                    .map(|t| parse_number(t).ok_or_else(|| invalid(key, format!("not a number: {t}"))))
                    .collect()
            })
            .transpose()
    }

    fn point(&self, key: &str, default: Point) -> Result<Point, ConfigError> {
        match self.list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 2 => Ok(Point::new(v[0], v[1])),
            Some(_) => Err(invalid(key, "expected two numbers")),
        }
    }
}

pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut raw = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: n + 1 });
        }
        if !KNOWN.contains(&k) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        if raw.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::Duplicate { line: n + 1, key: k.to_string() });
        }
    }
    Ok(raw)
}

pub fn load(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Scenario, ConfigError> {
    let raw = parse_pairs(text)?;
    let r = Reader { raw: &raw };

    let center = r.point("domain.center", Point::zeros())?;
    let domain = match r.str("domain.shape").unwrap_or("disk") {
        "disk" => ConvexDomain::disk(center, r.positive("domain.radius", Some(1.0))?),
        "ellipse" => ConvexDomain::ellipse(center, r.positive("domain.a", None)?, r.positive("domain.b", None)?),
        "square" => ConvexDomain::square(center, r.positive("domain.half", Some(1.0))?),
        other => return Err(invalid("domain.shape", format!("unknown shape `{other}`"))),
    };

    let integrand = match r.str("integrand.name").unwrap_or("quadratic") {
        "quadratic" => ConvexIntegrand::quadratic(r.positive("integrand.scale", Some(1.0))?),
        "quartic" => ConvexIntegrand::quartic(),
        "flat_bottomed" => ConvexIntegrand::flat_bottomed(),
        other => return Err(invalid("integrand.name", format!("unknown integrand `{other}`"))),
    };

    let datum = match r.str("datum.name").ok_or(ConfigError::Missing("datum.name".into()))? {
        "rotating_affine" => DatumSpec::Rotating,
        "constant" => DatumSpec::Constant(r.num_or("datum.value", 0.0)?),
        "fourier" => DatumSpec::Fourier(parse_terms(r.str("datum.terms").ok_or(ConfigError::Missing("datum.terms".into()))?)?),
        other => return Err(invalid("datum.name", format!("unknown datum `{other}`"))),
    };

    let h = r.positive("solver.h", None)?;
    let horizon = r.positive("solver.horizon", None)?;
    let steps = (horizon / h).round();
    if steps < 1.0 || (horizon / h - steps).abs() > 1e-9 * steps {
        return Err(invalid("solver.h", "must divide solver.horizon"));
    }
    let mode = match r.str("solver.mode").unwrap_or("projection") {
        "projection" => ConstraintMode::Projection,
        "penalty" => ConstraintMode::Penalty,
        other => return Err(invalid("solver.mode", format!("unknown mode `{other}`"))),
    };

    let checks = match r.str("checks.list") {
        None => Vec::new(),
        Some(s) => {
            let mut v = s
                .split([',', ' '])
                .filter(|t| !t.is_empty())
                .map(|t| Check::parse(t).ok_or_else(|| invalid("checks.list", format!("unknown check `{t}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            v.sort();
            v.dedup();
            v
        }
    };

    let trace_times = r.list("checks.trace_times")?.unwrap_or_else(|| vec![0.0, PI / 4.0]);
    if trace_times.iter().any(|&t| t < 0.0 || t > horizon) {
        return Err(invalid("checks.trace_times", "times must lie in [0, solver.horizon]"));
    }
    let x_o = r.point("checks.x_o", domain.boundary_point(PI))?;

    Ok(Scenario {
        domain,
        mesh_edge: r.positive("domain.mesh_edge", Some(0.1))?,
        jitter: r.num_or("domain.jitter", 0.2)?,
        integrand,
        datum,
        datum_scale: r.num_or("datum.scale", 1.0)?,
        datum_shift: r.num_or("datum.shift", 0.0)?,
        h,
        horizon,
        lipschitz_bound: r.positive("solver.L", None)?,
        tol: r.positive("solver.tol", Some(1e-10))?,
        max_iter: r.count("solver.max_iter", 20000)?,
        mode,
        checks,
        alpha: r.num_or("checks.alpha", 2.0)?,
        x_o,
        trace_times,
        trace_samples: r.count("checks.trace_samples", 256)?,
        comparison_shift: r.num_or("checks.comparison_shift", 0.1)?,
        comparison_tol: r.positive("checks.comparison_tol", Some(1e-6))?,
        lipschitz_points: r.count("checks.lipschitz_points", 0)?,
        barrier_space_samples: r.count("checks.barrier_space_samples", 64)?,
        barrier_time_samples: r.count("checks.barrier_time_samples", 128)?,
        barrier_tol: r.positive("checks.barrier_tol", Some(1e-8))?,
        energy_tol: r.positive("checks.energy_tol", Some(1e-7))?,
        certify_time_samples: r.count("checks.certify_time_samples", 65)?,
        certify_boundary_samples: r.count("checks.certify_boundary_samples", 256)?,
        raw,
    })
}

/// `k omega phase re im` groups separated by `;`.
fn parse_terms(s: &str) -> Result<Vec<FourierTerm>, ConfigError> {
    s.split(';')
        .filter(|g| !g.trim().is_empty())
        .map(|g| {
            let parts: Vec<&str> = g.split_whitespace().collect();
            if parts.len() != 5 {
                return Err(invalid("datum.terms", "each term needs `k omega phase re im`"));
            }
            let k = parts[0].parse().map_err(|_| invalid("datum.terms", format!("bad order `{}`", parts[0])))?;
            let n = |i: usize| parse_number(parts[i]).ok_or_else(|| invalid("datum.terms", format!("bad number `{}`", parts[i])));
            Ok(FourierTerm { k, omega: n(1)?, phase: n(2)?, re: n(3)?, im: n(4)? })
        })
        .collect()
}

impl Scenario {
    pub fn steps(&self) -> usize {
        (self.horizon / self.h).round() as usize
    }

    pub fn base_datum(&self) -> Arc<dyn TimeDatum> {
        match &self.datum {
            DatumSpec::Rotating => Arc::new(RotatingAffine::unit()),
            DatumSpec::Constant(v) => Arc::new(Constant { value: *v }),
            DatumSpec::Fourier(terms) => Arc::new(Fourier { terms: terms.clone() }),
        }
    }

    /// The configured datum, with `extra_shift` added.
    pub fn datum(&self, extra_shift: f64) -> Arc<dyn TimeDatum> {
        let shift = self.datum_shift + extra_shift;
        if self.datum_scale == 1.0 && shift == 0.0 {
            return self.base_datum();
        }
        Arc::new(Affinely { inner: self.base_datum(), scale: self.datum_scale, shift })
    }

    /// The scenario of the explicit rotating barrier: unit disk at the origin,
    /// `½|ξ|²`, unmodified rotating data and `x_o = (−1, 0)`.
    pub fn is_explicit_example(&self) -> bool {
        let unit = ConvexDomain::unit_disk();
        matches!(self.datum, DatumSpec::Rotating)
            && self.datum_scale == 1.0
            && self.datum_shift == 0.0
            && self.domain == unit
            && self.integrand == ConvexIntegrand::quadratic(1.0)
            && (self.x_o - Point::new(-1.0, 0.0)).norm() < 1e-12
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "datum.name = rotating_affine\nsolver.h = pi/8\nsolver.horizon = pi/2\nsolver.L = 4\n";

    #[test]
    fn numbers_with_pi() {
        assert_eq!(parse_number("pi"), Some(PI));
        assert_eq!(parse_number("pi/4"), Some(PI / 4.0));
        assert_eq!(parse_number("-3*pi/2"), Some(-3.0 * PI / 2.0));
        assert_eq!(parse_number("1e-3"), Some(1e-3));
        assert_eq!(parse_number("pie"), None);
        assert_eq!(parse_number(""), None);
    }

    #[test]
    fn defaults_fill_in() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.steps(), 4);
        assert_eq!(s.trace_times, vec![0.0, PI / 4.0]);
        assert!((s.x_o - Point::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(s.is_explicit_example());
        assert!(s.checks.is_empty());
    }

    #[test]
    fn errors_name_the_key() {
        let bad = format!("{MINIMAL}solver.bogus = 1\n");
        assert!(matches!(parse(&bad), Err(ConfigError::UnknownKey(k)) if k == "solver.bogus"));
        let dup = format!("{MINIMAL}solver.L = 5\n");
        assert!(matches!(parse(&dup), Err(ConfigError::Duplicate { line: 5, .. })));
        let nodiv = MINIMAL.replace("pi/8", "0.3");
        assert!(matches!(parse(&nodiv), Err(ConfigError::Invalid { key, .. }) if key == "solver.h"));
        assert!(matches!(parse("solver.h = 1"), Err(ConfigError::Missing(k)) if k == "datum.name"));
        assert!(matches!(parse("just words"), Err(ConfigError::Syntax { line: 1 })));
    }

    #[test]
    fn fourier_terms() {
        let t = parse_terms("1 0 0 1 0; 2 pi 0.5 0.25 -1").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[1].k, 2);
        assert_eq!(t[1].omega, PI);
        assert!(parse_terms("1 2 3").is_err());
    }
}
