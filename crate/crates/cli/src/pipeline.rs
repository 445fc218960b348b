//! The four commands. Each writes its artifacts through [`Artifacts`] and
//! returns the per-check verdicts.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use minmove::barrier::{
    boundary_trace, build, field_table, sublevel_geometry, sublevel_trace, verify, Barrier, BarrierError,
};
use minmove::boundary::{certify_tbsc_with, widen_slopes, BoundaryError, CertifyOptions};
use minmove::geometry::{check_domain, mesh_domain, mesh_domain_jittered, MeshError};
use minmove::integrand::{conjugate, default_search_radius};
use minmove::solver::{energy_report, solve, SolverConfig, SolverError, Trajectory};
use minmove::table::{num, Table};
use minmove::verify::{
    boundary_barriers, comparison_test, holder_quotient, lipschitz_certificate, max_principle_test, VerifyError,
};
use minmove::{BoundaryDatum, Mesh, Point, SlopeCertificate};
use thiserror::Error;

use crate::config::{Check, ConfigError, Scenario};

const DOMAIN_SAMPLES: usize = 256;
const FIELD_GRID: usize = 65;
const CONJUGATE_GRID: usize = 21;
const BARRIER_PIN_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Precondition(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("mesh generation failed: {0}")]
    Mesh(#[from] MeshError),
    #[error("solver failed: {0}")]
    Solver(SolverError),
    #[error("barrier construction failed: {0}")]
    Barrier(#[from] BarrierError),
    #[error("{0}")]
    Verify(#[from] VerifyError),
}

impl CliError {
    /// 2 for problems with the scenario itself, 1 for failures while running it.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Precondition(_) | CliError::Io { .. } => 2,
            CliError::Mesh(_) | CliError::Solver(_) | CliError::Barrier(_) | CliError::Verify(_) => 1,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InfeasibleConstraint { gradient, bound, .. } => CliError::Precondition(format!(
                "gradient bound L = {bound} must exceed the data gradient {gradient} (sup of |∇g| and |∇g(·,0)|)"
            )),
            SolverError::InvalidConfig(msg) => CliError::Precondition(msg),
            other => CliError::Solver(other),
        }
    }
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub check: String,
    pub value: f64,
    /// Threshold the value is compared against; NaN for report-only rows.
    pub tolerance: f64,
    pub pass: bool,
}

impl Verdict {
    fn new(check: impl Into<String>, value: f64, tolerance: f64, pass: bool) -> Self {
        Self { check: check.into(), value, tolerance, pass }
    }
}

/// Output directory plus the list of files written so far.
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, description: impl Into<String>, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.display().to_string(), source })?;
        }
        fs::write(&path, content).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        self.files.push((name.to_string(), description.into()));
        Ok(())
    }

    /// Writes `summary.csv` and then `manifest.txt`, which lists every file
    /// (itself included) and echoes the scenario.
    pub fn finish(
        mut self,
        command: &str,
        scenario: &Scenario,
        seed: Option<u64>,
        verdicts: &[Verdict],
    ) -> Result<(), CliError> {
        let mut summary = Table::csv(["check", "value", "tolerance", "pass"]);
        for v in verdicts {
            summary.push_cells([v.check.clone(), num(v.value), num(v.tolerance), v.pass.to_string()]);
        }
        self.write("summary.csv", "pass/fail per check with its value and threshold", &summary.render())?;

        let mut m = String::new();
        m.push_str(&format!("command = {command}\n"));
        m.push_str(&format!("seed = {}\n", seed.map_or("none".to_string(), |s| s.to_string())));
        m.push_str(&format!("all_pass = {}\n", verdicts.iter().all(|v| v.pass)));
        m.push_str("\n[parameters]\n");
        for (k, v) in &scenario.raw {
            m.push_str(&format!("{k} = {v}\n"));
        }
        m.push_str(&format!("# resolved: steps = {}, h = {}, x_o = {} {}\n", scenario.steps(), num(scenario.h), num(scenario.x_o.x), num(scenario.x_o.y)));
        m.push_str("\n[files]\n");
        self.files.push(("manifest.txt".into(), "this file".into()));
        for (name, desc) in &self.files {
            m.push_str(&format!("{name}  # {desc}\n"));
        }
        let path = self.dir.join("manifest.txt");
        fs::write(&path, m).map_err(|source| CliError::Io { path: path.display().to_string(), source })
    }
}

fn data(s: &Scenario, extra_shift: f64) -> BoundaryDatum {
    BoundaryDatum::new(s.datum(extra_shift), s.horizon, &s.domain)
}

fn mesh(s: &Scenario, seed: Option<u64>) -> Result<Arc<Mesh>, CliError> {
    Ok(Arc::new(match seed {
        Some(seed) => mesh_domain_jittered(&s.domain, s.mesh_edge, seed, s.jitter)?,
        None => mesh_domain(&s.domain, s.mesh_edge)?,
    }))
}

fn solver_config(s: &Scenario, mesh: &Arc<Mesh>, extra_shift: f64) -> Result<SolverConfig, CliError> {
    let mut cfg = SolverConfig::new(mesh.clone(), s.integrand.clone(), data(s, extra_shift), s.h, s.lipschitz_bound)?;
    cfg.inner.tol = s.tol;
    cfg.inner.max_iter = s.max_iter;
    cfg.inner.mode = s.mode;
    Ok(cfg)
}

/// The barrier constructions need a uniformly convex domain.
fn require_uniform_convexity(s: &Scenario, what: &str) -> Result<(), CliError> {
    let rep = check_domain(&s.domain, DOMAIN_SAMPLES);
    if rep.pass {
        return Ok(());
    }
    let (a, b) = rep.worst_pair;
    Err(CliError::Precondition(format!(
        "{what} needs an R-uniformly convex domain; the check fails with slack {} for x_o = ({}, {}), x = ({}, {})",
        num(rep.worst_slack),
        a.x,
        a.y,
        b.x,
        b.y
    )))
}

fn certify_options(s: &Scenario) -> CertifyOptions {
    CertifyOptions {
        time_samples: s.certify_time_samples,
        boundary_samples: s.certify_boundary_samples,
        ..CertifyOptions::default()
    }
}

fn certify(s: &Scenario) -> Result<SlopeCertificate, BoundaryError> {
    certify_tbsc_with(&data(s, 0.0), &s.domain, &s.x_o, &certify_options(s))
}

fn barrier(s: &Scenario) -> Result<Barrier, CliError> {
    if s.is_explicit_example() && s.alpha > 0.0 {
        return Ok(Barrier::rotating_example(s.alpha, s.horizon)?);
    }
    let g = data(s, 0.0);
    let cert = certify(s).map_err(BarrierError::from)?;
    let cert = widen_slopes(&cert, &g, &s.domain).map_err(BarrierError::from)?;
    Ok(build(&s.integrand, &s.domain, &g, &cert, s.alpha)?)
}

pub fn check_domain_cmd(s: &Scenario, seed: Option<u64>, out: &mut Artifacts) -> Result<Vec<Verdict>, CliError> {
    let rep = check_domain(&s.domain, DOMAIN_SAMPLES);
    let mut t = Table::csv(["radius", "worst_slack", "x_o1", "x_o2", "x1", "x2", "pass"]);
    let (a, b) = rep.worst_pair;
    t.push_cells([
        num(s.domain.uniform_convexity_radius()),
        num(rep.worst_slack),
        num(a.x),
        num(a.y),
        num(b.x),
        num(b.y),
        rep.pass.to_string(),
    ]);
    out.write("domain_report.csv", "sampled uniform-convexity inequality", &t.render())?;
    let m = mesh(s, seed)?;
    let (vt, tt) = m.export_tables();
    out.write("mesh_vertices.txt", "x1 x2 boundary", &vt)?;
    out.write("mesh_triangles.txt", "vertex indices i j k", &tt)?;
    Ok(vec![
        Verdict::new("uniform_convexity", rep.worst_slack, 1e-8, rep.pass),
        Verdict::new("mesh_min_angle_deg", m.min_angle_deg(), f64::NAN, true),
    ])
}

pub fn certify_cmd(s: &Scenario, out: &mut Artifacts) -> Result<Vec<Verdict>, CliError> {
    Ok(vec![certify_verdict(s, out)?])
}

fn certify_verdict(s: &Scenario, out: &mut Artifacts) -> Result<Verdict, CliError> {
    match certify(s) {
        Ok(cert) => {
            out.write("certificate.txt", "t w-_1 w-_2 w+_1 w+_2 Q at x_o", &cert.table().render())?;
            Ok(Verdict::new("tbsc_Q", cert.q, CertifyOptions::default().max_slope, true))
        }
        Err(e @ BoundaryError::NotOnBoundary(_)) => Err(CliError::Precondition(e.to_string())),
        Err(e) => {
            out.write("certificate.txt", "certifier refusal", &format!("# {e}\n"))?;
            Ok(Verdict::new("tbsc_Q", f64::INFINITY, CertifyOptions::default().max_slope, false))
        }
    }
}

pub fn barrier_cmd(s: &Scenario, out: &mut Artifacts) -> Result<Vec<Verdict>, CliError> {
    require_uniform_convexity(s, "the barrier construction")?;
    let b = barrier(s)?;
    let mut verdicts = barrier_verdicts(s, &b)?;
    verdicts.extend(barrier_files(s, &b, out)?);
    conjugate_file(s, out)?;
    Ok(verdicts)
}

fn barrier_verdicts(s: &Scenario, b: &Barrier) -> Result<Vec<Verdict>, CliError> {
    let rep = verify(b, s.barrier_space_samples, s.barrier_time_samples)?;
    let mut v = vec![
        Verdict::new("barrier_pin", rep.pin_err, BARRIER_PIN_TOL, rep.pin_err <= BARRIER_PIN_TOL),
        Verdict::new("barrier_ordering", rep.ordering_viol, s.barrier_tol, rep.ordering_viol <= s.barrier_tol),
        Verdict::new("barrier_subsolution", rep.subsol_viol, s.barrier_tol, rep.subsol_viol <= s.barrier_tol),
        Verdict::new("barrier_lipschitz", rep.lip_const, rep.lip_budget, rep.lip_const <= rep.lip_budget + 1e-12),
    ];
    let mut contained = true;
    let mut gap: f64 = 0.0;
    for &t in &s.trace_times {
        let geo = sublevel_geometry(b, t, 128)?;
        contained &= geo.omega_contained && geo.x_o_on_boundary;
        gap = gap.max(geo.x_o_gap);
    }
    v.push(Verdict::new("barrier_sublevel_contains_domain", gap, f64::NAN, contained));
    Ok(v)
}

/// Boundary trace, sublevel trace and field dump per trace time.
fn barrier_files(s: &Scenario, b: &Barrier, out: &mut Artifacts) -> Result<Vec<Verdict>, CliError> {
    let mut trace_ordering = f64::NEG_INFINITY;
    for (k, &t) in s.trace_times.iter().enumerate() {
        let trace = boundary_trace(b, t, s.trace_samples)?;
        for th in (0..s.trace_samples).map(|j| 2.0 * PI * j as f64 / s.trace_samples as f64) {
            let x = s.domain.boundary_point(th);
            trace_ordering = trace_ordering.max(b.sign().factor() * (b.eval(&x, t)? - b.data_value(&x, t)));
        }
        out.write(&format!("figure1_boundary_t{k}.txt"), format!("theta x1 x2 g v on the domain boundary, t = {}", num(t)), &trace.render())?;
        let sub = if b.is_explicit() && s.alpha == 2.0 { closed_form_ball(b, t, s.trace_samples)? } else { sublevel_trace(b, t, s.trace_samples)? };
        out.write(&format!("figure1_sublevel_t{k}.txt"), format!("theta x1 x2 v on the sublevel boundary, t = {}", num(t)), &sub.render())?;
        out.write(&format!("barrier_field_t{k}.txt"), format!("x1 x2 v inside the sublevel set, t = {}", num(t)), &field_table(b, t, FIELD_GRID)?.render())?;
    }
    if s.trace_times.is_empty() {
        return Ok(Vec::new());
    }
    Ok(vec![Verdict::new("trace_ordering", trace_ordering, s.barrier_tol, trace_ordering <= s.barrier_tol)])
}

/// The sublevel set of the explicit barrier at `α = 2` is the ball `B₂((1, 0))`.
fn closed_form_ball(b: &Barrier, t: f64, samples: usize) -> Result<Table, CliError> {
    let mut table = Table::whitespace(["theta", "x1", "x2", "v"]);
    for k in 0..samples {
        let th = 2.0 * PI * k as f64 / samples as f64;
        let x = Point::new(1.0 + 2.0 * th.cos(), 2.0 * th.sin());
        table.push_numbers(&[th, x.x, x.y, b.eval(&x, t)?]);
    }
    Ok(table)
}

fn conjugate_file(s: &Scenario, out: &mut Artifacts) -> Result<(), CliError> {
    let mut t = Table::whitespace(["eta1", "eta2", "fstar"]);
    let f = &s.integrand;
    for i in 0..CONJUGATE_GRID {
        for j in 0..CONJUGATE_GRID {
            let eta = minmove::Vec2::new(-4.0 + 0.4 * i as f64, -4.0 + 0.4 * j as f64);
            let v = conjugate(f, &eta, default_search_radius(f, &eta)).map_err(BarrierError::from)?;
            t.push_numbers(&[eta.x, eta.y, v]);
        }
    }
    out.write("conjugate.txt", format!("eta1 eta2 f* for {}", f.name()), &t.render())
}

pub fn run_cmd(s: &Scenario, seed: Option<u64>, out: &mut Artifacts) -> Result<Vec<Verdict>, CliError> {
    if s.checks.iter().any(|c| matches!(c, Check::Barrier | Check::Lipschitz)) {
        require_uniform_convexity(s, "the requested barrier checks")?;
    }
    let m = mesh(s, seed)?;
    let cfg = solver_config(s, &m, 0.0)?;
    let traj = solve(&cfg)?;
    let (vt, tt) = m.export_tables();
    out.write("mesh_vertices.txt", "x1 x2 boundary", &vt)?;
    out.write("mesh_triangles.txt", "vertex indices i j k", &tt)?;
    for i in 0..traj.len() {
        out.write(&format!("trajectory/step_{i:04}.txt"), format!("x1 x2 u at t = {}", num(traj.time(i))), &traj.step_table(i).render())?;
    }
    let energy = energy_report(&traj, &cfg);
    let report = match &energy {
        Ok(r) => r.clone(),
        Err(_) => minmove::solver::compute_energy_report(&traj, &cfg),
    };
    out.write("energy.csv", "i energy increment slack of the telescoped estimate", &report.csv().render())?;

    let mut verdicts = Vec::new();
    for check in &s.checks {
        match check {
            Check::Energy => verdicts.push(Verdict::new(
                "energy_estimate",
                report.worst_slack,
                -s.energy_tol,
                report.worst_slack >= -s.energy_tol,
            )),
            Check::Comparison => verdicts.extend(comparison_verdicts(s, &m, &traj)?),
            Check::Lipschitz => verdicts.push(lipschitz_verdict(s, &cfg, &traj)?),
            Check::Barrier => {
                let b = barrier(s)?;
                verdicts.extend(barrier_verdicts(s, &b)?);
                verdicts.extend(barrier_files(s, &b, out)?);
            }
            Check::Tbsc => verdicts.push(certify_verdict(s, out)?),
            Check::Holder => {
                let h = holder_quotient(&traj);
                verdicts.push(Verdict::new("holder_space_lipschitz", h.space_lip, s.lipschitz_bound, h.space_lip <= s.lipschitz_bound));
                verdicts.push(Verdict::new("holder_time_half", h.time_half_holder, f64::NAN, h.time_half_holder.is_finite()));
            }
        }
    }
    Ok(verdicts)
}

fn comparison_verdicts(s: &Scenario, m: &Arc<Mesh>, base: &Trajectory) -> Result<Vec<Verdict>, CliError> {
    let shift = s.comparison_shift;
    let shifted = solve(&solver_config(s, m, shift)?)?;
    let (lo, hi) = if shift >= 0.0 { (base, &shifted) } else { (&shifted, base) };
    let cmp = comparison_test(lo, hi)?;
    let mp = max_principle_test(hi, lo)?;
    let shift_err = base
        .steps()
        .iter()
        .zip(shifted.steps())
        .map(|(a, b)| (b - a).add_scalar(-shift).amax())
        .fold(0.0, f64::max);
    let tol = s.comparison_tol;
    Ok(vec![
        Verdict::new("comparison_ordering", cmp.max_violation, tol, cmp.max_violation <= tol),
        Verdict::new("comparison_shift", shift_err, 1e-10, shift_err <= 1e-10),
        Verdict::new("max_principle", mp.interior_sup - mp.boundary_sup, tol, mp.interior_sup <= mp.boundary_sup + tol),
    ])
}

fn lipschitz_verdict(s: &Scenario, cfg: &SolverConfig, traj: &Trajectory) -> Result<Verdict, CliError> {
    let barriers = if s.lipschitz_points > 0 {
        boundary_barriers(&s.integrand, &s.domain, &cfg.data, s.lipschitz_points, s.alpha, &Default::default())?
    } else {
        Vec::new()
    };
    let cert = lipschitz_certificate(traj, &barriers, &cfg.data, s.lipschitz_bound)?;
    Ok(Verdict::new("lipschitz_constraint_inactive", cert.computed_c, s.lipschitz_bound, !cert.constraint_active))
}
