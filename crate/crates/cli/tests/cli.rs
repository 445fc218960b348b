use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn example() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/example_1_4.cfg")
}

fn minmove(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minmove"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("scenario.cfg");
    fs::write(&p, body).unwrap();
    p
}

/// Rows of a whitespace table, skipping the `#` header.
fn rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect()
}

const BARRIER_ONLY: &str = "\
datum.name = rotating_affine
solver.h = pi/8
solver.horizon = pi/2
solver.L = 4
checks.alpha = 2
checks.trace_samples = 64
";

#[test]
fn bundled_example_passes_and_emits_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = minmove(&["run", example().to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().skip(1).all(|l| l.ends_with(",true")), "{summary}");

    // t = 0: v ≤ g on the boundary, with equality at θ = π.
    let t0 = rows(&dir.path().join("figure1_boundary_t0.txt"));
    assert_eq!(t0.len(), 256);
    for r in &t0 {
        assert!(r[4] <= r[3] + 1e-12);
    }
    let at_pi = t0.iter().find(|r| (r[0] - PI).abs() < 1e-12).unwrap();
    assert!((at_pi[4] - at_pi[3]).abs() < 1e-12);

    // t = π/4: the trace is pinned to g(x_o) = −cos(π/4).
    let t1 = rows(&dir.path().join("figure1_boundary_t1.txt"));
    let pin = t1.iter().find(|r| (r[0] - PI).abs() < 1e-12).unwrap();
    assert!((pin[4] + (PI / 4.0).cos()).abs() < 1e-12);

    // the sublevel boundary at α = 2 is the ball B₂((1, 0)); it touches x_o
    let sub = rows(&dir.path().join("figure1_sublevel_t1.txt"));
    for r in &sub {
        assert!(((r[1] - 1.0).hypot(r[2]) - 2.0).abs() < 1e-12);
    }
}

#[test]
fn manifest_lists_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BARRIER_ONLY);
    let out_dir = dir.path().join("out");
    let out = minmove(&["barrier", cfg.to_str().unwrap()], &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    let listed: Vec<&str> = manifest
        .split("[files]")
        .nth(1)
        .unwrap()
        .lines()
        .filter_map(|l| l.split("  #").next().filter(|s| !s.is_empty()))
        .collect();
    let mut on_disk: Vec<String> =
        fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    on_disk.sort();
    let mut listed_sorted: Vec<String> = listed.iter().map(|s| s.to_string()).collect();
    listed_sorted.sort();
    assert_eq!(on_disk, listed_sorted);
    assert!(manifest.contains("checks.alpha = 2"));
}

#[test]
fn identical_configs_give_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BARRIER_ONLY);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(minmove(&["barrier", cfg.to_str().unwrap()], d).status.code(), Some(0));
    }
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn empty_trace_list_writes_no_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{BARRIER_ONLY}checks.trace_times =\n"));
    let out_dir = dir.path().join("out");
    let out = minmove(&["barrier", cfg.to_str().unwrap()], &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!fs::read_dir(&out_dir).unwrap().any(|e| e.unwrap().file_name().to_string_lossy().starts_with("figure1")));
}

#[test]
fn too_small_gradient_bound_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &BARRIER_ONLY.replace("solver.L = 4", "solver.L = 0.5"));
    let out = minmove(&["run", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("must exceed the data gradient"));
}

#[test]
fn barrier_on_a_square_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{BARRIER_ONLY}domain.shape = square\ndomain.half = 1\n"));
    let out = minmove(&["barrier", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("R-uniformly convex"));
    // check-domain reports the same failure as a failed check
    let out = minmove(&["check-domain", cfg.to_str().unwrap()], &dir.path().join("dom"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for body in ["datum.name = rotating_affine\n", "nonsense", &format!("{BARRIER_ONLY}solver.typo = 1\n")] {
        let cfg = write_config(dir.path(), body);
        assert_eq!(minmove(&["run", cfg.to_str().unwrap()], &dir.path().join("out")).status.code(), Some(2), "{body}");
    }
    let missing = minmove(&["run", "/nonexistent/scenario.cfg"], &dir.path().join("out"));
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn certificate_for_fourier_data() {
    let dir = tempfile::tempdir().unwrap();
    let body = "\
domain.shape = ellipse
domain.a = 1.2
domain.b = 1
datum.name = fourier
datum.terms = 1 1 0 1 0; 2 0 0 0.3 0.1
solver.h = 0.25
solver.horizon = 1
solver.L = 10
checks.x_o = 1.2 0
checks.certify_time_samples = 9
";
    let cfg = write_config(dir.path(), body);
    let out_dir = dir.path().join("out");
    let out = minmove(&["certify-bsc", cfg.to_str().unwrap()], &out_dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(rows(&out_dir.join("certificate.txt")).len(), 9);
    // a point off the boundary is a precondition error
    let cfg = write_config(dir.path(), &body.replace("checks.x_o = 1.2 0", "checks.x_o = 0.5 0"));
    assert_eq!(minmove(&["certify-bsc", cfg.to_str().unwrap()], &out_dir).status.code(), Some(2));
}

#[test]
fn seeded_meshes_differ_from_the_plain_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{BARRIER_ONLY}domain.mesh_edge = 0.3\n"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(minmove(&["check-domain", cfg.to_str().unwrap()], &a).status.code(), Some(0));
    let seeded = Command::new(env!("CARGO_BIN_EXE_minmove"))
        .args(["check-domain", cfg.to_str().unwrap(), "--seed", "7", "--quiet", "--out"])
        .arg(&b)
        .output()
        .unwrap();
    assert_eq!(seeded.status.code(), Some(0));
    assert_ne!(fs::read(a.join("mesh_vertices.txt")).unwrap(), fs::read(b.join("mesh_vertices.txt")).unwrap());
}
