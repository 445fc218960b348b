//! Reference solvers used as oracles by the integration tests.
//!
//! Everything here is assembled directly from vertex coordinates so that it
//! shares no code with the library's finite-element or optimization paths.

#![allow(dead_code)]

use minmove::{BoundaryDatum, Mesh};
use nalgebra::{DMatrix, DVector, Vector2};

type V2 = Vector2<f64>;

/// Hat-function gradients and area of triangle `t`, from coordinates.
pub fn element(mesh: &Mesh, t: usize) -> ([V2; 3], f64) {
    let tri = mesh.triangles()[t];
    let p = tri.map(|i| mesh.vertices()[i]);
    let det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    let area = 0.5 * det.abs();
    let mut g = [V2::zeros(); 3];
    for k in 0..3 {
        let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
        // ∇φ_k is normal to the opposite edge and has unit value at p_k.
        g[k] = V2::new(a.y - b.y, b.x - a.x) / det;
    }
    (g, area)
}

/// Row-wise sparse matrix kept as sorted `(col, value)` lists.
pub struct Sparse {
    rows: Vec<Vec<(usize, f64)>>,
}

impl Sparse {
    fn new(n: usize) -> Self {
        Self { rows: vec![Vec::new(); n] }
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        match self.rows[i].iter_mut().find(|(c, _)| *c == j) {
            Some(e) => e.1 += v,
            None => self.rows[i].push((j, v)),
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.iter().map(|(j, v)| v * x[*j]).sum()))
    }

    fn combine(&self, a: f64, other: &Sparse, b: f64) -> Sparse {
        let mut out = Sparse::new(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                out.add(i, j, a * v);
            }
        }
        for (i, r) in other.rows.iter().enumerate() {
            for &(j, v) in r {
                out.add(i, j, b * v);
            }
        }
        out
    }
}

/// Consistent mass and stiffness matrices.
pub fn assemble(mesh: &Mesh) -> (Sparse, Sparse) {
    let n = mesh.n_vertices();
    let (mut m, mut k) = (Sparse::new(n), Sparse::new(n));
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles()[t];
        let (g, area) = element(mesh, t);
        for a in 0..3 {
            for b in 0..3 {
                m.add(tri[a], tri[b], if a == b { area / 6.0 } else { area / 12.0 });
                k.add(tri[a], tri[b], area * g[a].dot(&g[b]));
            }
        }
    }
    (m, k)
}

/// Plain CG on the interior unknowns (`free[i]`), boundary entries untouched.
fn cg(a: &Sparse, b: &DVector<f64>, x0: &DVector<f64>, free: &[bool]) -> DVector<f64> {
    let mask = |v: &mut DVector<f64>| {
        for (i, f) in free.iter().enumerate() {
            if !f {
                v[i] = 0.0;
            }
        }
    };
    let mut x = x0.clone();
    let mut r = b - a.apply(&x);
    mask(&mut r);
    let norm_b = {
        let mut bb = b.clone();
        mask(&mut bb);
        bb.norm().max(1e-300)
    };
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    for _ in 0..20 * b.len() {
        if rr.sqrt() <= 1e-13 * norm_b {
            break;
        }
        let mut ap = a.apply(&p);
        mask(&mut ap);
        let alpha = rr / p.dot(&ap);
        x += &p * alpha;
        r -= &ap * alpha;
        let rr_new = r.dot(&r);
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
    }
    x
}

/// Crank–Nicolson for the heat equation with Dirichlet data `g`, starting from
/// the interpolant of `g(·, 0)`. Returns nodal values at `k·dt`, `k = 0..=steps`.
pub fn crank_nicolson(mesh: &Mesh, g: &BoundaryDatum, dt: f64, steps: usize) -> Vec<DVector<f64>> {
    let (m, k) = assemble(mesh);
    let lhs = m.combine(1.0, &k, 0.5 * dt);
    let rhs_op = m.combine(1.0, &k, -0.5 * dt);
    let free: Vec<bool> = (0..mesh.n_vertices()).map(|i| !mesh.is_boundary(i)).collect();
    let nodal = |t: f64| DVector::from_iterator(mesh.n_vertices(), mesh.vertices().iter().map(|p| g.value(p, t)));
    let mut u = nodal(0.0);
    let mut out = vec![u.clone()];
    for s in 1..=steps {
        let t = s as f64 * dt;
        let gb = nodal(t);
        let mut x0 = u.clone();
        for (i, f) in free.iter().enumerate() {
            if !f {
                x0[i] = gb[i];
            }
        }
        let b = rhs_op.apply(&u);
        // Lifting: the boundary part of x0 is fixed, CG works on the residual.
        u = cg(&lhs, &b, &x0, &free);
        out.push(u.clone());
    }
    out
}

/// Dense interior-point solution of
/// `min ½vᵀKv + (1/2h)(v−p)ᵀM(v−p)` s.t. `|∇v_T| ≤ L`, `v = b` on the boundary,
/// by a log-barrier method with damped Newton steps.
pub struct QcqpOracle {
    pub value: f64,
    pub solution: DVector<f64>,
}

pub fn step_objective(mesh: &Mesh, v: &DVector<f64>, prev: &DVector<f64>, h: f64) -> f64 {
    let (m, k) = assemble(mesh);
    let d = v - prev;
    0.5 * v.dot(&k.apply(v)) + d.dot(&m.apply(&d)) / (2.0 * h)
}

pub fn qcqp_step(mesh: &Mesh, prev: &DVector<f64>, boundary: &DVector<f64>, h: f64, l: f64) -> QcqpOracle {
    let n = mesh.n_vertices();
    let free: Vec<usize> = (0..n).filter(|&i| !mesh.is_boundary(i)).collect();
    let nf = free.len();
    let (m, k) = assemble(mesh);
    let dense = |s: &Sparse| {
        let mut a = DMatrix::zeros(n, n);
        for (i, r) in s.rows.iter().enumerate() {
            for &(j, v) in r {
                a[(i, j)] += v;
            }
        }
        a
    };
    let (md, kd) = (dense(&m), dense(&k));
    let q = &kd + &md / h;
    let full = |x: &DVector<f64>| {
        let mut v = boundary.clone();
        for (a, &i) in free.iter().enumerate() {
            v[i] = x[a];
        }
        v
    };
    let elems: Vec<([V2; 3], [usize; 3])> =
        (0..mesh.n_triangles()).map(|t| (element(mesh, t).0, mesh.triangles()[t])).collect();
    let grad_of = |v: &DVector<f64>, e: &([V2; 3], [usize; 3])| -> V2 { (0..3).map(|a| e.0[a] * v[e.1[a]]).sum() };
    let objective = |v: &DVector<f64>| 0.5 * v.dot(&(&kd * v)) + (v - prev).dot(&(&md * (v - prev))) / (2.0 * h);
    let barrier = |v: &DVector<f64>| -> Option<f64> {
        let mut s = 0.0;
        for e in &elems {
            let slack = l * l - grad_of(v, e).norm_squared();
            if slack <= 0.0 {
                return None;
            }
            s -= slack.ln();
        }
        Some(s)
    };

    let mut x = DVector::from_iterator(nf, free.iter().map(|&i| boundary[i]));
    assert!(barrier(&full(&x)).is_some(), "data interpolant must be strictly feasible");
    let mut tau = 1.0;
    let m_constraints = elems.len() as f64;
    while m_constraints / tau > 1e-13 {
        for _ in 0..200 {
            let v = full(&x);
            // gradient and Hessian of τ·F + barrier, restricted to free nodes
            let gfull = &q * &v - &md * prev / h;
            let mut grad = DVector::from_iterator(nf, free.iter().map(|&i| tau * gfull[i]));
            let mut hess = DMatrix::from_fn(nf, nf, |a, b| tau * q[(free[a], free[b])]);
            for e in &elems {
                let gv = grad_of(&v, e);
                let slack = l * l - gv.norm_squared();
                let local: Vec<(usize, V2)> = (0..3)
                    .filter_map(|a| free.iter().position(|&i| i == e.1[a]).map(|p| (p, e.0[a])))
                    .collect();
                for &(pa, ga) in &local {
                    grad[pa] += 2.0 * ga.dot(&gv) / slack;
                    for &(pb, gb) in &local {
                        hess[(pa, pb)] +=
                            2.0 * ga.dot(&gb) / slack + 4.0 * ga.dot(&gv) * gb.dot(&gv) / (slack * slack);
                    }
                }
            }
            let dx = hess.cholesky().expect("barrier Hessian is SPD").solve(&(-&grad));
            let decrement = (-grad.dot(&dx)).sqrt();
            if decrement < 1e-11 {
                break;
            }
            let phi = |x: &DVector<f64>| barrier(&full(x)).map(|b| tau * objective(&full(x)) + b);
            let base = phi(&x).unwrap();
            let mut s = 1.0;
            loop {
                let trial = &x + &dx * s;
                if let Some(val) = phi(&trial) {
                    if val <= base + 0.25 * s * grad.dot(&dx) || s < 1e-10 {
                        x = trial;
                        break;
                    }
                }
                s *= 0.5;
            }
        }
        tau *= 8.0;
    }
    let solution = full(&x);
    QcqpOracle { value: objective(&solution), solution }
}

/// Implicit-Euler heat step `(K + M/h) v = M p / h` with Dirichlet values, by dense LU.
pub fn heat_step(mesh: &Mesh, prev: &DVector<f64>, boundary: &DVector<f64>, h: f64) -> DVector<f64> {
    let n = mesh.n_vertices();
    let (m, k) = assemble(mesh);
    let a = m.combine(1.0 / h, &k, 1.0);
    let mut dense = DMatrix::zeros(n, n);
    for (i, r) in a.rows.iter().enumerate() {
        for &(j, v) in r {
            dense[(i, j)] += v;
        }
    }
    let mut rhs = m.apply(prev) / h;
    for i in 0..n {
        if mesh.is_boundary(i) {
            for j in 0..n {
                dense[(i, j)] = if i == j { 1.0 } else { 0.0 };
            }
            rhs[i] = boundary[i];
        }
    }
    dense.lu().solve(&rhs).expect("heat step matrix is regular")
}
