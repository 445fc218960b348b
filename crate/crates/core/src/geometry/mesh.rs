use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{DelaunayTriangulation, Point2, Triangulation};
use thiserror::Error;

use super::ConvexDomain;
use crate::table::{num, Table};
use crate::{Field, Point, Vec2};

const MIN_ANGLE_DEG: f64 = 15.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh generation failed: {0}")]
    MeshFailure(String),
    #[error("triangle {0} has non-positive area")]
    Degenerate(usize),
    #[error("vertex index {index} out of range in triangle {triangle}")]
    BadIndex { triangle: usize, index: usize },
}

/// A conforming P1 triangulation with precomputed element data.
///
/// Triangles are stored counter-clockwise. `grads[t][k]` is the constant
/// gradient of the hat function of local vertex `k` on triangle `t`.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    areas: Vec<f64>,
    grads: Vec<[Vec2; 3]>,
}

impl Mesh {
    /// Builds a mesh from raw parts, reorienting clockwise triangles.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
    ) -> Result<Self, MeshError> {
        assert_eq!(vertices.len(), boundary.len(), "one boundary flag per vertex");
        let mut tris = Vec::with_capacity(triangles.len());
        let mut areas = Vec::with_capacity(triangles.len());
        let mut grads = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.into_iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(MeshError::BadIndex { triangle: t, index });
            }
            let [a, b, c] = tri;
            let signed = 0.5 * cross(&(vertices[b] - vertices[a]), &(vertices[c] - vertices[a]));
            let tri = if signed < 0.0 { [a, c, b] } else { tri };
            let area = signed.abs();
            if area <= 1e-14 * bbox_scale(&vertices).powi(2) {
                return Err(MeshError::Degenerate(t));
            }
            let p = tri.map(|i| vertices[i]);
            // ∇λ_k is the opposite edge rotated by 90°, scaled by 1/(2|T|).
            let g = [0, 1, 2].map(|k| {
                let e = p[(k + 2) % 3] - p[(k + 1) % 3];
                Vec2::new(-e.y, e.x) / (2.0 * area)
            });
            tris.push(tri);
            areas.push(area);
            grads.push(g);
        }
        Ok(Self { vertices, triangles: tris, boundary, areas, grads })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&i| self.boundary[i]).collect()
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&i| !self.boundary[i]).collect()
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Hat-function gradients on triangle `t`.
    pub fn grads(&self, t: usize) -> &[Vec2; 3] {
        &self.grads[t]
    }

    /// Constant gradient of the P1 interpolant of `field` on triangle `t`.
    pub fn element_gradient(&self, field: &Field, t: usize) -> Vec2 {
        let tri = &self.triangles[t];
        let g = &self.grads[t];
        g[0] * field[tri[0]] + g[1] * field[tri[1]] + g[2] * field[tri[2]]
    }

    pub fn interpolate(&self, mut f: impl FnMut(&Point) -> f64) -> Field {
        Field::from_iterator(self.n_vertices(), self.vertices.iter().map(&mut f))
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|tri| {
                let p = tri.map(|i| self.vertices[i]);
                (0..3).map(move |k| {
                    let u = p[(k + 1) % 3] - p[k];
                    let v = p[(k + 2) % 3] - p[k];
                    (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos().to_degrees()
                })
            })
            .fold(180.0, f64::min)
    }

    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|tri| (0..3).map(move |k| (tri[k], tri[(k + 1) % 3])))
            .map(|(a, b)| (self.vertices[a] - self.vertices[b]).norm())
            .fold(0.0, f64::max)
    }

    /// The same connectivity with every vertex moved by `shift`.
    pub fn translated(&self, shift: &Vec2) -> Self {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v += shift;
        }
        out
    }

    /// Vertex table `x₁ x₂ boundary` and triangle table `i j k`.
    pub fn export_tables(&self) -> (String, String) {
        let mut vt = Table::whitespace(["x1", "x2", "boundary"]);
        for (p, &b) in self.vertices.iter().zip(&self.boundary) {
            vt.push_cells([num(p.x), num(p.y), (b as u8).to_string()]);
        }
        let mut tt = Table::whitespace(["i", "j", "k"]);
        for tri in &self.triangles {
            tt.push_cells(tri.map(|i| i.to_string()));
        }
        (vt.render(), tt.render())
    }
}

fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn bbox_scale(vertices: &[Point]) -> f64 {
    let (lo, hi) = vertices.iter().fold(
        (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY)),
        |(lo, hi), p| (lo.inf(p), hi.sup(p)),
    );
    (hi - lo).max().max(f64::MIN_POSITIVE)
}

/// Triangulates an inscribed polygon of `dom` with boundary spacing `target_edge`
/// and an interior hexagonal lattice.
pub fn mesh_domain(dom: &ConvexDomain, target_edge: f64) -> Result<Mesh, MeshError> {
    build_mesh(dom, target_edge, None)
}

/// As [`mesh_domain`], with interior vertices perturbed by up to
/// `amplitude·target_edge` using a seeded generator.
pub fn mesh_domain_jittered(
    dom: &ConvexDomain,
    target_edge: f64,
    seed: u64,
    amplitude: f64,
) -> Result<Mesh, MeshError> {
    build_mesh(dom, target_edge, Some((seed, amplitude)))
}

fn build_mesh(dom: &ConvexDomain, h: f64, jitter: Option<(u64, f64)>) -> Result<Mesh, MeshError> {
    if !(h > 0.0) || h >= dom.diam() / 4.0 {
        return Err(MeshError::MeshFailure(format!(
            "target edge {h} must lie in (0, diam/4 = {})",
            dom.diam() / 4.0
        )));
    }
    let n_boundary = (dom.perimeter() / h).ceil().max(8.0) as usize;
    let boundary: Vec<Point> = dom
        .arclength_parameters(n_boundary)
        .into_iter()
        .map(|th| dom.boundary_point(th))
        .collect();

    let c = dom.center();
    let reach = dom.diam();
    let dy = h * 3.0_f64.sqrt() / 2.0;
    let rows = (reach / dy).ceil() as i64;
    let cols = (reach / h).ceil() as i64;
    let mut interior = Vec::new();
    for j in -rows..=rows {
        let offset = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for i in -cols..=cols {
            let p = c + Vec2::new(i as f64 * h + offset, j as f64 * dy);
            if dom.contains(&p) && polygon_distance(&boundary, &p) >= 0.55 * h {
                interior.push(p);
            }
        }
    }
    if let Some((seed, amplitude)) = jitter {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in &mut interior {
            let r = amplitude * h * rng.gen::<f64>().sqrt();
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            let q = *p + Vec2::new(th.cos(), th.sin()) * r;
            if dom.contains(&q) && polygon_distance(&boundary, &q) >= 0.3 * h {
                *p = q;
            }
        }
    }

    let nb = boundary.len();
    let mut vertices = boundary;
    vertices.extend(interior);
    let mut triangles = delaunay(&vertices)?;
    // Laplacian smoothing of interior vertices, re-triangulating after each pass.
    for _ in 0..3 {
        let mut sum = vec![Vec2::zeros(); vertices.len()];
        let mut count = vec![0usize; vertices.len()];
        for tri in &triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                sum[a] += vertices[b];
                sum[b] += vertices[a];
                count[a] += 1;
                count[b] += 1;
            }
        }
        for i in nb..vertices.len() {
            if count[i] > 0 {
                let target = sum[i] / count[i] as f64;
                if polygon_distance(&vertices[..nb], &target) >= 0.3 * h {
                    vertices[i] = target;
                }
            }
        }
        triangles = delaunay(&vertices)?;
    }

    let flags = (0..vertices.len()).map(|i| i < nb).collect();
    let mesh = Mesh::from_parts(vertices, triangles, flags)?;
    let min_angle = mesh.min_angle_deg();
    if min_angle < MIN_ANGLE_DEG {
        return Err(MeshError::MeshFailure(format!(
            "minimum angle {min_angle:.2} deg below {MIN_ANGLE_DEG} deg"
        )));
    }
    Ok(mesh)
}

fn delaunay(vertices: &[Point]) -> Result<Vec<[usize; 3]>, MeshError> {
    let mut tri: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
    let mut handle_to_index = Vec::with_capacity(vertices.len());
    for (i, p) in vertices.iter().enumerate() {
        let h = tri
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| MeshError::MeshFailure(format!("vertex {i}: {e:?}")))?;
        if h.index() != handle_to_index.len() {
            return Err(MeshError::MeshFailure(format!("duplicate vertex {i}")));
        }
        handle_to_index.push(i);
    }
    Ok(tri
        .inner_faces()
        .map(|f| f.vertices().map(|v| handle_to_index[v.fix().index()]))
        .collect())
}

/// Distance from `p` to the closed polygon through `poly`.
fn polygon_distance(poly: &[Point], p: &Point) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|k| {
            let a = poly[k];
            let b = poly[(k + 1) % n];
            let ab = b - a;
            let s = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            (p - (a + ab * s)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Lipschitz constant of the P1 interpolant: the largest element gradient norm.
pub fn discrete_lipschitz(field: &Field, mesh: &Mesh) -> f64 {
    (0..mesh.n_triangles())
        .map(|t| mesh.element_gradient(field, t).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk_mesh(h: f64) -> Mesh {
        mesh_domain(&ConvexDomain::unit_disk(), h).unwrap()
    }

    #[test]
    fn disk_mesh_quality() {
        let m = unit_disk_mesh(0.2);
        assert!(m.vertices().iter().all(|p| p.norm() <= 1.0 + 1e-12));
        assert!(m.min_angle_deg() >= 15.0);
        assert!(m.max_edge() <= 1.5 * 0.2, "max edge {}", m.max_edge());
        for i in m.boundary_indices() {
            assert!((m.vertices()[i].norm() - 1.0).abs() < 1e-12);
        }
        for i in m.interior_indices() {
            assert!(m.vertices()[i].norm() < 1.0);
        }
        assert!(m.areas().iter().all(|&a| a > 0.0));
    }

    #[test]
    fn refinement_quadruples_vertices() {
        let coarse = unit_disk_mesh(0.2).n_vertices() as f64;
        let fine = unit_disk_mesh(0.1).n_vertices() as f64;
        let ratio = fine / coarse;
        assert!((ratio - 4.0).abs() <= 0.4 * 4.0, "ratio {ratio}");
    }

    #[test]
    fn coarse_target_is_rejected() {
        let err = mesh_domain(&ConvexDomain::unit_disk(), 10.0).unwrap_err();
        assert!(matches!(err, MeshError::MeshFailure(_)));
    }

    #[test]
    fn affine_gradient_is_exact() {
        let m = unit_disk_mesh(0.15);
        let a = Vec2::new(2.0, -1.0);
        let u = m.interpolate(|p| a.dot(p) + 0.7);
        for t in 0..m.n_triangles() {
            assert!((m.element_gradient(&u, t) - a).norm() < 1e-12);
        }
        assert!((discrete_lipschitz(&u, &m) - 5.0_f64.sqrt()).abs() < 1e-12);
        assert_eq!(discrete_lipschitz(&Field::zeros(m.n_vertices()), &m), 0.0);
    }

    #[test]
    fn single_triangle_from_parts() {
        let verts = vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0)];
        let m = Mesh::from_parts(verts, vec![[0, 1, 2]], vec![true; 3]).unwrap();
        assert_eq!(m.area(0), 0.5);
        // reoriented counter-clockwise
        assert_eq!(m.triangles()[0], [0, 2, 1]);
        let g = m.grads(0);
        assert!((g[0] + g[1] + g[2]).norm() < 1e-15);
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let verts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        assert_eq!(
            Mesh::from_parts(verts, vec![[0, 1, 2]], vec![true; 3]).unwrap_err(),
            MeshError::Degenerate(0)
        );
    }

    #[test]
    fn jitter_is_seeded() {
        let dom = ConvexDomain::unit_disk();
        let a = mesh_domain_jittered(&dom, 0.2, 7, 0.15).unwrap();
        let b = mesh_domain_jittered(&dom, 0.2, 7, 0.15).unwrap();
        let c = mesh_domain_jittered(&dom, 0.2, 8, 0.15).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        assert_ne!(a.vertices(), c.vertices());
    }

    #[test]
    fn ellipse_and_square_mesh() {
        for dom in [
            ConvexDomain::ellipse(Point::new(0.5, 0.0), 2.0, 1.0),
            ConvexDomain::square(Point::zeros(), 1.0),
        ] {
            let m = mesh_domain(&dom, 0.2).unwrap();
            assert!(m.vertices().iter().all(|p| dom.contains(p)));
            assert!((m.total_area() - dom.area()).abs() < 0.05 * dom.area());
        }
    }
}
