//! P1 finite-element assembly: stiffness and consistent mass matrices in CSR form.

use crate::geometry::Mesh;
use crate::Field;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Square `n×n` matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterator over `(col, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Field {
        Field::from_iterator(self.n, (0..self.n).map(|i| self.get(i, i)))
    }

    pub fn mul_vec(&self, x: &Field) -> Field {
        let mut y = Field::zeros(self.n);
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &Field, y: &mut Field) {
        for i in 0..self.n {
            y[i] = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `xᵀAx`.
    pub fn quadratic_form(&self, x: &Field) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).sum()
    }

    /// `xᵀAy`.
    pub fn quadratic_form_pair(&self, x: &Field, y: &Field) -> f64 {
        (0..self.n).map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>()).sum()
    }

    /// `A + s·B` for matrices with the same dimension.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let mut trips = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            trips.extend(self.row(i).map(|(j, v)| (i, j, v)));
            trips.extend(other.row(i).map(|(j, v)| (i, j, s * v)));
        }
        CsrMatrix::from_triplets(self.n, trips)
    }
}

/// Stiffness matrix `K_ij = ∫∇φ_i·∇φ_j`.
pub fn stiffness(mesh: &Mesh) -> CsrMatrix {
    let mut trips = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = mesh.grads(t);
        let a = mesh.area(t);
        for k in 0..3 {
            for l in 0..3 {
                trips.push((tri[k], tri[l], a * g[k].dot(&g[l])));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.n_vertices(), trips)
}

/// Consistent mass matrix `M_ij = ∫φ_iφ_j`.
pub fn mass(mesh: &Mesh) -> CsrMatrix {
    let mut trips = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.area(t);
        for k in 0..3 {
            for l in 0..3 {
                let w = if k == l { a / 6.0 } else { a / 12.0 };
                trips.push((tri[k], tri[l], w));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.n_vertices(), trips)
}

/// `∫u` of the P1 interpolant.
pub fn integral(mesh: &Mesh, u: &Field) -> f64 {
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(t, tri)| mesh.area(t) * (u[tri[0]] + u[tri[1]] + u[tri[2]]) / 3.0)
        .sum()
}
