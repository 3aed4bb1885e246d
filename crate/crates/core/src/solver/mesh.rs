//! Simplicial mesh of the polar grid and P1 stiffness assembly.
//!
//! Each index cell is split into simplices (two triangles or six Kuhn
//! tetrahedra); simplices that collapse at the origin or a pole are dropped.
//! With piecewise-linear elements the discrete solution minimises the
//! discrete Dirichlet energy and reproduces affine solutions exactly.

use rayon::prelude::*;

use super::cg::CsrMatrix;
use super::grid::PolarGrid;
use crate::coefficient::CoefficientField;

#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub positions: Vec<[f64; 3]>,
    /// Vertex ids; only the first `dim + 1` entries are used.
    pub elements: Vec<[usize; 4]>,
}

type Local = [[f64; 4]; 4];

fn coefficient_at(field: &CoefficientField, x: &[f64]) -> [[f64; 3]; 3] {
    let m = field.matrix(x);
    let mut a = [[0.0; 3]; 3];
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            a[i][j] = m[(i, j)];
        }
    }
    a
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Element stiffness `∫_T ⟨A∇φ_a, ∇φ_b⟩` with `A` frozen at the centroid.
fn element_matrix(dim: usize, pts: &[[f64; 3]], field: &CoefficientField) -> Option<Local> {
    let mut grads = [[0.0f64; 3]; 4];
    let vol;
    if dim == 2 {
        let e1 = sub(pts[1], pts[0]);
        let e2 = sub(pts[2], pts[0]);
        let det = e1[0] * e2[1] - e2[0] * e1[1];
        let scale = (e1[0].hypot(e1[1]) * e2[0].hypot(e2[1])).max(f64::MIN_POSITIVE);
        if det.abs() <= 1e-13 * scale {
            return None;
        }
        grads[1] = [e2[1] / det, -e2[0] / det, 0.0];
        grads[2] = [-e1[1] / det, e1[0] / det, 0.0];
        vol = det.abs() / 2.0;
    } else {
        let e1 = sub(pts[1], pts[0]);
        let e2 = sub(pts[2], pts[0]);
        let e3 = sub(pts[3], pts[0]);
        let c23 = cross(e2, e3);
        let det = e1[0] * c23[0] + e1[1] * c23[1] + e1[2] * c23[2];
        let norm = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let scale = (norm(e1) * norm(e2) * norm(e3)).max(f64::MIN_POSITIVE);
        if det.abs() <= 1e-13 * scale {
            return None;
        }
        let c31 = cross(e3, e1);
        let c12 = cross(e1, e2);
        for d in 0..3 {
            grads[1][d] = c23[d] / det;
            grads[2][d] = c31[d] / det;
            grads[3][d] = c12[d] / det;
        }
        vol = det.abs() / 6.0;
    }
    for d in 0..3 {
        grads[0][d] = -(1..=dim).map(|k| grads[k][d]).sum::<f64>();
    }
    let mut centroid = [0.0; 3];
    for p in &pts[..=dim] {
        for d in 0..3 {
            centroid[d] += p[d] / (dim + 1) as f64;
        }
    }
    let a = coefficient_at(field, &centroid[..dim]);
    let mut k = [[0.0; 4]; 4];
    for p in 0..=dim {
        let mut ag = [0.0; 3];
        for i in 0..dim {
            ag[i] = (0..dim).map(|j| a[i][j] * grads[p][j]).sum();
        }
        for q in 0..=dim {
            k[p][q] = vol * (0..dim).map(|i| ag[i] * grads[q][i]).sum::<f64>();
        }
    }
    Some(k)
}

impl Mesh {
    /// In the plane each quadrilateral takes the diagonal with the more
    /// negative coupling under `field`, which keeps the matrix an M-matrix
    /// whenever a local choice can.
    pub fn build(grid: &PolarGrid, field: &CoefficientField) -> Self {
        let positions = grid.node_positions();
        let dim = grid.dim();
        let mut elements = Vec::new();
        if dim == 2 {
            let nt = grid.ntheta();
            for i in 0..grid.nr() {
                for j in 0..nt {
                    let c00 = grid.node_id(i, j, 0);
                    let c10 = grid.node_id(i + 1, j, 0);
                    let c11 = grid.node_id(i + 1, j + 1, 0);
                    let c01 = grid.node_id(i, j + 1, 0);
                    if i == 0 {
                        elements.push([c00, c10, c11, 0]);
                        continue;
                    }
                    let tri = |a: usize, b: usize, c: usize| {
                        element_matrix(2, &[positions[a], positions[b], positions[c]], field)
                    };
                    let diag_a = match (tri(c00, c10, c11), tri(c00, c11, c01)) {
                        (Some(k1), Some(k2)) => k1[0][2] + k2[0][1],
                        _ => f64::INFINITY,
                    };
                    let diag_b = match (tri(c00, c10, c01), tri(c10, c11, c01)) {
                        (Some(k1), Some(k2)) => k1[1][2] + k2[0][2],
                        _ => f64::INFINITY,
                    };
                    if diag_a <= diag_b {
                        elements.push([c00, c10, c11, 0]);
                        elements.push([c00, c11, c01, 0]);
                    } else {
                        elements.push([c00, c10, c01, 0]);
                        elements.push([c10, c11, c01, 0]);
                    }
                }
            }
        } else {
            const PERMS: [[usize; 3]; 6] = [
                [0, 1, 2],
                [0, 2, 1],
                [1, 0, 2],
                [1, 2, 0],
                [2, 0, 1],
                [2, 1, 0],
            ];
            for i in 0..grid.nr() {
                for k in 0..grid.ntheta() {
                    for l in 0..grid.nphi() {
                        for perm in PERMS {
                            let mut idx = [i, k, l];
                            let mut tet = [grid.node_id(i, k, l); 4];
                            for (s, &axis) in perm.iter().enumerate() {
                                idx[axis] += 1;
                                tet[s + 1] = grid.node_id(idx[0], idx[1], idx[2]);
                            }
                            let distinct = (0..4).all(|a| (a + 1..4).all(|b| tet[a] != tet[b]));
                            if distinct {
                                elements.push(tet);
                            }
                        }
                    }
                }
            }
        }
        Self {
            dim,
            positions,
            elements,
        }
    }

    /// Full stiffness matrix over every node, boundary included.
    pub fn stiffness(&self, field: &CoefficientField) -> CsrMatrix {
        let dim = self.dim;
        let locals: Vec<Option<Local>> = self
            .elements
            .par_iter()
            .map(|e| {
                let pts: Vec<[f64; 3]> = e[..=dim].iter().map(|&v| self.positions[v]).collect();
                element_matrix(dim, &pts, field)
            })
            .collect();
        let mut triplets = Vec::with_capacity(self.elements.len() * (dim + 1) * (dim + 1));
        for (e, local) in self.elements.iter().zip(&locals) {
            if let Some(k) = local {
                for p in 0..=dim {
                    for q in 0..=dim {
                        triplets.push((e[p], e[q], k[p][q]));
                    }
                }
            }
        }
        CsrMatrix::from_triplets(self.positions.len(), triplets)
    }

    /// Total measure of the mesh, the inscribed polytope.
    pub fn volume(&self) -> f64 {
        let dim = self.dim;
        self.elements
            .iter()
            .map(|e| {
                let p: Vec<[f64; 3]> = e[..=dim].iter().map(|&v| self.positions[v]).collect();
                if dim == 2 {
                    let e1 = sub(p[1], p[0]);
                    let e2 = sub(p[2], p[0]);
                    (e1[0] * e2[1] - e2[0] * e1[1]).abs() / 2.0
                } else {
                    let c = cross(sub(p[2], p[0]), sub(p[3], p[0]));
                    let e1 = sub(p[1], p[0]);
                    (e1[0] * c[0] + e1[1] * c[1] + e1[2] * c[2]).abs() / 6.0
                }
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn mesh_covers_inscribed_polygon() {
        let grid = PolarGrid::disk(8, 16).unwrap();
        let field = CoefficientField::identity(2).unwrap();
        let mesh = Mesh::build(&grid, &field);
        assert_eq!(mesh.elements.len(), 16 + 2 * 7 * 16);
        let polygon = 0.5 * 16.0 * (2.0 * PI / 16.0).sin();
        assert!((mesh.volume() - polygon).abs() < 1e-12);
    }

    #[test]
    fn ball_mesh_volume_converges() {
        let field = CoefficientField::identity(3).unwrap();
        let v8 = Mesh::build(&PolarGrid::ball(8, 8, 16).unwrap(), &field).volume();
        let v16 = Mesh::build(&PolarGrid::ball(8, 16, 32).unwrap(), &field).volume();
        let exact = 4.0 * PI / 3.0;
        assert!(v8 < exact && v16 < exact);
        assert!((exact - v16) < 0.3 * (exact - v8));
    }

    #[test]
    fn stiffness_annihilates_constants() {
        for grid in [
            PolarGrid::disk(8, 16).unwrap(),
            PolarGrid::ball(8, 8, 8).unwrap(),
        ] {
            let field = CoefficientField::random_constant(grid.dim(), 1.0, 4.0, 3).unwrap();
            let k = Mesh::build(&grid, &field).stiffness(&field);
            let ones = vec![1.0; k.size()];
            let mut y = vec![0.0; k.size()];
            k.matvec(&ones, &mut y);
            assert!(y.iter().all(|v| v.abs() < 1e-12));
        }
    }
}
