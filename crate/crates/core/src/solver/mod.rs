//! Dirichlet solves of `−div(A∇u) = 0` on the unit disk and ball.

pub mod cg;
pub mod grid;
pub mod mesh;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientField;
use crate::error::{Error, Result};
use crate::solutions::{Provenance, Solution};

pub use cg::CsrMatrix;
pub use grid::PolarGrid;
pub use mesh::Mesh;

pub const SOLVER_TOL: f64 = 1e-10;

/// Boundary data on the unit sphere.
pub type BoundaryFn<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub unknowns: usize,
    pub iterations: usize,
    pub relative_residual: f64,
    /// Whether the stiffness matrix has no positive off-diagonal entries,
    /// which guarantees the discrete maximum principle.
    pub monotone: bool,
}

/// Assembled stiffness for one field on one grid.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    grid: PolarGrid,
    stiffness: CsrMatrix,
    label: String,
}

impl DirichletProblem {
    pub fn assemble(field: &CoefficientField, grid: &PolarGrid) -> Result<Self> {
        if field.dim() != grid.dim() {
            return Err(Error::Dimension {
                expected: grid.dim(),
                got: field.dim(),
            });
        }
        let mesh = Mesh::build(grid, field);
        Ok(Self {
            grid: grid.clone(),
            stiffness: mesh.stiffness(field),
            label: field.label().to_string(),
        })
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn is_monotone(&self) -> bool {
        self.stiffness.max_positive_offdiagonal() <= 1e-12
    }

    /// Discrete Dirichlet energy `uᵀKu` of nodal values.
    pub fn energy(&self, values: &[f64]) -> f64 {
        self.stiffness.quadratic_form(values)
    }

    pub fn solve(&self, boundary: BoundaryFn<'_>) -> Result<GridSolution> {
        let grid = &self.grid;
        let positions = grid.node_positions();
        let n = grid.dim();
        let total = grid.node_count();
        let mut values = vec![0.0; total];
        let mut unknown = vec![usize::MAX; total];
        let mut interior = Vec::new();
        for id in 0..total {
            if grid.is_boundary(id) {
                values[id] = boundary(&positions[id][..n]);
                if !values[id].is_finite() {
                    return Err(Error::Input(format!(
                        "boundary data not finite at {:?}",
                        &positions[id][..n]
                    )));
                }
            } else {
                unknown[id] = interior.len();
                interior.push(id);
            }
        }
        let m = interior.len();
        let mut triplets = Vec::with_capacity(self.stiffness.nnz());
        let mut rhs = vec![0.0; m];
        for (row, &id) in interior.iter().enumerate() {
            for (col, v) in self.stiffness.row(id) {
                if unknown[col] == usize::MAX {
                    rhs[row] -= v * values[col];
                } else {
                    triplets.push((row, unknown[col], v));
                }
            }
        }
        let reduced = CsrMatrix::from_triplets(m, triplets);
        let cap = (50.0 * (m as f64).sqrt()).ceil() as usize;
        let mut x = vec![0.0; m];
        let outcome = cg::pcg(&reduced, &rhs, &mut x, SOLVER_TOL, cap)?;
        for (row, &id) in interior.iter().enumerate() {
            values[id] = x[row];
        }
        let report = SolveReport {
            unknowns: m,
            iterations: outcome.iterations,
            relative_residual: outcome.relative_residual,
            monotone: self.is_monotone(),
        };
        Ok(GridSolution::new(
            Arc::new(grid.clone()),
            values,
            report,
            &self.label,
        ))
    }
}

/// Solves `−div(A∇u) = 0` in the ball with `u = boundary` on the sphere.
pub fn solve_dirichlet(
    field: &CoefficientField,
    boundary: BoundaryFn<'_>,
    grid: &PolarGrid,
) -> Result<GridSolution> {
    DirichletProblem::assemble(field, grid)?.solve(boundary)
}

/// Nodal solution with interpolated values and recovered gradients.
#[derive(Debug, Clone)]
pub struct GridSolution {
    grid: Arc<PolarGrid>,
    values: Vec<f64>,
    gradients: Vec<[f64; 3]>,
    report: SolveReport,
    label: String,
}

/// Derivative at `t` of the quadratic through `(x_k, f_k)`.
fn quadratic_slope(x: [f64; 3], f: [f64; 3], t: f64) -> f64 {
    f[0] * (2.0 * t - x[1] - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]))
        + f[1] * (2.0 * t - x[0] - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]))
        + f[2] * (2.0 * t - x[0] - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]))
}

/// Fourth-order centred first difference from values at offsets −2, −1, 1, 2.
fn centred4(m2: f64, m1: f64, p1: f64, p2: f64, h: f64) -> f64 {
    (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h)
}

impl GridSolution {
    fn new(grid: Arc<PolarGrid>, values: Vec<f64>, report: SolveReport, label: &str) -> Self {
        let mut sol = Self {
            grid,
            values,
            gradients: Vec::new(),
            report,
            label: format!("grid solution ({label})"),
        };
        sol.gradients = sol.recover_gradients();
        sol
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn report(&self) -> &SolveReport {
        &self.report
    }

    /// Min and max over boundary nodes and over interior nodes.
    pub fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY);
        let mut i = (f64::INFINITY, f64::NEG_INFINITY);
        for (id, &v) in self.values.iter().enumerate() {
            let r = if self.grid.is_boundary(id) {
                &mut b
            } else {
                &mut i
            };
            r.0 = r.0.min(v);
            r.1 = r.1.max(v);
        }
        (b, i)
    }

    /// Largest nodal deviation from `exact`.
    pub fn max_nodal_error(&self, exact: &dyn Fn(&[f64]) -> f64) -> f64 {
        let n = self.grid.dim();
        self.grid
            .node_positions()
            .iter()
            .zip(&self.values)
            .map(|(p, v)| (v - exact(&p[..n])).abs())
            .fold(0.0, f64::max)
    }

    fn u(&self, i: usize, k: usize, l: usize) -> f64 {
        self.values[self.grid.node_id(i, k, l)]
    }

    /// Value at signed polar index `k` along the meridian through azimuth `l`.
    fn meridian(&self, i: usize, k: isize, l: usize) -> f64 {
        let g = &self.grid;
        let nt = g.ntheta() as isize;
        let half = g.nphi() / 2;
        if k < 0 {
            self.u(i, (-k) as usize, l + half)
        } else if k > nt {
            self.u(i, (2 * nt - k) as usize, l + half)
        } else {
            self.u(i, k as usize, l)
        }
    }

    fn radial_slope(&self, i: usize, k: usize, l: usize) -> f64 {
        let g = &self.grid;
        let r = g.radii();
        let base = if i == g.nr() { i - 2 } else { i - 1 };
        let xs = [r[base], r[base + 1], r[base + 2]];
        let fs = [
            self.u(base, k, l),
            self.u(base + 1, k, l),
            self.u(base + 2, k, l),
        ];
        quadratic_slope(xs, fs, r[i])
    }

    /// Weighted least-squares gradient at the origin from one shell.
    fn shell_fit(&self, i: usize) -> [f64; 3] {
        let g = &self.grid;
        let n = g.dim();
        let r = g.radii()[i];
        let u0 = self.values[0];
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut b = nalgebra::DVector::<f64>::zeros(n);
        let mut add = |p: [f64; 3], v: f64, w: f64| {
            for a in 0..n {
                b[a] += w * (v - u0) * p[a] / r;
                for c in 0..n {
                    m[(a, c)] += w * p[a] * p[c] / (r * r);
                }
            }
        };
        if n == 2 {
            for j in 0..g.ntheta() {
                add(g.position(i, j, 0), self.u(i, j, 0), 1.0);
            }
        } else {
            let dt = std::f64::consts::PI / g.ntheta() as f64;
            let cap = (dt / 2.0).sin() * g.nphi() as f64 / 4.0;
            add(g.position(i, 0, 0), self.u(i, 0, 0), cap);
            add(g.position(i, g.ntheta(), 0), self.u(i, g.ntheta(), 0), cap);
            for k in 1..g.ntheta() {
                let w = g.polar(k).sin();
                for l in 0..g.nphi() {
                    add(g.position(i, k, l), self.u(i, k, l), w);
                }
            }
        }
        let sol = m
            .lu()
            .solve(&b)
            .unwrap_or_else(|| nalgebra::DVector::zeros(n));
        let mut out = [0.0; 3];
        for a in 0..n {
            out[a] = sol[a] / r;
        }
        out
    }

    fn recover_gradients(&self) -> Vec<[f64; 3]> {
        let g = &self.grid;
        let mut out = vec![[0.0; 3]; g.node_count()];
        let r = g.radii();
        // origin: shell fits on the first two shells, extrapolated in r²
        let (g1, g2) = (self.shell_fit(1), self.shell_fit(2));
        let (r1, r2) = (r[1] * r[1], r[2] * r[2]);
        for a in 0..3 {
            out[0][a] = (g1[a] * r2 - g2[a] * r1) / (r2 - r1);
        }
        if g.dim() == 2 {
            let nt = g.ntheta();
            let dt = 2.0 * std::f64::consts::PI / nt as f64;
            for i in 1..=g.nr() {
                for j in 0..nt {
                    let ur = self.radial_slope(i, j, 0);
                    let ut = centred4(
                        self.u(i, j + nt - 2, 0),
                        self.u(i, j + nt - 1, 0),
                        self.u(i, j + 1, 0),
                        self.u(i, j + 2, 0),
                        dt,
                    ) / r[i];
                    let (s, c) = g.azimuth(j).sin_cos();
                    out[g.node_id(i, j, 0)] = [ur * c - ut * s, ur * s + ut * c, 0.0];
                }
            }
            return out;
        }
        let nt = g.ntheta();
        let np = g.nphi();
        let dt = std::f64::consts::PI / nt as f64;
        let dp = 2.0 * std::f64::consts::PI / np as f64;
        for i in 1..=g.nr() {
            let ri = r[i];
            let theta_slope = |k: isize, l: usize| {
                centred4(
                    self.meridian(i, k - 2, l),
                    self.meridian(i, k - 1, l),
                    self.meridian(i, k + 1, l),
                    self.meridian(i, k + 2, l),
                    dt,
                )
            };
            for (k, sign) in [(0usize, 1.0), (nt, -1.0)] {
                // transverse gradient from the meridian slopes through the pole
                let (mut gx, mut gy) = (0.0, 0.0);
                for l in 0..np {
                    let d = sign * theta_slope(k as isize, l) / ri;
                    let (s, c) = g.azimuth(l).sin_cos();
                    gx += 2.0 / np as f64 * d * c;
                    gy += 2.0 / np as f64 * d * s;
                }
                let gz = sign * self.radial_slope(i, k, 0);
                out[g.node_id(i, k, 0)] = [gx, gy, gz];
            }
            for k in 1..nt {
                let (st, ct) = g.polar(k).sin_cos();
                for l in 0..np {
                    let ur = self.radial_slope(i, k, l);
                    let ut = theta_slope(k as isize, l) / ri;
                    let up = centred4(
                        self.u(i, k, l + np - 2),
                        self.u(i, k, l + np - 1),
                        self.u(i, k, l + 1),
                        self.u(i, k, l + 2),
                        dp,
                    ) / (ri * st);
                    let (sp, cp) = g.azimuth(l).sin_cos();
                    out[g.node_id(i, k, l)] = [
                        ur * st * cp + ut * ct * cp - up * sp,
                        ur * st * sp + ut * ct * sp + up * cp,
                        ur * ct - ut * st,
                    ];
                }
            }
        }
        out
    }

    /// Interpolation stencil in grid coordinates: node ids and weights.
    fn stencil(&self, x: &[f64]) -> ([usize; 8], [f64; 8], usize) {
        let g = &self.grid;
        let c = g.grid_coordinates(x);
        let i0 = (c[0].floor() as usize).min(g.nr() - 1);
        let fr = c[0] - i0 as f64;
        let mut ids = [0; 8];
        let mut ws = [0.0; 8];
        if g.dim() == 2 {
            let j0 = c[1].floor();
            let fa = c[1] - j0;
            let j0 = j0 as usize % g.ntheta();
            let mut q = 0;
            for (di, wr) in [(0, 1.0 - fr), (1, fr)] {
                for (dj, wa) in [(0, 1.0 - fa), (1, fa)] {
                    ids[q] = g.node_id(i0 + di, j0 + dj, 0);
                    ws[q] = wr * wa;
                    q += 1;
                }
            }
            return (ids, ws, 4);
        }
        let k0 = (c[1].floor() as usize).min(g.ntheta() - 1);
        let fk = c[1] - k0 as f64;
        let l0 = c[2].floor();
        let fl = c[2] - l0;
        let l0 = l0 as usize % g.nphi();
        let mut q = 0;
        for (di, wr) in [(0, 1.0 - fr), (1, fr)] {
            for (dk, wk) in [(0, 1.0 - fk), (1, fk)] {
                for (dl, wl) in [(0, 1.0 - fl), (1, fl)] {
                    ids[q] = g.node_id(i0 + di, k0 + dk, l0 + dl);
                    ws[q] = wr * wk * wl;
                    q += 1;
                }
            }
        }
        (ids, ws, 8)
    }
}

impl Solution for GridSolution {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (ids, ws, m) = self.stencil(x);
        (0..m).map(|q| ws[q] * self.values[ids[q]]).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.grid.dim();
        let (ids, ws, m) = self.stencil(x);
        let mut out = vec![0.0; n];
        for q in 0..m {
            for a in 0..n {
                out[a] += ws[q] * self.gradients[ids[q]][a];
            }
        }
        out
    }

    fn provenance(&self) -> Provenance {
        Provenance::Grid
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Outer radial mesh width of each compared grid.
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log h`; absent when exact.
    pub order: Option<f64>,
    pub exact: bool,
    /// `"analytic"` or `"successive"` (differences between consecutive grids).
    pub reference: String,
}

/// Errors below this count as exact reproduction.
pub const EXACT_TOL: f64 = 1e-9;

/// Observed order over a ladder of grids, each refining the previous by 2.
pub fn convergence_study(
    field: &CoefficientField,
    boundary: BoundaryFn<'_>,
    grids: &[PolarGrid],
    reference: Option<&dyn Solution>,
) -> Result<ConvergenceReport> {
    if grids.len() < 3 {
        return Err(Error::Input(format!(
            "convergence study needs at least 3 grids, got {}",
            grids.len()
        )));
    }
    for w in grids.windows(2) {
        if w[1].nr() != 2 * w[0].nr()
            || w[1].ntheta() != 2 * w[0].ntheta()
            || w[1].nphi() != 2 * w[0].nphi()
        {
            return Err(Error::Input("grids must refine by a factor of 2".into()));
        }
    }
    let solutions = grids
        .iter()
        .map(|g| solve_dirichlet(field, boundary, g))
        .collect::<Result<Vec<_>>>()?;
    let (h, errors, kind): (Vec<f64>, Vec<f64>, &str) = match reference {
        Some(exact) => {
            let e = solutions
                .iter()
                .map(|s| s.max_nodal_error(&|x| exact.value(x)))
                .collect();
            (
                grids.iter().map(PolarGrid::h).collect::<Vec<_>>(),
                e,
                "analytic",
            )
        }
        None => {
            let e = solutions
                .windows(2)
                .map(|w| w[0].max_nodal_error(&|x| w[1].value(x)))
                .collect();
            (
                grids[..grids.len() - 1].iter().map(PolarGrid::h).collect(),
                e,
                "successive",
            )
        }
    };
    let exact = errors.iter().all(|&e: &f64| e < EXACT_TOL);
    let order = if exact {
        None
    } else {
        Some(log_slope(&h, &errors))
    };
    Ok(ConvergenceReport {
        h,
        errors,
        order,
        exact,
        reference: kind.into(),
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
