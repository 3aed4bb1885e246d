use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Structured polar grid on the closed unit ball.
///
/// Radial index `i = 0..=nr` (`i = 0` is the origin), angular index
/// `j = 0..ntheta` (periodic) in the plane. In three dimensions `k = 0..=ntheta`
/// runs over the polar angle from +x₃ and `l = 0..nphi` over the azimuth; the
/// origin and the two poles of every sphere are single nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    dim: usize,
    nr: usize,
    ntheta: usize,
    nphi: usize,
    clustering: f64,
    radii: Vec<f64>,
}

pub const MIN_NODES: usize = 8;
/// Node budget for a single grid.
pub const MAX_GRID_NODES: usize = 1 << 24;

impl PolarGrid {
    pub fn disk(nr: usize, ntheta: usize) -> Result<Self> {
        Self::new(2, nr, ntheta, 0, 0.0)
    }

    pub fn ball(nr: usize, ntheta: usize, nphi: usize) -> Result<Self> {
        Self::new(3, nr, ntheta, nphi, 0.0)
    }

    /// `clustering = κ` places radius `r_i = (e^{κ i/nr} − 1)/(e^κ − 1)`; `κ = 0` is uniform.
    pub fn new(dim: usize, nr: usize, ntheta: usize, nphi: usize, clustering: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Unsupported(format!(
                "grid solves in dimension {dim}"
            )));
        }
        let counts: &[usize] = if dim == 2 {
            &[nr, ntheta]
        } else {
            &[nr, ntheta, nphi]
        };
        if counts.iter().any(|&c| c < MIN_NODES) {
            return Err(Error::Input(format!(
                "grid needs at least {MIN_NODES} nodes per direction, got {counts:?}"
            )));
        }
        let total = counts
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c.checked_add(1)?));
        if total.is_none_or(|t| t > MAX_GRID_NODES) {
            return Err(Error::Input(format!(
                "grid {counts:?} exceeds {MAX_GRID_NODES} nodes"
            )));
        }
        let angular = if dim == 2 { ntheta } else { nphi };
        if angular % 2 != 0 {
            return Err(Error::Input(format!(
                "periodic angular node count must be even, got {angular}"
            )));
        }
        if !clustering.is_finite() || clustering.abs() > 20.0 {
            return Err(Error::Input(format!(
                "clustering {clustering} out of range"
            )));
        }
        let mut grid = Self {
            dim,
            nr,
            ntheta,
            nphi: if dim == 3 { nphi } else { 0 },
            clustering,
            radii: Vec::new(),
        };
        grid.radii = (0..=nr)
            .map(|i| grid.radius_at(i as f64 / nr as f64))
            .collect();
        grid.radii[0] = 0.0;
        grid.radii[nr] = 1.0;
        Ok(grid)
    }

    /// Grid with every count doubled.
    pub fn refined(&self) -> Result<Self> {
        Self::new(
            self.dim,
            2 * self.nr,
            2 * self.ntheta,
            2 * self.nphi,
            self.clustering,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn nphi(&self) -> usize {
        self.nphi
    }

    pub fn clustering(&self) -> f64 {
        self.clustering
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Radial mesh width of the outermost layer.
    pub fn h(&self) -> f64 {
        1.0 / self.nr as f64
    }

    fn radius_at(&self, t: f64) -> f64 {
        let k = self.clustering;
        if k.abs() < 1e-12 {
            t
        } else {
            (k * t).exp_m1() / k.exp_m1()
        }
    }

    /// Fractional radial index of radius `r`.
    pub fn radial_coordinate(&self, r: f64) -> f64 {
        let k = self.clustering;
        let t = if k.abs() < 1e-12 {
            r
        } else {
            (r * k.exp_m1()).ln_1p() / k
        };
        (t * self.nr as f64).clamp(0.0, self.nr as f64)
    }

    /// Angle of the periodic index `j` (plane) or azimuth `l` (space).
    pub fn azimuth(&self, j: usize) -> f64 {
        let m = if self.dim == 2 {
            self.ntheta
        } else {
            self.nphi
        };
        2.0 * PI * (j % m) as f64 / m as f64
    }

    /// Polar angle of index `k` (space only).
    pub fn polar(&self, k: usize) -> f64 {
        PI * k as f64 / self.ntheta as f64
    }

    fn shell_size(&self) -> usize {
        if self.dim == 2 {
            self.ntheta
        } else {
            2 + (self.ntheta - 1) * self.nphi
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.nr * self.shell_size()
    }

    pub fn boundary_count(&self) -> usize {
        self.shell_size()
    }

    /// Node id of a grid index, resolving the origin, poles and periodic wrap.
    pub fn node_id(&self, i: usize, k: usize, l: usize) -> usize {
        if i == 0 {
            return 0;
        }
        let base = 1 + (i - 1) * self.shell_size();
        if self.dim == 2 {
            return base + k % self.ntheta;
        }
        if k == 0 {
            base
        } else if k == self.ntheta {
            base + 1
        } else {
            base + 2 + (k - 1) * self.nphi + l % self.nphi
        }
    }

    /// Radial index of a node.
    pub fn node_shell(&self, id: usize) -> usize {
        if id == 0 {
            0
        } else {
            1 + (id - 1) / self.shell_size()
        }
    }

    pub fn is_boundary(&self, id: usize) -> bool {
        self.node_shell(id) == self.nr
    }

    pub fn position(&self, i: usize, k: usize, l: usize) -> [f64; 3] {
        let r = self.radii[i];
        if self.dim == 2 {
            let t = self.azimuth(k);
            [r * t.cos(), r * t.sin(), 0.0]
        } else {
            let (st, ct) = self.polar(k).sin_cos();
            let p = self.azimuth(l);
            let st = if k == 0 || k == self.ntheta { 0.0 } else { st };
            [r * st * p.cos(), r * st * p.sin(), r * ct]
        }
    }

    /// Cartesian coordinates of every node, indexed by node id.
    pub fn node_positions(&self) -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; self.node_count()];
        for i in 1..=self.nr {
            if self.dim == 2 {
                for j in 0..self.ntheta {
                    out[self.node_id(i, j, 0)] = self.position(i, j, 0);
                }
            } else {
                for k in 0..=self.ntheta {
                    let ls = if k == 0 || k == self.ntheta {
                        1
                    } else {
                        self.nphi
                    };
                    for l in 0..ls {
                        out[self.node_id(i, k, l)] = self.position(i, k, l);
                    }
                }
            }
        }
        out
    }

    /// Exact measures of the polar cells `[r_i, r_{i+1}] × angular cell`.
    pub fn cell_measures(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.nr {
            let (a, b) = (self.radii[i], self.radii[i + 1]);
            if self.dim == 2 {
                let m = 0.5 * (b * b - a * a) * 2.0 * PI / self.ntheta as f64;
                out.extend(std::iter::repeat_n(m, self.ntheta));
            } else {
                let radial = (b.powi(3) - a.powi(3)) / 3.0;
                let dphi = 2.0 * PI / self.nphi as f64;
                for k in 0..self.ntheta {
                    let band = self.polar(k).cos() - self.polar(k + 1).cos();
                    out.extend(std::iter::repeat_n(radial * band * dphi, self.nphi));
                }
            }
        }
        out
    }

    /// Continuous grid coordinates `(radial, angular, azimuthal)` of a point.
    pub fn grid_coordinates(&self, x: &[f64]) -> [f64; 3] {
        if self.dim == 2 {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let t = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
            [
                self.radial_coordinate(r),
                t / (2.0 * PI) * self.ntheta as f64,
                0.0,
            ]
        } else {
            let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let r = (rho * rho + x[2] * x[2]).sqrt();
            let theta = rho.atan2(x[2]);
            let phi = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
            [
                self.radial_coordinate(r),
                theta / PI * self.ntheta as f64,
                phi / (2.0 * PI) * self.nphi as f64,
            ]
        }
    }
}
