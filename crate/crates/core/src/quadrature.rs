//! Product quadrature on balls and spheres.
//!
//! Radial direction: Gauss–Legendre on `[r_min, r]`, optionally graded toward
//! the inner end via `ρ = r_min + (r − r_min) t^q`. Angular direction: the
//! trapezoid rule on S¹ (exact for trigonometric polynomials of degree below
//! the node count) or Gauss–Legendre in `cos θ` × trapezoid in `φ` on S².

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_m
        let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if m == 0 { 1.0 } else { p1 };
    let dp = m as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub dim: usize,
    pub radial_nodes: usize,
    /// Trapezoid nodes on S¹ (n = 2) or azimuthal nodes (n = 3).
    pub angular_nodes: usize,
    /// Gauss–Legendre nodes in `cos θ` (n = 3 only).
    pub polar_nodes: usize,
    pub r_min: f64,
    /// Exponent `q` of the radial grading; 1 is plain Gauss–Legendre.
    pub grading: u32,
    #[serde(skip)]
    cache: RuleCache,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct RuleCache {
    /// Reference radial rule on [0, 1].
    t: Vec<f64>,
    tw: Vec<f64>,
    /// Unit directions, flattened with stride `dim`, and their S^{n-1} weights.
    dirs: Vec<f64>,
    dir_weights: Vec<f64>,
}

/// A quadrature point with its weight.
#[derive(Debug, Clone, Copy)]
pub struct Node<'a> {
    pub x: &'a [f64],
    pub weight: f64,
}

impl QuadratureRule {
    /// 64 radial nodes; 256 angular nodes in the plane, 48 × 96 on S².
    pub fn default_for(dim: usize) -> Result<Self> {
        match dim {
            2 => Self::new(2, 64, 256, 0, 0.0, 1),
            3 => Self::new(3, 64, 96, 48, 0.0, 1),
            _ => Err(Error::Unsupported(format!("quadrature in dimension {dim}"))),
        }
    }

    pub fn new(
        dim: usize,
        radial: usize,
        angular: usize,
        polar: usize,
        r_min: f64,
        grading: u32,
    ) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Unsupported(format!("quadrature in dimension {dim}")));
        }
        if radial == 0 || angular == 0 || (dim == 3 && polar == 0) {
            return Err(Error::Input(
                "quadrature node counts must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&r_min) {
            return Err(Error::Domain(format!(
                "r_min must lie in [0, 1), got {r_min}"
            )));
        }
        if grading == 0 {
            return Err(Error::Input("grading exponent must be at least 1".into()));
        }
        let mut rule = Self {
            dim,
            radial_nodes: radial,
            angular_nodes: angular,
            polar_nodes: if dim == 3 { polar } else { 0 },
            r_min,
            grading,
            cache: RuleCache::default(),
        };
        rule.build();
        Ok(rule)
    }

    /// Same angular rule, integrating only over `|x| ≥ r_min`.
    pub fn with_core(&self, r_min: f64) -> Result<Self> {
        Self::new(
            self.dim,
            self.radial_nodes,
            self.angular_nodes,
            self.polar_nodes,
            r_min,
            self.grading,
        )
    }

    pub fn with_grading(&self, grading: u32) -> Result<Self> {
        Self::new(
            self.dim,
            self.radial_nodes,
            self.angular_nodes,
            self.polar_nodes,
            self.r_min,
            grading,
        )
    }

    fn build(&mut self) {
        let (x, w) = gauss_legendre(self.radial_nodes);
        self.cache.t = x.iter().map(|v| 0.5 * (v + 1.0)).collect();
        self.cache.tw = w.iter().map(|v| 0.5 * v).collect();
        let mut dirs = Vec::new();
        let mut dw = Vec::new();
        if self.dim == 2 {
            let m = self.angular_nodes;
            for j in 0..m {
                let t = 2.0 * PI * j as f64 / m as f64;
                dirs.extend_from_slice(&[t.cos(), t.sin()]);
                dw.push(2.0 * PI / m as f64);
            }
        } else {
            let (z, zw) = gauss_legendre(self.polar_nodes);
            let m = self.angular_nodes;
            for (zi, wi) in z.iter().zip(&zw) {
                let s = (1.0 - zi * zi).max(0.0).sqrt();
                for j in 0..m {
                    let p = 2.0 * PI * j as f64 / m as f64;
                    dirs.extend_from_slice(&[s * p.cos(), s * p.sin(), *zi]);
                    dw.push(wi * 2.0 * PI / m as f64);
                }
            }
        }
        self.cache.dirs = dirs;
        self.cache.dir_weights = dw;
    }

    fn ensure_cache(&self) -> std::borrow::Cow<'_, RuleCache> {
        if self.cache.t.is_empty() {
            let mut r = self.clone();
            r.build();
            std::borrow::Cow::Owned(r.cache)
        } else {
            std::borrow::Cow::Borrowed(&self.cache)
        }
    }

    pub fn direction_count(&self) -> usize {
        if self.dim == 2 {
            self.angular_nodes
        } else {
            self.angular_nodes * self.polar_nodes
        }
    }

    pub fn total_nodes(&self) -> usize {
        self.radial_nodes * self.direction_count()
    }

    /// Radial nodes and weights for `∫_{r_min}^{r} f(ρ) dρ`.
    pub fn radial_rule(&self, r: f64) -> Vec<(f64, f64)> {
        let cache = self.ensure_cache();
        let len = r - self.r_min;
        let q = self.grading as i32;
        cache
            .t
            .iter()
            .zip(&cache.tw)
            .map(|(&t, &w)| {
                let rho = self.r_min + len * t.powi(q);
                let jac = len * q as f64 * t.powi(q - 1);
                (rho, w * jac)
            })
            .collect()
    }

    /// Calls `f` at every node of `S_r` with weights summing to `|S_r|`.
    pub fn for_each_sphere_node(&self, r: f64, mut f: impl FnMut(Node<'_>)) {
        let cache = self.ensure_cache();
        let n = self.dim;
        let scale = r.powi(n as i32 - 1);
        let mut x = vec![0.0; n];
        for (d, w) in cache.dirs.chunks_exact(n).zip(&cache.dir_weights) {
            for i in 0..n {
                x[i] = r * d[i];
            }
            f(Node {
                x: &x,
                weight: w * scale,
            });
        }
    }

    /// Integral over the sphere `S_r` of `f(x)`.
    pub fn integrate_sphere(&self, r: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut s = 0.0;
        self.for_each_sphere_node(r, |node| s += node.weight * f(node.x));
        s
    }

    /// Integral over `B_r \ B_{r_min}` of `f(x)`, parallel over radial nodes
    /// with a fixed reduction order.
    pub fn integrate_ball<F>(&self, r: f64, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        use rayon::prelude::*;
        let n = self.dim;
        let radial = self.radial_rule(r);
        let partial: Vec<f64> = radial
            .par_iter()
            .map(|&(rho, w)| w * self.integrate_sphere(rho, &f))
            .collect();
        debug_assert!(n >= 2);
        partial.iter().sum()
    }

    /// Vector-valued variant of [`integrate_ball`](Self::integrate_ball).
    pub fn integrate_ball_vec<F>(&self, r: f64, len: usize, f: F) -> Vec<f64>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        use rayon::prelude::*;
        let radial = self.radial_rule(r);
        let partial: Vec<Vec<f64>> = radial
            .par_iter()
            .map(|&(rho, w)| {
                let mut acc = vec![0.0; len];
                let mut buf = vec![0.0; len];
                self.for_each_sphere_node(rho, |node| {
                    buf.iter_mut().for_each(|b| *b = 0.0);
                    f(node.x, &mut buf);
                    for (a, b) in acc.iter_mut().zip(&buf) {
                        *a += w * node.weight * b;
                    }
                });
                acc
            })
            .collect();
        let mut total = vec![0.0; len];
        for p in &partial {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        total
    }

    /// Vector-valued sphere integral.
    pub fn integrate_sphere_vec(
        &self,
        r: f64,
        len: usize,
        mut f: impl FnMut(&[f64], &mut [f64]),
    ) -> Vec<f64> {
        let mut acc = vec![0.0; len];
        let mut buf = vec![0.0; len];
        self.for_each_sphere_node(r, |node| {
            buf.iter_mut().for_each(|b| *b = 0.0);
            f(node.x, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += node.weight * b;
            }
        });
        acc
    }
}

/// `|B_1|` in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    unit_sphere_area(n) / n as f64
}

/// `|S^{n-1}|`, the area of the unit sphere in ℝⁿ.
pub fn unit_sphere_area(n: usize) -> f64 {
    // |S^{n-1}| = 2π^{n/2}/Γ(n/2), via the recurrence |S^{n+1}| = 2π|S^{n-1}|/n
    let even = n.is_multiple_of(2);
    let mut area = if even { 2.0 * PI } else { 2.0 };
    let mut k = if even { 2 } else { 1 };
    while k < n {
        area *= 2.0 * PI / k as f64;
        k += 2;
    }
    area
}
