//! Scalar fields with gradient access: closed-form families and the
//! pointwise PDE residual check.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryExpr;
use crate::coefficient::{polar_frame, CoefficientField};
use crate::error::{check_bounds, Error, Result};

/// Evaluations of the radially anisotropic example stay outside `|x| < R_MIN`.
pub const R_MIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Grid,
}

/// A scalar field `u` on (a subset of) the unit ball with gradient access.
pub trait Solution: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn provenance(&self) -> Provenance;

    /// Degree `d` when `u(tx) = t^d u(x)`.
    fn homogeneity(&self) -> Option<f64> {
        None
    }

    /// Radius of the excluded core around a singular origin; zero when smooth.
    fn singular_radius(&self) -> f64 {
        0.0
    }

    fn label(&self) -> String;
}

/// A polynomial in up to three variables, stored as monomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(f64, [u32; 3])>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(f64, [u32; 3])>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Unsupported(format!(
                "polynomials in dimension {dim}"
            )));
        }
        if terms.iter().any(|(_, e)| e[dim..].iter().any(|&p| p != 0)) {
            return Err(Error::Input(
                "monomial uses a variable beyond the dimension".into(),
            ));
        }
        Ok(Self { dim, terms })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * monomial(x, e, None))
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                self.terms
                    .iter()
                    .map(|(c, e)| c * monomial(x, e, Some(i)))
                    .sum()
            })
            .collect()
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (c, e) in &self.terms {
            for i in 0..self.dim {
                if e[i] >= 2 {
                    let mut e2 = *e;
                    e2[i] -= 2;
                    s += c * (e[i] * (e[i] - 1)) as f64 * monomial(x, &e2, None);
                }
            }
        }
        s
    }

    /// Common total degree, if every monomial has the same one.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degs = self
            .terms
            .iter()
            .filter(|(c, _)| *c != 0.0)
            .map(|(_, e)| e.iter().sum::<u32>());
        let first = degs.next().unwrap_or(0);
        degs.all(|d| d == first).then_some(first)
    }
}

fn monomial(x: &[f64], e: &[u32; 3], diff: Option<usize>) -> f64 {
    let mut v = 1.0;
    for (i, &xi) in x.iter().enumerate().take(3) {
        let mut p = e[i];
        if diff == Some(i) {
            if p == 0 {
                return 0.0;
            }
            v *= p as f64;
            p -= 1;
        }
        v *= xi.powi(p as i32);
    }
    v
}

#[derive(Debug, Clone)]
pub struct PolynomialSolution {
    poly: Polynomial,
    label: String,
}

impl PolynomialSolution {
    pub fn new(poly: Polynomial, label: impl Into<String>) -> Self {
        Self {
            poly,
            label: label.into(),
        }
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }
}

impl Solution for PolynomialSolution {
    fn dim(&self) -> usize {
        self.poly.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.poly.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.poly.gradient(x)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Analytic
    }

    fn homogeneity(&self) -> Option<f64> {
        self.poly.homogeneous_degree().map(|d| d as f64)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Number of basis elements of the homogeneous harmonic polynomials of degree `k`.
pub fn harmonic_basis_size(n: usize, k: usize) -> usize {
    match (n, k) {
        (_, 0) => 1,
        (2, _) => 2,
        (3, k) => 2 * k + 1,
        _ => 0,
    }
}

/// Homogeneous harmonic polynomial of degree `k ≤ 3` in `n ∈ {2, 3}`.
///
/// Plane (`index` 0/1): `1`; `x, y`; `x²−y², xy`; `x³−3xy², 3x²y−y³`.
///
/// Space, in this order:
/// - k = 1: `x₁, x₂, x₃`
/// - k = 2: `x₁x₂, x₂x₃, x₁x₃, x₁²−x₂², 2x₃²−x₁²−x₂²`
/// - k = 3: `x₁x₂x₃, x₁(x₁²−3x₂²), x₂(3x₁²−x₂²), x₃(x₁²−x₂²),
///   x₁(4x₃²−x₁²−x₂²), x₂(4x₃²−x₁²−x₂²), x₃(2x₃²−3x₁²−3x₂²)`
pub fn harmonic_polynomial(n: usize, k: usize, index: usize) -> Result<PolynomialSolution> {
    let unsupported = || Error::Unsupported(format!("harmonic polynomial n={n}, k={k}, i={index}"));
    let terms: Vec<(f64, [u32; 3])> = match (n, k, index) {
        (2 | 3, 0, 0) => vec![(1.0, [0, 0, 0])],
        (2, 1, 0) | (3, 1, 0) => vec![(1.0, [1, 0, 0])],
        (2, 1, 1) | (3, 1, 1) => vec![(1.0, [0, 1, 0])],
        (2, 2, 0) => vec![(1.0, [2, 0, 0]), (-1.0, [0, 2, 0])],
        (2, 2, 1) => vec![(1.0, [1, 1, 0])],
        (2, 3, 0) => vec![(1.0, [3, 0, 0]), (-3.0, [1, 2, 0])],
        (2, 3, 1) => vec![(3.0, [2, 1, 0]), (-1.0, [0, 3, 0])],
        (3, 1, 2) => vec![(1.0, [0, 0, 1])],
        (3, 2, 0) => vec![(1.0, [1, 1, 0])],
        (3, 2, 1) => vec![(1.0, [0, 1, 1])],
        (3, 2, 2) => vec![(1.0, [1, 0, 1])],
        (3, 2, 3) => vec![(1.0, [2, 0, 0]), (-1.0, [0, 2, 0])],
        (3, 2, 4) => vec![(2.0, [0, 0, 2]), (-1.0, [2, 0, 0]), (-1.0, [0, 2, 0])],
        (3, 3, 0) => vec![(1.0, [1, 1, 1])],
        (3, 3, 1) => vec![(1.0, [3, 0, 0]), (-3.0, [1, 2, 0])],
        (3, 3, 2) => vec![(3.0, [2, 1, 0]), (-1.0, [0, 3, 0])],
        (3, 3, 3) => vec![(1.0, [2, 0, 1]), (-1.0, [0, 2, 1])],
        (3, 3, 4) => vec![(4.0, [1, 0, 2]), (-1.0, [3, 0, 0]), (-1.0, [1, 2, 0])],
        (3, 3, 5) => vec![(4.0, [0, 1, 2]), (-1.0, [2, 1, 0]), (-1.0, [0, 3, 0])],
        (3, 3, 6) => vec![(2.0, [0, 0, 3]), (-3.0, [2, 0, 1]), (-3.0, [0, 2, 1])],
        _ => return Err(unsupported()),
    };
    Ok(PolynomialSolution::new(
        Polynomial::new(n, terms)?,
        format!("harmonic:n={n},k={k},i={index}"),
    ))
}

/// Affine field `⟨g, x⟩`; solves every constant-coefficient equation.
pub fn affine(gradient: &[f64]) -> Result<PolynomialSolution> {
    let n = gradient.len();
    if !(1..=3).contains(&n) {
        return Err(Error::Unsupported(format!("polynomials in dimension {n}")));
    }
    let terms = gradient
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let mut e = [0u32; 3];
            e[i] = 1;
            (g, e)
        })
        .collect();
    let list: Vec<String> = gradient.iter().map(|g| format!("{g}")).collect();
    Ok(PolynomialSolution::new(
        Polynomial::new(n, terms)?,
        format!("affine:{}", list.join(",")),
    ))
}

/// `|x|²`, which solves no constant-coefficient equation; used as a negative control.
pub fn norm_squared(n: usize) -> Result<PolynomialSolution> {
    if !(1..=3).contains(&n) {
        return Err(Error::Unsupported(format!("polynomials in dimension {n}")));
    }
    let terms = (0..n)
        .map(|i| {
            let mut e = [0u32; 3];
            e[i] = 2;
            (1.0, e)
        })
        .collect();
    Ok(PolynomialSolution::new(
        Polynomial::new(n, terms)?,
        "normsq",
    ))
}

/// `u = r^α cos θ` with `α = √(λ/Λ)`, the solution paired with
/// [`CoefficientField::ps2d`].
#[derive(Debug, Clone, Copy)]
pub struct PsSolution {
    pub lambda: f64,
    pub big_lambda: f64,
    pub alpha: f64,
}

impl PsSolution {
    pub fn new(lambda: f64, big_lambda: f64) -> Result<Self> {
        check_bounds(lambda, big_lambda)?;
        Ok(Self {
            lambda,
            big_lambda,
            alpha: (lambda / big_lambda).sqrt(),
        })
    }
}

impl Solution for PsSolution {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            return 0.0;
        }
        r.powf(self.alpha - 1.0) * x[0]
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 == 0.0 {
            return vec![0.0, 0.0];
        }
        let r = r2.sqrt();
        let a = self.alpha;
        let base = r.powf(a - 1.0);
        let c = (a - 1.0) * r.powf(a - 3.0) * x[0];
        vec![base + c * x[0], c * x[1]]
    }

    fn provenance(&self) -> Provenance {
        Provenance::Analytic
    }

    fn homogeneity(&self) -> Option<f64> {
        Some(self.alpha)
    }

    fn singular_radius(&self) -> f64 {
        if self.alpha < 1.0 {
            R_MIN
        } else {
            0.0
        }
    }

    fn label(&self) -> String {
        format!("ps2d:lambda={},Lambda={}", self.lambda, self.big_lambda)
    }
}

/// The sharp planar example: radial eigenvalue `Λ`, tangential `λ`, and
/// `u = r^{√(λ/Λ)} cos θ`.
pub fn ps_example(lambda: f64, big_lambda: f64) -> Result<(CoefficientField, PsSolution)> {
    Ok((
        CoefficientField::ps2d(lambda, big_lambda)?,
        PsSolution::new(lambda, big_lambda)?,
    ))
}

/// The 0-homogeneous extension `x ↦ f(x/|x|)` of boundary data. Only its
/// restriction to spheres is meaningful; it is not a solution of anything.
#[derive(Debug, Clone)]
pub struct TraceExtension {
    expr: BoundaryExpr,
}

impl TraceExtension {
    pub fn new(expr: BoundaryExpr) -> Self {
        Self { expr }
    }
}

impl Solution for TraceExtension {
    fn dim(&self) -> usize {
        self.expr.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.expr.value(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.expr.gradient(x)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Analytic
    }

    fn homogeneity(&self) -> Option<f64> {
        Some(0.0)
    }

    fn label(&self) -> String {
        format!("trace:{}", self.expr)
    }
}

impl<S: Solution + ?Sized> Solution for Arc<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (**self).gradient(x)
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
    fn homogeneity(&self) -> Option<f64> {
        (**self).homogeneity()
    }
    fn singular_radius(&self) -> f64 {
        (**self).singular_radius()
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// Central-difference approximation of `div(A∇u)(x)` from the exact gradient.
pub fn residual(field: &CoefficientField, sol: &dyn Solution, x: &[f64], h: f64) -> Result<f64> {
    let n = field.dim();
    if sol.dim() != n || x.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: sol.dim().min(x.len()),
        });
    }
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let singular = field.singular_at_origin() || sol.singular_radius() > 0.0;
    if singular && r <= 2.0 * h {
        return Err(Error::Domain(format!(
            "|x| = {r:e} is within 2h of the singular origin"
        )));
    }
    if sol.provenance() == Provenance::Grid && r + 2.0 * h > 1.0 {
        return Err(Error::Domain("stencil leaves the unit ball".into()));
    }
    let flux = |p: &[f64]| -> Vec<f64> {
        let a = field.matrix(p);
        let g = sol.gradient(p);
        (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)] * g[j]).sum())
            .collect()
    };
    let mut div = 0.0;
    let mut p = x.to_vec();
    for i in 0..n {
        p[i] = x[i] + h;
        let fp = flux(&p)[i];
        p[i] = x[i] - h;
        let fm = flux(&p)[i];
        p[i] = x[i];
        div += (fp - fm) / (2.0 * h);
    }
    Ok(div)
}

/// Normal and tangential components of `∇u` at a point of a sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientSplit {
    pub u_n: f64,
    pub u_t: Vec<f64>,
}

impl GradientSplit {
    pub fn tangential_sq(&self) -> f64 {
        self.u_t.iter().map(|v| v * v).sum()
    }
}

pub fn split_gradient(grad: &[f64], x: &[f64]) -> Result<GradientSplit> {
    let q = polar_frame(x)?;
    let n = x.len();
    let polar: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| q[(i, j)] * grad[i]).sum())
        .collect();
    Ok(GradientSplit {
        u_n: polar[0],
        u_t: polar[1..].to_vec(),
    })
}

pub fn gradient_split(sol: &dyn Solution, x: &[f64]) -> Result<GradientSplit> {
    if x.len() != sol.dim() {
        return Err(Error::Dimension {
            expected: sol.dim(),
            got: x.len(),
        });
    }
    split_gradient(&sol.gradient(x), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::ball_samples;
    use approx::assert_abs_diff_eq;

    fn all_harmonics() -> Vec<PolynomialSolution> {
        let mut out = Vec::new();
        for n in [2, 3] {
            for k in 0..=3 {
                for i in 0..harmonic_basis_size(n, k) {
                    out.push(harmonic_polynomial(n, k, i).unwrap());
                }
            }
        }
        out
    }

    #[test]
    fn harmonic_examples() {
        let u = harmonic_polynomial(2, 1, 0).unwrap();
        assert_eq!(u.value(&[0.3, 0.7]), 0.3);
        assert_eq!(u.gradient(&[0.3, 0.7]), vec![1.0, 0.0]);
        let u = harmonic_polynomial(2, 2, 1).unwrap();
        assert_abs_diff_eq!(u.value(&[0.3, 0.7]), 0.21, epsilon = 1e-15);
        let u = harmonic_polynomial(3, 2, 0).unwrap();
        assert_eq!(u.gradient(&[0.2, 0.5, 0.9]), vec![0.5, 0.2, 0.0]);
        assert!(matches!(
            harmonic_polynomial(3, 4, 0),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            harmonic_polynomial(2, 2, 2),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            harmonic_polynomial(4, 1, 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn every_basis_element_is_harmonic_and_homogeneous() {
        for u in all_harmonics() {
            for x in ball_samples(u.dim(), 20, 2) {
                assert_abs_diff_eq!(u.polynomial().laplacian(&x), 0.0, epsilon = 1e-12);
                let t = 0.37;
                let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
                let d = u.homogeneity().unwrap();
                assert_abs_diff_eq!(u.value(&tx), t.powf(d) * u.value(&x), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn analytic_gradients_match_central_differences() {
        let mut sols: Vec<Box<dyn Solution>> = all_harmonics()
            .into_iter()
            .map(|u| Box::new(u) as _)
            .collect();
        sols.push(Box::new(PsSolution::new(1.0, 4.0).unwrap()));
        sols.push(Box::new(norm_squared(3).unwrap()));
        let h = 1e-4;
        for u in &sols {
            for x in ball_samples(u.dim(), 30, 11) {
                if x.iter().map(|v| v * v).sum::<f64>().sqrt() < 0.05 {
                    continue;
                }
                let g = u.gradient(&x);
                let scale = g.iter().map(|v| v.abs()).fold(1.0, f64::max);
                for i in 0..u.dim() {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (u.value(&xp) - u.value(&xm)) / (2.0 * h);
                    assert!(
                        (fd - g[i]).abs() <= 1e-6 * scale,
                        "{}: {fd} vs {}",
                        u.label(),
                        g[i]
                    );
                }
            }
        }
    }

    #[test]
    fn ps_isotropic_limit_is_x1() {
        let (f, u) = ps_example(1.0, 1.0).unwrap();
        assert_eq!(u.alpha, 1.0);
        assert!(
            (f.matrix(&[0.3, 0.4]) - nalgebra::DMatrix::<f64>::identity(2, 2))
                .abs()
                .max()
                < 1e-15
        );
        assert_abs_diff_eq!(u.value(&[0.3, 0.4]), 0.3, epsilon = 1e-15);
        assert!(matches!(ps_example(2.0, 1.0), Err(Error::Ordering { .. })));
    }

    #[test]
    fn ps_pair_solves_the_equation() {
        let (f, u) = ps_example(1.0, 4.0).unwrap();
        assert_eq!(u.alpha, 0.5);
        let mut count = 0;
        for x in ball_samples(2, 400, 17) {
            let r = x[0].hypot(x[1]);
            if r < 1e-4 || r <= 2e-5 {
                continue;
            }
            // step scaled with r keeps the O(h²) term small near the singularity
            let h = 1e-4 * r;
            let res = residual(&f, &u, &x, h).unwrap();
            assert!(res.abs() < 1e-6, "residual {res} at r = {r}");
            count += 1;
            if count == 100 {
                break;
            }
        }
        assert_eq!(count, 100);
    }

    #[test]
    fn residual_examples() {
        let id = CoefficientField::identity(2).unwrap();
        let x = [0.3, -0.2];
        let u = harmonic_polynomial(2, 1, 0).unwrap();
        assert_abs_diff_eq!(residual(&id, &u, &x, 1e-3).unwrap(), 0.0, epsilon = 1e-12);
        let id3 = CoefficientField::identity(3).unwrap();
        let u = harmonic_polynomial(3, 2, 0).unwrap();
        assert_abs_diff_eq!(
            residual(&id3, &u, &[0.1, 0.2, 0.3], 1e-3).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let u = norm_squared(2).unwrap();
        assert_abs_diff_eq!(residual(&id, &u, &x, 1e-3).unwrap(), 4.0, epsilon = 1e-9);

        let (f, u) = ps_example(1.0, 4.0).unwrap();
        assert!(matches!(
            residual(&f, &u, &[1e-5, 0.0], 1e-5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn variable_field_pairs_solve_the_equation() {
        let f = CoefficientField::iso_x1(2, 0.5).unwrap();
        let u = harmonic_polynomial(2, 1, 1).unwrap();
        let g = CoefficientField::cross_diag(0.3).unwrap();
        let v = harmonic_polynomial(2, 2, 1).unwrap();
        for x in ball_samples(2, 20, 3) {
            assert_abs_diff_eq!(residual(&f, &u, &x, 1e-3).unwrap(), 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(residual(&g, &v, &x, 1e-3).unwrap(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn gradient_split_examples() {
        let u = harmonic_polynomial(2, 1, 0).unwrap();
        let s = gradient_split(&u, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(s.u_n, 1.0);
        assert_abs_diff_eq!(s.tangential_sq(), 0.0);
        let s = gradient_split(&u, &[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(s.u_n, 0.0);
        assert_abs_diff_eq!(s.tangential_sq(), 1.0, epsilon = 1e-15);

        let u = harmonic_polynomial(3, 2, 0).unwrap();
        for x in ball_samples(3, 50, 8) {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let p: Vec<f64> = x.iter().map(|v| v / r).collect();
            let s = gradient_split(&u, &p).unwrap();
            assert_abs_diff_eq!(s.u_n, 2.0 * p[0] * p[1], epsilon = 1e-12);
            let want = p[0] * p[0] + p[1] * p[1] - 4.0 * p[0] * p[0] * p[1] * p[1];
            assert_abs_diff_eq!(s.tangential_sq(), want, epsilon = 1e-12);
        }
        assert!(gradient_split(&u, &[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_split_is_pythagorean() {
        for u in all_harmonics() {
            for x in ball_samples(u.dim(), 20, 21) {
                let s = gradient_split(&u, &x).unwrap();
                let g2: f64 = u.gradient(&x).iter().map(|v| v * v).sum();
                assert_abs_diff_eq!(s.u_n * s.u_n + s.tangential_sq(), g2, epsilon = 1e-10);
            }
        }
    }
}
