//! Energy functionals, the Pohozaev-type identity and spherical inequalities.

use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientField;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::solutions::{split_gradient, Solution, R_MIN};

fn check_pair(
    field: &CoefficientField,
    sol: &dyn Solution,
    rule: &QuadratureRule,
) -> Result<usize> {
    let n = field.dim();
    if sol.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: sol.dim(),
        });
    }
    if rule.dim != n {
        return Err(Error::Dimension {
            expected: n,
            got: rule.dim,
        });
    }
    Ok(n)
}

fn check_derivatives(field: &CoefficientField) -> Result<()> {
    if !field.is_constant() && !field.has_analytic_derivatives() {
        return Err(Error::Capability(format!(
            "field '{}' has no derivative evaluator",
            field.label()
        )));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("radius must lie in (0, 1], got {r}")));
    }
    Ok(())
}

fn energy_density(field: &CoefficientField, sol: &dyn Solution, x: &[f64]) -> f64 {
    let a = field.matrix(x);
    let g = sol.gradient(x);
    let n = g.len();
    let mut e = 0.0;
    for i in 0..n {
        for j in 0..n {
            e += a[(i, j)] * g[i] * g[j];
        }
    }
    e
}

/// Whether the pair needs special treatment near the origin.
pub fn is_singular(field: &CoefficientField, sol: &dyn Solution) -> bool {
    field.singular_at_origin() || sol.singular_radius() > 0.0
}

/// Rule for energy profiles: graded toward the origin when the pair is singular there.
pub fn profile_rule(field: &CoefficientField, sol: &dyn Solution) -> Result<QuadratureRule> {
    let rule = QuadratureRule::default_for(field.dim())?;
    if is_singular(field, sol) {
        rule.with_grading(4)
    } else {
        Ok(rule)
    }
}

/// Rule for the Pohozaev identity: the annulus `R_MIN ≤ |x| ≤ 1` when singular.
pub fn pohozaev_rule(field: &CoefficientField, sol: &dyn Solution) -> Result<QuadratureRule> {
    let rule = QuadratureRule::default_for(field.dim())?;
    if is_singular(field, sol) {
        rule.with_core(sol.singular_radius().max(R_MIN))
    } else {
        Ok(rule)
    }
}

/// `g(r) = ∫_{B_r} ⟨A∇u, ∇u⟩`.
pub fn bulk_energy(
    field: &CoefficientField,
    sol: &dyn Solution,
    r: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_pair(field, sol, rule)?;
    check_radius(r)?;
    if r <= rule.r_min {
        return Ok(0.0);
    }
    Ok(rule.integrate_ball(r, |x| energy_density(field, sol, x)))
}

/// `∫_{S_r} ⟨A∇u, ∇u⟩`, the derivative of [`bulk_energy`] in `r`.
pub fn surface_energy(
    field: &CoefficientField,
    sol: &dyn Solution,
    r: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_pair(field, sol, rule)?;
    check_radius(r)?;
    Ok(rule.integrate_sphere(r, |x| energy_density(field, sol, x)))
}

/// Mean value of `u` over `S_r`.
pub fn sphere_mean(sol: &dyn Solution, r: f64, rule: &QuadratureRule) -> Result<f64> {
    if sol.dim() != rule.dim {
        return Err(Error::Dimension {
            expected: rule.dim,
            got: sol.dim(),
        });
    }
    check_radius(r)?;
    let total = rule.integrate_sphere(r, |x| sol.value(x));
    let area = rule.integrate_sphere(r, |_| 1.0);
    Ok(total / area)
}

/// `(∫_{S_r} |∇_T u|², ∫_{S_r} u_N²)`.
pub fn tangential_normal_integrals(
    sol: &dyn Solution,
    r: f64,
    rule: &QuadratureRule,
) -> Result<(f64, f64)> {
    if sol.dim() != rule.dim {
        return Err(Error::Dimension {
            expected: rule.dim,
            got: sol.dim(),
        });
    }
    check_radius(r)?;
    let mut failure = None;
    let v = rule.integrate_sphere_vec(r, 2, |x, out| match split_gradient(&sol.gradient(x), x) {
        Ok(s) => {
            out[0] = s.tangential_sq();
            out[1] = s.u_n * s.u_n;
        }
        Err(e) => failure = Some(e),
    });
    match failure {
        Some(e) => Err(e),
        None => Ok((v[0], v[1])),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub dim: usize,
    pub radii: Vec<f64>,
    /// `g(r)` at each radius.
    pub bulk: Vec<f64>,
    /// `g'(r)`, computed as the surface energy.
    pub surface: Vec<f64>,
}

impl EnergyProfile {
    /// `r g'(r) / g(r)` at each radius.
    pub fn ratios(&self) -> Vec<f64> {
        self.radii
            .iter()
            .zip(self.bulk.iter().zip(&self.surface))
            .map(|(r, (g, s))| r * s / g)
            .collect()
    }
}

pub fn energy_profile(
    field: &CoefficientField,
    sol: &dyn Solution,
    radii: &[f64],
    rule: &QuadratureRule,
) -> Result<EnergyProfile> {
    check_pair(field, sol, rule)?;
    if radii.is_empty() {
        return Err(Error::Input("empty radius ladder".into()));
    }
    let mut bulk = Vec::with_capacity(radii.len());
    let mut surface = Vec::with_capacity(radii.len());
    for &r in radii {
        bulk.push(bulk_energy(field, sol, r, rule)?);
        surface.push(surface_energy(field, sol, r, rule)?);
    }
    Ok(EnergyProfile {
        dim: field.dim(),
        radii: radii.to_vec(),
        bulk,
        surface,
    })
}

/// `m` radii in geometric progression from `r0` to `r1` inclusive.
pub fn geometric_ladder(m: usize, r0: f64, r1: f64) -> Result<Vec<f64>> {
    if m == 0 || !(r0 > 0.0 && r0 <= r1 && r1 <= 1.0) {
        return Err(Error::Domain(format!(
            "bad ladder: {m} points on [{r0}, {r1}]"
        )));
    }
    if m == 1 {
        return Ok(vec![r1]);
    }
    let q = (r1 / r0).ln() / (m - 1) as f64;
    let mut out: Vec<f64> = (0..m).map(|i| r0 * (q * i as f64).exp()).collect();
    out[m - 1] = r1;
    Ok(out)
}

/// Terms of the Pohozaev-type identity on `B_1` (or the annulus above `rule.r_min`).
///
/// `lhs = t_flux + t_trace − t_sq + err` up to quadrature error for true solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    pub dim: usize,
    pub r_min: f64,
    /// `∫_{S_1} ⟨A∇u,∇u⟩⟨Ax,x⟩`.
    pub lhs: f64,
    /// `2 ∫_{S_1} ⟨A∇u,x⟩²`.
    pub t_flux: f64,
    /// `∫ tr(A) ⟨A∇u,∇u⟩`.
    pub t_trace: f64,
    /// `2 ∫ |A∇u|²`.
    pub t_sq: f64,
    /// Terms carrying derivatives of `A`.
    pub err: f64,
    /// Net contribution of the inner sphere, already folded into `lhs` and `t_flux`.
    pub inner_boundary: f64,
    pub residual: f64,
    pub relative_residual: f64,
}

impl PohozaevReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.relative_residual <= tol
    }
}

struct PointTerms {
    e: f64,
    ag: Vec<f64>,
    ax: Vec<f64>,
    g: Vec<f64>,
    trace: f64,
}

fn point_terms(field: &CoefficientField, sol: &dyn Solution, x: &[f64]) -> PointTerms {
    let n = x.len();
    let a = field.matrix(x);
    let g = sol.gradient(x);
    let ag: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)] * g[j]).sum())
        .collect();
    let ax: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)] * x[j]).sum())
        .collect();
    let e = ag.iter().zip(&g).map(|(p, q)| p * q).sum();
    let trace = (0..n).map(|i| a[(i, i)]).sum();
    PointTerms {
        e,
        ag,
        ax,
        g,
        trace,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Pointwise integrand of the derivative terms.
fn err_density(field: &CoefficientField, t: &PointTerms, x: &[f64]) -> f64 {
    let n = x.len();
    let mut div_term = 0.0;
    let mut flux_term = 0.0;
    let mut grad_term = 0.0;
    for i in 0..n {
        let d = field.derivative(i, x);
        // Σ_j x_j ∂_i a_ij
        div_term += (0..n).map(|j| x[j] * d[(i, j)]).sum::<f64>();
        // ⟨∇u, (∂_i A) x⟩ and ⟨∇u, (∂_i A) ∇u⟩
        let mut dx = 0.0;
        let mut dg = 0.0;
        for k in 0..n {
            for l in 0..n {
                dx += t.g[k] * d[(k, l)] * x[l];
                dg += t.g[k] * d[(k, l)] * t.g[l];
            }
        }
        flux_term += t.ag[i] * dx;
        grad_term += t.ax[i] * dg;
    }
    div_term * t.e - 2.0 * flux_term + grad_term
}

/// The derivative terms alone over `B_1` (minus the core); exactly zero for constant fields.
pub fn err_term(
    field: &CoefficientField,
    sol: &dyn Solution,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_pair(field, sol, rule)?;
    if field.is_constant() {
        return Ok(0.0);
    }
    check_derivatives(field)?;
    Ok(rule.integrate_ball(1.0, |x| {
        let t = point_terms(field, sol, x);
        err_density(field, &t, x)
    }))
}

pub fn pohozaev_report(
    field: &CoefficientField,
    sol: &dyn Solution,
    rule: &QuadratureRule,
) -> Result<PohozaevReport> {
    let n = check_pair(field, sol, rule)?;
    check_derivatives(field)?;
    let constant = field.is_constant();
    let sphere = |r: f64| {
        rule.integrate_sphere_vec(r, 2, |x, out| {
            let t = point_terms(field, sol, x);
            out[0] = t.e * dot(&t.ax, x);
            out[1] = 2.0 * dot(&t.ag, x).powi(2);
        })
    };
    let outer = sphere(1.0);
    let (mut lhs, mut t_flux) = (outer[0], outer[1]);
    let mut inner_boundary = 0.0;
    if rule.r_min > 0.0 {
        // inward normal on the inner sphere: the terms enter with weight −1/r_min
        let inner = sphere(rule.r_min);
        lhs -= inner[0] / rule.r_min;
        t_flux -= inner[1] / rule.r_min;
        inner_boundary = -(inner[0] - inner[1]) / rule.r_min;
    }
    let bulk = rule.integrate_ball_vec(1.0, 3, |x, out| {
        let t = point_terms(field, sol, x);
        out[0] = t.trace * t.e;
        out[1] = 2.0 * dot(&t.ag, &t.ag);
        if !constant {
            out[2] = err_density(field, &t, x);
        }
    });
    let (t_trace, t_sq, err) = (bulk[0], bulk[1], bulk[2]);
    let residual = lhs - (t_flux + t_trace - t_sq + err);
    let scale = [lhs, t_flux, t_trace, t_sq, err]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let relative_residual = if scale == 0.0 {
        0.0
    } else {
        residual.abs() / scale
    };
    Ok(PohozaevReport {
        dim: n,
        r_min: rule.r_min,
        lhs,
        t_flux,
        t_trace,
        t_sq,
        err,
        inner_boundary,
        residual,
        relative_residual,
    })
}

/// Balance of tangential and normal gradient energy on `S_1` for harmonic `u`:
/// `∫|∇_T u|² − ∫u_N² = (n − 2) ∫_{B_1} |∇u|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicBalance {
    pub tangential: f64,
    pub normal: f64,
    pub bulk: f64,
    pub defect: f64,
    pub relative_defect: f64,
}

pub fn harmonic_balance(sol: &dyn Solution, rule: &QuadratureRule) -> Result<HarmonicBalance> {
    let n = sol.dim();
    let identity = CoefficientField::identity(n)?;
    let (tangential, normal) = tangential_normal_integrals(sol, 1.0, rule)?;
    let bulk = bulk_energy(&identity, sol, 1.0, rule)?;
    let defect = tangential - normal - (n as f64 - 2.0) * bulk;
    let scale = tangential.abs().max(normal.abs()).max(bulk.abs());
    let relative_defect = if scale == 0.0 {
        0.0
    } else {
        defect.abs() / scale
    };
    Ok(HarmonicBalance {
        tangential,
        normal,
        bulk,
        defect,
        relative_defect,
    })
}

/// Sharp spherical Poincaré inequality
/// `∫_{S_r} (u − ū)² ≤ r²/(n − 1) ∫_{S_r} |∇_T u|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareCheck {
    pub radius: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl PoincareCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.margin >= -tol * self.rhs.abs().max(1.0)
    }
}

pub fn poincare_check(sol: &dyn Solution, r: f64, rule: &QuadratureRule) -> Result<PoincareCheck> {
    let n = sol.dim();
    let mean = sphere_mean(sol, r, rule)?;
    let lhs = rule.integrate_sphere(r, |x| (sol.value(x) - mean).powi(2));
    let (tangential, _) = tangential_normal_integrals(sol, r, rule)?;
    let rhs = r * r / (n as f64 - 1.0) * tangential;
    Ok(PoincareCheck {
        radius: r,
        lhs,
        rhs,
        margin: rhs - lhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::{
        affine, harmonic_basis_size, harmonic_polynomial, Polynomial, PolynomialSolution,
        PsSolution,
    };
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn x1x2() -> PolynomialSolution {
        PolynomialSolution::new(Polynomial::new(3, vec![(1.0, [1, 1, 0])]).unwrap(), "x1x2")
    }

    #[test]
    fn hand_values_in_three_dimensions() {
        let a = CoefficientField::identity(3).unwrap();
        let u = x1x2();
        let rule = QuadratureRule::default_for(3).unwrap();
        assert_relative_eq!(
            bulk_energy(&a, &u, 1.0, &rule).unwrap(),
            8.0 * PI / 15.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            surface_energy(&a, &u, 1.0, &rule).unwrap(),
            8.0 * PI / 3.0,
            max_relative = 1e-12
        );
        let (t, n) = tangential_normal_integrals(&u, 1.0, &rule).unwrap();
        assert_relative_eq!(t, 8.0 * PI / 5.0, max_relative = 1e-12);
        assert_relative_eq!(n, 16.0 * PI / 15.0, max_relative = 1e-12);
        let rep = pohozaev_report(&a, &u, &rule).unwrap();
        assert_relative_eq!(rep.lhs, 8.0 * PI / 3.0, max_relative = 1e-12);
        assert_relative_eq!(rep.t_flux, 32.0 * PI / 15.0, max_relative = 1e-12);
        assert_relative_eq!(rep.t_trace, 24.0 * PI / 15.0, max_relative = 1e-12);
        assert_relative_eq!(rep.t_sq, 16.0 * PI / 15.0, max_relative = 1e-12);
        assert_eq!(rep.err, 0.0);
        assert!(rep.relative_residual < 1e-12);
    }

    #[test]
    fn hand_values_in_the_plane() {
        let a = CoefficientField::identity(2).unwrap();
        let u = affine(&[1.0, 0.0]).unwrap();
        let rule = QuadratureRule::default_for(2).unwrap();
        let (t, n) = tangential_normal_integrals(&u, 1.0, &rule).unwrap();
        assert_relative_eq!(t, PI, max_relative = 1e-12);
        assert_relative_eq!(n, PI, max_relative = 1e-12);
        assert_relative_eq!(
            bulk_energy(&a, &u, 1.0, &rule).unwrap(),
            PI,
            max_relative = 1e-12
        );

        let q = PolynomialSolution::new(
            Polynomial::new(2, vec![(1.0, [2, 0, 0]), (-1.0, [0, 2, 0])]).unwrap(),
            "q",
        );
        for r in [0.2, 0.7, 1.0] {
            assert_relative_eq!(
                bulk_energy(&a, &q, r, &rule).unwrap(),
                2.0 * PI * r.powi(4),
                max_relative = 1e-12
            );
            assert_relative_eq!(
                surface_energy(&a, &q, r, &rule).unwrap(),
                8.0 * PI * r.powi(3),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn harmonic_balance_holds_for_basis() {
        for n in [2, 3] {
            let rule = QuadratureRule::default_for(n).unwrap();
            for k in 0..=3 {
                for i in 0..harmonic_basis_size(n, k) {
                    let u = harmonic_polynomial(n, k, i).unwrap();
                    let b = harmonic_balance(&u, &rule).unwrap();
                    assert!(b.relative_defect < 1e-10, "n={n} k={k} i={i}: {b:?}");
                }
            }
        }
    }

    #[test]
    fn ps_profile_is_exact_power() {
        let (l, big) = (1.0, 4.0);
        let a = CoefficientField::ps2d(l, big).unwrap();
        let u = PsSolution::new(l, big).unwrap();
        let rule = profile_rule(&a, &u).unwrap();
        let alpha = (l / big).sqrt();
        let radii = geometric_ladder(12, 0.1, 1.0).unwrap();
        let prof = energy_profile(&a, &u, &radii, &rule).unwrap();
        for (r, (g, s)) in radii.iter().zip(prof.bulk.iter().zip(&prof.surface)) {
            let g_exact = 2.0 * PI * l * r.powf(2.0 * alpha) / (2.0 * alpha);
            assert_relative_eq!(*g, g_exact, max_relative = 1e-10);
            assert_relative_eq!(
                *s,
                2.0 * PI * l * r.powf(2.0 * alpha - 1.0),
                max_relative = 1e-10
            );
        }
        for rho in prof.ratios() {
            assert_relative_eq!(rho, 2.0 * alpha, max_relative = 1e-10);
        }
    }

    #[test]
    fn ps_pohozaev_closes_on_annulus() {
        let a = CoefficientField::ps2d(1.0, 4.0).unwrap();
        let u = PsSolution::new(1.0, 4.0).unwrap();
        let rule = pohozaev_rule(&a, &u).unwrap();
        assert!(rule.r_min > 0.0);
        let rep = pohozaev_report(&a, &u, &rule).unwrap();
        assert!(rep.relative_residual < 1e-8, "{rep:?}");
    }

    #[test]
    fn variable_exact_pairs_close() {
        let f = CoefficientField::iso_x1(2, 0.3).unwrap();
        let u = affine(&[0.0, 1.0]).unwrap();
        let rule = QuadratureRule::default_for(2).unwrap();
        let rep = pohozaev_report(&f, &u, &rule).unwrap();
        assert!(rep.relative_residual < 1e-10, "{rep:?}");
        assert!(rep.err != 0.0);

        let f = CoefficientField::cross_diag(0.5).unwrap();
        let u = PolynomialSolution::new(Polynomial::new(2, vec![(1.0, [1, 1, 0])]).unwrap(), "xy");
        let rep = pohozaev_report(&f, &u, &rule).unwrap();
        assert!(rep.relative_residual < 1e-10, "{rep:?}");
    }

    #[test]
    fn poincare_sharp_for_first_harmonics() {
        let rule = QuadratureRule::default_for(3).unwrap();
        let u = affine(&[0.3, -1.0, 2.0]).unwrap();
        let c = poincare_check(&u, 0.6, &rule).unwrap();
        assert!(c.margin.abs() < 1e-12);
        let c = poincare_check(&x1x2(), 1.0, &rule).unwrap();
        assert!(c.margin > 0.1);
    }

    #[test]
    fn radius_and_dimension_errors() {
        let a = CoefficientField::identity(2).unwrap();
        let u = affine(&[1.0, 0.0, 0.0]).unwrap();
        let rule = QuadratureRule::default_for(2).unwrap();
        assert!(matches!(
            bulk_energy(&a, &u, 0.5, &rule),
            Err(Error::Dimension { .. })
        ));
        let u = affine(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            bulk_energy(&a, &u, 1.5, &rule),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            surface_energy(&a, &u, 0.0, &rule),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn ladder_endpoints() {
        let l = geometric_ladder(12, 0.1, 1.0).unwrap();
        assert_eq!(l.len(), 12);
        assert_relative_eq!(l[0], 0.1);
        assert_eq!(l[11], 1.0);
        assert!(l.windows(2).all(|w| w[0] < w[1]));
    }
}
