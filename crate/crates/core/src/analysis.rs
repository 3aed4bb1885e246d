//! Verdicts on the monotonicity inequalities and empirical exponent fits.

use serde::{Deserialize, Serialize};

use crate::coefficient::CoefficientField;
use crate::energy::{EnergyProfile, PohozaevReport};
use crate::error::{Error, Result};
use crate::exponent::{err_correction_coefficient, surface_to_bulk_constant};
use crate::solutions::{residual, Solution};

/// Relative tolerance for verdicts on grid solutions.
pub const GRID_TOL: f64 = 5e-3;
/// Tolerance for verdicts on closed-form solutions.
pub const ANALYTIC_TOL: f64 = 1e-6;
/// Energies below this are treated as a vanishing solution.
pub const DEGENERATE_ENERGY: f64 = 1e-14;
pub const MIN_FIT_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityVerdict {
    pub radii: Vec<f64>,
    /// `ρ(r) = r s(r) / g(r)`.
    pub ratios: Vec<f64>,
    pub constant: f64,
    /// `min_r (ρ(r) − constant)`.
    pub margin: f64,
    /// `max_r |ρ(r) − constant|`.
    pub max_deviation: f64,
    /// Absolute tolerance on `ρ`: the relative tolerance times the constant.
    pub tolerance: f64,
    pub equality: bool,
    pub pass: bool,
}

fn check_profile(profile: &EnergyProfile) -> Result<()> {
    if profile.radii.is_empty()
        || profile.bulk.len() != profile.radii.len()
        || profile.surface.len() != profile.radii.len()
    {
        return Err(Error::Input("malformed energy profile".into()));
    }
    if let Some((r, g)) = profile
        .radii
        .iter()
        .zip(&profile.bulk)
        .find(|(_, g)| !(g.abs() >= DEGENERATE_ENERGY))
    {
        return Err(Error::Degenerate(format!(
            "bulk energy {g:e} at r = {r} (solution is numerically constant)"
        )));
    }
    Ok(())
}

/// Checks `r s(r) ≥ constant · g(r)` on every radius of the profile.
/// `tol` is relative to `constant`.
pub fn verify_monotonicity(
    profile: &EnergyProfile,
    constant: f64,
    tol: f64,
) -> Result<MonotonicityVerdict> {
    check_profile(profile)?;
    if !(constant > 0.0) {
        return Err(Error::Domain(format!(
            "constant must be positive, got {constant}"
        )));
    }
    let ratios = profile.ratios();
    let margin = ratios
        .iter()
        .map(|r| r - constant)
        .fold(f64::INFINITY, f64::min);
    let max_deviation = ratios
        .iter()
        .map(|r| (r - constant).abs())
        .fold(0.0, f64::max);
    let tolerance = tol * constant;
    Ok(MonotonicityVerdict {
        radii: profile.radii.clone(),
        ratios,
        constant,
        margin,
        max_deviation,
        tolerance,
        equality: max_deviation <= tolerance,
        pass: margin >= -tolerance,
    })
}

/// Checks the planar estimate `g(r) ≤ (r√(Λ/λ)/2) s(r)`, i.e. `ρ(r) ≥ 2√(λ/Λ)`.
pub fn verify_2d_estimate(
    profile: &EnergyProfile,
    lambda: f64,
    big_lambda: f64,
    tol: f64,
) -> Result<MonotonicityVerdict> {
    if profile.dim != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: profile.dim,
        });
    }
    let constant = surface_to_bulk_constant(2.0, lambda, big_lambda)?;
    verify_monotonicity(profile, constant, tol)
}

/// Slope of a least-squares line with its standard error and residual RMS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub rms_residual: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let m = x.len();
    if m < 2 || y.len() != m {
        return Err(Error::Input(format!(
            "line fit needs matching samples, got {m}"
        )));
    }
    let mf = m as f64;
    let mx = x.iter().sum::<f64>() / mf;
    let my = y.iter().sum::<f64>() / mf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Input("line fit needs distinct abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let stderr = if m > 2 {
        (ss / (mf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        stderr,
        rms_residual: (ss / mf).sqrt(),
    })
}

fn check_ladder(radii: &[f64]) -> Result<()> {
    if radii.len() < MIN_FIT_POINTS {
        return Err(Error::Input(format!(
            "exponent fits need at least {MIN_FIT_POINTS} radii, got {}",
            radii.len()
        )));
    }
    let lo = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().cloned().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 10.0 * (1.0 - 1e-9) {
        return Err(Error::Input(format!(
            "ladder [{lo}, {hi}] spans less than a decade"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of `log g` against `log r`.
    pub beta: f64,
    pub stderr: f64,
    pub rms_residual: f64,
    /// `(β − (n − 2)) / 2`.
    pub alpha_implied: f64,
}

pub fn decay_exponent(profile: &EnergyProfile) -> Result<DecayFit> {
    check_profile(profile)?;
    check_ladder(&profile.radii)?;
    let lx: Vec<f64> = profile.radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = profile.bulk.iter().map(|g| g.ln()).collect();
    let fit = fit_line(&lx, &ly)?;
    Ok(DecayFit {
        beta: fit.slope,
        stderr: fit.stderr,
        rms_residual: fit.rms_residual,
        alpha_implied: (fit.slope - (profile.dim as f64 - 2.0)) / 2.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationFit {
    pub radii: Vec<f64>,
    pub oscillations: Vec<f64>,
    pub alpha_osc: f64,
    pub stderr: f64,
    pub rms_residual: f64,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut out = 0.0;
    while i > 0 {
        f /= base as f64;
        out += f * (i % base) as f64;
        i /= base;
    }
    out
}

/// `count` Halton points in the unit ball (plus the centre), starting at an
/// offset derived from `seed`.
pub fn halton_ball(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    const BASES: [u64; 3] = [2, 3, 5];
    let mut out = vec![vec![0.0; n]];
    let mut i = 1 + seed.wrapping_mul(7919) % 1_000_003;
    while out.len() <= count {
        let p: Vec<f64> = (0..n)
            .map(|d| 2.0 * radical_inverse(i, BASES[d]) - 1.0)
            .collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
            out.push(p);
        }
        i += 1;
    }
    out
}

/// Fits `osc(B_r) ~ r^α` from one point set scaled to each radius.
///
/// The maximum and minimum over finitely many samples underestimate the
/// true oscillation.
pub fn oscillation_exponent(
    sol: &dyn Solution,
    radii: &[f64],
    samples: usize,
    seed: u64,
) -> Result<OscillationFit> {
    check_ladder(radii)?;
    if radii.iter().any(|&r| r > 1.0) {
        return Err(Error::Domain("oscillation radii must not exceed 1".into()));
    }
    let n = sol.dim();
    if !(1..=3).contains(&n) {
        return Err(Error::Unsupported(format!(
            "oscillation sampling in dimension {n}"
        )));
    }
    let points = halton_ball(n, samples.max(16), seed);
    let mut x = vec![0.0; n];
    let mut osc = Vec::with_capacity(radii.len());
    for &r in radii {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &points {
            for d in 0..n {
                x[d] = r * p[d];
            }
            let v = sol.value(&x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let o = hi - lo;
        if !(o >= DEGENERATE_ENERGY) {
            return Err(Error::Degenerate(format!("oscillation {o:e} on B_{r}")));
        }
        osc.push(o);
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = osc.iter().map(|o| o.ln()).collect();
    let fit = fit_line(&lx, &ly)?;
    Ok(OscillationFit {
        radii: radii.to_vec(),
        oscillations: osc,
        alpha_osc: fit.slope,
        stderr: fit.stderr,
        rms_residual: fit.rms_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(v: f64) -> Self {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

/// `coefficient · err + α̃ g(1) ≤ s(1)` together with the sign of `err`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrCorrectedVerdict {
    pub coefficient: f64,
    pub err: f64,
    pub err_sign: Sign,
    pub alpha_tilde: f64,
    pub g1: f64,
    pub s1: f64,
    /// `s(1) − (coefficient · err + α̃ g(1))`.
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn verify_err_corrected(
    report: &PohozaevReport,
    profile: &EnergyProfile,
    n: usize,
    lambda: f64,
    big_lambda: f64,
    tol: f64,
) -> Result<ErrCorrectedVerdict> {
    check_profile(profile)?;
    if report.dim != n || profile.dim != n {
        return Err(Error::Dimension {
            expected: n,
            got: if report.dim != n {
                report.dim
            } else {
                profile.dim
            },
        });
    }
    let last = profile.radii.len() - 1;
    if (profile.radii[last] - 1.0).abs() > 1e-12 {
        return Err(Error::Input("profile must end at r = 1".into()));
    }
    let nf = n as f64;
    let coefficient = err_correction_coefficient(nf, lambda, big_lambda)?;
    let alpha_tilde = surface_to_bulk_constant(nf, lambda, big_lambda)?;
    let (g1, s1) = (profile.bulk[last], profile.surface[last]);
    let margin = s1 - (coefficient * report.err + alpha_tilde * g1);
    let tolerance = tol * s1.abs();
    Ok(ErrCorrectedVerdict {
        coefficient,
        err: report.err,
        err_sign: Sign::of(report.err),
        alpha_tilde,
        g1,
        s1,
        margin,
        tolerance,
        pass: margin >= -tolerance,
    })
}

/// Step of the difference stencil in [`check_pde_residual`].
pub const RESIDUAL_STEP: f64 = 1e-4;
/// Residuals are compared against this multiple of `max(1, Λ max|∇u|)`.
pub const RESIDUAL_TOL: f64 = 1e-5;

/// Whether a closed-form `u` solves `div(A∇u) = 0` at sampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualCheck {
    pub points: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Samples `count` points with `0.2 ≤ |x| ≤ 0.95` and evaluates the
/// difference residual of the flux there.
pub fn check_pde_residual(
    field: &CoefficientField,
    sol: &dyn Solution,
    count: usize,
    seed: u64,
) -> Result<ResidualCheck> {
    let n = field.dim();
    if sol.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: sol.dim(),
        });
    }
    if count == 0 {
        return Err(Error::Input("need at least one sample point".into()));
    }
    let mut points = Vec::with_capacity(count);
    let mut pool = halton_ball(n, 4 * count + 16, seed).into_iter();
    while points.len() < count {
        let x = match pool.next() {
            Some(x) => x,
            None => break,
        };
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (0.2..=0.95).contains(&r) {
            points.push(x);
        }
    }
    let mut max_residual = 0.0f64;
    let mut max_grad = 0.0f64;
    for x in &points {
        max_residual = max_residual.max(residual(field, sol, x, RESIDUAL_STEP)?.abs());
        let g = sol.gradient(x);
        max_grad = max_grad.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    let tolerance = RESIDUAL_TOL * (field.big_lambda() * max_grad).max(1.0);
    Ok(ResidualCheck {
        points: points.len(),
        max_residual,
        tolerance,
        pass: max_residual <= tolerance,
    })
}
