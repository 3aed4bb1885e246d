//! Closed-form Hölder exponents, the (ε, T) objective and its grid maximizer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_bounds, Error, Result};

fn check_tuple(n: f64, lambda: f64, big_lambda: f64) -> Result<()> {
    if !(n.is_finite() && n >= 2.0) {
        return Err(Error::Domain(format!(
            "dimension must be at least 2, got {n}"
        )));
    }
    check_bounds(lambda, big_lambda)
}

fn discriminant(n: f64, lambda: f64, big_lambda: f64) -> f64 {
    (n - 2.0).powi(2) + 4.0 * (n - 1.0) * lambda / big_lambda
}

/// `α = ½(−(n−2) + √((n−2)² + 4(n−1)λ/Λ))`.
pub fn holder_exponent(n: f64, lambda: f64, big_lambda: f64) -> Result<f64> {
    check_tuple(n, lambda, big_lambda)?;
    // rationalised form avoids cancellation when n is large
    let d = discriminant(n, lambda, big_lambda);
    Ok(2.0 * (n - 1.0) * (lambda / big_lambda) / ((n - 2.0) + d.sqrt()))
}

/// `α̃ = √((n−2)² + 4(n−1)λ/Λ)`.
pub fn surface_to_bulk_constant(n: f64, lambda: f64, big_lambda: f64) -> Result<f64> {
    check_tuple(n, lambda, big_lambda)?;
    Ok(discriminant(n, lambda, big_lambda).sqrt())
}

/// `ε* = Λα`, the maximising ε of [`step5_objective`].
pub fn eps_star(n: f64, lambda: f64, big_lambda: f64) -> Result<f64> {
    Ok(big_lambda * holder_exponent(n, lambda, big_lambda)?)
}

/// Upper end `√((n−1)λΛ)` of the admissible ε range.
pub fn eps_max(n: f64, lambda: f64, big_lambda: f64) -> Result<f64> {
    check_tuple(n, lambda, big_lambda)?;
    Ok(((n - 1.0) * lambda * big_lambda).sqrt())
}

/// `(n−2)/(Λα̃)`, the weight of `err` in the corrected inequality.
pub fn err_correction_coefficient(n: f64, lambda: f64, big_lambda: f64) -> Result<f64> {
    let at = surface_to_bulk_constant(n, lambda, big_lambda)?;
    Ok((n - 2.0) / (big_lambda * at))
}

/// `[1 − c(ε)(2Λ−T)/2] / [ε/(2(n−1)λ) + c(ε)Λ/2]` with `c(ε) = 1/(2ε) − ε/(2(n−1)λΛ)`.
pub fn step5_objective(eps: f64, t: f64, n: f64, lambda: f64, big_lambda: f64) -> Result<f64> {
    let e_max = eps_max(n, lambda, big_lambda)?;
    if !(eps > 0.0 && eps <= e_max * (1.0 + 1e-12)) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, {e_max}]")));
    }
    let (t_lo, t_hi) = (n * lambda, n * big_lambda);
    let slack = 1e-12 * t_hi;
    if !(t >= t_lo - slack && t <= t_hi + slack) {
        return Err(Error::Domain(format!("T = {t} outside [{t_lo}, {t_hi}]")));
    }
    let k = (n - 1.0) * lambda;
    let c = (1.0 / (2.0 * eps) - eps / (2.0 * k * big_lambda)).max(0.0);
    let num = 1.0 - c * (2.0 * big_lambda - t) / 2.0;
    let den = eps / (2.0 * k) + c * big_lambda / 2.0;
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentBound {
    pub n: f64,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub eps_star: f64,
    pub t_star: f64,
    pub err_coefficient: f64,
}

impl ExponentBound {
    pub fn new(n: f64, lambda: f64, big_lambda: f64) -> Result<Self> {
        Ok(Self {
            n,
            lambda,
            big_lambda,
            alpha: holder_exponent(n, lambda, big_lambda)?,
            alpha_tilde: surface_to_bulk_constant(n, lambda, big_lambda)?,
            eps_star: eps_star(n, lambda, big_lambda)?,
            t_star: n * big_lambda,
            err_coefficient: err_correction_coefficient(n, lambda, big_lambda)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub eps_hat: f64,
    pub t_hat: f64,
    pub value_hat: f64,
    pub eps_step: f64,
    pub t_step: f64,
    pub resolution: usize,
}

pub const MAX_RESOLUTION: usize = 20_000;

/// Brute-force maximum of [`step5_objective`] on a `resolution × resolution` grid.
///
/// ε runs over `ε_max·i/resolution` for `i = 1..=resolution`, T over an even
/// grid on `[nλ, nΛ]` including both ends. Ties go to the larger T.
pub fn optimize_eps_t(n: u32, lambda: f64, big_lambda: f64, resolution: usize) -> Result<Optimum> {
    if !(100..=MAX_RESOLUTION).contains(&resolution) {
        return Err(Error::Input(format!(
            "grid resolution must be in 100..={MAX_RESOLUTION}, got {resolution}"
        )));
    }
    let nf = n as f64;
    let e_max = eps_max(nf, lambda, big_lambda)?;
    let eps_step = e_max / resolution as f64;
    let (t_lo, t_hi) = (nf * lambda, nf * big_lambda);
    let t_step = (t_hi - t_lo) / (resolution - 1) as f64;
    let t_at = |j: usize| {
        if j == resolution - 1 {
            t_hi
        } else {
            t_lo + t_step * j as f64
        }
    };

    let rows: Vec<(f64, usize)> = (1..=resolution)
        .into_par_iter()
        .map(|i| {
            let eps = if i == resolution {
                e_max
            } else {
                eps_step * i as f64
            };
            let mut best = (f64::NEG_INFINITY, 0);
            for j in 0..resolution {
                // the grid lies inside the admissible rectangle by construction
                let v = step5_objective(eps, t_at(j), nf, lambda, big_lambda)
                    .unwrap_or(f64::NEG_INFINITY);
                if v >= best.0 {
                    best = (v, j);
                }
            }
            best
        })
        .collect();

    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, &(v, j)) in rows.iter().enumerate() {
        if v > best.0 {
            best = (v, i + 1, j);
        }
    }
    let eps_hat = if best.1 == resolution {
        e_max
    } else {
        eps_step * best.1 as f64
    };
    Ok(Optimum {
        eps_hat,
        t_hat: t_at(best.2),
        value_hat: best.0,
        eps_step,
        t_step,
        resolution,
    })
}

/// Constant `2√(n−1)` produced by bounding the cross term with Cauchy–Schwarz alone.
pub fn naive_chain_constant(n: f64) -> f64 {
    2.0 * (n - 1.0).sqrt()
}

/// Smallest `λ/Λ` above which `α̃` beats the naive constant.
pub fn naive_crossover_ratio(n: f64) -> f64 {
    (1.0 - (n - 2.0).powi(2) / (4.0 * (n - 1.0))).max(0.0)
}

/// Rows for every `(n, λ/Λ)` pair with `Λ = 1`, ordered by `n` then ratio.
pub fn sweep(ns: &[f64], ratios: &[f64]) -> Result<Vec<ExponentBound>> {
    let mut out = Vec::with_capacity(ns.len() * ratios.len());
    for &n in ns {
        for &ratio in ratios {
            out.push(ExponentBound::new(n, ratio, 1.0)?);
        }
    }
    Ok(out)
}

pub fn sweep_csv(rows: &[ExponentBound]) -> String {
    let mut s = String::from("n,lambda,Lambda,alpha,alpha_tilde,eps_star\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n, r.lambda, r.big_lambda, r.alpha, r.alpha_tilde, r.eps_star
        ));
    }
    s
}
