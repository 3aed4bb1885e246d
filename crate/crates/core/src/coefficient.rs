//! Coefficient matrices `A(x)` of the divergence-form operator, their
//! ellipticity bounds, and the polar-frame block structure `P = QᵀAQ`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_bounds, Error, Result};

/// Absolute tolerance for matrix identities (symmetry, orthogonality, similarity).
pub const MATRIX_TOL: f64 = 1e-10;

/// Step used when entrywise derivatives have to be estimated by central differences.
pub const FD_STEP: f64 = 1e-5;
/// Largest dimension a field may be built in.
pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Constant,
    Variable,
}

/// JSON form of a coefficient field.
///
/// ```json
/// {"kind":"constant","matrix":[[1,0],[0,4]]}
/// {"kind":"builtin","name":"ps2d","lambda":1,"Lambda":4}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldDescriptor {
    Constant {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default, rename = "Lambda", skip_serializing_if = "Option::is_none")]
        big_lambda: Option<f64>,
    },
    Builtin {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
        #[serde(default, rename = "Lambda", skip_serializing_if = "Option::is_none")]
        big_lambda: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

type MatrixFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
type DerivativeFn = dyn Fn(usize, &[f64]) -> DMatrix<f64> + Send + Sync;

#[derive(Clone)]
enum Source {
    Constant(DMatrix<f64>),
    /// Eigenvalue `radial` along x/|x|, `tangential` on the orthogonal complement.
    RadialAnisotropic {
        radial: f64,
        tangential: f64,
    },
    /// (1 + eps|x|²) I
    IsoQuadratic {
        eps: f64,
    },
    /// (1 + eps x₁²) I
    IsoX1 {
        eps: f64,
    },
    /// diag(1 + eps x₂², 1 + eps x₁²), n = 2
    CrossDiag {
        eps: f64,
    },
    Custom {
        eval: Arc<MatrixFn>,
        derivative: Option<Arc<DerivativeFn>>,
    },
}

/// A symmetric, uniformly elliptic matrix field on the unit ball.
#[derive(Clone)]
pub struct CoefficientField {
    dim: usize,
    lambda: f64,
    big_lambda: f64,
    source: Source,
    label: String,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("lambda", &self.lambda)
            .field("Lambda", &self.big_lambda)
            .finish()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if !(2..=MAX_DIM).contains(&n) {
        return Err(Error::Domain(format!(
            "dimension must be in 2..={MAX_DIM}, got {n}"
        )));
    }
    Ok(())
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).abs().max()
}

fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let lo = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

impl CoefficientField {
    /// Constant matrix with declared bounds. The bounds are trusted; use
    /// [`check_ellipticity`] to verify them.
    pub fn constant(matrix: DMatrix<f64>, lambda: f64, big_lambda: f64) -> Result<Self> {
        let n = matrix.nrows();
        check_dim(n)?;
        if matrix.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                got: matrix.ncols(),
            });
        }
        check_bounds(lambda, big_lambda)?;
        let asym = asymmetry(&matrix);
        if asym > MATRIX_TOL * matrix.abs().max().max(1.0) {
            return Err(Error::Symmetry {
                point: vec![],
                asymmetry: asym,
            });
        }
        Ok(Self {
            dim: n,
            lambda,
            big_lambda,
            label: format!("const:{}", format_matrix(&matrix)),
            source: Source::Constant(matrix),
        })
    }

    /// Constant matrix whose bounds are its extreme eigenvalues.
    pub fn constant_auto(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let asym = asymmetry(&matrix);
        if asym > MATRIX_TOL * matrix.abs().max().max(1.0) {
            return Err(Error::Symmetry {
                point: vec![],
                asymmetry: asym,
            });
        }
        let (lo, hi) = extreme_eigenvalues(&matrix);
        if lo <= 0.0 {
            return Err(Error::Domain(format!(
                "matrix is not positive definite (min eigenvalue {lo})"
            )));
        }
        Self::constant(matrix, lo, hi)
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_dim(n)?;
        let mut f = Self::constant(DMatrix::identity(n, n), 1.0, 1.0)?;
        f.label = "identity".into();
        Ok(f)
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(entries));
        let mut f = Self::constant_auto(m)?;
        let list: Vec<String> = entries.iter().map(|v| format_number(*v)).collect();
        f.label = format!("const:diag({})", list.join(","));
        Ok(f)
    }

    /// Random constant SPD matrix `R diag(μ) Rᵀ` with `μ` uniform in `[lo, hi]`
    /// and `R` a Haar-random rotation. The declared bounds are the extreme
    /// eigenvalues actually drawn.
    pub fn random_constant(n: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        check_dim(n)?;
        check_bounds(lo, hi)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_spd(n, lo, hi, &mut rng);
        let mut f = Self::constant_auto(m)?;
        f.label = format!("const:random(n={n},seed={seed})");
        Ok(f)
    }

    /// The radially anisotropic field `λ I + (Λ − λ) x xᵀ/|x|²` in the plane:
    /// eigenvalue `Λ` along `x/|x|`, `λ` tangentially.
    pub fn ps2d(lambda: f64, big_lambda: f64) -> Result<Self> {
        check_bounds(lambda, big_lambda)?;
        Ok(Self {
            dim: 2,
            lambda,
            big_lambda,
            label: format!(
                "ps2d:{},{}",
                format_number(lambda),
                format_number(big_lambda)
            ),
            source: Source::RadialAnisotropic {
                radial: big_lambda,
                tangential: lambda,
            },
        })
    }

    /// `(1 + eps|x|²) I` on the unit ball.
    pub fn iso_quadratic(n: usize, eps: f64) -> Result<Self> {
        check_dim(n)?;
        let (lo, hi) = variable_bounds(eps)?;
        Ok(Self {
            dim: n,
            lambda: lo,
            big_lambda: hi,
            label: format!("iso_quadratic:{}", format_number(eps)),
            source: Source::IsoQuadratic { eps },
        })
    }

    /// `(1 + eps x₁²) I` on the unit ball.
    pub fn iso_x1(n: usize, eps: f64) -> Result<Self> {
        check_dim(n)?;
        let (lo, hi) = variable_bounds(eps)?;
        Ok(Self {
            dim: n,
            lambda: lo,
            big_lambda: hi,
            label: format!("iso_x1:{}", format_number(eps)),
            source: Source::IsoX1 { eps },
        })
    }

    /// `diag(1 + eps x₂², 1 + eps x₁²)` in the plane.
    pub fn cross_diag(eps: f64) -> Result<Self> {
        let (lo, hi) = variable_bounds(eps)?;
        Ok(Self {
            dim: 2,
            lambda: lo,
            big_lambda: hi,
            label: format!("cross_diag:{}", format_number(eps)),
            source: Source::CrossDiag { eps },
        })
    }

    /// A user-supplied variable field. Without `derivative`, entrywise
    /// derivatives fall back to central differences with step [`FD_STEP`]
    /// (accuracy roughly 1e-10 relative instead of exact).
    pub fn custom<F>(
        n: usize,
        lambda: f64,
        big_lambda: f64,
        label: &str,
        eval: F,
        derivative: Option<Arc<DerivativeFn>>,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        check_dim(n)?;
        check_bounds(lambda, big_lambda)?;
        Ok(Self {
            dim: n,
            lambda,
            big_lambda,
            label: label.to_string(),
            source: Source::Custom {
                eval: Arc::new(eval),
                derivative,
            },
        })
    }

    pub fn from_descriptor(desc: &FieldDescriptor) -> Result<Self> {
        match desc {
            FieldDescriptor::Constant {
                matrix,
                lambda,
                big_lambda,
            } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|row| row.len() != n) {
                    return Err(Error::Input(
                        "constant matrix must be square and non-empty".into(),
                    ));
                }
                let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
                match (lambda, big_lambda) {
                    (Some(lo), Some(hi)) => Self::constant(m, *lo, *hi),
                    (None, None) => Self::constant_auto(m),
                    _ => Err(Error::Input(
                        "give both lambda and Lambda or neither".into(),
                    )),
                }
            }
            FieldDescriptor::Builtin {
                name,
                n,
                lambda,
                big_lambda,
                eps,
                seed,
            } => {
                let dim = n.unwrap_or(2);
                match name.as_str() {
                    "identity" => Self::identity(dim),
                    "ps2d" => {
                        if n.is_some_and(|d| d != 2) {
                            return Err(Error::Dimension {
                                expected: 2,
                                got: dim,
                            });
                        }
                        Self::ps2d(
                            required(*lambda, "ps2d", "lambda")?,
                            required(*big_lambda, "ps2d", "Lambda")?,
                        )
                    }
                    "random" => Self::random_constant(
                        dim,
                        lambda.unwrap_or(1.0),
                        big_lambda.unwrap_or(4.0),
                        seed.unwrap_or(0),
                    ),
                    "iso_quadratic" => Self::iso_quadratic(dim, required(*eps, name, "eps")?),
                    "iso_x1" => Self::iso_x1(dim, required(*eps, name, "eps")?),
                    "cross_diag" => Self::cross_diag(required(*eps, name, "eps")?),
                    other => Err(Error::Unsupported(format!("builtin field `{other}`"))),
                }
            }
        }
    }

    /// Descriptor reproducing this field. Custom fields have no descriptor.
    pub fn descriptor(&self) -> Option<FieldDescriptor> {
        let builtin = |name: &str, eps: Option<f64>, n: Option<usize>| FieldDescriptor::Builtin {
            name: name.into(),
            n,
            lambda: None,
            big_lambda: None,
            eps,
            seed: None,
        };
        match &self.source {
            Source::Constant(m) => Some(FieldDescriptor::Constant {
                matrix: (0..m.nrows())
                    .map(|i| m.row(i).iter().cloned().collect())
                    .collect(),
                lambda: Some(self.lambda),
                big_lambda: Some(self.big_lambda),
            }),
            Source::RadialAnisotropic { .. } => Some(FieldDescriptor::Builtin {
                name: "ps2d".into(),
                n: None,
                lambda: Some(self.lambda),
                big_lambda: Some(self.big_lambda),
                eps: None,
                seed: None,
            }),
            Source::IsoQuadratic { eps } => {
                Some(builtin("iso_quadratic", Some(*eps), Some(self.dim)))
            }
            Source::IsoX1 { eps } => Some(builtin("iso_x1", Some(*eps), Some(self.dim))),
            Source::CrossDiag { eps } => Some(builtin("cross_diag", Some(*eps), None)),
            Source::Custom { .. } => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> FieldKind {
        match self.source {
            Source::Constant(_) => FieldKind::Constant,
            _ => FieldKind::Variable,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.kind() == FieldKind::Constant
    }

    /// The constant matrix, if this field is constant.
    pub fn constant_matrix(&self) -> Option<&DMatrix<f64>> {
        match &self.source {
            Source::Constant(m) => Some(m),
            _ => None,
        }
    }

    /// True when the field is only defined away from the origin.
    pub fn singular_at_origin(&self) -> bool {
        matches!(self.source, Source::RadialAnisotropic { .. })
    }

    /// `A(x)`. The radially anisotropic field returns `λ I` at the origin.
    pub fn matrix(&self, x: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let n = self.dim;
        match &self.source {
            Source::Constant(m) => m.clone(),
            Source::RadialAnisotropic { radial, tangential } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let mut m = DMatrix::identity(n, n) * *tangential;
                if r2 > 0.0 {
                    let c = (radial - tangential) / r2;
                    for i in 0..n {
                        for j in 0..n {
                            m[(i, j)] += c * x[i] * x[j];
                        }
                    }
                }
                m
            }
            Source::IsoQuadratic { eps } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                DMatrix::identity(n, n) * (1.0 + eps * r2)
            }
            Source::IsoX1 { eps } => DMatrix::identity(n, n) * (1.0 + eps * x[0] * x[0]),
            Source::CrossDiag { eps } => DMatrix::from_diagonal(&DVector::from_vec(vec![
                1.0 + eps * x[1] * x[1],
                1.0 + eps * x[0] * x[0],
            ])),
            Source::Custom { eval, .. } => eval(x),
        }
    }

    /// True when [`derivative`](Self::derivative) returns exact values.
    pub fn has_analytic_derivatives(&self) -> bool {
        !matches!(
            self.source,
            Source::Custom {
                derivative: None,
                ..
            }
        )
    }

    /// Entrywise derivative `∂A/∂x_i` at `x`; analytic when available,
    /// central differences otherwise.
    pub fn derivative(&self, i: usize, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        match &self.source {
            Source::Constant(_) => DMatrix::zeros(n, n),
            Source::RadialAnisotropic { radial, tangential } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 == 0.0 {
                    return DMatrix::zeros(n, n);
                }
                let c = radial - tangential;
                DMatrix::from_fn(n, n, |j, k| {
                    let dij = if i == j { x[k] } else { 0.0 };
                    let dik = if i == k { x[j] } else { 0.0 };
                    c * ((dij + dik) / r2 - 2.0 * x[i] * x[j] * x[k] / (r2 * r2))
                })
            }
            Source::IsoQuadratic { eps } => DMatrix::identity(n, n) * (2.0 * eps * x[i]),
            Source::IsoX1 { eps } => {
                if i == 0 {
                    DMatrix::identity(n, n) * (2.0 * eps * x[0])
                } else {
                    DMatrix::zeros(n, n)
                }
            }
            Source::CrossDiag { eps } => {
                let mut m = DMatrix::zeros(2, 2);
                if i == 0 {
                    m[(1, 1)] = 2.0 * eps * x[0];
                } else {
                    m[(0, 0)] = 2.0 * eps * x[1];
                }
                m
            }
            Source::Custom {
                derivative: Some(d),
                ..
            } => d(i, x),
            Source::Custom {
                eval,
                derivative: None,
            } => {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += FD_STEP;
                xm[i] -= FD_STEP;
                (eval(&xp) - eval(&xm)) / (2.0 * FD_STEP)
            }
        }
    }
}

fn required(v: Option<f64>, name: &str, key: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Input(format!("builtin `{name}` needs `{key}`")))
}

fn variable_bounds(eps: f64) -> Result<(f64, f64)> {
    if !eps.is_finite() || eps <= -1.0 {
        return Err(Error::Domain(format!(
            "eps must be finite and > -1, got {eps}"
        )));
    }
    Ok(if eps >= 0.0 {
        (1.0, 1.0 + eps)
    } else {
        (1.0 + eps, 1.0)
    })
}

pub(crate) fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn format_matrix(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let row: Vec<String> = m.row(i).iter().map(|v| format_number(*v)).collect();
            format!("[{}]", row.join(","))
        })
        .collect();
    format!("[{}]", rows.join(","))
}

/// Haar-random orthogonal matrix via QR of a Gaussian matrix with the sign fix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Random symmetric matrix with spectrum drawn uniformly from `[lo, hi]`.
pub fn random_spd<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> DMatrix<f64> {
    let q = random_orthogonal(n, rng);
    let mu: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    let d = DMatrix::from_diagonal(&DVector::from_vec(mu));
    let m = &q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Deterministic pseudo-random points in the closed unit ball.
pub fn ball_samples(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dir: Vec<f64> = (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let radius = rng.random::<f64>().powf(1.0 / n as f64);
            dir.iter().map(|v| v / norm * radius).collect()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EllipticityReport {
    pub min_rayleigh: f64,
    pub max_rayleigh: f64,
    pub lambda: f64,
    #[serde(rename = "Lambda")]
    pub big_lambda: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Extreme Rayleigh quotients of `A(x)` over the sample points, using
/// `trials` random unit directions plus the eigenvectors at each point.
pub fn check_ellipticity(
    field: &CoefficientField,
    samples: &[Vec<f64>],
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<EllipticityReport> {
    let n = field.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in samples {
        if x.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: x.len(),
            });
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 > 1.0 + 1e-12 {
            return Err(Error::Domain(format!(
                "sample {x:?} lies outside the closed unit ball"
            )));
        }
        let a = field.matrix(x);
        let asym = asymmetry(&a);
        if asym > MATRIX_TOL * a.abs().max().max(1.0) {
            return Err(Error::Symmetry {
                point: x.clone(),
                asymmetry: asym,
            });
        }
        let eig = SymmetricEigen::new(a.clone());
        let mut directions: Vec<DVector<f64>> = eig
            .eigenvectors
            .column_iter()
            .map(|c| c.into_owned())
            .collect();
        for _ in 0..trials {
            let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = v.norm();
            if norm > 0.0 {
                directions.push(v / norm);
            }
        }
        for xi in &directions {
            let q = (&a * xi).dot(xi) / xi.norm_squared();
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    let pass = lo >= field.lambda() - tol && hi <= field.big_lambda() + tol;
    Ok(EllipticityReport {
        min_rayleigh: lo,
        max_rayleigh: hi,
        lambda: field.lambda(),
        big_lambda: field.big_lambda(),
        tolerance: tol,
        samples: samples.len(),
        pass,
    })
}

/// Orthogonal frame whose first column is `x/|x|`.
///
/// Built as the Householder reflection exchanging `e₁` and `x/|x|`; the
/// identity when `x` already points along `e₁`. The map is smooth except on
/// the ray through `e₁`.
pub fn polar_frame(x: &[f64]) -> Result<DMatrix<f64>> {
    let n = x.len();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Domain("polar frame undefined at the origin".into()));
    }
    let u: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let rest2: f64 = u[1..].iter().map(|v| v * v).sum();
    // s = 1 - u₁, computed without cancellation near e₁
    let s = if u[0] > 0.0 {
        rest2 / (1.0 + u[0])
    } else {
        1.0 - u[0]
    };
    if s == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let mut q = DMatrix::zeros(n, n);
    q[(0, 0)] = u[0];
    for j in 1..n {
        q[(0, j)] = u[j];
        q[(j, 0)] = u[j];
        for i in 1..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            q[(i, j)] = delta - u[i] * u[j] / s;
        }
    }
    Ok(q)
}

/// Block layout of `P = QᵀAQ` in the polar frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarBlocks {
    pub p11: f64,
    pub p12: DVector<f64>,
    pub p22: DMatrix<f64>,
    pub frame: DMatrix<f64>,
}

impl PolarBlocks {
    pub fn from_matrix(p: &DMatrix<f64>, frame: DMatrix<f64>) -> Self {
        let n = p.nrows();
        Self {
            p11: p[(0, 0)],
            p12: DVector::from_iterator(n - 1, (1..n).map(|j| p[(0, j)])),
            p22: p.view((1, 1), (n - 1, n - 1)).into_owned(),
            frame,
        }
    }

    pub fn assemble(&self) -> DMatrix<f64> {
        let n = self.p22.nrows() + 1;
        let mut p = DMatrix::zeros(n, n);
        p[(0, 0)] = self.p11;
        for j in 1..n {
            p[(0, j)] = self.p12[j - 1];
            p[(j, 0)] = self.p12[j - 1];
            for i in 1..n {
                p[(i, j)] = self.p22[(i - 1, j - 1)];
            }
        }
        p
    }

    pub fn trace(&self) -> f64 {
        self.p11 + self.p22.trace()
    }
}

pub fn polar_conjugate(field: &CoefficientField, x: &[f64]) -> Result<PolarBlocks> {
    if x.len() != field.dim() {
        return Err(Error::Dimension {
            expected: field.dim(),
            got: x.len(),
        });
    }
    let q = polar_frame(x)?;
    let p = q.transpose() * field.matrix(x) * &q;
    let p = (&p + p.transpose()) * 0.5;
    Ok(PolarBlocks::from_matrix(&p, q))
}

/// `p₁₁⟨P₂₂ξ,ξ⟩ − ⟨P₁₂,ξ⟩² − λ p₁₁|ξ|²`, nonnegative whenever `P ≥ λ`.
pub fn schur_gap(blocks: &PolarBlocks, lambda: f64, xi: &[f64]) -> Result<f64> {
    let m = blocks.p22.nrows();
    if xi.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: xi.len(),
        });
    }
    let xi = DVector::from_column_slice(xi);
    let xi2 = xi.norm_squared();
    if xi2 == 0.0 {
        return Err(Error::Domain("schur_gap needs a nonzero direction".into()));
    }
    let quad = (&blocks.p22 * &xi).dot(&xi);
    let cross = blocks.p12.dot(&xi);
    Ok(blocks.p11 * quad - cross * cross - lambda * blocks.p11 * xi2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn is_orthogonal(q: &DMatrix<f64>) -> bool {
        let n = q.nrows();
        (q.transpose() * q - DMatrix::<f64>::identity(n, n))
            .abs()
            .max()
            < 1e-12
    }

    #[test]
    fn ellipticity_identity_and_diagonal() {
        let pts = ball_samples(2, 50, 1);
        let id = CoefficientField::identity(2).unwrap();
        let rep = check_ellipticity(&id, &pts, 10, 1e-12, 3).unwrap();
        assert!(rep.pass);
        assert_abs_diff_eq!(rep.min_rayleigh, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.max_rayleigh, 1.0, epsilon = 1e-14);

        let d = CoefficientField::diagonal(&[1.0, 4.0]).unwrap();
        let rep = check_ellipticity(&d, &pts, 10, 1e-12, 3).unwrap();
        assert!(rep.pass);
        assert_abs_diff_eq!(rep.min_rayleigh, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.max_rayleigh, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn ellipticity_detects_wrong_declared_bound() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let f = CoefficientField::constant(m, 2.0, 4.0).unwrap();
        let rep = check_ellipticity(&f, &ball_samples(2, 10, 0), 5, 1e-12, 0).unwrap();
        assert!(!rep.pass);
        assert!(rep.min_rayleigh < 2.0);
    }

    #[test]
    fn ellipticity_rejects_asymmetric_custom_field() {
        let f = CoefficientField::custom(
            2,
            1.0,
            2.0,
            "skew",
            |_x| DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]),
            None,
        )
        .unwrap();
        let err = check_ellipticity(&f, &ball_samples(2, 3, 0), 1, 1e-12, 0).unwrap_err();
        assert!(matches!(err, Error::Symmetry { .. }));
    }

    #[test]
    fn ellipticity_rejects_points_outside_ball() {
        let f = CoefficientField::identity(2).unwrap();
        assert!(check_ellipticity(&f, &[vec![2.0, 0.0]], 1, 1e-12, 0).is_err());
    }

    #[test]
    fn ordering_error_for_bad_bounds() {
        assert!(matches!(
            CoefficientField::ps2d(4.0, 1.0),
            Err(Error::Ordering { .. })
        ));
    }

    #[test]
    fn polar_frame_axis_and_quarter_turn() {
        let q = polar_frame(&[1.0, 0.0]).unwrap();
        assert_eq!(q, DMatrix::<f64>::identity(2, 2));

        let q = polar_frame(&[0.0, 1.0]).unwrap();
        assert!(is_orthogonal(&q));
        assert_abs_diff_eq!(q[(0, 0)], 0.0);
        assert_abs_diff_eq!(q[(1, 0)], 1.0);
        // second column is ±(-1, 0)
        assert_abs_diff_eq!(q[(0, 1)].abs(), 1.0);
        assert_abs_diff_eq!(q[(1, 1)], 0.0);

        assert!(matches!(polar_frame(&[0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn polar_frame_random_3d() {
        for x in ball_samples(3, 200, 9) {
            let q = polar_frame(&x).unwrap();
            assert!(is_orthogonal(&q));
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            for i in 0..3 {
                assert_abs_diff_eq!(q[(i, 0)], x[i] / norm, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn polar_frame_near_e1_is_stable() {
        let q = polar_frame(&[1.0, 1e-9, -2e-9]).unwrap();
        assert!(is_orthogonal(&q));
        let q = polar_frame(&[-1.0, 1e-12, 0.0]).unwrap();
        assert!(is_orthogonal(&q));
    }

    #[test]
    fn conjugate_identity_and_aligned_diagonal() {
        let id = CoefficientField::identity(3).unwrap();
        let b = polar_conjugate(&id, &[0.3, -0.2, 0.5]).unwrap();
        assert_abs_diff_eq!(b.p11, 1.0, epsilon = 1e-14);
        assert!(b.p12.norm() < 1e-14);
        assert!((b.p22.clone() - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-14);

        let d = CoefficientField::diagonal(&[1.0, 4.0]).unwrap();
        let b = polar_conjugate(&d, &[0.7, 0.0]).unwrap();
        assert_abs_diff_eq!(b.p11, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(b.p22[(0, 0)], 4.0, epsilon = 1e-14);
    }

    #[test]
    fn conjugate_diagonal_on_the_diagonal_direction() {
        let (l, big) = (1.0, 4.0);
        let d = CoefficientField::diagonal(&[l, big]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let b = polar_conjugate(&d, &[s, s]).unwrap();
        assert_abs_diff_eq!(b.p11, (l + big) / 2.0, epsilon = 1e-12);
        // eigen-decomposition oracle: the spectrum is preserved
        let eig = SymmetricEigen::new(b.assemble());
        let mut ev: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ev[0], l, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], big, epsilon = 1e-12);
    }

    #[test]
    fn schur_gap_examples() {
        let id = CoefficientField::identity(2).unwrap();
        let b = polar_conjugate(&id, &[0.2, 0.9]).unwrap();
        assert_abs_diff_eq!(schur_gap(&b, 1.0, &[0.7]).unwrap(), 0.0, epsilon = 1e-14);

        let b = PolarBlocks::from_matrix(
            &DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0])),
            DMatrix::identity(2, 2),
        );
        assert_abs_diff_eq!(schur_gap(&b, 1.0, &[1.0]).unwrap(), 3.0, epsilon = 1e-14);
        assert!(schur_gap(&b, 1.0, &[0.0]).is_err());
        assert!(schur_gap(&b, 1.0, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ps2d_field_has_radial_eigenvector() {
        let f = CoefficientField::ps2d(1.0, 4.0).unwrap();
        let x = [0.3, -0.4];
        let a = f.matrix(&x);
        let xv = DVector::from_column_slice(&x);
        let ax = &a * &xv;
        assert!((ax - xv * 4.0).norm() < 1e-14);
    }

    #[test]
    fn analytic_derivatives_match_central_differences() {
        let fields = [
            CoefficientField::ps2d(1.0, 4.0).unwrap(),
            CoefficientField::iso_quadratic(3, 0.3).unwrap(),
            CoefficientField::iso_x1(2, 0.5).unwrap(),
            CoefficientField::cross_diag(0.2).unwrap(),
        ];
        for f in &fields {
            for x in ball_samples(f.dim(), 20, 4) {
                if x.iter().map(|v| v * v).sum::<f64>() < 1e-2 {
                    continue;
                }
                for i in 0..f.dim() {
                    let h = 1e-6;
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (f.matrix(&xp) - f.matrix(&xm)) / (2.0 * h);
                    let exact = f.derivative(i, &x);
                    assert!((fd - exact).abs().max() < 1e-6, "{f:?}");
                }
            }
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let json = r#"{"kind":"builtin","name":"ps2d","lambda":1,"Lambda":4}"#;
        let desc: FieldDescriptor = serde_json::from_str(json).unwrap();
        let f = CoefficientField::from_descriptor(&desc).unwrap();
        assert_eq!(f.lambda(), 1.0);
        assert_eq!(f.big_lambda(), 4.0);
        let json = r#"{"kind":"constant","matrix":[[2,1],[1,2]]}"#;
        let f = CoefficientField::from_descriptor(&serde_json::from_str(json).unwrap()).unwrap();
        assert_abs_diff_eq!(f.lambda(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.big_lambda(), 3.0, epsilon = 1e-12);
        let back = CoefficientField::from_descriptor(&f.descriptor().unwrap()).unwrap();
        assert_eq!(back.constant_matrix(), f.constant_matrix());
    }

    #[test]
    fn random_constant_is_deterministic() {
        let a = CoefficientField::random_constant(2, 1.0, 4.0, 7).unwrap();
        let b = CoefficientField::random_constant(2, 1.0, 4.0, 7).unwrap();
        assert_eq!(a.constant_matrix(), b.constant_matrix());
        assert!(a.lambda() >= 1.0 && a.big_lambda() <= 4.0);
    }
}
