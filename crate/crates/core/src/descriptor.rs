//! Parsers for the short spec strings accepted on the command line.
//!
//! Fields: `identity`, `identity:n=3`, `const:diag(1,4)`, `const:[[2,1],[1,3]]`,
//! `const:random` (optionally `const:random:n=3,lambda=1,Lambda=4`),
//! `ps2d:1,4`, `ps2d:lambda=1,Lambda=4`, `iso_quadratic:n=2,eps=0.1`,
//! `iso_x1:n=2,eps=0.3`, `cross_diag:eps=0.5`, or a JSON field descriptor.
//!
//! Solutions: `affine`, `affine:1,-2`, `harmonic:n=3,k=2,i=0`, `ps2d`,
//! `ps2d:1,4`, `normsq`, `xy`.
//!
//! Boundary data: a trigonometric expression (see [`BoundaryExpr`]) or
//! `random`, `random:degree=3`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::boundary::BoundaryExpr;
use crate::coefficient::{CoefficientField, FieldDescriptor};
use crate::error::{Error, Result};
use crate::solutions::{
    affine, harmonic_polynomial, norm_squared, Polynomial, PolynomialSolution, PsSolution, Solution,
};

pub const MAX_SPEC_LEN: usize = 4096;
pub const MAX_LADDER: usize = 10_000;
pub const MAX_SWEEP_ROWS: usize = 100_000;

fn check_len(spec: &str) -> Result<()> {
    if spec.len() > MAX_SPEC_LEN {
        return Err(Error::Parse(format!(
            "spec longer than {MAX_SPEC_LEN} bytes"
        )));
    }
    Ok(())
}

fn number(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("expected a number, got '{}'", s.trim())))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!(
            "number must be finite, got '{}'",
            s.trim()
        )));
    }
    Ok(v)
}

fn integer(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| {
        Error::Parse(format!(
            "expected a non-negative integer, got '{}'",
            s.trim()
        ))
    })
}

/// `key=value` pairs and bare positional values of a comma list.
#[derive(Debug, Default)]
struct Args<'a> {
    positional: Vec<&'a str>,
    named: Vec<(&'a str, &'a str)>,
}

impl<'a> Args<'a> {
    fn parse(s: &'a str) -> Result<Self> {
        let mut out = Args::default();
        if s.trim().is_empty() {
            return Ok(out);
        }
        for part in s.split(',') {
            match part.split_once('=') {
                Some((k, v)) => {
                    let k = k.trim();
                    if k.is_empty() || out.named.iter().any(|(q, _)| *q == k) {
                        return Err(Error::Parse(format!("bad or repeated key in '{part}'")));
                    }
                    out.named.push((k, v.trim()));
                }
                None => out.positional.push(part.trim()),
            }
        }
        Ok(out)
    }

    fn get(&self, key: &str) -> Option<&'a str> {
        self.named.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        match self.named.iter().find(|(k, _)| !keys.contains(k)) {
            Some((k, _)) => Err(Error::Parse(format!("unknown key '{k}'"))),
            None => Ok(()),
        }
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(number).transpose()
    }

    fn int(&self, key: &str) -> Result<Option<usize>> {
        self.get(key).map(integer).transpose()
    }
}

fn split_head(spec: &str) -> (&str, &str) {
    match spec.split_once(':') {
        Some((h, rest)) => (h.trim(), rest.trim()),
        None => (spec.trim(), ""),
    }
}

/// Dimension fixed by a field spec itself, if any.
pub fn field_dim(spec: &str) -> Option<usize> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        return match serde_json::from_str::<FieldDescriptor>(spec).ok()? {
            FieldDescriptor::Constant { matrix, .. } => Some(matrix.len()),
            FieldDescriptor::Builtin { name, n, .. } => match name.as_str() {
                "ps2d" | "cross_diag" => Some(2),
                _ => n,
            },
        };
    }
    let (head, rest) = split_head(spec);
    match head {
        "ps2d" | "cross_diag" => Some(2),
        "const" => {
            if let Some(inner) = rest.strip_prefix("diag(").and_then(|r| r.strip_suffix(')')) {
                Some(inner.split(',').count())
            } else if rest.starts_with('[') {
                serde_json::from_str::<Vec<Vec<f64>>>(rest)
                    .ok()
                    .map(|m| m.len())
            } else {
                let (_, args) = split_head(rest);
                Args::parse(args).ok()?.int("n").ok()?
            }
        }
        _ => Args::parse(rest).ok()?.int("n").ok()?,
    }
}

/// Dimension fixed by a solution spec itself, if any.
pub fn solution_dim(spec: &str) -> Option<usize> {
    let (head, rest) = split_head(spec);
    match head {
        "ps2d" | "xy" => Some(2),
        "affine" if !rest.is_empty() => Some(rest.split(',').count()),
        _ => Args::parse(rest).ok()?.int("n").ok()?,
    }
}

/// Builds a coefficient field; `dim` is used when the spec does not fix one.
pub fn parse_field(spec: &str, dim: usize, seed: u64) -> Result<CoefficientField> {
    check_len(spec)?;
    let spec = spec.trim();
    if spec.starts_with('{') {
        let desc: FieldDescriptor = serde_json::from_str(spec)
            .map_err(|e| Error::Parse(format!("field descriptor: {e}")))?;
        return CoefficientField::from_descriptor(&desc);
    }
    let (head, rest) = split_head(spec);
    match head {
        "identity" => {
            let args = Args::parse(rest)?;
            args.allow(&["n"])?;
            let n = args
                .int("n")?
                .or_else(|| args.positional.first().and_then(|p| integer(p).ok()));
            CoefficientField::identity(n.unwrap_or(dim))
        }
        "const" => parse_constant(rest, dim, seed),
        "ps2d" => {
            let (l, big) = parse_bounds(rest)?;
            CoefficientField::ps2d(l, big)
        }
        "iso_quadratic" | "iso_x1" | "cross_diag" => {
            let args = Args::parse(rest)?;
            args.allow(&["n", "eps"])?;
            let eps = args.num("eps")?.unwrap_or(0.1);
            let n = args.int("n")?.unwrap_or(dim);
            match head {
                "iso_quadratic" => CoefficientField::iso_quadratic(n, eps),
                "iso_x1" => CoefficientField::iso_x1(n, eps),
                _ => CoefficientField::cross_diag(eps),
            }
        }
        _ => Err(Error::Parse(format!("unknown field '{head}'"))),
    }
}

fn parse_bounds(rest: &str) -> Result<(f64, f64)> {
    let args = Args::parse(rest)?;
    args.allow(&["lambda", "Lambda"])?;
    match (
        args.positional.as_slice(),
        args.num("lambda")?,
        args.num("Lambda")?,
    ) {
        ([], Some(l), Some(b)) => Ok((l, b)),
        ([l, b], None, None) => Ok((number(l)?, number(b)?)),
        ([], None, None) => Ok((1.0, 4.0)),
        _ => Err(Error::Parse(format!(
            "expected 'lambda,Lambda' or named bounds, got '{rest}'"
        ))),
    }
}

fn parse_constant(rest: &str, dim: usize, seed: u64) -> Result<CoefficientField> {
    if let Some(inner) = rest.strip_prefix("diag(").and_then(|r| r.strip_suffix(')')) {
        let entries = inner.split(',').map(number).collect::<Result<Vec<_>>>()?;
        return CoefficientField::diagonal(&entries);
    }
    if rest.starts_with('[') {
        let rows: Vec<Vec<f64>> =
            serde_json::from_str(rest).map_err(|e| Error::Parse(format!("matrix literal: {e}")))?;
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Parse(
                "matrix literal must be square and non-empty".into(),
            ));
        }
        return CoefficientField::constant_auto(DMatrix::from_fn(n, n, |i, j| rows[i][j]));
    }
    let (kind, args) = split_head(rest);
    if kind != "random" {
        return Err(Error::Parse(format!("unknown constant field '{rest}'")));
    }
    let args = Args::parse(args)?;
    args.allow(&["n", "lambda", "Lambda", "seed"])?;
    let n = args.int("n")?.unwrap_or(dim);
    let lo = args.num("lambda")?.unwrap_or(1.0);
    let hi = args.num("Lambda")?.unwrap_or(4.0);
    let seed = match args.get("seed") {
        Some(v) => v
            .parse::<u64>()
            .map_err(|_| Error::Parse(format!("bad seed '{v}'")))?,
        None => seed,
    };
    CoefficientField::random_constant(n, lo, hi, seed)
}

/// Builds a solution compatible with `field`.
///
/// `ps2d` without bounds takes them from the field.
pub fn parse_solution(spec: &str, field: &CoefficientField) -> Result<Arc<dyn Solution>> {
    check_len(spec)?;
    let n = field.dim();
    let (head, rest) = split_head(spec);
    let sol: Arc<dyn Solution> = match head {
        "affine" => {
            let g = if rest.is_empty() {
                let mut g = vec![0.0; n];
                g[0] = 1.0;
                g
            } else {
                rest.split(',').map(number).collect::<Result<Vec<_>>>()?
            };
            Arc::new(affine(&g)?)
        }
        "harmonic" => {
            let args = Args::parse(rest)?;
            args.allow(&["n", "k", "i"])?;
            let dim = args.int("n")?.unwrap_or(n);
            let k = args.int("k")?.unwrap_or(1);
            let i = args.int("i")?.unwrap_or(0);
            if k > 32 {
                return Err(Error::Input(format!("degree {k} too large")));
            }
            Arc::new(harmonic_polynomial(dim, k, i)?)
        }
        "ps2d" => {
            let (l, big) = if rest.is_empty() {
                (field.lambda(), field.big_lambda())
            } else {
                parse_bounds(rest)?
            };
            Arc::new(PsSolution::new(l, big)?)
        }
        "normsq" => Arc::new(norm_squared(n)?),
        "xy" => {
            let poly = Polynomial::new(2, vec![(1.0, [1, 1, 0])])?;
            Arc::new(PolynomialSolution::new(poly, "x1*x2"))
        }
        _ => return Err(Error::Parse(format!("unknown solution '{head}'"))),
    };
    if sol.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: sol.dim(),
        });
    }
    Ok(sol)
}

/// Boundary data; `random` draws a seeded trace of the given degree (3 by default).
pub fn parse_boundary(spec: &str, dim: usize, seed: u64) -> Result<BoundaryExpr> {
    check_len(spec)?;
    let (head, rest) = split_head(spec);
    if head == "random" {
        let args = Args::parse(rest)?;
        args.allow(&["degree"])?;
        let degree = args.int("degree")?.unwrap_or(3);
        if !(1..=16).contains(&degree) {
            return Err(Error::Input(format!(
                "random degree must be in 1..=16, got {degree}"
            )));
        }
        return BoundaryExpr::random(dim, degree, seed);
    }
    BoundaryExpr::parse(spec, dim)
}

/// Radii from `a..bxm` (geometric, `m` points, endpoints included) or a
/// comma list. Radii must lie in `(0, 1]`.
pub fn parse_ladder(spec: &str) -> Result<Vec<f64>> {
    check_len(spec)?;
    let spec = spec.trim();
    let radii = if let Some((range, count)) = spec.split_once('x') {
        let (a, b) = range
            .split_once("..")
            .ok_or_else(|| Error::Parse(format!("expected 'a..bxm', got '{spec}'")))?;
        let (a, b, m) = (number(a)?, number(b)?, integer(count)?);
        if !(2..=MAX_LADDER).contains(&m) {
            return Err(Error::Input(format!(
                "ladder needs 2..={MAX_LADDER} points, got {m}"
            )));
        }
        if !(a > 0.0 && a < b) {
            return Err(Error::Input(format!(
                "ladder needs 0 < a < b, got {a}..{b}"
            )));
        }
        let q = (b / a).ln() / (m - 1) as f64;
        let mut r: Vec<f64> = (0..m).map(|k| a * (q * k as f64).exp()).collect();
        r[m - 1] = b;
        r
    } else {
        let r = spec.split(',').map(number).collect::<Result<Vec<_>>>()?;
        if r.len() > MAX_LADDER {
            return Err(Error::Input(format!("ladder longer than {MAX_LADDER}")));
        }
        if r.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Input("radii must increase".into()));
        }
        r
    };
    if radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(Error::Domain("radii must lie in (0, 1]".into()));
    }
    Ok(radii)
}

/// Dimensions and ellipticity ratios of a sweep such as
/// `n=2..8,ratio=0.1..1.0x10`. Ratios are spaced linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub ns: Vec<u32>,
    pub ratios: Vec<f64>,
}

pub fn parse_sweep(spec: &str) -> Result<SweepSpec> {
    check_len(spec)?;
    let mut ns = None;
    let mut ratios = None;
    for part in spec.split(',').map(str::trim) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
        match key.trim() {
            "n" if ns.is_none() => ns = Some(parse_dims(value)?),
            "ratio" if ratios.is_none() => ratios = Some(parse_ratios(value)?),
            k => return Err(Error::Parse(format!("unknown or repeated sweep key '{k}'"))),
        }
    }
    let (ns, ratios) = match (ns, ratios) {
        (Some(n), Some(r)) => (n, r),
        _ => return Err(Error::Parse("sweep needs both n= and ratio=".into())),
    };
    if ns.len() * ratios.len() > MAX_SWEEP_ROWS {
        return Err(Error::Input(format!(
            "sweep larger than {MAX_SWEEP_ROWS} rows"
        )));
    }
    Ok(SweepSpec { ns, ratios })
}

fn parse_dims(value: &str) -> Result<Vec<u32>> {
    let dim = |s: &str| -> Result<u32> {
        s.trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad dimension '{}'", s.trim())))
    };
    let (a, b) = match value.split_once("..") {
        Some((a, b)) => (dim(a)?, dim(b)?),
        None => {
            let d = dim(value)?;
            (d, d)
        }
    };
    if a < 2 || a > b || b as usize > MAX_SWEEP_ROWS {
        return Err(Error::Input(format!("dimension range {a}..{b}")));
    }
    Ok((a..=b).collect())
}

fn parse_ratios(value: &str) -> Result<Vec<f64>> {
    let (range, count) = match value.split_once('x') {
        Some((r, c)) => (r, integer(c)?),
        None => (value, 1),
    };
    let (a, b) = match range.split_once("..") {
        Some((a, b)) => (number(a)?, number(b)?),
        None => {
            let v = number(range)?;
            (v, v)
        }
    };
    if !(a > 0.0 && a <= b && b <= 1.0) {
        return Err(Error::Input(format!(
            "ratios need 0 < a <= b <= 1, got {a}..{b}"
        )));
    }
    if count == 0 || count > MAX_SWEEP_ROWS || (count == 1 && a != b) {
        return Err(Error::Input(format!("bad ratio count {count}")));
    }
    if count == 1 {
        return Ok(vec![a]);
    }
    let step = (b - a) / (count - 1) as f64;
    let mut r: Vec<f64> = (0..count).map(|k| a + step * k as f64).collect();
    r[count - 1] = b;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::FieldKind;

    #[test]
    fn field_forms() {
        let f = parse_field("const:diag(1,4)", 3, 0).unwrap();
        assert_eq!((f.dim(), f.lambda(), f.big_lambda()), (2, 1.0, 4.0));
        let f = parse_field("identity:n=3", 2, 0).unwrap();
        assert_eq!(f.dim(), 3);
        assert_eq!(parse_field("identity", 2, 0).unwrap().dim(), 2);
        let f = parse_field("ps2d:lambda=1,Lambda=9", 2, 0).unwrap();
        assert_eq!(f.big_lambda(), 9.0);
        assert_eq!(f.kind(), FieldKind::Variable);
        let f = parse_field("const:[[2,1],[1,3]]", 2, 0).unwrap();
        assert!(f.is_constant());
        let j = r#"{"kind":"builtin","name":"ps2d","lambda":1,"Lambda":4}"#;
        assert_eq!(parse_field(j, 2, 0).unwrap().big_lambda(), 4.0);
        assert!(parse_field("cross_diag:eps=0.5", 2, 0).is_ok());
        assert!(parse_field("iso_x1:n=3,eps=0.2", 2, 0).is_ok());
    }

    #[test]
    fn random_field_is_seeded() {
        let a = parse_field("const:random", 2, 7).unwrap();
        let b = parse_field("const:random", 2, 7).unwrap();
        let c = parse_field("const:random:seed=8", 2, 7).unwrap();
        let m = |f: &CoefficientField| f.matrix(&[0.0, 0.0]);
        assert_eq!(m(&a), m(&b));
        assert_ne!(m(&a), m(&c));
        assert!(a.lambda() >= 1.0 && a.big_lambda() <= 4.0);
    }

    #[test]
    fn bad_fields_are_rejected() {
        for s in [
            "",
            "nope",
            "const:diag(1,x)",
            "const:[[1,2]]",
            "const:diag(4,1,nan)",
            "ps2d:4,1",
            "identity:m=2",
            "const:random:n=2,n=3",
            "identity:n=1000000000",
            "iso_quadratic:n=65",
        ] {
            assert!(parse_field(s, 2, 0).is_err(), "{s}");
        }
    }

    #[test]
    fn dims_from_specs() {
        assert_eq!(field_dim("const:diag(1,2,3)"), Some(3));
        assert_eq!(field_dim("ps2d:1,4"), Some(2));
        assert_eq!(field_dim("identity"), None);
        assert_eq!(solution_dim("harmonic:n=3,k=2,i=0"), Some(3));
        assert_eq!(solution_dim("affine:1,2,3"), Some(3));
        assert_eq!(solution_dim("normsq"), None);
    }

    #[test]
    fn solution_forms() {
        let field = parse_field("ps2d:1,4", 2, 0).unwrap();
        let ps = parse_solution("ps2d", &field).unwrap();
        assert_eq!(ps.homogeneity(), Some(0.5));
        assert!((ps.value(&[0.25, 0.0]) - 0.5).abs() < 1e-14);
        let id3 = parse_field("identity:n=3", 2, 0).unwrap();
        let h = parse_solution("harmonic:n=3,k=2,i=0", &id3).unwrap();
        assert_eq!(h.homogeneity(), Some(2.0));
        assert!(parse_solution("harmonic:n=2,k=1,i=0", &id3).is_err());
        assert!(parse_solution("xy", &id3).is_err());
        assert_eq!(
            parse_solution("affine", &id3)
                .unwrap()
                .gradient(&[0.1, 0.2, 0.3]),
            vec![1.0, 0.0, 0.0]
        );
        assert!(parse_solution("harmonic:k=99", &id3).is_err());
    }

    #[test]
    fn boundary_forms() {
        let b = parse_boundary("cos(theta)", 2, 0).unwrap();
        assert!((b.value(&[0.0, 1.0])).abs() < 1e-15);
        let r1 = parse_boundary("random:degree=2", 3, 5).unwrap();
        let r2 = parse_boundary("random:degree=2", 3, 5).unwrap();
        assert_eq!(r1, r2);
        assert!(parse_boundary("random:degree=0", 2, 0).is_err());
        assert!(parse_boundary("random:deg=2", 2, 0).is_err());
    }

    #[test]
    fn ladders() {
        let r = parse_ladder("0.01..1x5").unwrap();
        assert_eq!(r.len(), 5);
        assert!((r[1] - 0.1f64.sqrt() * 0.1).abs() < 1e-15);
        assert_eq!(r[4], 1.0);
        assert_eq!(parse_ladder("0.25, 0.5,1").unwrap(), vec![0.25, 0.5, 1.0]);
        for s in [
            "0.5,0.25",
            "0..1x4",
            "0.1..2x4",
            "0.1..1x1",
            "0.1..1x100000",
            "abc",
        ] {
            assert!(parse_ladder(s).is_err(), "{s}");
        }
    }

    #[test]
    fn sweeps() {
        let s = parse_sweep("n=2..8,ratio=0.1..1.0x10").unwrap();
        assert_eq!(s.ns, (2..=8).collect::<Vec<u32>>());
        assert_eq!(s.ratios.len(), 10);
        assert!((s.ratios[1] - 0.2).abs() < 1e-15);
        assert_eq!(s.ratios[9], 1.0);
        assert_eq!(parse_sweep("ratio=0.5,n=3").unwrap().ns, vec![3]);
        for s in [
            "n=2..8",
            "n=1..3,ratio=0.5",
            "n=2,ratio=0..1x3",
            "n=2,ratio=0.1..1x1",
            "n=2,n=3,ratio=1",
            "n=2,ratio=0.1..1x999999",
        ] {
            assert!(parse_sweep(s).is_err(), "{s}");
        }
    }
}
