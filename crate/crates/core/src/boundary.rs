//! Boundary data on the unit sphere.
//!
//! The accepted language is deliberately small: a signed sum of products of
//! numbers, the coordinates `x1 x2 x3` and `cos(k*theta)`, `sin(k*theta)`,
//! `cos(k*phi)`, `sin(k*phi)`. In the plane `theta` is the polar angle; in
//! three dimensions `theta ∈ [0, π]` is measured from `+x3` and `phi` is the
//! azimuth in the `x1 x2` plane.
//!
//! Every expression is evaluated through its 0-homogeneous extension
//! `x ↦ f(x/|x|)`, so [`BoundaryExpr::gradient`] is the tangential gradient.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    Theta,
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Factor {
    /// `x_i/|x|`, zero-based index
    Coord(usize),
    Cos(Angle, f64),
    Sin(Angle, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryExpr {
    dim: usize,
    terms: Vec<Term>,
    source: String,
}

const MAX_INPUT: usize = 4096;
const MAX_FREQUENCY: f64 = 1e6;

impl BoundaryExpr {
    pub fn parse(input: &str, dim: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::Unsupported(format!(
                "boundary data in dimension {dim}"
            )));
        }
        if input.len() > MAX_INPUT {
            return Err(Error::Parse("boundary expression too long".into()));
        }
        let tokens = tokenize(input)?;
        let mut parser = Parser { tokens, pos: 0 };
        let terms = parser.sum()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Parse(format!(
                "unexpected token {:?}",
                parser.tokens[parser.pos]
            )));
        }
        let expr = Self {
            dim,
            terms,
            source: input.trim().to_string(),
        };
        expr.check_dimension()?;
        Ok(expr)
    }

    pub fn from_terms(dim: usize, terms: Vec<Term>) -> Result<Self> {
        let source = render(&terms);
        let expr = Self { dim, terms, source };
        expr.check_dimension()?;
        Ok(expr)
    }

    /// Random trace of degree ≤ `degree`: a trigonometric polynomial in the
    /// plane, a polynomial in `x1 x2 x3` restricted to the sphere in 3-D.
    pub fn random(dim: usize, degree: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = vec![Term {
            coef: rng.random_range(-1.0..1.0),
            factors: vec![],
        }];
        match dim {
            2 => {
                for k in 1..=degree {
                    let k = k as f64;
                    terms.push(Term {
                        coef: rng.random_range(-1.0..1.0),
                        factors: vec![Factor::Cos(Angle::Theta, k)],
                    });
                    terms.push(Term {
                        coef: rng.random_range(-1.0..1.0),
                        factors: vec![Factor::Sin(Angle::Theta, k)],
                    });
                }
            }
            3 => {
                for d in 1..=degree {
                    for a in 0..=d {
                        for b in 0..=(d - a) {
                            let c = d - a - b;
                            let mut factors = Vec::new();
                            factors.extend(std::iter::repeat_n(Factor::Coord(0), a));
                            factors.extend(std::iter::repeat_n(Factor::Coord(1), b));
                            factors.extend(std::iter::repeat_n(Factor::Coord(2), c));
                            terms.push(Term {
                                coef: rng.random_range(-1.0..1.0),
                                factors,
                            });
                        }
                    }
                }
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "boundary data in dimension {dim}"
                )))
            }
        }
        Self::from_terms(dim, terms)
    }

    fn check_dimension(&self) -> Result<()> {
        for t in &self.terms {
            for f in &t.factors {
                match f {
                    Factor::Coord(i) if *i >= self.dim => {
                        return Err(Error::Parse(format!(
                            "x{} used in dimension {}",
                            i + 1,
                            self.dim
                        )));
                    }
                    Factor::Cos(Angle::Phi, _) | Factor::Sin(Angle::Phi, _) if self.dim == 2 => {
                        return Err(Error::Parse("phi is only defined in dimension 3".into()));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Value of the 0-homogeneous extension; `x` must be nonzero.
    pub fn value(&self, x: &[f64]) -> f64 {
        let geo = Geometry::new(x);
        self.terms
            .iter()
            .map(|t| t.coef * t.factors.iter().map(|f| geo.factor(f).0).product::<f64>())
            .sum()
    }

    /// Gradient of the 0-homogeneous extension (tangent to the sphere through `x`).
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let geo = Geometry::new(x);
        let mut out = vec![0.0; n];
        for t in &self.terms {
            let evals: Vec<(f64, Vec<f64>)> = t.factors.iter().map(|f| geo.factor(f)).collect();
            for (j, (_, g)) in evals.iter().enumerate() {
                let others: f64 = evals
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != j)
                    .map(|(_, e)| e.0)
                    .product();
                for d in 0..n {
                    out[d] += t.coef * others * g[d];
                }
            }
        }
        out
    }

    /// Smallest and largest sampled value on the sphere (for max-principle checks).
    pub fn sampled_range(&self, samples: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut push = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        if self.dim == 2 {
            for j in 0..samples {
                let t = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
                push(self.value(&[t.cos(), t.sin()]));
            }
        } else {
            let m = (samples as f64).sqrt().ceil() as usize;
            for a in 0..=m {
                let th = std::f64::consts::PI * a as f64 / m as f64;
                for b in 0..(2 * m) {
                    let ph = std::f64::consts::PI * b as f64 / m as f64;
                    push(self.value(&[th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]));
                }
            }
        }
        (lo, hi)
    }
}

impl fmt::Display for BoundaryExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn render(terms: &[Term]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, t) in terms.iter().enumerate() {
        let mut s = match (i, t.coef < 0.0) {
            (0, true) => format!("-{}", -t.coef),
            (0, false) => format!("{}", t.coef),
            (_, true) => format!(" - {}", -t.coef),
            (_, false) => format!(" + {}", t.coef),
        };
        for f in &t.factors {
            s.push('*');
            s.push_str(&match f {
                Factor::Coord(i) => format!("x{}", i + 1),
                Factor::Cos(a, k) => format!("cos({k}*{})", angle_name(*a)),
                Factor::Sin(a, k) => format!("sin({k}*{})", angle_name(*a)),
            });
        }
        out.push_str(&s);
    }
    out
}

fn angle_name(a: Angle) -> &'static str {
    match a {
        Angle::Theta => "theta",
        Angle::Phi => "phi",
    }
}

/// Angles and their gradients at a point.
struct Geometry<'a> {
    x: &'a [f64],
    r2: f64,
    theta: f64,
    grad_theta: Vec<f64>,
    phi: f64,
    grad_phi: Vec<f64>,
}

impl<'a> Geometry<'a> {
    fn new(x: &'a [f64]) -> Self {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if x.len() == 2 {
            let theta = x[1].atan2(x[0]);
            let grad_theta = vec![-x[1] / r2, x[0] / r2];
            Self {
                x,
                r2,
                theta,
                grad_theta,
                phi: 0.0,
                grad_phi: vec![0.0, 0.0],
            }
        } else {
            let rho2 = x[0] * x[0] + x[1] * x[1];
            let rho = rho2.sqrt();
            let theta = rho.atan2(x[2]);
            let phi = x[1].atan2(x[0]);
            let (grad_theta, grad_phi) = if rho2 > 0.0 {
                (
                    vec![
                        x[2] * x[0] / (r2 * rho),
                        x[2] * x[1] / (r2 * rho),
                        -rho / r2,
                    ],
                    vec![-x[1] / rho2, x[0] / rho2, 0.0],
                )
            } else {
                (vec![0.0; 3], vec![0.0; 3])
            };
            Self {
                x,
                r2,
                theta,
                grad_theta,
                phi,
                grad_phi,
            }
        }
    }

    fn factor(&self, f: &Factor) -> (f64, Vec<f64>) {
        let n = self.x.len();
        match *f {
            Factor::Coord(i) => {
                let r = self.r2.sqrt();
                let v = self.x[i] / r;
                let g = (0..n)
                    .map(|d| ((if d == i { 1.0 } else { 0.0 }) - v * self.x[d] / r) / r)
                    .collect();
                (v, g)
            }
            Factor::Cos(a, k) => {
                let (ang, grad) = self.angle(a);
                let s = -k * (k * ang).sin();
                ((k * ang).cos(), grad.iter().map(|g| s * g).collect())
            }
            Factor::Sin(a, k) => {
                let (ang, grad) = self.angle(a);
                let c = k * (k * ang).cos();
                ((k * ang).sin(), grad.iter().map(|g| c * g).collect())
            }
        }
    }

    fn angle(&self, a: Angle) -> (f64, &[f64]) {
        match a {
            Angle::Theta => (self.theta, &self.grad_theta),
            Angle::Phi => (self.phi, &self.grad_phi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number `{text}`")))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(Error::Parse(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(Error::Parse(format!("expected {want:?}, found {other:?}"))),
        }
    }

    fn sum(&mut self) -> Result<Vec<Term>> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        match self.peek() {
            Some(Token::Minus) => {
                sign = -1.0;
                self.pos += 1;
            }
            Some(Token::Plus) => self.pos += 1,
            _ => {}
        }
        loop {
            let mut t = self.product()?;
            t.coef *= sign;
            terms.push(t);
            match self.peek() {
                Some(Token::Plus) => {
                    sign = 1.0;
                    self.pos += 1;
                }
                Some(Token::Minus) => {
                    sign = -1.0;
                    self.pos += 1;
                }
                _ => break,
            }
        }
        Ok(terms)
    }

    fn product(&mut self) -> Result<Term> {
        let mut term = Term {
            coef: 1.0,
            factors: Vec::new(),
        };
        self.factor(&mut term)?;
        while self.peek() == Some(&Token::Star) {
            self.pos += 1;
            self.factor(&mut term)?;
        }
        Ok(term)
    }

    fn factor(&mut self, term: &mut Term) -> Result<()> {
        match self.next() {
            Some(Token::Num(v)) => {
                term.coef *= v;
                Ok(())
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "x1" => {
                    term.factors.push(Factor::Coord(0));
                    Ok(())
                }
                "x2" => {
                    term.factors.push(Factor::Coord(1));
                    Ok(())
                }
                "x3" => {
                    term.factors.push(Factor::Coord(2));
                    Ok(())
                }
                "cos" | "sin" => {
                    self.expect(Token::LParen)?;
                    let (angle, k) = self.argument()?;
                    self.expect(Token::RParen)?;
                    term.factors.push(if name == "cos" {
                        Factor::Cos(angle, k)
                    } else {
                        Factor::Sin(angle, k)
                    });
                    Ok(())
                }
                other => Err(Error::Parse(format!("unknown name `{other}`"))),
            },
            other => Err(Error::Parse(format!("expected a factor, found {other:?}"))),
        }
    }

    /// `angle`, `k*angle` or `angle*k`
    fn argument(&mut self) -> Result<(Angle, f64)> {
        let angle_of = |name: &str| match name {
            "theta" => Ok(Angle::Theta),
            "phi" => Ok(Angle::Phi),
            other => Err(Error::Parse(format!(
                "expected theta or phi, found `{other}`"
            ))),
        };
        let (angle, k) = match self.next() {
            Some(Token::Num(k)) => {
                self.expect(Token::Star)?;
                match self.next() {
                    Some(Token::Ident(name)) => (angle_of(&name)?, k),
                    other => {
                        return Err(Error::Parse(format!("expected an angle, found {other:?}")))
                    }
                }
            }
            Some(Token::Ident(name)) => {
                let a = angle_of(&name)?;
                if self.peek() == Some(&Token::Star) {
                    self.pos += 1;
                    match self.next() {
                        Some(Token::Num(k)) => (a, k),
                        other => {
                            return Err(Error::Parse(format!("expected a number, found {other:?}")))
                        }
                    }
                } else {
                    (a, 1.0)
                }
            }
            other => {
                return Err(Error::Parse(format!(
                    "expected an angle argument, found {other:?}"
                )))
            }
        };
        if !k.is_finite() || k.abs() > MAX_FREQUENCY {
            return Err(Error::Parse(format!("frequency {k} out of range")));
        }
        Ok((angle, k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn parses_simple_traces() {
        let e = BoundaryExpr::parse("cos(theta)", 2).unwrap();
        assert_abs_diff_eq!(e.value(&[0.6, 0.8]), 0.6, epsilon = 1e-15);
        let e = BoundaryExpr::parse("cos(2*theta) - 0.5*sin(theta*3) + 1", 2).unwrap();
        let t: f64 = 0.3;
        let want = (2.0 * t).cos() - 0.5 * (3.0 * t).sin() + 1.0;
        assert_abs_diff_eq!(e.value(&[t.cos(), t.sin()]), want, epsilon = 1e-14);
        let e = BoundaryExpr::parse("x1*x2", 3).unwrap();
        assert_abs_diff_eq!(e.value(&[0.0, 0.6, 0.8]), 0.0);
        let e = BoundaryExpr::parse("sin(theta)*cos(phi)", 3).unwrap();
        let p = [0.3, -0.4, 0.5];
        let r = 0.5f64.sqrt();
        assert_abs_diff_eq!(e.value(&p), p[0] / r, epsilon = 1e-14);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "",
            "cos(",
            "cos(psi)",
            "exp(theta)",
            "1 +",
            "cos(theta",
            "x4",
            "2**x1",
            "cos(theta)%",
        ] {
            assert!(BoundaryExpr::parse(bad, 2).is_err(), "{bad}");
        }
        assert!(BoundaryExpr::parse("cos(phi)", 2).is_err());
        assert!(BoundaryExpr::parse("x3", 2).is_err());
        assert!(BoundaryExpr::parse("x1", 4).is_err());
    }

    #[test]
    fn gradient_is_tangential_derivative() {
        // f = cos 2θ, tangential derivative on S_1 is −2 sin 2θ e_θ
        let e = BoundaryExpr::parse("cos(2*theta)", 2).unwrap();
        let t: f64 = 1.1;
        let g = e.gradient(&[t.cos(), t.sin()]);
        assert_abs_diff_eq!(g[0], 2.0 * (2.0 * t).sin() * t.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(g[1], -2.0 * (2.0 * t).sin() * t.cos(), epsilon = 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (src, dim) in [
            ("x1*x2 + 0.3*x3", 3),
            ("sin(theta)*cos(phi) + cos(theta)", 3),
            ("sin(3*theta)*x1", 2),
        ] {
            let e = BoundaryExpr::parse(src, dim).unwrap();
            let x: Vec<f64> = if dim == 2 {
                vec![0.4, -0.7]
            } else {
                vec![0.2, 0.5, -0.6]
            };
            let g = e.gradient(&x);
            for i in 0..dim {
                let h = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (e.value(&xp) - e.value(&xm)) / (2.0 * h);
                assert_abs_diff_eq!(g[i], fd, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn random_traces_render_and_reparse() {
        for dim in [2, 3] {
            let e = BoundaryExpr::random(dim, 3, 5).unwrap();
            let back = BoundaryExpr::parse(e.source(), dim).unwrap();
            let x: Vec<f64> = if dim == 2 {
                vec![(0.4 * PI).cos(), (0.4 * PI).sin()]
            } else {
                vec![0.6, 0.0, 0.8]
            };
            assert_abs_diff_eq!(e.value(&x), back.value(&x), epsilon = 1e-12);
        }
    }
}
