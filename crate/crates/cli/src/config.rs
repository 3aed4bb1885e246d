use std::path::PathBuf;

use elab_core::coefficient::{CoefficientField, FieldDescriptor};
use elab_core::descriptor::{field_dim, parse_field, solution_dim};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Command {
    Exponent,
    Optimize,
    Pohozaev,
    Monotonicity,
    HarmonicBalance,
    Poincare,
    NaiveConstant,
    Convergence,
    Oscillation,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Exponent => "exponent",
            Command::Optimize => "optimize",
            Command::Pohozaev => "pohozaev",
            Command::Monotonicity => "monotonicity",
            Command::HarmonicBalance => "harmonic_balance",
            Command::Poincare => "poincare",
            Command::NaiveConstant => "naive_constant",
            Command::Convergence => "convergence",
            Command::Oscillation => "oscillation",
        }
    }
}

/// A field given either as a spec string or as a JSON descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Text(String),
    Descriptor(FieldDescriptor),
}

impl FieldSpec {
    fn dim(&self) -> Option<usize> {
        match self {
            FieldSpec::Text(s) => field_dim(s),
            FieldSpec::Descriptor(d) => field_dim(&serde_json::to_string(d).ok()?),
        }
    }
}

/// Everything needed to reproduce one run. Absent options take the
/// command's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, rename = "Lambda", skip_serializing_if = "Option::is_none")]
    pub big_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nr: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ntheta: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nphi: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    /// Expected headline value; its meaning depends on the command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            name: command.name().to_string(),
            command,
            field: None,
            solution: None,
            boundary: None,
            n: None,
            lambda: None,
            big_lambda: None,
            sweep: None,
            nr: None,
            ntheta: None,
            nphi: None,
            ladder: None,
            tol: None,
            resolution: None,
            expect: None,
            out: None,
            seed: 0,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn field(mut self, spec: &str) -> Self {
        self.field = Some(FieldSpec::Text(spec.to_string()));
        self
    }

    pub fn solution(mut self, spec: &str) -> Self {
        self.solution = Some(spec.to_string());
        self
    }

    pub fn boundary(mut self, spec: &str) -> Self {
        self.boundary = Some(spec.to_string());
        self
    }

    pub fn dim(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn bounds(mut self, lambda: f64, big_lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self.big_lambda = Some(big_lambda);
        self
    }

    pub fn grid(mut self, nr: usize, ntheta: usize, nphi: Option<usize>) -> Self {
        self.nr = Some(nr);
        self.ntheta = Some(ntheta);
        self.nphi = nphi;
        self
    }

    pub fn ladder(mut self, spec: &str) -> Self {
        self.ladder = Some(spec.to_string());
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn expect(mut self, value: f64) -> Self {
        self.expect = Some(value);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Explicit `n`, else the dimension fixed by the field, then the solution; 2 otherwise.
    pub fn resolved_dim(&self) -> usize {
        self.n
            .or_else(|| self.field.as_ref().and_then(FieldSpec::dim))
            .or_else(|| self.solution.as_deref().and_then(solution_dim))
            .unwrap_or(2)
    }

    /// The coefficient field; the identity when none is given.
    pub fn build_field(&self) -> elab_core::Result<CoefficientField> {
        let n = self.resolved_dim();
        match &self.field {
            None => CoefficientField::identity(n),
            Some(FieldSpec::Text(s)) => parse_field(s, n, self.seed),
            Some(FieldSpec::Descriptor(d)) => CoefficientField::from_descriptor(d),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig::new(Command::Monotonicity)
            .field("ps2d:1,4")
            .solution("ps2d")
            .ladder("0.1..1x12")
            .seed(3);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"command\":\"monotonicity\""));
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn descriptor_fields_are_accepted() {
        let text = r#"{"command":"pohozaev","field":{"kind":"constant","matrix":[[1,0],[0,4]]},"solution":"affine:1,1"}"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.resolved_dim(), 2);
        assert_eq!(cfg.build_field().unwrap().big_lambda(), 4.0);
    }

    #[test]
    fn dimension_resolution() {
        let cfg = RunConfig::new(Command::Pohozaev)
            .field("identity")
            .solution("harmonic:n=3,k=2,i=0");
        assert_eq!(cfg.resolved_dim(), 3);
        assert_eq!(cfg.build_field().unwrap().dim(), 3);
        assert_eq!(RunConfig::new(Command::Pohozaev).resolved_dim(), 2);
        assert!(serde_json::from_str::<RunConfig>(r#"{"command":"pohozaev","bogus":1}"#).is_err());
    }
}
