//! Manifests of cases and the bundled `paper-suite`.

use std::collections::HashSet;
use std::path::Path;

use elab_core::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cases::{run_case, CaseResult};
use crate::config::{Command, RunConfig};
use crate::output::{sanitize, write_plots, Summary};

pub const BUILTIN_SUITE: &str = "paper-suite";
pub const MAX_CASES: usize = 10_000;
pub const MAX_MANIFEST_BYTES: usize = 16 << 20;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub cases: Vec<RunConfig>,
}

impl Manifest {
    /// Gives unnamed cases an index-based name and rejects names that
    /// would write to the same plot files.
    fn normalize(mut self) -> Result<Self> {
        if self.cases.len() > MAX_CASES {
            return Err(Error::Input(format!("more than {MAX_CASES} cases")));
        }
        let mut seen = HashSet::new();
        for (i, case) in self.cases.iter_mut().enumerate() {
            if case.name.is_empty() {
                case.name = format!("{i:03}-{}", case.command.name());
            }
            if !seen.insert(sanitize(&case.name)) {
                return Err(Error::Input(format!("duplicate case name '{}'", case.name)));
            }
        }
        Ok(self)
    }
}

/// Accepts `{"name":..,"cases":[..]}` or a bare array of cases.
pub fn parse_manifest(text: &str) -> Result<Manifest> {
    if text.len() > MAX_MANIFEST_BYTES {
        return Err(Error::Input("manifest too large".into()));
    }
    let manifest = if text.trim_start().starts_with('[') {
        Manifest {
            name: String::new(),
            cases: serde_json::from_str(text)
                .map_err(|e| Error::Parse(format!("manifest: {e}")))?,
        }
    } else {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("manifest: {e}")))?
    };
    manifest.normalize()
}

/// The bundled suite by name, otherwise a manifest file.
pub fn load_manifest(arg: &str) -> Result<Manifest> {
    if arg == BUILTIN_SUITE {
        return Ok(paper_suite());
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| Error::Input(format!("cannot read manifest '{arg}': {e}")))?;
    let mut m = parse_manifest(&text)?;
    if m.name.is_empty() {
        m.name = arg.to_string();
    }
    Ok(m)
}

/// Runs every case on the worker pool; results keep manifest order.
pub fn run_manifest(manifest: &Manifest) -> Vec<CaseResult> {
    manifest.cases.par_iter().map(run_case).collect()
}

/// Runs a manifest and, given a directory, writes the plot files of each case.
pub fn report(manifest: &Manifest, out: Option<&Path>) -> std::io::Result<Summary> {
    let mut cases = run_manifest(manifest);
    if let Some(dir) = out {
        for case in &mut cases {
            write_plots(dir, case)?;
        }
    }
    Ok(Summary::new(&manifest.name, cases))
}

fn case(name: String, command: Command) -> RunConfig {
    RunConfig::new(command).named(name)
}

/// Every check the library makes, at its documented tolerance.
pub fn paper_suite() -> Manifest {
    use Command::*;
    let mut cases = Vec::new();

    cases.push(
        case("exponent-planar-1-4".into(), Exponent)
            .bounds(1.0, 4.0)
            .expect(0.5),
    );
    cases.push(
        case("exponent-isotropic-3".into(), Exponent)
            .dim(3)
            .bounds(1.0, 1.0)
            .expect(1.0),
    );
    for (name, spec) in [
        ("exponent-planar-sweep", "n=2,ratio=0.01..1x100"),
        ("exponent-isotropic-sweep", "n=2..10,ratio=1"),
        ("exponent-table", "n=2..8,ratio=0.1..1.0x10"),
    ] {
        let mut c = case(name.into(), Exponent);
        c.sweep = Some(spec.into());
        cases.push(c);
    }

    for (n, l, b) in [
        (2, 1.0, 4.0),
        (3, 1.0, 2.0),
        (5, 0.5, 3.0),
        (8, 1.0, 10.0),
        (12, 0.2, 1.0),
    ] {
        cases.push(
            case(format!("optimize-{n}-{l}-{b}"), Optimize)
                .dim(n)
                .bounds(l, b),
        );
    }

    let harmonic: Vec<(usize, usize, usize)> = (1..=3)
        .flat_map(|k| (0..2).map(move |i| (2, k, i)))
        .chain((1..=3).flat_map(|k| (0..2 * k + 1).map(move |i| (3, k, i))))
        .collect();
    for &(n, k, i) in &harmonic {
        let sol = format!("harmonic:n={n},k={k},i={i}");
        cases.push(
            case(format!("pohozaev-h{n}{k}{i}"), Pohozaev)
                .field("identity")
                .solution(&sol),
        );
        cases.push(
            case(format!("balance-h{n}{k}{i}"), HarmonicBalance)
                .field("identity")
                .solution(&sol),
        );
    }
    cases.push(
        case("pohozaev-ps".into(), Pohozaev)
            .field("ps2d:1,4")
            .solution("ps2d"),
    );
    cases.push(
        case("pohozaev-const-affine".into(), Pohozaev)
            .field("const:diag(1,4)")
            .solution("affine:1,1"),
    );
    cases.push(
        case("pohozaev-iso-x1".into(), Pohozaev)
            .field("iso_x1:n=2,eps=0.3")
            .solution("affine:0,1"),
    );
    cases.push(
        case("pohozaev-cross-diag".into(), Pohozaev)
            .field("cross_diag:eps=0.5")
            .solution("xy"),
    );
    cases.push(
        case("pohozaev-const-grid".into(), Pohozaev)
            .field("const:diag(1,4)")
            .boundary("cos(theta)")
            .grid(128, 256, None),
    );

    cases.push(
        case("monotonicity-ps".into(), Monotonicity)
            .field("ps2d:1,4")
            .solution("ps2d")
            .expect(1.0),
    );
    cases.push(
        case("oscillation-ps".into(), Oscillation)
            .field("ps2d:1,4")
            .solution("ps2d")
            .expect(0.5),
    );
    // homogeneous of degree k: rho = n + 2(k - 1)
    for (sol, ratio) in [
        ("harmonic:n=2,k=1,i=0", 2.0),
        ("harmonic:n=3,k=1,i=0", 3.0),
        ("harmonic:n=2,k=2,i=0", 4.0),
        ("harmonic:n=3,k=2,i=0", 5.0),
        ("harmonic:n=3,k=3,i=0", 7.0),
    ] {
        let tag: String = sol.chars().filter(char::is_ascii_digit).collect();
        cases.push(
            case(format!("monotonicity-identity-{tag}"), Monotonicity)
                .field("identity")
                .solution(sol)
                .expect(ratio),
        );
    }
    for seed in 1..=10 {
        cases.push(
            case(format!("monotonicity-random-{seed}"), Monotonicity)
                .field("const:random")
                .boundary("random:degree=3")
                .grid(128, 256, None)
                .ladder("1")
                .seed(seed),
        );
    }
    cases.push(
        case("monotonicity-random-affine".into(), Monotonicity)
            .field("const:random")
            .boundary("x1")
            .grid(128, 256, None)
            .ladder("1")
            .tol(5e-4)
            .expect(2.0)
            .seed(7),
    );

    cases.push(
        case("convergence-r2cos2t".into(), Convergence)
            .field("identity")
            .solution("harmonic:n=2,k=2,i=0"),
    );
    cases.push(
        case("convergence-anisotropic".into(), Convergence)
            .field("const:diag(1,4)")
            .boundary("cos(2*theta)"),
    );

    cases.push(
        case("poincare-x1-2d".into(), Poincare)
            .solution("affine:1,0")
            .expect(0.0),
    );
    cases.push(
        case("poincare-x1-3d".into(), Poincare)
            .solution("affine:1,0,0")
            .expect(0.0),
    );
    for seed in 0..20u64 {
        let n = 2 + (seed % 2) as usize;
        cases.push(
            case(format!("poincare-random-{seed}"), Poincare)
                .dim(n)
                .boundary("random:degree=4")
                .seed(seed),
        );
    }

    for n in 2..=12 {
        cases.push(case(format!("naive-constant-{n}"), NaiveConstant).dim(n));
    }

    Manifest {
        name: BUILTIN_SUITE.into(),
        cases,
    }
    .normalize()
    .expect("suite names are unique")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifests_parse() {
        assert!(parse_manifest("[]").unwrap().cases.is_empty());
        assert!(parse_manifest("{}").unwrap().cases.is_empty());
        let m = parse_manifest(r#"[{"command":"exponent","lambda":1,"Lambda":4},{"command":"exponent","lambda":1,"Lambda":1}]"#).unwrap();
        assert_eq!(m.cases[0].name, "000-exponent");
        assert_eq!(m.cases[1].name, "001-exponent");
        assert!(parse_manifest(
            r#"[{"name":"a","command":"exponent"},{"name":"a","command":"exponent"}]"#
        )
        .is_err());
        assert!(parse_manifest(r#"{"cases":[],"extra":1}"#).is_err());
        assert!(parse_manifest("not json").is_err());
    }

    #[test]
    fn suite_round_trips_through_json() {
        let suite = paper_suite();
        let text = serde_json::to_string(&suite).unwrap();
        assert_eq!(parse_manifest(&text).unwrap(), suite);
    }
}
