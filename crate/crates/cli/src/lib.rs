//! Command-line front end: run configurations, the case runner, manifests
//! and report output.

pub mod cases;
pub mod config;
pub mod output;
pub mod suite;

pub use cases::{execute, run_case, CaseResult, Outcome, Plot};
pub use config::{Command, FieldSpec, RunConfig};
pub use output::{CaseDocument, Summary, SCHEMA};
pub use suite::{load_manifest, paper_suite, parse_manifest, report, Manifest};
