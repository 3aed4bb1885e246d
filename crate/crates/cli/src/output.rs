use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::cases::CaseResult;

pub const SCHEMA: &str = "1";
pub const OUT_ENV: &str = "ELAB_OUT";

/// `ELAB_OUT` when set and non-empty, else the flag.
pub fn resolve_out(flag: Option<PathBuf>) -> Option<PathBuf> {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
        _ => flag,
    }
}

/// Seconds since the Unix epoch; the only nondeterministic field of a document.
pub fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// File-name-safe form of a case name.
pub fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    let s = s.trim_start_matches('.');
    if s.is_empty() {
        "case".to_string()
    } else {
        s.to_string()
    }
}

/// Writes `<dir>/<case>.<plot>.dat` for every plot and records the file names.
pub fn write_plots(dir: &Path, case: &mut CaseResult) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let stem = sanitize(&case.name);
    case.plot_files.clear();
    for plot in &case.plots {
        let file = format!("{stem}.{}.dat", plot.name);
        fs::write(dir.join(&file), plot.render())?;
        case.plot_files.push(file);
    }
    Ok(())
}

/// JSON document for a single command.
#[derive(Debug, Serialize)]
pub struct CaseDocument<'a> {
    pub schema: &'static str,
    pub timestamp: u64,
    #[serde(flatten)]
    pub case: &'a CaseResult,
}

impl<'a> CaseDocument<'a> {
    pub fn new(case: &'a CaseResult) -> Self {
        Self {
            schema: SCHEMA,
            timestamp: timestamp(),
            case,
        }
    }
}

/// JSON summary of a manifest run, cases in manifest order.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub timestamp: u64,
    pub manifest: String,
    pub pass: bool,
    pub passed: usize,
    pub failed: usize,
    pub cases: Vec<CaseResult>,
}

impl Summary {
    pub fn new(manifest: &str, cases: Vec<CaseResult>) -> Self {
        let passed = cases.iter().filter(|c| c.pass).count();
        Self {
            schema: SCHEMA,
            timestamp: timestamp(),
            manifest: manifest.to_string(),
            pass: passed == cases.len(),
            passed,
            failed: cases.len() - passed,
            cases,
        }
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("documents serialize") + "\n"
}
