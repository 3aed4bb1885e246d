use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elab_cli::cases::exponent_rows;
use elab_cli::output::{resolve_out, sanitize, to_json, write_plots};
use elab_cli::{execute, load_manifest, report, CaseDocument, CaseResult, Command, RunConfig};
use elab_core::exponent::sweep_csv;
use elab_core::Error;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "elab",
    version,
    about = "Numerical checks for energy methods in divergence-form elliptic equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Hölder exponent and surface-to-bulk constant, single tuple or sweep.
    Exponent {
        #[command(flatten)]
        args: CaseArgs,
        /// `n=2..8,ratio=0.1..1.0x10`
        #[arg(long)]
        sweep: Option<String>,
        /// Defaults to csv for sweeps and json otherwise.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Brute-force maximiser of the (ε, T) objective.
    Optimize(CaseArgs),
    /// Terms and residual of the Pohozaev-type identity.
    Pohozaev(CaseArgs),
    /// Surface-to-bulk ratio on a radius ladder.
    Monotonicity(CaseArgs),
    /// Tangential/normal balance for harmonic functions.
    HarmonicBalance(CaseArgs),
    /// Spherical Poincaré inequality on traces.
    Poincare(CaseArgs),
    /// Naive chain constant against n − 2.
    NaiveConstant(CaseArgs),
    /// Observed order of the Dirichlet solver over three grids.
    Convergence(CaseArgs),
    /// Hölder exponent from the oscillation on shrinking balls.
    Oscillation(CaseArgs),
    /// Run one case from a JSON configuration file.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a manifest (a JSON file, or `paper-suite`) and write a summary.
    Report {
        #[arg(long)]
        manifest: String,
        /// Defaults to `elab-out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Default)]
struct CaseArgs {
    /// Field spec, e.g. `identity`, `const:diag(1,4)`, `ps2d:1,4`, or JSON.
    #[arg(long)]
    field: Option<String>,
    /// Closed-form solution, e.g. `harmonic:n=3,k=2,i=0`, `ps2d`.
    #[arg(long)]
    solution: Option<String>,
    /// Boundary data solved on the polar grid, e.g. `cos(theta)`.
    #[arg(long)]
    boundary: Option<String>,
    #[arg(short = 'n', long = "dim")]
    n: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long = "Lambda")]
    big_lambda: Option<f64>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    ntheta: Option<usize>,
    #[arg(long)]
    nphi: Option<usize>,
    /// `a..bxm` (geometric) or a comma list of radii.
    #[arg(long)]
    ladder: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    expect: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CaseArgs {
    fn into_config(self, command: Command) -> RunConfig {
        let mut cfg = RunConfig::new(command);
        cfg.field = self.field.map(elab_cli::FieldSpec::Text);
        cfg.solution = self.solution;
        cfg.boundary = self.boundary;
        cfg.n = self.n;
        cfg.lambda = self.lambda;
        cfg.big_lambda = self.big_lambda;
        cfg.nr = self.nr;
        cfg.ntheta = self.ntheta;
        cfg.nphi = self.nphi;
        cfg.ladder = self.ladder;
        cfg.tol = self.tol;
        cfg.resolution = self.resolution;
        cfg.expect = self.expect;
        cfg.out = self.out;
        cfg.seed = self.seed;
        cfg
    }
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::SolverFailure { .. } | Error::Degenerate(_) => EXIT_FAIL,
        _ => EXIT_USAGE,
    }
}

fn run_single(cfg: RunConfig, format: Option<Format>) -> anyhow::Result<u8> {
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit_for(&e));
        }
    };
    let mut case = CaseResult {
        name: cfg.name.clone(),
        command: cfg.command,
        pass: outcome.pass,
        error: None,
        result: outcome.result,
        plot_files: Vec::new(),
        plots: outcome.plots,
    };
    let doc_json = |case: &CaseResult| to_json(&CaseDocument::new(case));
    if let Some(dir) = resolve_out(cfg.out.clone()) {
        fs::create_dir_all(&dir)?;
        write_plots(&dir, &mut case)?;
        fs::write(
            dir.join(format!("{}.json", sanitize(&case.name))),
            doc_json(&case),
        )?;
    }
    let csv = match format {
        Some(Format::Csv) => true,
        Some(Format::Json) => false,
        None => cfg.sweep.is_some(),
    };
    if csv {
        print!("{}", sweep_csv(&exponent_rows(&cfg)?));
    } else {
        print!("{}", doc_json(&case));
    }
    Ok(if case.pass { 0 } else { EXIT_FAIL })
}

fn run_report(manifest: &str, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let manifest = match load_manifest(manifest) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_USAGE);
        }
    };
    let dir = resolve_out(out).unwrap_or_else(|| PathBuf::from("elab-out"));
    fs::create_dir_all(&dir)?;
    let summary = report(&manifest, Some(&dir))?;
    let path = dir.join("summary.json");
    fs::write(&path, to_json(&summary))?;
    for case in &summary.cases {
        let status = if case.pass { "PASS" } else { "FAIL" };
        match &case.error {
            Some(e) => println!("{status} {} ({e})", case.name),
            None => println!("{status} {}", case.name),
        }
    }
    println!(
        "{}/{} cases passed; summary in {}",
        summary.passed,
        summary.cases.len(),
        path.display()
    );
    Ok(if summary.pass { 0 } else { EXIT_FAIL })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Exponent {
            args,
            sweep,
            format,
        } => {
            let mut cfg = args.into_config(Command::Exponent);
            cfg.sweep = sweep;
            run_single(cfg, format)
        }
        Cmd::Optimize(a) => run_single(a.into_config(Command::Optimize), None),
        Cmd::Pohozaev(a) => run_single(a.into_config(Command::Pohozaev), None),
        Cmd::Monotonicity(a) => run_single(a.into_config(Command::Monotonicity), None),
        Cmd::HarmonicBalance(a) => run_single(a.into_config(Command::HarmonicBalance), None),
        Cmd::Poincare(a) => run_single(a.into_config(Command::Poincare), None),
        Cmd::NaiveConstant(a) => run_single(a.into_config(Command::NaiveConstant), None),
        Cmd::Convergence(a) => run_single(a.into_config(Command::Convergence), None),
        Cmd::Oscillation(a) => run_single(a.into_config(Command::Oscillation), None),
        Cmd::Run { config, out } => match fs::read_to_string(&config)
            .map_err(anyhow::Error::from)
            .and_then(|t| Ok(serde_json::from_str::<RunConfig>(&t)?))
        {
            Ok(mut cfg) => {
                if out.is_some() {
                    cfg.out = out;
                }
                run_single(cfg, Some(Format::Json))
            }
            Err(e) => {
                eprintln!("error: {e}");
                Ok(EXIT_USAGE)
            }
        },
        Cmd::Report { manifest, out } => run_report(&manifest, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}
