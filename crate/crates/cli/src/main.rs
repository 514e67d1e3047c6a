//! Command-line frontend: model ingestion, analysis pipeline orchestration,
//! and machine-readable reports.
//!
//! Exit codes: 0 success, 2 parse error, 3 invariant violation,
//! 4 requested feasibility check failed.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use metrolm::catalog::{self, Expected};
use metrolm::hoc::AxisAssignment;
use metrolm::linalg::BlochVector;
use metrolm::pipeline::{self, PipelineOptions};
use metrolm::povm::{cfi, saturation_check, Measurement};
use metrolm::report;
use metrolm::{parse_model_spec, Error, Model};

const EXIT_PARSE: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "metrolm",
    version,
    about = "Local-measurement analysis for single-parameter qubit estimation models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a model at a single parameter value
    Analyze(AnalyzeArgs),
    /// Analyze a model over a parameter grid
    Sweep(SweepArgs),
    /// List the built-in models, or run one against its expectation
    Catalog(CatalogArgs),
    /// Check user-supplied measurement axes against a model
    Verify(VerifyArgs),
    /// Emit the classically-communicating measurement tree
    Lmcc(LmccArgs),
}

#[derive(Args)]
struct ModelSource {
    /// JSON model spec file; `-` reads stdin
    #[arg(long, value_name = "FILE", conflicts_with = "catalog")]
    model: Option<PathBuf>,
    /// Built-in model name (see `metrolm catalog`)
    #[arg(long, value_name = "NAME")]
    catalog: Option<String>,
    /// Qubit count for catalog entries that take one
    #[arg(long, value_name = "N")]
    n: Option<usize>,
}

#[derive(Args)]
struct SolverArgs {
    /// Seed for the multistart numeric solver
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restart count for the numeric solver
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    /// Feasibility threshold on the worst orthogonality residual
    #[arg(long, value_name = "T")]
    tolerance: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Exit with status 4 unless a saturating local measurement is found
    #[arg(long)]
    require_feasible: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: ModelSource,
    /// Grid as start:stop:count (inclusive endpoints)
    #[arg(long, value_name = "START:STOP:COUNT")]
    lambda_grid: String,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Exit with status 4 unless every grid point is feasible
    #[arg(long)]
    require_feasible: bool,
}

#[derive(Args)]
struct CatalogArgs {
    /// Entry to run; omit to list all entries
    #[arg(long, value_name = "NAME")]
    catalog: Option<String>,
    #[arg(long, value_name = "N")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Measurement axes as `x,y,z;x,y,z;…`, one triple per qubit
    /// (near-unit vectors are normalized)
    #[arg(long, value_name = "AXES")]
    axes: String,
}

#[derive(Args)]
struct LmccArgs {
    #[command(flatten)]
    source: ModelSource,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Measurement order as a comma-separated qubit permutation
    #[arg(long, value_name = "ORDER")]
    order: Option<String>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Spec(_) | Error::UnknownCatalog(_) => EXIT_PARSE,
            _ => EXIT_INVARIANT,
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => run_analyze(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Catalog(args) => run_catalog(args),
        Command::Verify(args) => run_verify(args),
        Command::Lmcc(args) => run_lmcc(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_model(source: &ModelSource) -> Result<Model, Failure> {
    match (&source.model, &source.catalog) {
        (Some(path), None) => {
            let text = if path.as_os_str() == "-" {
                let mut buf = String::new();
                std::io::stdin()
                    .read_to_string(&mut buf)
                    .map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read stdin: {e}")))?;
                buf
            } else {
                std::fs::read_to_string(path).map_err(|e| {
                    Failure::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display()))
                })?
            };
            let parsed = parse_model_spec(&text)?;
            for w in &parsed.warnings {
                eprintln!("warning: {w}");
            }
            Ok(parsed.model)
        }
        (None, Some(name)) => {
            let entry = catalog::entry(name)?;
            let n = source
                .n
                .or(entry.fixed_qubits)
                .ok_or_else(|| Failure::new(EXIT_PARSE, format!("`{name}` needs --n")))?;
            Ok(catalog::build_model(name, n)?)
        }
        _ => Err(Failure::new(
            EXIT_PARSE,
            "provide exactly one of --model or --catalog",
        )),
    }
}

fn pipeline_options(solver: &SolverArgs) -> PipelineOptions {
    let mut opts = PipelineOptions {
        seed: solver.seed,
        restarts: solver.restarts,
        ..Default::default()
    };
    if let Some(t) = solver.tolerance {
        opts.feasibility_threshold = t;
    }
    opts
}

fn run_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let model = load_model(&args.source)?;
    let opts = pipeline_options(&args.solver);
    let rep = pipeline::analyze(&model, args.lambda, &opts)?;
    match args.format {
        Format::Json => println!("{}", report::report_to_json(&rep)),
        Format::Csv => {
            println!("{}", report::csv_header());
            println!(
                "{}",
                report::csv_row(&pipeline::SweepPoint {
                    lambda: args.lambda,
                    report: Some(rep.clone()),
                    error: None,
                })
            );
        }
    }
    if args.require_feasible && !rep.lm.feasible {
        return Err(Failure::new(
            EXIT_CHECK_FAILED,
            format!("no saturating local measurement at λ = {}", args.lambda),
        ));
    }
    Ok(())
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Failure::new(
            EXIT_PARSE,
            format!("grid `{text}` is not start:stop:count"),
        ));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|e| Failure::new(EXIT_PARSE, format!("grid start: {e}")))?;
    let stop: f64 = parts[1]
        .parse()
        .map_err(|e| Failure::new(EXIT_PARSE, format!("grid stop: {e}")))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|e| Failure::new(EXIT_PARSE, format!("grid count: {e}")))?;
    Ok(pipeline::lambda_grid(start, stop, count))
}

fn run_sweep(args: SweepArgs) -> Result<(), Failure> {
    let model = load_model(&args.source)?;
    let grid = parse_grid(&args.lambda_grid)?;
    let opts = pipeline_options(&args.solver);
    let points = pipeline::sweep(&model, &grid, &opts);
    match args.format {
        Format::Json => print!("{}", report::sweep_to_json_lines(&points)),
        Format::Csv => {
            println!("{}", report::csv_header());
            for p in &points {
                println!("{}", report::csv_row(p));
            }
        }
    }
    let mut errors = Vec::new();
    let mut infeasible = Vec::new();
    for p in &points {
        match (&p.report, &p.error) {
            (Some(r), _) if args.require_feasible && !r.lm.feasible => {
                infeasible.push(format!("λ = {}: infeasible", p.lambda));
            }
            (None, Some(e)) => errors.push(format!("λ = {}: {e}", p.lambda)),
            _ => {}
        }
    }
    if !errors.is_empty() {
        return Err(Failure::new(EXIT_INVARIANT, errors.join("; ")));
    }
    if !infeasible.is_empty() {
        return Err(Failure::new(EXIT_CHECK_FAILED, infeasible.join("; ")));
    }
    Ok(())
}

fn run_catalog(args: CatalogArgs) -> Result<(), Failure> {
    let Some(name) = &args.catalog else {
        for e in catalog::ENTRIES {
            let qubits = match e.fixed_qubits {
                Some(n) => format!("N = {n}"),
                None => "N free".to_string(),
            };
            println!("{:<18} {:<9} expected = {:?}  {}", e.name, qubits, e.expected, e.description);
        }
        return Ok(());
    };
    let entry = catalog::entry(name)?;
    let n = args
        .n
        .or(entry.fixed_qubits)
        .ok_or_else(|| Failure::new(EXIT_PARSE, format!("`{name}` needs --n")))?;
    let model = catalog::build_model(name, n)?;
    let opts = pipeline_options(&args.solver);
    let rep = pipeline::analyze(&model, args.lambda, &opts)?;
    println!("{}", report::report_to_json(&rep));

    // Compare against the entry's recorded expectation where it applies.
    let expectation = match entry.expected {
        Expected::FeasibleAllLambda => Some(true),
        Expected::FeasibleAtZero if args.lambda == 0.0 => Some(true),
        Expected::InfeasibleAtZero if args.lambda == 0.0 => Some(false),
        _ => None,
    };
    if let Some(expected) = expectation {
        if rep.lm.feasible != expected {
            return Err(Failure::new(
                EXIT_CHECK_FAILED,
                format!(
                    "`{name}` at λ = {}: expected feasible = {expected}, analysis says {}",
                    args.lambda, rep.lm.feasible
                ),
            ));
        }
    }
    Ok(())
}

fn parse_axes(text: &str) -> Result<AxisAssignment, Failure> {
    let mut axes = Vec::new();
    for (i, triple) in text.split(';').enumerate() {
        let comps: Vec<&str> = triple.split(',').collect();
        if comps.len() != 3 {
            return Err(Failure::new(
                EXIT_PARSE,
                format!("axis {i} (`{triple}`) is not x,y,z"),
            ));
        }
        let mut v = [0.0f64; 3];
        for (k, c) in comps.iter().enumerate() {
            v[k] = c
                .trim()
                .parse()
                .map_err(|e| Failure::new(EXIT_PARSE, format!("axis {i} component {k}: {e}")))?;
        }
        axes.push(BlochVector::new(v[0], v[1], v[2]));
    }
    AxisAssignment::normalized(axes).map_err(Failure::from)
}

fn run_verify(args: VerifyArgs) -> Result<(), Failure> {
    let model = load_model(&args.source)?;
    let axes = parse_axes(&args.axes)?;
    if axes.nqubits() != model.nqubits() {
        return Err(Failure::new(
            EXIT_PARSE,
            format!(
                "{} axes supplied for a {}-qubit model",
                axes.nqubits(),
                model.nqubits()
            ),
        ));
    }
    let m = model.m_matrix(args.lambda)?;
    let residual = metrolm::hoc_residual(&m, &axes)?;
    let meas = Measurement::local_axes(axes);
    let sat = saturation_check(&m, &meas)?;
    let qfi = model.qfi(args.lambda)?;
    let fisher = cfi(&model, &meas, args.lambda)?;
    println!(
        "{}",
        report::to_json_string(&serde_output::Verify {
            lambda: args.lambda,
            saturated: sat.saturated,
            saturation_residual: sat.residual,
            hoc_residual: residual,
            qfi,
            cfi: fisher,
            cfi_over_qfi: (qfi > 1e-10).then(|| fisher / qfi),
        })
    );
    if !sat.saturated {
        return Err(Failure::new(
            EXIT_CHECK_FAILED,
            format!(
                "axes do not saturate at λ = {} (residual {:.3e})",
                args.lambda, sat.residual
            ),
        ));
    }
    Ok(())
}

fn run_lmcc(args: LmccArgs) -> Result<(), Failure> {
    let model = load_model(&args.source)?;
    let n = model.nqubits();
    let order: Vec<usize> = match &args.order {
        Some(text) => text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Failure::new(EXIT_PARSE, format!("order: {e}")))
            })
            .collect::<Result<_, _>>()?,
        None => (0..n).collect(),
    };
    let m = model.m_matrix(args.lambda)?;
    let build = metrolm::lmcc_build(&m, &order)?;
    let fisher = cfi(&model, &Measurement::Lmcc(build.tree.clone()), args.lambda)?;
    let qfi = model.qfi(args.lambda)?;
    println!(
        "{}",
        report::to_json_string(&serde_output::Lmcc {
            lambda: args.lambda,
            order: build.tree.order().to_vec(),
            axes: build
                .tree
                .axes()
                .iter()
                .map(|a| [a.x, a.y, a.z])
                .collect(),
            leaf_residual: build.leaf_residual,
            qfi,
            cfi: fisher,
            cfi_over_qfi: (qfi > 1e-10).then(|| fisher / qfi),
        })
    );
    Ok(())
}

mod serde_output {
    use serde::Serialize;

    #[derive(Serialize)]
    pub struct Verify {
        pub lambda: f64,
        pub saturated: bool,
        pub saturation_residual: f64,
        pub hoc_residual: f64,
        pub qfi: f64,
        pub cfi: f64,
        pub cfi_over_qfi: Option<f64>,
    }

    #[derive(Serialize)]
    pub struct Lmcc {
        pub lambda: f64,
        pub order: Vec<usize>,
        pub axes: Vec<[f64; 3]>,
        pub leaf_residual: f64,
        pub qfi: f64,
        pub cfi: f64,
        pub cfi_over_qfi: Option<f64>,
    }
}
