//! Command-line front end: parse a problem file, build its moment
//! relaxation, and inspect, export, or solve the resulting SDP.
//!
//! Exit codes are a stable contract: 0 success, 1 solver finished without
//! reaching optimality, 2 usage or I/O failure, 3 problem-file parse error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use momentforge::pipeline::{ambient_group, build_problem, invariant_subgroup, SymmetryMode};
use momentforge::relaxation::{build_relaxation, RelaxOptions};
use momentforge::symmetry::PermGroup;
use momentforge::{
    parse_problem, solve, write_sdpa_sparse, write_structured, Polynomial, ProblemDefinition,
    SolverOptions, SolverStatus,
};

#[derive(Parser)]
#[command(
    name = "momentforge",
    version,
    about = "Symmetry-adapted moment relaxations for operator polynomial optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print group orders and per-level basis and variable counts
    Info(CommonArgs),
    /// Build the relaxation and print its dimensions
    Build(CommonArgs),
    /// Build the relaxation and write SDP files
    Export(ExportArgs),
    /// Build the relaxation and solve it with the built-in solver
    Solve(SolveArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SymArg {
    /// Trivial group: adjoint identification only
    None,
    /// Average over the invariant subgroup of the declared generators
    Full,
    /// Full symmetry, then block-diagonalize under the split generator
    Split,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    /// SDPA sparse format (.dat-s)
    Sdpa,
    /// Structured moment listing (.relax)
    Relax,
    /// Both formats
    Both,
}

#[derive(Args)]
struct CommonArgs {
    /// Problem file (.ncpop)
    file: PathBuf,
    /// Relaxation level; defaults to the file's `level` line
    #[arg(long, value_name = "N")]
    level: Option<usize>,
    /// How much declared symmetry to exploit
    #[arg(long, value_enum, default_value = "full")]
    sym: SymArg,
    /// Override the ambient group order cap
    #[arg(long, value_name = "N")]
    cap_group: Option<usize>,
    /// Override the generating-basis size cap
    #[arg(long, value_name = "N")]
    cap_basis: Option<usize>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which file formats to write
    #[arg(long, value_enum, default_value = "sdpa")]
    format: FormatArg,
    /// Output path stem; extensions .dat-s/.relax are appended (default:
    /// the input path with its extension removed)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Convergence tolerance for gap and residuals
    #[arg(long, value_name = "X", default_value_t = 1e-9)]
    tol: f64,
}

/// Failures mapped to exit codes; messages go to stderr.
enum CliError {
    /// Exit 2: file system, caps, group enumeration, assembly.
    Run(String),
    /// Exit 3: the problem file did not parse or compile.
    Parse(String),
    /// Exit 1: the solver stopped without an optimality certificate.
    NonOptimal(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    momentforge::pipeline::configure_threads();
    let result = match cli.command {
        Command::Info(args) => cmd_info(&args),
        Command::Build(args) => cmd_build(&args),
        Command::Export(args) => cmd_export(&args),
        Command::Solve(args) => cmd_solve(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::NonOptimal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Parse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

/// Reads and compiles the problem file, applying command-line cap overrides.
fn load_problem(args: &CommonArgs) -> Result<ProblemDefinition, CliError> {
    let text = fs::read_to_string(&args.file)
        .map_err(|e| CliError::Run(format!("cannot read {}: {e}", args.file.display())))?;
    let mut pd = parse_problem(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.file.display())))?;
    if let Some(cap) = args.cap_group {
        pd.options.group_cap = cap.max(1);
    }
    if let Some(cap) = args.cap_basis {
        pd.options.basis_cap = cap.max(1);
    }
    Ok(pd)
}

fn mode_of(args: &CommonArgs) -> SymmetryMode {
    match args.sym {
        SymArg::None => SymmetryMode::None,
        SymArg::Full => SymmetryMode::Full,
        SymArg::Split => SymmetryMode::Split,
    }
}

fn sym_name(mode: SymmetryMode) -> &'static str {
    match mode {
        SymmetryMode::None => "none",
        SymmetryMode::Full => "full",
        SymmetryMode::Split => "split",
    }
}

fn status_name(status: SolverStatus) -> &'static str {
    match status {
        SolverStatus::Optimal => "optimal",
        SolverStatus::MaxIterations => "max-iterations",
        SolverStatus::InfeasibleSuspected => "infeasible-suspected",
    }
}

fn cmd_info(args: &CommonArgs) -> Result<(), CliError> {
    let pd = load_problem(args)?;
    let level = args.level.unwrap_or(pd.level).max(1);
    let started = Instant::now();
    let ambient = ambient_group(&pd).map_err(|e| CliError::Run(e.to_string()))?;
    let subgroup = invariant_subgroup(&pd, &ambient).map_err(|e| CliError::Run(e.to_string()))?;
    eprintln!("# groups enumerated in {:.3?}", started.elapsed());
    println!("alphabet size: {}", pd.alphabet.size());
    println!("rule count: {}", pd.rewrite.rule_count());
    println!("ambient group order: {}", ambient.order());
    println!("symmetry subgroup order: {}", subgroup.order());
    let trivial = PermGroup::trivial(pd.alphabet.size());
    let opts = RelaxOptions { closure_cap: pd.options.closure_cap, basis_cap: pd.options.basis_cap };
    // Counting moments does not depend on the objective, and a constant
    // objective never exceeds the degree bound at any level.
    let counter = Polynomial::one();
    for d in 1..=level {
        let t = Instant::now();
        let plain = build_relaxation(&pd.rewrite, &trivial, &pd.evaluation, &counter, d, &opts)
            .map_err(|e| CliError::Run(format!("level {d}: {e}")))?;
        let averaged = build_relaxation(&pd.rewrite, &subgroup, &pd.evaluation, &counter, d, &opts)
            .map_err(|e| CliError::Run(format!("level {d}: {e}")))?;
        eprintln!("# level {d} counted in {:.3?}", t.elapsed());
        println!(
            "level {d}: basis {}, variables {} unsymmetrized / {} symmetrized",
            plain.basis.size(),
            plain.num_variables(),
            averaged.num_variables()
        );
    }
    Ok(())
}

fn cmd_build(args: &CommonArgs) -> Result<(), CliError> {
    let pd = load_problem(args)?;
    let level = args.level.unwrap_or(pd.level).max(1);
    let mode = mode_of(args);
    let started = Instant::now();
    let built = build_problem(&pd, mode, level).map_err(|e| CliError::Run(e.to_string()))?;
    eprintln!("# built in {:.3?}", started.elapsed());
    println!("level: {level}");
    println!("symmetry: {}", sym_name(mode));
    println!("ambient group order: {}", built.ambient_order);
    println!("group order used: {}", built.symmetry_order);
    println!("basis size: {}", built.relaxation.basis.size());
    println!("variables: {}", built.relaxation.num_variables());
    println!("blocks: {:?}", built.sdp.block_dims);
    println!("constant offset: {}", built.relaxation.constant_offset());
    Ok(())
}

fn export_paths(args: &ExportArgs) -> (Option<PathBuf>, Option<PathBuf>) {
    let base: PathBuf = args.out.clone().unwrap_or_else(|| args.common.file.with_extension(""));
    let sdpa = matches!(args.format, FormatArg::Sdpa | FormatArg::Both)
        .then(|| base.with_extension("dat-s"));
    let relax = matches!(args.format, FormatArg::Relax | FormatArg::Both)
        .then(|| base.with_extension("relax"));
    (sdpa, relax)
}

fn write_file(path: &Path, write: impl FnOnce(&mut dyn std::io::Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let mut file = fs::File::create(path)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    write(&mut file).map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> Result<(), CliError> {
    let pd = load_problem(&args.common)?;
    let level = args.common.level.unwrap_or(pd.level).max(1);
    let mode = mode_of(&args.common);
    let started = Instant::now();
    let built = build_problem(&pd, mode, level).map_err(|e| CliError::Run(e.to_string()))?;
    eprintln!("# built in {:.3?}", started.elapsed());
    println!("variables: {}", built.relaxation.num_variables());
    println!("blocks: {:?}", built.sdp.block_dims);
    let (sdpa, relax) = export_paths(args);
    if let Some(path) = sdpa {
        write_file(&path, |sink| write_sdpa_sparse(&built.sdp, sink))?;
        println!("wrote: {}", path.display());
    }
    if let Some(path) = relax {
        write_file(&path, |sink| write_structured(&built.sdp, &built.relaxation, sink))?;
        println!("wrote: {}", path.display());
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<(), CliError> {
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(CliError::Run("--tol must be a positive finite number".into()));
    }
    let pd = load_problem(&args.common)?;
    let level = args.common.level.unwrap_or(pd.level).max(1);
    let mode = mode_of(&args.common);
    let started = Instant::now();
    let built = build_problem(&pd, mode, level).map_err(|e| CliError::Run(e.to_string()))?;
    eprintln!("# built in {:.3?}", started.elapsed());
    let solve_started = Instant::now();
    let opts = SolverOptions { tolerance: args.tol, ..SolverOptions::default() };
    let solution = solve(&built.sdp, &opts);
    eprintln!("# solved in {:.3?}", solve_started.elapsed());
    println!("objective value: {}", solution.objective_value);
    println!("duality gap: {:e}", solution.duality_gap);
    println!("iterations: {}", solution.iterations);
    println!("status: {}", status_name(solution.status));
    if solution.status != SolverStatus::Optimal {
        return Err(CliError::NonOptimal(format!(
            "solver finished with status {}",
            status_name(solution.status)
        )));
    }
    Ok(())
}
