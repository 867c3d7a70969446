//! Batch front-end: generate lattices and couplings, run the exact
//! solvers, verify module patterns, and emit bound reports.
//!
//! Every run is fully determined by its flags: one master seed feeds all
//! randomness, output files are written in one shot after compute, and
//! JSON key order is fixed, so identical invocations produce identical
//! bytes.  Exit codes: 0 success, 2 input error, 3 resource cap exceeded,
//! 4 internal self-check failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use frustration_lab::bounds;
use frustration_lab::ground_state::{
    branch_and_bound_enumerate, enumerate_exhaustive, transfer_matrix_count, GroundStateResult,
    MAX_STRIP_WIDTH,
};
use frustration_lab::ising::CouplingConfig;
use frustration_lab::lattice::{BoundaryCondition, DilutionParams, Lattice, LatticeKind};
use frustration_lab::modules::{self, ModuleSpec};
use frustration_lab::seeds;
use frustration_lab::Error;

#[derive(Parser)]
#[command(name = "frustration-lab", version, about = "Ising ground-state degeneracy bounds from frustration modules")]
struct Cli {
    /// Worker threads (env FRUSTRATION_LAB_THREADS as fallback; output is
    /// independent of this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a lattice and write it to a JSON file.
    Lattice(LatticeArgs),
    /// Compute the exact ground-state energy and degeneracy.
    Solve(SolveArgs),
    /// Check the module property by exhaustive enumeration on a minimal host.
    VerifyModule(VerifyArgs),
    /// Monte Carlo estimate of the module-pattern match probability.
    Density(DensityArgs),
    /// Degeneracy and entropy-density lower-bound report.
    Bound(BoundArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Square,
    Triangular,
    Hexagonal,
}

impl From<KindArg> for LatticeKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Square => LatticeKind::Square,
            KindArg::Triangular => LatticeKind::Triangular,
            KindArg::Hexagonal => LatticeKind::Hexagonal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Free,
    Cylindrical,
    Toroidal,
}

impl From<BoundaryArg> for BoundaryCondition {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Free => BoundaryCondition::Free,
            BoundaryArg::Cylindrical => BoundaryCondition::Cylindrical,
            BoundaryArg::Toroidal => BoundaryCondition::Toroidal,
        }
    }
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    rows: u32,
    #[arg(long)]
    cols: u32,
    #[arg(long, value_enum, default_value = "free")]
    boundary: BoundaryArg,
    /// Site and bond retention probabilities p_s p_b.
    #[arg(long, num_args = 2, value_names = ["PS", "PB"])]
    dilute: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Auto,
    Exhaustive,
    Transfer,
    Branch,
}

#[derive(Args)]
struct SolveArgs {
    /// Lattice file produced by the `lattice` subcommand.
    #[arg(long)]
    lattice: PathBuf,
    /// Coupling file; mutually exclusive with --p.
    #[arg(long, conflicts_with = "p")]
    couplings: Option<PathBuf>,
    /// Generate random couplings: probability a bond is negative.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "auto")]
    backend: BackendArg,
    /// Run every applicable backend and fail on disagreement.
    #[arg(long)]
    self_check: bool,
    /// Include wall-clock timing in the output file (breaks byte-for-byte
    /// reproducibility).
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Built-in spec name (square, triangular, hexagonal).
    #[arg(long, conflicts_with = "spec_file")]
    spec: Option<String>,
    /// Module spec JSON file.
    #[arg(long)]
    spec_file: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra host sites attached around the block.
    #[arg(long)]
    collar: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long, conflicts_with = "spec_file")]
    spec: Option<String>,
    #[arg(long)]
    spec_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, conflicts_with = "spec_file")]
    spec: Option<String>,
    #[arg(long)]
    spec_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    ps: f64,
    #[arg(long, default_value_t = 1.0)]
    pb: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Host lattice size |Λ|; defaults to 10000 blocks.
    #[arg(long)]
    size: Option<u64>,
    /// Monte Carlo samples for p ≠ 1/2.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also append a CSV row (with header if the file is new).
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads.or_else(|| {
        std::env::var("FRUSTRATION_LAB_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    }) {
        // Thread count never changes results, only wall time.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                CliError::Input(_) => 2u8,
                CliError::Cap(_) => 3,
                CliError::SelfCheck(_) => 4,
            })
        }
    }
}

enum CliError {
    Input(String),
    Cap(String),
    SelfCheck(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Cap(m) | CliError::SelfCheck(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(m) => CliError::Input(m),
            Error::ResourceCap(m) => CliError::Cap(m),
            Error::SelfCheck(m) => CliError::SelfCheck(m),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Lattice(args) => cmd_lattice(args),
        Command::Solve(args) => cmd_solve(args),
        Command::VerifyModule(args) => cmd_verify_module(args),
        Command::Density(args) => cmd_density(args),
        Command::Bound(args) => cmd_bound(args),
    }
}

fn cmd_lattice(args: LatticeArgs) -> CliResult<()> {
    let mut lattice = Lattice::build(
        args.kind.into(),
        args.rows,
        args.cols,
        args.boundary.into(),
    )?;
    if let Some(probs) = &args.dilute {
        lattice = lattice.dilute(&DilutionParams {
            p_s: probs[0],
            p_b: probs[1],
            seed: args.seed,
        })?;
    }
    let json = lattice.to_json()?;
    write_json(&args.out, &json)?;
    println!(
        "lattice: {} sites, {} bonds, {} plaquettes -> {}",
        lattice.n_sites(),
        lattice.n_bonds(),
        lattice.plaquettes().len(),
        args.out.display()
    );
    Ok(())
}

fn load_json(path: &Path) -> CliResult<serde_json::Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{} is not valid JSON: {e}", path.display())))
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    // Serialize fully before touching the filesystem; a failed run must
    // not leave a partial artifact behind.
    let text = format!("{}\n", serde_json::to_string_pretty(value).expect("serializable"));
    std::fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn backend_applicable(lattice: &Lattice) -> (bool, bool, bool) {
    let exhaustive = lattice.n_sites() <= 30;
    let transfer = matches!(
        lattice.kind(),
        LatticeKind::Square | LatticeKind::Triangular
    ) && lattice.is_pristine()
        && lattice.rows() <= MAX_STRIP_WIDTH;
    let branch = lattice.n_sites() <= 64;
    (exhaustive, transfer, branch)
}

fn cmd_solve(args: SolveArgs) -> CliResult<()> {
    let lattice = Lattice::from_json(&load_json(&args.lattice)?)?;
    let j = if let Some(path) = &args.couplings {
        CouplingConfig::from_json(&lattice, &load_json(path)?)?
    } else {
        let p = args.p.ok_or_else(|| {
            CliError::Input("provide --couplings FILE or --p PROB".to_string())
        })?;
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Input(format!("p = {p} outside [0, 1]")));
        }
        let mut rng = seeds::stream_rng(args.seed, 0);
        CouplingConfig::random(&lattice, p, &mut rng)
    };

    let (can_exhaustive, can_transfer, can_branch) = backend_applicable(&lattice);
    let started = std::time::Instant::now();
    let mut result: GroundStateResult = match args.backend {
        BackendArg::Exhaustive => enumerate_exhaustive(&lattice, &j, false)?,
        BackendArg::Transfer => transfer_matrix_count(&lattice, &j)?,
        BackendArg::Branch => branch_and_bound_enumerate(&lattice, &j, false)?,
        BackendArg::Auto => {
            if lattice.n_sites() <= 25 {
                enumerate_exhaustive(&lattice, &j, false)?
            } else if can_transfer {
                transfer_matrix_count(&lattice, &j)?
            } else if can_branch {
                branch_and_bound_enumerate(&lattice, &j, false)?
            } else {
                return Err(CliError::Cap(format!(
                    "{} sites exceed every exact backend; no solver applies",
                    lattice.n_sites()
                )));
            }
        }
    };
    result.elapsed_ms = Some(started.elapsed().as_secs_f64() * 1e3);

    if args.self_check {
        let mut others = Vec::new();
        if can_exhaustive {
            others.push(enumerate_exhaustive(&lattice, &j, false)?);
        }
        if can_transfer {
            others.push(transfer_matrix_count(&lattice, &j)?);
        }
        if can_branch {
            others.push(branch_and_bound_enumerate(&lattice, &j, false)?);
        }
        for other in &others {
            if other.energy != result.energy || other.degeneracy != result.degeneracy {
                return Err(CliError::SelfCheck(format!(
                    "backend disagreement: {} reports (E={}, D={}), {} reports (E={}, D={})",
                    result.backend.as_str(),
                    result.energy,
                    result.degeneracy,
                    other.backend.as_str(),
                    other.energy,
                    other.degeneracy
                )));
            }
        }
    }

    write_json(&args.out, &result.to_json(args.timings))?;
    println!(
        "solve[{}]: energy {} degeneracy {} -> {}",
        result.backend.as_str(),
        result.energy,
        result.degeneracy,
        args.out.display()
    );
    Ok(())
}

fn load_spec(name: &Option<String>, file: &Option<PathBuf>) -> CliResult<ModuleSpec> {
    match (name, file) {
        (Some(n), None) => Ok(modules::spec_by_name(n)?),
        (None, Some(path)) => Ok(modules::spec_from_json(&load_json(path)?)?),
        _ => Err(CliError::Input(
            "provide exactly one of --spec NAME or --spec-file FILE".to_string(),
        )),
    }
}

fn default_collar(spec: &ModuleSpec) -> usize {
    // One brick of extra sites for the branch-and-bound host, a full side
    // for the exhaustive ones (host stays within 30 sites).
    match spec.kind() {
        LatticeKind::Hexagonal => 1,
        _ => 5,
    }
}

fn cmd_verify_module(args: VerifyArgs) -> CliResult<()> {
    let spec = load_spec(&args.spec, &args.spec_file)?;
    let collar = args.collar.unwrap_or_else(|| default_collar(&spec));
    let report = modules::verify_module(&spec, collar, args.samples, args.seed)?;
    write_json(&args.out, &report.to_json())?;
    println!(
        "verify-module[{}]: {}/{} samples pass ({}) -> {}",
        report.spec,
        report.samples.iter().filter(|s| s.pass).count(),
        report.samples.len(),
        if report.all_pass { "PASS" } else { "FAIL" },
        args.out.display()
    );
    Ok(())
}

fn cmd_density(args: DensityArgs) -> CliResult<()> {
    let spec = load_spec(&args.spec, &args.spec_file)?;
    let est = bounds::empirical_module_density(&spec, args.p, args.samples, args.seed)?;
    let json = serde_json::json!({
        "spec": spec.name(),
        "p": args.p,
        "seed": args.seed,
        "samples": est.samples,
        "matches": est.matches,
        "estimate": est.estimate,
        "stderr": est.stderr,
    });
    write_json(&args.out, &json)?;
    println!(
        "density[{}]: {} / {} = {:.6e} ± {:.3e} -> {}",
        spec.name(),
        est.matches,
        est.samples,
        est.estimate,
        est.stderr,
        args.out.display()
    );
    Ok(())
}

fn cmd_bound(args: BoundArgs) -> CliResult<()> {
    let spec = load_spec(&args.spec, &args.spec_file)?;
    let size = args.size.unwrap_or(spec.n_sites() as u64 * 10_000);
    let report = bounds::probabilistic_bound_report(
        &spec,
        size,
        args.p,
        args.ps,
        args.pb,
        args.epsilon,
        args.delta,
        Some((args.samples, args.seed)),
    )?;
    write_json(&args.out, &report.to_json())?;
    if let Some(csv_path) = &args.csv {
        let mut text = String::new();
        if !csv_path.exists() {
            text.push_str(bounds::BoundReport::csv_header());
            text.push('\n');
        }
        text.push_str(&report.to_csv_row());
        text.push('\n');
        use std::io::Write;
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(csv_path)
            .map_err(|e| CliError::Input(format!("cannot open {}: {e}", csv_path.display())))?;
        file.write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", csv_path.display())))?;
    }
    println!(
        "bound[{}]: density >= {:.6e} (constant c = {}{:.6e}) -> {}",
        report.spec,
        report.entropy_density_lower,
        report
            .density_constant_exact
            .as_deref()
            .map(|s| format!("{s} ≈ "))
            .unwrap_or_default(),
        report.density_constant,
        args.out.display()
    );
    Ok(())
}
