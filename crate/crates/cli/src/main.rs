//! Command-line driver for Mauldin-Williams systems.
//!
//! Exit codes are fixed for scripting: 0 success, 1 domain failure (invalid
//! system, failed precondition), 2 parse or usage error, 3 non-convergence.
//! All emitted numbers carry 17 significant digits and identical invocations
//! produce byte-identical outputs.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mwg::algebra::{hom_defect, ia_gap};
use mwg::fmt_g17;
use mwg::measure::{DiscreteMeasure, StateFamily};
use mwg::system::MWGraph;
use mwg::transport::w1;
use mwg::Error;

#[derive(Parser)]
#[command(
    name = "mwg",
    version,
    about = "Mauldin-Williams graphs: invariant sets, path coding, Wasserstein-1 state metrics, and the symbolic path algebra",
    after_help = "Exit codes: 0 ok, 1 domain failure, 2 parse/usage error, 3 non-convergence."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a system file: contraction ratios, box containment, no sinks
    /// or sources, Condition (L).
    Validate(ValidateArgs),
    /// Iterate the Hutchinson operator to the invariant list; write one point
    /// cloud per vertex and a JSON summary.
    Attractor(AttractorArgs),
    /// Evaluate the coding map on a finite path (anchors at the low box
    /// corners) and print the point with its certified bound.
    Code(CodeArgs),
    /// Tabulate the level-k approximant gaps, their certified bounds, and the
    /// multiplicativity defects for an expression.
    IaConverge(IaConvergeArgs),
    /// Check the path-algebra identities and Condition (L) for a system.
    CkCheck(CkCheckArgs),
    /// Wasserstein-1 distance between two measure files.
    W1(W1Args),
    /// Sample the invariant set at a vertex by the chaos game.
    Chaos(ChaosArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// System description file (JSON).
    system: PathBuf,
}

#[derive(Args)]
struct AttractorArgs {
    /// System description file (JSON).
    system: PathBuf,
    /// Stop when the one-step residual is at most this.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Thinning radius for the iterated clouds.
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    /// Iteration budget.
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Cloud file format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
}

#[derive(Args)]
struct CodeArgs {
    /// System description file (JSON).
    system: PathBuf,
    /// Comma-separated edge identifiers, outermost first.
    #[arg(long)]
    path: String,
}

#[derive(Args)]
struct IaConvergeArgs {
    /// System description file (JSON).
    system: PathBuf,
    /// Expression applied on every vertex box (grammar: constants, x0..,
    /// +, -, *, dist(p)).
    #[arg(long = "fn")]
    function: String,
    /// Largest level; rows cover k = 1 .. kmax-1.
    #[arg(long)]
    kmax: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CkCheckArgs {
    /// System description file (JSON).
    system: PathBuf,
}

#[derive(Args)]
struct W1Args {
    /// First measure file: {"support": [[..]], "weights": [..]}.
    mu: PathBuf,
    /// Second measure file.
    nu: PathBuf,
}

#[derive(Args)]
struct ChaosArgs {
    /// System description file (JSON).
    system: PathBuf,
    /// Vertex to sample at.
    #[arg(long)]
    vertex: String,
    /// Number of samples.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Generator seed; fixed seed means byte-identical output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-sample accuracy target; the walk depth is ceil(log tol / log c).
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Explicit walk depth override.
    #[arg(long)]
    k: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cloud file format.
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate(args) => cmd_validate(args),
        Command::Attractor(args) => cmd_attractor(args),
        Command::Code(args) => cmd_code(args),
        Command::IaConverge(args) => cmd_ia_converge(args),
        Command::CkCheck(args) => cmd_ck_check(args),
        Command::W1(args) => cmd_w1(args),
        Command::Chaos(args) => cmd_chaos(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse(_) | Error::Json(_) | Error::Io(_) => 2,
        Error::NoConvergence { .. } => 3,
        _ => 1,
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode, Error> {
    let system = MWGraph::from_file(&args.system)?;
    let report = system.validate();
    let condition_l = system.graph().condition_l();
    if report.is_clean() {
        println!("{report}");
        match condition_l {
            mwg::graph::ConditionL::Holds => println!("condition (L): ok"),
            mwg::graph::ConditionL::Fails { witness } => println!(
                "condition (L): fails, witness loop {}",
                witness.display(system.graph())
            ),
        }
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{report}");
        Ok(ExitCode::from(1))
    }
}

fn cmd_attractor(args: AttractorArgs) -> Result<ExitCode, Error> {
    let system = MWGraph::from_file(&args.system)?;
    let report = system.validate();
    if !report.is_clean() {
        eprintln!("{report}");
        return Ok(ExitCode::from(1));
    }
    let run = system.invariant_list(args.eps, args.tol, args.max_iter)?;
    std::fs::create_dir_all(&args.out)?;
    for v in system.graph().vertices() {
        let cloud = run.approx.cloud(v);
        let (name, payload) = match args.format.as_str() {
            "json" => (
                format!("{}.json", system.graph().vertex_name(v)),
                cloud.to_json() + "\n",
            ),
            _ => (
                format!("{}.csv", system.graph().vertex_name(v)),
                cloud.to_csv(),
            ),
        };
        std::fs::write(args.out.join(name), payload)?;
    }
    let mut summary = String::from("{\n");
    let _ = writeln!(
        summary,
        "  \"residual\": {},",
        fmt_g17(run.approx.residual())
    );
    let _ = writeln!(summary, "  \"iterations\": {},", run.iterations);
    let _ = writeln!(
        summary,
        "  \"certified_bound\": {}",
        fmt_g17(run.certified_bound)
    );
    summary.push_str("}\n");
    std::fs::write(args.out.join("summary.json"), summary)?;
    println!(
        "converged in {} iterations, residual {}, certified bound {}",
        run.iterations,
        fmt_g17(run.approx.residual()),
        fmt_g17(run.certified_bound)
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_code(args: CodeArgs) -> Result<ExitCode, Error> {
    let system = MWGraph::from_file(&args.system)?;
    let names: Vec<&str> = args.path.split(',').map(str::trim).collect();
    let path = system.graph().path_by_names(&names)?;
    let anchors = system.anchors_low();
    let (point, bound) = system.coding_point(&path, &anchors)?;
    let coords: Vec<String> = point.iter().map(|x| fmt_g17(*x)).collect();
    println!("point: {}", coords.join(" "));
    println!("bound: {}", fmt_g17(bound));
    Ok(ExitCode::SUCCESS)
}

fn cmd_ia_converge(args: IaConvergeArgs) -> Result<ExitCode, Error> {
    if args.kmax == 0 {
        return Err(Error::Parse("--kmax must be >= 1".into()));
    }
    let system = MWGraph::from_file(&args.system)?;
    let report = system.validate();
    if !report.is_clean() {
        eprintln!("{report}");
        return Ok(ExitCode::from(1));
    }
    let family = system.family_parse(&args.function)?;
    let mu0 = StateFamily::uniform_corners(&system)?;
    let mut table = String::from("k,gap,bound,hom_defect\n");
    for k in 1..args.kmax {
        let (gap, bound) = ia_gap(&system, &family, &mu0, k, k + 1)?;
        let defect = hom_defect(&system, &family, &family, &mu0, k)?;
        let _ = writeln!(
            table,
            "{k},{},{},{}",
            fmt_g17(gap),
            fmt_g17(bound),
            fmt_g17(defect)
        );
    }
    emit(args.out.as_deref(), &table)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_ck_check(args: CkCheckArgs) -> Result<ExitCode, Error> {
    let system = MWGraph::from_file(&args.system)?;
    let report = mwg::algebra::ck_identity_check(system.graph());
    if !report.is_clean() {
        eprintln!("{report}");
        return Ok(ExitCode::from(1));
    }
    println!("ck identities: ok");
    match system.graph().condition_l() {
        mwg::graph::ConditionL::Holds => println!("condition (L): ok"),
        mwg::graph::ConditionL::Fails { witness } => println!(
            "condition (L): fails, witness loop {} (informational)",
            witness.display(system.graph())
        ),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_w1(args: W1Args) -> Result<ExitCode, Error> {
    let mu = DiscreteMeasure::from_file(&args.mu)?;
    let nu = DiscreteMeasure::from_file(&args.nu)?;
    println!("{}", fmt_g17(w1(&mu, &nu)?));
    Ok(ExitCode::SUCCESS)
}

fn cmd_chaos(args: ChaosArgs) -> Result<ExitCode, Error> {
    let system = MWGraph::from_file(&args.system)?;
    let report = system.validate();
    if !report.is_clean() {
        eprintln!("{report}");
        return Ok(ExitCode::from(1));
    }
    let v = system.graph().vertex(&args.vertex)?;
    let tol = match args.k {
        // Depth k corresponds to accuracy slightly inside c^k.
        Some(k) => mwg::affine::geom_pow(system.global_ratio(), k) * 0.999,
        None => args.tol,
    };
    let cloud = system.chaos_game(v, args.n, args.seed, tol)?;
    let payload = match args.format.as_str() {
        "json" => cloud.to_json() + "\n",
        _ => cloud.to_csv(),
    };
    emit(args.out.as_deref(), &payload)?;
    Ok(ExitCode::SUCCESS)
}

fn emit(path: Option<&std::path::Path>, payload: &str) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, payload)?,
        None => print!("{payload}"),
    }
    Ok(())
}
