use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use unigrad::harness::{
    check_trace, reference_solution, run_experiment, Algorithm, EpsSpec, ExperimentConfig, OrderKind, ProblemKind,
    REFERENCE_TOL,
};
use unigrad::trace::RunTrace;

#[derive(Parser)]
#[command(name = "unigrad", version, about = "Universal gradient methods for online and finite-sum optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write trace.csv, report.json and bound_curve.csv.
    Run(RunArgs),
    /// Re-evaluate the regret bounds of a saved online trace.
    CheckBounds {
        trace: PathBuf,
        /// Report written alongside the trace; defaults to its sibling report.json.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Solve the batch problem to high accuracy and print x* and f*.
    Reference {
        problem: ProblemArg,
        #[command(flatten)]
        data: ProblemArgs,
        #[arg(long, default_value_t = REFERENCE_TOL)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Oupgm,
    Oudgm,
    Sug,
    Batch,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    SynthLasso,
    LassoCsv,
    Steiner,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Sequential,
    Cyclic,
    Random,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    /// ℓ1 weight.
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    mu: f64,
    /// Ridge weight; makes h strongly convex with this modulus.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    ridge: f64,
    /// Horizon: online runs visit T + 1 components, SUG runs T iterations.
    #[arg(long = "T", default_value_t = 1000)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Synthetic dimension.
    #[arg(long, default_value_t = 20)]
    p: usize,
    /// Synthetic lasso sample count [default: T + 1].
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 5)]
    sparsity: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Number of Steiner centers.
    #[arg(long, default_value_t = 50)]
    m: usize,
    /// Spread of the Steiner centers.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Hölder degree of the stream.
    #[arg(long)]
    v: Option<f64>,
    /// Hölder modulus of the stream.
    #[arg(long = "Mv")]
    mv: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algorithm: AlgorithmArg,
    #[arg(long, value_enum, default_value = "synth-lasso")]
    problem: ProblemArg,
    #[command(flatten)]
    data: ProblemArgs,
    /// Target accuracy, or `auto` for T^(-(1+v)/2).
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<String>,
    /// Use the fixed modulus γ(Mv, ε) instead of the line search.
    #[arg(long)]
    fixed_step: bool,
    #[arg(long = "L0", default_value_t = 1.0, allow_negative_numbers = true)]
    l0: f64,
    /// SUG surrogate modulus.
    #[arg(long = "M", allow_negative_numbers = true)]
    modulus: Option<f64>,
    #[arg(long, value_enum, default_value = "cyclic")]
    order: OrderArg,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write zero wall-time so traces are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Record the full objective after every online step.
    #[arg(long)]
    track_full: bool,
    /// SUG: stop once the bound drops below this value.
    #[arg(long)]
    stop: Option<f64>,
    /// SUG: over-estimate of ‖x* − x0‖² for the bound.
    #[arg(long)]
    dist0: Option<f64>,
}

fn base_config(problem: ProblemArg, a: &ProblemArgs) -> ExperimentConfig {
    ExperimentConfig {
        problem: match problem {
            ProblemArg::SynthLasso => ProblemKind::SynthLasso,
            ProblemArg::LassoCsv => ProblemKind::LassoCsv,
            ProblemArg::Steiner => ProblemKind::Steiner,
        },
        data: a.data.clone(),
        mu: a.mu,
        ridge: a.ridge,
        horizon: a.horizon,
        seed: a.seed,
        p: a.p,
        n: a.n,
        sparsity: a.sparsity,
        noise: a.noise,
        centers: a.m,
        scale: a.scale,
        v: a.v,
        mv: a.mv,
        ..ExperimentConfig::default()
    }
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let eps = args.eps.as_deref().map(str::parse::<EpsSpec>).transpose()?;
    let cfg = ExperimentConfig {
        algorithm: match args.algorithm {
            AlgorithmArg::Oupgm => Algorithm::Oupgm,
            AlgorithmArg::Oudgm => Algorithm::Oudgm,
            AlgorithmArg::Sug => Algorithm::Sug,
            AlgorithmArg::Batch => Algorithm::Batch,
        },
        fixed_step: args.fixed_step,
        eps,
        l0: args.l0,
        m: args.modulus,
        order: match args.order {
            OrderArg::Sequential => OrderKind::Sequential,
            OrderArg::Cyclic => OrderKind::Cyclic,
            OrderArg::Random => OrderKind::Random,
        },
        record_time: !args.no_timing,
        track_full: args.track_full,
        stop: args.stop,
        dist0_sq: args.dist0,
        ..base_config(args.problem, &args.data)
    };
    let out = run_experiment(&cfg, &args.out)?;
    println!("trace:       {}", out.trace.display());
    println!("report:      {}", out.report.display());
    println!("bound curve: {}", out.bound_curve.display());
    let s = &out.summary;
    println!("f*:          {:.12e}", s.f_star);
    if let Some(r) = &s.regret {
        println!("regret:      {:.6e} (shifted {:.6e})", r.regret_as_defined, r.regret_shifted);
        println!("bounds:      {}", if r.all_satisfied() { "all satisfied" } else { "VIOLATED" });
    }
    if let Some(r) = &s.sug {
        println!("final gap:   {:.6e} after {} iterations", r.final_gap, r.iterations);
    }
    Ok(ExitCode::SUCCESS)
}

fn check_bounds(trace_path: PathBuf, report: Option<PathBuf>) -> anyhow::Result<ExitCode> {
    let report = report.unwrap_or_else(|| trace_path.with_file_name("report.json"));
    let raw = fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
    let json: serde_json::Value = serde_json::from_str(&raw).with_context(|| format!("parsing {}", report.display()))?;
    let Some(cfg) = json.get("config") else {
        bail!("{} has no `config` entry", report.display());
    };
    let cfg: ExperimentConfig = serde_json::from_value(cfg.clone())?;
    let file = fs::File::open(&trace_path).with_context(|| format!("opening {}", trace_path.display()))?;
    let trace = RunTrace::read_csv(file)?;
    let r = check_trace(&trace, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(if r.all_satisfied() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::CheckBounds { trace, report } => check_bounds(trace, report),
        Command::Reference { problem, data, tol } => (|| {
            let built = base_config(problem, &data).build_problem()?;
            let r = reference_solution(&built.problem, tol)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            Ok(ExitCode::SUCCESS)
        })(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
