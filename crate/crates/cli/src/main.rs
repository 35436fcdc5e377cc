use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use agrisc::audit::census_audit;
use agrisc::pipeline::{compare, report_text, results_csv, Outcome};
use agrisc::solver::{backend_by_name, export, FileFormat, DEFAULT_REL_GAP, DEFAULT_TIME_LIMIT};
use agrisc::{build_model, BuildOptions, Error, Instance, Mode, ModeRun, RunOptions, SolverConfig};

const EXIT_SOLVER: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;
const EXIT_BUDGET: u8 = 5;

#[derive(Parser)]
#[command(name = "agrisc", version, about = "Stochastic agrochemical supply-chain planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance in one or more modes and write reports.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Instance file, or `case_study` for the bundled instance.
    #[arg(long, default_value = "case_study")]
    instance: String,
    /// miqcp, perspective or plain-cut; repeat to run several.
    #[arg(long = "mode", default_value = "perspective")]
    modes: Vec<Mode>,
    /// Compare the first two modes.
    #[arg(long)]
    compare: bool,
    /// Seconds per mode.
    #[arg(long, default_value_t = DEFAULT_TIME_LIMIT)]
    time_limit: f64,
    #[arg(long, default_value_t = DEFAULT_REL_GAP)]
    gap: f64,
    /// Iteration cap of the cutting-plane loop.
    #[arg(long, default_value_t = 50)]
    max_cuts: usize,
    #[arg(long)]
    variance_cap: Option<f64>,
    #[arg(long)]
    loss_frac: Option<f64>,
    #[arg(long)]
    max_loss_weeks: Option<usize>,
    /// Applied to every plant.
    #[arg(long)]
    batches_before_clean: Option<u32>,
    /// Force week-1 decisions to agree across scenarios.
    #[arg(long)]
    nonanticipative: bool,
    /// One cut row per week instead of one aggregated row.
    #[arg(long)]
    per_week_cuts: bool,
    /// highs or scip. Defaults to scip for miqcp and highs otherwise.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Write the full model as `lp` or `mps` to PATH.
    #[arg(long, num_args = 2, value_names = ["FORMAT", "PATH"])]
    export: Option<Vec<String>>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(code) => ExitCode::from(code),
            Err(Failure::Usage(msg)) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            Err(Failure::Module(e)) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_SOLVER)
            }
        },
    }
}

enum Failure {
    Usage(String),
    Module(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Module(e)
    }
}

fn load(args: &RunArgs) -> Result<Instance, Failure> {
    let mut inst = if args.instance == "case_study" {
        Instance::case_study()
    } else {
        Instance::from_path(&args.instance)?
    };
    if let Some(l) = args.variance_cap {
        inst.risk.variance_cap = l;
    }
    if let Some(e) = args.loss_frac {
        inst.risk.max_loss_fraction = e;
    }
    if let Some(n) = args.max_loss_weeks {
        inst.risk.max_loss_weeks = n;
    }
    if let Some(b) = args.batches_before_clean {
        for p in &mut inst.plants {
            p.batches_before_cleaning = b;
        }
    }
    inst.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(inst)
}

fn exit_code(run: &ModeRun) -> u8 {
    match run.outcome {
        Outcome::Verified => 0,
        Outcome::VerificationFailed => EXIT_VERIFICATION,
        Outcome::BudgetExhausted => EXIT_BUDGET,
        Outcome::Infeasible => EXIT_SOLVER,
    }
}

fn write(path: PathBuf, text: &str) -> Result<(), Failure> {
    std::fs::write(&path, text).map_err(|e| Failure::Module(Error::io(&path, e)))
}

fn run(args: &RunArgs) -> Result<u8, Failure> {
    if args.compare && args.modes.len() < 2 {
        return Err(Failure::Usage("--compare needs two --mode flags".into()));
    }
    if args.time_limit.is_nan() || args.time_limit <= 0.0 || args.gap.is_nan() || args.gap < 0.0 {
        return Err(Failure::Usage("--time-limit must be positive and --gap non-negative".into()));
    }
    let inst = load(args)?;
    let export_target = match &args.export {
        Some(v) => {
            let format: FileFormat = v[0].parse().map_err(Failure::Usage)?;
            Some((format, PathBuf::from(&v[1])))
        }
        None => None,
    };
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::Module(Error::io(&args.out, e)))?;

    if let Some((format, path)) = &export_target {
        let ir = build_model(
            &inst,
            BuildOptions {
                include_variance: true,
                nonanticipative_week1: args.nonanticipative,
            },
        );
        export(&ir, *format, path)?;
    }

    let config = SolverConfig {
        time_limit: args.time_limit,
        rel_gap: args.gap,
        seed: Some(args.seed),
        threads: args.threads,
    };
    let opts = RunOptions {
        time_limit: args.time_limit,
        max_cuts: args.max_cuts,
        per_week_cuts: args.per_week_cuts,
        nonanticipative: args.nonanticipative,
        ..RunOptions::default()
    };

    let mut runs = Vec::new();
    for &mode in &args.modes {
        let name = args.backend.clone().unwrap_or_else(|| {
            if mode == Mode::Miqcp { "scip" } else { "highs" }.to_string()
        });
        let mut backend = backend_by_name(&name, config.clone()).map_err(|e| Failure::Usage(e.to_string()))?;
        eprintln!("running {} with {}", mode.as_str(), backend.name());
        let run = agrisc::run_mode(&inst, mode, backend.as_mut(), &opts)?;
        runs.push(run);
    }

    let mut report = report_text(&runs);
    if args.compare {
        report.push_str("[comparison]\n");
        report.push_str(&compare(&runs[0], &runs[1])?);
        report.push('\n');
    }
    report.push_str(&census_audit(&inst).to_text());
    write(args.out.join("report.txt"), &report)?;
    write(args.out.join("results.csv"), &results_csv(&runs, &inst))?;
    let mut log = String::new();
    for r in &runs {
        log.push_str(r.cut_log().as_str());
    }
    write(args.out.join("cuts.log"), &log)?;

    for r in &runs {
        println!(
            "{}: {} objective={} variance={} loss={} iterations={}",
            r.mode.as_str(),
            agrisc::pipeline::outcome_str(r.outcome),
            r.objective.map_or("NA".into(), |v| format!("{v:.4}")),
            r.variance.map_or("NA".into(), |v| format!("{v:.6}")),
            r.total_loss(),
            r.iterations
        );
    }
    Ok(runs.iter().map(exit_code).max().unwrap_or(0))
}
