use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use langmuir::cli::{parse_config_file, run_simulation, ConfigOverrides, HaltReason, SimConfig};
use langmuir::initcurves::CurveDescriptor;
use langmuir::verify::{self, Suite};

#[derive(Debug, Parser)]
#[command(name = "langmuir", version, about = "Langmuir-monolayer domain evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve an initial curve and write snapshots and diagnostics.
    Simulate(SimulateArgs),
    /// Run built-in verification checks.
    Verify {
        #[arg(value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// `key = value` config file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// bola | bola:eps,rho | circle:R[,cx,cy] | ellipse:a,b | file:path.csv
    #[arg(long)]
    initial: Option<CurveDescriptor>,
    /// Number of vertices (ignored for file: curves).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    snapshot_every: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    min_edge_factor: Option<f64>,
    #[arg(long)]
    chord_arc_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Kernel,
    Scheme,
    Convergence,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Kernel => Suite::Kernel,
            SuiteArg::Scheme => Suite::Scheme,
            SuiteArg::Convergence => Suite::Convergence,
            SuiteArg::All => Suite::All,
        }
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("LANGMUIR_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| format!("LANGMUIR_THREADS: bad value `{raw}`"))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| format!("LANGMUIR_THREADS: {e}"))?;
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> ExitCode {
    let mut config = SimConfig::default();
    if let Some(path) = &args.config {
        match parse_config_file(path) {
            Ok(o) => config.apply(o),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    config.apply(ConfigOverrides {
        initial: args.initial,
        n: args.n,
        tau: args.tau,
        steps: args.steps,
        snapshot_every: args.snapshot_every,
        output_dir: args.out,
        min_edge_factor: args.min_edge_factor,
        chord_arc_min: args.chord_arc_min,
    });

    match run_simulation(&config) {
        Ok(summary) => {
            println!(
                "{}: {} of {} steps, length {:.10}, area {:.10}, ratio {:.8}",
                config.output_dir.display(),
                summary.steps_completed,
                summary.steps_requested,
                summary.final_length,
                summary.final_area,
                summary.final_isoperimetric_ratio
            );
            match summary.halt_reason {
                HaltReason::Completed => ExitCode::SUCCESS,
                HaltReason::MeshDegenerate | HaltReason::SolveFailed => {
                    eprintln!("halted: {}", summary.halt_detail.unwrap_or_default());
                    ExitCode::from(3)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Verify { suite } => {
            let checks = verify::run_suite(suite.into(), |c| println!("{c}"));
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", checks.len());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
