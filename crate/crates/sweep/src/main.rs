use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qvdp_core::liouvillian::Vectorization;
use qvdp_sweep::verify::{verify, VerifyContext};
use qvdp_sweep::{list_presets, preset, run_scenario, RunOptions, ScenarioConfig, SweepError, TolerancePolicy};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER_FAILURES: u8 = 3;

#[derive(Parser)]
#[command(name = "qvdp", version, about = "Steady-state sweeps and checks for the driven quantum van der Pol oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or a TOML scenario file and write `<name>.csv`.
    Run {
        /// Preset name or path to a scenario file.
        target: String,
        #[arg(long, env = "QVDP_OUT_DIR")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Fixed Fock-space truncation for every point.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long = "tol", default_value = "default")]
        tol: String,
    },
    /// List the built-in presets.
    List,
    /// Run the acceptance checks and print a pass/fail table.
    Verify {
        #[arg(long = "tol", default_value = "default")]
        tol: String,
        #[arg(long)]
        workers: Option<usize>,
        /// Only run checks whose name contains this string.
        #[arg(long)]
        only: Option<String>,
        #[arg(long, hide = true)]
        corrupt_vectorization: bool,
    },
    /// Print a preset as an editable scenario file.
    ExportPreset { name: String },
}

fn load_target(target: &str) -> Result<ScenarioConfig, SweepError> {
    if list_presets().contains(&target) {
        return preset(target);
    }
    let path = Path::new(target);
    if path.exists() {
        return ScenarioConfig::load(path);
    }
    preset(target)
}

fn run(cli: Cli) -> Result<u8, SweepError> {
    match cli.command {
        Command::List => {
            for name in list_presets() {
                println!("{name}");
            }
            Ok(0)
        }
        Command::ExportPreset { name } => {
            print!("{}", preset(&name)?.to_toml());
            Ok(0)
        }
        Command::Run { target, out, workers, dim, tol } => {
            let policy: TolerancePolicy = tol.parse()?;
            let config = load_target(&target)?;
            let mut opts = RunOptions { dim, policy, ..RunOptions::default() };
            if let Some(w) = workers {
                opts.workers = w;
            }
            let table = run_scenario(&config, &opts)?;
            let path = table.write(&out)?;
            eprintln!(
                "{}: {} rows, {} failed -> {}",
                config.name,
                table.rows.len(),
                table.failed_rows(),
                path.display()
            );
            Ok(if table.excessive_failures() { EXIT_SOLVER_FAILURES } else { 0 })
        }
        Command::Verify { tol, workers, only, corrupt_vectorization } => {
            let mut ctx = VerifyContext {
                policy: tol.parse()?,
                ..VerifyContext::default()
            };
            if let Some(w) = workers {
                ctx.workers = w;
            }
            if corrupt_vectorization {
                ctx.vectorization = Vectorization::UntransposedRight;
            }
            let report = verify(&ctx, only.as_deref());
            println!("{report}");
            Ok(if report.all_passed() { 0 } else { EXIT_VERIFY_FAILED })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
