use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fdlab::cli::{self, Context};
use fdlab::Error;

#[derive(Parser)]
#[command(name = "fdlab", version, about = "Multi-bubble ansatz and fast-diffusion extinction experiments")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
    /// JSON run configuration (defaults to n = 3 with everything else default).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "fdlab-out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Interaction matrix of the configured points.
    Greens,
    /// Dilation weights b_j.
    SolveB,
    /// Kernel projections and samples of the ansatz.
    Ansatz,
    /// Radial simulation (w-form extinction or u-form Yamabe flow).
    Simulate,
    /// Extinction time and rate fits from a simulation CSV.
    Fit,
    /// Invariant suite.
    Check,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let v = serde_json::json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{v}");
    ExitCode::from(code)
}

fn run(args: &Args) -> Result<ExitCode, Error> {
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let cfg = cli::load_config(args.config.as_deref())?;
    let ctx = Context::new(&args.out, args.verbose)?;
    cli::write_resolved_config(&cfg, &ctx)?;
    let summary = match args.cmd {
        Cmd::Greens => cli::greens(&cfg, &ctx)?,
        Cmd::SolveB => cli::solve_b_cmd(&cfg, &ctx)?,
        Cmd::Ansatz => cli::ansatz(&cfg, &ctx)?,
        Cmd::Simulate => cli::simulate(&cfg, &ctx)?,
        Cmd::Fit => cli::fit(&cfg, &ctx)?,
        Cmd::Check => {
            let outcomes = cli::check(&cfg, &ctx)?;
            let mut ok = true;
            for c in &outcomes {
                println!(
                    "{} {} value={:e} tolerance={:e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance
                );
                ok &= c.passed;
            }
            if !ok {
                return Ok(report("CheckFailed", "invariant suite failed", EXIT_CHECK_FAILED));
            }
            return Ok(ExitCode::SUCCESS);
        }
    };
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return report("Usage", e.to_string().trim(), EXIT_CONFIG),
    };
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            let code = if e.is_config() { EXIT_CONFIG } else { EXIT_NUMERICAL };
            report(&e.kind(), &e.to_string(), code)
        }
    }
}
