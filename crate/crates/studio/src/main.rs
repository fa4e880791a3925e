use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wakereserve_studio::run::{cmd_optimize, cmd_simulate, cmd_sweep, Overrides, Report};
use wakereserve_studio::{StudioError, StudyConfig};

/// De-loading optimizer and frequency-response simulator for wake-coupled
/// wind farms.
#[derive(Parser)]
#[command(name = "wakereserve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve each case at one free wind speed.
    Optimize(Common),
    /// Solve every case over the configured wind-speed range.
    Sweep(Common),
    /// Simulate the generator trip for each case.
    Simulate(Common),
    /// Parse and check a config without running anything.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Case id to run; repeat for several. All cases when omitted.
    #[arg(long = "case")]
    cases: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Free wind speed at the first turbine, m/s.
    #[arg(long = "v")]
    v: Option<f64>,
}

enum Kind {
    Optimize,
    Sweep,
    Simulate,
}

fn run(kind: Kind, c: Common) -> Result<ExitCode, StudioError> {
    let mut cfg = StudyConfig::load(&c.config)?;
    Overrides {
        cases: c.cases.clone(),
        seed: c.seed,
        v_free_mps: c.v,
    }
    .apply(&mut cfg)?;
    let cases = cfg.select_cases(&c.cases)?;
    let out = c.out.unwrap_or_else(|| cfg.output.dir.clone());
    let report: Report = match kind {
        Kind::Optimize => cmd_optimize(&cfg, &cases, &out)?,
        Kind::Sweep => cmd_sweep(&cfg, &cases, &out)?,
        Kind::Simulate => cmd_simulate(&cfg, &cases, &out)?,
    };
    print!("{}", report.summary);
    for f in &report.failures {
        eprintln!("error: {f}");
    }
    // a sweep is useful as long as some cell solved
    let ok = match kind {
        Kind::Sweep => report.succeeded > 0,
        _ => report.failures.is_empty(),
    };
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Optimize(c) => run(Kind::Optimize, c),
        Command::Sweep(c) => run(Kind::Sweep, c),
        Command::Simulate(c) => run(Kind::Simulate, c),
        Command::ValidateConfig { config } => StudyConfig::load(&config).map(|cfg| {
            println!(
                "{}: ok ({} turbines, {} cases)",
                config.display(),
                cfg.farm.n,
                cfg.cases().len()
            );
            ExitCode::SUCCESS
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(e.exit_code() as u8)
    })
}
