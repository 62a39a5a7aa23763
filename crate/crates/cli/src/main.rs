//! `mutrb`: mutational robustness experiments on mini-language programs.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Command, Failure};
use config::Flags;

#[derive(Parser)]
#[command(name = "mutrb", version, about = "Mutational robustness experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Sampled MutRB estimate with a 95% interval.
    Measure(Flags),
    /// Exact MutRB over every first-order mutant.
    Exhaustive(Flags),
    /// Per-site statement coverage of the suite.
    Coverage(Flags),
    /// Cumulative neutral walk.
    Walk(Flags),
    /// Seed defects guarded by held-out tests.
    SeedBugs(Flags),
    /// Seed defects, then look for neutral variants that repair them.
    Repair(Flags),
    /// Bugs repaired against bugs seeded.
    Sweep(Flags),
}

impl Sub {
    fn split(self) -> (Command, Flags) {
        match self {
            Sub::Measure(f) => (Command::Measure, f),
            Sub::Exhaustive(f) => (Command::Exhaustive, f),
            Sub::Coverage(f) => (Command::Coverage, f),
            Sub::Walk(f) => (Command::Walk, f),
            Sub::SeedBugs(f) => (Command::SeedBugs, f),
            Sub::Repair(f) => (Command::Repair, f),
            Sub::Sweep(f) => (Command::Sweep, f),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (cmd, flags) = cli.command.split();
    match run(cmd, &flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mutrb {}: {e}", cmd.name());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cmd: Command, flags: &Flags) -> Result<(), Failure> {
    let cfg = config::load_config(flags)?;
    let out = commands::output_path(cmd, &cfg);
    commands::check_writable(&out)?;
    let inputs = commands::load_inputs(&cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Failure::Config(config::ConfigError::Invalid(format!("worker pool: {e}"))))?;
    let (outcome, failure) = pool.install(|| commands::execute(cmd, &cfg, &inputs));
    if let Some(o) = outcome {
        let env = commands::envelope(cmd, &cfg, &inputs, o.report);
        commands::write_outputs(&out, &env, o.csv.as_deref())?;
        println!("{} (report: {})", o.summary, out.display());
    }
    failure.map_or(Ok(()), Err)
}
