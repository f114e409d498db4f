use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use urnsim::tables::Design;
use urnsim_cli::{cmd_diagnose, cmd_montecarlo, cmd_simulate, cmd_table, resolve_out, resolve_seed, Check, Invocation, Result};

/// Two-color randomly reinforced urn simulator.
#[derive(Debug, Parser)]
#[command(name = "urnsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trajectory and write it as CSV.
    Simulate(Common),
    /// Run independent replications and summarize them.
    Montecarlo {
        #[command(flatten)]
        common: Common,
        /// Record wall-clock time in summary.json.
        #[arg(long)]
        timing: bool,
    },
    /// Reproduce a design's simulation table.
    Table(Common),
    /// Run one diagnostic check; exits with 1 if it fails.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// One of lln, clt, harmonic, crossing, bias, increments.
        #[arg(long)]
        check: String,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config and SEED.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output directory; overrides OUT_DIR. Defaults to ./out.
    #[arg(long)]
    out: Option<PathBuf>,
    /// a, b, c or d; overrides the config.
    #[arg(long)]
    design: Option<String>,
}

impl Common {
    fn invocation(&self) -> Result<Invocation> {
        Ok(Invocation {
            config_path: self.config.clone(),
            design: self.design.as_deref().map(str::parse::<Design>).transpose()?,
            seed: resolve_seed(self.seed)?,
            reps: self.reps,
            parallelism: self.parallelism,
            out: resolve_out(self.out.as_deref()),
        })
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(c) => {
            let manifest = cmd_simulate(&c.invocation()?)?;
            println!("{}", manifest.display());
        }
        Command::Montecarlo { common, timing } => {
            let manifest = cmd_montecarlo(&common.invocation()?, timing)?;
            println!("{}", manifest.display());
        }
        Command::Table(c) => {
            let (_, text) = cmd_table(&c.invocation()?)?;
            print!("{text}");
        }
        Command::Diagnose { common, check } => {
            let check: Check = check.parse()?;
            let verdict = cmd_diagnose(&common.invocation()?, check)?;
            println!("{}", serde_json::to_string(&verdict).expect("verdicts serialize"));
            return Ok(verdict.pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
