//! Command implementations behind the `urnsim` binary.

pub mod checks;
pub mod config;
pub mod error;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use urnsim::montecarlo::{config_fingerprint, default_targets, summary_json, write_replications_csv};
use urnsim::tables::{reproduce_table, Design};
use urnsim::{run_replications, simulate_trajectory, summarize};

pub use checks::{run_check, Check, Verdict};
pub use config::{parse_config, RunConfig};
pub use error::{CliError, Result};
use output::OutputDir;

/// Settings shared by every subcommand, after flags and environment.
#[derive(Debug, Clone, Default)]
pub struct Invocation {
    pub config_path: Option<PathBuf>,
    pub design: Option<Design>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub parallelism: Option<usize>,
    pub out: PathBuf,
}

impl Invocation {
    /// Reads and parses the config, then applies flag overrides.
    pub fn load(&self) -> Result<RunConfig> {
        let text = match &self.config_path {
            Some(p) => fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
            None => String::new(),
        };
        let mut config = parse_config(&text, self.design)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(reps) = self.reps {
            if reps < 1 {
                return Err(CliError::Usage("--reps must be at least 1".into()));
            }
            config.reps = reps;
        }
        if let Some(p) = self.parallelism {
            if p < 1 {
                return Err(CliError::Usage("--parallelism must be at least 1".into()));
            }
            config.parallelism = p;
        }
        Ok(config)
    }

    fn finish(&self, out: OutputDir, subcommand: &str, resolved: serde_json::Value) -> Result<PathBuf> {
        out.finish(subcommand, self.config_path.as_deref(), resolved)
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("configurations serialize")
}

/// One trajectory to `trajectory.csv`.
pub fn cmd_simulate(inv: &Invocation) -> Result<PathBuf> {
    let sim = inv.load()?.sim_config()?;
    let trajectory = simulate_trajectory(&sim)?;
    let mut out = OutputDir::create(&inv.out)?;
    out.write("trajectory.csv", trajectory.to_csv().as_bytes())?;
    inv.finish(out, "simulate", to_json(&sim))
}

/// Replications to `summary.json` and `replications.csv`. Wall time is
/// only recorded with `timing`, since it would change the summary hash.
pub fn cmd_montecarlo(inv: &Invocation, timing: bool) -> Result<PathBuf> {
    let run = inv.load()?;
    let sim = run.sim_config()?;
    let started = Instant::now();
    let summaries = run_replications(&sim, run.reps, run.parallelism)?;
    let elapsed = started.elapsed().as_secs_f64();
    let row = summarize(&config_fingerprint(&sim), &summaries, sim.kinds(), &default_targets(&sim))?;
    let mut out = OutputDir::create(&inv.out)?;
    out.write_json("summary.json", &summary_json(&sim, &row, timing.then_some(elapsed)))?;
    let mut csv = Vec::new();
    write_replications_csv(&mut csv, &summaries, sim.kinds()).expect("writing to memory");
    out.write("replications.csv", &csv)?;
    inv.finish(out, "montecarlo", serde_json::json!({ "reps": run.reps, "sim": to_json(&sim) }))
}

/// A full design grid to `table.txt` and `table.csv`; returns the text
/// layout as well.
pub fn cmd_table(inv: &Invocation) -> Result<(PathBuf, String)> {
    let spec = inv.load()?.table_spec()?;
    let report = reproduce_table(&spec)?;
    let text = report.render();
    let mut out = OutputDir::create(&inv.out)?;
    out.write("table.txt", text.as_bytes())?;
    out.write("table.csv", report.to_csv().as_bytes())?;
    let manifest = inv.finish(out, "table", to_json(&spec))?;
    Ok((manifest, text))
}

/// Runs one check and writes `verdict.json` plus its series, if any.
pub fn cmd_diagnose(inv: &Invocation, check: Check) -> Result<Verdict> {
    let run = inv.load()?;
    let sim = run.sim_config()?;
    let result = run_check(check, &sim, run.reps, run.parallelism)?;
    let mut out = OutputDir::create(&inv.out)?;
    out.write_json("verdict.json", &to_json(&result.verdict))?;
    if let Some((name, csv)) = &result.report {
        out.write(name, csv.as_bytes())?;
    }
    inv.finish(out, "diagnose", serde_json::json!({ "check": check.name(), "reps": run.reps, "sim": to_json(&sim) }))?;
    Ok(result.verdict)
}

/// `--out`, else `OUT_DIR`, else `./out`.
pub fn resolve_out(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os("OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// `--seed`, else `SEED`. A malformed `SEED` is a usage error.
pub fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("SEED must be an unsigned 64-bit integer, got '{s}'"))),
        Err(_) => Ok(None),
    }
}
