//! TOML run configuration.
//!
//! Every key is optional except `design`. Arm parameters sit at the top
//! level (`p1`, `p2` for Bernoulli designs, `m1`, `var1`, `m2`, `var2` for
//! Gaussian ones) and are only required by commands that simulate a
//! single configuration.

use std::collections::BTreeSet;

use serde::Serialize;
use toml::{Table, Value};
use urnsim::schedule::Schedule;
use urnsim::tables::{Design, TableSpec};
use urnsim::{Mode, ResponseModel, SimConfig, TargetPolicy, UtilityKind, UtilitySpec};

use crate::error::{CliError, Result};

pub const DEFAULT_REPS: usize = 100;

const TOP_KEYS: &[&str] = &[
    "design", "mode", "n", "seed", "reps", "parallelism", "y0", "bias_p", "clamp_eps", "q", "schedule", "p1",
    "p2", "m1", "m2", "var1", "var2", "utility", "thresholds", "fallback",
];
const UTILITY_KEYS: &[&str] = &["kind", "a", "b"];
const THRESHOLD_KEYS: &[&str] = &["rho1", "rho2"];
const FALLBACK_KEYS: &[&str] = &["p", "eta", "sigma2"];

/// A parsed config document with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub design: Design,
    pub mode: Mode,
    pub n: u64,
    pub seed: u64,
    pub reps: usize,
    pub parallelism: usize,
    pub y0: (f64, f64),
    pub schedule: Schedule,
    pub policy: TargetPolicy<f64>,
    pub utility: UtilitySpec<f64>,
    pub initial_rho: [f64; 2],
    /// `None` when the document names no arm parameters.
    pub arms: Option<[ResponseModel<f64>; 2]>,
}

impl RunConfig {
    /// The single-configuration view; fails when arm parameters are missing.
    pub fn sim_config(&self) -> Result<SimConfig<f64>> {
        let arms = self.arms.ok_or_else(|| {
            let keys = if self.design.is_bernoulli() { "p1, p2" } else { "m1, var1, m2, var2" };
            CliError::Config(format!("design {:?} needs arm parameters {keys}", self.design))
        })?;
        let config = SimConfig {
            y1_0: self.y0.0,
            y2_0: self.y0.1,
            horizon: self.n,
            mode: self.mode,
            arms,
            utility: self.utility,
            policy: self.policy,
            schedule: self.schedule,
            seed: self.seed,
            initial_rho: self.initial_rho,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn table_spec(&self) -> Result<TableSpec> {
        let q = match self.schedule {
            Schedule::Exponential { q } => q,
            Schedule::EveryStep => {
                return Err(CliError::Config("table reproduction uses the exponential schedule".into()))
            }
        };
        let mut spec = TableSpec::new(self.design, self.reps);
        spec.n = self.n;
        spec.q = q;
        spec.y0 = self.y0;
        spec.bias_p = self.policy.bias_p;
        spec.seed = self.seed;
        spec.parallelism = self.parallelism;
        Ok(spec)
    }
}

/// Parses a config document. `design` may come from the command line
/// instead of the document.
pub fn parse_config(text: &str, design: Option<Design>) -> Result<RunConfig> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    check_keys(&doc)?;

    let design = match (design, doc.get("design")) {
        (Some(d), _) => d,
        (None, Some(v)) => string(v, "design")?.parse()?,
        (None, None) => return Err(CliError::Config("missing design".into())),
    };
    let mode = match doc.get("mode") {
        None => Mode::Arru,
        Some(v) => match string(v, "mode")?.to_ascii_lowercase().as_str() {
            "arru" => Mode::Arru,
            "mrru" => Mode::Mrru,
            "rru" => Mode::Rru,
            other => return Err(CliError::Config(format!("unknown mode '{other}', expected arru, mrru or rru"))),
        },
    };

    let n = opt_int(&doc, "n")?.unwrap_or(200);
    if n < 1 {
        return Err(CliError::Config("n must be at least 1".into()));
    }
    let seed = opt_int(&doc, "seed")?.unwrap_or(0);
    let reps = opt_int(&doc, "reps")?.map_or(DEFAULT_REPS, |r| r as usize);
    if reps < 1 {
        return Err(CliError::Config("reps must be at least 1".into()));
    }
    let parallelism = opt_int(&doc, "parallelism")?.map_or(1, |p| p as usize);
    if parallelism < 1 {
        return Err(CliError::Config("parallelism must be at least 1".into()));
    }

    let y0 = match doc.get("y0") {
        None => (2.0, 2.0),
        Some(Value::Array(a)) if a.len() == 2 => (number(&a[0], "y0")?, number(&a[1], "y0")?),
        Some(_) => return Err(CliError::Config("y0 must be an array of two numbers".into())),
    };
    if !(y0.0 > 0.0 && y0.1 > 0.0) {
        return Err(CliError::Config(format!("y0 > 0 violated: got ({}, {})", y0.0, y0.1)));
    }

    let q = opt_number(&doc, "q")?.unwrap_or(1.25);
    if !(q > 1.0) || !q.is_finite() {
        return Err(CliError::Config(format!("q > 1 violated: got {q}")));
    }
    let schedule = match doc.get("schedule").map(|v| string(v, "schedule")).transpose()? {
        None | Some("exponential") => Schedule::Exponential { q },
        Some("every_step") => Schedule::EveryStep,
        Some(other) => {
            return Err(CliError::Config(format!("unknown schedule '{other}', expected exponential or every_step")))
        }
    };

    let mut policy = TargetPolicy::new(design.eta());
    if let Some(p) = opt_number(&doc, "bias_p")? {
        policy.bias_p = p;
    }
    if !(policy.bias_p > 0.0 && policy.bias_p <= 1.0) {
        return Err(CliError::Config(format!("bias_p in (0, 1] violated: got {}", policy.bias_p)));
    }
    if let Some(e) = opt_number(&doc, "clamp_eps")? {
        policy.clamp_eps = e;
    }
    if let Some(fallback) = section(&doc, "fallback")? {
        if let Some(p) = opt_number(fallback, "p")? {
            policy.fallback_p = p;
        }
        if let Some(e) = opt_number(fallback, "eta")? {
            policy.fallback_eta = e;
        }
        if let Some(s) = opt_number(fallback, "sigma2")? {
            policy.fallback_sigma2 = s;
        }
    }
    policy.validate()?;

    let default_utility = design.family().default_utility::<f64>();
    let utility = match section(&doc, "utility")? {
        None => default_utility,
        Some(u) => {
            let kind = match u.get("kind").map(|v| string(v, "utility.kind")).transpose()? {
                None => default_utility.kind(),
                Some("affine") => UtilityKind::Affine,
                Some("clamp") => UtilityKind::Clamp,
                Some(other) => {
                    return Err(CliError::Config(format!("unknown utility kind '{other}', expected affine or clamp")))
                }
            };
            let a = opt_number(u, "a")?.unwrap_or(default_utility.a());
            let b = opt_number(u, "b")?.unwrap_or(default_utility.b());
            UtilitySpec::new(kind, a, b)?
        }
    };

    let initial_rho = match section(&doc, "thresholds")? {
        None => [0.5, 0.5],
        Some(t) => {
            let r1 = opt_number(t, "rho1")?.unwrap_or(0.5);
            let r2 = opt_number(t, "rho2")?.unwrap_or(r1.min(0.5));
            [r1, r2]
        }
    };

    let arms = parse_arms(&doc, design)?;

    Ok(RunConfig { design, mode, n, seed, reps, parallelism, y0, schedule, policy, utility, initial_rho, arms })
}

fn parse_arms(doc: &Table, design: Design) -> Result<Option<[ResponseModel<f64>; 2]>> {
    let (own, other): (&[&str], &[&str]) = if design.is_bernoulli() {
        (&["p1", "p2"], &["m1", "m2", "var1", "var2"])
    } else {
        (&["m1", "var1", "m2", "var2"], &["p1", "p2"])
    };
    let foreign: Vec<&str> = other.iter().copied().filter(|k| doc.contains_key(*k)).collect();
    if !foreign.is_empty() {
        return Err(CliError::Config(format!(
            "keys {} do not apply to design {:?}",
            foreign.join(", "),
            design
        )));
    }
    let present: Vec<&str> = own.iter().copied().filter(|k| doc.contains_key(*k)).collect();
    if present.is_empty() {
        return Ok(None);
    }
    let missing: Vec<&str> = own.iter().copied().filter(|k| !doc.contains_key(*k)).collect();
    if !missing.is_empty() {
        return Err(CliError::Config(format!("missing arm parameters {}", missing.join(", "))));
    }
    let get = |k: &str| number(&doc[k], k);
    let arms = if design.is_bernoulli() {
        [ResponseModel::bernoulli(get("p1")?)?, ResponseModel::bernoulli(get("p2")?)?]
    } else {
        [
            ResponseModel::gaussian(get("m1")?, get("var1")?)?,
            ResponseModel::gaussian(get("m2")?, get("var2")?)?,
        ]
    };
    Ok(Some(arms))
}

fn check_keys(doc: &Table) -> Result<()> {
    let mut unknown = BTreeSet::new();
    collect_unknown(doc, TOP_KEYS, "", &mut unknown);
    for (name, allowed) in [("utility", UTILITY_KEYS), ("thresholds", THRESHOLD_KEYS), ("fallback", FALLBACK_KEYS)] {
        if let Some(Value::Table(t)) = doc.get(name) {
            collect_unknown(t, allowed, &format!("{name}."), &mut unknown);
        }
    }
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(format!("unknown keys: {}", unknown.into_iter().collect::<Vec<_>>().join(", "))))
    }
}

fn collect_unknown(t: &Table, allowed: &[&str], prefix: &str, out: &mut BTreeSet<String>) {
    for key in t.keys() {
        if !allowed.contains(&key.as_str()) {
            out.insert(format!("{prefix}{key}"));
        }
    }
}

fn section<'a>(doc: &'a Table, name: &str) -> Result<Option<&'a Table>> {
    match doc.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(CliError::Config(format!("{name} must be a section"))),
    }
}

fn string<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| CliError::Config(format!("{key} must be a string")))
}

fn number(v: &Value, key: &str) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(CliError::Config(format!("{key} must be a number"))),
    }
}

fn opt_number(t: &Table, key: &str) -> Result<Option<f64>> {
    t.get(key).map(|v| number(v, key)).transpose()
}

fn opt_int(t: &Table, key: &str) -> Result<Option<u64>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
        Some(_) => Err(CliError::Config(format!("{key} must be a non-negative integer"))),
    }
}
