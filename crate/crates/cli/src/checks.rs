//! The `diagnose` checks. Thresholds match the acceptance suite.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};
use urnsim::diagnostics::crossing::{crossing_event_frequency, DEFAULT_NU};
use urnsim::diagnostics::ks::ks_test;
use urnsim::diagnostics::moments::{bias_bound, clt_sample, harmonic_moment, sample_variance, CenterMode};
use urnsim::diagnostics::{probe_replications, reinforcement_bound, PathProbe, ProbeSpec};
use urnsim::format::sig12;
use urnsim::montecarlo::round12;
use urnsim::schedule::Schedule;
use urnsim::{Mode, SimConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Lln,
    Clt,
    Harmonic,
    Crossing,
    Bias,
    Increments,
}

impl FromStr for Check {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lln" => Check::Lln,
            "clt" => Check::Clt,
            "harmonic" => Check::Harmonic,
            "crossing" => Check::Crossing,
            "bias" => Check::Bias,
            "increments" => Check::Increments,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown check '{other}', expected one of lln, clt, harmonic, crossing, bias, increments"
                )))
            }
        })
    }
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Lln => "lln",
            Check::Clt => "clt",
            Check::Harmonic => "harmonic",
            Check::Crossing => "crossing",
            Check::Bias => "bias",
            Check::Increments => "increments",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check_name: String,
    pub pass: bool,
    pub observed: Value,
    pub threshold: Value,
}

/// A verdict plus an optional CSV with the underlying series.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutput {
    pub verdict: Verdict,
    pub report: Option<(String, String)>,
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(round12(x))
    } else {
        Value::Null
    }
}

/// Powers of ten from 100 up to the horizon.
fn decade_checkpoints(horizon: u64) -> Result<Vec<u64>> {
    let points: Vec<u64> = std::iter::successors(Some(100u64), |&c| c.checked_mul(10))
        .take_while(|&c| c <= horizon)
        .collect();
    if points.len() < 2 {
        return Err(CliError::Usage("this check compares checkpoints at powers of ten and needs n >= 1000".into()));
    }
    Ok(points)
}

fn series_csv(header: &str, rows: &[(u64, f64)]) -> String {
    let mut out = format!("{header}\n");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{}", sig12(*v));
    }
    out
}

fn probe(config: &SimConfig<f64>, reps: usize, parallelism: usize, spec: &ProbeSpec) -> Result<Vec<PathProbe>> {
    Ok(probe_replications(config, reps, parallelism, spec)?)
}

pub fn run_check(check: Check, config: &SimConfig<f64>, reps: usize, parallelism: usize) -> Result<CheckOutput> {
    let rho = config.limit_proportion();
    let verdict = |pass: bool, observed: Value, threshold: Value| Verdict {
        check_name: check.name().to_string(),
        pass,
        observed,
        threshold,
    };
    match check {
        Check::Increments => {
            let probes = probe(config, reps, parallelism, &ProbeSpec::default())?;
            let violations: u64 = probes.iter().map(|p| p.summary.increment_violations).sum();
            Ok(CheckOutput {
                verdict: verdict(violations == 0, json!({ "violations": violations }), json!({ "max_violations": 0 })),
                report: None,
            })
        }
        Check::Lln => {
            let probes = probe(config, reps, parallelism, &ProbeSpec::default())?;
            let count = probes.len() as f64;
            let mean_z = probes.iter().map(|p| p.summary.final_z).sum::<f64>() / count;
            if config.mode == Mode::Rru {
                // The limit is degenerate: count paths that got close to it.
                let near = probes.iter().filter(|p| (p.summary.final_z - rho).abs() < 0.1).count() as f64 / count;
                Ok(CheckOutput {
                    verdict: verdict(
                        near >= 0.9,
                        json!({ "limit": rho, "fraction_within_0.1": num(near), "mean_final_z": num(mean_z) }),
                        json!({ "min_fraction": 0.9 }),
                    ),
                    report: None,
                })
            } else {
                let dz = probes.iter().map(|p| (p.summary.final_z - rho).abs()).sum::<f64>() / count;
                let dn = probes.iter().map(|p| (p.summary.allocation_fraction - rho).abs()).sum::<f64>() / count;
                Ok(CheckOutput {
                    verdict: verdict(
                        dz < 0.02 && dn < 0.02,
                        json!({ "limit": num(rho), "mean_abs_z_error": num(dz), "mean_abs_allocation_error": num(dn), "mean_final_z": num(mean_z) }),
                        json!({ "max_mean_abs_error": 0.02 }),
                    ),
                    report: None,
                })
            }
        }
        Check::Clt => {
            let (center, tolerance) = match config.mode {
                Mode::Arru => (CenterMode::RhoBar, 0.20),
                Mode::Mrru => (CenterMode::Fixed(rho), 0.15),
                Mode::Rru => return Err(CliError::Usage("the clt check needs a thresholded urn (arru or mrru)".into())),
            };
            let probes = probe(config, reps, parallelism, &ProbeSpec::default())?;
            let summaries: Vec<_> = probes.iter().map(|p| p.summary).collect();
            let sample = clt_sample(&summaries, center, config.horizon)?;
            let target = rho * (1.0 - rho);
            let variance = sample_variance(&sample)?;
            let ks = ks_test(&sample, 0.0, target)?;
            let pass = (variance - target).abs() <= tolerance * target && ks.p_value > 0.01;
            let mut csv = String::from("rep_index,value\n");
            for (s, x) in summaries.iter().zip(&sample) {
                let _ = writeln!(csv, "{},{}", s.rep_index, sig12(*x));
            }
            Ok(CheckOutput {
                verdict: verdict(
                    pass,
                    json!({ "sample_variance": num(variance), "ks_statistic": num(ks.statistic), "ks_p_value": num(ks.p_value), "count": ks.n }),
                    json!({ "variance": num(target), "relative_tolerance": tolerance, "min_p_value": 0.01 }),
                ),
                report: Some(("clt_sample.csv".into(), csv)),
            })
        }
        Check::Harmonic => {
            let spec = ProbeSpec { checkpoints: decade_checkpoints(config.horizon)?, crossing_b: None };
            let probes = probe(config, reps, parallelism, &spec)?;
            let paths: Vec<_> = probes.into_iter().map(|p| p.checkpoints).collect();
            let series = harmonic_moment(&paths, 2.0)?;
            let base = series[0].1;
            let worst = series.iter().map(|&(_, h)| h / base).fold(0.0, f64::max);
            Ok(CheckOutput {
                verdict: verdict(
                    worst <= 2.0,
                    json!({ "max_ratio_to_first": num(worst), "series": series.iter().map(|&(n, h)| json!([n, num(h)])).collect::<Vec<_>>() }),
                    json!({ "max_ratio_to_first": 2.0 }),
                ),
                report: Some(("harmonic.csv".into(), series_csv("n,moment", &series))),
            })
        }
        Check::Bias => {
            let spec = ProbeSpec { checkpoints: decade_checkpoints(config.horizon)?, crossing_b: None };
            let probes = probe(config, reps, parallelism, &spec)?;
            let paths: Vec<_> = probes.into_iter().map(|p| p.checkpoints).collect();
            let series = bias_bound(&paths, rho)?;
            let (lo, hi) = series.iter().fold((f64::INFINITY, 0f64), |(lo, hi), &(_, x)| (lo.min(x), hi.max(x)));
            Ok(CheckOutput {
                verdict: verdict(
                    hi <= 5.0 * lo,
                    json!({ "max_over_min": num(hi / lo), "series": series.iter().map(|&(n, x)| json!([n, num(x)])).collect::<Vec<_>>() }),
                    json!({ "max_over_min": 5.0 }),
                ),
                report: Some(("bias.csv".into(), series_csv("n,scaled_mse", &series))),
            })
        }
        Check::Crossing => {
            if !matches!(config.schedule, Schedule::Exponential { .. }) {
                return Err(CliError::Usage("the crossing check needs the exponential schedule".into()));
            }
            let spec = ProbeSpec { checkpoints: Vec::new(), crossing_b: Some(reinforcement_bound(config)) };
            let probes = probe(config, reps, parallelism, &spec)?;
            let reports: Vec<_> = probes.into_iter().map(|p| p.crossing.expect("crossing requested")).collect();
            let freq = crossing_event_frequency(&reports, DEFAULT_NU)?;
            let (Some(&(j_first, f_first)), Some(&(j_last, f_last))) = (freq.first(), freq.last()) else {
                return Err(CliError::Usage("the horizon contains no complete block".into()));
            };
            Ok(CheckOutput {
                verdict: verdict(
                    f_last < f_first,
                    json!({ "first_block": j_first, "first_frequency": num(f_first), "last_block": j_last, "last_frequency": num(f_last), "nu": DEFAULT_NU }),
                    json!({ "rule": "last_frequency < first_frequency" }),
                ),
                report: Some(("crossing.csv".into(), series_csv("j,frequency", &freq))),
            })
        }
    }
}
