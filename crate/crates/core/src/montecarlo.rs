//! Replication harness: seeded independent runs, aggregation and output.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, UrnError};
use crate::format::sig12;
use crate::rng::{derive_seed, Xoshiro256PlusPlus};
use crate::scalar::Scalar;
use crate::sim::{SimConfig, Simulator};
use crate::sum::CompensatedSum;
use crate::targets::{mle, ArmParams, ModelKind};
use crate::urn::Color;

/// Endpoints of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub rep_index: usize,
    pub horizon: u64,
    /// `N_1 / n`
    pub allocation_fraction: f64,
    /// Final maximum-likelihood estimates per arm.
    pub theta_hat: [ArmParams<f64>; 2],
    /// `rho_bar` of the superior arm's threshold.
    pub rho_bar_final: f64,
    pub rho_bar: [f64; 2],
    /// Live thresholds after the last step.
    pub rho1_final: f64,
    pub rho2_final: f64,
    pub final_y: f64,
    pub final_z: f64,
    pub increment_violations: u64,
}

impl ReplicationSummary {
    /// Summary of a simulator that has finished its run.
    pub fn from_simulator<F: Scalar, R>(rep_index: usize, sim: &Simulator<F, R>) -> Self
    where
        R: crate::rng::RandomStream,
    {
        let config = sim.config();
        let state = sim.state();
        let thresholds = sim.thresholds();
        let policy = &config.policy;
        let kinds = config.kinds();
        let params = |arm: Color| {
            let p = mle(sim.estimates().arm(arm), kinds[arm.index()], policy);
            ArmParams { mean: p.mean.as_f64(), variance: p.variance.as_f64(), fallback: p.fallback }
        };
        let active = thresholds.active();
        let rho_bar = thresholds.rho_bar().unwrap_or(active);
        let rho_bar = [rho_bar[0].as_f64(), rho_bar[1].as_f64()];
        let live = thresholds.live();
        Self {
            rep_index,
            horizon: state.step_index,
            allocation_fraction: state.allocation_fraction().unwrap_or(0.0),
            theta_hat: [params(Color::Red), params(Color::White)],
            rho_bar_final: rho_bar[config.superior_arm().index()],
            rho_bar,
            rho1_final: live[0].as_f64(),
            rho2_final: live[1].as_f64(),
            final_y: state.total().as_f64(),
            final_z: state.z().as_f64(),
            increment_violations: sim.increment_violations(),
        }
    }
}

/// Simulator for replication `rep_index`, seeded with
/// `derive_seed(config.seed, rep_index)`.
pub fn replication_simulator<F: Scalar>(config: &SimConfig<F>, rep_index: usize) -> Result<Simulator<F>> {
    let seed = derive_seed(config.seed, rep_index as u64);
    Simulator::with_rng(config.clone(), Xoshiro256PlusPlus::seed_from_u64(seed))
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic with a non-string payload".to_string()
    }
}

/// Runs `job` on `reps` freshly seeded simulators and returns the results
/// in replication order.
///
/// `parallelism == 1` runs on the calling thread. Results never depend on
/// the thread count. A panicking replication aborts the batch and is
/// reported by index (the lowest failing index when several fail).
pub fn run_replications_with<F, T, J>(config: &SimConfig<F>, reps: usize, parallelism: usize, job: J) -> Result<Vec<T>>
where
    F: Scalar,
    T: Send,
    J: Fn(usize, Simulator<F>) -> T + Sync,
{
    if reps == 0 {
        return Err(UrnError::Usage("reps must be at least 1".into()));
    }
    if parallelism == 0 {
        return Err(UrnError::Usage("parallelism must be at least 1".into()));
    }
    config.validate()?;
    let one = |i: usize| -> Result<T> {
        let sim = replication_simulator(config, i)?;
        catch_unwind(AssertUnwindSafe(|| job(i, sim)))
            .map_err(|p| UrnError::Replication { rep_index: i, message: panic_message(p) })
    };
    let results: Vec<Result<T>> = if parallelism == 1 {
        (0..reps).map(one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| UrnError::Usage(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..reps).into_par_iter().map(one).collect())
    };
    results.into_iter().collect()
}

/// Runs `reps` full trajectories and summarizes each.
pub fn run_replications<F: Scalar>(config: &SimConfig<F>, reps: usize, parallelism: usize) -> Result<Vec<ReplicationSummary>> {
    run_replications_with(config, reps, parallelism, |i, mut sim| {
        sim.run(|_| {});
        ReplicationSummary::from_simulator(i, &sim)
    })
}

/// Aggregate of one metric over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    /// Sample standard deviation (divisor `N - 1`; zero for one value).
    pub sd: f64,
    /// Root-mean-square error against `target`, when one was supplied.
    pub rmse: Option<f64>,
    pub target: Option<f64>,
    pub count: usize,
}

impl MetricStats {
    pub fn from_values(values: &[f64], target: Option<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(UrnError::Usage("cannot aggregate an empty list".into()));
        }
        let n = values.len() as f64;
        let mean = values.iter().copied().collect::<CompensatedSum<f64>>().value() / n;
        let ss = values.iter().map(|v| (v - mean) * (v - mean)).collect::<CompensatedSum<f64>>().value();
        let sd = if values.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
        let rmse = target.map(|t| {
            let sq = values.iter().map(|v| (v - t) * (v - t)).collect::<CompensatedSum<f64>>().value();
            (sq / n).sqrt()
        });
        Ok(Self { mean, sd, rmse, target, count: values.len() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub metrics: BTreeMap<String, MetricStats>,
    pub rep_count: usize,
    pub fingerprint: String,
}

/// Named per-replication values: allocation, estimator columns, `rho_bar`
/// and the final urn proportion.
pub fn summary_metrics(summary: &ReplicationSummary, kinds: [ModelKind; 2]) -> Vec<(String, f64)> {
    let mut out = vec![("allocation_fraction".to_string(), summary.allocation_fraction)];
    for (i, kind) in kinds.iter().enumerate() {
        let theta = &summary.theta_hat[i];
        match kind {
            ModelKind::Bernoulli => out.push((format!("p{}_hat", i + 1), theta.mean)),
            ModelKind::Gaussian => {
                out.push((format!("m{}_hat", i + 1), theta.mean));
                out.push((format!("sigma2_{}_hat", i + 1), theta.variance));
            }
        }
    }
    out.push(("rho_bar_final".to_string(), summary.rho_bar_final));
    out.push(("final_z".to_string(), summary.final_z));
    out
}

/// True values of every metric in [`summary_metrics`].
pub fn default_targets<F: Scalar>(config: &SimConfig<F>) -> BTreeMap<String, f64> {
    let limit = config.limit_proportion();
    let mut t = BTreeMap::new();
    t.insert("allocation_fraction".to_string(), limit);
    t.insert("rho_bar_final".to_string(), limit);
    t.insert("final_z".to_string(), limit);
    for (i, arm) in config.arms.iter().enumerate() {
        let p = arm.true_params();
        match arm.kind() {
            ModelKind::Bernoulli => {
                t.insert(format!("p{}_hat", i + 1), p.mean.as_f64());
            }
            ModelKind::Gaussian => {
                t.insert(format!("m{}_hat", i + 1), p.mean.as_f64());
                t.insert(format!("sigma2_{}_hat", i + 1), p.variance.as_f64());
            }
        }
    }
    t
}

/// Aggregates summaries metric by metric, in replication order.
pub fn summarize(
    fingerprint: &str,
    summaries: &[ReplicationSummary],
    kinds: [ModelKind; 2],
    targets: &BTreeMap<String, f64>,
) -> Result<AggregateRow> {
    if summaries.is_empty() {
        return Err(UrnError::Usage("cannot summarize an empty list of replications".into()));
    }
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for s in summaries {
        for (name, v) in summary_metrics(s, kinds) {
            columns.entry(name).or_default().push(v);
        }
    }
    let metrics = columns
        .into_iter()
        .map(|(name, values)| {
            let stats = MetricStats::from_values(&values, targets.get(&name).copied())?;
            Ok((name, stats))
        })
        .collect::<Result<_>>()?;
    Ok(AggregateRow { metrics, rep_count: summaries.len(), fingerprint: fingerprint.to_string() })
}

/// SHA-256 of the canonical JSON serialization of `config`, in hex.
pub fn config_fingerprint<F: Scalar + Serialize>(config: &SimConfig<F>) -> String {
    let canonical = serde_json::to_vec(config).expect("configurations serialize");
    hex(&Sha256::digest(canonical))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes one CSV row per replication.
pub fn write_replications_csv<W: Write>(
    mut out: W,
    summaries: &[ReplicationSummary],
    kinds: [ModelKind; 2],
) -> io::Result<()> {
    let Some(first) = summaries.first() else {
        return writeln!(out, "rep_index");
    };
    let names: Vec<String> = summary_metrics(first, kinds).into_iter().map(|(n, _)| n).collect();
    writeln!(out, "rep_index,{}", names.join(","))?;
    for s in summaries {
        let values: Vec<String> = summary_metrics(s, kinds).into_iter().map(|(_, v)| sig12(v)).collect();
        writeln!(out, "{},{}", s.rep_index, values.join(","))?;
    }
    Ok(())
}

/// `x` rounded to 12 significant digits, so JSON output is as stable as
/// the CSV output.
pub fn round12(x: f64) -> f64 {
    sig12(x).parse().unwrap_or(x)
}

/// Summary document of a Monte Carlo batch.
pub fn summary_json<F: Scalar + Serialize>(
    config: &SimConfig<F>,
    row: &AggregateRow,
    wall_time_seconds: Option<f64>,
) -> serde_json::Value {
    let metrics: serde_json::Map<String, serde_json::Value> = row
        .metrics
        .iter()
        .map(|(name, m)| {
            let num = |x: f64| serde_json::Value::from(round12(x));
            let opt = |x: Option<f64>| x.map_or(serde_json::Value::Null, num);
            (
                name.clone(),
                serde_json::json!({
                    "mean": num(m.mean),
                    "sd": num(m.sd),
                    "rmse": opt(m.rmse),
                    "target": opt(m.target),
                }),
            )
        })
        .collect();
    serde_json::json!({
        "config_echo": config,
        "fingerprint": row.fingerprint,
        "reps": row.rep_count,
        "metrics": metrics,
        "wall_time_seconds": wall_time_seconds,
        "seed": config.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::Schedule;
    use crate::sim::{simulate_trajectory, Mode};
    use crate::targets::{EtaKind, ResponseModel, TargetPolicy};
    use crate::urn::UtilitySpec;

    fn config(horizon: u64) -> SimConfig<f64> {
        SimConfig {
            y1_0: 2.0,
            y2_0: 2.0,
            horizon,
            mode: Mode::Arru,
            arms: [ResponseModel::Bernoulli { p: 0.9 }, ResponseModel::Bernoulli { p: 0.7 }],
            utility: UtilitySpec::affine(0.1, 1.0).unwrap(),
            policy: TargetPolicy::new(EtaKind::Wei),
            schedule: Schedule::Exponential { q: 1.25 },
            seed: 99,
            initial_rho: [0.5, 0.5],
        }
    }

    #[test]
    fn single_rep_matches_direct_run() {
        let c = config(300);
        let s = run_replications(&c, 1, 1).unwrap();
        let mut direct = c.clone();
        direct.seed = derive_seed(c.seed, 0);
        let t = simulate_trajectory(&direct).unwrap();
        let last = t.final_state();
        assert_eq!(s[0].final_y, last.total());
        assert_eq!(s[0].allocation_fraction, last.allocation_fraction().unwrap());
        assert_eq!(s[0].rho_bar, t.records.last().unwrap().rho_bar);
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let c = config(200);
        let a = run_replications(&c, 37, 1).unwrap();
        let b = run_replications(&c, 37, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, s)| s.rep_index == i));
    }

    #[test]
    fn rejects_zero_reps_and_reports_panics() {
        assert!(matches!(run_replications(&config(10), 0, 1), Err(UrnError::Usage(_))));
        let err = run_replications_with(&config(10), 8, 2, |i, _| {
            if i == 5 {
                panic!("boom");
            }
            i
        })
        .unwrap_err();
        assert_eq!(err, UrnError::Replication { rep_index: 5, message: "boom".into() });
    }

    #[test]
    fn metric_examples() {
        let m = MetricStats::from_values(&[0.4, 0.5, 0.6], Some(0.5)).unwrap();
        assert!((m.mean - 0.5).abs() < 1e-15);
        assert!((m.sd - 0.1).abs() < 1e-15);
        let m = MetricStats::from_values(&[0.3], Some(0.5)).unwrap();
        assert_eq!((m.mean, m.sd), (0.3, 0.0));
        assert!((m.rmse.unwrap() - 0.2).abs() < 1e-15);
        let m = MetricStats::from_values(&[0.5; 4], Some(0.5)).unwrap();
        assert_eq!((m.mean, m.sd, m.rmse), (0.5, 0.0, Some(0.0)));
        assert!(MetricStats::from_values(&[], None).is_err());
    }

    #[test]
    fn rmse_decomposes() {
        let values: Vec<f64> = (0..57).map(|i| ((i * 37) % 11) as f64 / 7.0).collect();
        let m = MetricStats::from_values(&values, Some(0.3)).unwrap();
        let n = values.len() as f64;
        let rhs = (m.mean - 0.3).powi(2) + m.sd * m.sd * (n - 1.0) / n;
        assert!((m.rmse.unwrap().powi(2) - rhs).abs() < 1e-12);
    }

    #[test]
    fn summarize_is_deterministic_and_fingerprinted() {
        let c = config(100);
        let s = run_replications(&c, 20, 1).unwrap();
        let fp = config_fingerprint(&c);
        assert_eq!(fp.len(), 64);
        let a = summarize(&fp, &s, c.kinds(), &default_targets(&c)).unwrap();
        let b = summarize(&fp, &s, c.kinds(), &default_targets(&c)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint, fp);
        assert!(a.metrics.contains_key("p1_hat"));
        assert!(summarize(&fp, &[], c.kinds(), &BTreeMap::new()).is_err());
        let mut other = c.clone();
        other.seed += 1;
        assert_ne!(config_fingerprint(&other), fp);
    }

    #[test]
    fn replication_csv_layout() {
        let c = config(50);
        let s = run_replications(&c, 3, 1).unwrap();
        let mut buf = Vec::new();
        write_replications_csv(&mut buf, &s, c.kinds()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "rep_index,allocation_fraction,p1_hat,p2_hat,rho_bar_final,final_z");
        assert_eq!(lines.len(), 4);
    }
}
