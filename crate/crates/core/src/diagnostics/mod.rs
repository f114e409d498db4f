//! Empirical checks of the urn's limit behavior.

pub mod crossing;
pub mod ks;
pub mod moments;
pub mod normal;

use serde::Serialize;

use crate::error::Result;
use crate::montecarlo::{run_replications_with, ReplicationSummary};
use crate::scalar::Scalar;
use crate::sim::SimConfig;

use crossing::{arm_sign, CrossingReport, CrossingTracker};
use moments::{CheckpointRecorder, CheckpointValue, TIdentityTracker};

/// Which per-path diagnostics a probe run collects.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbeSpec {
    /// Steps at which checkpoint snapshots are taken.
    pub checkpoints: Vec<u64>,
    /// Crossing bound `b`; `None` skips crossing times.
    pub crossing_b: Option<f64>,
}

/// Everything one replication contributes to the diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathProbe {
    pub summary: ReplicationSummary,
    pub checkpoints: Vec<CheckpointValue>,
    pub crossing: Option<CrossingReport>,
    /// Worst relative disagreement of the two forms of `T_n`.
    pub t_identity_error: f64,
}

/// Runs `reps` replications while streaming every step through the
/// requested diagnostics. Nothing proportional to the horizon is stored.
pub fn probe_replications<F: Scalar>(
    config: &SimConfig<F>,
    reps: usize,
    parallelism: usize,
    spec: &ProbeSpec,
) -> Result<Vec<PathProbe>> {
    let arm = config.superior_arm();
    let rho = config.limit_proportion();
    let q = match config.schedule {
        crate::schedule::Schedule::Exponential { q } => Some(q),
        crate::schedule::Schedule::EveryStep => None,
    };
    CheckpointRecorder::new(&spec.checkpoints, config.horizon, arm)?;
    run_replications_with(config, reps, parallelism, |i, mut sim| {
        let mut checkpoints =
            CheckpointRecorder::new(&spec.checkpoints, config.horizon, arm).expect("checked above");
        let mut crossing = match (spec.crossing_b, q) {
            (Some(b), Some(q)) => Some(CrossingTracker::new(q, config.horizon, arm, b).expect("valid q")),
            _ => None,
        };
        let mut identity = TIdentityTracker::new(rho, arm_sign(arm));
        sim.run(|r| {
            checkpoints.observe(r);
            if let Some(c) = crossing.as_mut() {
                c.observe(r);
            }
            identity.observe(r);
        });
        PathProbe {
            summary: ReplicationSummary::from_simulator(i, &sim),
            checkpoints: checkpoints.finish(),
            crossing: crossing.map(CrossingTracker::finish),
            t_identity_error: identity.worst(),
        }
    })
}

/// Reinforcement bound `b` of a configuration.
pub fn reinforcement_bound<F: Scalar>(config: &SimConfig<F>) -> f64 {
    config.utility.b().as_f64()
}
