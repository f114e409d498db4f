//! Checkpoint statistics across replications: harmonic moments of the
//! total mass, the bias of the centering sequence and standardized
//! allocation samples.

use serde::Serialize;

use crate::error::{Result, UrnError};
use crate::montecarlo::ReplicationSummary;
use crate::scalar::Scalar;
use crate::sim::{StepRecord, Trajectory};
use crate::sum::CompensatedSum;
use crate::urn::Color;

/// Snapshot of one trajectory at a checkpoint step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointValue {
    pub n: u64,
    pub total_mass: f64,
    /// `rho_bar_n` of the tracked arm.
    pub rho_bar: f64,
    /// `N_1 / n`
    pub allocation: f64,
}

/// Collects [`CheckpointValue`]s while a simulator runs.
#[derive(Debug, Clone)]
pub struct CheckpointRecorder {
    checkpoints: Vec<u64>,
    arm: Color,
    values: Vec<CheckpointValue>,
}

impl CheckpointRecorder {
    /// `checkpoints` must be positive and no later than `horizon`.
    pub fn new(checkpoints: &[u64], horizon: u64, arm: Color) -> Result<Self> {
        let mut cps = checkpoints.to_vec();
        cps.sort_unstable();
        cps.dedup();
        if let Some(&bad) = cps.iter().find(|&&c| c == 0 || c > horizon) {
            return Err(UrnError::Usage(format!("checkpoint {bad} is outside 1..={horizon}")));
        }
        Ok(Self { values: Vec::with_capacity(cps.len()), checkpoints: cps, arm })
    }

    pub fn observe<F: Scalar>(&mut self, record: &StepRecord<F>) {
        let n = record.state.step_index;
        if self.checkpoints.get(self.values.len()) == Some(&n) {
            self.values.push(CheckpointValue {
                n,
                total_mass: record.state.total().as_f64(),
                rho_bar: record.rho_bar[self.arm.index()].as_f64(),
                allocation: record.state.allocation_fraction().unwrap_or(0.0),
            });
        }
    }

    pub fn finish(self) -> Vec<CheckpointValue> {
        self.values
    }

    pub fn from_trajectory<F: Scalar>(trajectory: &Trajectory<F>, checkpoints: &[u64]) -> Result<Vec<CheckpointValue>> {
        let mut rec = Self::new(checkpoints, trajectory.len() as u64, trajectory.superior_arm())?;
        for r in &trajectory.records {
            rec.observe(r);
        }
        Ok(rec.finish())
    }
}

fn checkpoint_columns(paths: &[Vec<CheckpointValue>]) -> Result<Vec<u64>> {
    let first = paths.first().ok_or_else(|| UrnError::Usage("no trajectories supplied".into()))?;
    let cps: Vec<u64> = first.iter().map(|v| v.n).collect();
    if paths.iter().any(|p| p.len() != cps.len() || p.iter().zip(&cps).any(|(v, &n)| v.n != n)) {
        return Err(UrnError::Usage("trajectories were recorded at different checkpoints".into()));
    }
    Ok(cps)
}

fn column_mean(paths: &[Vec<CheckpointValue>], i: usize, f: impl Fn(&CheckpointValue) -> f64) -> f64 {
    paths.iter().map(|p| f(&p[i])).collect::<CompensatedSum<f64>>().value() / paths.len() as f64
}

/// Monte Carlo estimate of `E[(n / Y_n)^exponent]` at each checkpoint.
pub fn harmonic_moment(paths: &[Vec<CheckpointValue>], exponent: f64) -> Result<Vec<(u64, f64)>> {
    if !(exponent >= 0.0) {
        return Err(UrnError::Usage(format!("exponent must be nonnegative, got {exponent}")));
    }
    let cps = checkpoint_columns(paths)?;
    Ok(cps
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, column_mean(paths, i, |v| (n as f64 / v.total_mass).powf(exponent))))
        .collect())
}

/// Monte Carlo estimate of `n E|rho_bar_n - rho|^2` at each checkpoint.
pub fn bias_bound(paths: &[Vec<CheckpointValue>], rho: f64) -> Result<Vec<(u64, f64)>> {
    if paths.len() < 100 {
        return Err(UrnError::Usage(format!("the bias bound needs at least 100 trajectories, got {}", paths.len())));
    }
    let cps = checkpoint_columns(paths)?;
    Ok(cps
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, n as f64 * column_mean(paths, i, |v| (v.rho_bar - rho).powi(2))))
        .collect())
}

/// Centering of the standardized allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CenterMode {
    /// Each replication's own `rho_bar_n`.
    RhoBar,
    Fixed(f64),
}

/// `sqrt(n) (N_1/n - center)` per replication.
pub fn clt_sample(summaries: &[ReplicationSummary], center: CenterMode, n: u64) -> Result<Vec<f64>> {
    if let Some(s) = summaries.iter().find(|s| s.horizon != n) {
        return Err(UrnError::Usage(format!(
            "replication {} ran {} steps, expected {n}",
            s.rep_index, s.horizon
        )));
    }
    let root = (n as f64).sqrt();
    Ok(summaries
        .iter()
        .map(|s| {
            let c = match center {
                CenterMode::RhoBar => s.rho_bar_final,
                CenterMode::Fixed(rho) => rho,
            };
            root * (s.allocation_fraction - c)
        })
        .collect())
}

/// Sample variance with divisor `N - 1`.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(UrnError::Usage("sample variance needs two values".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().copied().collect::<CompensatedSum<f64>>().value() / n;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).collect::<CompensatedSum<f64>>().value();
    Ok(ss / (n - 1.0))
}

/// Largest disagreement between the two forms of `T_n`, scaled by
/// `max(1, Y_n)`.
#[derive(Debug, Clone, Copy)]
pub struct TIdentityTracker {
    rho: f64,
    sign: f64,
    worst: f64,
}

impl TIdentityTracker {
    pub fn new(rho: f64, sign: f64) -> Self {
        Self { rho, sign, worst: 0.0 }
    }

    pub fn observe<F: Scalar>(&mut self, record: &StepRecord<F>) {
        let s = &record.state;
        let (y1, y2, y) = (s.y1.as_f64(), s.y2.as_f64(), s.total().as_f64());
        let direct = self.sign * y * (self.rho - s.z().as_f64());
        let by_color = self.sign * (self.rho * y2 - (1.0 - self.rho) * y1);
        self.worst = self.worst.max((direct - by_color).abs() / y.max(1.0));
    }

    pub fn worst(&self) -> f64 {
        self.worst
    }
}
