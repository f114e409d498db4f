//! Scaled distance between the urn and its frozen threshold, and the
//! block-wise crossing times built on it.
//!
//! Block `j` spans steps `floor(q^j) + 1 ..= floor(q^(j+1))` and uses the
//! threshold frozen at `floor(q^j)`. Within it,
//! `delta_k = sign * (rho_tilde - Z)` and `tau_j` is the first `k` with
//! `Y * delta_k` in `[-b, 0]`. Blocks of length zero are skipped, so blocks
//! tile the steps after the first refresh.

use serde::Serialize;

use crate::error::{Result, UrnError};
use crate::scalar::Scalar;
use crate::schedule::PowerFloors;
use crate::sim::{StepRecord, Trajectory};
use crate::urn::Color;

/// Default exponent of the crossing window `r_j = q^(j (1 + nu) / 2)`.
pub const DEFAULT_NU: f64 = 0.25;

/// `+1` when red is the superior arm, `-1` otherwise.
pub fn arm_sign(arm: Color) -> f64 {
    match arm {
        Color::Red => 1.0,
        Color::White => -1.0,
    }
}

/// `T_n = sign * Y_n (rho - Z_n)` for every recorded step.
pub fn t_process<F: Scalar>(trajectory: &Trajectory<F>, rho: f64, sign: f64) -> Vec<f64> {
    trajectory
        .records
        .iter()
        .map(|r| sign * r.state.total().as_f64() * (rho - r.state.z().as_f64()))
        .collect()
}

/// The same process written as `sign * (rho Y_2 - (1 - rho) Y_1)`.
pub fn t_process_by_color<F: Scalar>(trajectory: &Trajectory<F>, rho: f64, sign: f64) -> Vec<f64> {
    trajectory
        .records
        .iter()
        .map(|r| sign * (rho * r.state.y2.as_f64() - (1.0 - rho) * r.state.y1.as_f64()))
        .collect()
}

/// Step range of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockBounds {
    pub j: u64,
    /// `floor(q^j)`: the refresh time whose threshold the block uses.
    pub start: u64,
    /// `floor(q^(j+1))`
    pub end: u64,
}

impl BlockBounds {
    /// Block length `d_j`.
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Non-empty blocks that end no later than `horizon`.
pub fn block_bounds(q: f64, horizon: u64) -> Result<Vec<BlockBounds>> {
    let mut powers = PowerFloors::new(q, 1)?.peekable();
    let mut blocks = Vec::new();
    while let Some((j, start)) = powers.next() {
        let (_, end) = *powers.peek().expect("powers never end");
        if end > horizon {
            break;
        }
        if end > start {
            blocks.push(BlockBounds { j, start, end });
        }
    }
    Ok(blocks)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaBlock {
    pub bounds: BlockBounds,
    pub frozen: f64,
    /// `delta_{j,k}` for `k = 1..=d_j`.
    pub delta: Vec<f64>,
    /// `Y` at the same steps.
    pub total_mass: Vec<f64>,
}

/// Splits a trajectory into blocks of signed distances to the frozen
/// threshold of the superior arm.
pub fn delta_series<F: Scalar>(trajectory: &Trajectory<F>, q: f64) -> Result<Vec<DeltaBlock>> {
    let arm = trajectory.superior_arm();
    let sign = arm_sign(arm);
    let horizon = trajectory.len() as u64;
    let blocks = block_bounds(q, horizon)?;
    Ok(blocks
        .into_iter()
        .map(|bounds| {
            let frozen = trajectory.records[bounds.start as usize - 1].frozen[arm.index()].as_f64();
            let steps = &trajectory.records[bounds.start as usize..bounds.end as usize];
            DeltaBlock {
                bounds,
                frozen,
                delta: steps.iter().map(|r| sign * (frozen - r.state.z().as_f64())).collect(),
                total_mass: steps.iter().map(|r| r.state.total().as_f64()).collect(),
            }
        })
        .collect())
}

/// First in-block index at which the scaled distance enters `[-b, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CrossingTime {
    At(u64),
    Never,
}

impl CrossingTime {
    pub fn is_finite(&self) -> bool {
        matches!(self, CrossingTime::At(_))
    }

    /// Strictly later than `window` (`Never` always is).
    pub fn exceeds(&self, window: f64) -> bool {
        match *self {
            CrossingTime::At(k) => k as f64 > window,
            CrossingTime::Never => true,
        }
    }
}

fn in_crossing_band(scaled: f64, b: f64) -> bool {
    (-b..=0.0).contains(&scaled)
}

pub fn crossing_time(delta: &[f64], total_mass: &[f64], b: f64) -> CrossingTime {
    delta
        .iter()
        .zip(total_mass)
        .position(|(&d, &y)| in_crossing_band(y * d, b))
        .map_or(CrossingTime::Never, |i| CrossingTime::At(i as u64 + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockCrossing {
    pub bounds: BlockBounds,
    pub tau: CrossingTime,
}

impl BlockCrossing {
    /// `tau_j` for reports: `d_j + 1` stands in for "never", with the flag
    /// set to `false`.
    pub fn reported_tau(&self) -> (u64, bool) {
        match self.tau {
            CrossingTime::At(k) => (k, true),
            CrossingTime::Never => (self.bounds.len() + 1, false),
        }
    }
}

/// `r_j = q^(j (1 + nu) / 2)`.
pub fn crossing_window(q: f64, j: u64, nu: f64) -> f64 {
    q.powf(j as f64 * (1.0 + nu) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingReport {
    pub q: f64,
    pub blocks: Vec<BlockCrossing>,
}

impl CrossingReport {
    /// Blocks whose crossing time exceeds `r_j`.
    pub fn exceeded(&self, nu: f64) -> Vec<(u64, bool)> {
        self.blocks
            .iter()
            .map(|b| (b.bounds.j, b.tau.exceeds(crossing_window(self.q, b.bounds.j, nu))))
            .collect()
    }
}

/// Crossing times of every complete block of a recorded trajectory.
pub fn crossing_report<F: Scalar>(trajectory: &Trajectory<F>, q: f64, b: f64) -> Result<CrossingReport> {
    let blocks = delta_series(trajectory, q)?
        .into_iter()
        .map(|blk| BlockCrossing { bounds: blk.bounds, tau: crossing_time(&blk.delta, &blk.total_mass, b) })
        .collect();
    Ok(CrossingReport { q, blocks })
}

/// Streaming counterpart of [`crossing_report`] that needs no stored
/// trajectory.
#[derive(Debug, Clone)]
pub struct CrossingTracker {
    q: f64,
    b: f64,
    arm: Color,
    bounds: Vec<BlockBounds>,
    frozen: Vec<Option<f64>>,
    taus: Vec<CrossingTime>,
    /// First block that may still contain the next step.
    cursor: usize,
}

impl CrossingTracker {
    pub fn new(q: f64, horizon: u64, arm: Color, b: f64) -> Result<Self> {
        let bounds = block_bounds(q, horizon)?;
        let n = bounds.len();
        Ok(Self { q, b, arm, bounds, frozen: vec![None; n], taus: vec![CrossingTime::Never; n], cursor: 0 })
    }

    pub fn observe<F: Scalar>(&mut self, record: &StepRecord<F>) {
        let n = record.state.step_index;
        while self.cursor < self.bounds.len() && self.bounds[self.cursor].end < n {
            self.cursor += 1;
        }
        for i in self.cursor..self.bounds.len() {
            let blk = self.bounds[i];
            if blk.start > n {
                break;
            }
            if blk.start == n {
                self.frozen[i] = Some(record.frozen[self.arm.index()].as_f64());
            } else if self.taus[i] == CrossingTime::Never {
                let frozen = self.frozen[i].expect("block threshold captured at its start");
                let delta = arm_sign(self.arm) * (frozen - record.state.z().as_f64());
                if in_crossing_band(record.state.total().as_f64() * delta, self.b) {
                    self.taus[i] = CrossingTime::At(n - blk.start);
                }
            }
        }
    }

    pub fn finish(self) -> CrossingReport {
        let blocks = self.bounds.into_iter().zip(self.taus).map(|(bounds, tau)| BlockCrossing { bounds, tau }).collect();
        CrossingReport { q: self.q, blocks }
    }
}

/// Fraction of trajectories with `tau_j > r_j`, per block `j`.
pub fn crossing_event_frequency(reports: &[CrossingReport], nu: f64) -> Result<Vec<(u64, f64)>> {
    if reports.len() < 100 {
        return Err(UrnError::Usage(format!(
            "crossing frequencies need at least 100 trajectories, got {}",
            reports.len()
        )));
    }
    if !(nu > 0.0 && nu < 0.5) {
        return Err(UrnError::Usage(format!("nu must lie in (0, 1/2), got {nu}")));
    }
    let reference = &reports[0];
    if reports.iter().any(|r| r.q != reference.q || r.blocks.len() != reference.blocks.len()) {
        return Err(UrnError::Usage("crossing reports disagree on q or horizon".into()));
    }
    let total = reports.len() as f64;
    Ok(reference
        .blocks
        .iter()
        .enumerate()
        .map(|(i, blk)| {
            let window = crossing_window(reference.q, blk.bounds.j, nu);
            let hits = reports.iter().filter(|r| r.blocks[i].tau.exceeds(window)).count();
            (blk.bounds.j, hits as f64 / total)
        })
        .collect())
}
