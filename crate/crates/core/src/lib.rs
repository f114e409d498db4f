//! Simulation of two-color randomly reinforced urns whose reinforcement is
//! gated by fixed or data-driven thresholds.
//!
//! The urn dynamics, estimators and threshold schedule are generic over the
//! scalar type ([`Scalar`], implemented for `f32` and `f64`). Aggregation
//! and diagnostics work in `f64`. The aliases below fix the scalar to `f64`.

pub mod diagnostics;
pub mod error;
pub mod format;
pub mod montecarlo;
pub mod rng;
pub mod scalar;
pub mod schedule;
pub mod sim;
pub mod sum;
pub mod tables;
pub mod targets;
pub mod urn;

pub use error::{Result, UrnError};
pub use montecarlo::{run_replications, summarize, AggregateRow, MetricStats, ReplicationSummary};
pub use rng::{derive_seed, RandomStream, Xoshiro256PlusPlus};
pub use scalar::Scalar;
pub use schedule::{k_n, update_times, Schedule, ThresholdState};
pub use sim::{simulate_trajectory, Mode, SimConfig, Simulator, StepRecord, Trajectory};
pub use targets::{ArmEstimates, EtaKind, ModelKind, ResponseModel, TargetPolicy};
pub use urn::{draw_color, step, Color, UrnState, UtilityKind, UtilitySpec};

pub type Config = SimConfig<f64>;
pub type State = UrnState<f64>;
pub type Utility = UtilitySpec<f64>;
pub type Model = ResponseModel<f64>;
pub type Policy = TargetPolicy<f64>;
pub type Estimates = ArmEstimates<f64>;
pub type Thresholds = ThresholdState<f64>;
pub type Sim = Simulator<f64>;
pub type Path = Trajectory<f64>;
