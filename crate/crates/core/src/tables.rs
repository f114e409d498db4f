//! Reproduction of the two simulation tables: four designs, each a grid of
//! response-model parameters run under the same adaptive urn.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Result, UrnError};
use crate::format::{fixed_half_up, sig12};
use crate::montecarlo::{run_replications, MetricStats};
use crate::schedule::Schedule;
use crate::sim::{Mode, SimConfig};
use crate::targets::{EtaKind, ModelKind, ResponseModel, TargetPolicy};

/// Target design: Bernoulli responses with the Wei (`A`) or square-root
/// (`B`) target, Gaussian responses with the Neyman (`C`) or Zhang (`D`)
/// target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Design {
    A,
    B,
    C,
    D,
}

impl FromStr for Design {
    type Err = UrnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Design::A),
            "b" => Ok(Design::B),
            "c" => Ok(Design::C),
            "d" => Ok(Design::D),
            other => Err(UrnError::Config(format!("unknown design '{other}', expected one of a, b, c, d"))),
        }
    }
}

impl Design {
    pub fn eta(self) -> EtaKind<f64> {
        match self {
            Design::A => EtaKind::Wei,
            Design::B => EtaKind::RosenbergerSqrt,
            Design::C => EtaKind::Neyman,
            Design::D => EtaKind::ZhangOptimal,
        }
    }

    pub fn family(self) -> ModelKind {
        if self.is_bernoulli() {
            ModelKind::Bernoulli
        } else {
            ModelKind::Gaussian
        }
    }

    pub fn is_bernoulli(self) -> bool {
        matches!(self, Design::A | Design::B)
    }

    /// The design's parameter grid in table order.
    pub fn rows(self) -> Vec<[ResponseModel<f64>; 2]> {
        if self.is_bernoulli() {
            const PAIRS: [(f64, f64); 10] = [
                (0.9, 0.7),
                (0.9, 0.5),
                (0.9, 0.3),
                (0.9, 0.1),
                (0.7, 0.5),
                (0.7, 0.3),
                (0.7, 0.1),
                (0.5, 0.3),
                (0.5, 0.1),
                (0.3, 0.1),
            ];
            PAIRS
                .iter()
                .map(|&(p1, p2)| [ResponseModel::Bernoulli { p: p1 }, ResponseModel::Bernoulli { p: p2 }])
                .collect()
        } else {
            let mut rows = Vec::with_capacity(9);
            for (v1, v2) in [(1.0, 1.0), (4.0, 1.0), (1.0, 4.0)] {
                for m1 in [10.0, 8.0, 6.0] {
                    rows.push([
                        ResponseModel::Gaussian { mean: m1, variance: v1 },
                        ResponseModel::Gaussian { mean: 5.0, variance: v2 },
                    ]);
                }
            }
            rows
        }
    }
}

/// Protocol shared by every row of a reproduced table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableSpec {
    pub design: Design,
    /// Rows to run; `None` selects the design's full grid.
    pub rows: Option<Vec<[ResponseModel<f64>; 2]>>,
    pub reps: usize,
    pub n: u64,
    pub q: f64,
    pub y0: (f64, f64),
    pub bias_p: f64,
    pub seed: u64,
    pub parallelism: usize,
}

impl TableSpec {
    /// Defaults: `n = 200`, `q = 1.25`, `y0 = (2, 2)`, `bias_p = 0.75`.
    pub fn new(design: Design, reps: usize) -> Self {
        Self { design, rows: None, reps, n: 200, q: 1.25, y0: (2.0, 2.0), bias_p: 0.75, seed: 0, parallelism: 1 }
    }

    pub fn rows(&self) -> Vec<[ResponseModel<f64>; 2]> {
        self.rows.clone().unwrap_or_else(|| self.design.rows())
    }

    /// ARRU configuration of one row, with the default utility of its
    /// response family.
    pub fn config_for(&self, arms: [ResponseModel<f64>; 2]) -> SimConfig<f64> {
        let mut policy = TargetPolicy::new(self.design.eta());
        policy.bias_p = self.bias_p;
        SimConfig {
            y1_0: self.y0.0,
            y2_0: self.y0.1,
            horizon: self.n,
            mode: Mode::Arru,
            arms,
            utility: arms[0].kind().default_utility(),
            policy,
            schedule: Schedule::Exponential { q: self.q },
            seed: self.seed,
            initial_rho: [0.5, 0.5],
        }
    }
}

/// One reproduced row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub arms: [ResponseModel<f64>; 2],
    /// `(1 - p) + p * eta(theta)` at the true parameters.
    pub rho1: f64,
    pub allocation: MetricStats,
    /// `p_hat` per arm for Bernoulli designs, `sigma2_hat` for Gaussian ones.
    pub estimators: [MetricStats; 2],
    /// Mean allocation minus `rho1`.
    pub deviation: f64,
    pub increment_violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableReport {
    pub design: Design,
    pub reps: usize,
    pub n: u64,
    pub rows: Vec<TableRow>,
}

/// Analytic `rho1` of a row.
pub fn analytic_rho1(design: Design, bias_p: f64, arms: &[ResponseModel<f64>; 2]) -> f64 {
    let mut policy = TargetPolicy::new(design.eta());
    policy.bias_p = bias_p;
    let eta = policy.eta_value(&[arms[0].true_params(), arms[1].true_params()]).value;
    (1.0 - bias_p) + bias_p * eta
}

pub fn reproduce_table(spec: &TableSpec) -> Result<TableReport> {
    let mut rows = Vec::new();
    for arms in spec.rows() {
        if arms.iter().any(|a| a.kind() != spec.design.family()) {
            return Err(UrnError::Config("row response family does not match the design".into()));
        }
        let config = spec.config_for(arms);
        let summaries = run_replications(&config, spec.reps, spec.parallelism)?;
        let rho1 = analytic_rho1(spec.design, spec.bias_p, &arms);
        let alloc: Vec<f64> = summaries.iter().map(|s| s.allocation_fraction).collect();
        let estimator = |i: usize| -> Result<MetricStats> {
            let truth = arms[i].true_params();
            let (values, target): (Vec<f64>, f64) = if spec.design.is_bernoulli() {
                (summaries.iter().map(|s| s.theta_hat[i].mean).collect(), truth.mean)
            } else {
                (summaries.iter().map(|s| s.theta_hat[i].variance).collect(), truth.variance)
            };
            MetricStats::from_values(&values, Some(target))
        };
        let allocation = MetricStats::from_values(&alloc, Some(rho1))?;
        rows.push(TableRow {
            arms,
            rho1,
            deviation: allocation.mean - rho1,
            allocation,
            estimators: [estimator(0)?, estimator(1)?],
            increment_violations: summaries.iter().map(|s| s.increment_violations).sum(),
        });
    }
    Ok(TableReport { design: spec.design, reps: spec.reps, n: spec.n, rows })
}

fn parameter_cells(arms: &[ResponseModel<f64>; 2]) -> Vec<String> {
    arms.iter()
        .flat_map(|a| match *a {
            ResponseModel::Bernoulli { p } => vec![format!("{p}")],
            ResponseModel::Gaussian { mean, variance } => vec![format!("{mean}"), format!("{variance}")],
        })
        .collect()
}

fn parameter_header(design: Design) -> &'static [&'static str] {
    if design.is_bernoulli() {
        &["p1", "p2"]
    } else {
        &["m1", "s2_1", "m2", "s2_2"]
    }
}

impl TableReport {
    fn estimator_names(&self) -> [&'static str; 2] {
        if self.design.is_bernoulli() {
            ["p1_hat", "p2_hat"]
        } else {
            ["sigma2_1_hat", "sigma2_2_hat"]
        }
    }

    /// Fixed-width text layout: parameters, `rho1`, then `mean(sd)` columns
    /// and the deviation of the mean allocation from `rho1`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let est = self.estimator_names();
        let mut header: Vec<String> = parameter_header(self.design).iter().map(|s| s.to_string()).collect();
        header.extend(["rho1", "N1/n", est[0], est[1], "deviation"].map(String::from));
        let _ = writeln!(out, "design ({:?}), reps={}, n={}", self.design, self.reps, self.n);
        let _ = writeln!(out, "{}", header.iter().map(|h| format!("{h:>14}")).collect::<String>());
        for row in &self.rows {
            let mut cells = parameter_cells(&row.arms);
            cells.push(fixed_half_up(row.rho1, 2));
            for m in [&row.allocation, &row.estimators[0], &row.estimators[1]] {
                cells.push(format!("{:.2}({:.2})", m.mean, m.sd));
            }
            cells.push(format!("{:+.3}", row.deviation));
            let _ = writeln!(out, "{}", cells.iter().map(|c| format!("{c:>14}")).collect::<String>());
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let est = self.estimator_names();
        let mut out = String::new();
        let mut header: Vec<String> = parameter_header(self.design).iter().map(|s| s.to_string()).collect();
        header.push("rho1".into());
        for name in ["allocation", est[0], est[1]] {
            header.extend([format!("{name}_mean"), format!("{name}_sd"), format!("{name}_rmse")]);
        }
        header.push("deviation".into());
        let _ = writeln!(out, "{}", header.join(","));
        for row in &self.rows {
            let mut cells = parameter_cells(&row.arms);
            cells.push(sig12(row.rho1));
            for m in [&row.allocation, &row.estimators[0], &row.estimators[1]] {
                cells.extend([sig12(m.mean), sig12(m.sd), sig12(m.rmse.unwrap_or(f64::NAN))]);
            }
            cells.push(sig12(row.deviation));
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}
