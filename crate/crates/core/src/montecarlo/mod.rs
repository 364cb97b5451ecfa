//! Seeded ensemble generation.
//!
//! Run `k` draws every random quantity from [`substream`]`(seed, k, slot)`,
//! where the slot is keyed by the activity's or risk's input position. Runs
//! are independent, so they are evaluated in parallel and the result does
//! not depend on the worker count. Adding a risk, or changing its
//! probability, leaves every other draw untouched.

mod sampling;
pub mod stats;

pub use sampling::{sample, substream};
pub use stats::{empirical_percentile, histogram_and_cdf, Histogram, StatsError};

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cpm::planned_value::{accrued, first_time_reaching};
use crate::cpm::{self, planned_node_values, CpmResult, DEFAULT_CRITICAL_TOLERANCE};
use crate::model::{DurationLaw, NodeKind, RiskKind, ValidatedNetwork};

pub const DEFAULT_RUNS: usize = 20_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRAJECTORY_GRID: usize = 51;
/// Default trajectory horizon as a multiple of the planned duration.
pub const DEFAULT_HORIZON_FACTOR: f64 = 1.5;

/// First substream slot used by risks; activity slots are their indices.
const RISK_SLOT_BASE: u64 = 1 << 40;

fn activity_slot(index: usize) -> u64 {
    index as u64
}

fn risk_gate_slot(index: usize) -> u64 {
    RISK_SLOT_BASE + 2 * index as u64
}

fn risk_impact_slot(index: usize) -> u64 {
    RISK_SLOT_BASE + 2 * index as u64 + 1
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("cannot start worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_runs: usize,
    pub seed: u64,
    /// Control instants over `[0, horizon]`, both ends included.
    pub trajectory_grid: usize,
    /// Defaults to 1.5 times the planned duration.
    pub horizon: Option<f64>,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub critical_tolerance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_runs: DEFAULT_RUNS,
            seed: DEFAULT_SEED,
            trajectory_grid: DEFAULT_TRAJECTORY_GRID,
            horizon: None,
            workers: None,
            critical_tolerance: DEFAULT_CRITICAL_TOLERANCE,
        }
    }
}

impl SimConfig {
    pub fn new(n_runs: usize, seed: u64) -> Self {
        SimConfig {
            n_runs,
            seed,
            ..SimConfig::default()
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    fn check(&self) -> Result<(), SimError> {
        if self.n_runs == 0 {
            return Err(SimError::Config("n_runs must be at least 1".into()));
        }
        if self.trajectory_grid < 2 {
            return Err(SimError::Config(
                "trajectory grid needs at least 2 points".into(),
            ));
        }
        if let Some(h) = self.horizon {
            if !(h.is_finite() && h > 0.0) {
                return Err(SimError::Config(format!(
                    "horizon must be positive, got {h}"
                )));
            }
        }
        if self.workers == Some(0) {
            return Err(SimError::Config("worker count must be at least 1".into()));
        }
        if self.critical_tolerance.is_nan() || self.critical_tolerance < 0.0 {
            return Err(SimError::Config("critical tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

struct RunRecord {
    durations: Vec<f64>,
    starts: Vec<f64>,
    critical: Vec<bool>,
    node_costs: Vec<f64>,
    risk_active: Vec<bool>,
    duration: f64,
    cost: f64,
    cost_trajectory: Vec<f64>,
    ev_trajectory: Vec<f64>,
}

/// Outcomes of all runs. Per-node arrays are run-major: entry
/// `k * node_count + i` belongs to run `k`, node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    config: SimConfig,
    node_count: usize,
    risk_count: usize,
    durations: Vec<f64>,
    starts: Vec<f64>,
    critical: Vec<bool>,
    node_costs: Vec<f64>,
    risk_active: Vec<bool>,
    total_duration: Vec<f64>,
    total_cost: Vec<f64>,
    grid_step: f64,
    cost_trajectories: Vec<Vec<f64>>,
    ev_trajectories: Vec<Vec<f64>>,
    planned_values: Vec<f64>,
    plan: CpmResult,
}

/// One run's outcome.
#[derive(Debug, Clone, Copy)]
pub struct RunView<'a> {
    pub index: usize,
    pub durations: &'a [f64],
    pub starts: &'a [f64],
    pub critical: &'a [bool],
    /// Realized node costs, cost-risk realizations included.
    pub node_costs: &'a [f64],
    /// One flag per risk, in input order.
    pub risk_active: &'a [bool],
    pub duration: f64,
    pub cost: f64,
    planned_values: &'a [f64],
}

impl RunView<'_> {
    /// Cumulative actual cost at time `t`; each node's cost accrues linearly
    /// over its window in this run.
    pub fn cost_at(&self, t: f64) -> f64 {
        if t >= self.duration {
            return self.cost;
        }
        accrued(self.starts, self.durations, self.node_costs, t)
    }

    /// Earned value at time `t`: each node earns its planned value linearly
    /// over its window in this run.
    pub fn earned_at(&self, t: f64) -> f64 {
        accrued(self.starts, self.durations, self.planned_values, t)
    }

    /// First time the run's earned value reaches `target`.
    pub fn time_to_earn(&self, target: f64) -> f64 {
        first_time_reaching(self.starts, self.durations, self.planned_values, target)
            .min(self.duration)
    }
}

impl Ensemble {
    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn n_runs(&self) -> usize {
        self.total_duration.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn risk_count(&self) -> usize {
        self.risk_count
    }

    /// The deterministic plan the runs are compared against.
    pub fn plan(&self) -> &CpmResult {
        &self.plan
    }

    pub fn planned_duration(&self) -> f64 {
        self.plan.duration
    }

    /// Budget at completion.
    pub fn budget(&self) -> f64 {
        self.plan.planned_cost
    }

    pub fn planned_values(&self) -> &[f64] {
        &self.planned_values
    }

    pub fn total_durations(&self) -> &[f64] {
        &self.total_duration
    }

    pub fn total_costs(&self) -> &[f64] {
        &self.total_cost
    }

    pub fn run(&self, k: usize) -> RunView<'_> {
        let n = self.node_count;
        let r = self.risk_count;
        RunView {
            index: k,
            durations: &self.durations[k * n..(k + 1) * n],
            starts: &self.starts[k * n..(k + 1) * n],
            critical: &self.critical[k * n..(k + 1) * n],
            node_costs: &self.node_costs[k * n..(k + 1) * n],
            risk_active: &self.risk_active[k * r..(k + 1) * r],
            duration: self.total_duration[k],
            cost: self.total_cost[k],
            planned_values: &self.planned_values,
        }
    }

    pub fn runs(&self) -> impl Iterator<Item = RunView<'_>> + '_ {
        (0..self.n_runs()).map(move |k| self.run(k))
    }

    /// Sampled durations of node `i` across runs.
    pub fn node_durations(&self, i: usize) -> Vec<f64> {
        self.durations
            .iter()
            .skip(i)
            .step_by(self.node_count)
            .copied()
            .collect()
    }

    /// Realized costs of node `i` across runs.
    pub fn node_costs(&self, i: usize) -> Vec<f64> {
        self.node_costs
            .iter()
            .skip(i)
            .step_by(self.node_count)
            .copied()
            .collect()
    }

    /// Runs in which node `i` was critical.
    pub fn critical_count(&self, i: usize) -> usize {
        self.critical
            .iter()
            .skip(i)
            .step_by(self.node_count)
            .filter(|&&c| c)
            .count()
    }

    /// Runs in which risk `j` fired.
    pub fn risk_activation_count(&self, j: usize) -> usize {
        self.risk_active
            .iter()
            .skip(j)
            .step_by(self.risk_count.max(1))
            .take(if self.risk_count == 0 {
                0
            } else {
                self.n_runs()
            })
            .filter(|&&a| a)
            .count()
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    /// Control instants of run `k`'s trajectories. Every run covers the
    /// configured horizon; longer runs extend the grid with the same step.
    pub fn trajectory_times(&self, k: usize) -> Vec<f64> {
        (0..self.cost_trajectories[k].len())
            .map(|j| self.grid_step * j as f64)
            .collect()
    }

    pub fn cost_trajectory(&self, k: usize) -> &[f64] {
        &self.cost_trajectories[k]
    }

    pub fn ev_trajectory(&self, k: usize) -> &[f64] {
        &self.ev_trajectories[k]
    }
}

fn simulate_run(
    network: &ValidatedNetwork,
    cfg: &SimConfig,
    planned_values: &[f64],
    grid_step: f64,
    base_points: usize,
    k: usize,
) -> RunRecord {
    let n = network.len();
    let risks = network.risks();
    let run = k as u64;
    let draw = |slot: u64| substream(cfg.seed, run, slot);

    let mut risk_active = vec![false; risks.len()];
    let mut risk_amount = vec![0.0; risks.len()];
    for (j, risk) in risks.iter().enumerate() {
        let fired = draw(risk_gate_slot(j)).random::<f64>() < risk.probability;
        risk_active[j] = fired;
        if fired {
            risk_amount[j] = sample(&risk.impact, &mut draw(risk_impact_slot(j)));
        }
    }

    let durations: Vec<f64> = network
        .nodes()
        .iter()
        .map(|node| match (&node.kind, &node.law) {
            (NodeKind::Activity { index }, DurationLaw::Plain(dist)) => {
                sample(dist, &mut draw(activity_slot(*index)))
            }
            (NodeKind::DurationRisk { index }, _) => risk_amount[*index],
            (NodeKind::Activity { .. }, DurationLaw::Gated { .. }) => {
                unreachable!("activities carry plain laws")
            }
        })
        .collect();

    let mut starts = vec![0.0; n];
    let mut late_finish = vec![0.0; n];
    let duration = cpm::schedule_into(network, &durations, &mut starts, &mut late_finish);
    let critical = (0..n)
        .map(|i| {
            cpm::total_float(starts[i], late_finish[i], durations[i]) <= cfg.critical_tolerance
        })
        .collect();

    let node_costs: Vec<f64> = network
        .nodes()
        .iter()
        .zip(&durations)
        .map(|(node, &d)| {
            let realized: f64 = node.cost_risks.iter().map(|&j| risk_amount[j]).sum();
            node.fixed_cost + node.variable_cost_rate * d + realized
        })
        .collect();
    debug_assert!(risks
        .iter()
        .enumerate()
        .all(|(j, r)| r.kind == RiskKind::Cost || risk_amount[j] == 0.0 || risk_active[j]));
    let cost: f64 = node_costs.iter().sum();

    let mut points = base_points;
    while grid_step * ((points - 1) as f64) < duration {
        points += 1;
    }
    let mut cost_trajectory = Vec::with_capacity(points);
    let mut ev_trajectory = Vec::with_capacity(points);
    for j in 0..points {
        let t = grid_step * j as f64;
        cost_trajectory.push(accrued(&starts, &durations, &node_costs, t));
        ev_trajectory.push(accrued(&starts, &durations, planned_values, t));
    }

    RunRecord {
        durations,
        starts,
        critical,
        node_costs,
        risk_active,
        duration,
        cost,
        cost_trajectory,
        ev_trajectory,
    }
}

/// Simulates `cfg.n_runs` independent realizations of the project.
pub fn run_ensemble(network: &ValidatedNetwork, cfg: &SimConfig) -> Result<Ensemble, SimError> {
    cfg.check()?;
    let plan = cpm::plan(network);
    let planned_values = planned_node_values(network, &plan.durations);
    let horizon = cfg
        .horizon
        .unwrap_or(DEFAULT_HORIZON_FACTOR * plan.duration);
    let horizon = if horizon > 0.0 { horizon } else { 1.0 };
    let grid_step = horizon / (cfg.trajectory_grid - 1) as f64;

    let simulate = || -> Vec<RunRecord> {
        (0..cfg.n_runs)
            .into_par_iter()
            .map(|k| {
                simulate_run(
                    network,
                    cfg,
                    &planned_values,
                    grid_step,
                    cfg.trajectory_grid,
                    k,
                )
            })
            .collect()
    };
    let records = match cfg.workers {
        None => simulate(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| SimError::WorkerPool(e.to_string()))?
            .install(simulate),
    };

    let n = network.len();
    let r = network.risks().len();
    let runs = records.len();
    let mut ensemble = Ensemble {
        config: cfg.clone(),
        node_count: n,
        risk_count: r,
        durations: Vec::with_capacity(runs * n),
        starts: Vec::with_capacity(runs * n),
        critical: Vec::with_capacity(runs * n),
        node_costs: Vec::with_capacity(runs * n),
        risk_active: Vec::with_capacity(runs * r),
        total_duration: Vec::with_capacity(runs),
        total_cost: Vec::with_capacity(runs),
        grid_step,
        cost_trajectories: Vec::with_capacity(runs),
        ev_trajectories: Vec::with_capacity(runs),
        planned_values,
        plan,
    };
    for rec in records {
        ensemble.durations.extend(rec.durations);
        ensemble.starts.extend(rec.starts);
        ensemble.critical.extend(rec.critical);
        ensemble.node_costs.extend(rec.node_costs);
        ensemble.risk_active.extend(rec.risk_active);
        ensemble.total_duration.push(rec.duration);
        ensemble.total_cost.push(rec.cost);
        ensemble.cost_trajectories.push(rec.cost_trajectory);
        ensemble.ev_trajectories.push(rec.ev_trajectory);
    }
    Ok(ensemble)
}
