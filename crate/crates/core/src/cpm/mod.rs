//! Critical path analysis on fixed durations.

mod paths;
pub(crate) mod planned_value;

pub use paths::{enumerate_paths, enumerate_paths_capped, PathMatrix, DEFAULT_PATH_CAP};
pub use planned_value::{planned_value_curve, PlannedValueCurve};

use thiserror::Error;

use crate::model::ValidatedNetwork;

/// Nodes whose total float is at most this are critical.
pub const DEFAULT_CRITICAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CpmError {
    #[error("earned value {ev} is outside [0, {budget}]")]
    EvOutOfRange { ev: f64, budget: f64 },
    #[error("network has {count} start-to-end paths, more than the cap of {cap}")]
    PathExplosion { count: u128, cap: usize },
    #[error("planned value grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
}

/// Early/late dates and floats of one schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct CpmResult {
    pub durations: Vec<f64>,
    pub early_start: Vec<f64>,
    pub early_finish: Vec<f64>,
    pub late_start: Vec<f64>,
    pub late_finish: Vec<f64>,
    pub total_float: Vec<f64>,
    pub critical: Vec<bool>,
    /// Project duration: early finish of the end dummy.
    pub duration: f64,
    /// Sum of node planned values for these durations (see
    /// [`planned_node_values`]).
    pub planned_cost: f64,
    pub tolerance: f64,
}

impl CpmResult {
    pub fn critical_nodes(&self) -> Vec<usize> {
        (0..self.critical.len())
            .filter(|&i| self.critical[i])
            .collect()
    }
}

/// Forward pass into `early_start`, backward pass into `late_finish`.
/// Returns the project duration. Nodes must be in topological order, which
/// [`ValidatedNetwork`] guarantees.
pub(crate) fn schedule_into(
    network: &ValidatedNetwork,
    durations: &[f64],
    early_start: &mut [f64],
    late_finish: &mut [f64],
) -> f64 {
    let n = network.len();
    for i in 0..n {
        early_start[i] = network
            .predecessors(i)
            .iter()
            .map(|&p| early_start[p] + durations[p])
            .fold(0.0, f64::max);
    }
    let sink = network.sink();
    let project = early_start[sink] + durations[sink];
    for i in (0..n).rev() {
        late_finish[i] = network
            .successors(i)
            .iter()
            .map(|&s| late_finish[s] - durations[s])
            .fold(project, f64::min);
    }
    project
}

pub(crate) fn total_float(early_start: f64, late_finish: f64, duration: f64) -> f64 {
    (late_finish - duration - early_start).max(0.0)
}

/// Runs both passes with the default criticality tolerance.
pub fn forward_backward(network: &ValidatedNetwork, durations: &[f64]) -> CpmResult {
    forward_backward_with_tolerance(network, durations, DEFAULT_CRITICAL_TOLERANCE)
}

pub fn forward_backward_with_tolerance(
    network: &ValidatedNetwork,
    durations: &[f64],
    tolerance: f64,
) -> CpmResult {
    let n = network.len();
    assert_eq!(durations.len(), n, "one duration per network node");
    assert!(
        durations.iter().all(|d| d.is_finite() && *d >= 0.0),
        "durations must be finite and non-negative"
    );
    let mut early_start = vec![0.0; n];
    let mut late_finish = vec![0.0; n];
    let duration = schedule_into(network, durations, &mut early_start, &mut late_finish);
    let early_finish: Vec<f64> = (0..n).map(|i| early_start[i] + durations[i]).collect();
    let late_start: Vec<f64> = (0..n).map(|i| late_finish[i] - durations[i]).collect();
    let total_float: Vec<f64> = (0..n)
        .map(|i| self::total_float(early_start[i], late_finish[i], durations[i]))
        .collect();
    let critical = total_float.iter().map(|&f| f <= tolerance).collect();
    let planned_cost = planned_node_values(network, durations).iter().sum();
    CpmResult {
        durations: durations.to_vec(),
        early_start,
        early_finish,
        late_start,
        late_finish,
        total_float,
        critical,
        duration,
        planned_cost,
        tolerance,
    }
}

/// The deterministic plan: CPM on expected durations, risk nodes included
/// at `p * mean(impact)`.
pub fn plan(network: &ValidatedNetwork) -> CpmResult {
    forward_backward(network, &network.expected_durations())
}

/// Per-node planned value for the given durations:
/// `fixed + rate * duration + sum(p * mean(impact))` over the node's cost risks.
pub fn planned_node_values(network: &ValidatedNetwork, durations: &[f64]) -> Vec<f64> {
    network
        .nodes()
        .iter()
        .zip(durations)
        .map(|(node, &d)| {
            let expected_risk: f64 = node
                .cost_risks
                .iter()
                .map(|&k| {
                    let r = &network.risks()[k];
                    r.probability * r.impact.mean()
                })
                .sum();
            node.fixed_cost + node.variable_cost_rate * d + expected_risk
        })
        .collect()
}
