//! Activity sensitivity indices and contingency reserves from an ensemble.

use thiserror::Error;

use crate::model::ValidatedNetwork;
use crate::montecarlo::stats::{self, StatsError};
use crate::montecarlo::Ensemble;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("project duration has zero variance; sensitivity ratios are undefined")]
    DegenerateProject,
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Correlation {
    #[default]
    Pearson,
    /// Rank correlation, for robustness comparisons.
    Spearman,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Duration,
    Cost,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Duration => "duration",
            Dimension::Cost => "cost",
        }
    }
}

/// Fraction of runs in which each node was critical.
pub fn criticality_index(ensemble: &Ensemble) -> Vec<f64> {
    let n = ensemble.n_runs() as f64;
    (0..ensemble.node_count())
        .map(|i| ensemble.critical_count(i) as f64 / n)
        .collect()
}

/// `|corr(d_i, PD)|` per node; 0 for nodes (or projects) without variance.
pub fn cruciality_index(ensemble: &Ensemble, correlation: Correlation) -> Vec<f64> {
    let pd = ensemble.total_durations();
    (0..ensemble.node_count())
        .map(|i| {
            let d = ensemble.node_durations(i);
            let r = match correlation {
                Correlation::Pearson => stats::pearson(&d, pd),
                Correlation::Spearman => stats::spearman(&d, pd),
            };
            r.abs()
        })
        .collect()
}

/// `CI_i * sd_i / sd_PD` per node.
pub fn schedule_sensitivity_index(ensemble: &Ensemble) -> Result<Vec<f64>, IndexError> {
    let sd_pd = stats::std_dev(ensemble.total_durations());
    if sd_pd == 0.0 {
        return Err(IndexError::DegenerateProject);
    }
    let ci = criticality_index(ensemble);
    Ok((0..ensemble.node_count())
        .map(|i| ci[i] * stats::std_dev(&ensemble.node_durations(i)) / sd_pd)
        .collect())
}

/// Percentile of simulated totals minus the planned value (planned duration
/// or budget). Negative for low percentiles.
pub fn contingency_reserve(
    ensemble: &Ensemble,
    percentile: f64,
    dimension: Dimension,
) -> Result<f64, IndexError> {
    let (samples, planned) = match dimension {
        Dimension::Duration => (ensemble.total_durations(), ensemble.planned_duration()),
        Dimension::Cost => (ensemble.total_costs(), ensemble.budget()),
    };
    Ok(stats::empirical_percentile(samples, percentile)? - planned)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityIndices {
    pub node: usize,
    pub id: String,
    pub name: String,
    pub criticality: f64,
    pub cruciality: f64,
    pub sensitivity: f64,
    /// Standard deviation of the node's sampled duration.
    pub sd: f64,
}

/// Indices for every node except the start and end dummies. Risk nodes are
/// reported under their risk ids.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub rows: Vec<ActivityIndices>,
    pub project_sd: f64,
}

pub fn sensitivity_report(
    network: &ValidatedNetwork,
    ensemble: &Ensemble,
    correlation: Correlation,
) -> Result<SensitivityReport, IndexError> {
    let ssi = schedule_sensitivity_index(ensemble)?;
    let ci = criticality_index(ensemble);
    let cri = cruciality_index(ensemble, correlation);
    let rows = (0..network.len())
        .filter(|&i| !network.is_terminal(i))
        .map(|i| {
            let node = network.node(i);
            ActivityIndices {
                node: i,
                id: node.id.clone(),
                name: node.name.clone(),
                criticality: ci[i],
                cruciality: cri[i],
                sensitivity: ssi[i],
                sd: stats::std_dev(&ensemble.node_durations(i)),
            }
        })
        .collect();
    Ok(SensitivityReport {
        rows,
        project_sd: stats::std_dev(ensemble.total_durations()),
    })
}
