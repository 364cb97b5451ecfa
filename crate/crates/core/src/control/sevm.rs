use super::triad::cross_section;
use super::{ControlError, ControlObservation};
use crate::montecarlo::stats;
use crate::montecarlo::Ensemble;

/// Neighborhood size used when none is given: 5% of the runs, at most 500.
pub fn default_neighbors(runs: usize) -> usize {
    runs.div_ceil(20).clamp(1, 500)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Mean outcome of the neighbors.
    #[default]
    NeighborMean,
    /// Least-squares line through the neighbors (final value against the
    /// control-instant value), evaluated at the observation.
    NeighborLinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SevmOptions {
    pub neighbors: usize,
    /// Percentiles reported as prediction intervals.
    pub percentiles: Vec<f64>,
    pub estimator: Estimator,
}

impl SevmOptions {
    pub fn new(neighbors: usize) -> Self {
        SevmOptions {
            neighbors,
            percentiles: vec![5.0, 50.0, 95.0],
            estimator: Estimator::NeighborMean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub run: usize,
    pub control_time: f64,
    pub control_cost: f64,
    pub final_duration: f64,
    pub final_cost: f64,
    /// Standardized distance to the observation.
    pub distance: f64,
    /// Finishes after the planned duration.
    pub late: bool,
    /// Finishes above the budget.
    pub overrun: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SevmForecast {
    pub fraction: f64,
    /// Estimated final duration.
    pub duration: f64,
    /// Estimated final cost.
    pub cost: f64,
    /// `(percentile, value)` of neighbors' final durations.
    pub duration_interval: Vec<(f64, f64)>,
    pub cost_interval: Vec<(f64, f64)>,
    pub p_late: f64,
    pub p_overrun: f64,
    /// Nearest first.
    pub neighbors: Vec<Neighbor>,
}

fn linear_prediction(xs: &[f64], ys: &[f64], at: f64) -> f64 {
    let vx = stats::variance(xs);
    let my = stats::mean(ys);
    if vx == 0.0 {
        return my;
    }
    let slope = stats::covariance(xs, ys) / vx;
    my + slope * (at - stats::mean(xs))
}

/// Forecasts the final duration and cost from the `k` simulated runs
/// nearest to the observation at the same completion fraction. Distances
/// are Euclidean after scaling each axis by its standard deviation over
/// the cross-section; ties go to the lower run index.
pub fn sevm_forecast(
    obs: &ControlObservation,
    ensemble: &Ensemble,
    options: &SevmOptions,
) -> Result<SevmForecast, ControlError> {
    let runs = ensemble.n_runs();
    let k = options.neighbors;
    if k == 0 {
        return Err(ControlError::Config(
            "at least one neighbor is required".into(),
        ));
    }
    if k > runs {
        return Err(ControlError::KTooLarge { k, runs });
    }
    let fraction = obs.fraction(ensemble.budget())?;
    let section = cross_section(ensemble, fraction)?;
    let times: Vec<f64> = section.iter().map(|p| p.0).collect();
    let costs: Vec<f64> = section.iter().map(|p| p.1).collect();
    let scale = |sd: f64| if sd > 0.0 { sd } else { 1.0 };
    let (st, sc) = (scale(stats::std_dev(&times)), scale(stats::std_dev(&costs)));

    let mut ranked: Vec<(f64, usize)> = section
        .iter()
        .enumerate()
        .map(|(r, &(t, c))| {
            let dt = (t - obs.t) / st;
            let dc = (c - obs.actual_cost) / sc;
            ((dt * dt + dc * dc).sqrt(), r)
        })
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ranked.truncate(k);

    let planned_duration = ensemble.planned_duration();
    let budget = ensemble.budget();
    let neighbors: Vec<Neighbor> = ranked
        .iter()
        .map(|&(distance, r)| {
            let final_duration = ensemble.total_durations()[r];
            let final_cost = ensemble.total_costs()[r];
            Neighbor {
                run: r,
                control_time: section[r].0,
                control_cost: section[r].1,
                final_duration,
                final_cost,
                distance,
                late: final_duration > planned_duration,
                overrun: final_cost > budget,
            }
        })
        .collect();

    let finals_d: Vec<f64> = neighbors.iter().map(|n| n.final_duration).collect();
    let finals_c: Vec<f64> = neighbors.iter().map(|n| n.final_cost).collect();
    let (duration, cost) = match options.estimator {
        Estimator::NeighborMean => (stats::mean(&finals_d), stats::mean(&finals_c)),
        Estimator::NeighborLinear => {
            let ctl_t: Vec<f64> = neighbors.iter().map(|n| n.control_time).collect();
            let ctl_c: Vec<f64> = neighbors.iter().map(|n| n.control_cost).collect();
            (
                linear_prediction(&ctl_t, &finals_d, obs.t),
                linear_prediction(&ctl_c, &finals_c, obs.actual_cost),
            )
        }
    };
    let sorted_d = stats::sorted(&finals_d);
    let sorted_c = stats::sorted(&finals_c);
    let mut duration_interval = Vec::with_capacity(options.percentiles.len());
    let mut cost_interval = Vec::with_capacity(options.percentiles.len());
    for &p in &options.percentiles {
        duration_interval.push((p, stats::percentile_of_sorted(&sorted_d, p)?));
        cost_interval.push((p, stats::percentile_of_sorted(&sorted_c, p)?));
    }
    let count = neighbors.len() as f64;
    let p_late = neighbors.iter().filter(|n| n.late).count() as f64 / count;
    let p_overrun = neighbors.iter().filter(|n| n.overrun).count() as f64 / count;

    Ok(SevmForecast {
        fraction,
        duration,
        cost,
        duration_interval,
        cost_interval,
        p_late,
        p_overrun,
        neighbors,
    })
}
