use std::fmt;

use super::{ControlError, ControlObservation};
use crate::montecarlo::stats;
use crate::montecarlo::Ensemble;

/// Half-width, in percentile points, of the band around the median that
/// counts as on plan.
pub const DEFAULT_TRIAD_BAND: f64 = 5.0;

/// Each run's `(time, cost)` when its earned value first reaches
/// `fraction * BAC`. At `fraction = 1` this is the run's final
/// `(duration, cost)`.
pub fn cross_section(ensemble: &Ensemble, fraction: f64) -> Result<Vec<(f64, f64)>, ControlError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ControlError::Config(format!(
            "completion fraction must be in (0, 1], got {fraction}"
        )));
    }
    let target = fraction * ensemble.budget();
    Ok(ensemble
        .runs()
        .map(|run| {
            if fraction >= 1.0 {
                (run.duration, run.cost)
            } else {
                let t = run.time_to_earn(target);
                (t, run.cost_at(t))
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleStatus {
    Ahead,
    OnTrack,
    Delayed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostStatus {
    Under,
    OnBudget,
    Over,
}

impl fmt::Display for ScheduleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleStatus::Ahead => "ahead",
            ScheduleStatus::OnTrack => "on",
            ScheduleStatus::Delayed => "delayed",
        })
    }
}

impl fmt::Display for CostStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostStatus::Under => "under",
            CostStatus::OnBudget => "on",
            CostStatus::Over => "over",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriadReport {
    /// `EV / BAC`.
    pub fraction: f64,
    pub schedule_percentile: f64,
    pub cost_percentile: f64,
    pub schedule_status: ScheduleStatus,
    pub cost_status: CostStatus,
}

/// Percentile rank of the observed time and cost among simulated runs at
/// the same completion fraction. Ties count half.
pub fn triad(
    obs: &ControlObservation,
    ensemble: &Ensemble,
    band: f64,
) -> Result<TriadReport, ControlError> {
    if !(0.0..=50.0).contains(&band) {
        return Err(ControlError::Config(format!(
            "triad band must be in [0, 50], got {band}"
        )));
    }
    let fraction = obs.fraction(ensemble.budget())?;
    let section = cross_section(ensemble, fraction)?;
    let times: Vec<f64> = section.iter().map(|p| p.0).collect();
    let costs: Vec<f64> = section.iter().map(|p| p.1).collect();
    let schedule_percentile = stats::percentile_rank(&times, obs.t)?;
    let cost_percentile = stats::percentile_rank(&costs, obs.actual_cost)?;
    let schedule_status = if schedule_percentile < 50.0 - band {
        ScheduleStatus::Ahead
    } else if schedule_percentile > 50.0 + band {
        ScheduleStatus::Delayed
    } else {
        ScheduleStatus::OnTrack
    };
    let cost_status = if cost_percentile < 50.0 - band {
        CostStatus::Under
    } else if cost_percentile > 50.0 + band {
        CostStatus::Over
    } else {
        CostStatus::OnBudget
    };
    Ok(TriadReport {
        fraction,
        schedule_percentile,
        cost_percentile,
        schedule_status,
        cost_status,
    })
}

/// Percentile curves of the cross-section over a range of completion
/// fractions: `time[p][x]` and `cost[p][x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PercentileBands {
    pub fractions: Vec<f64>,
    pub percentiles: Vec<f64>,
    pub time: Vec<Vec<f64>>,
    pub cost: Vec<Vec<f64>>,
}

pub fn percentile_bands(
    ensemble: &Ensemble,
    fractions: &[f64],
    percentiles: &[f64],
) -> Result<PercentileBands, ControlError> {
    let mut time = vec![Vec::with_capacity(fractions.len()); percentiles.len()];
    let mut cost = vec![Vec::with_capacity(fractions.len()); percentiles.len()];
    for &x in fractions {
        let section = cross_section(ensemble, x)?;
        let ts = stats::sorted(&section.iter().map(|p| p.0).collect::<Vec<_>>());
        let cs = stats::sorted(&section.iter().map(|p| p.1).collect::<Vec<_>>());
        for (j, &p) in percentiles.iter().enumerate() {
            time[j].push(stats::percentile_of_sorted(&ts, p)?);
            cost[j].push(stats::percentile_of_sorted(&cs, p)?);
        }
    }
    Ok(PercentileBands {
        fractions: fractions.to_vec(),
        percentiles: percentiles.to_vec(),
        time,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::tests::serial;
    use crate::model::Distribution;
    use crate::montecarlo::{run_ensemble, SimConfig};

    #[test]
    fn full_completion_recovers_endpoints() {
        let net = serial(&[
            Distribution::uniform(1.0, 3.0),
            Distribution::triangular(0.0, 1.0, 4.0),
        ]);
        let ens = run_ensemble(&net, &SimConfig::new(300, 2)).unwrap();
        let section = cross_section(&ens, 1.0).unwrap();
        for (k, &(t, c)) in section.iter().enumerate() {
            assert_eq!(t, ens.total_durations()[k]);
            assert_eq!(c, ens.total_costs()[k]);
        }
        assert!(cross_section(&ens, 0.0).is_err());
        assert!(cross_section(&ens, 1.5).is_err());
    }

    #[test]
    fn half_completion_of_equal_serial_activities_is_first_finish() {
        let u = Distribution::uniform(2.0, 4.0);
        let net = serial(&[u.clone(), u]);
        let ens = run_ensemble(&net, &SimConfig::new(500, 6)).unwrap();
        let a1 = net.index_of("A1").unwrap();
        let section = cross_section(&ens, 0.5).unwrap();
        for (k, &(t, c)) in section.iter().enumerate() {
            let run = ens.run(k);
            let first = run.durations[a1];
            assert!((t - first).abs() < 1e-9, "run {k}: {t} vs {first}");
            assert!((c - run.node_costs[a1]).abs() < 1e-9);
        }
    }

    #[test]
    fn point_project_cross_section_is_constant() {
        let net = serial(&[Distribution::point(2.0), Distribution::point(5.0)]);
        let ens = run_ensemble(&net, &SimConfig::new(50, 6)).unwrap();
        for x in [0.1, 0.5, 0.9] {
            let s = cross_section(&ens, x).unwrap();
            assert!(s.iter().all(|p| *p == s[0]));
        }
    }

    #[test]
    fn triad_at_the_medians_is_on_plan() {
        let net = serial(&[
            Distribution::uniform(1.0, 3.0),
            Distribution::uniform(1.0, 3.0),
        ]);
        let ens = run_ensemble(&net, &SimConfig::new(1001, 2)).unwrap();
        let x = 0.3;
        let section = cross_section(&ens, x).unwrap();
        let t_med =
            stats::empirical_percentile(&section.iter().map(|p| p.0).collect::<Vec<_>>(), 50.0)
                .unwrap();
        let c_med =
            stats::empirical_percentile(&section.iter().map(|p| p.1).collect::<Vec<_>>(), 50.0)
                .unwrap();
        let obs = ControlObservation::new(t_med, x * ens.budget(), c_med);
        let r = triad(&obs, &ens, DEFAULT_TRIAD_BAND).unwrap();
        assert_eq!(r.schedule_percentile, 50.0);
        assert_eq!(r.cost_percentile, 50.0);
        assert_eq!(r.schedule_status, ScheduleStatus::OnTrack);
        assert_eq!(r.cost_status, CostStatus::OnBudget);

        let late = ControlObservation::new(1e6, x * ens.budget(), 0.0);
        let r = triad(&late, &ens, DEFAULT_TRIAD_BAND).unwrap();
        assert_eq!(r.schedule_percentile, 100.0);
        assert_eq!(r.schedule_status, ScheduleStatus::Delayed);
        assert_eq!(r.cost_status, CostStatus::Under);

        let zero = ControlObservation::new(1.0, 0.0, 0.0);
        assert_eq!(triad(&zero, &ens, 5.0), Err(ControlError::EvZero));
    }

    #[test]
    fn bands_are_ordered() {
        let net = serial(&[
            Distribution::uniform(1.0, 3.0),
            Distribution::normal(3.0, 1.0),
        ]);
        let ens = run_ensemble(&net, &SimConfig::new(800, 2)).unwrap();
        let b = percentile_bands(&ens, &[0.25, 0.5, 1.0], &[10.0, 50.0, 90.0]).unwrap();
        for x in 0..3 {
            assert!(b.time[0][x] <= b.time[1][x] && b.time[1][x] <= b.time[2][x]);
        }
        assert!(b.time[1][0] <= b.time[1][1] && b.time[1][1] <= b.time[1][2]);
    }
}
