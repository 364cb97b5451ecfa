//! Stochastic monitoring of a project in execution.
//!
//! Risk baselines spread the simulated schedule and cost variance over the
//! planned windows; control indices compare an observed deviation with that
//! budget. Triad places an observation among simulated runs at the same
//! completion fraction, and the forecaster predicts the outcome from the
//! runs closest to the observation.

mod baseline;
mod sevm;
mod triad;

pub use baseline::{activity_risk_index, risk_baselines, AriEntry, RiskBaseline};
pub use sevm::{default_neighbors, sevm_forecast, Estimator, Neighbor, SevmForecast, SevmOptions};
pub use triad::{
    cross_section, percentile_bands, triad, CostStatus, PercentileBands, ScheduleStatus,
    TriadReport, DEFAULT_TRIAD_BAND,
};

use thiserror::Error;

use crate::cpm::{CpmError, PlannedValueCurve};
use crate::montecarlo::StatsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("project has zero schedule and cost variance; risk baselines are undefined")]
    DegenerateProject,
    #[error("earned value {ev} is outside [0, {budget}]")]
    EvOutOfRange { ev: f64, budget: f64 },
    #[error("earned value is zero; the completion cross-section is undefined")]
    EvZero,
    #[error("{k} neighbors requested but the ensemble has {runs} runs")]
    KTooLarge { k: usize, runs: usize },
    #[error("invalid observation: {0}")]
    InvalidObservation(String),
    #[error("invalid control setting: {0}")]
    Config(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl From<CpmError> for ControlError {
    fn from(e: CpmError) -> Self {
        match e {
            CpmError::EvOutOfRange { ev, budget } => ControlError::EvOutOfRange { ev, budget },
            other => ControlError::Config(other.to_string()),
        }
    }
}

/// Project status at a control instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlObservation {
    /// Time since start.
    pub t: f64,
    /// Actual cost to date.
    pub actual_cost: f64,
    /// Earned value to date.
    pub earned_value: f64,
}

impl ControlObservation {
    pub fn new(t: f64, earned_value: f64, actual_cost: f64) -> Self {
        ControlObservation {
            t,
            actual_cost,
            earned_value,
        }
    }

    /// Checks ranges against the budget at completion.
    pub fn check(&self, budget: f64) -> Result<(), ControlError> {
        if !(self.t.is_finite() && self.t >= 0.0) {
            return Err(ControlError::InvalidObservation(format!(
                "control time must be >= 0, got {}",
                self.t
            )));
        }
        if !(self.actual_cost.is_finite() && self.actual_cost >= 0.0) {
            return Err(ControlError::InvalidObservation(format!(
                "actual cost must be >= 0, got {}",
                self.actual_cost
            )));
        }
        let slack = 1e-12 * budget.abs();
        if !(self.earned_value.is_finite()
            && self.earned_value >= 0.0
            && self.earned_value <= budget + slack)
        {
            return Err(ControlError::EvOutOfRange {
                ev: self.earned_value,
                budget,
            });
        }
        Ok(())
    }

    /// Completion fraction `EV / BAC`, clamped to 1.
    pub fn fraction(&self, budget: f64) -> Result<f64, ControlError> {
        self.check(budget)?;
        if self.earned_value == 0.0 || budget == 0.0 {
            return Err(ControlError::EvZero);
        }
        Ok((self.earned_value / budget).min(1.0))
    }
}

/// Schedule and cost control indices at one observation. Positive indices
/// mean the deviation is still inside the risk budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlIndices {
    /// Planned time at which the observed EV was due.
    pub earned_schedule: f64,
    /// `t - earned_schedule`; negative when ahead.
    pub schedule_delay: f64,
    /// `AC - EV`; negative when under budget.
    pub cost_deviation: f64,
    pub srb: f64,
    pub crb: f64,
    /// `SRB(t) - schedule_delay`.
    pub scoi: f64,
    /// `CRB(t) - cost_deviation`.
    pub ccoi: f64,
}

pub fn control_indices(
    obs: &ControlObservation,
    baseline: &RiskBaseline,
    pv: &PlannedValueCurve,
) -> Result<ControlIndices, ControlError> {
    obs.check(pv.budget)?;
    let earned_schedule = pv.earned_schedule_at(obs.earned_value, obs.t)?;
    let schedule_delay = obs.t - earned_schedule;
    let cost_deviation = obs.actual_cost - obs.earned_value;
    let srb = baseline.srb_at(obs.t);
    let crb = baseline.crb_at(obs.t);
    Ok(ControlIndices {
        earned_schedule,
        schedule_delay,
        cost_deviation,
        srb,
        crb,
        scoi: srb - schedule_delay,
        ccoi: crb - cost_deviation,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::cpm::{plan, planned_value_curve};
    use crate::model::{
        validate, Activity, Distribution, Precedence, ProjectSpec, ValidatedNetwork,
    };
    use crate::montecarlo::{run_ensemble, SimConfig};

    pub(crate) fn serial(laws: &[Distribution]) -> ValidatedNetwork {
        let mut acts = vec![Activity::dummy("S")];
        for (i, d) in laws.iter().enumerate() {
            acts.push(Activity::new(format!("A{}", i + 1), "", d.clone()).with_costs(1.0, 2.0));
        }
        acts.push(Activity::dummy("E"));
        let precedences = acts
            .windows(2)
            .map(|w| Precedence::new(&w[1].id, &w[0].id))
            .collect();
        validate(&ProjectSpec {
            activities: acts,
            precedences,
            risks: vec![],
        })
        .unwrap()
    }

    #[test]
    fn on_plan_observation_uses_the_whole_budget() {
        let net = serial(&[
            Distribution::uniform(2.0, 4.0),
            Distribution::uniform(1.0, 5.0),
        ]);
        let ens = run_ensemble(&net, &SimConfig::new(2000, 5)).unwrap();
        let p = plan(&net);
        let base = risk_baselines(&ens, &p, 21).unwrap();
        let pv = planned_value_curve(&net, &p, 21).unwrap();
        for t in [0.5, 2.0, 3.3, 5.9] {
            let v = pv.value_at(t);
            let ci = control_indices(&ControlObservation::new(t, v, v), &base, &pv).unwrap();
            assert!(ci.schedule_delay.abs() < 1e-9, "{ci:?}");
            assert_eq!(ci.cost_deviation, 0.0);
            assert!((ci.scoi - base.srb_at(t)).abs() < 1e-9);
            assert_eq!(ci.ccoi, base.crb_at(t));
            assert!(ci.scoi >= 0.0 && ci.ccoi >= 0.0);
        }
        let late = control_indices(&ControlObservation::new(3.0, 0.0, 0.0), &base, &pv).unwrap();
        assert_eq!(late.schedule_delay, 3.0);
        let over = ControlObservation::new(1.0, pv.budget * 2.0, 0.0);
        assert!(matches!(
            control_indices(&over, &base, &pv),
            Err(ControlError::EvOutOfRange { .. })
        ));
    }

    #[test]
    fn deterministic_project_has_no_risk_budget() {
        let net = serial(&[Distribution::point(2.0), Distribution::point(3.0)]);
        let ens = run_ensemble(&net, &SimConfig::new(20, 5)).unwrap();
        let p = plan(&net);
        assert_eq!(
            risk_baselines(&ens, &p, 5).unwrap_err(),
            ControlError::DegenerateProject
        );
        let base = RiskBaseline::zero(&p, 5);
        let pv = planned_value_curve(&net, &p, 5).unwrap();
        // Observed at t = 3 with only 2 time units of work earned.
        let ev = pv.value_at(2.0);
        let ci = control_indices(&ControlObservation::new(3.0, ev, ev), &base, &pv).unwrap();
        assert!((ci.scoi + 1.0).abs() < 1e-12, "{ci:?}");
    }

    #[test]
    fn observation_checks() {
        let obs = ControlObservation::new(-1.0, 0.0, 0.0);
        assert!(matches!(
            obs.check(10.0),
            Err(ControlError::InvalidObservation(_))
        ));
        let obs = ControlObservation::new(1.0, 0.0, 0.0);
        assert_eq!(obs.fraction(10.0), Err(ControlError::EvZero));
        let obs = ControlObservation::new(1.0, 5.0, 0.0);
        assert_eq!(obs.fraction(10.0), Ok(0.5));
    }
}
