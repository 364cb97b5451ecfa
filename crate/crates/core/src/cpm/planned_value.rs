use super::{planned_node_values, CpmError, CpmResult};
use crate::model::ValidatedNetwork;

/// Amount accrued by time `t` when each node spreads `amounts[i]` linearly
/// over `[starts[i], starts[i] + durations[i]]`. Zero-length windows accrue
/// as a step at their start. Once `t` is past every window the result is
/// exactly `amounts.iter().sum()`.
pub(crate) fn accrued(starts: &[f64], durations: &[f64], amounts: &[f64], t: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..amounts.len() {
        let (s, d) = (starts[i], durations[i]);
        let frac = if t >= s + d {
            1.0
        } else if t <= s {
            0.0
        } else {
            (t - s) / d
        };
        total += amounts[i] * frac;
    }
    total
}

/// `inf { t >= 0 : accrued(t) >= target }`. When rounding keeps the sweep just
/// short of `target`, the last window end is returned.
pub(crate) fn first_time_reaching(
    starts: &[f64],
    durations: &[f64],
    amounts: &[f64],
    target: f64,
) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    // (time, jump, slope change)
    let mut events: Vec<(f64, f64, f64)> = Vec::with_capacity(2 * amounts.len());
    for i in 0..amounts.len() {
        if amounts[i] <= 0.0 {
            continue;
        }
        let (s, d) = (starts[i], durations[i]);
        if d > 0.0 {
            let rate = amounts[i] / d;
            events.push((s, 0.0, rate));
            events.push((s + d, 0.0, -rate));
        } else {
            events.push((s, amounts[i], 0.0));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (mut now, mut value, mut slope) = (0.0, 0.0, 0.0);
    let mut k = 0;
    while k < events.len() {
        let at = events[k].0;
        let before = value + slope * (at - now);
        if before >= target && slope > 0.0 {
            return (now + (target - value) / slope).min(at);
        }
        value = before;
        while k < events.len() && events[k].0 == at {
            value += events[k].1;
            slope += events[k].2;
            k += 1;
        }
        now = at;
        if value >= target {
            return at;
        }
        if slope < 1e-300 {
            slope = 0.0;
        }
    }
    now
}

/// Cumulative planned cost over the planned schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedValueCurve {
    starts: Vec<f64>,
    durations: Vec<f64>,
    amounts: Vec<f64>,
    /// Planned project duration.
    pub duration: f64,
    /// Budget at completion.
    pub budget: f64,
    /// Uniform grid over `[0, duration]`.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl PlannedValueCurve {
    pub fn value_at(&self, t: f64) -> f64 {
        if t >= self.duration {
            return self.budget;
        }
        accrued(&self.starts, &self.durations, &self.amounts, t)
    }

    /// Planned time at which the curve first reaches `ev`.
    ///
    /// `ev = 0` maps to 0 and `ev = budget` to the planned duration.
    pub fn earned_schedule(&self, ev: f64) -> Result<f64, CpmError> {
        let slack = 1e-12 * self.budget.abs();
        if !ev.is_finite() || ev < 0.0 || ev > self.budget + slack {
            return Err(CpmError::EvOutOfRange {
                ev,
                budget: self.budget,
            });
        }
        if ev == 0.0 {
            return Ok(0.0);
        }
        if ev >= self.budget {
            return Ok(self.duration);
        }
        Ok(
            first_time_reaching(&self.starts, &self.durations, &self.amounts, ev)
                .min(self.duration),
        )
    }

    /// Interval of planned times at which the curve equals `ev`. It has
    /// positive length where only zero-value nodes are in progress.
    pub fn earned_schedule_span(&self, ev: f64) -> Result<(f64, f64), CpmError> {
        let lo = self.earned_schedule(ev)?;
        if ev >= self.budget {
            return Ok((lo, lo));
        }
        let tol = 1e-9 * self.duration.max(1.0);
        let hi = (0..self.amounts.len())
            .filter(|&i| self.amounts[i] > 0.0 && self.starts[i] + self.durations[i] > lo + tol)
            .map(|i| self.starts[i].max(lo))
            .fold(self.duration, f64::min);
        Ok((lo, hi.max(lo)))
    }

    /// Earned schedule for an observation at `t`: the point of
    /// [`earned_schedule_span`](Self::earned_schedule_span) closest to `t`.
    pub fn earned_schedule_at(&self, ev: f64, t: f64) -> Result<f64, CpmError> {
        let (lo, hi) = self.earned_schedule_span(ev)?;
        Ok(t.clamp(lo, hi))
    }

    /// Per-node `(early start, duration, planned value)` windows.
    pub fn windows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.amounts.len()).map(|i| (self.starts[i], self.durations[i], self.amounts[i]))
    }
}

/// Builds the planned value curve from a plan computed on expected
/// durations.
pub fn planned_value_curve(
    network: &ValidatedNetwork,
    plan: &CpmResult,
    grid_points: usize,
) -> Result<PlannedValueCurve, CpmError> {
    if grid_points < 2 {
        return Err(CpmError::GridTooSmall(grid_points));
    }
    let amounts = planned_node_values(network, &plan.durations);
    let mut curve = PlannedValueCurve {
        starts: plan.early_start.clone(),
        durations: plan.durations.clone(),
        amounts,
        duration: plan.duration,
        budget: plan.planned_cost,
        times: Vec::with_capacity(grid_points),
        values: Vec::with_capacity(grid_points),
    };
    let step = plan.duration / (grid_points - 1) as f64;
    for j in 0..grid_points {
        let t = if j == grid_points - 1 {
            plan.duration
        } else {
            step * j as f64
        };
        curve.times.push(t);
        curve.values.push(curve.value_at(t));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpm::plan;
    use crate::model::{validate, Activity, Distribution, Precedence, ProjectSpec};

    fn serial(acts: Vec<Activity>) -> ValidatedNetwork {
        let mut all = vec![Activity::dummy("S")];
        all.extend(acts);
        all.push(Activity::dummy("E"));
        let precedences = all
            .windows(2)
            .map(|w| Precedence::new(&w[1].id, &w[0].id))
            .collect();
        validate(&ProjectSpec {
            activities: all,
            precedences,
            risks: vec![],
        })
        .unwrap()
    }

    #[test]
    fn single_activity_linear_accrual() {
        let net = serial(vec![
            Activity::new("A", "", Distribution::Point(4.0)).with_costs(8.0, 1.0)
        ]);
        let pv = planned_value_curve(&net, &plan(&net), 5).unwrap();
        assert_eq!(pv.budget, 12.0);
        assert_eq!(pv.value_at(2.0), 6.0);
        assert_eq!(pv.value_at(4.0), 12.0);
        assert_eq!(pv.values, [0.0, 3.0, 6.0, 9.0, 12.0]);
        assert_eq!(pv.earned_schedule(6.0).unwrap(), 2.0);
        assert_eq!(pv.earned_schedule(0.0).unwrap(), 0.0);
        assert_eq!(pv.earned_schedule(12.0).unwrap(), 4.0);
        assert!(matches!(
            pv.earned_schedule(12.5),
            Err(CpmError::EvOutOfRange { .. })
        ));
        assert!(matches!(
            pv.earned_schedule(-1.0),
            Err(CpmError::EvOutOfRange { .. })
        ));
    }

    #[test]
    fn no_costs_means_flat_zero() {
        let net = serial(vec![Activity::new("A", "", Distribution::Point(4.0))]);
        let pv = planned_value_curve(&net, &plan(&net), 3).unwrap();
        assert!(pv.values.iter().all(|&v| v == 0.0));
        assert_eq!(pv.earned_schedule(0.0).unwrap(), 0.0);
    }

    #[test]
    fn two_serial_equal_activities_half_budget_at_half_time() {
        let net = serial(vec![
            Activity::new("A", "", Distribution::Point(3.0)).with_costs(1.0, 2.0),
            Activity::new("B", "", Distribution::Point(3.0)).with_costs(1.0, 2.0),
        ]);
        let pv = planned_value_curve(&net, &plan(&net), 3).unwrap();
        assert_eq!(pv.value_at(3.0), pv.budget / 2.0);
        assert_eq!(pv.values[1], pv.budget / 2.0);
    }

    #[test]
    fn zero_duration_fixed_cost_is_a_step() {
        let net = serial(vec![
            Activity::new("A", "", Distribution::Point(2.0)).with_costs(0.0, 1.0),
            Activity::new("M", "", Distribution::Point(0.0)).with_costs(10.0, 0.0),
            Activity::new("B", "", Distribution::Point(2.0)).with_costs(0.0, 1.0),
        ]);
        let pv = planned_value_curve(&net, &plan(&net), 5).unwrap();
        assert_eq!(pv.budget, 14.0);
        assert_eq!(pv.value_at(1.999), 1.999);
        assert_eq!(pv.value_at(2.0), 12.0);
        // Anything inside the jump maps to the jump time.
        assert_eq!(pv.earned_schedule(5.0).unwrap(), 2.0);
        assert_eq!(pv.earned_schedule(12.0).unwrap(), 2.0);
        assert!((pv.earned_schedule(13.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn plateau_span_and_nearest_point() {
        let net = serial(vec![
            Activity::new("A", "", Distribution::Point(2.0)).with_costs(0.0, 1.0),
            Activity::new("W", "", Distribution::Point(3.0)),
            Activity::new("B", "", Distribution::Point(2.0)).with_costs(0.0, 1.0),
        ]);
        let pv = planned_value_curve(&net, &plan(&net), 5).unwrap();
        assert_eq!(pv.earned_schedule_span(2.0).unwrap(), (2.0, 5.0));
        assert_eq!(pv.earned_schedule_span(1.0).unwrap(), (1.0, 1.0));
        assert_eq!(pv.earned_schedule_span(4.0).unwrap(), (7.0, 7.0));
        assert_eq!(pv.earned_schedule_at(2.0, 3.5).unwrap(), 3.5);
        assert_eq!(pv.earned_schedule_at(2.0, 6.0).unwrap(), 5.0);
        assert_eq!(pv.earned_schedule_at(2.0, 0.5).unwrap(), 2.0);
    }

    #[test]
    fn inverse_matches_brute_force_scan() {
        let net = serial(vec![
            Activity::new("A", "", Distribution::Point(1.5)).with_costs(2.0, 1.0),
            Activity::new("B", "", Distribution::Point(0.5)).with_costs(0.0, 0.0),
            Activity::new("C", "", Distribution::Point(2.0)).with_costs(3.0, 0.5),
        ]);
        let pv = planned_value_curve(&net, &plan(&net), 2).unwrap();
        for k in 1..40 {
            let ev = pv.budget * k as f64 / 40.0;
            let t = pv.earned_schedule(ev).unwrap();
            // Bisection on the monotone curve as the oracle.
            let (mut lo, mut hi) = (0.0, pv.duration);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if pv.value_at(mid) >= ev {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!((t - hi).abs() < 1e-9, "ev {ev}: {t} vs {hi}");
        }
    }
}
