use super::ControlError;
use crate::cpm::planned_value::accrued;
use crate::cpm::CpmResult;
use crate::montecarlo::stats;
use crate::montecarlo::Ensemble;

/// Schedule and cost risk baselines.
///
/// Each node gets a share of the project variance, `max(0, cov(x_i, X))`
/// normalized to 1, where `x_i` is the node's sampled duration (schedule) or
/// realized cost (cost) and `X` the project total. A share is consumed
/// linearly over the node's planned window, so
/// `SRB(t)^2 = sd_PD^2 * sum_i w_i * progress_i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskBaseline {
    pub times: Vec<f64>,
    pub srb: Vec<f64>,
    pub crb: Vec<f64>,
    pub schedule_shares: Vec<f64>,
    pub cost_shares: Vec<f64>,
    pub sd_duration: f64,
    pub sd_cost: f64,
    starts: Vec<f64>,
    durations: Vec<f64>,
}

impl RiskBaseline {
    pub fn srb_at(&self, t: f64) -> f64 {
        self.sd_duration * accrued(&self.starts, &self.durations, &self.schedule_shares, t).sqrt()
    }

    pub fn crb_at(&self, t: f64) -> f64 {
        self.sd_cost * accrued(&self.starts, &self.durations, &self.cost_shares, t).sqrt()
    }

    /// Identically zero baseline over the plan: a deterministic project has
    /// no risk budget.
    pub fn zero(plan: &CpmResult, grid: usize) -> Self {
        let n = plan.durations.len();
        let times = grid_times(plan.duration, grid.max(2));
        RiskBaseline {
            srb: vec![0.0; times.len()],
            crb: vec![0.0; times.len()],
            times,
            schedule_shares: vec![0.0; n],
            cost_shares: vec![0.0; n],
            sd_duration: 0.0,
            sd_cost: 0.0,
            starts: plan.early_start.clone(),
            durations: plan.durations.clone(),
        }
    }
}

fn grid_times(horizon: f64, points: usize) -> Vec<f64> {
    let step = horizon / (points - 1) as f64;
    (0..points)
        .map(|j| {
            if j == points - 1 {
                horizon
            } else {
                step * j as f64
            }
        })
        .collect()
}

fn shares(columns: impl Iterator<Item = Vec<f64>>, total: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = columns
        .map(|x| stats::covariance(&x, total).max(0.0))
        .collect();
    let sum = stats::sum(raw.iter().copied());
    if sum > 0.0 {
        raw.iter().map(|s| s / sum).collect()
    } else {
        vec![0.0; raw.len()]
    }
}

/// Builds SRB/CRB on `grid` points over `[0, planned duration]`.
pub fn risk_baselines(
    ensemble: &Ensemble,
    plan: &CpmResult,
    grid: usize,
) -> Result<RiskBaseline, ControlError> {
    if grid < 2 {
        return Err(ControlError::Config(format!(
            "baseline grid needs at least 2 points, got {grid}"
        )));
    }
    let pd = ensemble.total_durations();
    let cost = ensemble.total_costs();
    let sd_duration = stats::std_dev(pd);
    let sd_cost = stats::std_dev(cost);
    if sd_duration == 0.0 && sd_cost == 0.0 {
        return Err(ControlError::DegenerateProject);
    }
    let n = ensemble.node_count();
    let schedule_shares = shares((0..n).map(|i| ensemble.node_durations(i)), pd);
    let cost_shares = shares((0..n).map(|i| ensemble.node_costs(i)), cost);

    let mut baseline = RiskBaseline {
        times: grid_times(plan.duration, grid),
        srb: Vec::with_capacity(grid),
        crb: Vec::with_capacity(grid),
        schedule_shares,
        cost_shares,
        sd_duration,
        sd_cost,
        starts: plan.early_start.clone(),
        durations: plan.durations.clone(),
    };
    for j in 0..grid {
        let t = baseline.times[j];
        let (s, c) = (baseline.srb_at(t), baseline.crb_at(t));
        baseline.srb.push(s);
        baseline.crb.push(c);
    }
    Ok(baseline)
}

/// A node's share of schedule variance, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AriEntry {
    pub node: usize,
    pub percent: f64,
}

/// Nodes ranked by schedule variance share, largest first (ties by node
/// order). Only nodes with a positive share are listed.
pub fn activity_risk_index(baseline: &RiskBaseline) -> Vec<AriEntry> {
    let mut entries: Vec<AriEntry> = baseline
        .schedule_shares
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(node, &w)| AriEntry {
            node,
            percent: 100.0 * w,
        })
        .collect();
    entries.sort_by(|a, b| b.percent.total_cmp(&a.percent).then(a.node.cmp(&b.node)));
    entries
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::tests::serial;
    use crate::cpm::plan;
    use crate::model::Distribution;
    use crate::montecarlo::{run_ensemble, SimConfig};

    #[test]
    fn endpoint_identities_and_monotonicity() {
        let net = serial(&[
            Distribution::triangular(1.0, 2.0, 5.0),
            Distribution::normal(4.0, 1.0),
            Distribution::point(1.0),
        ]);
        let ens = run_ensemble(&net, &SimConfig::new(5000, 12)).unwrap();
        let p = plan(&net);
        let b = risk_baselines(&ens, &p, 33).unwrap();
        assert_eq!(b.srb[0], 0.0);
        assert_eq!(b.crb[0], 0.0);
        assert!((b.srb[32] - b.sd_duration).abs() <= 1e-6 * b.sd_duration);
        assert!((b.crb[32] - b.sd_cost).abs() <= 1e-6 * b.sd_cost);
        assert!(b.srb.windows(2).all(|w| w[0] <= w[1]));
        assert!(b.crb.windows(2).all(|w| w[0] <= w[1]));
        let ari = activity_risk_index(&b);
        let total: f64 = ari.iter().map(|e| e.percent).sum();
        assert!((total - 100.0).abs() < 1e-9);
        // The point-duration activity has no share.
        let point = net.index_of("A3").unwrap();
        assert!(ari.iter().all(|e| e.node != point));
        assert!(ari.windows(2).all(|w| w[0].percent >= w[1].percent));
    }

    #[test]
    fn two_serial_iid_activities_split_the_variance() {
        let u = Distribution::uniform(2.0, 6.0);
        let net = serial(&[u.clone(), u]);
        let ens = run_ensemble(&net, &SimConfig::new(100_000, 3)).unwrap();
        let p = plan(&net);
        let b = risk_baselines(&ens, &p, 3).unwrap();
        let ari = activity_risk_index(&b);
        assert_eq!(ari.len(), 2);
        for e in &ari {
            assert!((e.percent - 50.0).abs() < 2.0, "{ari:?}");
        }
        // Midpoint of the plan: first window done, second not started.
        let expected = b.sd_duration * (b.schedule_shares[1]).sqrt();
        assert!((b.srb[1] - expected).abs() < 1e-12);
        assert!((b.srb[1] - b.sd_duration * 0.5f64.sqrt()).abs() < 0.03 * b.sd_duration);
    }

    #[test]
    fn single_stochastic_activity_holds_all_risk() {
        let net = serial(&[Distribution::point(3.0), Distribution::uniform(0.0, 2.0)]);
        let ens = run_ensemble(&net, &SimConfig::new(1000, 3)).unwrap();
        let b = risk_baselines(&ens, &plan(&net), 5).unwrap();
        let ari = activity_risk_index(&b);
        assert_eq!(ari.len(), 1);
        assert!((ari[0].percent - 100.0).abs() < 1e-12);
        assert_eq!(ari[0].node, net.index_of("A2").unwrap());
    }
}
