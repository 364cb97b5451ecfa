//! CSV tables. Numbers carry 9 significant digits; quoting follows RFC 4180.

use std::path::{Path, PathBuf};

use mcrisk_core::control::{
    AriEntry, ControlIndices, ControlObservation, RiskBaseline, SevmForecast, TriadReport,
};
use mcrisk_core::cpm::{CpmResult, PathMatrix, PlannedValueCurve};
use mcrisk_core::indices::SensitivityReport;
use mcrisk_core::model::{NodeKind, ValidatedNetwork};
use mcrisk_core::montecarlo::{stats, Ensemble, Histogram, StatsError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Shortest decimal with at most 9 significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let rounded: f64 = sci.parse().expect("formatted float");
        let fixed = format!("{rounded:.decimals$}");
        if fixed.contains('.') {
            fixed
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        } else {
            fixed
        }
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{m}e{exp}")
    }
}

pub trait Field {
    fn cell(&self) -> String;
}

impl Field for f64 {
    fn cell(&self) -> String {
        sig9(*self)
    }
}

impl Field for usize {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Field for bool {
    fn cell(&self) -> String {
        u8::from(*self).to_string()
    }
}

impl Field for str {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Field for String {
    fn cell(&self) -> String {
        self.clone()
    }
}

impl<T: Field + ?Sized> Field for &T {
    fn cell(&self) -> String {
        (**self).cell()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, ExportError> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 cells"))
    }

    pub fn write(&self, path: &Path) -> Result<(), ExportError> {
        std::fs::write(path, self.to_csv()?).map_err(|source| ExportError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$(Field::cell(&$x)),*] };
}

/// `p` values 5, 10, ..., 95.
pub fn standard_percentiles() -> Vec<f64> {
    (1..=19).map(|k| 5.0 * k as f64).collect()
}

fn kind(network: &ValidatedNetwork, i: usize) -> &'static str {
    match network.node(i).kind {
        NodeKind::Activity { .. } => "activity",
        NodeKind::DurationRisk { .. } => "risk",
    }
}

pub fn cpm_table(network: &ValidatedNetwork, plan: &CpmResult, planned_values: &[f64]) -> Table {
    let mut t = Table::new(&[
        "id",
        "name",
        "kind",
        "duration",
        "es",
        "ef",
        "ls",
        "lf",
        "total_float",
        "critical",
        "planned_value",
    ]);
    for (i, n) in network.nodes().iter().enumerate() {
        t.push(row![
            n.id,
            n.name,
            kind(network, i),
            plan.durations[i],
            plan.early_start[i],
            plan.early_finish[i],
            plan.late_start[i],
            plan.late_finish[i],
            plan.total_float[i],
            plan.critical[i],
            planned_values[i],
        ]);
    }
    t
}

pub fn pv_table(curve: &PlannedValueCurve) -> Table {
    let mut t = Table::new(&["t", "pv"]);
    for (x, v) in curve.times.iter().zip(&curve.values) {
        t.push(row![x, v]);
    }
    t
}

/// One row per path: its number, planned length, then a 0/1 column per node.
pub fn paths_table(network: &ValidatedNetwork, paths: &PathMatrix, durations: &[f64]) -> Table {
    let mut header = vec!["path".to_string(), "length".to_string()];
    header.extend(network.ids().iter().map(|s| s.to_string()));
    let mut t = Table::new(&header);
    let lengths = paths.path_lengths(durations);
    for (k, cells) in paths.to_matrix().iter().enumerate() {
        let mut r = row![k + 1, lengths[k]];
        r.extend(cells.iter().map(|c| c.to_string()));
        t.push(r);
    }
    t
}

/// Per-run totals and risk activations.
pub fn runs_table(network: &ValidatedNetwork, ensemble: &Ensemble) -> Table {
    let mut header = vec![
        "run".to_string(),
        "duration".to_string(),
        "cost".to_string(),
    ];
    header.extend(network.risks().iter().map(|r| r.id.clone()));
    let mut t = Table::new(&header);
    for run in ensemble.runs() {
        let mut r = row![run.index, run.duration, run.cost];
        r.extend(run.risk_active.iter().map(|a| a.cell()));
        t.push(r);
    }
    t
}

/// Sampled durations of every node, one column per node id.
pub fn node_durations_table(network: &ValidatedNetwork, ensemble: &Ensemble) -> Table {
    let mut header = vec!["run".to_string()];
    header.extend(network.ids().iter().map(|s| s.to_string()));
    let mut t = Table::new(&header);
    for run in ensemble.runs() {
        let mut r = row![run.index];
        r.extend(run.durations.iter().map(|d| d.cell()));
        t.push(r);
    }
    t
}

pub fn percentile_table(ensemble: &Ensemble, percentiles: &[f64]) -> Result<Table, StatsError> {
    let d = stats::sorted(ensemble.total_durations());
    let c = stats::sorted(ensemble.total_costs());
    let mut t = Table::new(&["p", "duration", "cost"]);
    for &p in percentiles {
        t.push(row![
            p,
            stats::percentile_of_sorted(&d, p)?,
            stats::percentile_of_sorted(&c, p)?
        ]);
    }
    Ok(t)
}

pub fn histogram_table(h: &Histogram) -> Table {
    let mut t = Table::new(&["lower", "upper", "pdf", "cdf"]);
    for k in 0..h.bins() {
        t.push(row![h.edges[k], h.edges[k + 1], h.pdf[k], h.cdf[k]]);
    }
    t
}

pub fn sensitivity_table(report: &SensitivityReport) -> Table {
    let mut t = Table::new(&["id", "name", "ci", "cri", "ssi", "sd"]);
    for r in &report.rows {
        t.push(row![
            r.id,
            r.name,
            r.criticality,
            r.cruciality,
            r.sensitivity,
            r.sd
        ]);
    }
    t
}

pub fn contingency_table(dimension: &str, rows: &[(f64, f64, f64)]) -> Table {
    let mut t = Table::new(&["dimension", "p", "value", "reserve"]);
    for (p, value, reserve) in rows {
        t.push(row![dimension, p, value, reserve]);
    }
    t
}

pub fn baseline_table(baseline: &RiskBaseline, pv: &PlannedValueCurve) -> Table {
    let mut t = Table::new(&["t", "pv", "srb", "crb"]);
    for (j, &x) in baseline.times.iter().enumerate() {
        t.push(row![x, pv.value_at(x), baseline.srb[j], baseline.crb[j]]);
    }
    t
}

pub fn ari_table(network: &ValidatedNetwork, baseline: &RiskBaseline, ari: &[AriEntry]) -> Table {
    let mut t = Table::new(&["rank", "id", "ari_percent", "cost_share_percent"]);
    for (k, e) in ari.iter().enumerate() {
        t.push(row![
            k + 1,
            network.node(e.node).id,
            e.percent,
            100.0 * baseline.cost_shares[e.node],
        ]);
    }
    t
}

pub fn control_table(obs: &ControlObservation, ci: &ControlIndices, triad: &TriadReport) -> Table {
    let mut t = Table::new(&[
        "t",
        "ev",
        "ac",
        "earned_schedule",
        "schedule_delay",
        "cost_deviation",
        "srb",
        "crb",
        "scoi",
        "ccoi",
        "fraction",
        "schedule_percentile",
        "cost_percentile",
        "schedule_status",
        "cost_status",
    ]);
    t.push(row![
        obs.t,
        obs.earned_value,
        obs.actual_cost,
        ci.earned_schedule,
        ci.schedule_delay,
        ci.cost_deviation,
        ci.srb,
        ci.crb,
        ci.scoi,
        ci.ccoi,
        triad.fraction,
        triad.schedule_percentile,
        triad.cost_percentile,
        triad.schedule_status.to_string(),
        triad.cost_status.to_string(),
    ]);
    t
}

pub fn forecast_table(f: &SevmForecast) -> Table {
    let mut header = vec!["quantity".to_string(), "estimate".to_string()];
    header.extend(
        f.duration_interval
            .iter()
            .map(|(p, _)| format!("p{}", sig9(*p))),
    );
    header.push("probability".into());
    let mut t = Table::new(&header);
    let mut d = row!["duration", f.duration];
    d.extend(f.duration_interval.iter().map(|(_, v)| v.cell()));
    d.push(f.p_late.cell());
    t.push(d);
    let mut c = row!["cost", f.cost];
    c.extend(f.cost_interval.iter().map(|(_, v)| v.cell()));
    c.push(f.p_overrun.cell());
    t.push(c);
    t
}

pub fn neighbors_table(f: &SevmForecast) -> Table {
    let mut t = Table::new(&[
        "rank",
        "run",
        "distance",
        "control_time",
        "control_cost",
        "final_duration",
        "final_cost",
        "late",
        "overrun",
    ]);
    for (k, n) in f.neighbors.iter().enumerate() {
        t.push(row![
            k + 1,
            n.run,
            n.distance,
            n.control_time,
            n.control_cost,
            n.final_duration,
            n.final_cost,
            n.late,
            n.overrun,
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(-2.5), "-2.5");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(123456789.4), "123456789");
        assert_eq!(sig9(1234567891.0), "1234567890");
        assert_eq!(sig9(2.0 / 3.0 * 1e-7), "6.66666667e-8");
        assert_eq!(sig9(1e20), "1e20");
        for x in [std::f64::consts::PI, 1e-3 / 7.0, 98765.4321987, -4.4e12] {
            let back: f64 = sig9(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 5e-9, "{x} -> {back}");
        }
    }

    #[test]
    fn quoting() {
        let mut t = Table::new(&["id", "name"]);
        t.push(row!["A1", "Pour, cure \"slab\""]);
        assert_eq!(
            t.to_csv().unwrap(),
            "id,name\nA1,\"Pour, cure \"\"slab\"\"\"\n"
        );
    }
}
