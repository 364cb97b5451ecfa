//! Subcommand driver.
//!
//! Exit codes: 0 success, 1 validation or domain error, 2 I/O error,
//! 3 configuration error (bad flags or settings).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcrisk_core::control::{
    self, activity_risk_index, control_indices, cross_section, percentile_bands, risk_baselines,
    sevm_forecast, ControlError, ControlObservation, RiskBaseline, SevmOptions,
};
use mcrisk_core::cpm::{self, enumerate_paths, planned_node_values, planned_value_curve, CpmError};
use mcrisk_core::indices::{
    self, contingency_reserve, sensitivity_report, Correlation, Dimension, IndexError,
};
use mcrisk_core::model::{validate, ModelError, ValidatedNetwork};
use mcrisk_core::montecarlo::{
    self, histogram_and_cdf, run_ensemble, stats, Ensemble, SimConfig, SimError, StatsError,
};
use thiserror::Error;

use crate::export::{self, ExportError, Table};
use crate::plot::{self, PlotError, PlotKind};
use crate::project_file::{self, import_matrix_csv, MatrixImportError, ProjectFileError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Project {
        path: PathBuf,
        source: ProjectFileError,
    },
    #[error("invalid project: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Cpm(#[from] CpmError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error("matrix import: {0}")]
    Import(#[from] MatrixImportError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Export(_) | CliError::Io { .. } => 2,
            CliError::Config(_)
            | CliError::Sim(_)
            | CliError::Stats(StatsError::InvalidPercentile(_))
            | CliError::Index(IndexError::Stats(StatsError::InvalidPercentile(_)))
            | CliError::Control(ControlError::Stats(StatsError::InvalidPercentile(_)))
            | CliError::Control(ControlError::KTooLarge { .. } | ControlError::Config(_))
            | CliError::Cpm(CpmError::GridTooSmall(_)) => 3,
            CliError::Import(MatrixImportError::Csv(e)) if e.is_io_error() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mcrisk",
    version,
    about = "Monte Carlo schedule and cost risk analysis of activity networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Project file.
    #[arg(long)]
    pub project: PathBuf,
    /// Number of simulation runs.
    #[arg(long, default_value_t = montecarlo::DEFAULT_RUNS)]
    pub runs: usize,
    #[arg(long, default_value_t = montecarlo::DEFAULT_SEED)]
    pub seed: u64,
    /// Points on the time grids (trajectories, planned value, baselines).
    #[arg(long, default_value_t = montecarlo::DEFAULT_TRAJECTORY_GRID)]
    pub grid: usize,
    /// Directory for output files; created if missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for the simulation; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DimensionArg {
    Duration,
    Cost,
}

impl From<DimensionArg> for Dimension {
    fn from(d: DimensionArg) -> Self {
        match d {
            DimensionArg::Duration => Dimension::Duration,
            DimensionArg::Cost => Dimension::Cost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrelationArg {
    Pearson,
    Spearman,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the project and print its size.
    Validate(Common),
    /// Deterministic schedule on expected durations.
    Cpm(Common),
    /// Every start-to-end path of the network.
    Paths(Common),
    /// Run the simulation and print duration and cost percentiles.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Histogram bins for the exported distributions.
        #[arg(long, default_value_t = 30)]
        bins: usize,
    },
    /// Criticality, cruciality and schedule sensitivity per activity.
    Indices {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = CorrelationArg::Pearson)]
        correlation: CorrelationArg,
    },
    /// Reserve needed to reach a confidence percentile.
    Contingency {
        #[command(flatten)]
        common: Common,
        /// Repeat for several percentiles.
        #[arg(long, default_values_t = [50.0, 75.0, 90.0, 95.0, 99.0])]
        percentile: Vec<f64>,
        #[arg(long, value_enum, default_value_t = DimensionArg::Cost)]
        dimension: DimensionArg,
    },
    /// Schedule and cost risk baselines and the activity risk ranking.
    Baseline(Common),
    /// Control indices and triad readout for an observation.
    Control {
        #[command(flatten)]
        common: Common,
        /// `t=<time>,ev=<earned value>,ac=<actual cost>`.
        #[arg(long, value_parser = parse_observation)]
        observe: ControlObservation,
    },
    /// Forecast final duration and cost from the nearest simulated runs.
    Forecast {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_observation)]
        observe: ControlObservation,
        /// Neighbors used; defaults to 5% of the runs, at most 500.
        #[arg(long)]
        neighbors: Option<usize>,
    },
    /// Write an SVG chart.
    Plot {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = |s: &str| s.parse::<PlotKind>())]
        kind: PlotKind,
        #[arg(long, value_parser = parse_observation)]
        observe: Option<ControlObservation>,
        #[arg(long)]
        neighbors: Option<usize>,
        /// Quantity for `pdfcdf`.
        #[arg(long, value_enum, default_value_t = DimensionArg::Duration)]
        dimension: DimensionArg,
        #[arg(long, default_value_t = 30)]
        bins: usize,
    },
    /// Convert a CSV precedence matrix into a project file.
    ImportMatrix {
        /// CSV with a header row of ids and one row per activity.
        #[arg(long)]
        input: PathBuf,
        /// Project file to write; standard output if omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Parses `t=<v>,ev=<v>,ac=<v>` in any order.
pub fn parse_observation(s: &str) -> Result<ControlObservation, String> {
    let (mut t, mut ev, mut ac) = (None, None, None);
    for part in s.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("`{part}` is not key=value"))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("`{}` is not a number", value.trim()))?;
        let slot = match key.trim() {
            "t" => &mut t,
            "ev" => &mut ev,
            "ac" => &mut ac,
            other => return Err(format!("unknown key `{other}` (expected t, ev, ac)")),
        };
        if slot.replace(v).is_some() {
            return Err(format!("`{}` given twice", key.trim()));
        }
    }
    match (t, ev, ac) {
        (Some(t), Some(ev), Some(ac)) => Ok(ControlObservation::new(t, ev, ac)),
        _ => Err("observation needs t, ev and ac".into()),
    }
}

struct Session<'a> {
    common: &'a Common,
    network: ValidatedNetwork,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Session<'_> {
    fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.common.runs, self.common.seed);
        cfg.trajectory_grid = self.common.grid;
        cfg.workers = self.common.threads;
        cfg
    }

    fn simulate(&self) -> Result<Ensemble, CliError> {
        Ok(run_ensemble(&self.network, &self.sim_config())?)
    }

    fn out_dir(&mut self) -> Result<Option<PathBuf>, CliError> {
        let Some(dir) = self.common.out.clone() else {
            return Ok(None);
        };
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Some(dir))
    }

    fn print(&mut self, text: &str) -> Result<(), CliError> {
        self.stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
    }

    /// Prints `primary` and, with `--out`, writes every table to its file.
    fn emit(&mut self, primary: &Table, files: &[(&str, &Table)]) -> Result<(), CliError> {
        self.print(&primary.to_csv()?)?;
        if let Some(dir) = self.out_dir()? {
            for (name, table) in files {
                let path = dir.join(name);
                table.write(&path)?;
                let _ = writeln!(self.stderr, "wrote {}", path.display());
            }
        }
        Ok(())
    }

    fn write_file(&mut self, path: &Path, text: &str) -> Result<(), CliError> {
        std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let _ = writeln!(self.stderr, "wrote {}", path.display());
        Ok(())
    }
}

fn load(common: &Common) -> Result<ValidatedNetwork, CliError> {
    let spec = project_file::parse_project(&common.project).map_err(|e| match e {
        ProjectFileError::Io { path, source } => CliError::Io { path, source },
        source => CliError::Project {
            path: common.project.clone(),
            source,
        },
    })?;
    Ok(validate(&spec)?)
}

fn common_of(cmd: &Command) -> Option<&Common> {
    match cmd {
        Command::Validate(c) | Command::Cpm(c) | Command::Paths(c) | Command::Baseline(c) => {
            Some(c)
        }
        Command::Simulate { common, .. }
        | Command::Indices { common, .. }
        | Command::Contingency { common, .. }
        | Command::Control { common, .. }
        | Command::Forecast { common, .. }
        | Command::Plot { common, .. } => Some(common),
        Command::ImportMatrix { .. } => None,
    }
}

fn baseline_or_zero(ens: &Ensemble, grid: usize) -> Result<RiskBaseline, CliError> {
    match risk_baselines(ens, ens.plan(), grid) {
        Err(ControlError::DegenerateProject) => Ok(RiskBaseline::zero(ens.plan(), grid)),
        other => Ok(other?),
    }
}

fn run_command(
    cmd: &Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if let Command::ImportMatrix { input, output } = cmd {
        let text = std::fs::read_to_string(input).map_err(|source| CliError::Io {
            path: input.clone(),
            source,
        })?;
        let spec = import_matrix_csv(&text)?;
        let rendered = project_file::render(&spec);
        match output {
            Some(path) => std::fs::write(path, rendered).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?,
            None => stdout
                .write_all(rendered.as_bytes())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })?,
        }
        return Ok(());
    }
    let common = common_of(cmd).expect("project subcommand");
    if common.runs == 0 {
        return Err(CliError::Config("--runs must be at least 1".into()));
    }
    if common.grid < 2 {
        return Err(CliError::Config("--grid must be at least 2".into()));
    }
    if common.threads == Some(0) {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    let network = load(common)?;
    let mut s = Session {
        common,
        network,
        stdout,
        stderr,
    };

    match cmd {
        Command::Validate(_) => {
            let plan = cpm::plan(&s.network);
            let paths = enumerate_paths(&s.network)?;
            let text = format!(
                "nodes: {}\nedges: {}\nactivities: {}\nrisks: {}\npaths: {}\nplanned_duration: {}\nbudget: {}\n",
                s.network.len(),
                s.network.edge_count(),
                s.network.activity_count(),
                s.network.risks().len(),
                paths.len(),
                export::sig9(plan.duration),
                export::sig9(plan.planned_cost),
            );
            s.print(&text)
        }
        Command::Cpm(_) => {
            let plan = cpm::plan(&s.network);
            let values = planned_node_values(&s.network, &plan.durations);
            let curve = planned_value_curve(&s.network, &plan, common.grid)?;
            let table = export::cpm_table(&s.network, &plan, &values);
            s.emit(
                &table,
                &[("cpm.csv", &table), ("pv.csv", &export::pv_table(&curve))],
            )
        }
        Command::Paths(_) => {
            let plan = cpm::plan(&s.network);
            let paths = enumerate_paths(&s.network)?;
            let table = export::paths_table(&s.network, &paths, &plan.durations);
            s.emit(&table, &[("paths.csv", &table)])
        }
        Command::Simulate { bins, .. } => {
            let ens = s.simulate()?;
            let pct = export::percentile_table(&ens, &export::standard_percentiles())?;
            let dh = histogram_and_cdf(ens.total_durations(), *bins)?;
            let ch = histogram_and_cdf(ens.total_costs(), *bins)?;
            s.emit(
                &pct,
                &[
                    ("percentiles.csv", &pct),
                    ("runs.csv", &export::runs_table(&s.network, &ens)),
                    (
                        "node_durations.csv",
                        &export::node_durations_table(&s.network, &ens),
                    ),
                    ("duration_histogram.csv", &export::histogram_table(&dh)),
                    ("cost_histogram.csv", &export::histogram_table(&ch)),
                ],
            )
        }
        Command::Indices { correlation, .. } => {
            let ens = s.simulate()?;
            let corr = match correlation {
                CorrelationArg::Pearson => Correlation::Pearson,
                CorrelationArg::Spearman => Correlation::Spearman,
            };
            let report = sensitivity_report(&s.network, &ens, corr)?;
            let table = export::sensitivity_table(&report);
            s.emit(&table, &[("indices.csv", &table)])
        }
        Command::Contingency {
            percentile,
            dimension,
            ..
        } => {
            let ens = s.simulate()?;
            let dim = Dimension::from(*dimension);
            let samples = match dim {
                Dimension::Duration => ens.total_durations(),
                Dimension::Cost => ens.total_costs(),
            };
            let mut rows = Vec::with_capacity(percentile.len());
            for &p in percentile {
                let reserve = contingency_reserve(&ens, p, dim)?;
                rows.push((p, stats::empirical_percentile(samples, p)?, reserve));
            }
            let table = export::contingency_table(dim.as_str(), &rows);
            s.emit(&table, &[("contingency.csv", &table)])
        }
        Command::Baseline(_) => {
            let ens = s.simulate()?;
            let base = risk_baselines(&ens, ens.plan(), common.grid)?;
            let pv = planned_value_curve(&s.network, ens.plan(), common.grid)?;
            let ari = activity_risk_index(&base);
            let table = export::baseline_table(&base, &pv);
            let ari_table = export::ari_table(&s.network, &base, &ari);
            let _ = writeln!(
                s.stderr,
                "sd_duration: {}\nsd_cost: {}",
                export::sig9(base.sd_duration),
                export::sig9(base.sd_cost)
            );
            s.emit(&table, &[("baseline.csv", &table), ("ari.csv", &ari_table)])
        }
        Command::Control { observe, .. } => {
            let ens = s.simulate()?;
            let base = baseline_or_zero(&ens, common.grid)?;
            let pv = planned_value_curve(&s.network, ens.plan(), common.grid)?;
            let ci = control_indices(observe, &base, &pv)?;
            let tri = control::triad(observe, &ens, control::DEFAULT_TRIAD_BAND)?;
            let table = export::control_table(observe, &ci, &tri);
            s.emit(&table, &[("control.csv", &table)])
        }
        Command::Forecast {
            observe, neighbors, ..
        } => {
            let ens = s.simulate()?;
            let k = neighbors.unwrap_or_else(|| control::default_neighbors(ens.n_runs()));
            let f = sevm_forecast(observe, &ens, &SevmOptions::new(k))?;
            let table = export::forecast_table(&f);
            s.emit(
                &table,
                &[
                    ("forecast.csv", &table),
                    ("neighbors.csv", &export::neighbors_table(&f)),
                ],
            )
        }
        Command::Plot {
            kind,
            observe,
            neighbors,
            dimension,
            bins,
            ..
        } => {
            let svg = draw(
                &mut s,
                *kind,
                observe.as_ref(),
                *neighbors,
                (*dimension).into(),
                *bins,
            )?;
            match s.out_dir()? {
                Some(dir) => s.write_file(&dir.join(format!("{kind}.svg")), &svg),
                None => s.print(&svg),
            }
        }
        Command::ImportMatrix { .. } => unreachable!(),
    }
}

fn draw(
    s: &mut Session<'_>,
    kind: PlotKind,
    observe: Option<&ControlObservation>,
    neighbors: Option<usize>,
    dimension: Dimension,
    bins: usize,
) -> Result<String, CliError> {
    let need_obs =
        || observe.ok_or_else(|| CliError::Config(format!("plot kind `{kind}` needs --observe")));
    if kind == PlotKind::Pv {
        let plan = cpm::plan(&s.network);
        let curve = planned_value_curve(&s.network, &plan, s.common.grid)?;
        return Ok(plot::pv(&curve.times, &curve.values)?);
    }
    let ens = s.simulate()?;
    let svg = match kind {
        PlotKind::Pv => unreachable!(),
        PlotKind::PdfCdf => {
            let samples = match dimension {
                Dimension::Duration => ens.total_durations(),
                Dimension::Cost => ens.total_costs(),
            };
            plot::pdf_cdf(&histogram_and_cdf(samples, bins)?, dimension.as_str())?
        }
        PlotKind::Scatter => plot::scatter(
            ens.total_durations(),
            ens.total_costs(),
            &histogram_and_cdf(ens.total_durations(), bins)?,
            &histogram_and_cdf(ens.total_costs(), bins)?,
        )?,
        PlotKind::CiBars => {
            let report = indices::sensitivity_report(&s.network, &ens, Correlation::Pearson)?;
            let ids: Vec<String> = report.rows.iter().map(|r| r.id.clone()).collect();
            let pick = |f: fn(&indices::ActivityIndices) -> f64| {
                report.rows.iter().map(f).collect::<Vec<_>>()
            };
            plot::ci_bars(
                &ids,
                &pick(|r| r.criticality),
                &pick(|r| r.cruciality),
                &pick(|r| r.sensitivity),
            )?
        }
        PlotKind::SrbCrb => {
            let base = risk_baselines(&ens, ens.plan(), s.common.grid)?;
            plot::srb_crb(&base.times, &base.srb, &base.crb)?
        }
        PlotKind::Triad => {
            let obs = need_obs()?;
            let x = obs.fraction(ens.budget())?;
            let fractions: Vec<f64> = (1..=50).map(|k| k as f64 / 50.0).collect();
            let bands = percentile_bands(&ens, &fractions, &[5.0, 25.0, 50.0, 75.0, 95.0])?;
            plot::triad(&bands, (obs.t, x, obs.actual_cost))?
        }
        PlotKind::Sevm => {
            let obs = need_obs()?;
            let k = neighbors.unwrap_or_else(|| control::default_neighbors(ens.n_runs()));
            let f = sevm_forecast(obs, &ens, &SevmOptions::new(k))?;
            let section = cross_section(&ens, f.fraction)?;
            plot::sevm(&section, &f, (obs.t, obs.actual_cost))?
        }
    };
    Ok(svg)
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    3
                }
            };
        }
    };
    match run_command(&cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
