//! Standalone SVG charts.
//!
//! Every data series is drawn as one `<g class="series">` element carrying
//! `data-label`, `data-points` and, for lines, `data-last` (the last data
//! point as `x,y`), so charts can be checked structurally.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use mcrisk_core::control::{PercentileBands, SevmForecast};
use mcrisk_core::montecarlo::Histogram;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlotError {
    #[error("{what}: expected {expected} values, found {found}")]
    ShapeMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("nothing to plot: {0}")]
    Empty(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Pv,
    PdfCdf,
    Scatter,
    CiBars,
    SrbCrb,
    Triad,
    Sevm,
}

impl PlotKind {
    pub const ALL: [PlotKind; 7] = [
        PlotKind::Pv,
        PlotKind::PdfCdf,
        PlotKind::Scatter,
        PlotKind::CiBars,
        PlotKind::SrbCrb,
        PlotKind::Triad,
        PlotKind::Sevm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::Pv => "pv",
            PlotKind::PdfCdf => "pdfcdf",
            PlotKind::Scatter => "scatter",
            PlotKind::CiBars => "ci_bars",
            PlotKind::SrbCrb => "srb_crb",
            PlotKind::Triad => "triad",
            PlotKind::Sevm => "sevm",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PlotKind::ALL.iter().map(|k| k.as_str()).collect();
                format!(
                    "unknown plot kind `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

pub const RED: &str = "#d62728";
pub const BLUE: &str = "#1f77b4";
const GREY: &str = "#b0b0b0";
const BLACK: &str = "#222222";
const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2",
];

#[derive(Debug, Clone)]
enum Shape {
    Line,
    Step,
    Points,
    Marker,
    /// Vertical bars spanning `[x0, x1]` from 0 to `y`.
    Bars {
        x0: Vec<f64>,
        x1: Vec<f64>,
    },
    /// Horizontal bars spanning `[y0, y1]` from 0 to `x`.
    HBars {
        y0: Vec<f64>,
        y1: Vec<f64>,
    },
    /// Grouped vertical bars: slot `k` of `of` within unit-wide categories.
    Grouped {
        k: usize,
        of: usize,
    },
}

#[derive(Debug, Clone)]
struct Series {
    label: String,
    color: String,
    shape: Shape,
    xs: Vec<f64>,
    ys: Vec<f64>,
    secondary: bool,
}

impl Series {
    fn new(label: &str, color: &str, shape: Shape, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Series {
            label: label.into(),
            color: color.into(),
            shape,
            xs,
            ys,
            secondary: false,
        }
    }

    fn extent_x(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Bars { x0, x1 } => x0.iter().chain(x1).copied().collect(),
            Shape::HBars { .. } => self.xs.iter().copied().chain([0.0]).collect(),
            Shape::Grouped { .. } => vec![0.0, self.xs.len() as f64],
            _ => self.xs.clone(),
        }
    }

    fn extent_y(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Bars { .. } | Shape::Grouped { .. } => {
                self.ys.iter().copied().chain([0.0]).collect()
            }
            Shape::HBars { y0, y1 } => y0.iter().chain(y1).copied().collect(),
            _ => self.ys.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Debug, Clone)]
struct Panel {
    rect: Rect,
    title: String,
    x_label: String,
    y_label: String,
    y2_label: Option<String>,
    series: Vec<Series>,
    x_range: Option<(f64, f64)>,
    y_range: Option<(f64, f64)>,
    y2_range: Option<(f64, f64)>,
    categories: Option<Vec<String>>,
    show_legend: bool,
}

impl Panel {
    fn new(rect: Rect, title: &str, x_label: &str, y_label: &str) -> Self {
        Panel {
            rect,
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            y2_label: None,
            series: Vec::new(),
            x_range: None,
            y_range: None,
            y2_range: None,
            categories: None,
            show_legend: true,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e6).contains(&a) {
        let s = format!("{v:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.3e}")
    }
}

fn span(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((a, b)) => Some((a.min(v), b.max(v))),
        })
}

fn padded((lo, hi): (f64, f64)) -> (f64, f64) {
    if hi > lo {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn ticks((lo, hi): (f64, f64)) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil();
    (0..20)
        .map(|k| (first + k as f64) * step)
        .take_while(|t| *t <= hi + 1e-9 * step)
        .map(|t| if t.abs() < 1e-12 * step { 0.0 } else { t })
        .collect()
}

struct Scale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

const PAD_L: f64 = 64.0;
const PAD_R: f64 = 16.0;
const PAD_T: f64 = 28.0;
const PAD_B: f64 = 44.0;

fn render_panel(out: &mut String, p: &Panel) {
    let right = if p.y2_label.is_some() { 56.0 } else { PAD_R };
    let plot = Rect {
        x: p.rect.x + PAD_L,
        y: p.rect.y + PAD_T,
        w: (p.rect.w - PAD_L - right).max(10.0),
        h: (p.rect.h - PAD_T - PAD_B).max(10.0),
    };
    let xr = p.x_range.unwrap_or_else(|| {
        padded(span(p.series.iter().flat_map(|s| s.extent_x())).unwrap_or((0.0, 1.0)))
    });
    let yr = p.y_range.unwrap_or_else(|| {
        padded(
            span(
                p.series
                    .iter()
                    .filter(|s| !s.secondary)
                    .flat_map(|s| s.extent_y()),
            )
            .unwrap_or((0.0, 1.0)),
        )
    });
    let y2r = p.y2_range.unwrap_or((0.0, 1.0));
    let sx = Scale {
        d0: xr.0,
        d1: xr.1,
        p0: plot.x,
        p1: plot.x + plot.w,
    };
    let sy = Scale {
        d0: yr.0,
        d1: yr.1,
        p0: plot.y + plot.h,
        p1: plot.y,
    };
    let sy2 = Scale {
        d0: y2r.0,
        d1: y2r.1,
        p0: plot.y + plot.h,
        p1: plot.y,
    };

    let _ = writeln!(out, "<g class=\"panel\">");
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\">{}</text>",
        plot.x + plot.w / 2.0,
        p.rect.y + 18.0,
        escape(&p.title)
    );
    // Axes, ticks and labels.
    let _ = writeln!(
        out,
        "<g class=\"axes\" stroke=\"{BLACK}\" font-size=\"10\">"
    );
    let _ = writeln!(
        out,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\"/>",
        plot.x, plot.y, plot.w, plot.h
    );
    if let Some(cats) = &p.categories {
        for (k, c) in cats.iter().enumerate() {
            let x = sx.map(k as f64 + 0.5);
            let _ = writeln!(
                out,
                "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" stroke=\"none\">{}</text>",
                plot.y + plot.h + 14.0,
                escape(c)
            );
        }
    } else {
        for t in ticks(xr) {
            let x = sx.map(t);
            let _ = writeln!(
                out,
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\"/><text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\" stroke=\"none\">{}</text>",
                plot.y + plot.h,
                plot.y + plot.h + 4.0,
                plot.y + plot.h + 15.0,
                fmt_num(t)
            );
        }
    }
    for t in ticks(yr) {
        let y = sy.map(t);
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" stroke=\"none\">{}</text>",
            plot.x - 4.0,
            plot.x,
            plot.x - 6.0,
            y + 3.5,
            fmt_num(t)
        );
    }
    if p.y2_label.is_some() {
        for t in ticks(y2r) {
            let y = sy2.map(t);
            let _ = writeln!(
                out,
                "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\"/><text x=\"{:.1}\" y=\"{:.1}\" stroke=\"none\">{}</text>",
                plot.x + plot.w,
                plot.x + plot.w + 4.0,
                plot.x + plot.w + 6.0,
                y + 3.5,
                fmt_num(t)
            );
        }
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" stroke=\"none\" font-size=\"11\">{}</text>",
        plot.x + plot.w / 2.0,
        plot.y + plot.h + 32.0,
        escape(&p.x_label)
    );
    let (lx, ly) = (p.rect.x + 14.0, plot.y + plot.h / 2.0);
    let _ = writeln!(
        out,
        "<text x=\"{lx:.1}\" y=\"{ly:.1}\" text-anchor=\"middle\" stroke=\"none\" font-size=\"11\" transform=\"rotate(-90 {lx:.1} {ly:.1})\">{}</text>",
        escape(&p.y_label)
    );
    if let Some(l2) = &p.y2_label {
        let (lx, ly) = (p.rect.x + p.rect.w - 10.0, plot.y + plot.h / 2.0);
        let _ = writeln!(
            out,
            "<text x=\"{lx:.1}\" y=\"{ly:.1}\" text-anchor=\"middle\" stroke=\"none\" font-size=\"11\" transform=\"rotate(90 {lx:.1} {ly:.1})\">{}</text>",
            escape(l2)
        );
    }
    let _ = writeln!(out, "</g>");

    for s in &p.series {
        let ys = if s.secondary { &sy2 } else { &sy };
        render_series(out, s, &sx, ys);
    }

    if p.show_legend && !p.series.is_empty() {
        let _ = writeln!(out, "<g class=\"legend\" font-size=\"10\">");
        for (k, s) in p.series.iter().enumerate() {
            let y = plot.y + 10.0 + 14.0 * k as f64;
            let x = plot.x + 8.0;
            let _ = writeln!(
                out,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
                y - 8.0,
                s.color,
                x + 14.0,
                y + 1.0,
                escape(&s.label)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, "</g>");
}

fn render_series(out: &mut String, s: &Series, sx: &Scale, sy: &Scale) {
    let mut attrs = format!(
        "class=\"series\" data-label=\"{}\" data-points=\"{}\"",
        escape(&s.label),
        s.xs.len()
    );
    if let (Some(x), Some(y)) = (s.xs.last(), s.ys.last()) {
        if matches!(s.shape, Shape::Line | Shape::Step) {
            let _ = write!(attrs, " data-last=\"{x},{y}\"");
        }
    }
    let _ = writeln!(out, "<g {attrs}>");
    match &s.shape {
        Shape::Line | Shape::Step => {
            let mut pts = String::new();
            let mut prev: Option<f64> = None;
            for (&x, &y) in s.xs.iter().zip(&s.ys) {
                if let (Shape::Step, Some(py)) = (&s.shape, prev) {
                    let _ = write!(pts, "{:.2},{:.2} ", sx.map(x), sy.map(py));
                }
                let _ = write!(pts, "{:.2},{:.2} ", sx.map(x), sy.map(y));
                prev = Some(y);
            }
            let _ = writeln!(
                out,
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\" points=\"{}\"/>",
                s.color,
                pts.trim_end()
            );
        }
        Shape::Points => {
            for (&x, &y) in s.xs.iter().zip(&s.ys) {
                let _ = writeln!(
                    out,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{}\" fill-opacity=\"0.6\"/>",
                    sx.map(x),
                    sy.map(y),
                    s.color
                );
            }
        }
        Shape::Marker => {
            for (&x, &y) in s.xs.iter().zip(&s.ys) {
                let (px, py) = (sx.map(x), sy.map(y));
                let _ = writeln!(
                    out,
                    "<path d=\"M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}\" stroke=\"{}\" stroke-width=\"2.5\"/>",
                    px - 6.0, py - 6.0, px + 6.0, py + 6.0, px - 6.0, py + 6.0, px + 6.0, py - 6.0,
                    s.color
                );
            }
        }
        Shape::Bars { x0, x1 } => {
            for ((&a, &b), &y) in x0.iter().zip(x1).zip(&s.ys) {
                let (l, r) = (sx.map(a), sx.map(b));
                let w = (r - l).max(2.0);
                let (top, base) = (sy.map(y), sy.map(0.0));
                let _ = writeln!(
                    out,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{w:.2}\" height=\"{:.2}\" fill=\"{}\" fill-opacity=\"0.7\" stroke=\"white\" stroke-width=\"0.5\"/>",
                    l.min(r - w),
                    top.min(base),
                    (base - top).abs(),
                    s.color
                );
            }
        }
        Shape::HBars { y0, y1 } => {
            for ((&a, &b), &x) in y0.iter().zip(y1).zip(&s.xs) {
                let (t, bt) = (sy.map(b), sy.map(a));
                let h = (bt - t).max(2.0);
                let (l, r) = (sx.map(0.0), sx.map(x));
                let _ = writeln!(
                    out,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"{}\" fill-opacity=\"0.7\" stroke=\"white\" stroke-width=\"0.5\"/>",
                    l.min(r),
                    t.min(bt - h),
                    (r - l).abs(),
                    s.color
                );
            }
        }
        Shape::Grouped { k, of } => {
            let slot = 0.8 / *of as f64;
            for (c, &y) in s.ys.iter().enumerate() {
                let a = c as f64 + 0.1 + slot * *k as f64;
                let (l, r) = (sx.map(a), sx.map(a + slot));
                let (top, base) = (sy.map(y), sy.map(0.0));
                let _ = writeln!(
                    out,
                    "<rect x=\"{l:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                    top.min(base),
                    r - l,
                    (base - top).abs(),
                    s.color
                );
            }
        }
    }
    let _ = writeln!(out, "</g>");
}

fn document(width: f64, height: f64, title: &str, panels: &[Panel]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\">"
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for p in panels {
        render_panel(&mut out, p);
    }
    out.push_str("</svg>\n");
    out
}

fn same_len(what: &str, expected: usize, found: usize) -> Result<(), PlotError> {
    if expected != found {
        return Err(PlotError::ShapeMismatch {
            what: what.into(),
            expected,
            found,
        });
    }
    Ok(())
}

fn non_empty(what: &str, n: usize) -> Result<(), PlotError> {
    if n == 0 {
        return Err(PlotError::Empty(what.into()));
    }
    Ok(())
}

const W: f64 = 720.0;
const H: f64 = 440.0;

fn full() -> Rect {
    Rect {
        x: 0.0,
        y: 0.0,
        w: W,
        h: H,
    }
}

/// Planned value against time.
pub fn pv(times: &[f64], values: &[f64]) -> Result<String, PlotError> {
    non_empty("planned value curve", times.len())?;
    same_len("planned values", times.len(), values.len())?;
    let mut p = Panel::new(full(), "Planned value", "time", "cumulative planned cost");
    p.series.push(Series::new(
        "PV",
        BLUE,
        Shape::Line,
        times.to_vec(),
        values.to_vec(),
    ));
    Ok(document(W, H, "Planned value", &[p]))
}

/// Density bars with the cumulative curve on a secondary axis.
pub fn pdf_cdf(h: &Histogram, quantity: &str) -> Result<String, PlotError> {
    non_empty("histogram", h.bins())?;
    same_len("histogram edges", h.bins() + 1, h.edges.len())?;
    same_len("histogram cdf", h.bins(), h.cdf.len())?;
    let title = format!("Distribution of {quantity}");
    let mut p = Panel::new(full(), &title, quantity, "probability");
    p.y2_label = Some("cumulative probability".into());
    p.y2_range = Some((0.0, 1.05));
    let (x0, x1) = (h.edges[..h.bins()].to_vec(), h.edges[1..].to_vec());
    p.series.push(Series::new(
        "pdf",
        BLUE,
        Shape::Bars {
            x0: x0.clone(),
            x1: x1.clone(),
        },
        h.centers(),
        h.pdf.clone(),
    ));
    // The cdf steps up at each bin's right edge.
    let mut xs = vec![h.edges[0]];
    let mut ys = vec![0.0];
    xs.extend_from_slice(&x1);
    ys.extend_from_slice(&h.cdf);
    let mut cdf = Series::new("cdf", RED, Shape::Step, xs, ys);
    cdf.secondary = true;
    p.series.push(cdf);
    let y_top = h.pdf.iter().copied().fold(0.0, f64::max);
    p.y_range = Some((0.0, if y_top > 0.0 { 1.05 * y_top } else { 1.0 }));
    Ok(document(W, H, &title, &[p]))
}

/// Duration-cost cloud of all runs with marginal histograms.
pub fn scatter(
    durations: &[f64],
    costs: &[f64],
    duration_hist: &Histogram,
    cost_hist: &Histogram,
) -> Result<String, PlotError> {
    non_empty("runs", durations.len())?;
    same_len("run costs", durations.len(), costs.len())?;
    let (w, h) = (W, 560.0);
    let main = Rect {
        x: 0.0,
        y: 140.0,
        w: w - 160.0,
        h: h - 140.0,
    };
    let xr = padded(
        span(
            durations
                .iter()
                .copied()
                .chain(duration_hist.edges.iter().copied()),
        )
        .unwrap(),
    );
    let yr = padded(span(costs.iter().copied().chain(cost_hist.edges.iter().copied())).unwrap());

    let mut cloud = Panel::new(main, "", "duration", "cost");
    cloud.x_range = Some(xr);
    cloud.y_range = Some(yr);
    cloud.show_legend = false;
    cloud.series.push(Series::new(
        "runs",
        BLUE,
        Shape::Points,
        durations.to_vec(),
        costs.to_vec(),
    ));

    let mut top = Panel::new(
        Rect {
            x: 0.0,
            y: 0.0,
            w: main.w,
            h: 160.0,
        },
        "Duration and cost of each run",
        "",
        "p",
    );
    top.x_range = Some(xr);
    top.show_legend = false;
    top.series.push(Series::new(
        "duration marginal",
        BLUE,
        Shape::Bars {
            x0: duration_hist.edges[..duration_hist.bins()].to_vec(),
            x1: duration_hist.edges[1..].to_vec(),
        },
        duration_hist.centers(),
        duration_hist.pdf.clone(),
    ));
    let top_max = duration_hist
        .pdf
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(1e-12);
    top.y_range = Some((0.0, 1.05 * top_max));

    let mut side = Panel::new(
        Rect {
            x: main.w - 48.0,
            y: main.y,
            w: 208.0,
            h: main.h,
        },
        "",
        "p",
        "",
    );
    side.y_range = Some(yr);
    side.show_legend = false;
    let side_max = cost_hist.pdf.iter().copied().fold(0.0, f64::max).max(1e-12);
    side.x_range = Some((0.0, 1.05 * side_max));
    side.series.push(Series::new(
        "cost marginal",
        BLUE,
        Shape::HBars {
            y0: cost_hist.edges[..cost_hist.bins()].to_vec(),
            y1: cost_hist.edges[1..].to_vec(),
        },
        cost_hist.pdf.clone(),
        cost_hist.centers(),
    ));
    Ok(document(
        w,
        h,
        "Duration and cost of each run",
        &[top, cloud, side],
    ))
}

/// CI, CrI and SSI per activity as grouped bars.
pub fn ci_bars(ids: &[String], ci: &[f64], cri: &[f64], ssi: &[f64]) -> Result<String, PlotError> {
    non_empty("activities", ids.len())?;
    same_len("criticality index", ids.len(), ci.len())?;
    same_len("cruciality index", ids.len(), cri.len())?;
    same_len("schedule sensitivity index", ids.len(), ssi.len())?;
    let width = (W).max(120.0 + 48.0 * ids.len() as f64);
    let mut p = Panel::new(
        Rect {
            x: 0.0,
            y: 0.0,
            w: width,
            h: H,
        },
        "Sensitivity indices",
        "activity",
        "index",
    );
    p.categories = Some(ids.to_vec());
    p.x_range = Some((0.0, ids.len() as f64));
    let top = ci.iter().chain(cri).chain(ssi).copied().fold(1.0, f64::max);
    p.y_range = Some((0.0, 1.05 * top));
    let xs: Vec<f64> = (0..ids.len()).map(|k| k as f64 + 0.5).collect();
    for (k, (label, values)) in [("CI", ci), ("CrI", cri), ("SSI", ssi)]
        .into_iter()
        .enumerate()
    {
        p.series.push(Series::new(
            label,
            PALETTE[k],
            Shape::Grouped { k, of: 3 },
            xs.clone(),
            values.to_vec(),
        ));
    }
    Ok(document(width, H, "Sensitivity indices", &[p]))
}

/// Schedule and cost risk baselines over planned time.
pub fn srb_crb(times: &[f64], srb: &[f64], crb: &[f64]) -> Result<String, PlotError> {
    non_empty("baseline grid", times.len())?;
    same_len("schedule risk baseline", times.len(), srb.len())?;
    same_len("cost risk baseline", times.len(), crb.len())?;
    let half = W / 2.0;
    let mut a = Panel::new(
        Rect {
            x: 0.0,
            y: 0.0,
            w: half,
            h: H,
        },
        "Schedule risk baseline",
        "planned time",
        "SRB",
    );
    a.series.push(Series::new(
        "SRB",
        BLUE,
        Shape::Line,
        times.to_vec(),
        srb.to_vec(),
    ));
    let mut b = Panel::new(
        Rect {
            x: half,
            y: 0.0,
            w: half,
            h: H,
        },
        "Cost risk baseline",
        "planned time",
        "CRB",
    );
    b.series.push(Series::new(
        "CRB",
        RED,
        Shape::Line,
        times.to_vec(),
        crb.to_vec(),
    ));
    Ok(document(W, H, "Risk baselines", &[a, b]))
}

/// Percentile bands of time and cost against completion fraction, with the
/// observed project.
pub fn triad(bands: &PercentileBands, observed: (f64, f64, f64)) -> Result<String, PlotError> {
    let nx = bands.fractions.len();
    non_empty("completion fractions", nx)?;
    same_len("time bands", bands.percentiles.len(), bands.time.len())?;
    same_len("cost bands", bands.percentiles.len(), bands.cost.len())?;
    for (row_t, row_c) in bands.time.iter().zip(&bands.cost) {
        same_len("time band", nx, row_t.len())?;
        same_len("cost band", nx, row_c.len())?;
    }
    let (t, x, c) = observed;
    let half = W / 2.0;
    let mut a = Panel::new(
        Rect {
            x: 0.0,
            y: 0.0,
            w: half,
            h: H,
        },
        "Time to reach completion",
        "time",
        "completion",
    );
    let mut b = Panel::new(
        Rect {
            x: half,
            y: 0.0,
            w: half,
            h: H,
        },
        "Cost to reach completion",
        "cost",
        "completion",
    );
    for (k, p) in bands.percentiles.iter().enumerate() {
        let label = format!("P{}", fmt_num(*p));
        let color = PALETTE[k % PALETTE.len()];
        a.series.push(Series::new(
            &label,
            color,
            Shape::Line,
            bands.time[k].clone(),
            bands.fractions.clone(),
        ));
        b.series.push(Series::new(
            &label,
            color,
            Shape::Line,
            bands.cost[k].clone(),
            bands.fractions.clone(),
        ));
    }
    a.series.push(Series::new(
        "observed",
        BLACK,
        Shape::Marker,
        vec![t],
        vec![x],
    ));
    b.series.push(Series::new(
        "observed",
        BLACK,
        Shape::Marker,
        vec![c],
        vec![x],
    ));
    Ok(document(W, H, "Triad", &[a, b]))
}

/// Runs at the observed completion fraction; neighbors that finish late in
/// red, the rest in blue.
pub fn sevm(
    section: &[(f64, f64)],
    forecast: &SevmForecast,
    observed: (f64, f64),
) -> Result<String, PlotError> {
    non_empty("cross-section", section.len())?;
    for n in &forecast.neighbors {
        if n.run >= section.len() {
            return Err(PlotError::ShapeMismatch {
                what: "neighbor run index".into(),
                expected: section.len(),
                found: n.run + 1,
            });
        }
    }
    let mut p = Panel::new(
        full(),
        &format!(
            "Nearest runs at {:.1}% completion",
            100.0 * forecast.fraction
        ),
        "time at control",
        "cost at control",
    );
    let mut chosen = vec![false; section.len()];
    for n in &forecast.neighbors {
        chosen[n.run] = true;
    }
    let others: Vec<(f64, f64)> = section
        .iter()
        .zip(&chosen)
        .filter(|(_, c)| !**c)
        .map(|(p, _)| *p)
        .collect();
    let (late, early): (Vec<_>, Vec<_>) = forecast.neighbors.iter().partition(|n| n.late);
    let mut add = |label: &str, color: &str, pts: Vec<(f64, f64)>| {
        if !pts.is_empty() {
            let (xs, ys) = pts.into_iter().unzip();
            p.series
                .push(Series::new(label, color, Shape::Points, xs, ys));
        }
    };
    add("other runs", GREY, others);
    add(
        "late",
        RED,
        late.iter()
            .map(|n| (n.control_time, n.control_cost))
            .collect(),
    );
    add(
        "early",
        BLUE,
        early
            .iter()
            .map(|n| (n.control_time, n.control_cost))
            .collect(),
    );
    p.series.push(Series::new(
        "observed",
        BLACK,
        Shape::Marker,
        vec![observed.0],
        vec![observed.1],
    ));
    Ok(document(W, H, "SEVM neighbors", &[p]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip() {
        for k in PlotKind::ALL {
            assert_eq!(k.as_str().parse::<PlotKind>().unwrap(), k);
        }
        assert!("pie".parse::<PlotKind>().is_err());
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks((0.0, 10.0)), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let labels: Vec<String> = ticks((0.0, 1.0)).into_iter().map(fmt_num).collect();
        assert_eq!(labels, ["0", "0.2", "0.4", "0.6", "0.8", "1"]);
    }

    #[test]
    fn shape_mismatch() {
        assert_eq!(
            pv(&[0.0, 1.0], &[0.0]),
            Err(PlotError::ShapeMismatch {
                what: "planned values".into(),
                expected: 2,
                found: 1
            })
        );
        assert!(matches!(srb_crb(&[], &[], &[]), Err(PlotError::Empty(_))));
    }

    #[test]
    fn escapes_labels() {
        let svg = ci_bars(&["A<1>".into()], &[1.0], &[1.0], &[1.0]).unwrap();
        assert!(svg.contains("A&lt;1&gt;"));
        assert_eq!(svg.matches("class=\"series\"").count(), 3);
    }
}
