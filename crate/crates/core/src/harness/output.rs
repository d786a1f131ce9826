//! CSV persistence and standalone SVG plots.
//!
//! CSV columns are `scheme,variable,value,seed,eta,r_D,r_U,objective,iters,ms`;
//! floats are written in shortest round-trip decimal form, so reading a file
//! back recovers every value exactly.

use super::{region_curves, summarize, RegionPoint, SweepRecord, SweepVariable};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const CSV_HEADER: [&str; 10] = [
    "scheme", "variable", "value", "seed", "eta", "r_D", "r_U", "objective", "iters", "ms",
];

pub fn write_csv<W: std::io::Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.scheme.name().to_string(),
            r.variable.name().to_string(),
            r.value.to_string(),
            r.seed.to_string(),
            r.eta.to_string(),
            r.rate_dl.to_string(),
            r.rate_ul.to_string(),
            r.objective.to_string(),
            r.iterations.to_string(),
            r.ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidParams("no records to write".into()));
    }
    write_csv(records, fs::File::create(path)?)
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    let bad = |field: &str, v: &str| Error::Config(format!("bad {field} `{v}` in {}", path.display()));
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let get = |i: usize| row.get(i).unwrap_or("");
        let float = |i: usize| get(i).parse::<f64>().map_err(|_| bad(CSV_HEADER[i], get(i)));
        out.push(SweepRecord {
            scheme: get(0).parse()?,
            variable: get(1).parse()?,
            value: float(2)?,
            seed: get(3).parse().map_err(|_| bad("seed", get(3)))?,
            eta: float(4)?,
            rate_dl: float(5)?,
            rate_ul: float(6)?,
            objective: float(7)?,
            iterations: get(8).parse().map_err(|_| bad("iters", get(8)))?,
            ms: float(9)?,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Median weighted sum rate versus BS-RIS distance.
    Distance,
    /// Mean downlink versus mean uplink rate, one curve per scheme.
    Region,
    /// Median weighted sum rate versus number of elements.
    Elements,
}

impl PlotKind {
    pub fn for_variable(v: SweepVariable) -> Self {
        match v {
            SweepVariable::BsRisDistance => PlotKind::Distance,
            SweepVariable::Eta => PlotKind::Region,
            SweepVariable::RisElements => PlotKind::Elements,
        }
    }

    fn variable(self) -> SweepVariable {
        match self {
            PlotKind::Distance => SweepVariable::BsRisDistance,
            PlotKind::Region => SweepVariable::Eta,
            PlotKind::Elements => SweepVariable::RisElements,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0, 0.2);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let step = nice_step(hi - lo);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart with ticks, axis labels and a legend; one polyline per series.
pub fn render_svg(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x0, x1, xs) = axis_range(all().map(|p| p.0));
    let (y0, y1, ys) = axis_range(all().map(|p| p.1));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let ticks = |lo: f64, hi: f64, step: f64| {
        let n = ((hi - lo) / step).round() as i64;
        (0..=n).map(move |k| lo + k as f64 * step)
    };
    for x in ticks(x0, x1, xs) {
        let px = sx(x);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{}" stroke="#ddd"/><text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 16.0,
            tick_label(x, xs)
        );
    }
    for y in ticks(y0, y1, ys) {
        let py = sy(y);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            py + 4.0,
            tick_label(y, ys)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline data-series="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(&ser.label),
            pts.join(" ")
        );
        for &(x, y) in &ser.points {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10()).ceil() as usize };
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.decimals$}")
}

fn series_for(records: &[SweepRecord], kind: PlotKind) -> Vec<Series> {
    match kind {
        PlotKind::Region => region_curves(records)
            .into_iter()
            .map(|c| Series {
                label: c.scheme.name().to_string(),
                points: c.points.iter().map(|p| (p.rate_dl, p.rate_ul)).collect(),
            })
            .collect(),
        PlotKind::Distance | PlotKind::Elements => {
            let mut out: Vec<Series> = Vec::new();
            for s in summarize(records) {
                let label = s.scheme.name();
                match out.last_mut() {
                    Some(ser) if ser.label == label => ser.points.push((s.value, s.median_objective)),
                    _ => out.push(Series {
                        label: label.to_string(),
                        points: vec![(s.value, s.median_objective)],
                    }),
                }
            }
            out
        }
    }
}

/// Writes an SVG for a sweep; `kind` must match the sweep variable.
pub fn emit_plot(records: &[SweepRecord], kind: PlotKind, path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidParams("no records to plot".into()));
    }
    if let Some(r) = records.iter().find(|r| r.variable != kind.variable()) {
        return Err(Error::InvalidParams(format!(
            "{kind:?} plot needs a {} sweep, got {}",
            kind.variable(),
            r.variable
        )));
    }
    let rate = "weighted sum rate (bits/s/Hz)";
    let svg = match kind {
        PlotKind::Distance => render_svg(
            "Median weighted sum rate vs BS-RIS distance",
            SweepVariable::BsRisDistance.label(),
            rate,
            &series_for(records, kind),
        ),
        PlotKind::Elements => render_svg(
            "Median weighted sum rate vs number of elements",
            SweepVariable::RisElements.label(),
            rate,
            &series_for(records, kind),
        ),
        PlotKind::Region => render_svg(
            "Downlink-uplink rate region",
            "downlink rate r_D (bits/s/Hz)",
            "uplink rate r_U (bits/s/Hz)",
            &series_for(records, kind),
        ),
    };
    fs::write(path, svg)?;
    Ok(())
}

/// Several labelled region curves (for example two-way at different
/// distances) in one figure.
pub fn emit_region_overlay(curves: &[(String, Vec<RegionPoint>)], path: &Path) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::InvalidParams("no curves to plot".into()));
    }
    let series: Vec<Series> = curves
        .iter()
        .map(|(label, pts)| Series {
            label: label.clone(),
            points: pts.iter().map(|p| (p.rate_dl, p.rate_ul)).collect(),
        })
        .collect();
    let svg = render_svg(
        "Rate regions",
        "downlink rate r_D (bits/s/Hz)",
        "uplink rate r_U (bits/s/Hz)",
        &series,
    );
    fs::write(path, svg)?;
    Ok(())
}

/// Scheme-wise summary table: `scheme,variable,value,count,median_objective,
/// mean_objective,median_r_D,median_r_U,mean_r_D,mean_r_U`.
pub fn emit_summary_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    let variable = records
        .first()
        .map(|r| r.variable)
        .ok_or_else(|| Error::InvalidParams("no records to summarize".into()))?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "scheme",
        "variable",
        "value",
        "count",
        "median_objective",
        "mean_objective",
        "median_r_D",
        "median_r_U",
        "mean_r_D",
        "mean_r_U",
    ])?;
    for s in summarize(records) {
        w.write_record([
            s.scheme.name().to_string(),
            variable.name().to_string(),
            s.value.to_string(),
            s.count.to_string(),
            s.median_objective.to_string(),
            s.mean_objective.to_string(),
            s.median_rate_dl.to_string(),
            s.median_rate_ul.to_string(),
            s.mean_rate_dl.to_string(),
            s.mean_rate_ul.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `scheme,eta,r_D,r_U` for the Pareto frontier of each scheme.
pub fn emit_frontier_csv(records: &[SweepRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scheme", "eta", "r_D", "r_U"])?;
    for c in region_curves(records) {
        for p in &c.frontier {
            w.write_record([
                c.scheme.name().to_string(),
                p.eta.to_string(),
                p.rate_dl.to_string(),
                p.rate_ul.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
