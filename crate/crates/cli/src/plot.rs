//! Log-scale SVG line plots with a fixed layout and palette.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hotune::Method;

use crate::error::CliError;
use crate::trace::Trace;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 260.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const HEADROOM: f64 = 6.0;

/// Indexed like [`Method::ALL`].
const METHOD_COLORS: [&str; 7] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#000000", "#8c564b"];
const EXTRA_COLORS: [&str; 4] = ["#7f7f7f", "#bcbd22", "#17becf", "#e377c2"];

pub fn method_color(m: Method) -> &'static str {
    METHOD_COLORS[Method::ALL.iter().position(|&x| x == m).expect("method in ALL")]
}

/// One polyline.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
    /// Last iteration before the guard tripped; the line ends there with a marker.
    pub diverged_at: Option<usize>,
}

/// Which trace column is plotted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    NormalizedLossGap,
    LossGap,
    Loss,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::NormalizedLossGap => "(L_k(θ_k) − L_k(θ*)) / L̄_k",
            Metric::LossGap => "L_k(θ_k) − L_k(θ*)",
            Metric::Loss => "L_k(θ_k)",
        }
    }

    fn value(self, row: &crate::trace::TraceRow) -> Option<f64> {
        match self {
            Metric::NormalizedLossGap => row.normalized_loss_gap,
            Metric::LossGap => row.loss_gap,
            Metric::Loss => Some(row.loss),
        }
    }

    /// The most specific column every row of every trace has.
    pub fn common(traces: &[&Trace]) -> Metric {
        [Metric::NormalizedLossGap, Metric::LossGap]
            .into_iter()
            .find(|m| traces.iter().all(|t| t.rows.iter().all(|r| m.value(r).is_some())))
            .unwrap_or(Metric::Loss)
    }
}

pub fn series_from_trace(trace: &Trace, metric: Metric, label: String, color: String) -> Series {
    let points = trace.rows.iter().filter_map(|r| metric.value(r).map(|y| (r.k as f64, y))).collect();
    Series { label, color, dashed: false, points, diverged_at: trace.diverged_at() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the series on a log-y axis. Nonpositive and non-finite values are
/// skipped (a log axis cannot show them).
pub fn render_svg(title: &str, y_label: &str, series: &[Series]) -> Result<String, CliError> {
    if series.is_empty() {
        return Err(CliError::Plot("nothing to plot".into()));
    }
    if let Some(s) = series.iter().find(|s| s.points.is_empty()) {
        return Err(CliError::Plot(format!("series `{}` is empty", s.label)));
    }
    let visible = |&(_, y): &(f64, f64)| y > 0.0 && y.is_finite();
    let all = || series.iter().flat_map(|s| s.points.iter().copied().filter(visible));
    if all().next().is_none() {
        return Err(CliError::Plot("no positive finite values to plot".into()));
    }
    let x_max = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).fold(1.0, f64::max);
    let lo = all().map(|p| p.1.log10()).fold(f64::INFINITY, f64::min).floor();
    let mut hi = all().map(|p| p.1.log10()).fold(f64::NEG_INFINITY, f64::max).ceil();
    // diverging series may leave the frame by at most HEADROOM decades
    let bounded = series
        .iter()
        .filter(|s| s.diverged_at.is_none())
        .flat_map(|s| s.points.iter().copied().filter(visible))
        .map(|p| p.1.log10())
        .fold(f64::NEG_INFINITY, f64::max);
    if bounded.is_finite() {
        hi = hi.min(bounded.ceil() + HEADROOM);
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + pw * x / x_max;
    let py = |y: f64| TOP + ph * (hi - y.log10().min(hi)) / (hi - lo);

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(w, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(title));
    let _ = writeln!(w, r#"<defs><clipPath id="frame"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath></defs>"#);
    let _ = writeln!(w, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);

    // decade ticks, thinned to at most ~12 labels
    let decades = (hi - lo) as i64;
    let stride = (decades / 12 + 1).max(1);
    for e in (lo as i64..=hi as i64).filter(|e| (e - lo as i64) % stride == 0) {
        let y = TOP + ph * (hi - e as f64) / (hi - lo);
        let _ = writeln!(w, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + pw);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, LEFT - 6.0, y + 4.0);
    }
    for i in 0..=5 {
        let xv = x_max * i as f64 / 5.0;
        let x = px(xv);
        let _ = writeln!(w, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(w, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 20.0, xv.round());
    }
    let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration k</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );

    for (idx, s) in series.iter().enumerate() {
        let mut path = String::new();
        let mut pen_down = false;
        for p in &s.points {
            if !visible(p) {
                pen_down = false;
                continue;
            }
            let _ = write!(path, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, px(p.0), py(p.1));
            pen_down = true;
        }
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(w, r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5" clip-path="url(#frame)"{dash}/>"#, path.trim_end(), s.color);
        if let (Some(k), Some(&(x, y))) = (s.diverged_at, s.points.iter().rev().find(|p| visible(p))) {
            let (cx, cy) = (px(x), py(y));
            let _ = writeln!(w, r#"<path d="M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}" stroke="{}" stroke-width="2"/>"#,
                cx - 5.0, cy - 5.0, cx + 5.0, cy + 5.0, cx - 5.0, cy + 5.0, cx + 5.0, cy - 5.0, s.color);
            let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" fill="{}">diverged at k={k}</text>"#, cx + 8.0, cy + 16.0 + 14.0 * idx as f64, s.color);
        }
    }

    let lx = WIDTH - RIGHT + 15.0;
    for (i, s) in series.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(w, r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"{dash}/>"#, lx + 25.0, s.color);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 32.0, y + 4.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Method whose tag ends the file stem (`<name>_<tag>.csv`).
pub fn method_from_path(path: &Path) -> Option<Method> {
    let stem = path.file_stem()?.to_str()?;
    Method::ALL
        .into_iter()
        .filter(|m| stem == m.tag() || stem.ends_with(&format!("_{}", m.tag())))
        .max_by_key(|m| m.tag().len())
}

/// Plots CSV traces into one SVG. Nothing is written on error.
pub fn plot_files(inputs: &[PathBuf], out: &Path) -> Result<(), CliError> {
    if inputs.is_empty() {
        return Err(CliError::Plot("no input traces".into()));
    }
    let traces = inputs.iter().map(|p| Trace::read(p)).collect::<Result<Vec<_>, _>>()?;
    for (t, p) in traces.iter().zip(inputs) {
        if t.rows.is_empty() {
            return Err(CliError::trace(p, "trace has no rows"));
        }
    }
    let metric = Metric::common(&traces.iter().collect::<Vec<_>>());
    let mut extra = EXTRA_COLORS.iter().cycle();
    let series: Vec<Series> = traces
        .iter()
        .zip(inputs)
        .map(|(t, p)| {
            let (label, color) = match method_from_path(p) {
                Some(m) => (m.display_name().to_string(), method_color(m).to_string()),
                None => (p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(), extra.next().unwrap().to_string()),
            };
            series_from_trace(t, metric, label, color)
        })
        .collect();
    let svg = render_svg("", metric.label(), &series)?;
    std::fs::write(out, svg).map_err(|e| CliError::io(out, e))
}
