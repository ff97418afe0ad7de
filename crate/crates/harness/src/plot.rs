//! Minimal SVG line charts for metrics, evaluation and telemetry CSVs.

use std::fmt::Write as _;

use racer_core::agent::{MetricsLog, METRICS_HEADER};
use racer_core::sim::{TelemetryLog, TELEMETRY_HEADER};

use crate::HarnessError;

/// Trailing moving average; the first `window − 1` entries average what is available.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= w {
            sum -= values[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }

    pub fn from_values(name: impl Into<String>, values: &[f64]) -> Self {
        Self::new(name, values.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect())
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 450.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// One polyline per series; non-finite points are dropped.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<String, HarnessError> {
    let finite: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect())
        .collect();
    let all: Vec<(f64, f64)> = finite.iter().flatten().copied().collect();
    if all.is_empty() {
        return Err(HarnessError::Run(format!("nothing to plot for '{title}'")));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &all {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<path d="M{m} {t} L{m} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{y}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {y})">{}</text>"#,
        escape(y_label),
        y = HEIGHT / 2.0
    );
    for (v, anchor_y) in [(y0, HEIGHT - MARGIN), (y1, MARGIN)] {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"#, MARGIN - 4.0, anchor_y + 4.0, tick(v));
    }
    for (v, anchor_x) in [(x0, MARGIN), (x1, WIDTH - MARGIN)] {
        let _ = writeln!(svg, r#"<text x="{anchor_x}" y="{}" text-anchor="middle" font-size="10">{}</text>"#, HEIGHT - MARGIN + 14.0, tick(v));
    }
    for (i, (s, pts)) in series.iter().zip(&finite).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 150.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Window of the training-return smoothing.
pub const SMOOTHING_WINDOW: usize = 5;

/// Chooses the chart from the CSV header: training metrics, telemetry, or
/// per-checkpoint lap times.
pub fn plot_csv(text: &str) -> Result<String, HarnessError> {
    let header = text.lines().next().map(str::trim).unwrap_or_default();
    if header.is_empty() || text.lines().skip(1).all(|l| l.trim().is_empty()) {
        return Err(HarnessError::Run("empty CSV".into()));
    }
    if header == METRICS_HEADER {
        let log = MetricsLog::parse(text).map_err(HarnessError::Run)?;
        let x: Vec<f64> = log.rows.iter().map(|r| r.episode as f64).collect();
        let raw = log.returns();
        let smooth = moving_average(&raw, SMOOTHING_WINDOW);
        let pair = |v: &[f64]| x.iter().copied().zip(v.iter().copied()).collect();
        return line_chart(
            "Training episode return",
            "episode",
            "return",
            &[Series::new("return", pair(&raw)), Series::new("moving average (5)", pair(&smooth))],
        );
    }
    if header == TELEMETRY_HEADER {
        let log = TelemetryLog::read_csv(text)?;
        let t: Vec<f64> = log.rows.iter().map(|r| r.t).collect();
        let trace = |name: &str, f: fn(&racer_core::sim::TelemetryRow) -> f64| {
            Series::new(name, t.iter().copied().zip(log.rows.iter().map(f)).collect())
        };
        return line_chart(
            "Outputs (steer, throttle, brake)",
            "time [s]",
            "command",
            &[trace("steer", |r| r.steer), trace("throttle", |r| r.throttle), trace("brake", |r| r.brake)],
        );
    }
    if header == crate::generalize::GENERALIZATION_HEADER {
        let report = crate::generalize::parse_csv(text)?;
        return line_chart("Fastest lap per checkpoint", "episode", "lap time [s]", &report.series());
    }
    Err(HarnessError::Run(format!("unrecognized CSV header '{header}'")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_examples() {
        assert_eq!(moving_average(&[3.0; 7], 5), vec![3.0; 7]);
        assert_eq!(*moving_average(&[0.0, 0.0, 0.0, 0.0, 5.0], 5).last().unwrap(), 1.0);
        assert_eq!(moving_average(&[2.0, 4.0, 6.0], 2), vec![2.0, 3.0, 5.0]);
    }

    #[test]
    fn two_point_series_gives_one_polyline() {
        let svg = line_chart("t", "x", "y", &[Series::new("a", vec![(0.0, 1.0), (1.0, 2.0)])]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split_whitespace().count(), 2);
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(plot_csv("").is_err());
        assert!(plot_csv(&format!("{METRICS_HEADER}\n")).is_err());
        assert!(line_chart("t", "x", "y", &[Series::new("a", vec![(0.0, f64::NAN)])]).is_err());
    }

    #[test]
    fn metrics_csv_plots_raw_and_smoothed_returns() {
        let text = format!("{METRICS_HEADER}\n0,10,1,NaN,NaN,1,0,0\n1,10,2,0.5,0.1,0.9,0,0\n");
        let svg = plot_csv(&text).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
