//! Static log-log SVG plots of error against mesh size.

use std::fmt::Write as _;

use crate::convergence::ConvergenceReport;
use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series {
    pub label: String,
    /// `(h, error)` pairs with positive entries.
    pub points: Vec<(f64, f64)>,
    pub slope: Option<f64>,
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    /// Decade-aligned range covering `values`.
    fn covering(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v.log10());
            hi = hi.max(v.log10());
        }
        let (mut lo, mut hi) = (lo.floor(), hi.ceil());
        if hi <= lo {
            lo -= 1.0;
            hi += 1.0;
        }
        Self { lo, hi }
    }

    fn map(&self, v: f64, start: f64, end: f64) -> f64 {
        start + (v.log10() - self.lo) / (self.hi - self.lo) * (end - start)
    }

    fn decades(&self) -> impl Iterator<Item = i32> {
        (self.lo as i32)..=(self.hi as i32)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the series on shared log-log axes.
///
/// Each marker carries `data-h` and `data-error` attributes printed with the
/// same formatting as the CSV report.
pub fn loglog_svg(title: &str, series: &[Series]) -> Result<String> {
    let all = || series.iter().flat_map(|s| s.points.iter());
    if all().next().is_none() {
        return Err(Error::InvalidInput("plot needs at least one data point".into()));
    }
    if all().any(|(x, y)| !(*x > 0.0) || !(*y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidInput("log-log plot needs positive finite data".into()));
    }
    let xa = Axis::covering(all().map(|p| p.0));
    let ya = Axis::covering(all().map(|p| p.1));
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(w, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title)).unwrap();

    for k in xa.decades() {
        let x = xa.map(10f64.powi(k), x0, x1);
        writeln!(w, r##"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="#ddd"/>"##).unwrap();
        writeln!(w, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{k}</text>"#, y0 + 18.0).unwrap();
    }
    for k in ya.decades() {
        let y = ya.map(10f64.powi(k), y0, y1);
        writeln!(w, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/>"##).unwrap();
        writeln!(w, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{k}</text>"#, x0 - 6.0, y + 4.0).unwrap();
    }
    writeln!(w, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1).unwrap();
    writeln!(w, r#"<text x="{}" y="{}" text-anchor="middle">h</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0).unwrap();
    writeln!(w, r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">error</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0)
        .unwrap();

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s.points.iter().map(|(h, e)| format!("{:.2},{:.2}", xa.map(*h, x0, x1), ya.map(*e, y0, y1))).collect();
        writeln!(w, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" ")).unwrap();
        for (h, e) in &s.points {
            writeln!(
                w,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}" data-h="{h}" data-error="{e:e}"/>"#,
                xa.map(*h, x0, x1),
                ya.map(*e, y0, y1)
            )
            .unwrap();
        }
        let label = match s.slope {
            Some(p) => format!("{} (slope {p:.2})", s.label),
            None => s.label.clone(),
        };
        let ly = y1 + 18.0 + 18.0 * i as f64;
        writeln!(w, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, x0 + 12.0, x0 + 32.0).unwrap();
        writeln!(w, r#"<text x="{}" y="{}">{}</text>"#, x0 + 38.0, ly + 4.0, escape(&label)).unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// L2 and H1 curves of a report, annotated with the selected slopes.
/// Exact zeros have no place on log axes and are left out.
pub fn report_svg(title: &str, report: &ConvergenceReport) -> Result<String> {
    let series = [
        Series {
            label: "L2".into(),
            points: report.records.iter().map(|r| (r.h, r.l2)).filter(|p| p.1 > 0.0).collect(),
            slope: report.l2.map(|f| f.slope()),
        },
        Series {
            label: "H1".into(),
            points: report.records.iter().map(|r| (r.h, r.h1)).filter(|p| p.1 > 0.0).collect(),
            slope: report.h1.map(|f| f.slope()),
        },
    ];
    loglog_svg(title, &series)
}
