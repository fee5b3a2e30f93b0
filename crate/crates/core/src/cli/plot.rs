//! Standalone SVG line charts from a monitor CSV. Output depends only on the
//! input rows, so identical CSVs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::monitor::{parse_monitor_csv, MonitorRow};

use super::{write_atomic, EXIT_OK};

pub const LYAPUNOV_SVG: &str = "lyapunov.svg";
pub const EXTREMA_SVG: &str = "extrema.svg";
pub const FLOORS_SVG: &str = "floors.svg";

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    fn new(label: &str, color: &'static str, points: Vec<(f64, f64)>) -> Series {
        Series {
            label: label.to_string(),
            color,
            dashed: false,
            points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<Range> {
    let mut r: Option<Range> = None;
    for v in values.filter(|v| v.is_finite()) {
        r = Some(match r {
            None => Range { lo: v, hi: v },
            Some(r) => Range {
                lo: r.lo.min(v),
                hi: r.hi.max(v),
            },
        });
    }
    r.map(|r| {
        if r.hi > r.lo {
            r
        } else {
            let pad = if r.lo == 0.0 { 1.0 } else { 0.5 * r.lo.abs() };
            Range {
                lo: r.lo - pad,
                hi: r.hi + pad,
            }
        }
    })
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Renders a chart. With `log_y` the series values are plotted as `log10`
/// and non-positive values are dropped.
pub fn render_chart(title: &str, y_label: &str, series: &[Series], log_y: bool) -> String {
    let transform = |y: f64| if log_y { if y > 0.0 { y.log10() } else { f64::NAN } } else { y };
    let xr = finite_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)))
        .unwrap_or(Range { lo: 0.0, hi: 1.0 });
    let yr = finite_range(series.iter().flat_map(|s| s.points.iter().map(|p| transform(p.1))))
        .unwrap_or(Range { lo: 0.0, hi: 1.0 });
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - xr.lo) / (xr.hi - xr.lo) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - yr.lo) / (yr.hi - yr.lo)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = xr.lo + f * (xr.hi - xr.lo);
        let yv = yr.lo + f * (yr.hi - yr.lo);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#ddd"/>"##,
            TOP,
            TOP + ph
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/>"##,
            LEFT + pw
        );
        let ylab = if log_y { format!("1e{yv:.2}") } else { tick_label(yv) };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            ylab
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        // Non-finite values split the line into separate segments.
        let mut segment: Vec<String> = Vec::new();
        let flush = |seg: &mut Vec<String>, s: &mut String| {
            if seg.len() > 1 {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
                    ser.color,
                    seg.join(" ")
                );
            }
            seg.clear();
        };
        for &(x, y) in &ser.points {
            let y = transform(y);
            if x.is_finite() && y.is_finite() {
                segment.push(format!("{:.2},{:.2}", sx(x), sy(y)));
            } else {
                flush(&mut segment, &mut s);
            }
        }
        flush(&mut segment, &mut s);
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"{dash}/>"#,
            lx + 24.0,
            ser.color
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// The three charts for a set of monitor rows, as `(file name, svg)`.
pub fn charts(rows: &[MonitorRow]) -> Vec<(&'static str, String)> {
    let pts = |f: &dyn Fn(&MonitorRow) -> f64| rows.iter().map(|r| (r.t, f(r))).collect::<Vec<_>>();
    let mut lyap = vec![Series::new("L(t)", "#1f77b4", pts(&|r| r.l))];
    if rows.iter().any(|r| r.kappa_margin.is_finite()) {
        let mut kappa = Series::new("kappa", "#d62728", pts(&|r| r.l + r.kappa_margin));
        kappa.dashed = true;
        lyap.push(kappa);
    }
    let names = ["u", "v", "w"];
    let colors = ["#1f77b4", "#2ca02c", "#9467bd"];
    let mut extrema = Vec::new();
    for c in 0..3 {
        extrema.push(Series::new(&format!("min {}", names[c]), colors[c], pts(&|r| r.min[c])));
        let mut mx = Series::new(&format!("max {}", names[c]), colors[c], pts(&|r| r.max[c]));
        mx.dashed = true;
        extrema.push(mx);
    }
    let floors: Vec<Series> = (0..3)
        .map(|c| {
            Series::new(
                &format!("margin {}", names[c]),
                colors[c],
                pts(&|r| r.floor_margin[c]),
            )
        })
        .collect();
    vec![
        (LYAPUNOV_SVG, render_chart("Lyapunov functional", "L (log scale)", &lyap, true)),
        (EXTREMA_SVG, render_chart("Field extrema", "value", &extrema, false)),
        (FLOORS_SVG, render_chart("Distance above exponential floors", "min - floor", &floors, false)),
    ]
}

pub fn cmd_plot(csv: &Path, out: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(csv).map_err(|e| Error::io(csv, e))?;
    let rows = parse_monitor_csv(&text)?;
    if rows.is_empty() {
        return Err(Error::Config(format!("{} has no data rows", csv.display())));
    }
    for (name, svg) in charts(&rows) {
        write_atomic(&out.join(name), svg.as_bytes())?;
    }
    println!("wrote {LYAPUNOV_SVG}, {EXTREMA_SVG}, {FLOORS_SVG} to {}", out.display());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, l: f64) -> MonitorRow {
        MonitorRow {
            t,
            l,
            min: [0.9; 3],
            max: [1.1; 3],
            floor_margin: [0.1; 3],
            qform_min: 0.0,
            kappa_margin: 1e6 - l,
        }
    }

    #[test]
    fn charts_are_deterministic_and_complete() {
        let rows = vec![row(0.0, 1.0), row(0.5, 0.9), row(1.0, 0.8)];
        let a = charts(&rows);
        let b = charts(&rows);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(a[0].1.contains("kappa"));
        assert!(a[0].1.starts_with("<svg"));
        assert!(a.iter().all(|(_, s)| s.ends_with("</svg>\n")));
    }

    #[test]
    fn flat_series_gets_a_range() {
        let r = finite_range([2.0, 2.0].into_iter()).unwrap();
        assert!(r.hi > r.lo);
        assert!(finite_range([f64::NAN].into_iter()).is_none());
    }
}
