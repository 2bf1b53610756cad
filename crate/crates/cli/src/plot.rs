//! Static SVG charts from report CSVs.
//!
//! The first column supplies the x labels; every other column whose cells
//! parse as numbers (blank cells allowed) becomes a series.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ChartKind {
    Line,
    Bar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub x_name: String,
    pub x: Vec<String>,
    pub series: Vec<(String, Vec<Option<f64>>)>,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("{}", path.display()))?;
    let headers: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if headers.len() < 2 {
        bail!("{}: need an x column and at least one value column", path.display());
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: record {}", path.display(), i + 2))?;
        rows.push(rec.iter().map(String::from).collect());
    }
    let mut series = Vec::new();
    for (c, name) in headers.iter().enumerate().skip(1) {
        let cells: Option<Vec<Option<f64>>> = rows
            .iter()
            .map(|r| {
                let cell = r.get(c).map_or("", |s| s.trim());
                if cell.is_empty() {
                    Some(None)
                } else {
                    cell.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some)
                }
            })
            .collect();
        if let Some(cells) = cells {
            if cells.iter().any(Option::is_some) {
                series.push((name.clone(), cells));
            }
        }
    }
    if series.is_empty() {
        bail!("{}: no numeric columns to plot", path.display());
    }
    Ok(Table {
        x_name: headers[0].clone(),
        x: rows.iter().map(|r| r[0].clone()).collect(),
        series,
    })
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;

/// Round tick step covering `span` in about five intervals.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(table: &Table, kind: ChartKind, title: &str) -> String {
    let values = table.series.iter().flat_map(|(_, v)| v.iter().flatten().copied());
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if kind == ChartKind::Bar || lo > 0.0 && lo < 0.5 * hi {
        lo = lo.min(0.0);
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let step = tick_step(hi - lo);
    lo = (lo / step).floor() * step;
    hi = (hi / step).ceil() * step;

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let n = table.x.len().max(1);
    let y = |v: f64| TOP + ph * (1.0 - (v - lo) / (hi - lo));
    let slot = pw / n as f64;
    let x_center = |i: usize| LEFT + slot * (i as f64 + 0.5);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );

    let ticks = ((hi - lo) / step).round() as usize;
    for t in 0..=ticks {
        let v = lo + t as f64 * step;
        let yy = y(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#ddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            yy + 4.0,
            format_tick(v, step)
        );
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#333"/>"##
    );

    // Thin out x labels on long axes.
    let every = n.div_ceil(20);
    for (i, label) in table.x.iter().enumerate() {
        if i % every == 0 {
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                x_center(i),
                TOP + ph + 16.0,
                escape(label)
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 14.0,
        escape(&table.x_name)
    );

    let k = table.series.len();
    for (s, (name, vals)) in table.series.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        match kind {
            ChartKind::Line => {
                // Break the line at missing values.
                let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
                for (i, v) in vals.iter().enumerate() {
                    match v {
                        Some(v) => segments.last_mut().unwrap().push((x_center(i), y(*v))),
                        None => segments.push(Vec::new()),
                    }
                }
                for seg in segments.iter().filter(|s| !s.is_empty()) {
                    let pts: Vec<String> = seg.iter().map(|(a, b)| format!("{a:.1},{b:.1}")).collect();
                    let _ = writeln!(
                        svg,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                        pts.join(" ")
                    );
                    for (a, b) in seg {
                        let _ = writeln!(svg, r#"<circle cx="{a:.1}" cy="{b:.1}" r="3" fill="{color}"/>"#);
                    }
                }
            }
            ChartKind::Bar => {
                let bw = slot * 0.8 / k as f64;
                for (i, v) in vals.iter().enumerate() {
                    let Some(v) = v else { continue };
                    let x0 = LEFT + slot * i as f64 + slot * 0.1 + bw * s as f64;
                    let (top, bottom) = (y(v.max(0.0)), y(v.min(0.0)));
                    let _ = writeln!(
                        svg,
                        r#"<rect x="{x0:.1}" y="{top:.1}" width="{bw:.1}" height="{:.1}" fill="{color}"/>"#,
                        bottom - top
                    );
                }
            }
        }
        let ly = TOP + 14.0 + 18.0 * s as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="{color}"/>"#,
            ly - 10.0
        );
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, lx + 18.0, escape(name));
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(tick_step(1.0), 0.2);
        assert_eq!(tick_step(0.07), 0.02);
        assert_eq!(tick_step(300.0), 100.0);
        assert_eq!(format_tick(0.4, 0.2), "0.4");
        assert_eq!(format_tick(1e-17, 0.2), "0.0");
    }

    #[test]
    fn renders_both_kinds() {
        let t = Table {
            x_name: "step".into(),
            x: vec!["1".into(), "2".into(), "3".into()],
            series: vec![
                ("a".into(), vec![Some(0.1), None, Some(0.3)]),
                ("b<c".into(), vec![Some(0.2), Some(0.25), Some(0.1)]),
            ],
        };
        let line = render(&t, ChartKind::Line, "t");
        assert!(line.starts_with("<svg") && line.ends_with("</svg>\n"));
        assert_eq!(line.matches("<polyline").count(), 3);
        assert!(line.contains("b&lt;c"));
        let bar = render(&t, ChartKind::Bar, "t");
        assert_eq!(bar.matches(r#"<rect x="#).count(), 5 + 2 + 1);
    }
}
