//! Text, CSV and SVG emission. All output is a pure function of the reports.

use std::fmt::Write;

use num_traits::ToPrimitive;
use slopeforge::arith::rational::fmt_q;
use slopeforge::{PolygonFunction, Q};

use crate::run::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Svg,
}

pub fn text(r: &Report) -> String {
    let mut s = String::new();
    writeln!(s, "command: {}", r.command).unwrap();
    for (k, v) in &r.fields {
        writeln!(s, "{}: {}", k, v).unwrap();
    }
    for (name, f) in &r.polygons {
        writeln!(s, "polygon {}: {}", name, f).unwrap();
    }
    writeln!(s, "precision: {}", r.precision).unwrap();
    writeln!(s, "search_bounds: {}", r.search_bounds).unwrap();
    writeln!(s, "exhaustiveness: {}", r.certificate).unwrap();
    s
}

pub const CSV_HEADER: &str = "x,y,series";

/// Breakpoint rows; `prefix` distinguishes documents of a batch.
pub fn csv_rows(r: &Report, prefix: Option<usize>) -> String {
    let mut s = String::new();
    for (name, f) in &r.polygons {
        let series = match prefix {
            Some(i) => format!("{}:{}", i, name),
            None => name.clone(),
        };
        for (x, y) in f.points() {
            writeln!(s, "{},{},{}", fmt_q(x), fmt_q(y), series).unwrap();
        }
    }
    s
}

/// Certificate fields as CSV comment lines, after the data.
pub fn csv_certificate(r: &Report, prefix: Option<usize>) -> String {
    let tag = prefix.map(|i| format!("{}:", i)).unwrap_or_default();
    format!(
        "# {}precision: {}\n# {}search_bounds: {}\n# {}exhaustiveness: {}\n",
        tag, r.precision, tag, r.search_bounds, tag, r.certificate
    )
}

pub fn csv(r: &Report) -> String {
    format!("{}\n{}{}", CSV_HEADER, csv_rows(r, None), csv_certificate(r, None))
}

fn legend_label(name: &str) -> String {
    match name.strip_prefix("t_F") {
        Some("") => "t_F".to_string(),
        Some(n) => format!("t_{{F,{}}}", n),
        None => name.to_string(),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn f(x: &Q) -> f64 {
    x.to_f64().unwrap_or(0.0)
}

/// An SVG 1.1 overlay of every polygon of the report, with a legend.
pub fn svg(r: &Report) -> String {
    let (w, h, margin, legend_w) = (480.0, 360.0, 40.0, 130.0);
    let pts: Vec<(f64, f64)> =
        r.polygons.iter().flat_map(|(_, p): &(String, PolygonFunction)| p.points().iter().map(|(x, y)| (f(x), f(y)))).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, 1.0f64, 0.0f64, 0.0f64);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if y1 - y0 < 1e-9 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let sx = |x: f64| margin + (x - x0) / (x1 - x0) * (w - 2.0 * margin);
    let sy = |y: f64| h - margin - (y - y0) / (y1 - y0) * (h - 2.0 * margin);
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        w + legend_w,
        h,
        w + legend_w,
        h
    )
    .unwrap();
    writeln!(s, "<title>{}</title>", escape(&r.command)).unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, w + legend_w, h).unwrap();
    writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888888"/>"##,
        sx(x0),
        sy(0.0f64.clamp(y0, y1)),
        sx(x1),
        sy(0.0f64.clamp(y0, y1))
    )
    .unwrap();
    writeln!(s, r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#888888"/>"##, sx(x0), sy(y0), sy(y1)).unwrap();
    for (i, (name, p)) in r.polygons.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> =
            p.points().iter().map(|(x, y)| format!("{:.2},{:.2}", sx(f(x)), sy(f(y)))).collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            color,
            coords.join(" "),
            escape(&legend_label(name))
        )
        .unwrap();
    }
    writeln!(s, r#"<g id="legend" font-family="sans-serif" font-size="12">"#).unwrap();
    for (i, (name, _)) in r.polygons.iter().enumerate() {
        let y = margin + 18.0 * i as f64;
        let color = COLORS[i % COLORS.len()];
        writeln!(s, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"/>"#, w, y, w + 20.0, y, color)
            .unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, w + 26.0, y + 4.0, escape(&legend_label(name))).unwrap();
    }
    writeln!(s, "</g>").unwrap();
    writeln!(
        s,
        "<desc>precision: {}; search_bounds: {}; exhaustiveness: {}</desc>",
        escape(&r.precision),
        escape(&r.search_bounds),
        escape(&r.certificate.to_string())
    )
    .unwrap();
    writeln!(s, "</svg>").unwrap();
    s
}

pub fn emit(r: &Report, format: Format) -> String {
    match format {
        Format::Text => text(r),
        Format::Csv => csv(r),
        Format::Svg => svg(r),
    }
}
