use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::curve::EvalCurve;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["predictor", "k", "mean", "ci_low", "ci_high"];

/// One line of a curve CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub predictor: String,
    pub k: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

/// Rows of all curves, in curve order then k order.
pub fn curve_rows(curves: &[EvalCurve]) -> Vec<CurveRow> {
    curves
        .iter()
        .flat_map(|c| {
            (0..c.k.len()).map(move |i| CurveRow {
                predictor: c.predictor.clone(),
                k: c.k[i],
                mean: c.mean_loss[i],
                ci_low: c.ci_low[i],
                ci_high: c.ci_high[i],
            })
        })
        .collect()
}

/// Writes `predictor,k,mean,ci_low,ci_high`; floats use shortest round-trip form.
pub fn write_curves_csv(path: &Path, curves: &[EvalCurve]) -> Result<()> {
    if curves.is_empty() {
        return Err(Error::config("no curves to export"));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| csv_err(path, e))?;
    for r in curve_rows(curves) {
        w.write_record([
            r.predictor,
            r.k.to_string(),
            r.mean.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_curves_csv(path: &Path) -> Result<Vec<CurveRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("{}: unexpected header {header:?}", path.display())));
    }
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvgOptions {
    pub width: f64,
    pub height: f64,
    pub log_y: bool,
    pub title: Option<String>,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            width: 640.0,
            height: 400.0,
            log_y: false,
            title: None,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// A line plot of mean loss against k with shaded bands, one colour per curve.
pub fn render_svg(curves: &[EvalCurve], opts: &SvgOptions) -> Result<String> {
    if curves.iter().all(|c| c.k.is_empty()) {
        return Err(Error::config("no points to plot"));
    }
    let values = curves
        .iter()
        .flat_map(|c| c.ci_low.iter().chain(&c.ci_high).chain(&c.mean_loss))
        .copied();
    let floor = if opts.log_y {
        values.clone().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min).min(1.0)
    } else {
        0.0
    };
    let ty = |v: f64| if opts.log_y { v.max(floor).log10() } else { v };
    let (mut y0, mut y1) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(ty(v)), hi.max(ty(v))));
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let ks = curves.iter().flat_map(|c| c.k.iter().copied());
    let (k0, k1) = ks.fold((usize::MAX, 0), |(lo, hi), k| (lo.min(k), hi.max(k)));
    let k_span = (k1 - k0).max(1) as f64;
    let (ml, mr, mt, mb) = (60.0, 150.0, 30.0, 40.0);
    let pw = opts.width - ml - mr;
    let ph = opts.height - mt - mb;
    let px = |k: usize| ml + pw * (k - k0) as f64 / k_span;
    let py = |v: f64| mt + ph * (1.0 - (ty(v) - y0) / (y1 - y0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        opts.width, opts.height, opts.width, opts.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(t) = &opts.title {
        let _ = writeln!(s, r#"<text x="{}" y="18" font-size="14" text-anchor="middle">{}</text>"#, ml + pw / 2.0, escape(t));
    }
    let _ = writeln!(
        s,
        r#"<g stroke="black" fill="none"><line x1="{ml}" y1="{}" x2="{}" y2="{}"/><line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}"/></g>"#,
        mt + ph,
        ml + pw,
        mt + ph,
        mt + ph
    );
    let ylab = |t: f64| if opts.log_y { format!("1e{t:.1}") } else { format!("{t:.3}") };
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#, ml - 4.0, mt + ph, ylab(y0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#, ml - 4.0, mt + 10.0, ylab(y1));
    let _ = writeln!(s, r#"<text x="{ml}" y="{}" font-size="11">k = {k0}</text>"#, mt + ph + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">k = {k1}</text>"#, ml + pw, mt + ph + 16.0);
    for (i, c) in curves.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let upper = c.k.iter().zip(&c.ci_high).map(|(&k, &v)| format!("{:.2},{:.2}", px(k), py(v)));
        let lower = c.k.iter().zip(&c.ci_low).rev().map(|(&k, &v)| format!("{:.2},{:.2}", px(k), py(v)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(s, r#"<polygon points="{}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#, band.join(" "));
        let line: Vec<String> = c.k.iter().zip(&c.mean_loss).map(|(&k, &v)| format!("{:.2},{:.2}", px(k), py(v))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, line.join(" "));
        let ly = mt + 14.0 * (i as f64 + 1.0);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-size="11" fill="{colour}">{}</text>"#,
            ml + pw + 10.0,
            escape(&c.predictor)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg(path: &Path, curves: &[EvalCurve], opts: &SvgOptions) -> Result<()> {
    let svg = render_svg(curves, opts)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
