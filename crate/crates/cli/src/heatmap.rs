//! Single-panel SVG heatmaps of bin-averaged values.

use std::fmt::Write as _;

use crate::error::{CliError, Result};
use crate::format::{fmt_num, CsvData};

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSpec {
    pub x: String,
    pub y: String,
    pub value: String,
    pub bins: usize,
}

/// Mean value per bin, row-major in `y` then `x`; `None` for empty bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BinTable {
    pub nx: usize,
    pub ny: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub counts: Vec<usize>,
    pub means: Vec<Option<f64>>,
}

impl BinTable {
    pub fn value_range(&self) -> (f64, f64) {
        let vals = self.means.iter().flatten();
        let lo = vals.clone().fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = vals.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        (lo, hi)
    }

    pub fn filled(&self) -> usize {
        self.means.iter().filter(|m| m.is_some()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("ix,iy,count,mean\n");
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let k = iy * self.nx + ix;
                if let Some(m) = self.means[k] {
                    let _ = writeln!(out, "{ix},{iy},{},{}", self.counts[k], fmt_num(m));
                }
            }
        }
        out
    }
}

fn bin_of(v: f64, (lo, hi): (f64, f64), n: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    (((v - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1)
}

pub fn bin(data: &CsvData, spec: &HeatmapSpec) -> Result<BinTable> {
    if spec.bins == 0 {
        return Err(CliError::Usage("heatmap needs at least one bin".into()));
    }
    let column = |name: &str| {
        data.numbers(name).ok_or_else(|| CliError::Usage(format!("column `{name}` not found")))
    };
    let (xs, ys, vs) = (column(&spec.x)?, column(&spec.y)?, column(&spec.value)?);
    let points: Vec<(f64, f64, f64)> = (0..xs.len())
        .map(|i| (xs[i], ys[i], vs[i]))
        .filter(|(x, y, v)| x.is_finite() && y.is_finite() && v.is_finite())
        .collect();
    if points.is_empty() {
        return Err(CliError::NoData);
    }
    let range = |f: fn(&(f64, f64, f64)) -> f64| {
        points.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let x_range = range(|p| p.0);
    let y_range = range(|p| p.1);
    let n = spec.bins;
    let mut sums = vec![0.0; n * n];
    let mut counts = vec![0usize; n * n];
    for &(x, y, v) in &points {
        let k = bin_of(y, y_range, n) * n + bin_of(x, x_range, n);
        sums[k] += v;
        counts[k] += 1;
    }
    let means = sums.iter().zip(&counts).map(|(&s, &c)| (c > 0).then(|| s / c as f64)).collect();
    Ok(BinTable { nx: n, ny: n, x_range, y_range, counts, means })
}

/// Linear blue-to-yellow scale on `t ∈ [0, 1]`.
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let stops = [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];
    let s = t * (stops.len() - 1) as f64;
    let i = (s.floor() as usize).min(stops.len() - 2);
    let f = s - i as f64;
    let (a, b) = (stops[i], stops[i + 1]);
    let mix = |u: f64, v: f64| (u + (v - u) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

pub fn render_svg(table: &BinTable, spec: &HeatmapSpec) -> String {
    const PLOT: f64 = 512.0;
    const MARGIN: f64 = 64.0;
    let (vlo, vhi) = table.value_range();
    let span = if vhi > vlo { vhi - vlo } else { 1.0 };
    let (cw, ch) = (PLOT / table.nx as f64, PLOT / table.ny as f64);
    let width = PLOT + 2.0 * MARGIN + 80.0;
    let height = PLOT + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#);
    let _ = writeln!(s, "<metadata id=\"bins\">\n{}</metadata>", table.to_csv());
    let _ = writeln!(s, r#"<g id="cells" shape-rendering="crispEdges">"#);
    for iy in 0..table.ny {
        for ix in 0..table.nx {
            if let Some(m) = table.means[iy * table.nx + ix] {
                let x = MARGIN + ix as f64 * cw;
                let y = MARGIN + PLOT - (iy + 1) as f64 * ch;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="{}"/>"#,
                    color((m - vlo) / span)
                );
            }
        }
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT}" height="{PLOT}" fill="none" stroke="black"/>"#
    );
    let (x0, x1) = table.x_range;
    let (y0, y1) = table.y_range;
    let bottom = MARGIN + PLOT;
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#, MARGIN + PLOT / 2.0, bottom + 40.0, spec.x);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}" text-anchor="middle" font-size="11">{}</text>"#, bottom + 16.0, fmt_num(x0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>"#, MARGIN + PLOT, bottom + 16.0, fmt_num(x1));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14" transform="rotate(-90 {} {})">{}</text>"#,
        MARGIN - 40.0,
        MARGIN + PLOT / 2.0,
        MARGIN - 40.0,
        MARGIN + PLOT / 2.0,
        spec.y
    );
    let _ = writeln!(s, r#"<text x="{}" y="{bottom}" text-anchor="end" font-size="11">{}</text>"#, MARGIN - 4.0, fmt_num(y0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{}</text>"#, MARGIN - 4.0, MARGIN + 10.0, fmt_num(y1));
    let bar_x = MARGIN + PLOT + 24.0;
    for k in 0..64 {
        let y = MARGIN + PLOT - (k + 1) as f64 * PLOT / 64.0;
        let _ = writeln!(s, r#"<rect x="{bar_x}" y="{y:.3}" width="16" height="{:.3}" fill="{}"/>"#, PLOT / 64.0, color((k as f64 + 0.5) / 64.0));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11">{}</text>"#, bar_x + 20.0, MARGIN + 10.0, fmt_num(vhi));
    let _ = writeln!(s, r#"<text x="{}" y="{bottom}" font-size="11">{}</text>"#, bar_x + 20.0, fmt_num(vlo));
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">{}</text>"#, bar_x, MARGIN - 12.0, spec.value);
    s.push_str("</svg>\n");
    s
}

/// Extracts the embedded bin table from a rendered heatmap.
pub fn embedded_bins(svg: &str) -> Option<&str> {
    let start = svg.find("<metadata id=\"bins\">\n")? + "<metadata id=\"bins\">\n".len();
    let end = svg[start..].find("</metadata>")? + start;
    Some(&svg[start..end])
}

pub fn emit_heatmap(data: &CsvData, spec: &HeatmapSpec) -> Result<(BinTable, String)> {
    let table = bin(data, spec)?;
    let svg = render_svg(&table, spec);
    Ok((table, svg))
}
