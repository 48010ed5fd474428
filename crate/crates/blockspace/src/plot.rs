//! Plot-ready outputs: a per-block table and a spot map.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use blockspace_core::Point;

use crate::error::{CliError, Result};
use crate::io::write_text;
use crate::report::RunReport;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// `k,r,mu,tau_over_xi` per block, one-based.
pub fn heatmap_csv(report: &RunReport) -> String {
    let mut s = String::from("k,r,mu,tau_over_xi\n");
    for b in &report.blocks {
        let _ = writeln!(s, "{},{},{},{}", b.k, b.r, b.mu, b.tau_over_xi);
    }
    s
}

/// Scatter of the report's spots colored by column cluster. Sites come
/// from `coords`, matched by spot id.
pub fn spot_map_svg(report: &RunReport, coords: &[(String, Point)]) -> Result<String> {
    let lookup: HashMap<&str, Point> = coords.iter().map(|(id, p)| (id.as_str(), *p)).collect();
    let labels = report.result.labels.cols();
    let mut pts = Vec::with_capacity(report.col_ids.len());
    for (id, &l) in report.col_ids.iter().zip(labels) {
        let p = lookup.get(id.as_str()).ok_or_else(|| CliError::MissingCoordinate(id.clone()))?;
        pts.push((*p, l));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (p, _) in &pts {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let (w, h) = ((x1 - x0).max(1e-9), (y1 - y0).max(1e-9));
    let width = 800.0;
    let margin = 20.0;
    let scale = (width - 2.0 * margin) / w.max(h);
    let height = h * scale + 2.0 * margin;
    let radius = 3.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height:.1}" viewBox="0 0 {width} {height:.1}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, l) in &pts {
        let cx = margin + (p.x - x0) * scale;
        // SVG y grows downward.
        let cy = height - margin - (p.y - y0) * scale;
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{radius}" fill="{}"><title>cluster {}</title></circle>"#,
            PALETTE[l % PALETTE.len()],
            l + 1
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_plots(report: &RunReport, coords: &[(String, Point)], out: &Path) -> Result<()> {
    write_text(&out.join("heatmap.csv"), &heatmap_csv(report))?;
    write_text(&out.join("spots.svg"), &spot_map_svg(report, coords)?)
}
