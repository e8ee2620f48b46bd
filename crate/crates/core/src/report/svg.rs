//! Self-contained SVG 1.1 charts: cluster small multiples, SOM lattices and
//! the elbow curve.

use std::fmt::Write;

use crate::kmeans::ElbowPoint;
use crate::model::{AsHourly, ClusteringResult, Hourly, SomGrid, HEX_ROW_SPACING, HOURS};

const PANEL_W: f64 = 220.0;
const PANEL_H: f64 = 170.0;
const PAD_L: f64 = 34.0;
const PAD_R: f64 = 10.0;
const PAD_T: f64 = 24.0;
const PAD_B: f64 = 22.0;

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">
<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn polyline(out: &mut String, points: impl Iterator<Item = (f64, f64)>, stroke: &str, width: f64, class: &str) {
    let pts: Vec<String> = points.map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        out,
        r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
        pts.join(" ")
    );
}

/// Grid shape for `n` panels: as square as possible, filled row by row.
pub fn panel_layout(n: usize) -> (usize, usize) {
    let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    let rows = n.div_ceil(cols).max(1);
    (cols, rows)
}

/// One panel per cluster: member profiles in black, centroid in red.
pub fn render_cluster_small_multiples<P: AsHourly>(result: &ClusteringResult, profiles: &[P]) -> String {
    let mut members: Vec<Vec<&Hourly>> = vec![Vec::new(); result.k];
    for (p, &c) in profiles.iter().zip(&result.assignments) {
        members[c].push(p.hourly());
    }
    render_panels(&result.centroids, &result.empty, &members)
}

pub(crate) fn render_panels(centroids: &[Hourly], empty: &[bool], members: &[Vec<&Hourly>]) -> String {
    let (cols, rows) = panel_layout(centroids.len());
    let mut out = String::new();
    header(&mut out, cols as f64 * PANEL_W, rows as f64 * PANEL_H);
    let plot_w = PANEL_W - PAD_L - PAD_R;
    let plot_h = PANEL_H - PAD_T - PAD_B;
    for (c, centroid) in centroids.iter().enumerate() {
        let ox = (c % cols) as f64 * PANEL_W;
        let oy = (c / cols) as f64 * PANEL_H;
        let is_empty = empty.get(c).copied().unwrap_or(false) || members[c].is_empty();
        let title = if is_empty {
            format!("Cluster{} (empty)", c + 1)
        } else {
            format!("Cluster{}", c + 1)
        };
        let _ = writeln!(out, r#"<g class="panel" id="cluster-{}" transform="translate({ox:.2},{oy:.2})">"#, c + 1);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="15" font-size="12" text-anchor="middle">{}</text>"#,
            PANEL_W / 2.0,
            escape(&title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{PAD_L}" y="{PAD_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888888" stroke-width="0.5"/>"##
        );
        for (label, v) in [("0", 0.0), ("0.5", 0.5), ("1", 1.0)] {
            let y = PAD_T + plot_h * (1.0 - v);
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="8" text-anchor="end">{label}</text>"#,
                PAD_L - 3.0,
                y + 3.0
            );
        }
        for h in [0usize, 6, 12, 18, 23] {
            let x = PAD_L + plot_w * h as f64 / (HOURS - 1) as f64;
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" font-size="8" text-anchor="middle">{h}</text>"#,
                PANEL_H - PAD_B + 11.0
            );
        }
        let project = |v: &Hourly| {
            v.iter()
                .enumerate()
                .map(|(h, &y)| {
                    (
                        PAD_L + plot_w * h as f64 / (HOURS - 1) as f64,
                        PAD_T + plot_h * (1.0 - y.clamp(0.0, 1.0)),
                    )
                })
                .collect::<Vec<_>>()
        };
        if !is_empty {
            for m in &members[c] {
                polyline(&mut out, project(m).into_iter(), "black", 0.6, "member");
            }
            polyline(&mut out, project(centroid).into_iter(), "red", 1.6, "centroid");
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

const TILE: f64 = 90.0;

/// Hexagonal tiles, each drawing its codebook profile; labels are 1-based
/// row-major node numbers.
pub fn render_som_lattice(grid: &SomGrid) -> String {
    let radius = TILE / 3f64.sqrt();
    let margin = radius + 4.0;
    let width = 2.0 * margin + (grid.width() as f64 - 0.5) * TILE + TILE / 2.0;
    let height = 2.0 * margin + (grid.height() as f64 - 1.0) * TILE * HEX_ROW_SPACING;
    let mut out = String::new();
    header(&mut out, width, height);

    let hexagon: Vec<String> = (0..6)
        .map(|i| {
            let a = std::f64::consts::PI / 180.0 * (60.0 * i as f64 - 90.0);
            format!("{:.2},{:.2}", radius * a.cos(), radius * a.sin())
        })
        .collect();
    let hexagon = hexagon.join(" ");

    for (idx, w) in grid.codebooks().iter().enumerate() {
        let coord = grid.coord(idx);
        let (px, py) = grid.position(coord);
        let cx = margin + px * TILE;
        let cy = margin + py * TILE;
        let _ = writeln!(
            out,
            r#"<g class="tile" data-row="{}" data-col="{}" transform="translate({cx:.2},{cy:.2})">"#,
            coord.row, coord.col
        );
        let _ = writeln!(
            out,
            r##"<polygon points="{hexagon}" fill="#f4f4f4" stroke="#666666" stroke-width="0.8"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="0" y="{:.2}" font-size="9" text-anchor="middle">N{}</text>"#,
            -radius * 0.55,
            idx + 1
        );
        let half_w = TILE * 0.36;
        let half_h = TILE * 0.22;
        let pts = w.iter().enumerate().map(|(h, &v)| {
            (
                -half_w + 2.0 * half_w * h as f64 / (HOURS - 1) as f64,
                half_h - 2.0 * half_h * v.clamp(0.0, 1.0),
            )
        });
        polyline(&mut out, pts, "red", 1.2, "codebook");
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// WCSS against k as a line (or a single dot).
pub fn render_elbow(curve: &[ElbowPoint]) -> String {
    let (w, h) = (480.0, 320.0);
    let (l, r, t, b) = (60.0, 20.0, 30.0, 40.0);
    let mut out = String::new();
    header(&mut out, w, h);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="18" font-size="13" text-anchor="middle">Within-cluster sum of squares by k</text>"#,
        w / 2.0
    );
    let _ = writeln!(
        out,
        r#"<line x1="{l}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/><line x1="{l}" y1="{t}" x2="{l}" y2="{0}" stroke="black"/>"#,
        h - b,
        w - r
    );
    if curve.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let k_min = curve.iter().map(|p| p.k).min().unwrap_or(0) as f64;
    let k_max = curve.iter().map(|p| p.k).max().unwrap_or(0) as f64;
    let y_max = curve.iter().map(|p| p.wcss).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let sx = |k: usize| {
        if k_max > k_min {
            l + (w - l - r) * (k as f64 - k_min) / (k_max - k_min)
        } else {
            l + (w - l - r) / 2.0
        }
    };
    let sy = |v: f64| (h - b) - (h - t - b) * v / y_max;
    for p in curve {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="9" text-anchor="middle">{}</text>"#,
            sx(p.k),
            h - b + 14.0,
            p.k
        );
    }
    for frac in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="9" text-anchor="end">{:.3}</text>"#,
            l - 4.0,
            sy(y_max * frac) + 3.0,
            y_max * frac
        );
    }
    if curve.len() == 1 {
        let p = curve[0];
        let _ = writeln!(
            out,
            r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="black"/>"#,
            sx(p.k),
            sy(p.wcss)
        );
    } else {
        polyline(&mut out, curve.iter().map(|p| (sx(p.k), sy(p.wcss))), "black", 1.5, "elbow");
    }
    out.push_str("</svg>\n");
    out
}
