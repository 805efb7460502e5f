use std::fmt::Write as _;

use super::AnalysisReport;
use crate::error::{Error, Result};
use crate::probes::Verdict;
use crate::rational::{format_point, to_f64};

const SIZE: f64 = 640.0;
const MARGIN: f64 = 0.05 * SIZE;
const DISPLACEABLE: &str = "#bbbbbb";
const CRITICAL: &str = "#d62728";
const UNKNOWN: &str = "#ffffff";

/// Maps moment coordinates to the viewport: uniform scale, centered, `y` up.
struct View {
    lo: [f64; 2],
    scale: f64,
    pad: [f64; 2],
}

impl View {
    fn fit(points: &[[f64; 2]]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let inner = SIZE - 2.0 * MARGIN;
        let width = [hi[0] - lo[0], hi[1] - lo[1]];
        let scale = inner / width[0].max(width[1]).max(f64::MIN_POSITIVE);
        let pad = [(inner - width[0] * scale) / 2.0, (inner - width[1] * scale) / 2.0];
        View { lo, scale, pad }
    }

    fn map(&self, p: [f64; 2]) -> (f64, f64) {
        let x = MARGIN + self.pad[0] + (p[0] - self.lo[0]) * self.scale;
        let y = SIZE - (MARGIN + self.pad[1] + (p[1] - self.lo[1]) * self.scale);
        (x, y)
    }
}

fn polygon_points(view: &View, vertices: &[[f64; 2]]) -> String {
    vertices
        .iter()
        .map(|v| {
            let (x, y) = view.map(*v);
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Vertices in counterclockwise order around their centroid.
fn ordered(vertices: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = vertices.len() as f64;
    let cx = vertices.iter().map(|v| v[0]).sum::<f64>() / n;
    let cy = vertices.iter().map(|v| v[1]).sum::<f64>() / n;
    let mut out = vertices.to_vec();
    out.sort_by(|a, b| (a[1] - cy).atan2(a[0] - cx).total_cmp(&(b[1] - cy).atan2(b[0] - cx)));
    out
}

/// Draws the polytope outline, shaded probe-displaceable cells and the
/// critical fibers. Output depends only on the report.
pub fn render_svg(report: &AnalysisReport) -> Result<String> {
    if report.dimension != 2 {
        return Err(Error::DimensionUnsupported { expected: 2, got: report.dimension });
    }
    if !report.bounded {
        return Err(Error::UnboundedPolytope);
    }
    let vertices: Vec<[f64; 2]> = report.vertices.iter().map(|v| [to_f64(&v[0]), to_f64(&v[1])]).collect();
    let vertices = ordered(&vertices);
    let view = View::fit(&vertices);
    let outline = polygon_points(&view, &vertices);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="640" height="640" viewBox="0 0 640 640">"#);
    let _ = writeln!(out, r#"<defs><clipPath id="polytope"><polygon points="{outline}"/></clipPath></defs>"#);
    let _ = writeln!(out, r#"<rect x="0" y="0" width="640" height="640" fill="{UNKNOWN}"/>"#);
    if let Some(steps) = &report.steps {
        let (w, h) = (to_f64(&steps[0]) * view.scale, to_f64(&steps[1]) * view.scale);
        let _ = writeln!(out, r#"<g clip-path="url(#polytope)" stroke="none">"#);
        for g in &report.grid {
            let fill = match g.verdict {
                Verdict::DisplaceableByProbe { .. } => DISPLACEABLE,
                Verdict::NoProbeFound | Verdict::Critical { .. } => UNKNOWN,
            };
            let (cx, cy) = view.map([to_f64(&g.lambda[0]), to_f64(&g.lambda[1])]);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#,
                cx - w / 2.0,
                cy - h / 2.0
            );
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, r##"<polygon points="{outline}" fill="none" stroke="#000000" stroke-width="1.5"/>"##);
    for lambda in report.critical_lambdas() {
        let (x, y) = view.map([to_f64(&lambda[0]), to_f64(&lambda[1])]);
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="{CRITICAL}"/>"#);
        let _ = writeln!(
            out,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" fill="#000000">{}</text>"##,
            x + 8.0,
            y - 8.0,
            format_point(&lambda)
        );
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}
