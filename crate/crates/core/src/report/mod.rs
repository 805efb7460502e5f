//! Whole-polytope analysis: critical fibers, probe verdicts on a grid, and
//! their text, JSON and SVG renderings.

mod svg;

pub use svg::render_svg;

use serde::Serialize;
use std::fmt::Write as _;

use crate::error::Result;
use crate::polytope::{MomentPolytope, PolytopeDocument};
use crate::potential::BulkParameter;
use crate::probes::{displaceable_by_probe, probe_scan, scan_grid, Probe, Verdict, DEFAULT_BOUND};
use crate::rational::{format_point, format_rational, Rational};
use crate::solver::{find_critical_fibers, CriticalCertificate, SolverConfig};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    pub solver: SolverConfig,
    pub bulk: Option<BulkParameter>,
    pub bound: i64,
    pub resolution: u32,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { solver: SolverConfig::default(), bulk: None, bound: DEFAULT_BOUND, resolution: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridEntry {
    #[serde(serialize_with = "serialize_point")]
    pub lambda: Vec<Rational>,
    #[serde(flatten)]
    pub verdict: Verdict,
}

fn serialize_point<S: serde::Serializer>(p: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.iter().map(format_rational))
}

/// A critical fiber that a probe also displaces. Critical fibers are
/// non-displaceable, so one of the two computations is wrong.
#[derive(Clone, Debug, PartialEq)]
pub struct Inconsistency {
    pub lambda: Vec<Rational>,
    pub probe: Probe,
}

#[derive(Clone, Debug)]
pub struct AnalysisReport {
    pub polytope: PolytopeDocument,
    pub dimension: usize,
    pub bounded: bool,
    pub vertices: Vec<Vec<Rational>>,
    pub seed: u64,
    pub truncation: Option<Rational>,
    pub bound: i64,
    pub resolution: u32,
    pub certificates: Vec<CriticalCertificate>,
    /// Grid spacing per axis, `None` when no scan ran.
    pub steps: Option<Vec<Rational>>,
    pub grid: Vec<GridEntry>,
    pub inconsistencies: Vec<Inconsistency>,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn critical_lambdas(&self) -> Vec<Vec<Rational>> {
        crate::solver::critical_lambdas(&self.certificates)
    }

    pub fn unknown(&self) -> Vec<&GridEntry> {
        self.grid.iter().filter(|g| g.verdict == Verdict::NoProbeFound).collect()
    }

    pub fn displaceable_count(&self) -> usize {
        self.grid.iter().filter(|g| matches!(g.verdict, Verdict::DisplaceableByProbe { .. })).count()
    }

    /// Axis-aligned box around the unknown grid fibers.
    pub fn unknown_box(&self) -> Option<(Vec<Rational>, Vec<Rational>)> {
        let unknown = self.unknown();
        let first = unknown.first()?;
        let mut lo = first.lambda.clone();
        let mut hi = first.lambda.clone();
        for g in &unknown {
            for (k, x) in g.lambda.iter().enumerate() {
                lo[k] = lo[k].min(*x);
                hi[k] = hi[k].max(*x);
            }
        }
        Some((lo, hi))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let fmt_points = |ps: &[Vec<Rational>]| -> Vec<Vec<String>> {
            ps.iter().map(|p| p.iter().map(format_rational).collect()).collect()
        };
        let unknown_box = self.unknown_box().map(|(lo, hi)| fmt_points(&[lo, hi]));
        serde_json::json!({
            "tool_version": TOOL_VERSION,
            "polytope": self.polytope,
            "bounded": self.bounded,
            "vertices": fmt_points(&self.vertices),
            "config": {
                "seed": self.seed,
                "truncation": self.truncation.as_ref().map_or("default".to_string(), format_rational),
                "bound": self.bound,
                "resolution": self.resolution,
            },
            "critical_fibers": fmt_points(&self.critical_lambdas()),
            "certificates": self.certificates.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
            "grid": self.grid,
            "summary": {
                "grid_points": self.grid.len(),
                "displaceable": self.displaceable_count(),
                "unknown": self.unknown().len(),
                "critical": self.grid.len() - self.displaceable_count() - self.unknown().len(),
                "unknown_box": unknown_box,
            },
            "inconsistencies": self.inconsistencies.iter().map(|i| serde_json::json!({
                "lambda": i.lambda.iter().map(format_rational).collect::<Vec<_>>(),
                "probe": i.probe.to_json(),
            })).collect::<Vec<_>>(),
            "notes": self.notes,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "toric-fiber-lab {TOOL_VERSION}");
        let _ = writeln!(
            out,
            "dimension {}, {} facets, {}",
            self.dimension,
            self.polytope.facets.len(),
            if self.bounded { "bounded" } else { "unbounded" }
        );
        let _ = writeln!(out, "seed {}, bound {}, resolution {}", self.seed, self.bound, self.resolution);
        let _ = writeln!(out);
        let _ = writeln!(out, "critical fibers ({} certificates)", self.certificates.len());
        for c in &self.certificates {
            let clean = |x: f64| if x.abs() < 5e-7 { 0.0 } else { x };
            let root: Vec<String> =
                c.leading_root.iter().map(|z| format!("{:.6}{:+.6}i", clean(z.re), clean(z.im))).collect();
            let _ = writeln!(
                out,
                "  λ = {:<16} ζ = ({})  {:?}  {}  #(L ∩ ψ(L)) ≥ {}",
                c.fiber.label(),
                root.join(", "),
                c.method,
                c.statement(),
                c.intersection_lower_bound
            );
        }
        if !self.grid.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "probe scan: {} grid fibers, {} displaceable, {} unknown",
                self.grid.len(),
                self.displaceable_count(),
                self.unknown().len()
            );
            if let Some((lo, hi)) = self.unknown_box() {
                let _ = writeln!(out, "  unknown fibers lie in {} .. {}", format_point(&lo), format_point(&hi));
            }
        }
        for inc in &self.inconsistencies {
            let _ = writeln!(
                out,
                "INCONSISTENT: λ = {} is critical but displaced by the probe from facet {} along {:?}",
                format_point(&inc.lambda),
                inc.probe.facet_index,
                inc.probe.direction.0
            );
        }
        if !self.notes.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "notes");
            for n in &self.notes {
                let _ = writeln!(out, "  - {n}");
            }
        }
        out
    }
}

/// Finds critical fibers, scans probes over the interior grid when the
/// polytope is bounded, and classifies each grid fiber.
pub fn analyze(poly: &MomentPolytope, config: &AnalysisConfig) -> Result<AnalysisReport> {
    let certificates = find_critical_fibers(poly, config.bulk.as_ref(), &config.solver)?;
    let critical = crate::solver::critical_lambdas(&certificates);
    let bounded = poly.is_bounded();
    let mut notes = Vec::new();

    let (steps, grid) = if bounded {
        let (steps, _) = scan_grid(poly, config.resolution)?;
        let scan = probe_scan(poly, config.resolution, config.bound)?;
        let grid = scan
            .into_iter()
            .map(|s| {
                let verdict = match certificates.iter().position(|c| c.fiber.lambda() == s.lambda.as_slice()) {
                    Some(i) => Verdict::Critical { certificate: i },
                    None => Verdict::from_probe(s.probe.as_ref()),
                };
                GridEntry { lambda: s.lambda, verdict }
            })
            .collect();
        (Some(steps), grid)
    } else {
        notes.push("the polytope is unbounded, so the probe scan was skipped".to_string());
        (None, Vec::new())
    };

    let inconsistencies: Vec<Inconsistency> = critical
        .iter()
        .filter_map(|l| {
            displaceable_by_probe(poly, l, config.bound).map(|probe| Inconsistency { lambda: l.clone(), probe })
        })
        .collect();

    let mut orders: Vec<Rational> = certificates.iter().map(|c| c.truncation).collect();
    orders.sort();
    orders.dedup();
    if !orders.is_empty() {
        let listed: Vec<String> = orders.iter().map(format_rational).collect();
        notes.push(format!(
            "certificates are critical to order D = {}: the gradient vanishes modulo q^D, which is evidence rather than a proof of exact criticality",
            listed.join(", ")
        ));
    }
    if bounded && certificates.is_empty() {
        notes.push(
            "no critical fiber was found for this potential; where some direction's minimal valuation is attained only once, non-displaceability can still hold but may only be detected after a bulk deformation"
                .to_string(),
        );
    }
    let unknown = grid.iter().filter(|g: &&GridEntry| g.verdict == Verdict::NoProbeFound).count();
    if unknown > 0 {
        notes.push(format!(
            "{unknown} grid fibers are neither certified critical nor displaced by a probe with ‖α‖∞ ≤ {}",
            config.bound
        ));
    }
    let orbifold: Vec<String> =
        poly.facets().iter().enumerate().filter(|(_, f)| f.is_orbifold()).map(|(i, _)| i.to_string()).collect();
    if !orbifold.is_empty() {
        notes.push(format!(
            "facets {} have non-primitive normals (orbifold isotropy) and are not used as probe bases",
            orbifold.join(", ")
        ));
    }

    Ok(AnalysisReport {
        polytope: poly.to_document(),
        dimension: poly.dimension(),
        bounded,
        vertices: poly.enumerate_vertices(),
        seed: config.solver.seed,
        truncation: config.solver.truncation,
        bound: config.bound,
        resolution: config.resolution,
        certificates,
        steps,
        grid,
        inconsistencies,
        notes,
    })
}
