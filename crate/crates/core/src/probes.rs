//! McDuff probes: a fiber in the open first half of a lattice-transverse
//! segment leaving an open facet is displaceable.

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polytope::{primitive_normal, Facet, LatticeVector, MomentPolytope};
use crate::rational::{format_rational, int, Rational};

/// Default bound on `‖α‖∞` for probe directions.
pub const DEFAULT_BOUND: i64 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Probe {
    pub facet_index: usize,
    /// `μ`, a point of the open facet.
    pub base: Vec<Rational>,
    pub direction: LatticeVector,
    /// Where the segment leaves the polytope; `None` when it never does.
    pub exit_parameter: Option<Rational>,
    /// Parameter of the probed fiber along the segment.
    pub hit_parameter: Rational,
}

impl Probe {
    pub fn point_at(&self, t: Rational) -> Vec<Rational> {
        self.base.iter().zip(&self.direction.0).map(|(b, a)| b + t * int(*a as i128)).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "facet_index": self.facet_index,
            "base": self.base.iter().map(format_rational).collect::<Vec<_>>(),
            "direction": self.direction.0,
            "exit_parameter": self.exit_parameter.as_ref().map(format_rational),
            "hit_parameter": format_rational(&self.hit_parameter),
        })
    }

    /// Checks every defining property of a probe from scratch: open-facet
    /// base, transversality, first-half membership of the probed fiber, and
    /// interiority of the segment at eight sample parameters.
    pub fn validate(&self, poly: &MomentPolytope) -> bool {
        let facet = &poly.facets()[self.facet_index];
        let values = poly.facet_values(&self.base);
        let zeros = values.iter().filter(|v| v.is_zero()).count();
        if zeros != 1 || !values[self.facet_index].is_zero() || values.iter().any(|v| v.is_negative()) {
            return false;
        }
        if !integrally_transverse(facet, &self.direction) {
            return false;
        }
        if !self.hit_parameter.is_positive() {
            return false;
        }
        let span = match self.exit_parameter {
            Some(t) => {
                if self.hit_parameter * int(2) >= t {
                    return false;
                }
                t
            }
            None => self.hit_parameter * int(4),
        };
        (1..=8).all(|k| poly.is_interior(&self.point_at(span * Rational::new(k, 9))))
    }
}

/// `⟨primitive inward normal, α⟩ = 1`.
pub fn integrally_transverse(facet: &Facet, alpha: &LatticeVector) -> bool {
    !alpha.is_zero() && primitive_normal(facet).dot(alpha) == 1
}

/// The probe from `facet_index` in direction `α` through `λ`, if `λ` lies in
/// its open first half.
pub fn probe_through(
    poly: &MomentPolytope,
    lambda: &[Rational],
    facet_index: usize,
    alpha: &LatticeVector,
) -> Result<Option<Probe>> {
    if !poly.is_interior(lambda) {
        return Err(Error::NotInterior);
    }
    let facet = &poly.facets()[facet_index];
    if alpha.len() != poly.dimension() {
        return Err(Error::DimensionMismatch(format!("direction has length {}", alpha.len())));
    }
    if !integrally_transverse(facet, alpha) {
        return Err(Error::NotTransverse(facet_index));
    }
    // λ − tα meets the facet where l_f vanishes
    let t_hit = facet.value(lambda) / int(facet.normal.dot(alpha) as i128);
    let base: Vec<Rational> = lambda.iter().zip(&alpha.0).map(|(l, a)| l - t_hit * int(*a as i128)).collect();
    let values = poly.facet_values(&base);
    if values.iter().filter(|v| v.is_zero()).count() != 1 || values.iter().any(|v| v.is_negative()) {
        return Ok(None);
    }
    let t_exit = poly
        .facets()
        .iter()
        .zip(&values)
        .filter_map(|(g, l)| {
            let pairing = g.normal.dot(alpha);
            (pairing < 0).then(|| l / int(-pairing as i128))
        })
        .min();
    if t_exit.is_some_and(|t| t_hit * int(2) >= t) {
        return Ok(None);
    }
    Ok(Some(Probe { facet_index, base, direction: alpha.clone(), exit_parameter: t_exit, hit_parameter: t_hit }))
}

/// Directions with `‖α‖∞ ≤ bound` in lexicographic order.
pub fn directions(n: usize, bound: i64) -> Vec<LatticeVector> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (-bound..=bound).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out.into_iter().map(LatticeVector).filter(|v| !v.is_zero()).collect()
}

/// First probe through `λ`, scanning facets in order and then directions
/// lexicographically. Facets with non-primitive normals are skipped: their
/// points carry orbifold isotropy and are not moved by the probe's circle
/// action.
pub fn displaceable_by_probe(poly: &MomentPolytope, lambda: &[Rational], bound: i64) -> Option<Probe> {
    let dirs = directions(poly.dimension(), bound);
    for (f, facet) in poly.facets().iter().enumerate() {
        if facet.is_orbifold() {
            continue;
        }
        for alpha in dirs.iter().filter(|a| integrally_transverse(facet, a)) {
            if let Ok(Some(p)) = probe_through(poly, lambda, f, alpha) {
                return Some(p);
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanPoint {
    pub lambda: Vec<Rational>,
    pub probe: Option<Probe>,
}

/// Interior grid points `min + k·step` with `step = width/resolution` per
/// axis, in lexicographic order of `k`.
pub fn scan_grid(poly: &MomentPolytope, resolution: u32) -> Result<(Vec<Rational>, Vec<Vec<Rational>>)> {
    let (lo, hi) = poly.bounding_box().ok_or(Error::UnboundedPolytope)?;
    let res = int(resolution.max(1) as i128);
    let steps: Vec<Rational> = lo.iter().zip(&hi).map(|(a, b)| (b - a) / res).collect();
    let mut points = vec![Vec::new()];
    for (a, s) in lo.iter().zip(&steps) {
        points = points
            .into_iter()
            .flat_map(|p: Vec<Rational>| {
                (0..=resolution as i128).map(move |k| {
                    let mut q = p.clone();
                    q.push(a + s * int(k));
                    q
                })
            })
            .collect();
    }
    Ok((steps, points.into_iter().filter(|p| poly.is_interior(p)).collect()))
}

/// Probe verdicts on the interior grid; parallel per point, order preserved.
pub fn probe_scan(poly: &MomentPolytope, resolution: u32, bound: i64) -> Result<Vec<ScanPoint>> {
    if !poly.is_bounded() {
        return Err(Error::UnboundedPolytope);
    }
    let (_, points) = scan_grid(poly, resolution)?;
    Ok(points
        .into_par_iter()
        .map(|lambda| {
            let probe = displaceable_by_probe(poly, &lambda, bound);
            ScanPoint { lambda, probe }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    DisplaceableByProbe {
        facet_index: usize,
        direction: Vec<i64>,
        base: Vec<String>,
    },
    NoProbeFound,
    /// Index into the certificate list.
    Critical {
        certificate: usize,
    },
}

impl Verdict {
    pub fn from_probe(p: Option<&Probe>) -> Self {
        match p {
            Some(p) => Verdict::DisplaceableByProbe {
                facet_index: p.facet_index,
                direction: p.direction.0.clone(),
                base: p.base.iter().map(format_rational).collect(),
            },
            None => Verdict::NoProbeFound,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::DisplaceableByProbe { .. } => "displaceable",
            Verdict::NoProbeFound => "unknown",
            Verdict::Critical { .. } => "critical",
        }
    }
}
