//! Holomorphic disks bounding a moment fiber, classified by Blaschke
//! products, and the potential rebuilt from their Maslov index two classes.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polytope::{Fiber, LatticeVector, MomentPolytope};
use crate::potential::{split_bulk, BulkParameter, Potential, PotentialTerm};
use crate::rational::{format_rational, int, to_f64, Rational};

/// A disk class, recorded by the number of Blaschke factors in each
/// coordinate of the ambient `ℂᴺ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DiskClass {
    pub degrees: Vec<u32>,
}

impl DiskClass {
    pub fn new(degrees: Vec<u32>) -> Self {
        DiskClass { degrees }
    }

    /// The basic disk through facet `i`.
    pub fn basic(facets: usize, i: usize) -> Self {
        let mut degrees = vec![0; facets];
        degrees[i] = 1;
        DiskClass { degrees }
    }

    pub fn add(&self, other: &DiskClass) -> DiskClass {
        DiskClass { degrees: self.degrees.iter().zip(&other.degrees).map(|(a, b)| a + b).collect() }
    }
}

pub fn maslov_index(d: &DiskClass) -> u32 {
    2 * d.degrees.iter().sum::<u32>()
}

/// `Σ_j d_j l_j(λ)`.
pub fn disk_area(d: &DiskClass, poly: &MomentPolytope, lambda: &[Rational]) -> Rational {
    poly.facet_values(lambda).iter().zip(&d.degrees).map(|(l, &k)| l * int(k as i128)).sum()
}

/// `Σ_j d_j v_j`.
pub fn boundary_class(d: &DiskClass, poly: &MomentPolytope) -> LatticeVector {
    poly.facets()
        .iter()
        .zip(&d.degrees)
        .fold(LatticeVector::zero(poly.dimension()), |acc, (f, &k)| acc.add(&f.normal.scaled(k as i64)))
}

/// Classes of Maslov index two: one Blaschke factor in a single coordinate.
pub fn maslov_two_classes(poly: &MomentPolytope) -> Vec<DiskClass> {
    let n = poly.facets().len();
    (0..n).map(|i| DiskClass::basic(n, i)).collect()
}

/// An explicit disk `u_j(w) = phase_j · r_j · Π_k (w − a_{jk})/(1 − ā_{jk} w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlaschkeData {
    pub radii: Vec<f64>,
    pub zeros: Vec<Vec<Complex64>>,
    pub phases: Vec<Complex64>,
}

impl BlaschkeData {
    /// Radii `sqrt(l_j(λ)/π)` of the product torus over `λ`, with the given
    /// zeros and phases.
    pub fn new(
        poly: &MomentPolytope,
        lambda: &[Rational],
        zeros: Vec<Vec<Complex64>>,
        phases: Vec<Complex64>,
    ) -> Result<Self> {
        let n = poly.facets().len();
        if zeros.len() != n || phases.len() != n {
            return Err(Error::DimensionMismatch(format!("disk data needs {n} coordinates")));
        }
        if zeros.iter().flatten().any(|a| a.norm() >= 1.0) {
            return Err(Error::Schema("Blaschke zeros must lie in the open unit disk".into()));
        }
        Ok(BlaschkeData { radii: torus_radii(poly, lambda), zeros, phases })
    }

    pub fn class(&self) -> DiskClass {
        DiskClass::new(self.zeros.iter().map(|z| z.len() as u32).collect())
    }
}

pub fn torus_radii(poly: &MomentPolytope, lambda: &[Rational]) -> Vec<f64> {
    poly.facet_values(lambda).iter().map(|l| (to_f64(l) / std::f64::consts::PI).sqrt()).collect()
}

pub fn blaschke_eval(b: &BlaschkeData, w: Complex64) -> Vec<Complex64> {
    b.radii
        .iter()
        .zip(&b.zeros)
        .zip(&b.phases)
        .map(|((r, zeros), phase)| {
            let product: Complex64 =
                zeros.iter().map(|a| (w - a) / (Complex64::new(1.0, 0.0) - a.conj() * w)).product();
            phase * r * product
        })
        .collect()
}

/// Winding numbers of each coordinate of `w ↦ u(e^{iθ})` around the origin,
/// from `samples` boundary points. Their doubled sum is the Maslov index.
pub fn boundary_windings(b: &BlaschkeData, samples: usize) -> Vec<i64> {
    let values: Vec<Vec<Complex64>> = (0..=samples)
        .map(|k| blaschke_eval(b, Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / samples as f64)))
        .collect();
    (0..b.radii.len())
        .map(|j| {
            let total: f64 = values.windows(2).map(|p| (p[1][j] / p[0][j]).arg()).sum();
            (total / std::f64::consts::TAU).round() as i64
        })
        .collect()
}

/// The potential assembled from disk counts: one term per Maslov index two
/// class, with valuation its area and exponent its boundary class.
pub fn potential_from_disks(
    poly: &MomentPolytope,
    lambda: &[Rational],
    bulk: Option<&BulkParameter>,
) -> Result<Potential> {
    let fiber = Fiber::new(poly, lambda.to_vec())?;
    if let Some(b) = bulk {
        if b.alpha().len() != poly.facets().len() {
            return Err(Error::DimensionMismatch(format!(
                "bulk parameter has {} entries for {} facets",
                b.alpha().len(),
                poly.facets().len()
            )));
        }
    }
    let terms = maslov_two_classes(poly)
        .iter()
        .map(|d| {
            let i = d.degrees.iter().position(|&k| k == 1).expect("index two class has one factor");
            let (multiplier, bulk_log) = split_bulk(bulk.map(|b| &b.alpha()[i]));
            PotentialTerm {
                facet_index: i,
                multiplier,
                bulk_log,
                exponent: boundary_class(d, poly),
                valuation: disk_area(d, poly, lambda),
            }
        })
        .collect();
    Ok(Potential::from_terms(poly.dimension(), fiber, terms))
}

/// Table of the index two classes over `λ`.
pub fn disk_table(poly: &MomentPolytope, lambda: &[Rational]) -> Vec<serde_json::Value> {
    let radii = torus_radii(poly, lambda);
    maslov_two_classes(poly)
        .iter()
        .enumerate()
        .map(|(i, d)| {
            serde_json::json!({
                "facet_index": i,
                "degrees": d.degrees,
                "maslov_index": maslov_index(d),
                "area": format_rational(&disk_area(d, poly, lambda)),
                "boundary_class": boundary_class(d, poly).0,
                "radius": crate::solver::round(radii[i]),
            })
        })
        .collect()
}

/// Numerical area `∫_D |u'|²` of a Blaschke disk on a polar grid; equals
/// `π Σ_j d_j r_j²` for a disk of class `d`.
pub fn numeric_area(b: &BlaschkeData, rings: usize, spokes: usize) -> f64 {
    let h = 1e-6;
    let mut total = 0.0;
    for i in 0..rings {
        let rho = (i as f64 + 0.5) / rings as f64;
        for k in 0..spokes {
            let w = Complex64::from_polar(rho, std::f64::consts::TAU * (k as f64 + 0.5) / spokes as f64);
            let a = blaschke_eval(b, w + h);
            let c = blaschke_eval(b, w - h);
            let deriv_sq: f64 = a.iter().zip(&c).map(|(x, y)| ((x - y) / (2.0 * h)).norm_sqr()).sum();
            total += deriv_sq * rho;
        }
    }
    total * (1.0 / rings as f64) * (std::f64::consts::TAU / spokes as f64)
}
