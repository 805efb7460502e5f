//! Exact model of a moment polytope `{λ : ⟨λ, v_i⟩ − c_i ≥ 0}` and its fibers.

use num_integer::Integer;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::rational::{format_rational, int, rat, solve_affine, solve_exact, Rational, RationalRepr};

/// Integer vector in the lattice `t_Z` (facet normals, probe directions).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(pub Vec<i64>);

impl LatticeVector {
    pub fn new(entries: Vec<i64>) -> Self {
        LatticeVector(entries)
    }

    pub fn zero(n: usize) -> Self {
        LatticeVector(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn dot(&self, other: &LatticeVector) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Pairing with a rational point.
    pub fn pair(&self, point: &[Rational]) -> Rational {
        self.0.iter().zip(point).fold(Rational::zero(), |acc, (&v, x)| acc + x * int(v as i128))
    }

    pub fn gcd(&self) -> i64 {
        self.0.iter().fold(0i64, |g, &x| g.gcd(&x))
    }

    pub fn norm_inf(&self) -> i64 {
        self.0.iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    pub fn scaled(&self, k: i64) -> LatticeVector {
        LatticeVector(self.0.iter().map(|x| x * k).collect())
    }

    pub fn add(&self, other: &LatticeVector) -> LatticeVector {
        LatticeVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// One inequality `⟨λ, normal⟩ − offset ≥ 0`. The normal points inward and
/// need not be primitive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Facet {
    pub normal: LatticeVector,
    pub offset: Rational,
}

impl Facet {
    pub fn new(normal: Vec<i64>, offset: Rational) -> Self {
        Facet { normal: LatticeVector(normal), offset }
    }

    pub fn value(&self, lambda: &[Rational]) -> Rational {
        self.normal.pair(lambda) - self.offset
    }

    /// True when the normal carries a multiplicity, i.e. the facet is an
    /// orbifold stratum of the quotient.
    pub fn is_orbifold(&self) -> bool {
        self.normal.gcd() > 1
    }
}

/// The normal divided by the gcd of its entries.
pub fn primitive_normal(f: &Facet) -> LatticeVector {
    let g = f.normal.gcd().max(1);
    LatticeVector(f.normal.0.iter().map(|x| x / g).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentPolytope {
    dimension: usize,
    facets: Vec<Facet>,
    witness: Vec<Rational>,
}

impl MomentPolytope {
    /// Validates the facet data and locates a rational interior point.
    ///
    /// A supplied witness is used when it is interior; otherwise one is
    /// searched for (vertex average, then a refining rational grid).
    pub fn new(dimension: usize, facets: Vec<Facet>, witness: Option<Vec<Rational>>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Schema("dimension must be positive".into()));
        }
        for (i, f) in facets.iter().enumerate() {
            if f.normal.len() != dimension {
                return Err(Error::DimensionMismatch(format!(
                    "facet {i} normal has length {}, expected {dimension}",
                    f.normal.len()
                )));
            }
            if f.normal.is_zero() {
                return Err(Error::DimensionMismatch(format!("facet {i} has a zero normal")));
            }
        }
        if facets.len() < dimension + 1 {
            return Err(Error::Schema(format!(
                "need at least {} facets in dimension {dimension}, got {}",
                dimension + 1,
                facets.len()
            )));
        }
        let mut poly = MomentPolytope { dimension, facets, witness: Vec::new() };
        if let Some(w) = witness {
            if w.len() != dimension {
                return Err(Error::DimensionMismatch(format!(
                    "interior witness has length {}, expected {dimension}",
                    w.len()
                )));
            }
            if poly.is_interior(&w) {
                poly.witness = w;
                return Ok(poly);
            }
        }
        poly.witness = poly.find_interior_point().ok_or(Error::EmptyInterior)?;
        Ok(poly)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn witness(&self) -> &[Rational] {
        &self.witness
    }

    pub fn facet_values(&self, lambda: &[Rational]) -> Vec<Rational> {
        self.facets.iter().map(|f| f.value(lambda)).collect()
    }

    pub fn is_interior(&self, lambda: &[Rational]) -> bool {
        lambda.len() == self.dimension && self.facets.iter().all(|f| f.value(lambda).is_positive())
    }

    pub fn contains(&self, lambda: &[Rational]) -> bool {
        self.facets.iter().all(|f| !f.value(lambda).is_negative())
    }

    /// All points where `n` facet equalities meet inside the polytope, sorted
    /// lexicographically.
    pub fn enumerate_vertices(&self) -> Vec<Vec<Rational>> {
        let n = self.dimension;
        let mut out = BTreeSet::new();
        for subset in subsets(self.facets.len(), n) {
            let a: Vec<Vec<Rational>> =
                subset.iter().map(|&i| self.facets[i].normal.0.iter().map(|&x| int(x as i128)).collect()).collect();
            let b: Vec<Rational> = subset.iter().map(|&i| self.facets[i].offset).collect();
            if let Some(p) = solve_exact(&a, &b) {
                if self.contains(&p) {
                    out.insert(p);
                }
            }
        }
        out.into_iter().collect()
    }

    /// True when the recession cone `{d : ⟨d, v_i⟩ ≥ 0 ∀i}` is trivial.
    pub fn is_bounded(&self) -> bool {
        let n = self.dimension;
        let normals: Vec<Vec<Rational>> =
            self.facets.iter().map(|f| f.normal.0.iter().map(|&x| int(x as i128)).collect()).collect();
        let in_cone = |d: &[Rational]| {
            normals.iter().all(|v| !v.iter().zip(d).fold(Rational::zero(), |a, (x, y)| a + x * y).is_negative())
        };
        // Normals of deficient rank leave a line in the cone; otherwise the
        // cone is pointed and any nonzero one has an extreme ray cut out by
        // n-1 independent tight constraints.
        let zeros = vec![Rational::zero(); normals.len()];
        if solve_affine(&normals, &zeros, n).is_some_and(|(_, basis)| !basis.is_empty()) {
            return false;
        }
        for subset in subsets(self.facets.len(), n - 1) {
            let a: Vec<Vec<Rational>> = subset.iter().map(|&i| normals[i].clone()).collect();
            let b = vec![Rational::zero(); a.len()];
            let Some((_, basis)) = solve_affine(&a, &b, n) else { continue };
            if basis.len() != 1 {
                continue;
            }
            for d in basis {
                let neg: Vec<Rational> = d.iter().map(|x| -x).collect();
                if in_cone(&d) || in_cone(&neg) {
                    return false;
                }
            }
        }
        true
    }

    /// Axis-aligned bounding box of the vertices, `None` when unbounded.
    pub fn bounding_box(&self) -> Option<(Vec<Rational>, Vec<Rational>)> {
        if !self.is_bounded() {
            return None;
        }
        let verts = self.enumerate_vertices();
        let first = verts.first()?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for v in &verts {
            for k in 0..self.dimension {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        Some((lo, hi))
    }

    fn find_interior_point(&self) -> Option<Vec<Rational>> {
        let verts = self.enumerate_vertices();
        if !verts.is_empty() {
            let count = int(verts.len() as i128);
            let mut avg = vec![Rational::zero(); self.dimension];
            for v in &verts {
                for (a, x) in avg.iter_mut().zip(v) {
                    *a += x;
                }
            }
            avg.iter_mut().for_each(|a| *a /= count);
            if self.is_interior(&avg) {
                return Some(avg);
            }
        }
        self.grid_search()
    }

    /// Rational grid in the box of half-width `2·max|c_i| + 1`, refined from
    /// step 1 down to step 1/8. Among the interior points of the first level
    /// that has any, the most central one (largest `min_i l_i`) wins.
    fn grid_search(&self) -> Option<Vec<Rational>> {
        const MAX_POINTS: u64 = 4_000_000;
        let max_c = self.facets.iter().map(|f| f.offset.abs()).max().unwrap_or_else(Rational::zero);
        let half = (int(2) * max_c + int(1)).ceil();
        for denom in [1i128, 2, 4, 8] {
            let step = rat(1, denom);
            let per_axis = (half * int(2 * denom)).to_integer() + 1;
            if (per_axis as u64).saturating_pow(self.dimension as u32) > MAX_POINTS {
                continue;
            }
            let mut best: Option<(Rational, Vec<Rational>)> = None;
            let mut idx = vec![0i128; self.dimension];
            loop {
                let p: Vec<Rational> = idx.iter().map(|&k| -half + step * int(k)).collect();
                if self.is_interior(&p) {
                    let m = self.facet_values(&p).into_iter().min().unwrap();
                    if best.as_ref().is_none_or(|(bm, _)| m > *bm) {
                        best = Some((m, p));
                    }
                }
                let mut k = 0;
                loop {
                    if k == self.dimension {
                        break;
                    }
                    idx[k] += 1;
                    if idx[k] < per_axis {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == self.dimension {
                    break;
                }
            }
            if let Some((_, p)) = best {
                return Some(p);
            }
        }
        None
    }

    /// Image under `λ ↦ Uλ` for unimodular integer `U`: normals become
    /// `U^{-T} v`, offsets are unchanged.
    pub fn transformed(&self, u: &[Vec<i64>]) -> Result<MomentPolytope> {
        let n = self.dimension;
        let ut: Vec<Vec<Rational>> = (0..n).map(|i| (0..n).map(|j| int(u[j][i] as i128)).collect()).collect();
        let mut facets = Vec::with_capacity(self.facets.len());
        for f in &self.facets {
            let v: Vec<Rational> = f.normal.0.iter().map(|&x| int(x as i128)).collect();
            let w = solve_exact(&ut, &v).ok_or_else(|| Error::Schema("transform is singular".into()))?;
            if w.iter().any(|x| !x.is_integer()) {
                return Err(Error::Schema("transform is not unimodular".into()));
            }
            facets.push(Facet::new(w.iter().map(|x| x.to_integer() as i64).collect(), f.offset));
        }
        let witness = apply_matrix(u, &self.witness);
        MomentPolytope::new(n, facets, Some(witness))
    }

    /// Image under `λ ↦ λ + τ`: offsets become `c_i + ⟨τ, v_i⟩`.
    pub fn translated(&self, tau: &[Rational]) -> Result<MomentPolytope> {
        let facets = self
            .facets
            .iter()
            .map(|f| Facet { normal: f.normal.clone(), offset: f.offset + f.normal.pair(tau) })
            .collect();
        let witness = self.witness.iter().zip(tau).map(|(a, b)| a + b).collect();
        MomentPolytope::new(self.dimension, facets, Some(witness))
    }

    /// Image under `λ ↦ sλ` for `s > 0`: offsets become `s·c_i`.
    pub fn scaled(&self, s: Rational) -> Result<MomentPolytope> {
        let facets = self.facets.iter().map(|f| Facet { normal: f.normal.clone(), offset: f.offset * s }).collect();
        let witness = self.witness.iter().map(|a| a * s).collect();
        MomentPolytope::new(self.dimension, facets, Some(witness))
    }

    pub fn to_document(&self) -> PolytopeDocument {
        PolytopeDocument {
            dimension: self.dimension,
            facets: self
                .facets
                .iter()
                .map(|f| FacetDocument::Object { normal: f.normal.0.clone(), offset: RationalRepr(f.offset) })
                .collect(),
            interior_witness: Some(self.witness.iter().copied().map(RationalRepr).collect()),
        }
    }
}

pub fn apply_matrix(u: &[Vec<i64>], p: &[Rational]) -> Vec<Rational> {
    u.iter().map(|row| row.iter().zip(p).fold(Rational::zero(), |a, (&x, y)| a + y * int(x as i128))).collect()
}

/// An interior point of a polytope; the only points that carry Lagrangian
/// torus fibers.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fiber {
    lambda: Vec<Rational>,
}

impl Fiber {
    pub fn new(poly: &MomentPolytope, lambda: Vec<Rational>) -> Result<Self> {
        if lambda.len() != poly.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "fiber has length {}, expected {}",
                lambda.len(),
                poly.dimension()
            )));
        }
        if !poly.is_interior(&lambda) {
            return Err(Error::NotInterior);
        }
        Ok(Fiber { lambda })
    }

    pub fn lambda(&self) -> &[Rational] {
        &self.lambda
    }

    pub fn label(&self) -> String {
        crate::rational::format_point(&self.lambda)
    }
}

/// Wire form of a polytope.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolytopeDocument {
    pub dimension: usize,
    pub facets: Vec<FacetDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior_witness: Option<Vec<RationalRepr>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FacetDocument {
    Object { normal: Vec<i64>, offset: RationalRepr },
    Pair(Vec<i64>, RationalRepr),
}

impl PolytopeDocument {
    pub fn into_polytope(self) -> Result<MomentPolytope> {
        let facets = self
            .facets
            .into_iter()
            .map(|f| match f {
                FacetDocument::Object { normal, offset } | FacetDocument::Pair(normal, offset) => {
                    Facet { normal: LatticeVector(normal), offset: offset.0 }
                }
            })
            .collect();
        let witness = self.interior_witness.map(|w| w.into_iter().map(|r| r.0).collect());
        MomentPolytope::new(self.dimension, facets, witness)
    }
}

/// Parses the JSON polytope document. Facets are either objects
/// `{"normal": [...], "offset": "p/q"}` or pairs `[[...], "p/q"]`.
pub fn parse_polytope(text: &str) -> Result<MomentPolytope> {
    let doc: PolytopeDocument = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    doc.into_polytope()
}

impl std::fmt::Display for MomentPolytope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "dimension {} with {} facets", self.dimension, self.facets.len())?;
        for (i, facet) in self.facets.iter().enumerate() {
            writeln!(f, "  l_{i}(λ) = ⟨λ, {:?}⟩ - ({})", facet.normal.0, format_rational(&facet.offset))?;
        }
        Ok(())
    }
}

pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}
