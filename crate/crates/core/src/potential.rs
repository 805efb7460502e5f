//! The gauged potential `W(z) = Σ_i e^{α_i} z^{v_i} q^{l_i(λ)}` in the
//! variables `z_j = e^{β_j}`, and its β-derivatives.

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::novikov::{NovikovSeries, SeriesTerm};
use crate::polytope::{Fiber, LatticeVector, MomentPolytope};
use crate::rational::{format_rational, to_f64, Rational};

/// Bulk deformation `α = Σ α_i c₁^G(ℂ_i)`, one Λ₀ element per facet.
///
/// Each `α_i` is a finite sum and is treated as exact, so it can be
/// re-truncated at whatever order the computation needs.
#[derive(Clone, Debug, PartialEq)]
pub struct BulkParameter {
    alpha: Vec<NovikovSeries>,
}

impl BulkParameter {
    pub fn new(alpha: Vec<NovikovSeries>) -> Self {
        BulkParameter { alpha }
    }

    /// Purely constant deformation `α_i = c_i`.
    pub fn constants(values: &[Complex64]) -> Self {
        let d = Rational::from_integer(1);
        BulkParameter { alpha: values.iter().map(|c| NovikovSeries::constant(*c, d)).collect() }
    }

    pub fn alpha(&self) -> &[NovikovSeries] {
        &self.alpha
    }

    /// Reads `[[{"exp": "p/q", "re": .., "im": ..}, ..], ..]` or the same list
    /// under an `"alpha"` key.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Doc {
            Bare(Vec<Vec<SeriesTerm>>),
            Keyed { alpha: Vec<Vec<SeriesTerm>> },
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        let lists = match doc {
            Doc::Bare(l) | Doc::Keyed { alpha: l } => l,
        };
        let mut alpha = Vec::with_capacity(lists.len());
        for terms in &lists {
            let parsed: Vec<(Rational, Complex64)> = terms
                .iter()
                .map(|t| Ok((crate::rational::parse_rational(&t.exp)?, Complex64::new(t.re, t.im))))
                .collect::<Result<_>>()?;
            let top = parsed.iter().map(|(e, _)| *e).max().unwrap_or_else(Rational::zero);
            alpha.push(NovikovSeries::from_terms(parsed, top + Rational::from_integer(1))?);
        }
        Ok(BulkParameter { alpha })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTerm {
    pub facet_index: usize,
    /// `e^{α_i,0}` for the constant part `α_i,0` of the bulk parameter.
    pub multiplier: Complex64,
    /// `α_i − α_i,0`, a finite sum with positive exponents (`None` when zero).
    pub bulk_log: Option<NovikovSeries>,
    pub exponent: LatticeVector,
    pub valuation: Rational,
}

impl PotentialTerm {
    /// `e^{α_i − α_i,0}` truncated at `d`; exactly 1 without a bulk tail.
    pub fn bulk_tail(&self, d: Rational) -> NovikovSeries {
        match &self.bulk_log {
            None => NovikovSeries::one(d),
            Some(tail) => tail.with_truncation(d).exp().expect("bulk tail has positive valuation"),
        }
    }

    /// `e^{α_i − α_i,0}` with `q` set to `q0`.
    fn bulk_tail_at(&self, q0: f64) -> Complex64 {
        self.bulk_log.as_ref().map_or(Complex64::new(1.0, 0.0), |t| t.eval_at(q0).exp())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    dimension: usize,
    fiber: Fiber,
    terms: Vec<PotentialTerm>,
}

/// Builds `W^G_{λ,α}` with one term per facet, in facet order.
pub fn build_potential(poly: &MomentPolytope, lambda: &[Rational], bulk: Option<&BulkParameter>) -> Result<Potential> {
    let fiber = Fiber::new(poly, lambda.to_vec())?;
    if let Some(b) = bulk {
        if b.alpha.len() != poly.facets().len() {
            return Err(Error::DimensionMismatch(format!(
                "bulk parameter has {} entries for {} facets",
                b.alpha.len(),
                poly.facets().len()
            )));
        }
    }
    let values = poly.facet_values(lambda);
    let terms = poly
        .facets()
        .iter()
        .zip(values)
        .enumerate()
        .map(|(i, (facet, l))| {
            let (multiplier, bulk_log) = split_bulk(bulk.map(|b| &b.alpha[i]));
            PotentialTerm { facet_index: i, multiplier, bulk_log, exponent: facet.normal.clone(), valuation: l }
        })
        .collect();
    Ok(Potential { dimension: poly.dimension(), fiber, terms })
}

pub(crate) fn split_bulk(alpha: Option<&NovikovSeries>) -> (Complex64, Option<NovikovSeries>) {
    match alpha {
        None => (Complex64::new(1.0, 0.0), None),
        Some(a) => {
            let c0 = a.constant_term();
            let tail = a - &NovikovSeries::constant(c0, a.truncation());
            (c0.exp(), (!tail.is_zero()).then_some(tail))
        }
    }
}

impl Potential {
    /// Assembles a potential from explicit terms (used by the disk-count
    /// reconstruction).
    pub fn from_terms(dimension: usize, fiber: Fiber, terms: Vec<PotentialTerm>) -> Self {
        Potential { dimension, fiber, terms }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn fiber(&self) -> &Fiber {
        &self.fiber
    }

    pub fn terms(&self) -> &[PotentialTerm] {
        &self.terms
    }

    pub fn max_valuation(&self) -> Rational {
        self.terms.iter().map(|t| t.valuation).max().unwrap_or_else(Rational::zero)
    }

    /// Default truncation: three times the largest term valuation.
    pub fn default_truncation(&self) -> Rational {
        self.max_valuation() * Rational::from_integer(3)
    }

    /// Per direction `j`, the smallest valuation among terms with `v_ij ≠ 0`
    /// (`None` when no term depends on `β_j`).
    pub fn leading_levels(&self) -> Vec<Option<Rational>> {
        (0..self.dimension)
            .map(|j| self.terms.iter().filter(|t| t.exponent.0[j] != 0).map(|t| t.valuation).min())
            .collect()
    }

    /// The summands `e^{α_i} z^{v_i} q^{l_i}` at `z`.
    pub fn term_values(&self, z: &[NovikovSeries]) -> Result<Vec<NovikovSeries>> {
        if z.len() != self.dimension {
            return Err(Error::DimensionMismatch(format!("point has length {}, expected {}", z.len(), self.dimension)));
        }
        let d = z[0].truncation();
        let inverses: Vec<Option<NovikovSeries>> = (0..self.dimension)
            .map(|j| if self.terms.iter().any(|t| t.exponent.0[j] < 0) { z[j].inverse().map(Some) } else { Ok(None) })
            .collect::<Result<_>>()?;
        self.terms
            .iter()
            .map(|t| {
                let mut value = t.bulk_tail(d).scale(t.multiplier);
                for (j, &k) in t.exponent.0.iter().enumerate() {
                    let base = if k < 0 { inverses[j].as_ref().expect("inverse computed") } else { &z[j] };
                    value = value.checked_mul(&base.powi(k.abs())?)?;
                }
                Ok(value.shift_up(t.valuation))
            })
            .collect()
    }

    pub fn eval(&self, z: &[NovikovSeries]) -> Result<NovikovSeries> {
        let d = z.first().map(|s| s.truncation()).ok_or_else(|| Error::DimensionMismatch("empty point".into()))?;
        let values = self.term_values(z)?;
        values.iter().try_fold(NovikovSeries::zero(d), |acc, v| acc.checked_add(v))
    }

    /// `∂W/∂β_j = Σ_i v_ij · term_i`.
    pub fn gradient(&self, z: &[NovikovSeries]) -> Result<Vec<NovikovSeries>> {
        let values = self.term_values(z)?;
        Ok(self.weighted_sums(&values, |t, j| t.exponent.0[j] as f64))
    }

    /// `∂²W/∂β_j∂β_k = Σ_i v_ij v_ik · term_i`.
    pub fn hessian(&self, z: &[NovikovSeries]) -> Result<Vec<Vec<NovikovSeries>>> {
        let values = self.term_values(z)?;
        Ok((0..self.dimension)
            .map(|j| self.weighted_sums(&values, |t, k| (t.exponent.0[j] * t.exponent.0[k]) as f64))
            .collect())
    }

    fn weighted_sums(
        &self,
        values: &[NovikovSeries],
        weight: impl Fn(&PotentialTerm, usize) -> f64,
    ) -> Vec<NovikovSeries> {
        let d = values[0].truncation();
        (0..self.dimension)
            .map(|j| {
                self.terms.iter().zip(values).fold(NovikovSeries::zero(d), |acc, (t, v)| {
                    let w = weight(t, j);
                    if w == 0.0 {
                        acc
                    } else {
                        &acc + &v.scale(Complex64::new(w, 0.0))
                    }
                })
            })
            .collect()
    }

    /// Numeric value and β-gradient with `q = q0` and `z = z0`.
    pub fn specialize_q(&self, z0: &[Complex64], q0: f64) -> Result<(Complex64, Vec<Complex64>)> {
        if z0.len() != self.dimension {
            return Err(Error::DimensionMismatch(format!(
                "point has length {}, expected {}",
                z0.len(),
                self.dimension
            )));
        }
        if z0.iter().any(|z| z.norm() == 0.0) {
            return Err(Error::ZeroComponent);
        }
        let mut value = Complex64::zero();
        let mut grad = vec![Complex64::zero(); self.dimension];
        for t in &self.terms {
            let mono: Complex64 = t.exponent.0.iter().zip(z0).map(|(&k, z)| z.powi(k as i32)).product();
            let term = t.multiplier * t.bulk_tail_at(q0) * mono * q0.powf(to_f64(&t.valuation));
            value += term;
            for (g, &k) in grad.iter_mut().zip(&t.exponent.0) {
                *g += term * k as f64;
            }
        }
        Ok((value, grad))
    }

    /// Sum of `|v_ij · term_i|` at a numeric point: the scale against which
    /// the `j`-th gradient component is measured.
    pub fn gradient_scale(&self, z0: &[Complex64], q0: f64) -> Vec<f64> {
        let mut scale = vec![0.0; self.dimension];
        for t in &self.terms {
            let mono: Complex64 = t.exponent.0.iter().zip(z0).map(|(&k, z)| z.powi(k as i32)).product();
            let term = (t.multiplier * t.bulk_tail_at(q0) * mono).norm() * q0.powf(to_f64(&t.valuation));
            for (s, &k) in scale.iter_mut().zip(&t.exponent.0) {
                *s += term * (k.abs() as f64);
            }
        }
        scale
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "potential at λ = {}", self.fiber.label());
        let _ = writeln!(out, "{:>5}  {:<16} {:<10} {:<24} bulk tail", "facet", "v_i", "l_i(λ)", "multiplier");
        for t in &self.terms {
            let tail = t.bulk_log.as_ref().map_or("1".to_string(), |b| format!("exp({b})"));
            let _ = writeln!(
                out,
                "{:>5}  {:<16} {:<10} {:<24} {}",
                t.facet_index,
                format!("{:?}", t.exponent.0),
                format_rational(&t.valuation),
                format!("{:.6}{:+.6}i", t.multiplier.re, t.multiplier.im),
                tail
            );
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct TermJson<'a> {
            facet_index: usize,
            exponent: &'a [i64],
            valuation: String,
            multiplier: [f64; 2],
            bulk_log: Vec<SeriesTerm>,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            dimension: usize,
            lambda: Vec<String>,
            terms: Vec<TermJson<'a>>,
        }
        let doc = Doc {
            dimension: self.dimension,
            lambda: self.fiber.lambda().iter().map(format_rational).collect(),
            terms: self
                .terms
                .iter()
                .map(|t| TermJson {
                    facet_index: t.facet_index,
                    exponent: &t.exponent.0,
                    valuation: format_rational(&t.valuation),
                    multiplier: [crate::solver::round(t.multiplier.re), crate::solver::round(t.multiplier.im)],
                    bulk_log: t.bulk_log.as_ref().map(|b| b.to_wire()).unwrap_or_default(),
                })
                .collect(),
        };
        serde_json::to_value(doc).expect("potential serializes")
    }
}

pub fn eval_potential(w: &Potential, z: &[NovikovSeries]) -> Result<NovikovSeries> {
    w.eval(z)
}

pub fn eval_gradient(w: &Potential, z: &[NovikovSeries]) -> Result<Vec<NovikovSeries>> {
    w.gradient(z)
}

pub fn eval_hessian(w: &Potential, z: &[NovikovSeries]) -> Result<Vec<Vec<NovikovSeries>>> {
    w.hessian(z)
}

pub fn specialize_q(w: &Potential, z0: &[Complex64], q0: f64) -> Result<(Complex64, Vec<Complex64>)> {
    w.specialize_q(z0, q0)
}

/// Constant series point `z_j = c_j`.
pub fn constant_point(values: &[Complex64], d: Rational) -> Vec<NovikovSeries> {
    values.iter().map(|c| NovikovSeries::constant(*c, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::rational::{int, rat};
    use proptest::prelude::*;
    use std::f64::consts::{E, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mono(coef: Complex64, e: Rational, d: Rational) -> NovikovSeries {
        NovikovSeries::monomial(coef, e, d)
    }

    #[test]
    fn projective_line_terms() {
        let p = examples::projective_line();
        let w = build_potential(&p, &[rat(1, 2)], None).unwrap();
        assert_eq!(w.terms().len(), 2);
        assert_eq!(w.terms()[0].exponent.0, vec![1]);
        assert_eq!(w.terms()[1].exponent.0, vec![-1]);
        assert!(w.terms().iter().all(|t| t.valuation == rat(1, 2) && t.multiplier == c(1.0, 0.0)));

        let bulk = BulkParameter::constants(&[c(0.0, PI), c(0.0, 0.0)]);
        let wb = build_potential(&p, &[rat(1, 2)], Some(&bulk)).unwrap();
        assert!((wb.terms()[0].multiplier - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(wb.terms()[1].multiplier, c(1.0, 0.0));

        assert_eq!(build_potential(&p, &[int(1)], None), Err(Error::NotInterior));
    }

    #[test]
    fn plane_blowup_terms() {
        let p = examples::blowup_of_plane();
        let w = build_potential(&p, &[int(1), int(1)], None).unwrap();
        let exps: Vec<Vec<i64>> = w.terms().iter().map(|t| t.exponent.0.clone()).collect();
        assert_eq!(exps, vec![vec![1, 0], vec![0, 1], vec![1, 1]]);
        assert!(w.terms().iter().all(|t| t.valuation == int(1)));
    }

    #[test]
    fn evaluation_by_hand() {
        let d = int(3);
        let p = examples::projective_line();
        let w = build_potential(&p, &[rat(1, 2)], None).unwrap();
        let at = |x: Complex64| constant_point(&[x], d);

        assert!(w.eval(&at(c(1.0, 0.0))).unwrap().approx_eq(&mono(c(2.0, 0.0), rat(1, 2), d), 1e-15));
        assert!(w.eval(&at(c(-1.0, 0.0))).unwrap().approx_eq(&mono(c(-2.0, 0.0), rat(1, 2), d), 1e-15));
        assert!(w.gradient(&at(c(1.0, 0.0))).unwrap()[0].is_zero());
        let g = w.gradient(&at(c(0.0, 1.0))).unwrap();
        assert!(g[0].approx_eq(&mono(c(0.0, 2.0), rat(1, 2), d), 1e-15));
        let h = w.hessian(&at(c(1.0, 0.0))).unwrap();
        assert!(h[0][0].approx_eq(&mono(c(2.0, 0.0), rat(1, 2), d), 1e-15));
        let h = w.hessian(&at(c(-1.0, 0.0))).unwrap();
        assert!(h[0][0].approx_eq(&mono(c(-2.0, 0.0), rat(1, 2), d), 1e-15));

        let p = examples::blowup_of_plane();
        let w = build_potential(&p, &[int(1), int(1)], None).unwrap();
        let z = constant_point(&[c(-1.0, 0.0), c(-1.0, 0.0)], d);
        assert!(w.eval(&z).unwrap().approx_eq(&mono(c(-1.0, 0.0), int(1), d), 1e-15));
        assert!(w.gradient(&z).unwrap().iter().all(|g| g.is_zero()));
        let h = w.hessian(&z).unwrap();
        assert!(h[0][1].approx_eq(&mono(c(1.0, 0.0), int(1), d), 1e-15));
        assert_eq!(h[0][1], h[1][0]);
    }

    #[test]
    fn specialization_closed_forms() {
        let p = examples::projective_line();
        let w = build_potential(&p, &[rat(1, 2)], None).unwrap();
        let (v, g) = w.specialize_q(&[c(1.0, 0.0)], 0.1).unwrap();
        assert!((v - c(2.0 * 0.1f64.sqrt(), 0.0)).norm() < 1e-14);
        assert!(g[0].norm() < 1e-15);
        let (_, g) = w.specialize_q(&[c(E, 0.0)], 0.1).unwrap();
        assert!((g[0] - c((E - 1.0 / E) * 0.1f64.sqrt(), 0.0)).norm() < 1e-14);
        assert_eq!(w.specialize_q(&[c(0.0, 0.0)], 0.1), Err(Error::ZeroComponent));
    }

    #[test]
    fn bulk_tail_in_positive_valuation_keeps_leading_data() {
        let p = examples::weighted_projective_plane(3, 5);
        let d = int(5);
        let tails: Vec<NovikovSeries> =
            (0..3).map(|i| mono(c(0.5 * i as f64 + 0.25, -0.1), rat(i + 1, 3), d)).collect();
        let plain = build_potential(&p, &[int(1), int(1)], None).unwrap();
        let bulky = build_potential(&p, &[int(1), int(1)], Some(&BulkParameter::new(tails))).unwrap();
        for (a, b) in plain.terms().iter().zip(bulky.terms()) {
            assert_eq!(a.multiplier, b.multiplier);
            assert_eq!(a.valuation, b.valuation);
            assert_eq!(a.exponent, b.exponent);
            assert!(b.bulk_log.is_some());
            assert_eq!(b.bulk_tail(d).constant_term(), c(1.0, 0.0));
        }
    }

    #[test]
    fn bulk_json_forms() {
        let bare = BulkParameter::from_json(r#"[[{"exp":"0","re":0.0,"im":3.14}],[]]"#).unwrap();
        let keyed = BulkParameter::from_json(r#"{"alpha":[[{"exp":"0","re":0.0,"im":3.14}],[]]}"#).unwrap();
        assert_eq!(bare, keyed);
        assert_eq!(bare.alpha().len(), 2);
        assert!(BulkParameter::from_json("[1]").is_err());
        let p = examples::weighted_projective_plane(3, 5);
        assert!(matches!(build_potential(&p, &[int(1), int(1)], Some(&bare)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn gradient_is_weighted_term_sum() {
        // directional derivative along μ equals Σ_j μ_j ∂_j W, term by term
        let p = examples::blowup_of_quadric(rat(1, 2));
        let w = build_potential(&p, &[rat(1, 5), rat(-1, 7)], None).unwrap();
        let d = int(4);
        let z = constant_point(&[c(0.7, 0.2), c(-1.1, 0.4)], d);
        let terms = w.term_values(&z).unwrap();
        let grad = w.gradient(&z).unwrap();
        let mu = [2.0, -3.0];
        let combined = &grad[0].scale(c(mu[0], 0.0)) + &grad[1].scale(c(mu[1], 0.0));
        let direct = w.terms().iter().zip(&terms).fold(NovikovSeries::zero(d), |acc, (t, v)| {
            let pairing = t.exponent.0[0] as f64 * mu[0] + t.exponent.0[1] as f64 * mu[1];
            &acc + &v.scale(c(pairing, 0.0))
        });
        assert!(combined.approx_eq(&direct, 1e-12));
    }

    proptest! {
        #[test]
        fn gradient_matches_central_differences(
            re in prop::collection::vec(0.3f64..2.0, 2),
            th in prop::collection::vec(0.0f64..std::f64::consts::TAU, 2),
            q0 in 0.05f64..0.95,
        ) {
            let p = examples::weighted_projective_plane(2, 3);
            let w = build_potential(&p, &[rat(1, 2), rat(2, 3)], None).unwrap();
            let z0: Vec<Complex64> = re.iter().zip(&th).map(|(r, t)| Complex64::from_polar(*r, *t)).collect();
            let (_, g) = w.specialize_q(&z0, q0).unwrap();
            let scale = w.gradient_scale(&z0, q0);
            let h: f64 = 1e-6;
            for j in 0..2 {
                let mut up = z0.clone();
                let mut dn = z0.clone();
                up[j] *= h.exp();
                dn[j] *= (-h).exp();
                let fd = (w.specialize_q(&up, q0).unwrap().0 - w.specialize_q(&dn, q0).unwrap().0) / (2.0 * h);
                prop_assert!((fd - g[j]).norm() / scale[j].max(g[j].norm()) < 1e-5);
            }
        }
    }
}
