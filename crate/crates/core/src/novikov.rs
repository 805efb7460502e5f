//! Truncated elements of the universal Novikov ring `Λ₀`: finite sums
//! `Σ a_k q^{d_k}` with complex `a_k`, exact rational `0 ≤ d_k < D`.

use num_complex::Complex64;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::rational::{format_rational, parse_rational, to_f64, Rational};

/// Coefficients with modulus below this are never stored.
pub const PRUNE_THRESHOLD: f64 = 1e-12;
/// Tolerance for comparing coefficients.
pub const COMPARE_TOLERANCE: f64 = 1e-9;

/// q-adic order; `Infinite` for the zero series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(Rational),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<Rational> {
        match self {
            Valuation::Finite(r) => Some(r),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Valuation::Infinite
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
            (Valuation::Infinite, _) => Ordering::Greater,
            (_, Valuation::Infinite) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(r) => f.write_str(&format_rational(r)),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Valuation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NovikovSeries {
    terms: Vec<(Rational, Complex64)>,
    truncation: Rational,
}

impl NovikovSeries {
    pub fn zero(truncation: Rational) -> Self {
        assert!(truncation.is_positive(), "truncation must be positive");
        NovikovSeries { terms: Vec::new(), truncation }
    }

    pub fn one(truncation: Rational) -> Self {
        Self::constant(Complex64::new(1.0, 0.0), truncation)
    }

    pub fn constant(c: Complex64, truncation: Rational) -> Self {
        Self::monomial(c, Rational::zero(), truncation)
    }

    /// `c·q^e`, or zero when `e ≥ D` or `c` is negligible.
    pub fn monomial(c: Complex64, exponent: Rational, truncation: Rational) -> Self {
        assert!(!exponent.is_negative(), "Λ₀ exponents are non-negative");
        let mut s = Self::zero(truncation);
        if exponent < truncation && c.norm() >= PRUNE_THRESHOLD {
            s.terms.push((exponent, c));
        }
        s
    }

    /// Builds a series from arbitrary terms: merges equal exponents, drops
    /// exponents `≥ D` and prunes negligible coefficients.
    pub fn from_terms(terms: impl IntoIterator<Item = (Rational, Complex64)>, truncation: Rational) -> Result<Self> {
        let mut acc: BTreeMap<Rational, Complex64> = BTreeMap::new();
        for (e, c) in terms {
            if e.is_negative() {
                return Err(Error::NegativeValuation);
            }
            if e < truncation {
                *acc.entry(e).or_insert_with(Complex64::zero) += c;
            }
        }
        Ok(Self::from_map(acc, truncation))
    }

    fn from_map(acc: BTreeMap<Rational, Complex64>, truncation: Rational) -> Self {
        NovikovSeries { terms: acc.into_iter().filter(|(_, c)| c.norm() >= PRUNE_THRESHOLD).collect(), truncation }
    }

    pub fn terms(&self) -> &[(Rational, Complex64)] {
        &self.terms
    }

    pub fn truncation(&self) -> Rational {
        self.truncation
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn val(&self) -> Valuation {
        self.terms.first().map_or(Valuation::Infinite, |(e, _)| Valuation::Finite(*e))
    }

    /// Coefficient of the lowest-order term (zero for the zero series).
    pub fn leading_coefficient(&self) -> Complex64 {
        self.terms.first().map_or(Complex64::zero(), |(_, c)| *c)
    }

    pub fn coefficient(&self, exponent: &Rational) -> Complex64 {
        self.terms.binary_search_by(|(e, _)| e.cmp(exponent)).map_or(Complex64::zero(), |i| self.terms[i].1)
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coefficient(&Rational::zero())
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.truncation != other.truncation {
            return Err(Error::TruncationMismatch(
                format_rational(&self.truncation),
                format_rational(&other.truncation),
            ));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut acc: BTreeMap<Rational, Complex64> = self.terms.iter().copied().collect();
        for (e, c) in &other.terms {
            *acc.entry(*e).or_insert_with(Complex64::zero) += c;
        }
        Ok(Self::from_map(acc, self.truncation))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let d = self.truncation;
        let mut acc: BTreeMap<Rational, Complex64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea + eb;
                if e >= d {
                    break;
                }
                *acc.entry(e).or_insert_with(Complex64::zero) += ca * cb;
            }
        }
        Ok(Self::from_map(acc, d))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let acc = self.terms.iter().map(|(e, a)| (*e, a * c)).collect();
        Self::from_map(acc, self.truncation)
    }

    /// Multiplies by `q^e` for `e ≥ 0`.
    pub fn shift_up(&self, e: Rational) -> Self {
        assert!(!e.is_negative());
        let acc = self.terms.iter().map(|(x, c)| (x + e, *c)).filter(|(x, _)| *x < self.truncation).collect();
        Self::from_map(acc, self.truncation)
    }

    /// Divides by `q^e`; the result is known below `D − e`.
    pub fn shift_down(&self, e: Rational) -> Result<Self> {
        if self.terms.first().is_some_and(|(x, _)| *x < e) {
            return Err(Error::NegativeValuation);
        }
        let acc = self.terms.iter().map(|(x, c)| (x - e, *c)).collect();
        Ok(Self::from_map(acc, self.truncation - e))
    }

    /// Re-truncates at `d`. Raising the truncation treats the stored terms as
    /// exact, which is right for finite polynomials and otherwise leaves the
    /// band `[old D, d)` to be filled by later corrections.
    pub fn with_truncation(&self, d: Rational) -> Self {
        let acc = self.terms.iter().copied().filter(|(e, _)| *e < d).collect();
        Self::from_map(acc, d)
    }

    /// Multiplicative inverse of a unit (valuation 0, non-negligible constant
    /// term), computed as a geometric series.
    pub fn inverse(&self) -> Result<Self> {
        let a0 = self.constant_term();
        if a0.norm() <= PRUNE_THRESHOLD {
            return Err(Error::NotAUnit);
        }
        let d = self.truncation;
        let inv0 = a0.inv();
        // self = a0 (1 + u), val(u) > 0
        let u = self.scale(inv0) - Self::one(d);
        let neg_u = -u;
        let mut sum = Self::one(d);
        let mut power = Self::one(d);
        loop {
            power = &power * &neg_u;
            if power.is_zero() {
                break;
            }
            sum = &sum + &power;
        }
        Ok(sum.scale(inv0))
    }

    /// `e^{a₀} Σ_k (a − a₀)^k / k!` where `a₀` is the constant term.
    pub fn exp(&self) -> Result<Self> {
        if self.terms.first().is_some_and(|(e, _)| e.is_negative()) {
            return Err(Error::NegativeValuation);
        }
        let d = self.truncation;
        let a0 = self.constant_term();
        let tail = self - &Self::constant(a0, d);
        let mut sum = Self::one(d);
        let mut power = Self::one(d);
        let mut k = 1.0;
        loop {
            power = (&power * &tail).scale(Complex64::new(1.0 / k, 0.0));
            if power.is_zero() {
                break;
            }
            sum = &sum + &power;
            k += 1.0;
        }
        Ok(sum.scale(a0.exp()))
    }

    /// Integer power; negative powers require a unit.
    pub fn powi(&self, k: i64) -> Result<Self> {
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut exp = k.unsigned_abs();
        let mut result = Self::one(self.truncation);
        let mut sq = base;
        while exp > 0 {
            if exp & 1 == 1 {
                result = &result * &sq;
            }
            exp >>= 1;
            if exp > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(result)
    }

    /// Numeric value with `q` specialised to `q0 ∈ (0, 1)`.
    pub fn eval_at(&self, q0: f64) -> Complex64 {
        self.terms.iter().map(|(e, c)| c * q0.powf(to_f64(e))).sum()
    }

    /// Largest coefficient difference over the union of supports.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut acc: BTreeMap<Rational, Complex64> = self.terms.iter().copied().collect();
        for (e, c) in &other.terms {
            *acc.entry(*e).or_insert_with(Complex64::zero) -= c;
        }
        acc.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) < tol
    }

    pub fn to_wire(&self) -> Vec<SeriesTerm> {
        self.terms.iter().map(|(e, c)| SeriesTerm { exp: format_rational(e), re: c.re, im: c.im }).collect()
    }

    pub fn from_wire(terms: &[SeriesTerm], truncation: Rational) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|t| Ok((parse_rational(&t.exp)?, Complex64::new(t.re, t.im))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(parsed, truncation)
    }
}

/// Wire form of one term: `{"exp": "p/q", "re": f64, "im": f64}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesTerm {
    pub exp: String,
    pub re: f64,
    pub im: f64,
}

impl Serialize for NovikovSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_wire().serialize(s)
    }
}

impl fmt::Display for NovikovSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (e, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            if !e.is_zero() {
                write!(f, "q^{}", format_rational(e))?;
            }
        }
        Ok(())
    }
}

impl Add for &NovikovSeries {
    type Output = NovikovSeries;
    fn add(self, rhs: &NovikovSeries) -> NovikovSeries {
        self.checked_add(rhs).expect("series truncations must match")
    }
}

impl Sub for &NovikovSeries {
    type Output = NovikovSeries;
    fn sub(self, rhs: &NovikovSeries) -> NovikovSeries {
        self + &(-rhs)
    }
}

impl Neg for &NovikovSeries {
    type Output = NovikovSeries;
    fn neg(self) -> NovikovSeries {
        NovikovSeries { terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(), truncation: self.truncation }
    }
}

impl Neg for NovikovSeries {
    type Output = NovikovSeries;
    fn neg(self) -> NovikovSeries {
        -&self
    }
}

impl Mul for &NovikovSeries {
    type Output = NovikovSeries;
    fn mul(self, rhs: &NovikovSeries) -> NovikovSeries {
        self.checked_mul(rhs).expect("series truncations must match")
    }
}

impl Add for NovikovSeries {
    type Output = NovikovSeries;
    fn add(self, rhs: NovikovSeries) -> NovikovSeries {
        &self + &rhs
    }
}

impl Sub for NovikovSeries {
    type Output = NovikovSeries;
    fn sub(self, rhs: NovikovSeries) -> NovikovSeries {
        &self - &rhs
    }
}

impl Mul for NovikovSeries {
    type Output = NovikovSeries;
    fn mul(self, rhs: NovikovSeries) -> NovikovSeries {
        &self * &rhs
    }
}

/// `Π_j z_j^{v_j}`, with negative powers through the series inverse.
pub fn monomial_eval(z: &[NovikovSeries], v: &crate::polytope::LatticeVector) -> Result<NovikovSeries> {
    if z.len() != v.len() {
        return Err(Error::DimensionMismatch(format!("point has length {}, exponent {}", z.len(), v.len())));
    }
    let d = z.first().map(|s| s.truncation()).ok_or_else(|| Error::DimensionMismatch("empty point".into()))?;
    let mut out = NovikovSeries::one(d);
    for (zj, &k) in z.iter().zip(&v.0) {
        if k != 0 {
            out = out.checked_mul(&zj.powi(k)?)?;
        }
    }
    Ok(out)
}
