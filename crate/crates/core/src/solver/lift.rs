//! Lifting a leading-order root to a critical point over `Λ₀ mod q^D`.
//!
//! Row `j` of the gradient is divided by `q^{m_j}` (its leading level), so
//! that the leading system is the constant term of the scaled gradient `ĝ`
//! and the constant term of the scaled Hessian `M` is the leading Hessian.
//! Both lifts write `z_k = ζ_k e^{δ_k}` with `val(δ_k) > 0`.

use num_complex::Complex64;
use num_traits::Zero;
use serde::Serialize;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::novikov::{NovikovSeries, Valuation};
use crate::potential::Potential;
use crate::rational::{format_rational, int, Rational};

/// Leading Hessians with `scale / σ_min` at or above this are singular.
pub const SINGULAR_CONDITION: f64 = 1e8;
/// Coefficients of the scaled gradient below this count as zero.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Hessian coefficients below this are treated as absent by the graded lift.
const ENTRY_TOLERANCE: f64 = 1e-6;
const NEWTON_MAX_STEPS: usize = 64;
const GRADED_MAX_STEPS: usize = 500;
const STALL_LIMIT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftMethod {
    Newton,
    Graded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftOutcome {
    pub method: LiftMethod,
    /// Lifted point, truncated at `D`.
    pub z: Vec<NovikovSeries>,
    /// `min_j (val g_j − m_j)` before each step, ending at the final point.
    pub excess_history: Vec<Valuation>,
    /// Conditioning of the leading Hessian, `scale / σ_min`.
    pub condition: f64,
}

struct Frame<'a> {
    w: &'a Potential,
    /// Directions with at least one term depending on them.
    active: Vec<usize>,
    levels: Vec<Rational>,
    /// Common truncation of the scaled system.
    target: Rational,
    /// Truncation of `z`, large enough that every scaled row is known to
    /// `target`.
    work: Rational,
}

impl<'a> Frame<'a> {
    fn new(w: &'a Potential, d: Rational) -> Result<Self> {
        let mut active = Vec::new();
        let mut levels = Vec::new();
        for (j, level) in w.leading_levels().into_iter().enumerate() {
            if let Some(m) = level {
                active.push(j);
                levels.push(m);
            }
        }
        let lo = levels.iter().copied().min().unwrap_or_else(Rational::zero);
        let hi = levels.iter().copied().max().unwrap_or_else(Rational::zero);
        if d <= hi {
            return Err(Error::Schema(format!(
                "truncation {} does not exceed the leading level {}",
                format_rational(&d),
                format_rational(&hi)
            )));
        }
        Ok(Frame { w, active, levels, target: d - lo, work: d + hi - lo })
    }

    fn start(&self, zeta: &[Complex64]) -> Vec<NovikovSeries> {
        zeta.iter().map(|c| NovikovSeries::constant(*c, self.work)).collect()
    }

    /// `ĝ_j = q^{−m_j} ∂W/∂β_j` over the active directions.
    fn gradient(&self, z: &[NovikovSeries]) -> Result<Vec<NovikovSeries>> {
        let g = self.w.gradient(z)?;
        self.active
            .iter()
            .zip(&self.levels)
            .map(|(&j, m)| Ok(g[j].shift_down(*m)?.with_truncation(self.target)))
            .collect()
    }

    fn hessian(&self, z: &[NovikovSeries]) -> Result<Vec<Vec<NovikovSeries>>> {
        let h = self.w.hessian(z)?;
        self.active
            .iter()
            .zip(&self.levels)
            .map(|(&j, m)| {
                self.active.iter().map(|&k| Ok(h[j][k].shift_down(*m)?.with_truncation(self.target))).collect()
            })
            .collect()
    }

    /// Multiplies `z_k` by `e^{δ_k}` for the active directions.
    fn update(&self, z: &[NovikovSeries], delta: &[NovikovSeries]) -> Result<Vec<NovikovSeries>> {
        let mut out = z.to_vec();
        for (&k, dk) in self.active.iter().zip(delta) {
            out[k] = out[k].checked_mul(&dk.with_truncation(self.work).exp()?)?;
        }
        Ok(out)
    }

    /// Largest abs-sum of leading Hessian entries per row: the scale against
    /// which its smallest singular value is compared.
    fn hessian_scale(&self, zeta: &[Complex64]) -> f64 {
        self.active
            .iter()
            .zip(&self.levels)
            .map(|(&j, m)| {
                self.w
                    .terms()
                    .iter()
                    .filter(|t| t.exponent.0[j] != 0 && t.valuation == *m)
                    .map(|t| {
                        let mono: Complex64 = t.exponent.0.iter().zip(zeta).map(|(&k, z)| z.powi(k as i32)).product();
                        let weight: i64 = self.active.iter().map(|&k| (t.exponent.0[j] * t.exponent.0[k]).abs()).sum();
                        (t.multiplier * mono).norm() * weight as f64
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// Smallest exponent carrying a coefficient of modulus at least `tol` in any
/// component.
pub fn frontier(g: &[NovikovSeries], tol: f64) -> Valuation {
    g.iter()
        .filter_map(|s| s.terms().iter().find(|(_, c)| c.norm() >= tol).map(|(e, _)| Valuation::Finite(*e)))
        .min()
        .unwrap_or(Valuation::Infinite)
}

fn reached(v: Valuation, target: Rational) -> bool {
    match v {
        Valuation::Infinite => true,
        Valuation::Finite(e) => e >= target,
    }
}

fn constant_terms(m: &[Vec<NovikovSeries>]) -> CMatrix {
    m.iter().map(|row| row.iter().map(|s| s.constant_term()).collect()).collect()
}

fn series_mat_vec(m: &[Vec<NovikovSeries>], x: &[NovikovSeries]) -> Result<Vec<NovikovSeries>> {
    m.iter()
        .map(|row| {
            let d = row[0].truncation();
            row.iter().zip(x).try_fold(NovikovSeries::zero(d), |acc, (a, b)| acc.checked_add(&a.checked_mul(b)?))
        })
        .collect()
}

/// Solves `M δ = b` over truncated `Λ₀` when the constant term `M₀` is
/// invertible, by the fixed point `δ ← M₀⁻¹(b − M₊δ)`. Each pass fixes at
/// least one more exponent, so the iteration terminates.
pub(crate) fn solve_series(m: &[Vec<NovikovSeries>], b: &[NovikovSeries]) -> Result<Vec<NovikovSeries>> {
    let m0 = constant_terms(m);
    let inv = linalg::inverse(&m0).ok_or(Error::SingularLeadingHessian(f64::INFINITY))?;
    let d = b[0].truncation();
    let plus: Vec<Vec<NovikovSeries>> = m
        .iter()
        .zip(&m0)
        .map(|(row, row0)| row.iter().zip(row0).map(|(s, c)| s - &NovikovSeries::constant(*c, d)).collect())
        .collect();
    let mut delta = linalg::apply_to_series(&inv, b);
    for _ in 0..GRADED_MAX_STEPS {
        let correction = series_mat_vec(&plus, &delta)?;
        let rhs: Vec<NovikovSeries> = b.iter().zip(&correction).map(|(x, y)| x - y).collect();
        let next = linalg::apply_to_series(&inv, &rhs);
        let change = next.iter().zip(&delta).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max);
        delta = next;
        if change < 1e-15 {
            return Ok(delta);
        }
    }
    Err(Error::NoConvergence("series linear solve did not settle".into()))
}

/// Leading Hessian conditioning at `ζ` (infinite when singular).
pub fn leading_condition(w: &Potential, zeta: &[Complex64], d: Rational) -> Result<f64> {
    let frame = Frame::new(w, d)?;
    condition_of(&frame, zeta)
}

fn condition_of(frame: &Frame, zeta: &[Complex64]) -> Result<f64> {
    if frame.active.is_empty() {
        return Ok(1.0);
    }
    let z = frame.start(zeta);
    let m0 = constant_terms(&frame.hessian(&z)?);
    let s = linalg::singular_values(&m0);
    let smin = s.last().copied().unwrap_or(0.0);
    let scale = frame.hessian_scale(zeta).max(s.first().copied().unwrap_or(0.0));
    Ok(if smin > 0.0 { scale / smin } else { f64::INFINITY })
}

/// Newton's method over `Λ₀`. Requires a nondegenerate leading Hessian; the
/// excess valuation at least doubles per step.
pub fn newton_lift(w: &Potential, zeta: &[Complex64], d: Rational) -> Result<LiftOutcome> {
    let frame = Frame::new(w, d)?;
    let condition = condition_of(&frame, zeta)?;
    if condition >= SINGULAR_CONDITION {
        return Err(Error::SingularLeadingHessian(condition));
    }
    let mut z = frame.start(zeta);
    let mut history = Vec::new();
    let mut best = Valuation::Finite(-int(1));
    let mut stalled = 0;
    for _ in 0..NEWTON_MAX_STEPS {
        let g = frame.gradient(&z)?;
        let excess = frontier(&g, RESIDUAL_TOLERANCE);
        history.push(excess);
        if reached(excess, frame.target) {
            return Ok(finish(LiftMethod::Newton, z, history, condition, d));
        }
        if excess > best {
            best = excess;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_LIMIT {
                return Err(Error::NoConvergence(format!("residual valuation stalled at {excess}")));
            }
        }
        let m = frame.hessian(&z)?;
        let neg: Vec<NovikovSeries> = g.iter().map(|s| -s.clone()).collect();
        let delta = solve_series(&m, &neg)?;
        z = frame.update(&z, &delta)?;
    }
    Err(Error::NoConvergence("Newton step limit reached".into()))
}

fn finish(
    method: LiftMethod,
    z: Vec<NovikovSeries>,
    history: Vec<Valuation>,
    condition: f64,
    d: Rational,
) -> LiftOutcome {
    LiftOutcome { method, z: z.iter().map(|s| s.with_truncation(d)).collect(), excess_history: history, condition }
}

/// Order-by-order lift that tolerates a singular leading Hessian.
///
/// At each step the lowest surviving residual level `f` is cancelled. Linear
/// corrections `δ = c q^{f−s}` use the graded pieces `A_s` of the scaled
/// Hessian, with `c` in the kernel of every `A_{s'}` for `s' < s`. When none
/// exists, a correction at `(f − s)/k` for `k = 2, 3` is sought by solving
/// the truncated nonlinear equations for its coefficient.
pub fn graded_lift(w: &Potential, zeta: &[Complex64], d: Rational) -> Result<LiftOutcome> {
    let frame = Frame::new(w, d)?;
    let condition = condition_of(&frame, zeta)?;
    let mut z = frame.start(zeta);
    let mut history = Vec::new();
    for _ in 0..GRADED_MAX_STEPS {
        let g = frame.gradient(&z)?;
        let f = frontier(&g, RESIDUAL_TOLERANCE);
        history.push(f);
        let Valuation::Finite(f) = f else {
            return Ok(finish(LiftMethod::Graded, z, history, condition, d));
        };
        if f >= frame.target {
            return Ok(finish(LiftMethod::Graded, z, history, condition, d));
        }
        let r: Vec<Complex64> = g.iter().map(|s| s.coefficient(&f)).collect();
        let m = frame.hessian(&z)?;
        let pieces = graded_pieces(&m);
        z = match linear_step(&frame, &z, f, &r, &pieces)? {
            Some(next) => next,
            None => {
                nonlinear_step(&frame, &z, f, &r, &pieces)?.ok_or_else(|| Error::Inconsistent(format_rational(&d)))?
            }
        };
    }
    Err(Error::NoConvergence("graded lift step limit reached".into()))
}

/// `M = Σ_s A_s q^s` with negligible entries dropped.
fn graded_pieces(m: &[Vec<NovikovSeries>]) -> Vec<(Rational, CMatrix)> {
    let exps: BTreeSet<Rational> = m.iter().flatten().flat_map(|s| s.terms().iter().map(|(e, _)| *e)).collect();
    exps.into_iter()
        .filter_map(|e| {
            let a: CMatrix = m
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|s| {
                            let c = s.coefficient(&e);
                            if c.norm() < ENTRY_TOLERANCE {
                                Complex64::zero()
                            } else {
                                c
                            }
                        })
                        .collect()
                })
                .collect();
            a.iter().flatten().any(|c| !c.is_zero()).then_some((e, a))
        })
        .collect()
}

fn improves(frame: &Frame, z: &[NovikovSeries], f: Rational) -> Result<bool> {
    Ok(frontier(&frame.gradient(z)?, RESIDUAL_TOLERANCE) > Valuation::Finite(f))
}

fn monomial_delta(c: &[Complex64], e: Rational, d: Rational) -> Vec<NovikovSeries> {
    c.iter().map(|x| NovikovSeries::monomial(*x, e, d)).collect()
}

fn linear_step(
    frame: &Frame,
    z: &[NovikovSeries],
    f: Rational,
    r: &[Complex64],
    pieces: &[(Rational, CMatrix)],
) -> Result<Option<Vec<NovikovSeries>>> {
    let n = frame.active.len();
    let r_norm = r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let neg_r: Vec<Complex64> = r.iter().map(|c| -c).collect();
    for (idx, (s, a)) in pieces.iter().enumerate() {
        if *s > f {
            break;
        }
        let e = f - s;
        if e.is_zero() && !f.is_zero() {
            continue;
        }
        let lower: CMatrix = pieces[..idx].iter().flat_map(|(_, b)| b.iter().cloned()).collect();
        let basis = linalg::kernel(&lower, n, ENTRY_TOLERANCE);
        if basis.is_empty() {
            break;
        }
        // A_s K with the kernel basis as columns
        let ak: CMatrix = a
            .iter()
            .map(|row| basis.iter().map(|col| row.iter().zip(col).map(|(x, y)| x * y).sum()).collect())
            .collect();
        let (y, residual) = linalg::least_squares(&ak, &neg_r);
        if residual >= 1e-8 * r_norm {
            continue;
        }
        let c: Vec<Complex64> = (0..n).map(|i| basis.iter().zip(&y).map(|(col, yk)| col[i] * yk).sum()).collect();
        let next = frame.update(z, &monomial_delta(&c, e, frame.target))?;
        if improves(frame, &next, f)? {
            return Ok(Some(next));
        }
    }
    Ok(None)
}

fn nonlinear_step(
    frame: &Frame,
    z: &[NovikovSeries],
    f: Rational,
    r: &[Complex64],
    pieces: &[(Rational, CMatrix)],
) -> Result<Option<Vec<NovikovSeries>>> {
    let mut shifts: BTreeSet<Rational> = pieces.iter().map(|(s, _)| *s).collect();
    shifts.insert(Rational::zero());
    let mut candidates: BTreeSet<Rational> = BTreeSet::new();
    for s in shifts.into_iter().filter(|s| *s < f) {
        for k in [2, 3] {
            candidates.insert((f - s) / int(k));
        }
    }
    let scale = r.iter().map(|c| c.norm()).fold(1.0, f64::max);
    for e in candidates.into_iter().rev() {
        let n = frame.active.len();
        let eval = |c: &[Complex64]| -> Result<Vec<NovikovSeries>> {
            frame.gradient(&frame.update(z, &monomial_delta(c, e, frame.target))?)
        };
        // coefficient levels up to f, read off at a generic coefficient
        let generic: Vec<Complex64> = (0..n).map(|k| Complex64::new(0.71 + 0.13 * k as f64, 0.29)).collect();
        let levels: BTreeSet<Rational> = eval(&generic)?
            .iter()
            .chain(frame.gradient(z)?.iter())
            .flat_map(|s| s.terms().iter().map(|(x, _)| *x))
            .filter(|x| *x <= f)
            .collect();
        let system = |c: &[Complex64]| -> Result<Vec<Complex64>> {
            let g = eval(c)?;
            Ok(levels.iter().flat_map(|x| g.iter().map(move |s| s.coefficient(x))).collect())
        };
        for start in 0..8 {
            let c0: Vec<Complex64> = (0..n)
                .map(|k| {
                    let modulus = 2f64.powi(start % 3 - 1);
                    let phase = std::f64::consts::TAU * start as f64 / 8.0 + 0.37 * (k + 1) as f64;
                    Complex64::from_polar(modulus, phase)
                })
                .collect();
            if let Some(c) = gauss_newton(&system, c0, scale)? {
                let next = frame.update(z, &monomial_delta(&c, e, frame.target))?;
                if improves(frame, &next, f)? {
                    return Ok(Some(next));
                }
            }
        }
    }
    Ok(None)
}

/// Damped Gauss–Newton for a holomorphic system with a forward-difference
/// Jacobian.
fn gauss_newton(
    system: &dyn Fn(&[Complex64]) -> Result<Vec<Complex64>>,
    mut c: Vec<Complex64>,
    scale: f64,
) -> Result<Option<Vec<Complex64>>> {
    let norm = |v: &[Complex64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut value = system(&c)?;
    let mut current = norm(&value);
    for _ in 0..100 {
        if current < 1e-13 * scale {
            break;
        }
        let h = 1e-7;
        let columns: Vec<Vec<Complex64>> = (0..c.len())
            .map(|k| {
                let mut shifted = c.clone();
                shifted[k] += h;
                Ok(system(&shifted)?.iter().zip(&value).map(|(a, b)| (a - b) / h).collect())
            })
            .collect::<Result<_>>()?;
        let jac: CMatrix = (0..value.len()).map(|i| columns.iter().map(|col| col[i]).collect()).collect();
        let neg: Vec<Complex64> = value.iter().map(|x| -x).collect();
        let (step, _) = linalg::least_squares(&jac, &neg);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-6 {
            let trial: Vec<Complex64> = c.iter().zip(&step).map(|(a, b)| a + b * t).collect();
            let v = system(&trial)?;
            let n = norm(&v);
            if n < current {
                c = trial;
                value = v;
                current = n;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((current < RESIDUAL_TOLERANCE * scale).then_some(c))
}

/// Largest gradient coefficient below `D` at `z` and the valuation of the
/// gradient with negligible coefficients dropped.
pub fn verify_critical(w: &Potential, z: &[NovikovSeries]) -> Result<(Valuation, f64)> {
    let g = w.gradient(z)?;
    let largest = g.iter().flat_map(|s| s.terms().iter().map(|(_, c)| c.norm())).fold(0.0, f64::max);
    Ok((frontier(&g, RESIDUAL_TOLERANCE), largest))
}
