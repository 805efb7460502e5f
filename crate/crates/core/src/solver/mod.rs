//! Critical points of the potential over truncated `Λ₀`.
//!
//! Candidates come from valuation balancing, roots of each candidate's
//! leading system seed a lift, and each successful lift yields a
//! certificate that the fiber is non-displaceable.

pub mod leading;
pub mod lift;
pub mod tropical;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::novikov::{NovikovSeries, SeriesTerm, Valuation};
use crate::polytope::{Fiber, MomentPolytope};
use crate::potential::{build_potential, BulkParameter, Potential};
use crate::rational::{format_rational, Rational};

pub use leading::{leading_hessian, leading_system, solve_leading, LeadingSystem};
pub use lift::{graded_lift, newton_lift, verify_critical, LiftMethod, LiftOutcome};
pub use tropical::{tropical_candidates, TropicalCandidate};

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub seed: u64,
    /// Multistart count; `64·3ⁿ` when unset.
    pub starts: Option<usize>,
    /// Truncation `D`; three times the largest facet value when unset.
    pub truncation: Option<Rational>,
    /// Fall back to the graded lift on a singular leading Hessian.
    pub allow_graded: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { seed: 0, starts: None, truncation: None, allow_graded: true }
    }
}

impl SolverConfig {
    pub fn starts_for(&self, n: usize) -> usize {
        self.starts.unwrap_or(64 * 3usize.pow(n as u32))
    }
}

/// Evidence that `L(λ)` carries a critical point of `W` modulo `q^D`.
#[derive(Clone, Debug, PartialEq)]
pub struct CriticalCertificate {
    pub fiber: Fiber,
    pub leading_root: Vec<Complex64>,
    pub z: Vec<NovikovSeries>,
    pub truncation: Rational,
    pub method: LiftMethod,
    pub hessian_condition: f64,
    pub leading_jacobian_nondegenerate: bool,
    /// `W(z)` modulo `q^D`.
    pub critical_value: NovikovSeries,
    pub excess_history: Vec<Valuation>,
    /// Valuation of `∂W` at `z` after dropping negligible coefficients.
    pub residual_valuation: Valuation,
    /// Lower bound on `#(L ∩ ψ(L))` for Hamiltonian `ψ` with transverse
    /// intersection.
    pub intersection_lower_bound: u64,
}

impl CriticalCertificate {
    /// `"critical to order D"`: the gradient vanishes modulo `q^D`.
    pub fn statement(&self) -> String {
        format!("critical to order {}", format_rational(&self.truncation))
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Doc {
            lambda: Vec<String>,
            leading_root: Vec<[f64; 2]>,
            z: Vec<Vec<SeriesTerm>>,
            truncation: String,
            method: LiftMethod,
            hessian_condition: Option<f64>,
            leading_jacobian_nondegenerate: bool,
            critical_value: Vec<SeriesTerm>,
            excess_history: Vec<Valuation>,
            residual_valuation: Valuation,
            intersection_lower_bound: u64,
            statement: String,
        }
        let doc = Doc {
            lambda: self.fiber.lambda().iter().map(format_rational).collect(),
            leading_root: self.leading_root.iter().map(|c| [round(c.re), round(c.im)]).collect(),
            z: self.z.iter().map(|s| s.to_wire().into_iter().map(round_term).collect()).collect(),
            truncation: format_rational(&self.truncation),
            method: self.method,
            hessian_condition: self.hessian_condition.is_finite().then(|| round(self.hessian_condition)),
            leading_jacobian_nondegenerate: self.leading_jacobian_nondegenerate,
            critical_value: self.critical_value.to_wire().into_iter().map(round_term).collect(),
            excess_history: self.excess_history.clone(),
            residual_valuation: self.residual_valuation,
            intersection_lower_bound: self.intersection_lower_bound,
            statement: self.statement(),
        };
        serde_json::to_value(doc).expect("certificate serializes")
    }
}

/// Rounds to 10 significant decimals so serialized floats do not expose
/// last-bit noise.
pub(crate) fn round(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let digits = 10 - x.abs().log10().ceil() as i32;
    let factor = 10f64.powi(digits.clamp(-300, 300));
    let r = (x * factor).round() / factor;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_term(t: SeriesTerm) -> SeriesTerm {
    SeriesTerm { exp: t.exp, re: round(t.re), im: round(t.im) }
}

/// Lifts one leading root: Newton first, the graded lift when the leading
/// Hessian is singular or Newton stalls.
pub fn lift_root(w: &Potential, zeta: &[Complex64], d: Rational, allow_graded: bool) -> Result<LiftOutcome> {
    match newton_lift(w, zeta, d) {
        Ok(out) => Ok(out),
        Err(Error::SingularLeadingHessian(_) | Error::NoConvergence(_)) if allow_graded => graded_lift(w, zeta, d),
        Err(e) => Err(e),
    }
}

/// All certificates at one fiber: solve the leading system, lift each root,
/// keep the ones whose residual vanishes to order `D`.
pub fn certify_fiber(
    poly: &MomentPolytope,
    lambda: &[Rational],
    bulk: Option<&BulkParameter>,
    config: &SolverConfig,
    seed: u64,
) -> Result<Vec<CriticalCertificate>> {
    let w = build_potential(poly, lambda, bulk)?;
    let d = config.truncation.unwrap_or_else(|| w.default_truncation());
    let sys = leading_system(&w)?;
    let roots = solve_leading(&sys, seed, config.starts_for(poly.dimension()));
    let mut out: Vec<CriticalCertificate> = Vec::new();
    for zeta in roots {
        let Ok(lifted) = lift_root(&w, &zeta, d, config.allow_graded) else { continue };
        let (residual_valuation, _) = verify_critical(&w, &lifted.z)?;
        if residual_valuation != Valuation::Infinite {
            continue;
        }
        let critical_value = w.eval(&lifted.z)?;
        let cert = CriticalCertificate {
            fiber: w.fiber().clone(),
            leading_root: zeta,
            z: lifted.z,
            truncation: d,
            method: lifted.method,
            hessian_condition: lifted.condition,
            leading_jacobian_nondegenerate: lifted.condition < lift::SINGULAR_CONDITION,
            critical_value,
            excess_history: lifted.excess_history,
            residual_valuation,
            intersection_lower_bound: 1u64 << poly.dimension(),
        };
        if !out.iter().any(|c| same_leading(c, &cert)) {
            out.push(cert);
        }
    }
    out.sort_by_key(|c| leading::root_key(&c.leading_root));
    Ok(out)
}

/// Leading coefficients of the lifted points agree to `1e-6`.
fn same_leading(a: &CriticalCertificate, b: &CriticalCertificate) -> bool {
    a.fiber == b.fiber
        && a.z.iter().zip(&b.z).all(|(x, y)| (x.leading_coefficient() - y.leading_coefficient()).norm() < 1e-6)
}

/// Per-candidate seed so results do not depend on scheduling.
pub fn candidate_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs the full search over all balanced candidates in parallel. The output
/// is sorted by `λ`, then by leading root.
pub fn find_critical_fibers(
    poly: &MomentPolytope,
    bulk: Option<&BulkParameter>,
    config: &SolverConfig,
) -> Result<Vec<CriticalCertificate>> {
    let candidates = tropical_candidates(poly);
    let per_candidate: Vec<Result<Vec<CriticalCertificate>>> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, cand)| match certify_fiber(poly, cand.fiber.lambda(), bulk, config, candidate_seed(config.seed, i)) {
            Err(Error::DegenerateDirection(_)) => Ok(Vec::new()),
            other => other,
        })
        .collect();
    let mut out = Vec::new();
    for r in per_candidate {
        out.extend(r?);
    }
    out.sort_by(|a, b| {
        a.fiber
            .lambda()
            .cmp(b.fiber.lambda())
            .then_with(|| leading::root_key(&a.leading_root).cmp(&leading::root_key(&b.leading_root)))
    });
    Ok(out)
}

/// The distinct fibers among a set of certificates, in order.
pub fn critical_lambdas(certs: &[CriticalCertificate]) -> Vec<Vec<Rational>> {
    let mut out: Vec<Vec<Rational>> = certs.iter().map(|c| c.fiber.lambda().to_vec()).collect();
    out.dedup();
    out
}
