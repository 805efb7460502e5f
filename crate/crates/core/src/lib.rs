//! Toric moment fibers over the Novikov ring.
//!
//! Given a moment polytope by its facet data, this crate builds the gauged
//! (Hori–Vafa) potential `W(β) = Σ_i e^{α_i + ⟨v_i, β⟩} q^{l_i(λ)}`, finds
//! fibers where it has critical points over truncated `Λ₀` (these fibers are
//! non-displaceable), displaces other fibers with McDuff probes, and rebuilds
//! the potential independently from the classification of Maslov index two
//! disks.

pub mod disks;
pub mod error;
pub mod examples;
mod linalg;
pub mod novikov;
pub mod polytope;
pub mod potential;
pub mod probes;
pub mod rational;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use novikov::{monomial_eval, NovikovSeries, Valuation};
pub use polytope::{parse_polytope, primitive_normal, Facet, Fiber, LatticeVector, MomentPolytope};
pub use potential::{build_potential, BulkParameter, Potential, PotentialTerm};
pub use rational::Rational;
pub use solver::{find_critical_fibers, CriticalCertificate, LiftMethod, SolverConfig};
