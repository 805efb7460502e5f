//! The leading-order complex system of `∂W = 0` and its multistart solver.

use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::polytope::LatticeVector;
use crate::potential::Potential;
use crate::rational::Rational;

/// Converged roots must have residual below this.
pub const ROOT_RESIDUAL: f64 = 1e-10;
/// Roots closer than this (max-norm) are identified.
pub const ROOT_DEDUP: f64 = 1e-6;
const MODULUS_RANGE: (f64, f64) = (1e-6, 1e6);

#[derive(Clone, Debug, PartialEq)]
pub struct LeadingMonomial {
    pub facet_index: usize,
    /// `v_ij · e^{α_i,0}`.
    pub coefficient: Complex64,
    pub exponent: LatticeVector,
}

/// `Σ_{i∈S_j} v_ij e^{α_i,0} ζ^{v_i} = 0` for one direction `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeadingEquation {
    pub direction: usize,
    /// Minimal valuation among terms involving `β_j`; `None` when no term does.
    pub level: Option<Rational>,
    pub monomials: Vec<LeadingMonomial>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeadingSystem {
    pub dimension: usize,
    pub equations: Vec<LeadingEquation>,
}

pub fn leading_system(w: &Potential) -> Result<LeadingSystem> {
    let levels = w.leading_levels();
    let mut equations = Vec::with_capacity(w.dimension());
    for (j, level) in levels.into_iter().enumerate() {
        let monomials: Vec<LeadingMonomial> = w
            .terms()
            .iter()
            .filter(|t| t.exponent.0[j] != 0 && Some(t.valuation) == level)
            .map(|t| LeadingMonomial {
                facet_index: t.facet_index,
                coefficient: t.multiplier * t.exponent.0[j] as f64,
                exponent: t.exponent.clone(),
            })
            .collect();
        if monomials.len() == 1 {
            return Err(Error::DegenerateDirection(j));
        }
        equations.push(LeadingEquation { direction: j, level, monomials });
    }
    Ok(LeadingSystem { dimension: w.dimension(), equations })
}

fn monomial_value(v: &LatticeVector, zeta: &[Complex64]) -> Complex64 {
    v.0.iter().zip(zeta).map(|(&k, z)| z.powi(k as i32)).product()
}

impl LeadingSystem {
    pub fn residual(&self, zeta: &[Complex64]) -> Vec<Complex64> {
        self.equations
            .iter()
            .map(|eq| eq.monomials.iter().map(|m| m.coefficient * monomial_value(&m.exponent, zeta)).sum())
            .collect()
    }

    /// Derivatives with respect to `β_k = log ζ_k`. At a root this is the
    /// leading Hessian of `W`.
    pub fn jacobian(&self, zeta: &[Complex64]) -> CMatrix {
        self.equations
            .iter()
            .map(|eq| {
                (0..self.dimension)
                    .map(|k| {
                        eq.monomials
                            .iter()
                            .map(|m| m.coefficient * m.exponent.0[k] as f64 * monomial_value(&m.exponent, zeta))
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Damped Newton in `β = log ζ` from `start`. Returns the final point when
    /// it converged inside the admissible modulus range.
    pub fn newton_from(&self, start: &[Complex64]) -> Option<Vec<Complex64>> {
        let mut beta: Vec<Complex64> = start.iter().map(|z| z.ln()).collect();
        let res_norm = |b: &[Complex64]| {
            let zeta: Vec<Complex64> = b.iter().map(|x| x.exp()).collect();
            linalg::max_norm(&self.residual(&zeta))
        };
        let mut current = res_norm(&beta);
        for _ in 0..200 {
            if current < 1e-16 {
                break;
            }
            let zeta: Vec<Complex64> = beta.iter().map(|x| x.exp()).collect();
            let f = self.residual(&zeta);
            let j = self.jacobian(&zeta);
            let neg: Vec<Complex64> = f.iter().map(|x| -x).collect();
            let (step, _) = linalg::least_squares(&j, &neg);
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-4 {
                let trial: Vec<Complex64> = beta.iter().zip(&step).map(|(b, s)| b + s * t).collect();
                if trial.iter().any(|b| b.re.abs() > 30.0) {
                    t *= 0.5;
                    continue;
                }
                let r = res_norm(&trial);
                if r < current {
                    beta = trial;
                    current = r;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let mut zeta: Vec<Complex64> = beta.iter().map(|x| x.exp()).collect();
        if current < ROOT_RESIDUAL {
            if let Some(polished) = self.deflate(&zeta) {
                zeta = polished;
            }
        }
        let in_range = zeta.iter().all(|z| (MODULUS_RANGE.0..=MODULUS_RANGE.1).contains(&z.norm()));
        (current < ROOT_RESIDUAL && in_range).then_some(zeta)
    }
}

impl LeadingSystem {
    /// Refines a root with a near-singular Jacobian by Gauss–Newton on the
    /// deflated system `F(β) = 0, J(β)v = 0, ⟨u, v⟩ = 1`, which is regular at
    /// a root whose Jacobian has a one-dimensional kernel. Plain Newton only
    /// reaches such roots to about the square root of machine precision.
    fn deflate(&self, zeta: &[Complex64]) -> Option<Vec<Complex64>> {
        let n = self.dimension;
        let jac = self.jacobian(zeta);
        let lo = linalg::singular_values(&jac).last().copied()?;
        // size of the individual contributions, which cancel at a singular root
        let scale = self
            .equations
            .iter()
            .flat_map(|eq| eq.monomials.iter())
            .map(|m| (m.coefficient * monomial_value(&m.exponent, zeta)).norm() * m.exponent.norm_inf() as f64)
            .fold(0.0, f64::max);
        if scale == 0.0 || lo > 1e-4 * scale {
            return None;
        }
        let mut v = linalg::kernel(&jac, n, 1e-4).into_iter().next()?;
        let u: Vec<Complex64> = v.clone();
        let mut beta: Vec<Complex64> = zeta.iter().map(|z| z.ln()).collect();
        let system = |beta: &[Complex64], v: &[Complex64]| -> (Vec<Complex64>, CMatrix) {
            let z: Vec<Complex64> = beta.iter().map(|b| b.exp()).collect();
            let mut values = self.residual(&z);
            let jac = self.jacobian(&z);
            let mut rows: CMatrix =
                jac.iter().map(|row| row.iter().copied().chain(vec![Complex64::zero(); n]).collect()).collect();
            for eq in &self.equations {
                let mut value = Complex64::zero();
                let mut row = vec![Complex64::zero(); 2 * n];
                for m in &eq.monomials {
                    let mono = m.coefficient * monomial_value(&m.exponent, &z);
                    let ev: Complex64 = m.exponent.0.iter().zip(v).map(|(&k, vk)| vk * k as f64).sum();
                    value += mono * ev;
                    for l in 0..n {
                        row[l] += mono * ev * m.exponent.0[l] as f64;
                        row[n + l] += mono * m.exponent.0[l] as f64;
                    }
                }
                values.push(value);
                rows.push(row);
            }
            values.push(u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>() - 1.0);
            rows.push((0..2 * n).map(|l| if l < n { Complex64::zero() } else { u[l - n].conj() }).collect());
            (values, rows)
        };
        for _ in 0..30 {
            let (values, rows) = system(&beta, &v);
            if linalg::max_norm(&values) < 1e-15 {
                break;
            }
            let neg: Vec<Complex64> = values.iter().map(|x| -x).collect();
            let (step, _) = linalg::least_squares(&rows, &neg);
            for l in 0..n {
                beta[l] += step[l];
                v[l] += step[n + l];
            }
        }
        let polished: Vec<Complex64> = beta.iter().map(|b| b.exp()).collect();
        let (values, _) = system(&beta, &v);
        let close = distance(&polished, zeta) < 1e-4;
        (close && linalg::max_norm(&values) < ROOT_RESIDUAL).then_some(polished)
    }
}

/// Multistart damped Newton. Starting points have log-uniform modulus in
/// `[1/4, 4]` and uniform phase, drawn from a ChaCha stream seeded by `seed`.
/// Roots are deduplicated and sorted.
pub fn solve_leading(sys: &LeadingSystem, seed: u64, starts: usize) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 4.0f64.ln();
    let mut roots: Vec<Vec<Complex64>> = Vec::new();
    for _ in 0..starts {
        let start: Vec<Complex64> = (0..sys.dimension)
            .map(|_| {
                let r = rng.random_range(-span..=span).exp();
                let th = rng.random_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(r, th)
            })
            .collect();
        if let Some(root) = sys.newton_from(&start) {
            if !roots.iter().any(|r| distance(r, &root) < ROOT_DEDUP) {
                roots.push(root);
            }
        }
    }
    roots.sort_by_key(|r| root_key(r));
    roots
}

fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Ordering key rounded at the deduplication scale.
pub fn root_key(z: &[Complex64]) -> Vec<(i64, i64)> {
    z.iter().map(|c| ((c.re / ROOT_DEDUP).round() as i64, (c.im / ROOT_DEDUP).round() as i64)).collect()
}

/// `Σ_{i∈S_j} v_ij v_ik e^{α_i,0} ζ^{v_i}` over the minimal-valuation terms
/// of each direction.
pub fn leading_hessian(w: &Potential, zeta: &[Complex64]) -> CMatrix {
    let levels = w.leading_levels();
    let n = w.dimension();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    w.terms()
                        .iter()
                        .filter(|t| t.exponent.0[j] != 0 && Some(t.valuation) == levels[j])
                        .map(|t| {
                            t.multiplier
                                * (t.exponent.0[j] * t.exponent.0[k]) as f64
                                * monomial_value(&t.exponent, zeta)
                        })
                        .fold(Complex64::zero(), |a, b| a + b)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::potential::build_potential;
    use crate::rational::{int, rat};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64]) -> bool {
        distance(a, b) < 1e-9
    }

    #[test]
    fn projective_line_system() {
        let w = build_potential(&examples::projective_line(), &[rat(1, 2)], None).unwrap();
        let sys = leading_system(&w).unwrap();
        assert_eq!(sys.equations[0].monomials.len(), 2);
        assert_eq!(sys.equations[0].monomials[0].coefficient, c(1.0, 0.0));
        assert_eq!(sys.equations[0].monomials[1].coefficient, c(-1.0, 0.0));
        let roots = solve_leading(&sys, 0, 64);
        assert_eq!(roots.len(), 2);
        assert!(close(&roots[0], &[c(-1.0, 0.0)]));
        assert!(close(&roots[1], &[c(1.0, 0.0)]));
    }

    #[test]
    fn plane_blowup_system() {
        let w = build_potential(&examples::blowup_of_plane(), &[int(1), int(1)], None).unwrap();
        let sys = leading_system(&w).unwrap();
        // ζ₁ + ζ₁ζ₂ = 0, ζ₂ + ζ₁ζ₂ = 0
        let facets: Vec<Vec<usize>> =
            sys.equations.iter().map(|e| e.monomials.iter().map(|m| m.facet_index).collect()).collect();
        assert_eq!(facets, vec![vec![0, 2], vec![1, 2]]);
        let roots = solve_leading(&sys, 0, 64 * 9);
        assert_eq!(roots.len(), 1);
        assert!(close(&roots[0], &[c(-1.0, 0.0), c(-1.0, 0.0)]));
    }

    #[test]
    fn weighted_plane_system() {
        let (n1, n2) = (3i64, 5i64);
        let p = examples::weighted_projective_plane(n1, n2);
        let w = build_potential(&p, &[rat(5, 3), rat(5, 3)], None).unwrap();
        let sys = leading_system(&w).unwrap();
        // ζ₁ − n₂ ζ^{(−n₂,−n₁)} = 0 and ζ₂ − n₁ ζ^{(−n₂,−n₁)} = 0
        for (eq, (own, weight)) in sys.equations.iter().zip([(vec![1, 0], n2), (vec![0, 1], n1)]) {
            assert_eq!(eq.monomials.len(), 2);
            assert_eq!(eq.monomials[0].exponent.0, own);
            assert_eq!(eq.monomials[0].coefficient, c(1.0, 0.0));
            assert_eq!(eq.monomials[1].exponent.0, vec![-n2, -n1]);
            assert_eq!(eq.monomials[1].coefficient, c(-(weight as f64), 0.0));
        }
        let roots = solve_leading(&sys, 0, 64 * 9);
        assert!(!roots.is_empty());
        // binomial reduction: ζ₁⁶ζ₂³ = 5, ζ₁⁵ζ₂⁴ = 3, which has |det [[6,3],[5,4]]| = 9 roots
        assert!(roots.len() <= 9);
        for z in &roots {
            assert!((z[0].powi(6) * z[1].powi(3) - c(5.0, 0.0)).norm() < 1e-8);
            assert!((z[0].powi(5) * z[1].powi(4) - c(3.0, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn unique_minimum_is_degenerate() {
        let w = build_potential(&examples::projective_line(), &[rat(1, 3)], None).unwrap();
        assert_eq!(leading_system(&w), Err(Error::DegenerateDirection(0)));
    }

    #[test]
    fn seeds_are_reproducible() {
        let w = build_potential(&examples::weighted_projective_plane(2, 3), &[int(1), int(1)], None).unwrap();
        let sys = leading_system(&w).unwrap();
        assert_eq!(solve_leading(&sys, 7, 100), solve_leading(&sys, 7, 100));
    }

    #[test]
    fn quadric_corner_hessian_is_the_swap() {
        let p = examples::blowup_of_quadric(rat(1, 2));
        let w = build_potential(&p, &[rat(1, 2), rat(1, 2)], None).unwrap();
        let h = leading_hessian(&w, &[c(-1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(h, vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]);
    }
}
