//! Valuation balancing: fibers where, in every direction, the smallest
//! valuation among the terms of `∂W/∂β_j` is attained at least twice.

use num_traits::{Signed, Zero};
use std::collections::BTreeMap;

use crate::polytope::{Fiber, MomentPolytope};
use crate::rational::{int, rat, solve_affine, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct TropicalCandidate {
    pub fiber: Fiber,
    /// The facet pair `(i, i')` imposed as `l_i = l_i'` for each direction
    /// that has one.
    pub equalities: Vec<(usize, usize)>,
    /// `S_j`: facets with `v_ij ≠ 0` attaining the minimal valuation.
    pub per_direction_minima: Vec<Vec<usize>>,
    /// Sampled from a positive-dimensional family of solutions.
    pub non_isolated: bool,
}

/// Per direction, the facets with nonzero `j`-th normal entry that attain the
/// minimum of `l_i(λ)` among them.
pub fn direction_minima(poly: &MomentPolytope, lambda: &[Rational]) -> Vec<Vec<usize>> {
    let values = poly.facet_values(lambda);
    (0..poly.dimension())
        .map(|j| {
            let active: Vec<usize> = (0..poly.facets().len()).filter(|&i| poly.facets()[i].normal.0[j] != 0).collect();
            let Some(min) = active.iter().map(|&i| values[i]).min() else { return Vec::new() };
            active.into_iter().filter(|&i| values[i] == min).collect()
        })
        .collect()
}

/// Balancing holds when no direction has a uniquely attained minimum.
/// Directions on which no facet depends impose nothing.
pub fn is_balanced(minima: &[Vec<usize>]) -> bool {
    minima.iter().all(|s| s.len() != 1)
}

/// Enumerates candidate fibers by imposing one equality `l_i = l_i'` per
/// direction, over all choices of pairs among the facets that involve that
/// direction. Results are sorted by `λ`.
pub fn tropical_candidates(poly: &MomentPolytope) -> Vec<TropicalCandidate> {
    let n = poly.dimension();
    let facets = poly.facets();
    let pairs_per_dir: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|j| {
            let active: Vec<usize> = (0..facets.len()).filter(|&i| facets[i].normal.0[j] != 0).collect();
            let mut pairs = Vec::new();
            for (a, &i) in active.iter().enumerate() {
                for &k in &active[a + 1..] {
                    pairs.push((i, k));
                }
            }
            pairs
        })
        .collect();
    // directions no facet depends on contribute no equation
    let constrained: Vec<usize> = (0..n).filter(|&j| !pairs_per_dir[j].is_empty()).collect();

    let mut found: BTreeMap<Vec<Rational>, TropicalCandidate> = BTreeMap::new();
    let mut choice = vec![0usize; constrained.len()];
    loop {
        let equalities: Vec<(usize, usize)> =
            constrained.iter().zip(&choice).map(|(&j, &c)| pairs_per_dir[j][c]).collect();
        let a: Vec<Vec<Rational>> = equalities
            .iter()
            .map(|&(i, k)| (0..n).map(|c| int((facets[i].normal.0[c] - facets[k].normal.0[c]) as i128)).collect())
            .collect();
        let b: Vec<Rational> = equalities.iter().map(|&(i, k)| facets[i].offset - facets[k].offset).collect();
        if let Some((particular, basis)) = solve_affine(&a, &b, n) {
            let non_isolated = !basis.is_empty();
            for point in family_samples(&particular, &basis) {
                if !poly.is_interior(&point) {
                    continue;
                }
                let minima = direction_minima(poly, &point);
                if !is_balanced(&minima) {
                    continue;
                }
                let fiber = Fiber::new(poly, point.clone()).expect("interior checked");
                found.entry(point).or_insert(TropicalCandidate {
                    fiber,
                    equalities: equalities.clone(),
                    per_direction_minima: minima,
                    non_isolated,
                });
                if non_isolated {
                    break;
                }
            }
        }
        // odometer over pair choices
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < pairs_per_dir[constrained[k]].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            break;
        }
    }
    found.into_values().collect()
}

/// The point itself for an isolated solution; otherwise a deterministic set
/// of samples `p + Σ t_k b_k` with `t_k ∈ {0, ±1/2, ±1, …, ±4}`, nearest
/// first.
fn family_samples(particular: &[Rational], basis: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    if basis.is_empty() {
        return vec![particular.to_vec()];
    }
    let steps: Vec<Rational> = (-8..=8).map(|k| rat(k, 2)).collect();
    let mut params: Vec<Vec<Rational>> = vec![Vec::new()];
    for _ in basis {
        params = params
            .into_iter()
            .flat_map(|p| {
                steps.iter().map(move |s| {
                    let mut q = p.clone();
                    q.push(*s);
                    q
                })
            })
            .collect();
    }
    params.sort_by_key(|p| (p.iter().map(|x| x.abs()).fold(Rational::zero(), |a, b| a + b), p.clone()));
    params
        .into_iter()
        .map(|t| {
            let mut point = particular.to_vec();
            for (tk, b) in t.iter().zip(basis) {
                for (x, bx) in point.iter_mut().zip(b) {
                    *x += tk * bx;
                }
            }
            point
        })
        .collect()
}
