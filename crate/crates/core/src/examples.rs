//! The worked example polytopes, in the facet presentations used throughout.

use crate::polytope::{Facet, MomentPolytope};
use crate::rational::{int, Rational};

fn build(dimension: usize, facets: Vec<(Vec<i64>, Rational)>) -> MomentPolytope {
    let facets = facets.into_iter().map(|(v, c)| Facet::new(v, c)).collect();
    MomentPolytope::new(dimension, facets, None).expect("example polytope is valid")
}

/// ℙ¹ with moment polytope `[0, 1]`.
pub fn projective_line() -> MomentPolytope {
    build(1, vec![(vec![1], int(0)), (vec![-1], int(-1))])
}

/// Blow-up of ℂ² at the origin: `{λ ≥ 0, λ₁ + λ₂ ≥ 1}`.
pub fn blowup_of_plane() -> MomentPolytope {
    build(2, vec![(vec![1, 0], int(0)), (vec![0, 1], int(0)), (vec![1, 1], int(1))])
}

/// Toric blow-up of ℙ¹×ℙ¹: `[-1, 1]² ∩ {λ₁ + λ₂ ≤ 1 + α}` for `α ∈ (-1, 1)`.
pub fn blowup_of_quadric(alpha: Rational) -> MomentPolytope {
    build(
        2,
        vec![
            (vec![1, 0], int(-1)),
            (vec![0, 1], int(-1)),
            (vec![-1, 0], int(-1)),
            (vec![0, -1], int(-1)),
            (vec![-1, -1], -(int(1) + alpha)),
        ],
    )
}

/// ℙ¹×ℙ¹ as the square `[-1, 1]²` with four facets.
pub fn square() -> MomentPolytope {
    build(2, vec![(vec![1, 0], int(-1)), (vec![0, 1], int(-1)), (vec![-1, 0], int(-1)), (vec![0, -1], int(-1))])
}

/// Weighted projective plane ℙ(1, n₁, n₂): the triangle with vertices
/// `(0,0), (n₁,0), (0,n₂)`.
pub fn weighted_projective_plane(n1: i64, n2: i64) -> MomentPolytope {
    build(2, vec![(vec![1, 0], int(0)), (vec![0, 1], int(0)), (vec![-n2, -n1], int(-(n1 as i128) * n2 as i128))])
}

/// Weighted projective line ℙ(1, 2): `[0, 1]` with the orbifold point over 1.
pub fn weighted_projective_line() -> MomentPolytope {
    build(1, vec![(vec![1], int(0)), (vec![-2], int(-2))])
}
