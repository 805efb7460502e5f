use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tfl_core::disks::{
    blaschke_eval, boundary_class, disk_area, maslov_index, potential_from_disks, BlaschkeData, DiskClass,
};
use tfl_core::polytope::apply_matrix;
use tfl_core::probes::{displaceable_by_probe, probe_through};
use tfl_core::rational::{int, rat, to_f64};
use tfl_core::solver::{certify_fiber, critical_lambdas, newton_lift};
use tfl_core::{
    build_potential, examples, find_critical_fibers, BulkParameter, LatticeVector, MomentPolytope, NovikovSeries,
    Rational, SolverConfig, Valuation,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn five_examples() -> Vec<MomentPolytope> {
    vec![
        examples::projective_line(),
        examples::blowup_of_plane(),
        examples::weighted_projective_plane(3, 5),
        examples::weighted_projective_line(),
        examples::blowup_of_quadric(rat(1, 2)),
    ]
}

/// A random interior point with denominators up to 12, by rejection from a
/// box around the polytope.
fn random_interior(poly: &MomentPolytope, rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let (lo, hi) =
        poly.bounding_box().unwrap_or_else(|| (vec![int(0); poly.dimension()], vec![int(5); poly.dimension()]));
    loop {
        let den = rng.random_range(1..=12i128);
        let p: Vec<Rational> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| {
                let (a, b) = ((a * int(den)).floor().to_integer(), (b * int(den)).ceil().to_integer());
                rat(rng.random_range(a..=b), den)
            })
            .collect();
        if poly.is_interior(&p) {
            return p;
        }
    }
}

#[test]
fn disks_rebuild_the_potential_on_random_fibers() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for poly in five_examples() {
        for k in 0..50 {
            let lambda = random_interior(&poly, &mut rng);
            let bulk = (k % 2 == 1).then(|| {
                let alpha: Vec<Complex64> = (0..poly.facets().len())
                    .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-3.0..3.0)))
                    .collect();
                BulkParameter::constants(&alpha)
            });
            let from_disks = potential_from_disks(&poly, &lambda, bulk.as_ref()).unwrap();
            let direct = build_potential(&poly, &lambda, bulk.as_ref()).unwrap();
            assert_eq!(from_disks, direct, "{lambda:?}");
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let polys = five_examples();
    for k in 0..100 {
        let poly = &polys[k % polys.len()];
        let lambda = random_interior(poly, &mut rng);
        let w = build_potential(poly, &lambda, None).unwrap();
        let n = poly.dimension();
        let z0: Vec<Complex64> = (0..n)
            .map(|_| Complex64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        let q0 = rng.random_range(0.1..0.9);
        let (_, g) = w.specialize_q(&z0, q0).unwrap();
        let h = 1e-5;
        for j in 0..n {
            let (mut up, mut dn) = (z0.clone(), z0.clone());
            up[j] *= f64::exp(h);
            dn[j] *= f64::exp(-h);
            let fd = (w.specialize_q(&up, q0).unwrap().0 - w.specialize_q(&dn, q0).unwrap().0) / (2.0 * h);
            let scale = w.gradient_scale(&z0, q0)[j].max(1e-300);
            assert!((fd - g[j]).norm() / scale < 1e-5, "case {k}: fd {fd} vs {}", g[j]);
        }
    }
}

/// Critical fibers of examples 1–4 with a small positive-valuation bulk so
/// the leading root is not already exact.
fn doubling_cases() -> Vec<(MomentPolytope, Vec<Rational>)> {
    vec![
        (examples::projective_line(), vec![rat(1, 2)]),
        (examples::blowup_of_plane(), vec![int(1), int(1)]),
        (examples::weighted_projective_plane(2, 3), vec![int(1), int(1)]),
        (examples::weighted_projective_line(), vec![rat(2, 3)]),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn newton_excess_doubles(
        which in 0usize..4,
        e in prop::sample::select(vec![rat(1, 4), rat(1, 3), rat(1, 2), int(1)]),
        coeffs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
    ) {
        let (poly, lambda) = doubling_cases().swap_remove(which);
        let d = int(4);
        let alpha: Vec<NovikovSeries> = (0..poly.facets().len())
            .map(|i| {
                let (re, im) = coeffs[i % coeffs.len()];
                NovikovSeries::monomial(c(re, im), e, d)
            })
            .collect();
        let bulk = BulkParameter::new(alpha);
        let w = build_potential(&poly, &lambda, Some(&bulk)).unwrap();
        let cfg = SolverConfig { truncation: Some(d), ..SolverConfig::default() };
        let certs = certify_fiber(&poly, &lambda, Some(&bulk), &cfg, 1).unwrap();
        prop_assert!(!certs.is_empty());
        for cert in &certs {
            let out = newton_lift(&w, &cert.leading_root, d).unwrap();
            let finite: Vec<Rational> = out.excess_history.iter().filter_map(|v| v.finite()).collect();
            prop_assert!(!finite.is_empty(), "bulk term should perturb the leading root");
            for pair in finite.windows(2) {
                prop_assert!(pair[1] >= pair[0] * int(2), "history {:?}", out.excess_history);
            }
            prop_assert_eq!(cert.residual_valuation, Valuation::Infinite);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn blaschke_boundary_lies_on_the_torus(
        which in 0usize..5,
        seed in any::<u64>(),
        degrees in prop::collection::vec(0usize..4, 5),
    ) {
        let poly = &five_examples()[which];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambda = random_interior(poly, &mut rng);
        let n = poly.facets().len();
        let zeros: Vec<Vec<Complex64>> = (0..n)
            .map(|j| {
                (0..degrees[j])
                    .map(|_| Complex64::from_polar(rng.random_range(0.0..0.95), rng.random_range(0.0..std::f64::consts::TAU)))
                    .collect()
            })
            .collect();
        let phases: Vec<Complex64> =
            (0..n).map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))).collect();
        let data = BlaschkeData::new(poly, &lambda, zeros, phases).unwrap();
        let values = poly.facet_values(&lambda);
        for k in 0..16 {
            let w = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 16.0);
            for (u, l) in blaschke_eval(&data, w).iter().zip(&values) {
                prop_assert!((u.norm() - (to_f64(l) / std::f64::consts::PI).sqrt()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn disk_invariants_are_additive(
        which in 0usize..5,
        a in prop::collection::vec(0u32..5, 5),
        b in prop::collection::vec(0u32..5, 5),
        seed in any::<u64>(),
    ) {
        let poly = &five_examples()[which];
        let n = poly.facets().len();
        let (da, db) = (DiskClass::new(a[..n].to_vec()), DiskClass::new(b[..n].to_vec()));
        let sum = da.add(&db);
        let lambda = random_interior(poly, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(maslov_index(&sum), maslov_index(&da) + maslov_index(&db));
        prop_assert_eq!(
            disk_area(&sum, poly, &lambda),
            disk_area(&da, poly, &lambda) + disk_area(&db, poly, &lambda)
        );
        prop_assert_eq!(boundary_class(&sum, poly), boundary_class(&da, poly).add(&boundary_class(&db, poly)));
    }
}

fn unimodular() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (-2i64..=2, -2i64..=2, any::<bool>()).prop_map(|(a, b, swap)| {
        let m = vec![vec![1 + a * b, a], vec![b, 1]];
        if swap {
            vec![m[1].clone(), m[0].clone()]
        } else {
            m
        }
    })
}

fn inverse_2x2(u: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    vec![vec![u[1][1] * det, -u[0][1] * det], vec![-u[1][0] * det, u[0][0] * det]]
}

fn sorted_values(certs: &[tfl_core::CriticalCertificate]) -> Vec<(i64, i64)> {
    let mut v: Vec<(i64, i64)> = certs
        .iter()
        .map(|c| {
            let x = c.critical_value.leading_coefficient();
            ((x.re * 1e6).round() as i64, (x.im * 1e6).round() as i64)
        })
        .collect();
    v.sort();
    v
}

fn two_dim_examples() -> Vec<MomentPolytope> {
    vec![examples::blowup_of_plane(), examples::weighted_projective_plane(1, 1)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn certificates_are_unimodular_equivariant(which in 0usize..2, u in unimodular()) {
        let p = &two_dim_examples()[which];
        let q = p.transformed(&u).unwrap();
        let cfg = SolverConfig::default();
        let a = find_critical_fibers(p, None, &cfg).unwrap();
        let b = find_critical_fibers(&q, None, &cfg).unwrap();
        let mut mapped: Vec<Vec<Rational>> = critical_lambdas(&a).iter().map(|l| apply_matrix(&u, l)).collect();
        mapped.sort();
        prop_assert_eq!(critical_lambdas(&b), mapped);
        prop_assert_eq!(sorted_values(&a), sorted_values(&b));
    }

    #[test]
    fn certificates_are_translation_and_scaling_equivariant(
        which in 0usize..3,
        tx in -6i128..6, ty in -6i128..6,
        s in prop::sample::select(vec![rat(1, 2), rat(2, 3), int(2), int(3)]),
    ) {
        let p = match which {
            0 => examples::projective_line(),
            w => two_dim_examples()[w - 1].clone(),
        };
        let tau: Vec<Rational> = [rat(tx, 4), rat(ty, 3)][..p.dimension()].to_vec();
        let cfg = SolverConfig::default();
        let base = find_critical_fibers(&p, None, &cfg).unwrap();

        let moved = find_critical_fibers(&p.translated(&tau).unwrap(), None, &cfg).unwrap();
        let shifted: Vec<Vec<Rational>> =
            critical_lambdas(&base).iter().map(|l| l.iter().zip(&tau).map(|(a, b)| a + b).collect()).collect();
        prop_assert_eq!(critical_lambdas(&moved), shifted);
        prop_assert_eq!(sorted_values(&base), sorted_values(&moved));

        let scaled = find_critical_fibers(&p.scaled(s).unwrap(), None, &cfg).unwrap();
        let stretched: Vec<Vec<Rational>> =
            critical_lambdas(&base).iter().map(|l| l.iter().map(|a| a * s).collect()).collect();
        prop_assert_eq!(critical_lambdas(&scaled), stretched);
        prop_assert_eq!(base.len(), scaled.len());
        for (x, y) in base.iter().zip(&scaled) {
            prop_assert_eq!(y.truncation, x.truncation * s);
            prop_assert_eq!(x.z[0].val(), Valuation::Finite(int(0)));
            prop_assert!((x.critical_value.leading_coefficient() - y.critical_value.leading_coefficient()).norm() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probes_are_unimodular_equivariant(which in 0usize..2, u in unimodular(), seed in any::<u64>()) {
        let p = &two_dim_examples()[which];
        let q = p.transformed(&u).unwrap();
        let lambda = random_interior(p, &mut ChaCha8Rng::seed_from_u64(seed));
        let image = apply_matrix(&u, &lambda);
        for f in 0..p.facets().len() {
            for a in -3i64..=3 {
                for b in -3i64..=3 {
                    let alpha = LatticeVector::new(vec![a, b]);
                    let mapped = LatticeVector::new(apply_matrix(&u, &[int(a as i128), int(b as i128)])
                        .iter().map(|x| x.to_integer() as i64).collect());
                    let before = probe_through(p, &lambda, f, &alpha);
                    let after = probe_through(&q, &image, f, &mapped);
                    match (before, after) {
                        (Ok(Some(x)), Ok(Some(y))) => {
                            prop_assert_eq!(x.hit_parameter, y.hit_parameter);
                            prop_assert_eq!(apply_matrix(&u, &x.base), y.base);
                        }
                        (Ok(None), Ok(None)) | (Err(_), Err(_)) => {}
                        (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
                    }
                }
            }
        }
        // the scan bound grows by at most the operator norm of U⁻¹
        let norm = inverse_2x2(&u).iter().map(|r| r.iter().map(|x| x.abs()).sum::<i64>()).max().unwrap();
        if let Some(pr) = displaceable_by_probe(&q, &image, 2) {
            prop_assert!(pr.validate(&q));
            prop_assert!(displaceable_by_probe(p, &lambda, 2 * norm).is_some());
        }
    }

    #[test]
    fn probes_are_translation_and_scaling_equivariant(
        which in 0usize..3,
        seed in any::<u64>(),
        tx in -6i128..6, ty in -6i128..6,
        s in prop::sample::select(vec![rat(1, 2), int(2), int(5)]),
    ) {
        let p = match which {
            0 => examples::projective_line(),
            w => two_dim_examples()[w - 1].clone(),
        };
        let lambda = random_interior(&p, &mut ChaCha8Rng::seed_from_u64(seed));
        let tau: Vec<Rational> = [rat(tx, 4), rat(ty, 3)][..p.dimension()].to_vec();
        let shifted: Vec<Rational> = lambda.iter().zip(&tau).map(|(a, b)| a + b).collect();
        let stretched: Vec<Rational> = lambda.iter().map(|a| a * s).collect();
        let here = displaceable_by_probe(&p, &lambda, 2);
        let moved = displaceable_by_probe(&p.translated(&tau).unwrap(), &shifted, 2);
        let grown = displaceable_by_probe(&p.scaled(s).unwrap(), &stretched, 2);
        prop_assert_eq!(here.as_ref().map(|x| (x.facet_index, x.direction.clone(), x.hit_parameter)),
            moved.as_ref().map(|x| (x.facet_index, x.direction.clone(), x.hit_parameter)));
        prop_assert_eq!(here.as_ref().map(|x| (x.facet_index, x.direction.clone(), x.hit_parameter * s)),
            grown.as_ref().map(|x| (x.facet_index, x.direction.clone(), x.hit_parameter)));
    }

    #[test]
    fn probes_are_valid_and_monotone_in_the_bound(which in 0usize..5, seed in any::<u64>()) {
        let p = &five_examples()[which];
        let lambda = random_interior(p, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut seen = false;
        for bound in 1..=4 {
            let found = displaceable_by_probe(p, &lambda, bound);
            if let Some(pr) = &found {
                prop_assert!(pr.validate(p));
                prop_assert!(pr.hit_parameter > int(0));
                prop_assert!(pr.exit_parameter.is_none_or(|t| pr.hit_parameter * int(2) < t));
            }
            prop_assert!(!seen || found.is_some(), "probe lost when the bound grew");
            seen |= found.is_some();
        }
    }
}
