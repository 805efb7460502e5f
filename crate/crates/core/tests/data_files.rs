use std::path::PathBuf;

use num_complex::Complex64;
use tfl_core::rational::{int, rat};
use tfl_core::{examples, parse_polytope, BulkParameter, MomentPolytope};

fn load(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn same_facets(a: &MomentPolytope, b: &MomentPolytope) -> bool {
    a.dimension() == b.dimension() && a.facets() == b.facets()
}

#[test]
fn data_files_match_the_built_in_examples() {
    let cases = [
        ("p1.json", examples::projective_line()),
        ("c2_blowup.json", examples::blowup_of_plane()),
        ("quadric_blowup_0.json", examples::blowup_of_quadric(int(0))),
        ("quadric_blowup_half.json", examples::blowup_of_quadric(rat(1, 2))),
        ("quadric_blowup_minus_half.json", examples::blowup_of_quadric(rat(-1, 2))),
        ("p_1_1_1.json", examples::weighted_projective_plane(1, 1)),
        ("p_1_2_3.json", examples::weighted_projective_plane(2, 3)),
        ("p_1_3_5.json", examples::weighted_projective_plane(3, 5)),
        ("p_1_2.json", examples::weighted_projective_line()),
        ("square.json", examples::square()),
    ];
    for (file, expected) in cases {
        let parsed = parse_polytope(&load(file)).unwrap();
        assert!(same_facets(&parsed, &expected), "{file}");
    }
}

#[test]
fn double_point_bulk_file() {
    let poly = parse_polytope(&load("double_point.json")).unwrap();
    let bulk = BulkParameter::from_json(&load("double_point_bulk.json")).unwrap();
    assert_eq!(bulk.alpha().len(), poly.facets().len());
    let w = tfl_core::build_potential(&poly, &[int(1)], Some(&bulk)).unwrap();
    let m: Vec<Complex64> = w.terms().iter().map(|t| t.multiplier).collect();
    let expected = [1.0, 3.0, -1.0, 1.0];
    for (a, b) in m.iter().zip(expected) {
        assert!((a - Complex64::new(b, 0.0)).norm() < 1e-12);
    }
}
