use gs_transfer::diagnostics::{compare_fields, weighted_norm};
use gs_transfer::fixtures;
use gs_transfer::spaces::build_space;
use gs_transfer::{Field, Point2, SpaceKind};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = f64> {
    0.01f64..0.99
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cg1_reproduces_affine(n in 1usize..6, a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, s in unit(), t in unit()) {
        let m = fixtures::structured(n);
        let f = build_space(&m, SpaceKind::CG1).interpolate(|p| [a + b * p.r + c * p.z, 0.0]);
        let x = Point2::new(1.0 + s, t);
        let v = f.eval_point(x);
        prop_assert!((v.scalar() - (a + b * x.r + c * x.z)).abs() < 1e-12);
        prop_assert!((v.grad[0] - b).abs() < 1e-11 && (v.grad[1] - c).abs() < 1e-11);
    }

    #[test]
    fn rt1_reproduces_its_local_space(n in 1usize..6, a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, s in unit(), t in unit()) {
        let m = fixtures::structured(n);
        let f = build_space(&m, SpaceKind::RT1).interpolate(|p| [a + b * p.r, c + b * p.z]);
        let x = Point2::new(1.0 + s, t);
        let v = f.eval_point(x);
        prop_assert!((v.val[0] - (a + b * x.r)).abs() < 1e-12);
        prop_assert!((v.val[1] - (c + b * x.z)).abs() < 1e-12);
        prop_assert!((v.div - 2.0 * b).abs() < 1e-11);
    }

    #[test]
    fn n1_reproduces_its_local_space(n in 1usize..6, a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, s in unit(), t in unit()) {
        let m = fixtures::structured(n);
        let f = build_space(&m, SpaceKind::N1).interpolate(|p| [a - b * p.z, c + b * p.r]);
        let x = Point2::new(1.0 + s, t);
        let v = f.eval_point(x);
        prop_assert!((v.val[0] - (a - b * x.z)).abs() < 1e-12);
        prop_assert!((v.val[1] - (c + b * x.r)).abs() < 1e-12);
        prop_assert!((v.rot - 2.0 * b).abs() < 1e-11);
    }

    #[test]
    fn weighted_norm_is_a_norm(coeffs in prop::collection::vec(-5.0f64..5.0, 25), other in prop::collection::vec(-5.0f64..5.0, 25), k in -4.0f64..4.0) {
        let m = fixtures::structured(4);
        let sp = build_space(&m, SpaceKind::CG1);
        let u = Field::new(sp.clone(), coeffs).unwrap();
        let v = Field::new(sp, other).unwrap();
        let all = vec![true; m.num_cells()];
        let nu = weighted_norm(&u, &all).unwrap();
        let nv = weighted_norm(&v, &all).unwrap();
        let ku = u.axpby(k, 0.0, &u).unwrap();
        prop_assert!((weighted_norm(&ku, &all).unwrap() - k.abs() * nu).abs() <= 1e-12 * (1.0 + nu));
        let sum = u.axpby(1.0, 1.0, &v).unwrap();
        prop_assert!(weighted_norm(&sum, &all).unwrap() <= nu + nv + 1e-12);
        let diff = compare_fields(&u, &v, &all).unwrap();
        let uv = u.axpby(1.0, -1.0, &v).unwrap();
        prop_assert!((diff - weighted_norm(&uv, &all).unwrap()).abs() < 1e-12 * (1.0 + diff));
    }

    #[test]
    fn norm_over_disjoint_masks_adds_in_squares(coeffs in prop::collection::vec(-5.0f64..5.0, 32), split in 1usize..31) {
        let m = fixtures::structured(4);
        let u = Field::new(build_space(&m, SpaceKind::DG0), coeffs).unwrap();
        let a: Vec<bool> = (0..32).map(|c| c < split).collect();
        let b: Vec<bool> = a.iter().map(|x| !x).collect();
        let whole = weighted_norm(&u, &vec![true; 32]).unwrap();
        let parts = weighted_norm(&u, &a).unwrap().hypot(weighted_norm(&u, &b).unwrap());
        prop_assert!((whole - parts).abs() < 1e-12 * (1.0 + whole));
    }
}

#[test]
fn weighted_norm_of_constant_matches_integral() {
    // ∫ r dA over [1,2]×[0,1] is 3/2.
    let m = fixtures::structured(3);
    let one = build_space(&m, SpaceKind::DG0).interpolate(|_| [1.0, 0.0]);
    let n = weighted_norm(&one, &vec![true; m.num_cells()]).unwrap();
    assert!((n * n - 1.5).abs() < 1e-14);
}

#[test]
fn field_length_is_checked() {
    let m = fixtures::structured(2);
    assert!(Field::new(build_space(&m, SpaceKind::N1), vec![0.0; 3]).is_err());
}
