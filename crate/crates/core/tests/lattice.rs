use helix_core::lattice::{enumerate, oracle_enumerate, variable_bounds, AffineForm, Enumeration, LatticeError, Polyhedron};
use num_traits::ToPrimitive;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct RandomSystem {
    dim: usize,
    ineq: Vec<(Vec<i64>, i64)>,
    eq: Vec<(Vec<i64>, i64)>,
    cong: Vec<(Vec<i64>, i64, u64, i64)>,
}

fn random_system() -> impl Strategy<Value = RandomSystem> {
    (1usize..=4).prop_flat_map(|dim| {
        let row = || (prop::collection::vec(-3i64..=3, dim), -8i64..=8);
        (
            Just(dim),
            prop::collection::vec(row(), 0..6),
            prop::collection::vec(row(), 0..2),
            prop::collection::vec((prop::collection::vec(-3i64..=3, dim), -3i64..=3, 1u64..=5, 0i64..5), 0..3),
        )
            .prop_map(|(dim, ineq, eq, cong)| RandomSystem { dim, ineq, eq, cong })
    })
}

fn build(s: &RandomSystem, radius: Option<i64>) -> Polyhedron {
    let mut p = Polyhedron::new(s.dim);
    for (a, c) in &s.ineq {
        p.add_inequality(AffineForm::new(a.clone(), *c)).unwrap();
    }
    for (a, c) in &s.eq {
        p.add_equality(AffineForm::new(a.clone(), *c)).unwrap();
    }
    for (a, c, m, r) in &s.cong {
        p.add_congruence(AffineForm::new(a.clone(), *c), *m, *r).unwrap();
    }
    if let Some(r) = radius {
        for k in 0..s.dim {
            let mut e = vec![0; s.dim];
            e[k] = 1;
            p.add_inequality(AffineForm::new(e.clone(), r)).unwrap();
            e[k] = -1;
            p.add_inequality(AffineForm::new(e, r)).unwrap();
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bounded_systems_match_oracle(s in random_system()) {
        let p = build(&s, Some(5));
        let want = oracle_enumerate(&p, &vec![(-5, 5); s.dim]);
        prop_assert_eq!(enumerate(&p, 1_000_000).unwrap(), Enumeration::Finite(want));
    }

    #[test]
    fn unbounded_systems_are_sound(s in random_system()) {
        let p = build(&s, None);
        let res = match enumerate(&p, 1_000_000) {
            Err(LatticeError::Undecided(_)) => {
                prop_assert!(oracle_enumerate(&p, &vec![(-6, 6); s.dim]).is_empty());
                return Ok(());
            }
            other => other.unwrap(),
        };
        match res {
            Enumeration::Finite(pts) if pts.is_empty() => {
                // refuted, possibly without bounding the relaxation
                prop_assert!(oracle_enumerate(&p, &vec![(-6, 6); s.dim]).is_empty());
            }
            Enumeration::Finite(pts) => {
                // every coordinate is bounded; compare on the bounding box
                let bx: Vec<(i64, i64)> = (0..s.dim)
                    .map(|i| match variable_bounds(&p, i) {
                        Ok(iv) => (
                            iv.lo.unwrap().floor().to_integer().to_i64().unwrap(),
                            iv.hi.unwrap().ceil().to_integer().to_i64().unwrap(),
                        ),
                        Err(_) => (0, -1),
                    })
                    .collect();
                let want = if bx.iter().any(|(a, b)| a > b) { vec![] } else { oracle_enumerate(&p, &bx) };
                prop_assert_eq!(pts, want);
            }
            Enumeration::Infinite { ray, point } => {
                prop_assert!(ray.iter().any(|&r| r != 0));
                for k in 0..4 {
                    let x: Vec<i64> = point.iter().zip(&ray).map(|(a, b)| a + k * b).collect();
                    prop_assert!(p.contains(&x));
                }
            }
            Enumeration::Capped(_) => prop_assert!(false, "cap reached"),
        }
    }

    #[test]
    fn bounds_contain_all_points(s in random_system()) {
        let p = build(&s, Some(4));
        let pts = oracle_enumerate(&p, &vec![(-4, 4); s.dim]);
        for i in 0..s.dim {
            match variable_bounds(&p, i) {
                Ok(iv) => {
                    for x in &pts {
                        let v = num_rational::BigRational::from_integer(x[i].into());
                        prop_assert!(iv.lo.as_ref().unwrap() <= &v && &v <= iv.hi.as_ref().unwrap());
                    }
                }
                Err(_) => prop_assert!(pts.is_empty()),
            }
        }
    }
}

#[test]
fn cap_truncates_in_order() {
    let mut p = Polyhedron::new(2);
    for k in 0..2 {
        let mut e = vec![0; 2];
        e[k] = 1;
        p.add_inequality(AffineForm::new(e.clone(), 3)).unwrap();
        e[k] = -1;
        p.add_inequality(AffineForm::new(e, 3)).unwrap();
    }
    let all = oracle_enumerate(&p, &[(-3, 3), (-3, 3)]);
    match enumerate(&p, 5).unwrap() {
        Enumeration::Capped(v) => assert_eq!(v, all[..5].to_vec()),
        other => panic!("{other:?}"),
    }
}
