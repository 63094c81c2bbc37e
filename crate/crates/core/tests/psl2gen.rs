use helix_core::chartab::CharacterTable;
use helix_core::cyclo::{root_pair, CycValue};
use helix_core::psl2gen::{gen_brauer3, gen_table, gen_table_with_brauer3, Psl2Params, Variant};

const QS: [u64; 12] = [4, 5, 7, 8, 9, 11, 13, 16, 25, 27, 32, 49];

fn table(v: Variant, q: u64) -> CharacterTable {
    gen_table(Psl2Params::new(v, q).unwrap()).unwrap()
}

fn value(t: &CharacterTable, chi: &str, class: &str) -> CycValue {
    let c = t.character_index(chi).unwrap_or_else(|| panic!("no character {chi}"));
    let k = t.class_index(class).unwrap_or_else(|| panic!("no class {class}"));
    t.character(c).value(k).unwrap().clone()
}

#[test]
fn all_generated_tables_validate() {
    for q in QS {
        for v in [Variant::Psl, Variant::Pgl] {
            let t = table(v, q);
            let rep = t.validate();
            assert!(rep.passed(), "{}: {}", t.group_name, rep);
            assert_eq!(t.classes().len(), t.characters().len());
        }
    }
}

#[test]
fn element_orders_are_torus_divisors() {
    for q in QS {
        for v in [Variant::Psl, Variant::Pgl] {
            let prm = Psl2Params::new(v, q).unwrap();
            let t = gen_table(prm).unwrap();
            let mut want: Vec<u64> = [prm.split_order(), prm.nonsplit_order(), prm.p]
                .iter()
                .flat_map(|&n| (1..=n).filter(move |d| n % d == 0))
                .collect();
            want.sort_unstable();
            want.dedup();
            assert_eq!(t.element_orders(), want, "{}", t.group_name);
        }
    }
}

#[test]
fn steinberg_values() {
    for q in QS {
        for v in [Variant::Psl, Variant::Pgl] {
            let prm = Psl2Params::new(v, q).unwrap();
            let t = gen_table(prm).unwrap();
            let st = t.character(t.character_index("St").unwrap());
            assert_eq!(st.degree, q);
            for (i, c) in t.classes().iter().enumerate() {
                let o = c.element_order;
                // order 2 in PGL(2,q), q odd, lies in both tori; see below.
                if o == 2 && prm.p != 2 && v == Variant::Pgl {
                    continue;
                }
                let want = if o == 1 {
                    q as i64
                } else if o == prm.p {
                    0
                } else if prm.split_order().is_multiple_of(o) {
                    1
                } else {
                    -1
                };
                assert_eq!(st.value(i).unwrap().to_i64(), Some(want), "{} class {}", t.group_name, c.name);
            }
        }
    }
}

#[test]
fn pgl_involutions_and_steinberg() {
    // 2a is the involution inside PSL; tau is 1 there.
    for q in [5, 7, 9, 11, 13, 25, 27, 49] {
        let t = table(Variant::Pgl, q);
        assert_eq!(value(&t, "tau", "2a"), CycValue::from_int(1));
        assert_eq!(value(&t, "tau", "2b"), CycValue::from_int(-1));
        let split_a = q % 4 == 1;
        let st_2a = if split_a { 1 } else { -1 };
        assert_eq!(value(&t, "St", "2a"), CycValue::from_int(st_2a));
        assert_eq!(value(&t, "St", "2b"), CycValue::from_int(-st_2a));
    }
}

#[test]
fn eta_pair_at_27() {
    let t = table(Variant::Psl, 27);
    let z = CycValue::root_of_unity(3, 1).unwrap();
    let one = CycValue::one();
    assert_eq!(value(&t, "eta1", "1a"), CycValue::from_int(13));
    assert_eq!(value(&t, "eta1", "2a"), CycValue::from_int(1));
    assert_eq!(value(&t, "eta1", "3a"), one.add(&z.scale_int(3)));
    assert_eq!(value(&t, "eta1", "3b"), one.add(&z.mul(&z).scale_int(3)));
    assert_eq!(value(&t, "eta2", "3a"), one.add(&z.mul(&z).scale_int(3)));
    assert_eq!(value(&t, "eta2", "3b"), one.add(&z.scale_int(3)));
}

#[test]
fn discrete_series_rows_at_32() {
    // Classes 1a, 2a, 3a; degree q-1 characters take 1 or -2 on 3a.
    let t = table(Variant::Psl, 32);
    let mut seen = std::collections::BTreeSet::new();
    for c in t.characters().iter().filter(|c| c.degree == 31) {
        let v2 = c.value(t.class_index("2a").unwrap()).unwrap().to_i64().unwrap();
        let v3 = c.value(t.class_index("3a").unwrap()).unwrap().to_i64().unwrap();
        assert_eq!(v2, -1);
        seen.insert(v3);
    }
    assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![-2, 1]);
}

#[test]
fn pgl_243_rows() {
    let t = table(Variant::Pgl, 243);
    assert_eq!(t.group_name, "PGL(2,243)");
    assert_eq!(value(&t, "tau", "2a"), CycValue::from_int(1));
    assert_eq!(value(&t, "tau", "3a"), CycValue::from_int(1));
    assert_eq!(value(&t, "tau", "2b"), CycValue::from_int(-1));
    // ps families of degree 244 restricted to the order-11 classes
    let names = ["11a", "11b", "11c", "11d", "11e"];
    let exps = [1i64, 2, 4, 8, 16];
    for c in t.characters().iter().filter(|c| c.degree == 244) {
        let vals: Vec<CycValue> = names.iter().map(|n| c.value(t.class_index(n).unwrap()).unwrap().clone()).collect();
        // each row is (z^l + z^-l) along the orbit of some z
        let k = (0..11)
            .find(|k| vals[0] == root_pair(11, *k))
            .unwrap_or_else(|| panic!("{} on 11a is {}", c.name, vals[0]));
        for (v, e) in vals.iter().zip(exps) {
            assert_eq!(*v, root_pair(11, k * e));
        }
    }
    let ds = t.characters().iter().find(|c| c.degree == 242).unwrap();
    assert_eq!(ds.value(t.class_index("3a").unwrap()).unwrap().to_i64(), Some(-1));
    for n in names {
        assert!(ds.value(t.class_index(n).unwrap()).unwrap().is_zero());
    }
}

#[test]
fn brauer3() {
    let b = gen_brauer3(Psl2Params::new(Variant::Pgl, 9).unwrap()).unwrap();
    let t = table(Variant::Pgl, 9);
    let four = t.classes().iter().find(|c| c.element_order == 4).unwrap();
    assert_eq!(b.values[&four.name], CycValue::from_int(1));
    let b7 = gen_brauer3(Psl2Params::new(Variant::Pgl, 7).unwrap()).unwrap();
    assert_eq!(b7.values["3a"], CycValue::zero());
    let b5 = gen_brauer3(Psl2Params::new(Variant::Pgl, 5).unwrap()).unwrap();
    assert_eq!(b5.values["1a"], CycValue::from_int(3));
    assert!(!b5.values.contains_key("5a"));
    assert!(gen_brauer3(Psl2Params::new(Variant::Psl, 9).unwrap()).is_err());
    assert!(gen_brauer3(Psl2Params::new(Variant::Psl, 8).unwrap()).is_ok());
    for q in [5, 7, 8, 9, 16] {
        let t = gen_table_with_brauer3(Psl2Params::new(Variant::Pgl, q).unwrap()).unwrap();
        let phi = t.character(t.character_index("phi").unwrap());
        for (i, v) in phi.values().iter().enumerate() {
            if let Some(v) = v {
                assert_eq!(*v, v.conj(), "{} on {}", t.group_name, t.class(i).name);
            }
        }
        assert!(t.validate().passed());
    }
}

#[test]
fn power_maps_compose() {
    for q in QS {
        for v in [Variant::Psl, Variant::Pgl] {
            let t = table(v, q);
            let primes = helix_core::arith::prime_divisors(t.order.unwrap());
            for i in 0..t.classes().len() {
                for &r in &primes {
                    for &s in &primes {
                        let a = t.power(t.power(i, r).unwrap(), s).unwrap();
                        let b = t.power(t.power(i, s).unwrap(), r).unwrap();
                        assert_eq!(a, b);
                        assert_eq!(t.power_by(i, r * s), Some(a));
                    }
                }
            }
        }
    }
}

#[test]
fn even_q_variants_agree() {
    for q in [4, 8, 16, 32] {
        let a = table(Variant::Psl, q);
        let b = table(Variant::Pgl, q);
        assert_eq!(a.to_json_string(), b.to_json_string());
    }
}

#[test]
fn rejects_bad_q() {
    assert!(Psl2Params::new(Variant::Psl, 6).is_err());
    assert!(Psl2Params::new(Variant::Psl, 3).is_err());
    assert!(Psl2Params::new(Variant::Psl, 1).is_err());
}
