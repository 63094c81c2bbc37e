//! End-to-end checks, one PASS/FAIL line each. Exits nonzero on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use helix_core::arith::{gcd, moebius};
use helix_core::chartab::{CharacterTable, PaChain};
use helix_core::cyclo::CycValue;
use helix_core::datasets;
use helix_core::help::{
    classify_chain, fourier_stats, solve_order, solve_s_constant, verify_chain, Classification, SolutionStore,
    Status, DEFAULT_CAP,
};
use helix_core::lattice::{enumerate, oracle_enumerate, AffineForm, Enumeration, Polyhedron};
use helix_core::pq::{pq_check, Outcome, PqOptions, Verdict};
use helix_core::psl2gen::{gen_table, Psl2Params, Variant};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::json;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const QS: [u64; 12] = [4, 5, 7, 8, 9, 11, 13, 16, 25, 27, 32, 49];

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn table(v: Variant, q: u64) -> Result<CharacterTable, String> {
    let p = Psl2Params::new(v, q).map_err(|e| e.to_string())?;
    gen_table(p).map_err(|e| e.to_string())
}

fn count(t: &CharacterTable, sel: &str, n: u64) -> Result<(Status, usize), String> {
    let chars = t.select_characters(sel).map_err(|e| e.to_string())?;
    let s = solve_order(t, &chars, n, &SolutionStore::new(), DEFAULT_CAP).map_err(|e| e.to_string())?;
    Ok((s.status, s.count()))
}

fn count_s(t: &CharacterTable, sel: &str, s: u64, tt: u64) -> Result<(Status, usize), String> {
    let chars = t.select_characters(sel).map_err(|e| e.to_string())?;
    let r = solve_s_constant(t, &chars, s, tt, &SolutionStore::new(), DEFAULT_CAP).map_err(|e| e.to_string())?;
    Ok((r.status, r.count()))
}

fn exact(got: (Status, usize), want: usize, what: &str) -> Result<(), String> {
    ensure(got == (Status::Complete, want), format!("{what}: got {got:?}, want {want}"))
}

fn verified(t: &CharacterTable, sel: &str, n: u64, chain: serde_json::Value) -> Result<bool, String> {
    let chars = t.select_characters(sel).map_err(|e| e.to_string())?;
    let chain = PaChain::from_json(t, &chain).map_err(|e| e.to_string())?;
    let r = verify_chain(t, &chars, n, &chain).map_err(|e| e.to_string())?;
    Ok(r.satisfied)
}

fn cyclotomic_kernel() -> Check {
    for n in 1..=200u64 {
        let z = CycValue::root_of_unity(n, 1).map_err(|e| e.to_string())?;
        ensure(z.trace_to_q() == BigRational::from_integer(BigInt::from(moebius(n))), format!("N = {n}"))?;
    }
    let terms = |n: u64| prop::collection::vec((0..n as i64, -5i64..6), 0..5);
    let strat = (2u64..30)
        .prop_flat_map(move |n| (Just(n), terms(n), terms(n), 1i64..30, 1i64..30, -4i64..5));
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let mk = |n: u64, ts: &[(i64, i64)]| {
        CycValue::from_terms(n, ts.iter().map(|&(e, c)| (e, BigRational::from_integer(BigInt::from(c))))).unwrap()
    };
    runner
        .run(&strat, |(n, a, b, j, k, c)| {
            let (x, y) = (mk(n, &a), mk(n, &b));
            let lhs = x.scale_int(c).add(&y).field_trace(n).unwrap();
            let rhs = x.field_trace(n).unwrap() * BigRational::from_integer(BigInt::from(c)) + y.field_trace(n).unwrap();
            prop_assert_eq!(lhs, rhs);
            if gcd(j as u64, n) == 1 && gcd(k as u64, n) == 1 {
                prop_assert_eq!(x.galois(j).unwrap().galois(k).unwrap(), x.galois(j * k).unwrap());
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("mu(N) for N <= 200, 1000 random linearity and composition cases".into())
}

fn steinberg_expected(prm: &Psl2Params, v: Variant, o: u64, name: &str) -> i64 {
    if o == 1 {
        return prm.q as i64;
    }
    if o == prm.p {
        return 0;
    }
    if o == 2 && prm.p != 2 && v == Variant::Pgl {
        // both tori hold involutions; 2a is the one inside PSL, which is
        // split iff q = 1 mod 4
        let split_a = prm.q % 4 == 1;
        return if (name == "2a") == split_a { 1 } else { -1 };
    }
    if prm.split_order().is_multiple_of(o) {
        1
    } else {
        -1
    }
}

fn generated_tables() -> Check {
    let mut n = 0;
    for q in QS {
        for v in [Variant::Psl, Variant::Pgl] {
            let prm = Psl2Params::new(v, q).map_err(|e| e.to_string())?;
            let t = gen_table(prm).map_err(|e| e.to_string())?;
            let rep = t.validate();
            ensure(rep.passed(), format!("{}: {:?}", t.group_name, rep.violations()))?;
            let st = t.character(t.character_index("St").ok_or("no St")?);
            for (i, c) in t.classes().iter().enumerate() {
                let want = steinberg_expected(&prm, v, c.element_order, &c.name);
                ensure(
                    st.value(i).and_then(CycValue::to_i64) == Some(want),
                    format!("{} St on {}", t.group_name, c.name),
                )?;
            }
            n += 1;
        }
    }
    Ok(format!("{n} tables validate, Steinberg rows exact"))
}

fn psp47() -> Check {
    let a = datasets::load("psp4_7_partial").map_err(|e| e.to_string())?;
    exact(count(&a, "phi", 2)?, 3, "order 2, phi")?;
    exact(count(&a, "chi,phi", 10)?, 0, "order 10")?;
    let b = datasets::load("psp4_7_aut_partial").map_err(|e| e.to_string())?;
    exact(count(&b, "chi,phi", 15)?, 0, "order 15")?;
    Ok("3, 0, 0".into())
}

fn psl2_243() -> Check {
    let t = table(Variant::Psl, 243)?;
    exact(count_s(&t, "chi121", 11, 3)?, 0, "order 33")?;
    Ok("order 33, s-constant: 0 chains".into())
}

fn pgl2_243() -> Check {
    let chain = json!({"unit_order": 33, "entries": {"3": {"3a": 1}, "11": {"11a": 1}, "33": {"3a": 12, "11c": -11}}});
    let rows = datasets::load("pgl2_243_rows").map_err(|e| e.to_string())?;
    ensure(rows.characters().len() == 6, "six characters")?;
    ensure(verified(&rows, "all", 33, chain.clone())?, "chain rejected by the six characters")?;
    let full = table(Variant::Pgl, 243)?;
    ensure(verified(&full, "ordinary", 33, chain)?, "chain rejected by the full table")?;
    let opts = PqOptions {
        pairs: Some(vec![(3, 11)]),
        cap: 50,
        assume_complete_orders: true,
        ..PqOptions::default()
    };
    let r = pq_check(&rows, &opts).map_err(|e| e.to_string())?;
    match &r.pairs[0].outcome {
        Outcome::Undecided { nontrivial, .. } if *nontrivial > 0 => {}
        o => return Err(format!("pq outcome {o:?}")),
    }
    ensure(r.verdict == Verdict::HelpInsufficient(vec![(3, 11)]), "verdict")?;
    Ok("chain satisfied, {3,11} undecided".into())
}

fn order_six_counts() -> Check {
    exact(count(&table(Variant::Psl, 32)?, "ordinary", 6)?, 3, "PSL(2,32)")?;
    exact(count(&table(Variant::Pgl, 243)?, "ordinary", 6)?, 28, "PGL(2,243)")?;
    Ok("3 and 28".into())
}

fn psl2_27_survivor() -> Check {
    let chain = json!({"unit_order": 6, "entries": {"2": {"2a": 1}, "3": {"3a": 1}, "6": {"2a": -2, "3a": 2, "3b": 1}}});
    let eta = datasets::load("psl2_3f_eta").map_err(|e| e.to_string())?;
    ensure(verified(&eta, "eta,eta'", 6, chain.clone())?, "rejected by eta, eta'")?;
    let full = table(Variant::Psl, 27)?;
    ensure(verified(&full, "ordinary", 6, chain)?, "rejected by the full table")?;
    Ok("accepted by both".into())
}

fn psl2_32_steinberg() -> Check {
    let t = table(Variant::Psl, 32)?;
    exact(count_s(&t, "St", 31, 2)?, 0, "order 62")?;
    exact(count_s(&t, "St", 11, 2)?, 0, "order 22")?;
    Ok("orders 62 and 22: 0 chains".into())
}

fn l3_17() -> Check {
    let t = datasets::load("l3_17_aut_partial").map_err(|e| e.to_string())?;
    exact(count_s(&t, "chi1,chi4912", 307, 2)?, 0, "order 614")?;
    exact(count(&t, "chi306,chi4912,chi9216", 51)?, 126, "order 51")?;
    Ok("614: 0, 51: 126".into())
}

fn insufficiency() -> Check {
    let r = pq_check(&table(Variant::Psl, 16)?, &PqOptions::default()).map_err(|e| e.to_string())?;
    let p = r.pairs.iter().find(|p| (p.p, p.q) == (2, 3)).ok_or("no pair 2-3")?;
    match &p.outcome {
        Outcome::Undecided { nontrivial, .. } if *nontrivial > 0 => {}
        o => return Err(format!("PSL(2,16) 2-3: {o:?}")),
    }
    let r = pq_check(&table(Variant::Psl, 5)?, &PqOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.pairs.len() == 3 && r.pairs.iter().all(|p| p.outcome == Outcome::RuledOut), "PSL(2,5) pairs")?;
    ensure(r.verdict == Verdict::HelpSufficient, "PSL(2,5) verdict")?;
    Ok("PSL(2,16) {2,3} open, PSL(2,5) sufficient".into())
}

fn oracle_equivalence() -> Check {
    let strat = (1usize..=5).prop_flat_map(|dim| {
        let row = move || (prop::collection::vec(-3i64..=3, dim), -6i64..=6);
        (
            Just(dim),
            prop::collection::vec(row(), 0..5),
            prop::collection::vec(row(), 0..2),
            prop::collection::vec((prop::collection::vec(-3i64..=3, dim), 2u64..=4, 0i64..4), 0..2),
        )
    });
    let mut runner = TestRunner::new(Config {
        cases: 150,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strat, |(dim, ineq, eq, cong)| {
            let mut p = Polyhedron::new(dim);
            for (a, c) in ineq {
                p.add_inequality(AffineForm::new(a, c)).unwrap();
            }
            for (a, c) in eq {
                p.add_equality(AffineForm::new(a, c)).unwrap();
            }
            for (a, m, r) in cong {
                p.add_congruence(AffineForm::new(a, 0), m, r).unwrap();
            }
            for k in 0..dim {
                let mut e = vec![0; dim];
                e[k] = 1;
                p.add_inequality(AffineForm::new(e.clone(), 3)).unwrap();
                e[k] = -1;
                p.add_inequality(AffineForm::new(e, 3)).unwrap();
            }
            let want = oracle_enumerate(&p, &vec![(-3, 3); dim]);
            match enumerate(&p, DEFAULT_CAP).unwrap() {
                Enumeration::Finite(got) => prop_assert_eq!(got, want),
                other => prop_assert!(false, "bounded system gave {:?}", other),
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let (built, broken) = fourier_stats();
    ensure(built > 0, "no systems were built")?;
    ensure(broken == 0, format!("{broken} of {built} systems break the Fourier sum rule"))?;
    Ok(format!("150 random systems match; Fourier rule on {built} systems"))
}

fn triviality() -> Check {
    let mut checked = 0;
    for q in QS {
        for v in [Variant::Psl, Variant::Pgl] {
            let t = table(v, q)?;
            let chars = t.select_characters("all").map_err(|e| e.to_string())?;
            for (i, c) in t.classes().iter().enumerate() {
                if c.element_order < 2 {
                    continue;
                }
                let chain = PaChain::trivial(&t, i).ok_or(format!("{} {}: no power maps", t.group_name, c.name))?;
                let r = verify_chain(&t, &chars, c.element_order, &chain).map_err(|e| e.to_string())?;
                ensure(r.satisfied, format!("{} {}: {:?}", t.group_name, c.name, r.failures()))?;
                ensure(classify_chain(&chain) == Classification::Trivial, "classification")?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} class chains"))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("cyclotomic kernel", cyclotomic_kernel),
        ("generated table validity", generated_tables),
        ("PSp(4,7) counts", psp47),
        ("PSL(2,243) order 33", psl2_243),
        ("PGL(2,243) order 33", pgl2_243),
        ("order 6 counts", order_six_counts),
        ("PSL(2,27) survivor", psl2_27_survivor),
        ("PSL(2,32) Steinberg orders 62 and 22", psl2_32_steinberg),
        ("Aut(PSL(3,17))", l3_17),
        ("insufficiency witnesses", insufficiency),
        ("solver oracle equivalence", oracle_equivalence),
        ("triviality soundness", triviality),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
