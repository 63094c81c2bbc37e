use std::collections::BTreeSet;

use helix_core::chartab::{CharacterTable, PaChain};
use helix_core::datasets;
use helix_core::help::verify_chain;
use helix_core::pq::{pq_check, prime_graph, render_table, Outcome, PairPlan, PqError, PqOptions, Verdict};
use helix_core::psl2gen::{gen_table, Psl2Params, Variant};

fn table(v: Variant, q: u64) -> CharacterTable {
    gen_table(Psl2Params::new(v, q).unwrap()).unwrap()
}

#[test]
fn pgl29_graph_has_only_the_edge_2_5() {
    let t = table(Variant::Pgl, 9);
    let g = prime_graph(&t, false).unwrap();
    assert_eq!(g.vertices, BTreeSet::from([2, 3, 5]));
    assert_eq!(g.edges, BTreeSet::from([(2, 5)]));
    assert_eq!(g.non_edges(), [(2, 3), (3, 5)]);
}

#[test]
fn psl25_is_help_sufficient() {
    let t = table(Variant::Psl, 5);
    let r = pq_check(&t, &PqOptions::default()).unwrap();
    assert_eq!(r.verdict, Verdict::HelpSufficient);
    assert_eq!(r.pairs.len(), 3);
    assert!(r.pairs.iter().all(|p| p.outcome == Outcome::RuledOut));
    assert_eq!(r.cell(), "PSL(2,5)");
}

#[test]
fn psl27_leaves_order_six_open() {
    let t = table(Variant::Psl, 7);
    let r = pq_check(&t, &PqOptions::default()).unwrap();
    assert_eq!(r.verdict, Verdict::HelpInsufficient(vec![(2, 3)]));
    let p23 = r.pairs.iter().find(|p| (p.p, p.q) == (2, 3)).unwrap();
    match &p23.outcome {
        Outcome::Undecided {
            nontrivial,
            sample,
            exhaustive,
            ..
        } => {
            assert!(*nontrivial > 0 && *exhaustive);
            // every sampled survivor passes verification on its own
            let chars = t.select_characters("all").unwrap();
            for c in sample {
                assert!(verify_chain(&t, &chars, 6, c).unwrap().satisfied);
            }
        }
        o => panic!("unexpected {o:?}"),
    }
    let text = render_table(&[r]);
    assert!(text.contains("PSL(2,7) (6)"), "{text}");
}

#[test]
fn edges_carry_genuine_elements() {
    for (v, q) in [(Variant::Psl, 11), (Variant::Pgl, 9), (Variant::Psl, 16), (Variant::Pgl, 13)] {
        let t = table(v, q);
        let chars = t.select_characters("all").unwrap();
        let g = prime_graph(&t, false).unwrap();
        for &(p, q) in &g.edges {
            let c = t.classes_of_order(p * q)[0];
            let chain = PaChain::trivial(&t, c).unwrap();
            assert!(verify_chain(&t, &chars, p * q, &chain).unwrap().satisfied);
        }
    }
}

#[test]
fn ruled_out_is_monotone_in_characters() {
    for (v, q) in [(Variant::Psl, 7), (Variant::Psl, 8), (Variant::Pgl, 7), (Variant::Psl, 11)] {
        let t = table(v, q);
        let mut prev: Option<BTreeSet<(u64, u64)>> = None;
        for sel in ["1,St", "1,St,ordinary", "all"] {
            let opts = PqOptions {
                default_characters: sel.to_string(),
                ..PqOptions::default()
            };
            let r = pq_check(&t, &opts).unwrap();
            let out: BTreeSet<(u64, u64)> = r
                .pairs
                .iter()
                .filter(|p| p.outcome == Outcome::RuledOut)
                .map(|p| (p.p, p.q))
                .collect();
            if let Some(p) = &prev {
                assert!(p.is_subset(&out), "{} {sel}", t.group_name);
            }
            prev = Some(out);
        }
    }
}

#[test]
fn pair_filter_and_errors() {
    let t = table(Variant::Psl, 16);
    let opts = PqOptions {
        pairs: Some(vec![(17, 5)]),
        ..PqOptions::default()
    };
    let r = pq_check(&t, &opts).unwrap();
    assert_eq!(r.pairs.len(), 1);
    assert_eq!((r.pairs[0].p, r.pairs[0].q), (5, 17));
    assert_eq!(r.pairs[0].outcome, Outcome::RuledOut);
    let bad = PqOptions {
        pairs: Some(vec![(2, 7)]),
        ..PqOptions::default()
    };
    assert!(matches!(pq_check(&t, &bad), Err(PqError::BadPair { .. })));
    let partial = datasets::load("psp4_7_partial").unwrap();
    assert!(matches!(
        pq_check(&partial, &PqOptions::default()),
        Err(PqError::PartialTable(_))
    ));
}

#[test]
fn plans_pick_characters_and_mode() {
    let t = table(Variant::Psl, 32);
    let mut opts = PqOptions {
        pairs: Some(vec![(2, 31)]),
        ..PqOptions::default()
    };
    opts.plans.insert(
        (2, 31),
        PairPlan {
            characters: "St".to_string(),
            s_constant: Some((31, 2)),
        },
    );
    let r = pq_check(&t, &opts).unwrap();
    assert_eq!(r.pairs[0].characters, ["St"]);
    assert_eq!(r.pairs[0].s_constant, Some((31, 2)));
    assert_eq!(r.pairs[0].outcome, Outcome::RuledOut);
}

#[test]
fn capped_search_with_a_survivor_is_undecided() {
    let t = datasets::load("pgl2_243_rows").unwrap();
    let opts = PqOptions {
        pairs: Some(vec![(3, 11)]),
        cap: 20,
        assume_complete_orders: true,
        ..PqOptions::default()
    };
    let r = pq_check(&t, &opts).unwrap();
    match &r.pairs[0].outcome {
        Outcome::Undecided {
            nontrivial, exhaustive, ..
        } => {
            assert!(*nontrivial > 0);
            assert!(!exhaustive);
        }
        o => panic!("unexpected {o:?}"),
    }
    assert!(r.to_text().contains("at least"));
}
