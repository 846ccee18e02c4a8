mod common;

use epistemia::bisim::l_bisimilar;
use epistemia::formula::ast::{and, boxed, diamond, not, or, prop, top, F};
use epistemia::formula::{characteristic_formula, fo_eval, model_check, modal_depth, parse, standard_translation};
use epistemia::suite::oracles::Reach;
use epistemia::{ck_expand, Coalition};
use proptest::prelude::*;

fn formula(agents: usize) -> impl Strategy<Value = F> {
    let leaf = prop_oneof![Just(top()), Just(prop(0))];
    leaf.prop_recursive(4, 24, 3, move |inner| {
        let coal = (0u8..(1 << agents)).prop_map(|b| Coalition::from_agents((0..8).filter(|a| b >> a & 1 == 1)));
        prop_oneof![
            inner.clone().prop_map(not),
            prop::collection::vec(inner.clone(), 2..3).prop_map(and),
            prop::collection::vec(inner.clone(), 2..3).prop_map(or),
            (coal.clone(), inner.clone()).prop_map(|(a, f)| boxed(a, f)),
            (coal, inner).prop_map(|(a, f)| diamond(a, f)),
        ]
    })
}

#[test]
fn worked_example() {
    let ck = common::ck(7, 1, 1, 0.5, true);
    assert_eq!(ck.n(), 1);
    let text = r#"{"agents":["a","b"],"worlds":3,"edges":{"a":[[0,1]],"b":[[1,2]]},"props":{"p0":[0,2]}}"#;
    let ck = epistemia::io::StructureFile::parse(text).unwrap().to_ck().unwrap();
    let ab = Coalition::full(2);
    assert_eq!(ck.partition(ab).num_blocks(), 1);
    assert_eq!(ck.partition(Coalition::singleton(0)).blocks(), &[vec![0, 1], vec![2]]);
    let f = parse("[a,b](p0 | ~p0) & <a,b>~p0", ck.agents(), ck.base().props()).unwrap();
    assert!((0..3).all(|w| model_check(&ck, w, &f)));
    let g = parse("[a]p0", ck.agents(), ck.base().props()).unwrap();
    assert!(!model_check(&ck, 0, &g) && model_check(&ck, 2, &g));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ck_classes_match_reachability(seed in any::<u64>(), n in 1usize..9, k in 1usize..4, density in 0.0f64..0.6) {
        let s5 = common::s5(seed, n, k, density, false);
        let ck = ck_expand(&s5);
        let r = Reach::new(&s5);
        for a in ck.coalitions() {
            for u in 0..n {
                for v in 0..n {
                    prop_assert_eq!(ck.same_class(u, v, a), r.get(a, u, v));
                }
            }
        }
    }

    #[test]
    fn larger_coalitions_give_coarser_partitions(seed in any::<u64>(), n in 1usize..9, k in 1usize..4) {
        let ck = common::ck(seed, n, k, 0.3, false);
        for a in ck.coalitions() {
            for b in a.supersets(k) {
                prop_assert!(ck.partition(a).refines(ck.partition(b)));
            }
        }
    }

    #[test]
    fn printed_formulas_parse_back(f in formula(2)) {
        let agents = vec!["a".to_string(), "b".to_string()];
        let props = vec!["p0".to_string()];
        let text = f.display(&agents, &props).to_string();
        let g = parse(&text, &agents, &props).unwrap();
        prop_assert_eq!(g, f);
    }

    #[test]
    fn model_checker_agrees_with_first_order_translation(seed in any::<u64>(), n in 1usize..6, f in formula(2)) {
        let ck = common::ck(seed, n, 2, 0.4, false);
        let phi = standard_translation(&f, 0);
        for w in 0..n {
            prop_assert_eq!(model_check(&ck, w, &f), fo_eval(&ck, &[w], &phi).unwrap());
        }
    }

    #[test]
    fn characteristic_formula_captures_bounded_bisimilarity(seed in any::<u64>(), n in 1usize..5, l in 0usize..3) {
        let m = common::ck(seed, n, 2, 0.4, false);
        let other = common::ck(seed ^ 0xA5A5, n, 2, 0.4, false);
        for w in 0..n {
            let chi = characteristic_formula(&m, w, l);
            prop_assert!(modal_depth(&chi) <= l);
            for v in 0..n {
                prop_assert_eq!(model_check(&other, v, &chi), l_bisimilar(&m, w, &other, v, l).unwrap());
            }
        }
    }

    #[test]
    fn bisimilar_worlds_agree_on_sampled_formulas(seed in any::<u64>(), f in formula(2)) {
        let m = common::ck(seed, 4, 2, 0.4, true);
        let d = modal_depth(&f);
        for w in 0..4 {
            for v in 0..4 {
                if l_bisimilar(&m, w, &m, v, d).unwrap() {
                    prop_assert_eq!(model_check(&m, w, &f), model_check(&m, v, &f));
                }
            }
        }
    }
}
