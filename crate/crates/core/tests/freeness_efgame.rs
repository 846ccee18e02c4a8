mod common;

use epistemia::bisim::l_bisimilar;
use epistemia::cayley::{build_covering_capped, EdgeSet};
use epistemia::corpus::named_bases;
use epistemia::efgame::{build_phi_t, fo_ef_oracle, make_schedules, pebbles_partial_iso, upgrade_experiment, Gates, TreeSkeleton};
use epistemia::formula::ast::{and, boxed, diamond, not, or, prop, top, F};
use epistemia::formula::{model_check, modal_depth};
use epistemia::freeness::{check_mk_free, find_free_witness, is_m_free, push_away, step_away_check, t_distance, triangle_step, AvoidSet, FreenessContext};
use epistemia::hypergraph::gaifman_distance;
use epistemia::suite::oracles::{non_t_distance, Reach};
use epistemia::{CKStructure, Coalition, S5Structure};
use proptest::prelude::*;
use std::collections::HashSet;

fn named(name: &str) -> S5Structure {
    named_bases().into_iter().find(|(n, _)| n == name).unwrap().1
}

fn cover(name: &str, copies: usize) -> CKStructure {
    build_covering_capped(&named(name), 0, EdgeSet::Spanning, copies, 200_000).unwrap().ck().clone()
}

fn formula() -> impl Strategy<Value = F> {
    let leaf = prop_oneof![Just(top()), Just(prop(0))];
    leaf.prop_recursive(3, 16, 2, |inner| {
        let coal = (1u8..4).prop_map(|b| Coalition::from_agents((0..2).filter(|a| b >> a & 1 == 1)));
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
fn schedule_recurrences() {
    let s = make_schedules(3, |m| m + 1);
    assert_eq!(s.m, vec![23, 11, 5, 2]);
    for i in 1..=3 {
        assert_eq!(s.m[i - 1], 2 * s.m[i] + 1);
        assert_eq!(s.ell[i - 1], s.ell[i] + s.f_hat[i]);
    }
    assert_eq!(s.ell[3], 1);
    assert_eq!(s.ell0(), s.ell[0]);
}

#[test]
fn t_distance_matches_path_enumeration() {
    let ck = cover("chain3", 0);
    let ctx = FreenessContext::new(&ck, 9).unwrap();
    let r = Reach::new(ck.base());
    let mut compared = 0;
    for w in 0..ck.n().min(12) {
        for v in 0..ck.n().min(12) {
            if w == v {
                continue;
            }
            for gamma in ctx.agt(w, v).subsets() {
                let t = AvoidSet { v, gamma };
                let fast = t_distance(&ck, w, v, &t, 4).unwrap();
                assert_eq!(fast, non_t_distance(&r, w, v, v, gamma, 4), "w={w} v={v} γ={gamma:?}");
                compared += 1;
            }
        }
    }
    assert!(compared > 50);
}

#[test]
fn rho_extent_and_agt_duality() {
    let ck = cover("chain3", 0);
    let ctx = FreenessContext::new(&ck, 9).unwrap();
    let d = &ctx.dual;
    for v in 0..ck.n() {
        for z in 0..ck.n() {
            let shared: HashSet<u32> = d.hyperedge(z).iter().copied().filter(|x| d.hyperedge(v).contains(x)).collect();
            for gamma in Coalition::all(ck.num_agents()) {
                let ext: HashSet<u32> = ctx.rho(v, gamma).extent(&ck, d).into_iter().collect();
                assert_eq!(shared.is_subset(&ext), gamma.is_subset(ctx.agt(z, v)));
            }
        }
    }
}

#[test]
fn procedures_meet_postconditions() {
    let ck = cover("chain3", 0);
    let ctx = FreenessContext::new(&ck, 9).unwrap();
    assert!(ctx.acyclicity >= 5);
    let (mut triangles, mut steps, mut pushes) = (0, 0, 0);
    for v in 0..ck.n().min(10) {
        for z0 in 0..ck.n().min(6) {
            for u in 0..ck.n().min(6) {
                if let Ok(out) = triangle_step(&ctx, v, u, &[], z0) {
                    let vs = out.v_star;
                    assert!(ctx.bisimilar(vs, v));
                    assert_eq!(ctx.agt(vs, u), ctx.agt(vs, z0).union(ctx.agt(z0, u)));
                    triangles += 1;
                }
            }
            if v == z0 {
                continue;
            }
            let gamma = ctx.agt(v, z0);
            if let Ok(rep) = step_away_check(&ctx, v, z0, gamma, 2) {
                assert!(rep.violations.is_empty());
                steps += 1;
            }
            if let Ok(out) = push_away(&ctx, z0, v, &[], z0, 2) {
                assert!(out.properties_hold());
                let t = AvoidSet { v, gamma };
                assert!(ctx.bisimilar(out.v_star, v));
                assert!(t_distance(&ck, z0, out.v_star, &t, 2).unwrap().is_none());
                pushes += 1;
            }
        }
    }
    assert!(triangles > 0 && steps > 0 && pushes > 0, "{triangles} {steps} {pushes}");
}

#[test]
fn rich_single_agent_covering_is_free() {
    let ck = cover("one2", 2);
    let ctx = FreenessContext::new(&ck, 9).unwrap();
    for (m, k) in [(2, 2), (3, 2)] {
        let r = check_mk_free(&ctx, m, k);
        assert!(r.holds, "{r:?}");
        assert!(r.cells > 0);
    }
    let w = find_free_witness(&ctx, 0, &[0], 0, Coalition::singleton(0), 2).unwrap();
    assert!(ctx.bisimilar(w.v_star, 0));
    assert!(is_m_free(&ck, &ctx.dual, w.v_star, &[0], 0, 2));
    let direct = gaifman_distance(&ctx.dual.hypergraph, &[ctx.dual.point(0)], &[ctx.dual.point(w.v_star)], &HashSet::new());
    assert!(direct.is_some());
}

#[test]
fn base_with_one_copy_is_not_free() {
    // Two worlds in one class leave no room to move away.
    let ck = cover("one2", 0);
    let ctx = FreenessContext::new(&ck, 9).unwrap();
    let r = check_mk_free(&ctx, 2, 2);
    assert!(!r.holds);
    assert!(r.counterexample.is_some());
}

#[test]
fn upgrade_on_rich_covering() {
    let ck = cover("one2u", 2);
    let gates = Gates { min_richness: 3, ..Gates::default() };
    for q in 1..=2 {
        let r = upgrade_experiment(&ck, 0, &ck, 3, q, &gates).unwrap();
        assert!(r.l_bisimilar);
        assert!(r.confirmed(), "{r:?}");
        assert!(r.oracle_positions > 0);
    }
}

#[test]
fn phi_t_holds_at_its_root() {
    let ck = cover("chain3", 0);
    let tree = TreeSkeleton { parent: vec![None, Some(0), Some(0)], hat: vec![0, 1, 2] };
    let phi = build_phi_t(&ck, &tree, 0, 2).unwrap();
    assert!(model_check(&ck, 0, &phi));
    let bad = TreeSkeleton { parent: vec![None, None], hat: vec![0, 1] };
    assert!(build_phi_t(&ck, &bad, 0, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ef_equivalence_is_an_equivalence(seed in any::<u64>(), n in 1usize..5) {
        let m = common::ck(seed, n, 2, 0.4, false);
        for w in 0..n {
            prop_assert!(fo_ef_oracle(&m, w, &m, w, 2));
            for v in 0..n {
                prop_assert_eq!(fo_ef_oracle(&m, w, &m, v, 2), fo_ef_oracle(&m, v, &m, w, 2));
                if fo_ef_oracle(&m, w, &m, v, 2) {
                    prop_assert!(fo_ef_oracle(&m, w, &m, v, 1));
                }
            }
        }
    }

    #[test]
    fn ef_equivalent_worlds_agree_on_shallow_formulas(seed in any::<u64>(), f in formula()) {
        let (m, n) = (common::ck(seed, 3, 2, 0.4, false), common::ck(seed ^ 7, 3, 2, 0.4, false));
        let q = modal_depth(&f);
        prop_assume!(q <= 2);
        for w in 0..3 {
            for v in 0..3 {
                if fo_ef_oracle(&m, w, &n, v, q) {
                    prop_assert_eq!(model_check(&m, w, &f), model_check(&n, v, &f));
                }
            }
        }
    }

    #[test]
    fn ef_implies_bisimilarity_at_depth_zero(seed in any::<u64>(), n in 1usize..5) {
        let (m, o) = (common::ck(seed, n, 2, 0.4, false), common::ck(!seed, n, 2, 0.4, false));
        for w in 0..n {
            for v in 0..n {
                prop_assert_eq!(fo_ef_oracle(&m, w, &o, v, 0), l_bisimilar(&m, w, &o, v, 0).unwrap());
                prop_assert_eq!(fo_ef_oracle(&m, w, &o, v, 0), pebbles_partial_iso(&m, &[w], &o, &[v]));
            }
        }
    }
}
