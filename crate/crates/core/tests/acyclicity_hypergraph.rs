mod common;

use epistemia::acyclicity::{acyclicity_level, agt, check_2acyclic_char, find_coset_cycle, is_n_acyclic, verify_agt_steps, AgtTable};
use epistemia::cayley::{build_covering_capped, tree_unfold, EdgeSet};
use epistemia::hypergraph::{attach_region, cl_m, dual, is_m_closed, is_n_acyclic_hg, join_tree, Hypergraph, Vertex};
use epistemia::suite::oracles::{closure, gaifman, has_chordless_cycle, has_two_cycle, uncovered_small_clique, Reach};
use epistemia::{ck_expand, Coalition};
use proptest::prelude::*;
use std::collections::BTreeSet;

/// Random hypergraph on `n` vertices; every vertex also gets a singleton edge.
fn hypergraph() -> impl Strategy<Value = Hypergraph> {
    (2usize..9).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::btree_set(0..n as Vertex, 2..4), 1..7).prop_map(move |es| {
            let mut edges: Vec<Vec<Vertex>> = es.into_iter().map(|e| e.into_iter().collect()).collect();
            edges.extend((0..n as Vertex).map(|v| vec![v]));
            Hypergraph::new(n, edges)
        })
    })
}

fn subset(n: usize, bits: u16) -> BTreeSet<Vertex> {
    (0..n as Vertex).filter(|v| bits >> v & 1 == 1).collect()
}

#[test]
fn twin_is_two_cyclic() {
    let text = r#"{"agents":["a","b"],"worlds":2,"edges":{"a":[[0,1]],"b":[[0,1]]},"props":{"p0":[0]}}"#;
    let ck = epistemia::io::StructureFile::parse(text).unwrap().to_ck().unwrap();
    assert!(!check_2acyclic_char(&ck));
    let c = find_coset_cycle(&ck, 2).unwrap();
    assert!(c.is_valid(&ck));
    assert!(agt(&ck, &[0, 1]).is_err());
}

#[test]
fn four_cycle_is_chordless() {
    let h = Hypergraph::new(4, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]]);
    assert!(is_n_acyclic_hg(&h, 3));
    assert!(!is_n_acyclic_hg(&h, 4));
    assert!(join_tree(&h).is_err());
    let tri = Hypergraph::new(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]);
    assert!(!is_n_acyclic_hg(&tri, 3));
    let q: BTreeSet<Vertex> = [0, 2].into();
    assert_eq!(cl_m(&h, &q, 2).len(), 4);
}

#[test]
fn attachment_on_unfolded_dual() {
    let s5 = common::s5(11, 3, 2, 0.5, true);
    let u = tree_unfold(&s5, 0, 3, EdgeSet::Spanning, 0).unwrap();
    let d = dual(u.ck());
    let h = &d.hypergraph;
    let q = cl_m(h, &d.hyperedge(0).iter().copied().collect(), 2);
    let mut tried = 0;
    for a in 0..h.num_vertices() as Vertex {
        if let Ok(att) = attach_region(h, &q, a, 2) {
            assert!(att.checks.all_pass(), "{:?}", att.checks);
            tried += 1;
        }
    }
    assert!(tried > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn two_acyclicity_identity_matches_cycle_search(seed in any::<u64>(), n in 1usize..7, k in 1usize..4) {
        let s5 = common::s5(seed, n, k, 0.35, false);
        let ck = ck_expand(&s5);
        let none = find_coset_cycle(&ck, 2).is_none();
        prop_assert_eq!(check_2acyclic_char(&ck), none);
        prop_assert_eq!(none, !has_two_cycle(&Reach::new(&s5)));
    }

    #[test]
    fn acyclicity_is_antitone(seed in any::<u64>(), n in 2usize..6) {
        let ck = common::ck(seed, n, 2, 0.4, true);
        let level = acyclicity_level(&ck, 5);
        for m in 2..=5 {
            prop_assert_eq!(is_n_acyclic(&ck, m), m <= level);
        }
    }

    #[test]
    fn found_cycles_are_cycles(seed in any::<u64>(), n in 2usize..6, k in 2usize..4) {
        let ck = common::ck(seed, n, k, 0.5, true);
        if let Some(c) = find_coset_cycle(&ck, 4) {
            prop_assert!(c.is_valid(&ck));
            prop_assert!(c.len() >= 2 && c.len() <= 4);
        }
    }

    #[test]
    fn agt_steps_and_triangle_law(seed in any::<u64>(), n in 2usize..4) {
        let s5 = common::s5(seed, n, 2, 0.5, true);
        let c = build_covering_capped(&s5, 0, EdgeSet::Spanning, 0, 3000).unwrap();
        let ck = c.ck();
        prop_assume!(check_2acyclic_char(ck));
        prop_assert!(verify_agt_steps(ck).unwrap().violations.is_empty());
        let t = AgtTable::new(ck).unwrap();
        let r = Reach::new(ck.base());
        for v in 0..ck.n() {
            for z0 in 0..ck.n() {
                prop_assert_eq!(Some(t.get(v, z0)), r.agt(v, z0));
                for z in 0..ck.n() {
                    prop_assert!(t.get(v, z).is_subset(t.get(v, z0).union(t.get(z0, z))));
                }
            }
        }
    }

    #[test]
    fn closure_is_a_closure_operator(h in hypergraph(), bits in any::<u16>(), more in any::<u16>(), m in 1usize..4) {
        let n = h.num_vertices();
        let p = subset(n, bits);
        let big: BTreeSet<Vertex> = p.union(&subset(n, more)).copied().collect();
        let c = cl_m(&h, &p, m);
        prop_assert!(p.is_subset(&c));
        prop_assert!(c.is_subset(&cl_m(&h, &big, m)));
        prop_assert_eq!(&cl_m(&h, &c, m), &c);
        prop_assert!(is_m_closed(&h, &c, m));
        prop_assert_eq!(&c, &closure(&gaifman(n, h.edges()), &p, m));
        if m > 1 {
            prop_assert!(cl_m(&h, &p, m - 1).is_subset(&c));
        }
    }

    #[test]
    fn hypergraph_acyclicity_matches_brute_force(h in hypergraph(), k in 3usize..6) {
        let adj = gaifman(h.num_vertices(), h.edges());
        let brute = !uncovered_small_clique(&adj, h.edges(), k) && !has_chordless_cycle(&adj, k);
        prop_assert_eq!(is_n_acyclic_hg(&h, k), brute);
    }

    #[test]
    fn join_tree_exists_iff_acyclic(h in hypergraph()) {
        let acyclic = is_n_acyclic_hg(&h, h.num_vertices().max(3));
        match join_tree(&h) {
            Ok(t) => {
                prop_assert!(acyclic);
                prop_assert!(t.verify(h.edges()));
            }
            Err(_) => prop_assert!(!acyclic),
        }
    }

    #[test]
    fn acyclic_frames_have_acyclic_duals(seed in any::<u64>(), n in 2usize..5, k in 1usize..3) {
        let ck = common::ck(seed, n, k, 0.4, true);
        let d = dual(&ck);
        for m in 3..=4 {
            if is_n_acyclic(&ck, m) {
                prop_assert!(is_n_acyclic_hg(&d.hypergraph, m));
            }
        }
        // Every world's hyperedge holds one vertex per coalition.
        for w in 0..ck.n() {
            let e = d.hyperedge(w);
            prop_assert_eq!(e.len(), ck.num_coalitions());
            let colours: BTreeSet<Coalition> = e.iter().map(|&v| d.color(v)).collect();
            prop_assert_eq!(colours.len(), ck.num_coalitions());
        }
    }
}
