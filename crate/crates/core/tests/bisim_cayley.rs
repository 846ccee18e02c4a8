mod common;

use epistemia::bisim::{check_covering, coarsest_bisimulation, l_bisimilar, pair_levels, CoveringError, CoveringMap, Mode};
use epistemia::cayley::{build_covering_capped, check_richness, coset_partition, tree_unfold, EdgeSet};
use epistemia::acyclicity::is_n_acyclic;
use epistemia::suite::oracles::naive_bisimulation;
use epistemia::{ck_expand, Coalition};
use proptest::prelude::*;

const CAP: usize = 5000;

#[test]
fn broken_map_is_rejected() {
    let s5 = common::s5(3, 3, 2, 0.5, true);
    let c = build_covering_capped(&s5, 0, EdgeSet::Spanning, 0, CAP).unwrap();
    let mut cm = c.covering.clone();
    check_covering(&cm).unwrap();
    // Pointing every world at one image breaks surjectivity (or bisimilarity).
    cm.map = vec![0; cm.map.len()];
    assert!(check_covering(&cm).is_err());
    let short = CoveringMap { map: vec![0], ..c.covering.clone() };
    assert_eq!(check_covering(&short), Err(CoveringError::MalformedMap));
}

#[test]
fn copies_raise_richness() {
    let text = r#"{"agents":["a"],"worlds":2,"edges":{"a":[[0,1]]},"props":{"p0":[0]}}"#;
    let s5 = epistemia::io::StructureFile::parse(text).unwrap().to_s5(Default::default()).unwrap();
    let base = ck_expand(&s5);
    assert!(check_richness(&base, 2, false).is_err());
    let c = build_covering_capped(&s5, 0, EdgeSet::Spanning, 2, CAP).unwrap();
    assert!(check_richness(c.ck(), 4, false).is_ok());
    // The empty coalition has singleton classes.
    assert!(check_richness(c.ck(), 2, true).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partition_refinement_matches_naive_fixpoint(seed in any::<u64>(), n in 1usize..6, k in 1usize..3, ck_mode in any::<bool>()) {
        let (a, b) = (common::s5(seed, n, k, 0.4, false), common::s5(seed.wrapping_add(1), n, k, 0.4, false));
        let mode = if ck_mode { Mode::CK } else { Mode::S5 };
        let p = coarsest_bisimulation(&ck_expand(&a), &ck_expand(&b), mode).unwrap();
        let naive = naive_bisimulation(&a, &b, ck_mode, None);
        for w in 0..n {
            for v in 0..n {
                prop_assert_eq!(p.bisimilar(w, v), naive[w][n + v]);
            }
        }
    }

    #[test]
    fn s5_and_ck_bisimulations_coincide(seed in any::<u64>(), n in 1usize..7, k in 1usize..4) {
        let (a, b) = (common::ck(seed, n, k, 0.3, false), common::ck(!seed, n, k, 0.3, false));
        prop_assert_eq!(coarsest_bisimulation(&a, &b, Mode::S5).unwrap().block, coarsest_bisimulation(&a, &b, Mode::CK).unwrap().block);
    }

    #[test]
    fn bounded_bisimilarity_is_antitone(seed in any::<u64>(), n in 1usize..7) {
        let (a, b) = (common::ck(seed, n, 2, 0.4, false), common::ck(seed ^ 1, n, 2, 0.4, false));
        let levels = pair_levels(&a, &b, 5, Mode::CK).unwrap();
        for pair in levels.windows(2) {
            for x in 0..2 * n {
                for y in 0..2 * n {
                    if pair[1][x] == pair[1][y] {
                        prop_assert_eq!(pair[0][x], pair[0][y]);
                    }
                }
            }
        }
        let full = coarsest_bisimulation(&a, &b, Mode::CK).unwrap();
        for w in 0..n {
            for v in 0..n {
                if full.bisimilar(w, v) {
                    prop_assert!(l_bisimilar(&a, w, &b, v, 5).unwrap());
                }
            }
        }
    }

    #[test]
    fn coverings_are_bisimilar_coverings(seed in any::<u64>(), n in 1usize..5, k in 1usize..3, full in any::<bool>(), copies in 0usize..2) {
        let s5 = common::s5(seed, n, k, 0.4, true);
        let edges = if full { EdgeSet::Full } else { EdgeSet::Spanning };
        let Ok(c) = build_covering_capped(&s5, 0, edges, copies, CAP) else { return Ok(()); };
        prop_assert!(check_covering(&c.covering).is_ok());
        // Generators are involutions and classes are cosets.
        for g in &c.generators {
            prop_assert!(g.image.mul(&g.image).is_identity());
        }
        for a in Coalition::all(k) {
            let cosets = coset_partition(&c, a);
            prop_assert_eq!(cosets.labels(), c.ck().partition(a).labels());
        }
    }

    #[test]
    fn unfoldings_have_no_short_cycles(seed in any::<u64>(), n in 2usize..4) {
        let s5 = common::s5(seed, n, 2, 0.5, true);
        let u = tree_unfold(&s5, 0, 3, EdgeSet::Spanning, 0).unwrap();
        prop_assert!(is_n_acyclic(u.ck(), 3));
    }
}
