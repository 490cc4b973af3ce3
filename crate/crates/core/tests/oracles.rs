//! The optimized checks against brute-force references on generated
//! histories.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use proptest::prelude::*;
use txlab_core::atomic::{enumerate_atomic_matches, find_atomic_match, is_atomic};
use txlab_core::opacity::{
    assert_path_reductions, cdrf_graph, check_opaque_direct, check_opaque_graph, derive_rw, hb_factorization_failures,
    is_consistent, linearizations, visit_acyclic_graphs, CdrfGraphOptions,
};
use txlab_core::race::{cdrf, tdrf};
use txlab_core::{History, Kind, ThreadId, DEFAULT_PERM_CAP};
use txlab_testkit::hist::{gen_history, gen_history_in, HistoryParams, Mode};
use txlab_testkit::oracle::{atomic_matches_oracle, is_atomic_oracle};

fn history(seed: u64) -> History {
    gen_history(&mut txlab_testkit::rng(seed), &HistoryParams::default())
}

fn consistent(seed: u64) -> Option<History> {
    let h = history(seed);
    is_consistent(&h).then_some(h)
}

fn as_set(hs: Vec<History>) -> BTreeSet<Vec<(ThreadId, Kind)>> {
    hs.iter().map(|h| h.actions().iter().map(|a| (a.thread, a.kind)).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn atomic_membership_matches_reference(seed in any::<u64>()) {
        let h = history(seed);
        prop_assert_eq!(is_atomic(&h), is_atomic_oracle(&h));
    }

    #[test]
    fn atomic_matches_match_reference(seed in any::<u64>()) {
        let h = history(seed);
        let ours = as_set(enumerate_atomic_matches(&h, DEFAULT_PERM_CAP).unwrap());
        let theirs = as_set(atomic_matches_oracle(&h));
        prop_assert_eq!(&ours, &theirs);
        prop_assert_eq!(find_atomic_match(&h, DEFAULT_PERM_CAP).unwrap().is_some(), !theirs.is_empty());
    }

    #[test]
    fn linearizations_of_acyclic_graphs_are_atomic(seed in any::<u64>()) {
        let Some(h) = consistent(seed) else { return Ok(()) };
        visit_acyclic_graphs(&h, |g| {
            for s in linearizations(&h, &g).unwrap().into_iter().take(4) {
                assert!(is_atomic_oracle(&s), "{s:?}");
            }
            ControlFlow::<()>::Continue(())
        }).unwrap();
    }

    #[test]
    fn graph_and_enumeration_cdrf_agree(seed in any::<u64>()) {
        let Some(h) = consistent(seed) else { return Ok(()) };
        let by_graph = cdrf_graph(&h, CdrfGraphOptions::default()).unwrap().holds();
        prop_assert_eq!(by_graph, cdrf(&h, DEFAULT_PERM_CAP).unwrap().holds());
    }

    #[test]
    fn graph_witness_implies_atomic_match(seed in any::<u64>()) {
        let Some(h) = consistent(seed) else { return Ok(()) };
        if check_opaque_graph(&h).unwrap().is_some() {
            prop_assert!(check_opaque_direct(&h, DEFAULT_PERM_CAP).unwrap().is_some());
            prop_assert!(!atomic_matches_oracle(&h).is_empty());
        }
    }

    #[test]
    fn cdrf_graphs_have_reduced_paths(seed in any::<u64>()) {
        let Some(h) = consistent(seed) else { return Ok(()) };
        if !cdrf(&h, DEFAULT_PERM_CAP).unwrap().holds() {
            return Ok(());
        }
        visit_acyclic_graphs(&h, |g| {
            assert_eq!(assert_path_reductions(&g), vec![], "{h:?}");
            ControlFlow::<()>::Continue(())
        }).unwrap();
    }

    #[test]
    fn anti_dependencies_are_determined(seed in any::<u64>()) {
        let Some(h) = consistent(seed) else { return Ok(()) };
        visit_acyclic_graphs(&h, |g| {
            assert_eq!(derive_rw(&g.vertices, &g.wr, &g.ww), g.rw);
            ControlFlow::<()>::Continue(())
        }).unwrap();
    }

    #[test]
    fn race_free_atomic_histories_factor_paths(seed in any::<u64>()) {
        let h = gen_history_in(&mut txlab_testkit::rng(seed), &HistoryParams::default(), Mode::Serial);
        if tdrf(&h).unwrap().race_free() {
            prop_assert_eq!(hb_factorization_failures(&h).unwrap(), vec![]);
        }
    }
}
