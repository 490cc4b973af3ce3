use txlab_core::Kind;
use txlab_lang::*;
use txlab_stm::Algorithm;

fn program(name: &str) -> Program {
    corpus_entry(name).unwrap().program()
}

fn machine(name: &str, alg: Algorithm) -> (Program, ExploreResult) {
    let p = program(name);
    let r = explore(&p, alg, Bounds::default(), MachineOptions { check_invariants: true });
    (p, r)
}

#[test]
fn tdrf_verdicts() {
    for (name, expected) in [("fig1", true), ("fig2", true), ("fig3", false), ("fig5", true), ("fig6", true), ("thm25", true)] {
        let v = tdrf_program(&program(name), Bounds::default());
        assert_eq!(v.holds, expected, "{name}");
    }
}

#[test]
fn fig3_race_is_between_the_transaction_and_the_reads() {
    let v = tdrf_program(&program("fig3"), Bounds::default());
    let (run, races) = v.witness.unwrap();
    let h = v.result.runs[run].history();
    assert!(races.iter().all(|c| h[c.tx].thread == 1 && h[c.nontx].thread == 2));
}

#[test]
fn postconditions_hold_under_atomic_semantics() {
    for e in CORPUS {
        let p = e.program();
        let r = explore_atomic(&p, Bounds::default());
        let v = check_postcondition(&r, &p);
        assert!(v.holds, "{}: {:?}", e.name, v.failing);
        assert!(v.finals > 0);
        assert_eq!(v.partial, e.name == "fig5", "{}", e.name);
    }
}

#[test]
fn fig3_postcondition_breaks_under_tl2_only() {
    let (p, r) = machine("fig3", Algorithm::Tl2);
    let v = check_postcondition(&r, &p);
    let (fin, _) = v.failing.expect("x = 1 and y = 0 is reachable");
    let l1 = p.local("l1").unwrap();
    let l2 = p.local("l2").unwrap();
    assert_eq!((fin.local(l1), fin.local(l2)), (1, 0));

    let (p, r) = machine("fig3", Algorithm::GlobalLock);
    assert!(check_postcondition(&r, &p).holds);
}

#[test]
fn privatization_safe_tms_keep_graph_invariants() {
    for name in ["fig1", "fig2", "fig5", "fig6"] {
        for alg in [Algorithm::FencedTl2, Algorithm::TwoPl] {
            let (p, r) = machine(name, alg);
            assert!(r.inv_failures.is_empty(), "{name} {alg}: {}", r.inv_failures[0].check);
            assert!(check_opacity_runs(&r).unwrap().holds, "{name} {alg}");
            assert!(check_postcondition(&r, &p).holds, "{name} {alg}");
            assert!(check_refinement(&r, Bounds::default().perm_cap).unwrap().holds, "{name} {alg}");
        }
    }
}

#[test]
fn plain_tl2_breaks_privatization() {
    let (p, r) = machine("fig1", Algorithm::Tl2);
    assert!(!check_postcondition(&r, &p).holds);
    assert!(!r.inv_failures.is_empty());

    let (_, r) = machine("thm25", Algorithm::Tl2);
    let v = check_refinement(&r, Bounds::default().perm_cap).unwrap();
    let run = &r.runs[v.witness.expect("a trace without an atomic counterpart")];
    // The non-transactional read sees the initial value although the
    // transaction that read priv = 0 and wrote x commits.
    let kinds: Vec<_> = run.trace.iter().map(|a| (a.thread, a.kind)).collect();
    assert!(kinds.contains(&(2, Kind::Ret(0))));
    assert!(kinds.contains(&(1, Kind::Ret(0))));
}

#[test]
fn tdrf_programs_yield_cdrf_histories() {
    for name in ["fig1", "fig2", "fig5", "fig6", "thm25"] {
        for alg in Algorithm::ALL {
            let (_, r) = machine(name, alg);
            assert!(check_cdrf_runs(&r, Bounds::default().perm_cap).unwrap().holds, "{name} {alg}");
        }
    }
}

#[test]
fn machine_runs_refine_atomic_runs_as_trace_sets() {
    let p = program("fig1");
    let atomic = explore_atomic(&p, Bounds::default());
    let b: Vec<_> = atomic.runs.iter().map(|r| r.trace.clone()).collect();
    let r = explore(&p, Algorithm::FencedTl2, Bounds::default(), MachineOptions::default());
    let a: Vec<_> = r.runs.iter().map(|r| r.trace.clone()).collect();
    assert_eq!(refines(&a, &b), Ok(()));
}
