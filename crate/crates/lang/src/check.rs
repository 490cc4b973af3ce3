//! Program-level verdicts over explored runs.

use std::collections::HashSet;

use txlab_core::atomic::find_atomic_match;
use txlab_core::opacity::{cdrf_graph, check_opaque_graph, CdrfGraphOptions, GraphError};
use txlab_core::race::{cdrf, tdrf, ConflictPair};
use txlab_core::{Action, CapExceeded, Kind, Layout, ThreadId};

use crate::ast::Program;
use crate::explore::{explore_atomic, Bounds, ExploreResult, FinalState};

#[derive(Clone, Debug)]
pub struct TdrfVerdict {
    pub holds: bool,
    /// Index of a racy run in `result` and its races.
    pub witness: Option<(usize, Vec<ConflictPair>)>,
    pub partial: bool,
    pub result: ExploreResult,
}

/// Whether every history of `p` under the strongly atomic TM is free of
/// transactional data races.
pub fn tdrf_program(p: &Program, bounds: Bounds) -> TdrfVerdict {
    let result = explore_atomic(p, bounds);
    let witness = result.runs.iter().enumerate().find_map(|(i, r)| {
        let report = tdrf(&r.history()).expect("atomic exploration yields atomic histories");
        (!report.race_free()).then_some((i, report.races))
    });
    TdrfVerdict {
        holds: witness.is_none(),
        witness,
        partial: result.partial,
        result,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PostVerdict {
    pub holds: bool,
    /// A final state violating the postcondition and the run reaching it.
    pub failing: Option<(FinalState, usize)>,
    /// Bounds cut some paths, so finals beyond them were not seen.
    pub partial: bool,
    pub finals: usize,
}

/// Evaluates the postcondition of `p` on every explored final state. A
/// program without a postcondition passes.
pub fn check_postcondition(result: &ExploreResult, p: &Program) -> PostVerdict {
    let failing = p.post.as_ref().and_then(|post| {
        result
            .finals
            .iter()
            .find(|(f, _)| f.eval(post) == 0)
            .map(|(f, &i)| (f.clone(), i))
    });
    PostVerdict {
        holds: failing.is_none(),
        failing,
        partial: result.partial,
        finals: result.finals.len(),
    }
}

/// What an observer of a trace can see: each thread's actions in order
/// and the order of non-transactional actions. Write-backs and action ids
/// are ignored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Observation {
    pub threads: Vec<(ThreadId, Vec<Kind>)>,
    pub nontx: Vec<(ThreadId, Kind)>,
}

pub fn observe(trace: &[Action]) -> Observation {
    let visible: Vec<Action> = trace.iter().copied().filter(|a| !matches!(a.kind, Kind::Wb(..))).collect();
    let mut threads: Vec<(ThreadId, Vec<Kind>)> = Vec::new();
    for a in &visible {
        match threads.iter_mut().find(|(t, _)| *t == a.thread) {
            Some((_, ks)) => ks.push(a.kind),
            None => threads.push((a.thread, vec![a.kind])),
        }
    }
    threads.sort_by_key(|(t, _)| *t);
    let iface: Vec<Action> = visible.iter().copied().filter(|a| a.kind.is_interface()).collect();
    let layout = Layout::of(&iface);
    let nontx = iface
        .iter()
        .enumerate()
        .filter(|&(i, _)| layout.is_nontx(i))
        .map(|(_, a)| (a.thread, a.kind))
        .collect();
    Observation { threads, nontx }
}

/// Equal per-thread projections and equal non-transactional projections.
pub fn obs_equiv(t1: &[Action], t2: &[Action]) -> bool {
    observe(t1) == observe(t2)
}

/// Every trace of `a` has an observationally equivalent trace in `b`.
/// On failure returns the index of an unmatched trace of `a`.
pub fn refines(a: &[Vec<Action>], b: &[Vec<Action>]) -> Result<(), usize> {
    let seen: HashSet<Observation> = b.iter().map(|t| observe(t)).collect();
    match a.iter().position(|t| !seen.contains(&observe(t))) {
        Some(i) => Err(i),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunVerdict {
    pub holds: bool,
    /// Index of the first failing run.
    pub witness: Option<usize>,
    pub checked: usize,
    pub partial: bool,
}

fn over_runs(
    result: &ExploreResult,
    mut ok: impl FnMut(usize) -> Result<bool, CapExceeded>,
) -> Result<RunVerdict, CapExceeded> {
    let mut checked = 0;
    for i in 0..result.runs.len() {
        checked += 1;
        if !ok(i)? {
            return Ok(RunVerdict {
                holds: false,
                witness: Some(i),
                checked,
                partial: result.partial,
            });
        }
    }
    Ok(RunVerdict {
        holds: true,
        witness: None,
        checked,
        partial: result.partial,
    })
}

/// Whether every explored run has an observationally equivalent trace
/// under the strongly atomic TM.
///
/// Threads evaluate locally, so a trace with the same per-thread interface
/// actions as an atomic history also has the same primitive actions. The
/// question thus reduces to finding an atomic history that preserves the
/// per-thread and client orders of the run's history.
pub fn check_refinement(result: &ExploreResult, cap: usize) -> Result<RunVerdict, CapExceeded> {
    over_runs(result, |i| Ok(find_atomic_match(&result.runs[i].history(), cap)?.is_some()))
}

/// Whether every explored history is concurrently data-race free. Uses the
/// graph criterion and falls back to enumeration for inconsistent
/// histories, which have no opacity graphs.
pub fn check_cdrf_runs(result: &ExploreResult, cap: usize) -> Result<RunVerdict, CapExceeded> {
    over_runs(result, |i| {
        let h = result.runs[i].history();
        match cdrf_graph(&h, CdrfGraphOptions::default()) {
            Ok(report) => Ok(report.holds()),
            Err(GraphError::Inconsistent | GraphError::Fences) => Ok(cdrf(&h, cap)?.holds()),
            Err(GraphError::Cap(c)) => Err(c),
        }
    })
}

/// Whether every explored history has an acyclic opacity graph.
pub fn check_opacity_runs(result: &ExploreResult) -> Result<RunVerdict, CapExceeded> {
    over_runs(result, |i| match check_opaque_graph(&result.runs[i].history()) {
        Ok(g) => Ok(g.is_some()),
        Err(GraphError::Cap(c)) => Err(c),
        Err(_) => Ok(false),
    })
}
