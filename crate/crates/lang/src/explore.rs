//! Exhaustive exploration of program executions.
//!
//! Three drivers share the thread interpreter:
//! - [`explore`] runs a program against one of the step machines and
//!   interleaves at machine micro-step granularity;
//! - [`explore_atomic`] runs atomic blocks and non-transactional accesses
//!   as indivisible units against a single memory;
//! - [`explore_exact`] enumerates every interleaving of individual actions
//!   and every response the strongly atomic TM may give, keeping the traces
//!   whose history is atomic. It is exponential and meant for small
//!   programs.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::hash::{Hash, Hasher};

use txlab_core::atomic::{is_atomic, Memory};
use txlab_core::{Action, History, Kind, Reg, ThreadId, DEFAULT_PERM_CAP};
use txlab_stm::{Algorithm, Effect, Execution, InvCheck, Machine, Note, OnlineGraph, Request, Status, VertexKey};

use crate::ast::{Expr, LocalRef, Program};
use crate::interp::{Next, ThreadRt};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// Interface actions per thread; a thread is cut off before exceeding it.
    pub depth: usize,
    /// Iterations per loop entry.
    pub loop_bound: u32,
    /// Cap for enumeration-based history checks.
    pub perm_cap: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            depth: 10,
            loop_bound: 3,
            perm_cap: DEFAULT_PERM_CAP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunEnd {
    /// Every thread ran to completion.
    Terminal,
    /// Some thread hit the depth or loop bound.
    Pruned,
    /// No thread can move although some are unfinished.
    Stuck,
}

/// One maximal explored trace. Machine runs also carry write-backs and the
/// graph notes the machine reported.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub trace: Vec<Action>,
    pub notes: Vec<(usize, Note)>,
    pub end: RunEnd,
}

impl Run {
    pub fn history(&self) -> History {
        history_of_trace(&self.trace)
    }

    pub fn execution(&self) -> Execution {
        Execution {
            actions: self.trace.clone(),
            notes: self.notes.clone(),
        }
    }
}

pub(crate) fn history_of_trace(trace: &[Action]) -> History {
    History::new(trace.iter().copied().filter(|a| a.kind.is_interface()).collect()).expect("interface actions only")
}

/// Locals of every thread, by slot, and the registers that do not hold 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinalState {
    pub locals: Vec<Vec<i64>>,
    pub memory: BTreeMap<Reg, i64>,
}

impl FinalState {
    pub fn local(&self, l: LocalRef) -> i64 {
        self.locals[l.thread][l.slot]
    }

    pub fn eval(&self, e: &Expr) -> i64 {
        e.eval(&|l| self.local(l), &|x| self.memory.get(&x).copied().unwrap_or(0))
    }
}

/// An invariant check that failed during a machine run, with the trace up
/// to the failing update.
#[derive(Clone, Debug)]
pub struct InvFailure {
    pub trace: Vec<Action>,
    pub check: InvCheck,
}

#[derive(Clone, Debug, Default)]
pub struct ExploreResult {
    /// Distinct maximal traces, one per distinct history (primitive
    /// actions included). Interleavings of independent steps that lead to
    /// a state already visited are not repeated.
    pub runs: Vec<Run>,
    /// Final states of terminal runs, each with the index of a run that
    /// reaches it.
    pub finals: BTreeMap<FinalState, usize>,
    /// Some path hit the depth or loop bound.
    pub partial: bool,
    /// Distinct states visited.
    pub states: usize,
    pub inv_failures: Vec<InvFailure>,
}

impl ExploreResult {
    fn record(&mut self, index: &mut HashMap<Vec<(ThreadId, Kind)>, usize>, run: Run, fin: Option<FinalState>) {
        if run.end == RunEnd::Pruned {
            self.partial = true;
        }
        let key = canonical(&run.trace);
        let i = *index.entry(key).or_insert_with(|| {
            self.runs.push(run);
            self.runs.len() - 1
        });
        if let Some(f) = fin {
            self.finals.entry(f).or_insert(i);
        }
    }
}

/// The trace as (thread, kind) pairs, write-backs dropped.
pub fn canonical(trace: &[Action]) -> Vec<(ThreadId, Kind)> {
    trace
        .iter()
        .filter(|a| !matches!(a.kind, Kind::Wb(..)))
        .map(|a| (a.thread, a.kind))
        .collect()
}

fn fingerprint(x: &impl Hash) -> u128 {
    let mut a = DefaultHasher::new();
    0x5eed_u32.hash(&mut a);
    x.hash(&mut a);
    let mut b = DefaultHasher::new();
    0xc0ffee_u32.hash(&mut b);
    x.hash(&mut b);
    (u128::from(a.finish()) << 64) | u128::from(b.finish())
}

fn tid(t: usize) -> ThreadId {
    t as ThreadId + 1
}

fn end_of(threads: &[ThreadRt], p: &Program) -> RunEnd {
    let nexts: Vec<Next> = threads.iter().zip(&p.threads).map(|(r, t)| r.next(&t.code)).collect();
    if nexts.iter().all(|n| *n == Next::Done) {
        RunEnd::Terminal
    } else if nexts.contains(&Next::Pruned) {
        RunEnd::Pruned
    } else {
        RunEnd::Stuck
    }
}

/// Shared per-thread bookkeeping: runs pending local actions and applies
/// the depth bound to pending requests.
fn run_locals(p: &Program, b: &Bounds, threads: &mut [ThreadRt], trace: &mut Vec<Action>, only: Option<usize>) {
    for (t, rt) in threads.iter_mut().enumerate() {
        if only.is_some_and(|o| o != t) {
            continue;
        }
        let code = &p.threads[t].code;
        rt.settle(code, b.loop_bound);
        loop {
            match rt.next(code) {
                Next::Local => {
                    let tag = rt.local_step(code, b.loop_bound);
                    push(trace, t, Kind::Prim(tag));
                }
                Next::Request(..) if rt.iface >= b.depth => rt.prune(),
                _ => break,
            }
        }
    }
}

fn push(trace: &mut Vec<Action>, t: usize, kind: Kind) {
    let id = trace.len() as u64 + 1;
    trace.push(Action::new(id, tid(t), kind));
}

fn to_request(k: Kind) -> Request {
    match k {
        Kind::BeginTx => Request::Begin,
        Kind::Read(x) => Request::Read(x),
        Kind::Write(x, v) => Request::Write(x, v),
        Kind::TryCommit => Request::Commit,
        other => unreachable!("{other} is not a transactional request"),
    }
}

fn fresh_threads(p: &Program) -> Vec<ThreadRt> {
    p.threads.iter().map(ThreadRt::new).collect()
}

// ---------------------------------------------------------------------------
// Machine driver

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MachineOptions {
    /// Check acyclicity and the graph invariants after every graph update.
    pub check_invariants: bool,
}

#[derive(Clone)]
struct MState {
    threads: Vec<ThreadRt>,
    machine: Machine,
    trace: Vec<Action>,
    notes: Vec<(usize, Note)>,
    graph: OnlineGraph,
    /// Per-thread interface actions, for the memo key.
    proj: Vec<Vec<Kind>>,
    /// Non-transactional interface actions in order, for the memo key.
    ntx: Vec<(ThreadId, Kind)>,
    vseq: Vec<u32>,
    cur_tx: Vec<Option<VertexKey>>,
    completed: Vec<VertexKey>,
    rt: BTreeSet<(VertexKey, VertexKey)>,
}

struct MachineDriver<'a> {
    p: &'a Program,
    b: Bounds,
    alg: Algorithm,
    opts: MachineOptions,
    seen: HashSet<u128>,
    index: HashMap<Vec<(ThreadId, Kind)>, usize>,
    out: ExploreResult,
}

impl MState {
    fn emit(&mut self, t: usize, kind: Kind) {
        push(&mut self.trace, t, kind);
        if kind.is_interface() {
            self.proj[t].push(kind);
        }
    }
}

impl MachineDriver<'_> {
    fn dfs(&mut self, mut s: MState) {
        run_locals(self.p, &self.b, &mut s.threads, &mut s.trace, None);
        let key = fingerprint(&(&s.threads, &s.machine, &s.proj, &s.ntx, &s.rt, &s.graph));
        if !self.seen.insert(key) {
            return;
        }
        self.out.states += 1;
        let mut moved = false;
        for t in 0..s.threads.len() {
            let code = &self.p.threads[t].code;
            let id = tid(t);
            match s.threads[t].next(code) {
                Next::Request(_, true) if s.machine.can_submit(id) => {
                    moved = true;
                    let mut c = s.clone();
                    self.tx_request(&mut c, t);
                    self.dfs(c);
                }
                Next::Request(_, false) if s.machine.nontx_enabled(id) => {
                    moved = true;
                    let mut c = s.clone();
                    self.nontx(&mut c, t);
                    self.dfs(c);
                }
                Next::Waiting(_) if s.machine.status(id) == Status::Ready => {
                    moved = true;
                    let mut c = s.clone();
                    self.step(&mut c, t);
                    self.dfs(c);
                }
                _ => {}
            }
        }
        if !moved {
            self.finish(s);
        }
    }

    fn tx_request(&mut self, s: &mut MState, t: usize) {
        let code = &self.p.threads[t].code;
        let k = s.threads[t].request(code);
        s.emit(t, k);
        if k == Kind::BeginTx {
            let key = VertexKey { thread: tid(t), seq: s.vseq[t] };
            s.vseq[t] += 1;
            for &c in &s.completed {
                s.rt.insert((c, key));
            }
            s.cur_tx[t] = Some(key);
        }
        s.machine.submit(tid(t), to_request(k)).expect("the interpreter issues legal requests");
        if s.machine.status(tid(t)) == Status::Ready {
            self.step(s, t);
        }
    }

    fn nontx(&mut self, s: &mut MState, t: usize) {
        let code = &self.p.threads[t].code;
        let k = s.threads[t].request(code);
        s.emit(t, k);
        s.ntx.push((tid(t), k));
        s.vseq[t] += 1;
        let mut effects = Vec::new();
        let resp = match k {
            Kind::Read(x) => Kind::Ret(s.machine.nontx_read(tid(t), x, &mut effects)),
            Kind::Write(x, v) => {
                s.machine.nontx_write(tid(t), x, v, &mut effects);
                Kind::RetUnit
            }
            other => unreachable!("{other} outside a transaction"),
        };
        s.emit(t, resp);
        s.ntx.push((tid(t), resp));
        s.threads[t].respond(code, resp, self.b.loop_bound);
        self.effects(s, t, effects);
    }

    fn step(&mut self, s: &mut MState, t: usize) {
        let mut effects = Vec::new();
        s.machine.step(tid(t), &mut effects);
        self.effects(s, t, effects);
    }

    fn effects(&mut self, s: &mut MState, t: usize, effects: Vec<Effect>) {
        let code = &self.p.threads[t].code;
        for e in effects {
            match e {
                Effect::Wb(x, v) => s.emit(t, Kind::Wb(x, v)),
                Effect::Respond(r) => {
                    let k = r.kind();
                    s.emit(t, k);
                    s.threads[t].respond(code, k, self.b.loop_bound);
                    if matches!(k, Kind::Committed | Kind::Aborted) {
                        if let Some(key) = s.cur_tx[t].take() {
                            s.completed.push(key);
                        }
                    }
                }
                Effect::Note(n) => {
                    s.notes.push((s.trace.len(), n.clone()));
                    if self.opts.check_invariants {
                        let h = history_of_trace(&s.trace);
                        for check in s.graph.update(&h, &n, self.alg) {
                            self.out.inv_failures.push(InvFailure {
                                trace: s.trace.clone(),
                                check,
                            });
                        }
                    } else {
                        s.graph.apply(&n);
                    }
                }
            }
        }
    }

    fn finish(&mut self, s: MState) {
        let end = end_of(&s.threads, self.p);
        let fin = (end == RunEnd::Terminal).then(|| FinalState {
            locals: s.threads.iter().map(|r| r.locals.clone()).collect(),
            memory: s.machine.memory(),
        });
        let run = Run {
            trace: s.trace,
            notes: s.notes,
            end,
        };
        self.out.record(&mut self.index, run, fin);
    }
}

/// Explores `p` against the step machine for `alg`.
pub fn explore(p: &Program, alg: Algorithm, bounds: Bounds, opts: MachineOptions) -> ExploreResult {
    let n = p.threads.len();
    let mut d = MachineDriver {
        p,
        b: bounds,
        alg,
        opts,
        seen: HashSet::new(),
        index: HashMap::new(),
        out: ExploreResult::default(),
    };
    d.dfs(MState {
        threads: fresh_threads(p),
        machine: Machine::new(alg, n as u32),
        trace: Vec::new(),
        notes: Vec::new(),
        graph: OnlineGraph::new(),
        proj: vec![Vec::new(); n],
        ntx: Vec::new(),
        vseq: vec![0; n],
        cur_tx: vec![None; n],
        completed: Vec::new(),
        rt: BTreeSet::new(),
    });
    d.out
}

// ---------------------------------------------------------------------------
// Atomic driver with indivisible units

#[derive(Clone)]
struct AState {
    threads: Vec<ThreadRt>,
    mem: Memory,
    trace: Vec<Action>,
}

struct AtomicDriver<'a> {
    p: &'a Program,
    b: Bounds,
    seen: HashSet<u128>,
    index: HashMap<Vec<(ThreadId, Kind)>, usize>,
    out: ExploreResult,
}

impl AtomicDriver<'_> {
    fn dfs(&mut self, mut s: AState) {
        run_locals(self.p, &self.b, &mut s.threads, &mut s.trace, None);
        let key = fingerprint(&(&s.threads, &s.mem, canonical(&s.trace)));
        if !self.seen.insert(key) {
            return;
        }
        self.out.states += 1;
        let mut moved = false;
        for t in 0..s.threads.len() {
            let code = &self.p.threads[t].code;
            match s.threads[t].next(code) {
                Next::Request(Kind::BeginTx, _) => {
                    moved = true;
                    // Aborted at the start.
                    let mut c = s.clone();
                    c.threads[t].request(code);
                    push(&mut c.trace, t, Kind::BeginTx);
                    c.threads[t].respond(code, Kind::Aborted, self.b.loop_bound);
                    push(&mut c.trace, t, Kind::Aborted);
                    self.dfs(c);
                    // Started and run alone.
                    let mut c = s.clone();
                    c.threads[t].request(code);
                    push(&mut c.trace, t, Kind::BeginTx);
                    c.threads[t].respond(code, Kind::Ok, self.b.loop_bound);
                    push(&mut c.trace, t, Kind::Ok);
                    self.body(c, t, BTreeMap::new());
                }
                Next::Request(k, false) => {
                    moved = true;
                    let mut c = s.clone();
                    c.threads[t].request(code);
                    push(&mut c.trace, t, k);
                    let resp = match k {
                        Kind::Read(x) => Kind::Ret(c.mem.get(x)),
                        Kind::Write(x, v) => {
                            c.mem.set(x, v);
                            Kind::RetUnit
                        }
                        other => unreachable!("{other} outside a transaction"),
                    };
                    c.threads[t].respond(code, resp, self.b.loop_bound);
                    push(&mut c.trace, t, resp);
                    self.dfs(c);
                }
                _ => {}
            }
        }
        if !moved {
            let end = end_of(&s.threads, self.p);
            let fin = (end == RunEnd::Terminal).then(|| FinalState {
                locals: s.threads.iter().map(|r| r.locals.clone()).collect(),
                memory: s.mem.iter().collect(),
            });
            let run = Run {
                trace: s.trace,
                notes: Vec::new(),
                end,
            };
            self.out.record(&mut self.index, run, fin);
        }
    }

    /// Continues the transaction of thread `t` alone. Every response may
    /// instead be an abort.
    fn body(&mut self, mut s: AState, t: usize, overlay: BTreeMap<Reg, i64>) {
        let code = &self.p.threads[t].code;
        run_locals(self.p, &self.b, &mut s.threads, &mut s.trace, Some(t));
        if !s.threads[t].in_tx() {
            return self.dfs(s);
        }
        let Next::Request(k, true) = s.threads[t].next(code) else {
            // Cut off by a bound inside the transaction.
            return self.dfs(s);
        };
        s.threads[t].request(code);
        push(&mut s.trace, t, k);

        let mut c = s.clone();
        c.threads[t].respond(code, Kind::Aborted, self.b.loop_bound);
        push(&mut c.trace, t, Kind::Aborted);
        self.dfs(c);

        let mut overlay = overlay;
        let resp = match k {
            Kind::Read(x) => Kind::Ret(overlay.get(&x).copied().unwrap_or_else(|| s.mem.get(x))),
            Kind::Write(x, v) => {
                overlay.insert(x, v);
                Kind::RetUnit
            }
            Kind::TryCommit => {
                for (&x, &v) in &overlay {
                    s.mem.set(x, v);
                }
                Kind::Committed
            }
            other => unreachable!("{other} inside a transaction"),
        };
        s.threads[t].respond(code, resp, self.b.loop_bound);
        push(&mut s.trace, t, resp);
        if resp == Kind::Committed {
            self.dfs(s);
        } else {
            self.body(s, t, overlay);
        }
    }
}

/// Explores `p` under the strongly atomic TM, running atomic blocks and
/// non-transactional accesses as indivisible units. A block may abort at
/// its start or in response to any of its requests.
pub fn explore_atomic(p: &Program, bounds: Bounds) -> ExploreResult {
    let mut d = AtomicDriver {
        p,
        b: bounds,
        seen: HashSet::new(),
        index: HashMap::new(),
        out: ExploreResult::default(),
    };
    d.dfs(AState {
        threads: fresh_threads(p),
        mem: Memory::default(),
        trace: Vec::new(),
    });
    d.out
}

// ---------------------------------------------------------------------------
// Exact driver

struct ExactDriver<'a> {
    p: &'a Program,
    b: Bounds,
    out: BTreeSet<Vec<(ThreadId, Kind)>>,
}

impl ExactDriver<'_> {
    fn dfs(&mut self, threads: Vec<ThreadRt>, trace: Vec<Action>) {
        if !is_atomic(&history_of_trace(&trace)) {
            return;
        }
        self.out.insert(canonical(&trace));
        let written: BTreeSet<i64> = std::iter::once(0)
            .chain(trace.iter().filter_map(|a| match a.kind {
                Kind::Write(_, v) => Some(v),
                _ => None,
            }))
            .collect();
        let lb = self.b.loop_bound;
        let depth = self.b.depth;
        for t in 0..threads.len() {
            let code = &self.p.threads[t].code;
            let mut rt = threads[t].clone();
            rt.settle(code, lb);
            let next = rt.next(code);
            let mut go = |f: &mut dyn FnMut(&mut ThreadRt, &mut Vec<Action>)| {
                let mut ts = threads.clone();
                let mut tr = trace.clone();
                ts[t] = rt.clone();
                f(&mut ts[t], &mut tr);
                self.dfs(ts, tr);
            };
            match next {
                Next::Local => go(&mut |r, tr| {
                    let tag = r.local_step(code, lb);
                    push(tr, t, Kind::Prim(tag));
                }),
                Next::Request(_, _) if rt.iface >= depth => {}
                Next::Request(_, true) => go(&mut |r, tr| {
                    let k = r.request(code);
                    push(tr, t, k);
                }),
                Next::Request(k, false) => {
                    let resps: Vec<Kind> = match k {
                        Kind::Read(_) => written.iter().map(|&v| Kind::Ret(v)).collect(),
                        _ => vec![Kind::RetUnit],
                    };
                    for resp in resps {
                        go(&mut |r, tr| {
                            r.request(code);
                            push(tr, t, k);
                            r.respond(code, resp, lb);
                            push(tr, t, resp);
                        });
                    }
                }
                Next::Waiting(k) => {
                    let mut resps = vec![Kind::Aborted];
                    match k {
                        Kind::BeginTx => resps.push(Kind::Ok),
                        Kind::Read(_) => resps.extend(written.iter().map(|&v| Kind::Ret(v))),
                        Kind::Write(..) => resps.push(Kind::RetUnit),
                        Kind::TryCommit => resps.push(Kind::Committed),
                        _ => unreachable!(),
                    }
                    for resp in resps {
                        go(&mut |r, tr| {
                            r.respond(code, resp, lb);
                            push(tr, t, resp);
                        });
                    }
                }
                Next::Done | Next::Pruned => {}
            }
        }
    }
}

/// Every trace, prefixes included, of `p` under the strongly atomic TM,
/// with individual actions as the unit of interleaving except that a
/// non-transactional request is immediately followed by its response.
pub fn explore_exact(p: &Program, bounds: Bounds) -> BTreeSet<Vec<(ThreadId, Kind)>> {
    let mut d = ExactDriver {
        p,
        b: bounds,
        out: BTreeSet::new(),
    };
    d.dfs(fresh_threads(p), Vec::new());
    d.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_program;
    use txlab_core::model::{ABORTED, COMMITTED};

    fn finals_of(r: &ExploreResult, p: &Program, l: &str) -> BTreeSet<(i64, i64)> {
        let l = p.local(l).unwrap();
        let x = Reg::new("x");
        r.finals.keys().map(|f| (f.local(l), f.memory.get(&x).copied().unwrap_or(0))).collect()
    }

    #[test]
    fn solo_block_under_global_lock() {
        let p = parse_program("thread a { l = atomic { x.write(1); }; }").unwrap();
        let r = explore(&p, Algorithm::GlobalLock, Bounds::default(), MachineOptions::default());
        assert_eq!(finals_of(&r, &p, "l"), [(COMMITTED, 1)].into());
        assert!(!r.partial);
        let r = explore_atomic(&p, Bounds::default());
        assert_eq!(finals_of(&r, &p, "l"), [(COMMITTED, 1), (ABORTED, 0)].into());
    }

    #[test]
    fn aborted_blocks_roll_back_locals() {
        let p = parse_program("thread a { l = atomic { m = 5; v = x.read(); m = v + 7; x.write(m); }; }").unwrap();
        let r = explore_atomic(&p, Bounds::default());
        let (l, m) = (p.local("l").unwrap(), p.local("m").unwrap());
        assert!(r.finals.keys().any(|f| f.local(l) == ABORTED));
        for f in r.finals.keys() {
            let expected = if f.local(l) == ABORTED { 0 } else { 7 };
            assert_eq!(f.local(m), expected);
        }
    }

    #[test]
    fn loop_bound_marks_results_partial() {
        let p = parse_program("thread a { do { v = x.read(); } while (v == 0); }").unwrap();
        let b = Bounds { loop_bound: 2, ..Bounds::default() };
        let r = explore_atomic(&p, b);
        assert!(r.partial);
        assert!(r.finals.is_empty());
        assert_eq!(r.runs.len(), 1);
        let reads = r.runs[0].trace.iter().filter(|a| matches!(a.kind, Kind::Read(_))).count();
        assert_eq!(reads, 2);
    }

    #[test]
    fn depth_bound_cuts_threads() {
        let p = parse_program("thread a { x.write(1); x.write(2); x.write(3); }").unwrap();
        let b = Bounds { depth: 4, ..Bounds::default() };
        let r = explore(&p, Algorithm::Tl2, b, MachineOptions::default());
        assert!(r.partial);
        assert_eq!(r.runs[0].end, RunEnd::Pruned);
        assert_eq!(r.runs[0].history().len(), 4);
    }

    #[test]
    fn exact_traces_are_prefix_closed() {
        let p = parse_program("thread a { l = atomic { x.write(1); }; } thread b { v = x.read(); }").unwrap();
        let traces = explore_exact(&p, Bounds::default());
        for t in &traces {
            for k in 0..t.len() {
                let prefix = &t[..k];
                let pending_nontx = matches!(prefix.last(), Some((2, Kind::Read(_))));
                assert!(pending_nontx || traces.contains(prefix), "{prefix:?}");
            }
        }
        // The read sees 0 or 1, never a value the program does not write.
        assert!(traces.iter().flatten().all(|(_, k)| !matches!(k, Kind::Ret(v) if *v > 1)));
    }

    #[test]
    fn machine_runs_are_deterministic() {
        let p = parse_program("thread a { l = atomic { x.write(1); }; } thread b { m = atomic { v = x.read(); }; }").unwrap();
        let a = explore(&p, Algorithm::Tl2, Bounds::default(), MachineOptions::default());
        let b = explore(&p, Algorithm::Tl2, Bounds::default(), MachineOptions::default());
        assert_eq!(a.runs, b.runs);
        assert_eq!(a.finals, b.finals);
    }
}
