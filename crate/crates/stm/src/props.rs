//! Bounded checks of progress and read-visibility properties, and the
//! write-back property of solo atomic blocks.
//!
//! The checks drive a machine with a generic client: two threads issuing
//! every legal request on registers `x` and `y` up to a bounded number of
//! requests, with every interleaving of machine steps.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use txlab_core::{Action, Kind, Reg, ThreadId};

use crate::graph::Execution;
use crate::{Algorithm, Effect, Machine, Request, Response, Status};

/// One scheduling decision of the generic client.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClientOp {
    Submit(ThreadId, Request),
    Step(ThreadId),
    NtxRead(ThreadId, Reg),
    NtxWrite(ThreadId, Reg, i64),
}

impl fmt::Display for ClientOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ClientOp::Submit(t, r) => write!(f, "{t}: {}", r.kind()),
            ClientOp::Step(t) => write!(f, "{t}: step"),
            ClientOp::NtxRead(t, x) => write!(f, "{t}: {x} (non-tx read)"),
            ClientOp::NtxWrite(t, x, v) => write!(f, "{t}: write({x},{v}) (non-tx)"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropReport {
    pub holds: bool,
    /// A schedule reaching a state where the property fails.
    pub witness: Option<Vec<ClientOp>>,
    pub states: usize,
}

/// Requests issued by the current transaction of a thread.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
struct Footprint {
    reads: BTreeSet<Reg>,
    writes: BTreeSet<Reg>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct ClientState {
    machine: Machine,
    footprints: Vec<Footprint>,
}

fn registers() -> [Reg; 2] {
    [Reg::new("x"), Reg::new("y")]
}

/// Applies `op`, returning the response it produced, if any.
fn apply(m: &mut Machine, op: ClientOp) -> Option<Response> {
    let mut out = Vec::new();
    match op {
        ClientOp::Submit(t, r) => m.submit(t, r).expect("legal request"),
        ClientOp::Step(t) => m.step(t, &mut out),
        ClientOp::NtxRead(t, x) => {
            m.nontx_read(t, x, &mut out);
        }
        ClientOp::NtxWrite(t, x, v) => m.nontx_write(t, x, v, &mut out),
    }
    out.into_iter().find_map(|e| match e {
        Effect::Respond(r) => Some(r),
        _ => None,
    })
}

/// Moves available to the generic client on `client_threads`.
fn moves(m: &Machine, client_threads: u32, budget: usize) -> Vec<ClientOp> {
    let mut out = Vec::new();
    for t in 1..=client_threads {
        if m.status(t) == Status::Ready {
            out.push(ClientOp::Step(t));
        }
        if budget == 0 {
            continue;
        }
        if m.can_submit(t) {
            if m.in_tx(t) {
                for x in registers() {
                    out.push(ClientOp::Submit(t, Request::Read(x)));
                    out.push(ClientOp::Submit(t, Request::Write(x, 1)));
                }
                out.push(ClientOp::Submit(t, Request::Commit));
            } else {
                out.push(ClientOp::Submit(t, Request::Begin));
            }
        }
        if m.nontx_enabled(t) {
            for x in registers() {
                out.push(ClientOp::NtxRead(t, x));
                out.push(ClientOp::NtxWrite(t, x, 1));
            }
        }
    }
    out
}

/// Breadth-first search over client schedules using at most `depth`
/// requests, so witnesses are as short as possible. `visit` sees every
/// distinct state once, with a function rebuilding the schedule that
/// reached it, and may stop the search by returning `false`. Footprints are
/// kept only when `footprints` is set, since they multiply the states.
fn explore(
    algorithm: Algorithm,
    threads: u32,
    client_threads: u32,
    depth: usize,
    footprints: bool,
    mut visit: impl FnMut(&ClientState, &dyn Fn() -> Vec<ClientOp>) -> bool,
) -> usize {
    let start = ClientState {
        machine: Machine::new(algorithm, threads),
        footprints: vec![Footprint::default(); threads as usize],
    };
    // Schedule tree: parent node and the op leading here.
    let mut nodes: Vec<(usize, Option<ClientOp>)> = vec![(0, None)];
    let path_to = |nodes: &[(usize, Option<ClientOp>)], mut i: usize| {
        let mut p = Vec::new();
        while let (parent, Some(op)) = nodes[i] {
            p.push(op);
            i = parent;
        }
        p.reverse();
        p
    };
    // Largest remaining budget each state was reached with.
    let mut best: HashMap<ClientState, usize> = HashMap::new();
    let mut queue = VecDeque::from([(start, depth, 0usize)]);
    while let Some((s, budget, node)) = queue.pop_front() {
        match best.get_mut(&s) {
            Some(b) if *b >= budget => continue,
            Some(b) => *b = budget,
            None => {
                best.insert(s.clone(), budget);
                if !visit(&s, &|| path_to(&nodes, node)) {
                    break;
                }
            }
        }
        for op in moves(&s.machine, client_threads, budget) {
            let mut next = s.clone();
            let cost = match op {
                ClientOp::Step(_) => 0,
                _ => 1,
            };
            if let (ClientOp::Submit(t, r), true) = (op, footprints) {
                let fp = &mut next.footprints[(t - 1) as usize];
                match r {
                    Request::Begin => *fp = Footprint::default(),
                    Request::Read(x) => {
                        fp.reads.insert(x);
                    }
                    Request::Write(x, _) => {
                        fp.writes.insert(x);
                    }
                    Request::Commit => {}
                }
            }
            apply(&mut next.machine, op);
            next.machine = next.machine.canonical();
            if best.get(&next).is_some_and(|&b| b >= budget - cost) {
                continue;
            }
            nodes.push((node, Some(op)));
            queue.push_back((next, budget - cost, nodes.len() - 1));
        }
    }
    best.len()
}

/// Threads with an uncompleted transaction, counting a pending `begintx`.
fn uncompleted(m: &Machine) -> Vec<ThreadId> {
    (1..=m.threads())
        .filter(|&t| m.in_tx(t) || m.pending(t) == Some(Request::Begin))
        .collect()
}

/// Steps `t` alone until its pending request is answered. Returns `None`
/// if it blocks or runs for too long.
fn run_solo(m: &mut Machine, t: ThreadId, path: &mut Vec<ClientOp>) -> Option<Response> {
    for _ in 0..10_000 {
        if m.status(t) != Status::Ready {
            return None;
        }
        path.push(ClientOp::Step(t));
        if let Some(r) = apply(m, ClientOp::Step(t)) {
            return Some(r);
        }
    }
    None
}

/// Whenever at most one transaction is uncompleted and it has a pending
/// request, stepping that thread alone must produce a response.
pub fn check_progressive_bounded(algorithm: Algorithm, depth: usize) -> PropReport {
    let mut witness = None;
    let states = explore(algorithm, 2, 2, depth, false, |s, path| {
        let open = uncompleted(&s.machine);
        let [t] = open[..] else { return true };
        if s.machine.pending(t).is_none() {
            return true;
        }
        let mut m = s.machine.clone();
        let mut p = path();
        if run_solo(&mut m, t, &mut p).is_none() {
            witness = Some(p);
            return false;
        }
        true
    });
    PropReport {
        holds: witness.is_none(),
        witness,
        states,
    }
}

/// Whenever at most one transaction `T` is uncompleted, a fresh transaction
/// `T'` on another thread that stays clear of `T`'s writes (so it can only
/// conflict with `T`'s reads) must get a non-aborting answer to every
/// request when run alone.
pub fn check_invisible_reads_bounded(algorithm: Algorithm, depth: usize) -> PropReport {
    let mut witness = None;
    let states = explore(algorithm, 3, 2, depth, true, |s, path| {
        let open = uncompleted(&s.machine);
        if open.len() > 1 {
            return true;
        }
        let off_limits: BTreeSet<Reg> = open
            .first()
            .map(|&t| s.footprints[(t - 1) as usize].writes.clone())
            .unwrap_or_default();
        let allowed: Vec<Reg> = registers().into_iter().filter(|x| !off_limits.contains(x)).collect();
        match probe_reader(&s.machine, &allowed, path) {
            Some(p) => {
                witness = Some(p);
                false
            }
            None => true,
        }
    });
    PropReport {
        holds: witness.is_none(),
        witness,
        states,
    }
}

/// Runs every `T'` of up to two accesses on `allowed` on thread 3. Returns
/// the schedule of the first one that blocks or aborts.
fn probe_reader(m: &Machine, allowed: &[Reg], path: &dyn Fn() -> Vec<ClientOp>) -> Option<Vec<ClientOp>> {
    let mut ops: Vec<Request> = Vec::new();
    for &x in allowed {
        ops.push(Request::Read(x));
        ops.push(Request::Write(x, 2));
    }
    let mut scripts: Vec<Vec<Request>> = vec![vec![]];
    for &a in &ops {
        scripts.push(vec![a]);
        for &b in &ops {
            scripts.push(vec![a, b]);
        }
    }
    for body in scripts {
        let mut m = m.clone();
        let mut p = Vec::new();
        let requests = std::iter::once(Request::Begin).chain(body).chain([Request::Commit]);
        for r in requests {
            p.push(ClientOp::Submit(3, r));
            m.submit(3, r).expect("legal request");
            match run_solo(&mut m, 3, &mut p) {
                Some(Response::Aborted) | None => return Some(path().into_iter().chain(p).collect()),
                Some(_) => {}
            }
        }
    }
    None
}

/// Records the actions and notes of a machine run.
#[derive(Clone, Debug)]
pub struct Recorder {
    pub machine: Machine,
    pub execution: Execution,
    next_id: u64,
}

impl Recorder {
    pub fn new(algorithm: Algorithm, threads: u32) -> Recorder {
        Recorder {
            machine: Machine::new(algorithm, threads),
            execution: Execution::default(),
            next_id: 1,
        }
    }

    fn push(&mut self, t: ThreadId, kind: Kind) {
        self.execution.actions.push(Action::new(self.next_id, t, kind));
        self.next_id += 1;
    }

    fn record(&mut self, t: ThreadId, out: Vec<Effect>) -> Option<Response> {
        let mut resp = None;
        for e in out {
            match e {
                Effect::Wb(x, v) => self.push(t, Kind::Wb(x, v)),
                Effect::Respond(r) => {
                    self.push(t, r.kind());
                    resp = Some(r);
                }
                Effect::Note(n) => self.execution.notes.push((self.execution.actions.len(), n)),
            }
        }
        resp
    }

    pub fn submit(&mut self, t: ThreadId, r: Request) {
        self.machine.submit(t, r).expect("legal request");
        self.push(t, r.kind());
    }

    /// Takes one step of `t`, returning the response it produced, if any.
    pub fn step(&mut self, t: ThreadId) -> Option<Response> {
        let mut out = Vec::new();
        self.machine.step(t, &mut out);
        self.record(t, out)
    }

    /// Submits `r` and steps `t` alone until it is answered.
    pub fn solo(&mut self, t: ThreadId, r: Request) -> Option<Response> {
        self.submit(t, r);
        while self.machine.status(t) == Status::Ready {
            if let Some(resp) = self.step(t) {
                return Some(resp);
            }
        }
        None
    }

    pub fn nontx_read(&mut self, t: ThreadId, x: Reg) -> i64 {
        self.push(t, Kind::Read(x));
        let mut out = Vec::new();
        let v = self.machine.nontx_read(t, x, &mut out);
        self.push(t, Kind::Ret(v));
        self.record(t, out);
        v
    }

    pub fn nontx_write(&mut self, t: ThreadId, x: Reg, v: i64) {
        self.push(t, Kind::Write(x, v));
        let mut out = Vec::new();
        self.machine.nontx_write(t, x, v, &mut out);
        self.push(t, Kind::RetUnit);
        self.record(t, out);
    }
}

/// Runs one atomic block alone: `begintx`, `body`, `trycommit`.
pub fn solo_block(algorithm: Algorithm, body: &[Request]) -> (Execution, Option<Response>) {
    let mut rec = Recorder::new(algorithm, 1);
    let mut last = rec.solo(1, Request::Begin);
    for &r in body {
        if last == Some(Response::Aborted) {
            break;
        }
        last = rec.solo(1, r);
    }
    if last != Some(Response::Aborted) {
        last = rec.solo(1, Request::Commit);
    }
    (rec.execution, last)
}

/// Problems with the write-backs of a committed solo block: a register
/// whose last written value is never written back, or a write-back that
/// precedes the first write request to its register.
pub fn write_back_violations(execution: &Execution) -> Vec<String> {
    let acts = &execution.actions;
    let mut out = Vec::new();
    let mut last: std::collections::BTreeMap<Reg, i64> = Default::default();
    let mut first: std::collections::BTreeMap<Reg, usize> = Default::default();
    for (i, a) in acts.iter().enumerate() {
        if let Kind::Write(x, v) = a.kind {
            last.insert(x, v);
            first.entry(x).or_insert(i);
        }
    }
    for (&x, &v) in &last {
        if !acts.iter().any(|a| a.kind == Kind::Wb(x, v)) {
            out.push(format!("no wb({x},{v}) for the last write to {x}"));
        }
    }
    for (i, a) in acts.iter().enumerate() {
        if let Kind::Wb(x, _) = a.kind {
            if first.get(&x).is_none_or(|&f| i < f) {
                out.push(format!("wb to {x} at {i} precedes the first write request to {x}"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn progressiveness() {
        for alg in Algorithm::ALL {
            let r = check_progressive_bounded(alg, 4);
            assert!(r.holds, "{alg}: {:?}", r.witness);
        }
    }

    #[test]
    fn invisible_reads() {
        assert!(check_invisible_reads_bounded(Algorithm::Tl2, 4).holds);
        assert!(check_invisible_reads_bounded(Algorithm::FencedTl2, 4).holds);
        let r = check_invisible_reads_bounded(Algorithm::TwoPl, 4);
        assert!(!r.holds);
        // T' gets stuck on an access to a register T holds locked.
        let last = r.witness.unwrap().into_iter().rev().find(|op| matches!(op, ClientOp::Submit(..)));
        assert!(matches!(last, Some(ClientOp::Submit(3, Request::Read(_) | Request::Write(..)))), "{last:?}");
        assert!(!check_invisible_reads_bounded(Algorithm::GlobalLock, 4).holds);
    }

    #[test]
    fn solo_blocks_write_back() {
        let (x, y) = (Reg::new("x"), Reg::new("y"));
        let body = [Request::Write(x, 1), Request::Read(y), Request::Write(x, 2), Request::Write(y, 3)];
        for alg in [Algorithm::FencedTl2, Algorithm::TwoPl] {
            let (ex, r) = solo_block(alg, &body);
            assert_eq!(r, Some(Response::Committed));
            assert!(write_back_violations(&ex).is_empty(), "{alg}");
            assert!(ex.stray_write_backs().is_empty());
        }
    }

    #[test]
    fn missing_write_back_is_reported() {
        let x = Reg::new("x");
        let ex = Execution {
            actions: vec![
                Action::new(1, 1, Kind::BeginTx),
                Action::new(2, 1, Kind::Ok),
                Action::new(3, 1, Kind::Wb(x, 0)),
                Action::new(4, 1, Kind::Write(x, 1)),
                Action::new(5, 1, Kind::RetUnit),
            ],
            notes: vec![],
        };
        assert_eq!(write_back_violations(&ex).len(), 2);
    }
}
