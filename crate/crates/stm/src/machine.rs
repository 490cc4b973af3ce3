use std::collections::{BTreeMap, BTreeSet};

use txlab_core::{Reg, ThreadId};

use crate::{Algorithm, Effect, IllegalRequest, Note, Request, Response, Status, VertexKey};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
struct Cell {
    value: i64,
    /// The vertex whose write the cell currently holds.
    writer: Option<VertexKey>,
    version: u64,
    lock: Option<ThreadId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct TxDesc {
    key: VertexKey,
    /// Start order, used to pick the younger transaction on deadlock.
    age: u64,
    rv: u64,
    wv: u64,
    reads: BTreeMap<Reg, i64>,
    writes: BTreeMap<Reg, i64>,
    /// Original value and writer of every register written in place.
    undo: Vec<(Reg, i64, Option<VertexKey>)>,
    locks: BTreeSet<Reg>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
enum Phase {
    #[default]
    Start,
    ReadMem(Reg),
    WriteMem(Reg, i64),
    Lock(usize),
    Clock,
    Validate(usize),
    WriteBack(usize),
    Release,
    /// Undo entries still to restore before the abort response.
    Rollback(usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
struct Slot {
    pending: Option<Request>,
    phase: Phase,
    tx: Option<TxDesc>,
    next_seq: u32,
    retries: u8,
    /// Transactions the thread's fence still waits for.
    fence: Vec<VertexKey>,
}

/// Shared TM state plus one descriptor per client thread (threads are
/// numbered from 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Machine {
    algorithm: Algorithm,
    mem: BTreeMap<Reg, Cell>,
    clock: u64,
    global: Option<ThreadId>,
    ages: u64,
    slots: Vec<Slot>,
}

/// Lock acquisition attempts before a TL2 transaction gives up.
const TL2_RETRIES: u8 = 1;

impl Machine {
    pub fn new(algorithm: Algorithm, threads: u32) -> Machine {
        Machine {
            algorithm,
            mem: BTreeMap::new(),
            clock: 0,
            global: None,
            ages: 0,
            slots: vec![Slot::default(); threads as usize],
        }
    }

    /// A copy with versions, ages and per-thread sequence numbers renumbered
    /// by rank and writer annotations dropped. These values only enter
    /// comparisons and notes, and each counter is the largest of its kind, so
    /// machines with equal canonical forms give the same responses to every
    /// future schedule.
    pub fn canonical(&self) -> Machine {
        let mut m = self.clone();
        // 0 stays 0: it is the initial version and clock, the placeholder
        // write version and the age of no transaction.
        let mut versions = BTreeSet::from([0, m.clock]);
        let mut ages = BTreeSet::from([0, m.ages]);
        let mut seqs: Vec<BTreeSet<u32>> = m.slots.iter().map(|s| BTreeSet::from([s.next_seq])).collect();
        for c in m.mem.values() {
            versions.insert(c.version);
        }
        for s in &m.slots {
            if let Some(tx) = &s.tx {
                versions.extend([tx.rv, tx.wv]);
                ages.insert(tx.age);
                seqs[(tx.key.thread - 1) as usize].insert(tx.key.seq);
            }
            for k in &s.fence {
                seqs[(k.thread - 1) as usize].insert(k.seq);
            }
        }
        let rank64 = |set: &BTreeSet<u64>, v: u64| set.range(..v).count() as u64;
        let rank_key = |k: VertexKey| VertexKey {
            thread: k.thread,
            seq: seqs[(k.thread - 1) as usize].range(..k.seq).count() as u32,
        };
        m.clock = rank64(&versions, m.clock);
        m.ages = rank64(&ages, m.ages);
        for c in m.mem.values_mut() {
            c.version = rank64(&versions, c.version);
            c.writer = None;
        }
        for (i, s) in m.slots.iter_mut().enumerate() {
            s.next_seq = seqs[i].range(..s.next_seq).count() as u32;
            if let Some(tx) = &mut s.tx {
                tx.rv = rank64(&versions, tx.rv);
                tx.wv = rank64(&versions, tx.wv);
                tx.age = rank64(&ages, tx.age);
                tx.key = rank_key(tx.key);
                for u in &mut tx.undo {
                    u.2 = None;
                }
            }
            for k in &mut s.fence {
                *k = rank_key(*k);
            }
        }
        m
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn threads(&self) -> u32 {
        self.slots.len() as u32
    }

    fn slot(&self, t: ThreadId) -> &Slot {
        &self.slots[(t - 1) as usize]
    }

    fn slot_mut(&mut self, t: ThreadId) -> &mut Slot {
        &mut self.slots[(t - 1) as usize]
    }

    fn tx_mut(&mut self, t: ThreadId) -> &mut TxDesc {
        self.slot_mut(t).tx.as_mut().expect("transaction in progress")
    }

    fn cell(&self, x: Reg) -> Cell {
        self.mem.get(&x).cloned().unwrap_or_default()
    }

    fn cell_mut(&mut self, x: Reg) -> &mut Cell {
        self.mem.entry(x).or_default()
    }

    /// Current memory contents, omitting registers that still hold 0.
    pub fn memory(&self) -> BTreeMap<Reg, i64> {
        self.mem
            .iter()
            .filter(|(_, c)| c.value != 0)
            .map(|(&x, c)| (x, c.value))
            .collect()
    }

    pub fn value(&self, x: Reg) -> i64 {
        self.cell(x).value
    }

    pub fn in_tx(&self, t: ThreadId) -> bool {
        self.slot(t).tx.is_some()
    }

    pub fn pending(&self, t: ThreadId) -> Option<Request> {
        self.slot(t).pending
    }

    /// Keys of the transactions currently in progress.
    pub fn active_txs(&self) -> Vec<VertexKey> {
        self.slots.iter().filter_map(|s| s.tx.as_ref().map(|d| d.key)).collect()
    }

    fn is_active(&self, k: VertexKey) -> bool {
        self.slots
            .get((k.thread - 1) as usize)
            .and_then(|s| s.tx.as_ref())
            .is_some_and(|d| d.key == k)
    }

    pub fn fence_pending(&self, t: ThreadId) -> bool {
        self.slot(t).fence.iter().any(|&k| self.is_active(k))
    }

    pub fn can_submit(&self, t: ThreadId) -> bool {
        self.slot(t).pending.is_none() && !self.fence_pending(t)
    }

    pub fn submit(&mut self, t: ThreadId, request: Request) -> Result<(), IllegalRequest> {
        if t == 0 || t as usize > self.slots.len() {
            return Err(IllegalRequest::NoSuchThread(t));
        }
        if self.slot(t).pending.is_some() {
            return Err(IllegalRequest::Pending(t));
        }
        if self.fence_pending(t) {
            return Err(IllegalRequest::Fenced(t));
        }
        let in_tx = self.in_tx(t);
        match (request, in_tx) {
            (Request::Begin, true) => {
                return Err(IllegalRequest::Phase {
                    thread: t,
                    request,
                    where_: "inside a transaction",
                })
            }
            (Request::Read(_) | Request::Write(..) | Request::Commit, false) => {
                return Err(IllegalRequest::Phase {
                    thread: t,
                    request,
                    where_: "outside a transaction",
                })
            }
            _ => {}
        }
        let s = self.slot_mut(t);
        s.pending = Some(request);
        s.phase = Phase::Start;
        s.retries = 0;
        Ok(())
    }

    pub fn nontx_enabled(&self, t: ThreadId) -> bool {
        let s = self.slot(t);
        s.pending.is_none()
            && s.tx.is_none()
            && !self.fence_pending(t)
            && !(self.algorithm == Algorithm::GlobalLock && self.global.is_some_and(|g| g != t))
    }

    fn alloc(&mut self, t: ThreadId) -> VertexKey {
        let s = self.slot_mut(t);
        let key = VertexKey { thread: t, seq: s.next_seq };
        s.next_seq += 1;
        key
    }

    /// A non-transactional read, performed as one step.
    pub fn nontx_read(&mut self, t: ThreadId, x: Reg, out: &mut Vec<Effect>) -> i64 {
        debug_assert!(self.nontx_enabled(t));
        let access = self.alloc(t);
        let c = self.cell(x);
        out.push(Effect::Note(Note::NtxRead { access, reg: x, src: c.writer }));
        c.value
    }

    /// A non-transactional write, performed as one step.
    pub fn nontx_write(&mut self, t: ThreadId, x: Reg, v: i64, out: &mut Vec<Effect>) {
        debug_assert!(self.nontx_enabled(t));
        let access = self.alloc(t);
        let c = self.cell_mut(x);
        c.value = v;
        c.writer = Some(access);
        out.push(Effect::Note(Note::NtxWrite { access, reg: x }));
    }

    pub fn status(&self, t: ThreadId) -> Status {
        let s = self.slot(t);
        let Some(req) = s.pending else {
            return Status::Idle;
        };
        match self.algorithm {
            Algorithm::Tl2 | Algorithm::FencedTl2 => Status::Ready,
            Algorithm::GlobalLock => {
                if req == Request::Begin && self.global.is_some_and(|g| g != t) {
                    Status::Blocked
                } else {
                    Status::Ready
                }
            }
            Algorithm::TwoPl => {
                if self.waits_for(t).is_none() || self.deadlock_victim(t) {
                    Status::Ready
                } else {
                    Status::Blocked
                }
            }
        }
    }

    /// The thread holding the lock a 2PL request is waiting for.
    fn waits_for(&self, t: ThreadId) -> Option<ThreadId> {
        let s = self.slot(t);
        if s.phase != Phase::Start {
            return None;
        }
        let tx = s.tx.as_ref()?;
        let x = match s.pending? {
            Request::Read(x) if !tx.writes.contains_key(&x) && !tx.reads.contains_key(&x) => x,
            Request::Write(x, _) if !tx.locks.contains(&x) => x,
            _ => return None,
        };
        self.cell(x).lock.filter(|&h| h != t)
    }

    /// Whether `t` is on a wait-for cycle and is its youngest member.
    fn deadlock_victim(&self, t: ThreadId) -> bool {
        let mut cycle = vec![t];
        let mut u = t;
        loop {
            let Some(next) = self.waits_for(u) else {
                return false;
            };
            if next == t {
                break;
            }
            if cycle.contains(&next) {
                return false;
            }
            cycle.push(next);
            u = next;
        }
        let age = |u: ThreadId| self.slot(u).tx.as_ref().map_or(0, |d| d.age);
        cycle.iter().max_by_key(|&&u| age(u)) == Some(&t)
    }

    /// Takes one micro-step for thread `t`, which must be [`Status::Ready`].
    pub fn step(&mut self, t: ThreadId, out: &mut Vec<Effect>) {
        assert_eq!(self.status(t), Status::Ready, "thread {t} cannot step");
        match self.algorithm {
            Algorithm::Tl2 | Algorithm::FencedTl2 => self.step_tl2(t, out),
            Algorithm::TwoPl => self.step_2pl(t, out),
            Algorithm::GlobalLock => self.step_global(t, out),
        }
    }

    fn begin(&mut self, t: ThreadId, out: &mut Vec<Effect>) {
        let key = self.alloc(t);
        self.ages += 1;
        let tx = TxDesc {
            key,
            age: self.ages,
            rv: self.clock,
            wv: 0,
            reads: BTreeMap::new(),
            writes: BTreeMap::new(),
            undo: Vec::new(),
            locks: BTreeSet::new(),
        };
        self.slot_mut(t).tx = Some(tx);
        self.respond(t, Response::Ok, out);
        out.push(Effect::Note(Note::TxInit { tx: key }));
    }

    fn respond(&mut self, t: ThreadId, r: Response, out: &mut Vec<Effect>) {
        let s = self.slot_mut(t);
        s.pending = None;
        s.phase = Phase::Start;
        s.retries = 0;
        out.push(Effect::Respond(r));
    }

    /// Ends the transaction of `t` with `r`, releasing its locks.
    fn finish(&mut self, t: ThreadId, r: Response, out: &mut Vec<Effect>) {
        let tx = self.slot_mut(t).tx.take().expect("transaction in progress");
        for x in &tx.locks {
            self.cell_mut(*x).lock = None;
        }
        if self.algorithm == Algorithm::GlobalLock {
            self.global = None;
        }
        if self.algorithm == Algorithm::FencedTl2 {
            let others = self.active_txs();
            self.slot_mut(t).fence = others;
        }
        self.respond(t, r, out);
    }

    fn step_tl2(&mut self, t: ThreadId, out: &mut Vec<Effect>) {
        let s = self.slot(t);
        let req = s.pending.expect("pending request");
        let mut phase = s.phase;
        let tx = s.tx.clone();
        match req {
            Request::Begin => {
                self.begin(t, out);
                self.slot_mut(t).tx.as_mut().expect("begun").rv = self.clock;
            }
            Request::Read(x) => {
                let tx = tx.expect("in transaction");
                if let Some(&v) = tx.writes.get(&x) {
                    self.respond(t, Response::Ret(v), out);
                    return;
                }
                let c = self.cell(x);
                if c.lock.is_some_and(|h| h != t) {
                    self.retry_or_abort(t, out);
                } else if c.version > tx.rv {
                    self.finish(t, Response::Aborted, out);
                } else {
                    self.tx_mut(t).reads.insert(x, c.value);
                    self.respond(t, Response::Ret(c.value), out);
                    out.push(Effect::Note(Note::TxRead { tx: tx.key, reg: x, src: c.writer }));
                }
            }
            Request::Write(x, v) => {
                self.tx_mut(t).writes.insert(x, v);
                self.respond(t, Response::RetUnit, out);
            }
            Request::Commit => {
                let tx = tx.expect("in transaction");
                let wregs: Vec<Reg> = tx.writes.keys().copied().collect();
                let rregs: Vec<Reg> = tx.reads.keys().copied().collect();
                if phase == Phase::Start {
                    if wregs.is_empty() {
                        self.finish(t, Response::Committed, out);
                        return;
                    }
                    phase = Phase::Lock(0);
                }
                match phase {
                    Phase::Lock(i) => {
                        let x = wregs[i];
                        match self.cell(x).lock {
                            Some(h) if h != t => self.retry_or_abort(t, out),
                            _ => {
                                self.cell_mut(x).lock = Some(t);
                                self.tx_mut(t).locks.insert(x);
                                let s = self.slot_mut(t);
                                s.retries = 0;
                                s.phase = if i + 1 == wregs.len() { Phase::Clock } else { Phase::Lock(i + 1) };
                            }
                        }
                    }
                    Phase::Clock => {
                        self.clock += 1;
                        self.tx_mut(t).wv = self.clock;
                        if rregs.is_empty() {
                            out.push(Effect::Note(Note::TxWrite { tx: tx.key, regs: wregs }));
                            self.slot_mut(t).phase = Phase::WriteBack(0);
                        } else {
                            self.slot_mut(t).phase = Phase::Validate(0);
                        }
                    }
                    Phase::Validate(i) => {
                        let c = self.cell(rregs[i]);
                        if c.lock.is_some_and(|h| h != t) || c.version > tx.rv {
                            self.finish(t, Response::Aborted, out);
                        } else if i + 1 == rregs.len() {
                            out.push(Effect::Note(Note::TxWrite { tx: tx.key, regs: wregs }));
                            self.slot_mut(t).phase = Phase::WriteBack(0);
                        } else {
                            self.slot_mut(t).phase = Phase::Validate(i + 1);
                        }
                    }
                    Phase::WriteBack(i) => {
                        let x = wregs[i];
                        let v = tx.writes[&x];
                        let c = self.cell_mut(x);
                        c.value = v;
                        c.writer = Some(tx.key);
                        c.version = tx.wv;
                        out.push(Effect::Wb(x, v));
                        self.slot_mut(t).phase = if i + 1 == wregs.len() { Phase::Release } else { Phase::WriteBack(i + 1) };
                    }
                    Phase::Release => self.finish(t, Response::Committed, out),
                    other => unreachable!("TL2 commit in phase {other:?}"),
                }
            }
        }
    }

    fn retry_or_abort(&mut self, t: ThreadId, out: &mut Vec<Effect>) {
        let s = self.slot_mut(t);
        if s.retries < TL2_RETRIES {
            s.retries += 1;
        } else {
            self.finish(t, Response::Aborted, out);
        }
    }

    fn step_2pl(&mut self, t: ThreadId, out: &mut Vec<Effect>) {
        let s = self.slot(t);
        let req = s.pending.expect("pending request");
        let phase = s.phase;
        if phase == Phase::Start && self.waits_for(t).is_some() {
            // Deadlock victim: undo in-place writes, then abort.
            let n = self.slot(t).tx.as_ref().map_or(0, |d| d.undo.len());
            self.slot_mut(t).phase = Phase::Rollback(n);
            return self.step_2pl(t, out);
        }
        match (req, phase) {
            (_, Phase::Rollback(0)) => self.finish(t, Response::Aborted, out),
            (_, Phase::Rollback(i)) => {
                let (x, v, w) = self.slot(t).tx.as_ref().expect("in transaction").undo[i - 1];
                let c = self.cell_mut(x);
                c.value = v;
                c.writer = w;
                out.push(Effect::Wb(x, v));
                self.slot_mut(t).phase = Phase::Rollback(i - 1);
            }
            (Request::Begin, _) => self.begin(t, out),
            (Request::Read(x), Phase::Start) => {
                let tx = self.slot(t).tx.as_ref().expect("in transaction");
                if let Some(&v) = tx.writes.get(&x).or_else(|| tx.reads.get(&x)) {
                    self.respond(t, Response::Ret(v), out);
                } else {
                    self.acquire(t, x);
                    self.slot_mut(t).phase = Phase::ReadMem(x);
                }
            }
            (Request::Read(_), Phase::ReadMem(x)) => {
                let c = self.cell(x);
                let key = {
                    let tx = self.tx_mut(t);
                    tx.reads.insert(x, c.value);
                    tx.key
                };
                self.respond(t, Response::Ret(c.value), out);
                out.push(Effect::Note(Note::TxRead { tx: key, reg: x, src: c.writer }));
            }
            (Request::Write(x, v), Phase::Start) => {
                if self.slot(t).tx.as_ref().expect("in transaction").locks.contains(&x) {
                    self.write_in_place(t, x, v, out);
                } else {
                    self.acquire(t, x);
                    self.slot_mut(t).phase = Phase::WriteMem(x, v);
                }
            }
            (Request::Write(..), Phase::WriteMem(x, v)) => self.write_in_place(t, x, v, out),
            (Request::Commit, Phase::Start) => {
                let tx = self.slot(t).tx.as_ref().expect("in transaction");
                if !tx.writes.is_empty() {
                    let note = Note::TxWrite {
                        tx: tx.key,
                        regs: tx.writes.keys().copied().collect(),
                    };
                    out.push(Effect::Note(note));
                }
                self.slot_mut(t).phase = Phase::Release;
            }
            (Request::Commit, Phase::Release) => self.finish(t, Response::Committed, out),
            (r, p) => unreachable!("2PL {r:?} in phase {p:?}"),
        }
    }

    fn acquire(&mut self, t: ThreadId, x: Reg) {
        debug_assert!(self.cell(x).lock.is_none());
        self.cell_mut(x).lock = Some(t);
        self.tx_mut(t).locks.insert(x);
    }

    fn write_in_place(&mut self, t: ThreadId, x: Reg, v: i64, out: &mut Vec<Effect>) {
        let old = self.cell(x);
        let tx = self.tx_mut(t);
        if !tx.writes.contains_key(&x) {
            tx.undo.push((x, old.value, old.writer));
        }
        tx.writes.insert(x, v);
        let key = tx.key;
        let c = self.cell_mut(x);
        c.value = v;
        c.writer = Some(key);
        out.push(Effect::Wb(x, v));
        self.respond(t, Response::RetUnit, out);
    }

    fn step_global(&mut self, t: ThreadId, out: &mut Vec<Effect>) {
        let req = self.slot(t).pending.expect("pending request");
        match req {
            Request::Begin => {
                self.global = Some(t);
                self.begin(t, out);
            }
            Request::Read(x) => {
                let c = self.cell(x);
                let tx = self.slot(t).tx.as_ref().expect("in transaction");
                let local = tx.writes.contains_key(&x);
                let key = tx.key;
                self.respond(t, Response::Ret(c.value), out);
                if !local {
                    out.push(Effect::Note(Note::TxRead { tx: key, reg: x, src: c.writer }));
                }
            }
            Request::Write(x, v) => {
                let tx = self.tx_mut(t);
                tx.writes.insert(x, v);
                let key = tx.key;
                let c = self.cell_mut(x);
                c.value = v;
                c.writer = Some(key);
                out.push(Effect::Wb(x, v));
                self.respond(t, Response::RetUnit, out);
            }
            Request::Commit => {
                let tx = self.slot(t).tx.as_ref().expect("in transaction");
                if !tx.writes.is_empty() {
                    let note = Note::TxWrite {
                        tx: tx.key,
                        regs: tx.writes.keys().copied().collect(),
                    };
                    out.push(Effect::Note(note));
                }
                self.finish(t, Response::Committed, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Reg {
        Reg::new("x")
    }
    fn y() -> Reg {
        Reg::new("y")
    }

    /// Submits `req` and steps `t` alone until it responds.
    fn solo(m: &mut Machine, t: ThreadId, req: Request, out: &mut Vec<Effect>) -> (Response, usize) {
        m.submit(t, req).unwrap();
        let mut steps = 0;
        loop {
            assert_eq!(m.status(t), Status::Ready);
            let before = out.len();
            m.step(t, out);
            steps += 1;
            if let Some(r) = out[before..].iter().find_map(|e| match e {
                Effect::Respond(r) => Some(*r),
                _ => None,
            }) {
                return (r, steps);
            }
        }
    }

    #[test]
    fn tl2_solo_commit_writes_back() {
        let mut m = Machine::new(Algorithm::FencedTl2, 1);
        let mut out = Vec::new();
        assert_eq!(solo(&mut m, 1, Request::Begin, &mut out).0, Response::Ok);
        assert_eq!(solo(&mut m, 1, Request::Write(x(), 5), &mut out).0, Response::RetUnit);
        assert_eq!(m.value(x()), 0);
        assert_eq!(solo(&mut m, 1, Request::Read(x()), &mut out).0, Response::Ret(5));
        assert_eq!(solo(&mut m, 1, Request::Commit, &mut out).0, Response::Committed);
        assert_eq!(m.value(x()), 5);
        assert!(out.contains(&Effect::Wb(x(), 5)));
        assert!(m.can_submit(1));
    }

    #[test]
    fn tl2_read_aborts_on_newer_version() {
        let mut m = Machine::new(Algorithm::Tl2, 2);
        let mut out = Vec::new();
        solo(&mut m, 1, Request::Begin, &mut out);
        solo(&mut m, 2, Request::Begin, &mut out);
        solo(&mut m, 2, Request::Write(x(), 1), &mut out);
        solo(&mut m, 2, Request::Commit, &mut out);
        assert_eq!(solo(&mut m, 1, Request::Read(x()), &mut out).0, Response::Aborted);
        assert!(!m.in_tx(1));
    }

    #[test]
    fn fence_waits_for_concurrent_transactions() {
        let mut m = Machine::new(Algorithm::FencedTl2, 2);
        let mut out = Vec::new();
        solo(&mut m, 2, Request::Begin, &mut out);
        solo(&mut m, 1, Request::Begin, &mut out);
        solo(&mut m, 1, Request::Commit, &mut out);
        assert!(m.fence_pending(1));
        assert!(!m.can_submit(1));
        assert!(!m.nontx_enabled(1));
        solo(&mut m, 2, Request::Commit, &mut out);
        assert!(!m.fence_pending(1));
        // Transactions that start after the fence do not hold it up.
        solo(&mut m, 1, Request::Begin, &mut out);
        solo(&mut m, 2, Request::Begin, &mut out);
        solo(&mut m, 1, Request::Commit, &mut out);
        assert!(m.fence_pending(1));
    }

    #[test]
    fn no_fence_after_solo_transaction() {
        let mut m = Machine::new(Algorithm::FencedTl2, 2);
        let mut out = Vec::new();
        solo(&mut m, 1, Request::Begin, &mut out);
        solo(&mut m, 1, Request::Commit, &mut out);
        assert!(m.can_submit(1));
    }

    #[test]
    fn two_pl_read_takes_two_steps() {
        let mut m = Machine::new(Algorithm::TwoPl, 1);
        let mut out = Vec::new();
        solo(&mut m, 1, Request::Begin, &mut out);
        assert_eq!(solo(&mut m, 1, Request::Read(x()), &mut out), (Response::Ret(0), 2));
        // A second read of the same register is answered locally.
        assert_eq!(solo(&mut m, 1, Request::Read(x()), &mut out), (Response::Ret(0), 1));
    }

    #[test]
    fn two_pl_blocks_and_breaks_deadlocks() {
        let mut m = Machine::new(Algorithm::TwoPl, 2);
        let mut out = Vec::new();
        solo(&mut m, 1, Request::Begin, &mut out);
        solo(&mut m, 2, Request::Begin, &mut out);
        solo(&mut m, 1, Request::Write(x(), 1), &mut out);
        solo(&mut m, 2, Request::Write(y(), 2), &mut out);
        m.submit(1, Request::Read(y())).unwrap();
        assert_eq!(m.status(1), Status::Blocked);
        m.submit(2, Request::Read(x())).unwrap();
        // Thread 2 started later, so it is the victim.
        assert_eq!(m.status(1), Status::Blocked);
        assert_eq!(m.status(2), Status::Ready);
        let mut out = Vec::new();
        while m.status(2) == Status::Ready {
            m.step(2, &mut out);
        }
        assert_eq!(out, vec![Effect::Wb(y(), 0), Effect::Respond(Response::Aborted)]);
        assert_eq!(m.value(y()), 0);
        assert_eq!(m.status(1), Status::Ready);
    }

    #[test]
    fn global_lock_serializes_everything() {
        let mut m = Machine::new(Algorithm::GlobalLock, 2);
        let mut out = Vec::new();
        solo(&mut m, 1, Request::Begin, &mut out);
        assert!(!m.nontx_enabled(2));
        m.submit(2, Request::Begin).unwrap();
        assert_eq!(m.status(2), Status::Blocked);
        solo(&mut m, 1, Request::Commit, &mut out);
        assert_eq!(m.status(2), Status::Ready);
    }

    #[test]
    fn illegal_requests() {
        let mut m = Machine::new(Algorithm::Tl2, 1);
        assert!(matches!(m.submit(1, Request::Commit), Err(IllegalRequest::Phase { .. })));
        m.submit(1, Request::Begin).unwrap();
        assert_eq!(m.submit(1, Request::Begin), Err(IllegalRequest::Pending(1)));
        assert_eq!(m.submit(2, Request::Begin), Err(IllegalRequest::NoSuchThread(2)));
    }

    #[test]
    fn identical_schedules_give_identical_machines() {
        let run = || {
            let mut m = Machine::new(Algorithm::Tl2, 2);
            let mut out = Vec::new();
            solo(&mut m, 1, Request::Begin, &mut out);
            m.nontx_write(2, x(), 3, &mut out);
            solo(&mut m, 1, Request::Read(x()), &mut out);
            (m, out)
        };
        assert_eq!(run(), run());
    }
}
