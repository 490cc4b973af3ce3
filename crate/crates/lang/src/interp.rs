//! Per-thread interpreter state shared by the explorers.
//!
//! A thread alternates between local primitive actions, requests to the TM
//! and waiting for responses. The explorers decide when each of those
//! happens; this module only knows how a thread reacts.

use txlab_core::model::{ABORTED, COMMITTED};
use txlab_core::{Kind, Sym};

use crate::ast::{tags, LocalRef, Thread};
use crate::compile::Instr;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Stage {
    AtPc,
    /// The `assume(e == v)` of a write was emitted; the request is next.
    WriteReady(i64),
    Waiting(Kind),
    /// `lv := v` is next, then execution continues at `next_pc`.
    Bind { lv: LocalRef, v: i64, next_pc: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct TxCtx {
    result: LocalRef,
    after: usize,
    snapshot: Vec<i64>,
}

/// What a thread wants to do next.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Next {
    Local,
    /// A request; the flag tells whether it is transactional.
    Request(Kind, bool),
    Waiting(Kind),
    Done,
    Pruned,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct ThreadRt {
    pc: usize,
    stage: Stage,
    pub(crate) locals: Vec<i64>,
    loops: Vec<u32>,
    tx: Option<TxCtx>,
    pruned: bool,
    /// Interface actions performed so far.
    pub(crate) iface: usize,
}

impl ThreadRt {
    pub(crate) fn new(t: &Thread) -> ThreadRt {
        ThreadRt {
            pc: 0,
            stage: Stage::AtPc,
            locals: vec![0; t.locals.len()],
            loops: vec![0; t.loops],
            tx: None,
            pruned: false,
            iface: 0,
        }
    }

    pub(crate) fn in_tx(&self) -> bool {
        self.tx.is_some()
    }

    pub(crate) fn prune(&mut self) {
        self.pruned = true;
    }

    /// Runs silent instructions. Exceeding the loop bound prunes the thread.
    pub(crate) fn settle(&mut self, code: &[Instr], loop_bound: u32) {
        while self.stage == Stage::AtPc && !self.pruned && self.pc < code.len() {
            match code[self.pc] {
                Instr::Jump(to) => self.pc = to,
                Instr::LoopReset(k) => {
                    self.loops[k] = 0;
                    self.pc += 1;
                }
                Instr::LoopCount(k) => {
                    self.loops[k] += 1;
                    if self.loops[k] > loop_bound {
                        self.pruned = true;
                        return;
                    }
                    self.pc += 1;
                }
                _ => return,
            }
        }
    }

    pub(crate) fn next(&self, code: &[Instr]) -> Next {
        if self.pruned {
            return Next::Pruned;
        }
        match &self.stage {
            Stage::Bind { .. } => Next::Local,
            Stage::Waiting(k) => Next::Waiting(*k),
            Stage::WriteReady(v) => match &code[self.pc] {
                Instr::Write { reg, tx, .. } => Next::Request(Kind::Write(*reg, *v), *tx),
                other => unreachable!("write stage at {other:?}"),
            },
            Stage::AtPc => match code.get(self.pc) {
                None => Next::Done,
                Some(Instr::Assign { .. } | Instr::Skip | Instr::Branch { .. } | Instr::Write { .. }) => Next::Local,
                Some(Instr::Read { reg, tx, .. }) => Next::Request(Kind::Read(*reg), *tx),
                Some(Instr::Begin { .. }) => Next::Request(Kind::BeginTx, true),
                Some(Instr::Commit { .. }) => Next::Request(Kind::TryCommit, true),
                Some(i) => unreachable!("unsettled at {i:?}"),
            },
        }
    }

    /// Performs the pending local action and returns its tag.
    pub(crate) fn local_step(&mut self, code: &[Instr], loop_bound: u32) -> Sym {
        let tag = match std::mem::replace(&mut self.stage, Stage::AtPc) {
            Stage::Bind { lv, v, next_pc } => {
                self.locals[lv.slot] = v;
                self.pc = next_pc;
                tags::bind(lv, v)
            }
            Stage::AtPc => match &code[self.pc] {
                Instr::Assign { lv, e, tag } => {
                    self.locals[lv.slot] = e.eval_locals(&self.locals);
                    self.pc += 1;
                    *tag
                }
                Instr::Skip => {
                    self.pc += 1;
                    tags::skip()
                }
                Instr::Branch { cond, then_pc, else_pc, pos, neg } => {
                    if cond.eval_locals(&self.locals) != 0 {
                        self.pc = *then_pc;
                        *pos
                    } else {
                        self.pc = *else_pc;
                        *neg
                    }
                }
                Instr::Write { e, .. } => {
                    let v = e.eval_locals(&self.locals);
                    self.stage = Stage::WriteReady(v);
                    tags::assume_eq(e, v)
                }
                other => unreachable!("no local action at {other:?}"),
            },
            other => unreachable!("no local action in {other:?}"),
        };
        self.settle(code, loop_bound);
        tag
    }

    /// Issues the pending request and returns it.
    pub(crate) fn request(&mut self, code: &[Instr]) -> Kind {
        let Next::Request(k, _) = self.next(code) else {
            unreachable!("no request pending")
        };
        self.stage = Stage::Waiting(k);
        self.iface += 1;
        k
    }

    /// Applies the TM's response to the pending request.
    pub(crate) fn respond(&mut self, code: &[Instr], resp: Kind, loop_bound: u32) {
        let Stage::Waiting(req) = self.stage else {
            unreachable!("response without a request")
        };
        debug_assert!(resp.answers(&req), "{resp} does not answer {req}");
        self.iface += 1;
        self.stage = Stage::AtPc;
        match (&code[self.pc], resp) {
            (Instr::Begin { result, after }, Kind::Aborted) => {
                self.stage = Stage::Bind { lv: *result, v: ABORTED, next_pc: *after };
            }
            (Instr::Begin { result, after }, Kind::Ok) => {
                self.tx = Some(TxCtx {
                    result: *result,
                    after: *after,
                    snapshot: self.locals.clone(),
                });
                self.pc += 1;
            }
            (_, Kind::Aborted) => {
                let tx = self.tx.take().expect("abort inside a transaction");
                self.locals = tx.snapshot;
                self.stage = Stage::Bind { lv: tx.result, v: ABORTED, next_pc: tx.after };
            }
            (Instr::Commit { result }, Kind::Committed) => {
                self.tx = None;
                self.stage = Stage::Bind { lv: *result, v: COMMITTED, next_pc: self.pc + 1 };
            }
            (Instr::Read { lv, .. }, Kind::Ret(v)) => {
                self.stage = Stage::Bind { lv: *lv, v, next_pc: self.pc + 1 };
            }
            (Instr::Write { .. }, Kind::RetUnit) => self.pc += 1,
            (i, r) => unreachable!("{r} at {i:?}"),
        }
        self.settle(code, loop_bound);
    }
}
