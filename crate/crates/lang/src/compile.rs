//! Flattening of statement trees into per-thread instruction lists.

use txlab_core::{Reg, Sym};

use crate::ast::{tags, Expr, LocalRef, Stmt};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Instr {
    Assign { lv: LocalRef, e: Expr, tag: Sym },
    Skip,
    /// Emits `assume(cond)` or `assume(!(cond))` and continues at the
    /// matching target.
    Branch { cond: Expr, then_pc: usize, else_pc: usize, pos: Sym, neg: Sym },
    Jump(usize),
    LoopReset(usize),
    /// One more execution of the body of loop `k`; exceeding the bound
    /// prunes the path.
    LoopCount(usize),
    Read { lv: LocalRef, reg: Reg, tx: bool },
    Write { reg: Reg, e: Expr, tx: bool },
    /// `after` is the position following the block's `Commit`.
    Begin { result: LocalRef, after: usize },
    Commit { result: LocalRef },
}

struct Compiler {
    code: Vec<Instr>,
    loops: usize,
}

impl Compiler {
    fn branch(&mut self, cond: &Expr) -> usize {
        self.code.push(Instr::Branch {
            cond: cond.clone(),
            then_pc: usize::MAX,
            else_pc: usize::MAX,
            pos: tags::assume(cond, true),
            neg: tags::assume(cond, false),
        });
        self.code.len() - 1
    }

    fn patch(&mut self, at: usize, then: usize, els: usize) {
        if let Instr::Branch { then_pc, else_pc, .. } = &mut self.code[at] {
            *then_pc = then;
            *else_pc = els;
        }
    }

    fn stmts(&mut self, body: &[Stmt], tx: bool) {
        for s in body {
            self.stmt(s, tx);
        }
    }

    fn stmt(&mut self, s: &Stmt, tx: bool) {
        match s {
            Stmt::Assign { lv, e } => self.code.push(Instr::Assign {
                lv: *lv,
                e: e.clone(),
                tag: tags::assign(*lv, e),
            }),
            Stmt::Skip => self.code.push(Instr::Skip),
            Stmt::Read { lv, reg } => self.code.push(Instr::Read { lv: *lv, reg: *reg, tx }),
            Stmt::Write { reg, e } => self.code.push(Instr::Write { reg: *reg, e: e.clone(), tx }),
            Stmt::Atomic { lv, body } => {
                let begin = self.code.len();
                self.code.push(Instr::Begin { result: *lv, after: usize::MAX });
                self.stmts(body, true);
                self.code.push(Instr::Commit { result: *lv });
                let after = self.code.len();
                self.code[begin] = Instr::Begin { result: *lv, after };
            }
            Stmt::If { cond, then, els } => {
                let b = self.branch(cond);
                self.stmts(then, tx);
                let jump = self.code.len();
                self.code.push(Instr::Jump(usize::MAX));
                let else_pc = self.code.len();
                self.stmts(els, tx);
                let end = self.code.len();
                self.code[jump] = Instr::Jump(end);
                self.patch(b, b + 1, else_pc);
            }
            Stmt::While { cond, body } => {
                let k = self.loops;
                self.loops += 1;
                self.code.push(Instr::LoopReset(k));
                let head = self.branch(cond);
                self.code.push(Instr::LoopCount(k));
                self.stmts(body, tx);
                self.code.push(Instr::Jump(head));
                let end = self.code.len();
                self.patch(head, head + 1, end);
            }
            Stmt::DoWhile { body, cond } => {
                let k = self.loops;
                self.loops += 1;
                self.code.push(Instr::LoopReset(k));
                let start = self.code.len();
                self.code.push(Instr::LoopCount(k));
                self.stmts(body, tx);
                let test = self.branch(cond);
                self.patch(test, start, test + 1);
            }
        }
    }
}

/// Instructions for a thread body and the number of loops it contains.
pub(crate) fn compile(body: &[Stmt]) -> (Vec<Instr>, usize) {
    let mut c = Compiler { code: Vec::new(), loops: 0 };
    c.stmts(body, false);
    (c.code, c.loops)
}
