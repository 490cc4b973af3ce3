//! Programs, statements and expressions after name resolution.

use std::collections::BTreeSet;
use std::fmt;

use txlab_core::model::{ABORTED, COMMITTED};
use txlab_core::{Reg, Sym};

use crate::compile::Instr;

/// A local variable: its owning thread (0-based), its slot in that
/// thread's local table, and its name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalRef {
    pub thread: usize,
    pub slot: usize,
    pub name: Sym,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    /// Implication, for postconditions.
    Implies,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "=>",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Implies => 1,
            BinOp::Or => 2,
            BinOp::And => 3,
            BinOp::Eq | BinOp::Ne => 4,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
            BinOp::Add | BinOp::Sub => 6,
            BinOp::Mul => 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    /// An integer, including the `committed`/`aborted` sentinels.
    Int(i64),
    Local(LocalRef),
    /// Final register contents; only allowed in postconditions.
    Reg(Reg),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

fn truth(b: bool) -> i64 {
    i64::from(b)
}

impl Expr {
    /// Evaluates with `local` supplying locals and `reg` registers.
    /// Arithmetic wraps; booleans are 0 and 1 and any nonzero value is true.
    pub fn eval(&self, local: &impl Fn(LocalRef) -> i64, reg: &impl Fn(Reg) -> i64) -> i64 {
        match self {
            Expr::Int(v) => *v,
            Expr::Local(l) => local(*l),
            Expr::Reg(x) => reg(*x),
            Expr::Unary(UnOp::Not, e) => truth(e.eval(local, reg) == 0),
            Expr::Unary(UnOp::Neg, e) => e.eval(local, reg).wrapping_neg(),
            Expr::Binary(op, a, b) => {
                let a = a.eval(local, reg);
                match op {
                    BinOp::And => return truth(a != 0 && b.eval(local, reg) != 0),
                    BinOp::Or => return truth(a != 0 || b.eval(local, reg) != 0),
                    BinOp::Implies => return truth(a == 0 || b.eval(local, reg) != 0),
                    _ => {}
                }
                let b = b.eval(local, reg);
                match op {
                    BinOp::Add => a.wrapping_add(b),
                    BinOp::Sub => a.wrapping_sub(b),
                    BinOp::Mul => a.wrapping_mul(b),
                    BinOp::Eq => truth(a == b),
                    BinOp::Ne => truth(a != b),
                    BinOp::Lt => truth(a < b),
                    BinOp::Le => truth(a <= b),
                    BinOp::Gt => truth(a > b),
                    BinOp::Ge => truth(a >= b),
                    BinOp::And | BinOp::Or | BinOp::Implies => unreachable!(),
                }
            }
        }
    }

    /// Evaluates an expression over the locals of one thread.
    pub fn eval_locals(&self, locals: &[i64]) -> i64 {
        self.eval(&|l: LocalRef| locals[l.slot], &|x: Reg| panic!("register {x} in a thread expression"))
    }

    /// Integer literals occurring in the expression, sentinels excluded.
    pub fn constants(&self, out: &mut BTreeSet<i64>) {
        match self {
            Expr::Int(v) if *v != COMMITTED && *v != ABORTED => {
                out.insert(*v);
            }
            Expr::Unary(_, e) => e.constants(out),
            Expr::Binary(_, a, b) => {
                a.constants(out);
                b.constants(out);
            }
            _ => {}
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{}", Value(*v)),
            Expr::Local(l) => write!(f, "{}", l.name),
            Expr::Reg(x) => write!(f, "{x}"),
            Expr::Unary(op, e) => {
                f.write_str(match op {
                    UnOp::Not => "!",
                    UnOp::Neg => "-",
                })?;
                e.fmt_prec(f, 8)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                if p < min {
                    f.write_str("(")?;
                }
                // Left-associative except implication.
                let (lp, rp) = if *op == BinOp::Implies { (p + 1, p) } else { (p, p + 1) };
                a.fmt_prec(f, lp)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_prec(f, rp)?;
                if p < min {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }

    /// Renders the expression as an operand of `op`, parenthesized if needed.
    pub fn operand(&self, op: BinOp) -> String {
        struct Wrap<'a>(&'a Expr, u8);
        impl fmt::Display for Wrap<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt_prec(f, self.1)
            }
        }
        Wrap(self, op.precedence() + 1).to_string()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Formats a value, spelling out the result sentinels.
#[derive(Clone, Copy, Debug)]
pub struct Value(pub i64);

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            COMMITTED => f.write_str("committed"),
            ABORTED => f.write_str("aborted"),
            v => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign { lv: LocalRef, e: Expr },
    Skip,
    Atomic { lv: LocalRef, body: Vec<Stmt> },
    Read { lv: LocalRef, reg: Reg },
    Write { reg: Reg, e: Expr },
    If { cond: Expr, then: Vec<Stmt>, els: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
    DoWhile { body: Vec<Stmt>, cond: Expr },
}

impl Stmt {
    pub fn has_loop(&self) -> bool {
        match self {
            Stmt::While { .. } | Stmt::DoWhile { .. } => true,
            Stmt::Atomic { body, .. } => body.iter().any(Stmt::has_loop),
            Stmt::If { then, els, .. } => then.iter().chain(els).any(Stmt::has_loop),
            _ => false,
        }
    }
}

/// Tags of the primitive actions a program produces.
pub mod tags {
    use super::*;

    pub fn assign(lv: LocalRef, e: &Expr) -> Sym {
        Sym::new(&format!("{} := {e}", lv.name))
    }

    pub fn bind(lv: LocalRef, v: i64) -> Sym {
        Sym::new(&format!("{} := {}", lv.name, Value(v)))
    }

    pub fn skip() -> Sym {
        Sym::new("skip")
    }

    pub fn assume(cond: &Expr, holds: bool) -> Sym {
        if holds {
            Sym::new(&format!("assume({cond})"))
        } else {
            Sym::new(&format!("assume(!({cond}))"))
        }
    }

    pub fn assume_eq(e: &Expr, v: i64) -> Sym {
        Sym::new(&format!("assume({} == {})", e.operand(BinOp::Eq), Value(v)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Thread {
    pub name: String,
    pub body: Vec<Stmt>,
    /// Local names by slot.
    pub locals: Vec<Sym>,
    pub(crate) code: Vec<Instr>,
    /// Number of loops, which is the number of loop counters needed.
    pub(crate) loops: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub threads: Vec<Thread>,
    pub post: Option<Expr>,
    pub registers: BTreeSet<Reg>,
}

impl Program {
    /// Integer literals of the thread code.
    pub fn constants(&self) -> BTreeSet<i64> {
        fn walk(stmts: &[Stmt], out: &mut BTreeSet<i64>) {
            for s in stmts {
                match s {
                    Stmt::Assign { e, .. } | Stmt::Write { e, .. } => e.constants(out),
                    Stmt::Atomic { body, .. } => walk(body, out),
                    Stmt::If { cond, then, els } => {
                        cond.constants(out);
                        walk(then, out);
                        walk(els, out);
                    }
                    Stmt::While { cond, body } | Stmt::DoWhile { body, cond } => {
                        cond.constants(out);
                        walk(body, out);
                    }
                    Stmt::Skip | Stmt::Read { .. } => {}
                }
            }
        }
        let mut out = BTreeSet::new();
        for t in &self.threads {
            walk(&t.body, &mut out);
        }
        out
    }

    pub fn has_loops(&self) -> bool {
        self.threads.iter().any(|t| t.body.iter().any(Stmt::has_loop))
    }

    /// Finds a local by name.
    pub fn local(&self, name: &str) -> Option<LocalRef> {
        self.threads.iter().enumerate().find_map(|(thread, t)| {
            t.locals
                .iter()
                .position(|l| l.as_str() == name)
                .map(|slot| LocalRef { thread, slot, name: t.locals[slot] })
        })
    }
}
