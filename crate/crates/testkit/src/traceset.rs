//! Trace sets of loop-free programs built by generate-and-filter: every
//! per-thread action sequence the statement structure allows, with read
//! results and written values drawn from a finite domain, interleaved,
//! cut into prefixes, and kept when every thread's local evaluation
//! succeeds and the history belongs to the atomic TM.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use txlab_core::model::{validate_wellformed, ABORTED, COMMITTED};
use txlab_core::{Action, History, Kind, ThreadId};
use txlab_lang::{tags, Expr, LocalRef, Program, Stmt};

use crate::oracle::is_atomic_oracle;

/// An action of a per-thread sequence. Primitive actions keep what they do
/// so that sequences can be evaluated.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Act {
    Iface(Kind),
    Assign(LocalRef, Expr),
    /// `l := v` after a read or an atomic block.
    Bind(LocalRef, i64),
    Assume(Expr, bool),
    AssumeEq(Expr, i64),
    Skip,
}

impl Act {
    fn kind(&self) -> Kind {
        match self {
            Act::Iface(k) => *k,
            Act::Assign(l, e) => Kind::Prim(tags::assign(*l, e)),
            Act::Bind(l, v) => Kind::Prim(tags::bind(*l, *v)),
            Act::Assume(e, b) => Kind::Prim(tags::assume(e, *b)),
            Act::AssumeEq(e, v) => Kind::Prim(tags::assume_eq(e, *v)),
            Act::Skip => Kind::Prim(tags::skip()),
        }
    }
}

type Seqs = Vec<Vec<Act>>;

fn concat(a: &Seqs, b: &Seqs) -> Seqs {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x.iter().chain(y).cloned().collect()))
        .collect()
}

fn stmts(body: &[Stmt], dom: &BTreeSet<i64>) -> Seqs {
    body.iter().fold(vec![Vec::new()], |acc, s| concat(&acc, &stmt(s, dom)))
}

fn stmt(s: &Stmt, dom: &BTreeSet<i64>) -> Seqs {
    match s {
        Stmt::Assign { lv, e } => vec![vec![Act::Assign(*lv, e.clone())]],
        Stmt::Skip => vec![vec![Act::Skip]],
        Stmt::If { cond, then, els } => {
            let mut out = concat(&vec![vec![Act::Assume(cond.clone(), true)]], &stmts(then, dom));
            out.extend(concat(&vec![vec![Act::Assume(cond.clone(), false)]], &stmts(els, dom)));
            out
        }
        Stmt::Read { lv, reg } => {
            let mut out: Seqs = dom
                .iter()
                .map(|&v| vec![Act::Iface(Kind::Read(*reg)), Act::Iface(Kind::Ret(v)), Act::Bind(*lv, v)])
                .collect();
            out.push(vec![Act::Iface(Kind::Read(*reg)), Act::Iface(Kind::Aborted)]);
            out
        }
        Stmt::Write { reg, e } => dom
            .iter()
            .flat_map(|&v| {
                [Kind::RetUnit, Kind::Aborted].map(|r| {
                    vec![Act::AssumeEq(e.clone(), v), Act::Iface(Kind::Write(*reg, v)), Act::Iface(r)]
                })
            })
            .collect(),
        Stmt::Atomic { lv, body } => {
            let mut out: Seqs = vec![vec![
                Act::Iface(Kind::BeginTx),
                Act::Iface(Kind::Aborted),
                Act::Bind(*lv, ABORTED),
            ]];
            for seq in stmts(body, dom) {
                let mut head = vec![Act::Iface(Kind::BeginTx), Act::Iface(Kind::Ok)];
                match seq.iter().position(|a| *a == Act::Iface(Kind::Aborted)) {
                    Some(k) => {
                        head.extend(seq[..=k].iter().cloned());
                        head.push(Act::Bind(*lv, ABORTED));
                        // Sequences differing only after the abort give
                        // the same result.
                        if !out.contains(&head) {
                            out.push(head);
                        }
                    }
                    None => {
                        head.extend(seq);
                        head.push(Act::Iface(Kind::TryCommit));
                        for (r, v) in [(Kind::Committed, COMMITTED), (Kind::Aborted, ABORTED)] {
                            let mut s = head.clone();
                            s.push(Act::Iface(r));
                            s.push(Act::Bind(*lv, v));
                            out.push(s);
                        }
                    }
                }
            }
            out
        }
        Stmt::While { .. } | Stmt::DoWhile { .. } => panic!("the oracle handles loop-free programs only"),
    }
}

/// Evaluates a per-thread sequence prefix by prefix: assumptions must hold
/// when they are reached, and actions inside a transaction that aborts are
/// undone. Returns false once some prefix fails.
fn evaluates(seq: &[Act], nlocals: usize) -> bool {
    let mut locals = vec![0i64; nlocals];
    let mut snapshot: Option<Vec<i64>> = None;
    for a in seq {
        match a {
            Act::Iface(Kind::BeginTx) => snapshot = Some(locals.clone()),
            Act::Iface(Kind::Committed) => snapshot = None,
            Act::Iface(Kind::Aborted) => {
                if let Some(s) = snapshot.take() {
                    locals = s;
                }
            }
            Act::Iface(_) | Act::Skip => {}
            Act::Assign(l, e) => locals[l.slot] = e.eval_locals(&locals),
            Act::Bind(l, v) => locals[l.slot] = *v,
            Act::Assume(e, b) => {
                if (e.eval_locals(&locals) != 0) != *b {
                    return false;
                }
            }
            Act::AssumeEq(e, v) => {
                if e.eval_locals(&locals) != *v {
                    return false;
                }
            }
        }
    }
    true
}

struct Search<'a> {
    /// Per thread, every sequence the thread may produce.
    seqs: Vec<Seqs>,
    nlocals: Vec<usize>,
    trace: Vec<(ThreadId, Kind)>,
    per_thread: Vec<Vec<Act>>,
    out: &'a mut BTreeSet<Vec<(ThreadId, Kind)>>,
}

impl Search<'_> {
    fn actions(&self) -> Vec<Action> {
        self.trace
            .iter()
            .enumerate()
            .map(|(i, &(t, k))| Action::new(i as u64 + 1, t, k))
            .collect()
    }

    fn admissible(&self) -> bool {
        let acts = self.actions();
        if validate_wellformed(&acts).is_err() {
            return false;
        }
        let h = History::new(acts.into_iter().filter(|a| a.kind.is_interface()).collect()).unwrap();
        is_atomic_oracle(&h)
    }

    /// Whether the last action is a non-transactional request still
    /// waiting for its response.
    fn pending_nontx(&self) -> bool {
        let Some(&(t, k)) = self.trace.last() else { return false };
        if !k.is_access() {
            return false;
        }
        let mut in_tx = false;
        for &(u, k) in &self.trace {
            if u == t {
                match k {
                    Kind::BeginTx => in_tx = true,
                    Kind::Committed | Kind::Aborted => in_tx = false,
                    _ => {}
                }
            }
        }
        !in_tx
    }

    fn run(&mut self) {
        if !self.admissible() {
            return;
        }
        if !self.pending_nontx() {
            self.out.insert(self.trace.clone());
        }
        for t in 0..self.seqs.len() {
            let done = self.per_thread[t].len();
            // The next actions this thread can take, one per distinct
            // continuation of its current prefix.
            let mut nexts: Vec<Act> = Vec::new();
            for s in &self.seqs[t] {
                if s.len() > done && s[..done] == self.per_thread[t][..] && !nexts.contains(&s[done]) {
                    nexts.push(s[done].clone());
                }
            }
            for a in nexts {
                self.per_thread[t].push(a.clone());
                if evaluates(&self.per_thread[t], self.nlocals[t]) {
                    self.trace.push((t as ThreadId + 1, a.kind()));
                    self.run();
                    self.trace.pop();
                }
                self.per_thread[t].pop();
            }
        }
    }
}

/// The trace set of a loop-free program under the strongly atomic TM, as
/// (thread, kind) sequences. Read results and written values range over 0
/// and the literals of the program.
pub fn oracle_traces(p: &Program) -> BTreeSet<Vec<(ThreadId, Kind)>> {
    assert!(!p.has_loops(), "the oracle handles loop-free programs only");
    let mut dom = p.constants();
    dom.insert(0);
    let mut out = BTreeSet::new();
    let mut s = Search {
        seqs: p.threads.iter().map(|t| stmts(&t.body, &dom)).collect(),
        nlocals: p.threads.iter().map(|t| t.locals.len()).collect(),
        trace: Vec::new(),
        per_thread: vec![Vec::new(); p.threads.len()],
        out: &mut out,
    };
    s.run();
    out
}

/// Source of a random loop-free program whose threads each perform at most
/// `budget` interface actions on any path. Written values are literals or
/// copies of values read, so every value stays within the literals and 0.
pub fn gen_micro_program(rng: &mut impl Rng, budget: usize) -> String {
    let threads = rng.gen_range(1..=2);
    let mut src = String::new();
    let mut counter = 0;
    for t in 0..threads {
        let mut read_locals: Vec<String> = Vec::new();
        let mut left = budget;
        let mut body = String::new();
        while left >= 2 && rng.gen_bool(0.8) {
            let s = gen_stmt(rng, &mut left, &mut read_locals, &mut counter, true);
            body.push_str(&s);
            body.push(' ');
        }
        src.push_str(&format!("thread t{t} {{ {body}}}\n"));
    }
    src
}

fn gen_value(rng: &mut impl Rng, read_locals: &[String]) -> String {
    if !read_locals.is_empty() && rng.gen_bool(0.4) {
        read_locals.choose(rng).unwrap().clone()
    } else {
        rng.gen_range(1..=2).to_string()
    }
}

fn gen_stmt(
    rng: &mut impl Rng,
    left: &mut usize,
    read_locals: &mut Vec<String>,
    counter: &mut usize,
    outer: bool,
) -> String {
    let reg = ["x", "y"].choose(rng).unwrap();
    let choice = rng.gen_range(0..10);
    if outer && choice < 3 && *left >= 4 {
        *left -= 4;
        *counter += 1;
        let r = format!("r{counter}");
        let mut inner = String::new();
        while *left >= 2 && rng.gen_bool(0.6) {
            inner.push_str(&gen_stmt(rng, left, read_locals, counter, false));
            inner.push(' ');
        }
        return format!("{r} = atomic {{ {inner}}};");
    }
    match choice {
        3..=5 => {
            *left -= 2;
            *counter += 1;
            let l = format!("l{counter}");
            read_locals.push(l.clone());
            format!("{l} = {reg}.read();")
        }
        6 | 7 | 0..=2 => {
            *left -= 2;
            format!("{reg}.write({});", gen_value(rng, read_locals))
        }
        8 if !read_locals.is_empty() => {
            let l = read_locals.choose(rng).unwrap().clone();
            let c = rng.gen_range(0..=2);
            *counter += 1;
            let m = format!("m{counter}");
            format!("if ({l} == {c}) {{ {m} = 1; }} else {{ skip; }}")
        }
        _ => {
            *counter += 1;
            format!("a{counter} = {};", gen_value(rng, read_locals))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use txlab_lang::parse_program;

    #[test]
    fn single_write_outside_transactions() {
        let p = parse_program("thread a { x.write(1); }").unwrap();
        let traces = oracle_traces(&p);
        // Empty, the assumption, and the access with its response.
        assert_eq!(traces.len(), 3);
    }

    #[test]
    fn generated_programs_parse() {
        let mut r = crate::rng(11);
        for _ in 0..50 {
            let src = gen_micro_program(&mut r, 6);
            let p = parse_program(&src).unwrap_or_else(|e| panic!("{src}: {e}"));
            assert!(!p.has_loops());
        }
    }
}
