//! Lexer and recursive-descent parser for the program language.

use std::collections::{BTreeMap, BTreeSet};

use txlab_core::model::{ABORTED, COMMITTED};
use txlab_core::{Reg, Sym};

use crate::ast::{BinOp, Expr, LocalRef, Program, Stmt, Thread, UnOp};
use crate::compile;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCT: [&str; 22] = [
    "==", "!=", "<=", ">=", "&&", "||", "=>", "{", "}", "(", ")", ";", "=", "<", ">", "!", "+", "-", "*", ".", ",", "⇒",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let line = line.split("//").next().unwrap_or("");
        let chars: Vec<(usize, char)> = line.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (byte, c) = chars[i];
            let col = i + 1;
            let at = |tok| Token { tok, line: ln + 1, col };
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                out.push(at(Tok::Ident(word)));
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                let v = digits.parse().map_err(|_| ParseError {
                    line: ln + 1,
                    col,
                    message: format!("integer `{digits}` out of range"),
                })?;
                out.push(at(Tok::Int(v)));
            } else if let Some(p) = PUNCT.iter().find(|p| line[byte..].starts_with(**p)) {
                out.push(at(Tok::Punct(p)));
                i += p.chars().count();
            } else {
                return Err(ParseError {
                    line: ln + 1,
                    col,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
    }
    let (line, col) = out.last().map_or((1, 1), |t| (t.line, t.col + 1));
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: [&str; 13] = [
    "init", "thread", "post", "skip", "if", "else", "while", "do", "atomic", "committed", "aborted", "true",
    "false",
];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    registers: BTreeSet<String>,
    /// Owning thread and slot of each local.
    locals: BTreeMap<String, (usize, usize)>,
    thread_locals: Vec<Vec<Sym>>,
    /// Thread being parsed, `None` inside the postcondition.
    thread: Option<usize>,
    atomic_depth: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn error<T>(&self, message: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError {
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.error(format!("expected `{p}`, found {}", self.describe()))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.is_word(w) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected `{w}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.error(format!("expected a name, found {}", self.describe())),
        }
    }

    fn register(&mut self) -> PResult<Reg> {
        let name = self.ident()?;
        if self.locals.contains_key(&name) {
            self.pos -= 1;
            return self.error(format!("`{name}` is used both as a local and as a register"));
        }
        Ok(Reg::new(&name))
    }

    /// Resolves a local of the current thread, creating it on first use.
    fn local(&mut self, name: &str) -> PResult<LocalRef> {
        if self.registers.contains(name) {
            return self.error(format!("`{name}` is used both as a local and as a register"));
        }
        let Some(t) = self.thread else {
            return match self.locals.get(name) {
                Some(&(thread, slot)) => Ok(LocalRef { thread, slot, name: Sym::new(name) }),
                None => self.error(format!("unknown name `{name}` in postcondition")),
            };
        };
        match self.locals.get(name) {
            Some(&(owner, slot)) if owner == t => Ok(LocalRef { thread: t, slot, name: Sym::new(name) }),
            Some(&(owner, _)) => self.error(format!(
                "local `{name}` belongs to thread {} and cannot be used by thread {}",
                owner + 1,
                t + 1
            )),
            None => {
                let slot = self.thread_locals[t].len();
                self.thread_locals[t].push(Sym::new(name));
                self.locals.insert(name.to_string(), (t, slot));
                Ok(LocalRef { thread: t, slot, name: Sym::new(name) })
            }
        }
    }

    fn program(mut self) -> PResult<Program> {
        let mut threads: Vec<(String, Vec<Stmt>)> = Vec::new();
        let mut post = None;
        loop {
            if *self.peek() == Tok::Eof {
                break;
            }
            if self.is_word("init") {
                self.pos += 1;
                let name = self.ident()?;
                self.expect_punct("=")?;
                self.eat_punct("-");
                let v = match *self.peek() {
                    Tok::Int(v) => v,
                    _ => return self.error(format!("expected an integer, found {}", self.describe())),
                };
                if v != 0 {
                    return self.error(format!(
                        "register `{name}` must start at 0; nonzero initial values are not supported"
                    ));
                }
                self.pos += 1;
                self.expect_punct(";")?;
            } else if self.is_word("thread") {
                self.pos += 1;
                let name = self.ident()?;
                let t = threads.len();
                self.thread = Some(t);
                self.thread_locals.push(Vec::new());
                let body = self.block()?;
                threads.push((name, body));
            } else if self.is_word("post") {
                if post.is_some() {
                    return self.error("duplicate postcondition");
                }
                self.pos += 1;
                self.thread = None;
                post = Some(self.expr()?);
                self.expect_punct(";")?;
            } else {
                return self.error(format!("expected `init`, `thread` or `post`, found {}", self.describe()));
            }
        }
        let registers = self.registers.iter().map(|r| Reg::new(r)).collect();
        let threads = threads
            .into_iter()
            .zip(self.thread_locals)
            .map(|((name, body), locals)| {
                let (code, loops) = compile::compile(&body);
                Thread { name, body, locals, code, loops }
            })
            .collect();
        Ok(Program { threads, post, registers })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.eat_punct("}") {
            if *self.peek() == Tok::Eof {
                return self.error("unclosed `{`");
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        if self.is_word("skip") {
            self.pos += 1;
            self.expect_punct(";")?;
            return Ok(Stmt::Skip);
        }
        if self.is_word("if") {
            self.pos += 1;
            let cond = self.paren_expr()?;
            let then = self.block()?;
            let els = if self.is_word("else") {
                self.pos += 1;
                if self.is_word("if") {
                    vec![self.stmt()?]
                } else {
                    self.block()?
                }
            } else {
                Vec::new()
            };
            return Ok(Stmt::If { cond, then, els });
        }
        if self.is_word("while") {
            self.pos += 1;
            let cond = self.paren_expr()?;
            let body = self.block()?;
            return Ok(Stmt::While { cond, body });
        }
        if self.is_word("do") {
            self.pos += 1;
            let body = self.block()?;
            self.expect_word("while")?;
            let cond = self.paren_expr()?;
            self.expect_punct(";")?;
            return Ok(Stmt::DoWhile { body, cond });
        }
        if self.is_word("atomic") {
            return self.error("an atomic block must assign its result: `l = atomic { ... };`");
        }
        if *self.peek_at(1) == Tok::Punct(".") {
            let reg = self.register()?;
            self.expect_punct(".")?;
            if self.is_word("read") {
                return self.error("the result of a read must be assigned: `l = x.read();`");
            }
            self.expect_word("write")?;
            self.expect_punct("(")?;
            let e = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            return Ok(Stmt::Write { reg, e });
        }
        let name = self.ident()?;
        self.pos -= 1;
        let lv = self.local(&name)?;
        self.pos += 1;
        self.expect_punct("=")?;
        if self.is_word("atomic") {
            if self.atomic_depth > 0 {
                return self.error("atomic blocks cannot be nested");
            }
            self.pos += 1;
            self.atomic_depth += 1;
            let body = self.block()?;
            self.atomic_depth -= 1;
            self.eat_punct(";");
            return Ok(Stmt::Atomic { lv, body });
        }
        if matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Punct(".") {
            let reg = self.register()?;
            self.expect_punct(".")?;
            self.expect_word("read")?;
            self.expect_punct("(")?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            return Ok(Stmt::Read { lv, reg });
        }
        let e = self.expr()?;
        self.expect_punct(";")?;
        Ok(Stmt::Assign { lv, e })
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect_punct("(")?;
        let e = self.expr()?;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek() else { return None };
        Some(match *p {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            "=>" | "⇒" => BinOp::Implies,
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let p = op.precedence();
            if p < min {
                break;
            }
            self.pos += 1;
            let next = if op == BinOp::Implies { p } else { p + 1 };
            let rhs = self.binary(next)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        if self.eat_punct("-") {
            if let Tok::Int(v) = *self.peek() {
                self.pos += 1;
                return Ok(Expr::Int(-v));
            }
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat_punct("(") {
            let e = self.expr()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        match self.peek().clone() {
            Tok::Int(v) => {
                self.pos += 1;
                Ok(Expr::Int(v))
            }
            Tok::Ident(w) if w == "committed" => {
                self.pos += 1;
                Ok(Expr::Int(COMMITTED))
            }
            Tok::Ident(w) if w == "aborted" => {
                self.pos += 1;
                Ok(Expr::Int(ABORTED))
            }
            Tok::Ident(w) if w == "true" => {
                self.pos += 1;
                Ok(Expr::Int(1))
            }
            Tok::Ident(w) if w == "false" => {
                self.pos += 1;
                Ok(Expr::Int(0))
            }
            Tok::Ident(w) if self.registers.contains(&w) => {
                if self.thread.is_some() {
                    return self.error(format!(
                        "register `{w}` cannot appear in an expression; read it into a local first"
                    ));
                }
                self.pos += 1;
                Ok(Expr::Reg(Reg::new(&w)))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                self.pos -= 1;
                let l = self.local(&name)?;
                self.pos += 1;
                Ok(Expr::Local(l))
            }
            _ => self.error(format!("expected an expression, found {}", self.describe())),
        }
    }
}

/// Names used as registers: `init` targets and receivers of `.read()` and
/// `.write()`.
fn scan_registers(toks: &[Token]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for w in toks.windows(3) {
        if let (Tok::Ident(a), Tok::Punct("."), Tok::Ident(m)) = (&w[0].tok, &w[1].tok, &w[2].tok) {
            if m == "read" || m == "write" {
                out.insert(a.clone());
            }
        }
        if let (Tok::Ident(kw), Tok::Ident(a)) = (&w[0].tok, &w[1].tok) {
            if kw == "init" {
                out.insert(a.clone());
            }
        }
    }
    out
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let registers = scan_registers(&toks);
    Parser {
        toks,
        pos: 0,
        registers,
        locals: BTreeMap::new(),
        thread_locals: Vec::new(),
        thread: None,
        atomic_depth: 0,
    }
    .program()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_thread() {
        let p = parse_program("thread t1 { }").unwrap();
        assert_eq!(p.threads.len(), 1);
        assert!(p.threads[0].body.is_empty());
        assert!(p.post.is_none());
    }

    #[test]
    fn statements_and_post() {
        let p = parse_program(
            "init x = 0;
             thread a { l = atomic { v = x.read(); if (v == 0) { x.write(v + 1); } }; }
             thread b { do { m = x.read(); } while (m == 0); }
             post l == committed => x == 1;",
        )
        .unwrap();
        assert_eq!(p.threads[0].locals.len(), 2);
        assert_eq!(p.post.as_ref().unwrap().to_string(), "l == committed => x == 1");
        assert!(p.has_loops());
        assert_eq!(p.constants(), [0, 1].into());
    }

    #[test]
    fn precedence_round_trips() {
        let p = parse_program("thread a { l = 1 + 2 * 3 - -4; m = !(l == 1) || l < 2 && l != 0; }").unwrap();
        let Stmt::Assign { e, .. } = &p.threads[0].body[0] else { panic!() };
        assert_eq!(e.to_string(), "1 + 2 * 3 - -4");
        assert_eq!(e.eval_locals(&[0, 0]), 11);
        let Stmt::Assign { e, .. } = &p.threads[0].body[1] else { panic!() };
        assert_eq!(e.to_string(), "!(l == 1) || l < 2 && l != 0");
    }

    fn error_of(src: &str) -> ParseError {
        parse_program(src).unwrap_err()
    }

    #[test]
    fn static_errors() {
        let e = error_of("thread a { l = atomic { m = atomic { skip; }; }; }");
        assert!(e.message.contains("nested"), "{e}");
        let e = error_of("thread a { l = 1; }\nthread b { m = l; }");
        assert_eq!((e.line, e.message.contains("belongs to thread 1")), (2, true));
        let e = error_of("thread a { l = x; x.write(1); }");
        assert!(e.message.contains("register `x`"), "{e}");
        let e = error_of("thread a { x = 1; x.write(1); }");
        assert!(e.message.contains("both"), "{e}");
        let e = error_of("init x = 5;");
        assert!(e.message.contains("nonzero"), "{e}");
        let e = error_of("thread a { l = 1 }");
        assert_eq!((e.line, e.col), (1, 18));
        let e = error_of("post z == 1;");
        assert!(e.message.contains("unknown name"), "{e}");
    }
}
