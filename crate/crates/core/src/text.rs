//! Line-oriented text formats for histories and executions.
//!
//! One action per line: `<id> <thread> <kind> [<arg>...]`. `#` starts a
//! comment and blank lines are skipped. Execution files may additionally
//! contain `wb <reg> <int>` and `prim <tag>` lines, where the tag runs to
//! the end of the line.

use std::fmt::Write as _;

use crate::model::{Action, History, Kind};
use crate::sym::{Reg, Sym};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn parse_int<T: std::str::FromStr>(line: usize, what: &str, s: Option<&str>) -> Result<T, ParseError> {
    let s = s.ok_or_else(|| err(line, format!("missing {what}")))?;
    s.parse()
        .map_err(|_| err(line, format!("{what} `{s}` is not an integer")))
}

fn parse_reg(line: usize, s: Option<&str>) -> Result<Reg, ParseError> {
    match s {
        Some(r) if r.chars().all(|c| c.is_alphanumeric() || c == '_') => Ok(Reg::new(r)),
        Some(r) => Err(err(line, format!("invalid register name `{r}`"))),
        None => Err(err(line, "missing register")),
    }
}

fn parse_line(line: usize, raw: &str, allow_internal: bool) -> Result<Option<Action>, ParseError> {
    let content = raw.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return Ok(None);
    }
    let mut parts = content.split_whitespace();
    let id = parse_int(line, "action id", parts.next())?;
    let thread = parse_int(line, "thread id", parts.next())?;
    let kw = parts.next().ok_or_else(|| err(line, "missing action kind"))?;
    let kind = match kw {
        "begintx" => Kind::BeginTx,
        "ok" => Kind::Ok,
        "trycommit" => Kind::TryCommit,
        "committed" => Kind::Committed,
        "aborted" => Kind::Aborted,
        "fbegin" => Kind::FBegin,
        "fend" => Kind::FEnd,
        "retu" => Kind::RetUnit,
        "ret" => match parts.next() {
            None => Kind::RetUnit,
            Some(v) => Kind::Ret(parse_int(line, "value", Some(v))?),
        },
        "read" => Kind::Read(parse_reg(line, parts.next())?),
        "write" => {
            let x = parse_reg(line, parts.next())?;
            Kind::Write(x, parse_int(line, "value", parts.next())?)
        }
        "wb" | "prim" if !allow_internal => {
            return Err(err(line, format!("`{kw}` is an internal action and cannot appear in a history")))
        }
        "wb" => {
            let x = parse_reg(line, parts.next())?;
            Kind::Wb(x, parse_int(line, "value", parts.next())?)
        }
        "prim" => {
            // The tag is the remainder of the line after the keyword.
            let start = content.find("prim").expect("keyword present") + 4;
            let tag = content[start..].trim();
            if tag.is_empty() {
                return Err(err(line, "missing primitive tag"));
            }
            return Ok(Some(Action::new(id, thread, Kind::Prim(Sym::new(tag)))));
        }
        other => return Err(err(line, format!("unknown action kind `{other}`"))),
    };
    if let Some(extra) = parts.next() {
        return Err(err(line, format!("unexpected trailing token `{extra}`")));
    }
    Ok(Some(Action::new(id, thread, kind)))
}

fn parse_actions(text: &str, allow_internal: bool) -> Result<Vec<Action>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if let Some(a) = parse_line(i + 1, raw, allow_internal)? {
            out.push(a);
        }
    }
    Ok(out)
}

pub fn parse_history(text: &str) -> Result<History, ParseError> {
    let actions = parse_actions(text, false)?;
    Ok(History::new(actions).expect("internal kinds rejected while parsing"))
}

/// Parses an execution, which may contain `wb` and `prim` actions.
pub fn parse_execution(text: &str) -> Result<Vec<Action>, ParseError> {
    parse_actions(text, true)
}

pub fn serialize_actions(actions: &[Action]) -> String {
    let mut s = String::new();
    for a in actions {
        writeln!(s, "{a}").expect("writing to a String");
    }
    s
}

pub fn serialize_history(h: &History) -> String {
    serialize_actions(h.actions())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_histories() {
        let h = parse_history("1 1 begintx\n2 1 ok").unwrap();
        assert_eq!(h.len(), 2);
        let h = parse_history("1 1 write x 5\n2 1 ret").unwrap();
        assert_eq!(h[0].kind, Kind::Write(Reg::new("x"), 5));
        assert_eq!(h[1].kind, Kind::RetUnit);
    }

    #[test]
    fn comments_and_blank_lines() {
        let h = parse_history("# header\n\n1 2 read y # trailing\n2 2 ret -3\n").unwrap();
        assert_eq!(h[1].kind, Kind::Ret(-3));
        assert_eq!(h[0].thread, 2);
    }

    #[test]
    fn reports_line_numbers() {
        assert_eq!(parse_history("1 1 read").unwrap_err().line, 1);
        assert_eq!(parse_history("1 1 ok\n2 1 frob").unwrap_err().line, 2);
        assert!(parse_history("1 1 write x five").is_err());
        assert!(parse_history("1 1 wb x 1").is_err());
    }

    #[test]
    fn executions_keep_internal_actions() {
        let e = parse_execution("1 1 prim l := 1 + 2\n2 1 wb x 3").unwrap();
        assert_eq!(e[0].kind, Kind::Prim(Sym::new("l := 1 + 2")));
        assert_eq!(e[1].kind, Kind::Wb(Reg::new("x"), 3));
        assert_eq!(parse_execution(&serialize_actions(&e)).unwrap(), e);
    }
}
