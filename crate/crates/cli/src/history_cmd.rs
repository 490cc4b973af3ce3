//! `check-history`: checks on a single history file.

use std::path::Path;

use txlab_core::atomic::is_atomic;
use txlab_core::opacity::{
    cdrf_graph, check_opaque_direct, check_opaque_graph, cons, serialize_graph, CdrfGraphOptions, GraphError,
};
use txlab_core::race::{cdrf, drf_fenced, tdrf, ConflictPair, CdrfReport};
use txlab_core::text::{parse_history, serialize_history};
use txlab_core::{validate_wellformed, History, Kind};
use txlab_lang::Bounds;

use crate::report::{CheckLine, Report, Verdict};
use crate::{CliError, HistoryCheck, WitnessSink};

pub(crate) fn describe_race(h: &History, c: &ConflictPair) -> String {
    format!("[{}] / [{}] on {}", h[c.tx], h[c.nontx], c.reg)
}

fn with_header(h: &History, lines: &[String]) -> String {
    let mut s: String = lines.iter().map(|l| format!("# {l}\n")).collect();
    s.push_str(&serialize_history(h));
    s
}

struct Ctx<'a> {
    h: &'a History,
    cap: usize,
    sink: &'a WitnessSink,
    report: Report,
}

impl Ctx<'_> {
    /// Records a failing check and writes the history annotated with `why`.
    fn fail_with_history(&mut self, line: CheckLine, why: &[String]) -> Result<(), CliError> {
        let name = line.name.clone();
        self.report.checks.push(line);
        let text = with_header(self.h, why);
        self.sink.write(&mut self.report, &name, "hist", &text)
    }

    fn racy_match(&mut self, name: &str, r: CdrfReport) -> Result<(), CliError> {
        let line = CheckLine::new(name, Verdict::from_holds(r.holds(), false)).field("matches", r.matches);
        match r.racy_match {
            None => self.report.checks.push(line),
            Some((s, races)) => {
                let why: Vec<String> = races.iter().map(|c| format!("race {}", describe_race(&s, c))).collect();
                let mut line = line;
                for w in &why {
                    line = line.field("race", w.trim_start_matches("race "));
                }
                self.report.checks.push(line);
                let text = with_header(&s, &why);
                self.sink.write(&mut self.report, name, "hist", &text)?;
            }
        }
        Ok(())
    }

    fn run(&mut self, check: HistoryCheck, consistent: bool) -> Result<(), CliError> {
        let h = self.h;
        let name = check.name();
        match check {
            HistoryCheck::Wf => unreachable!("handled before the other checks"),
            HistoryCheck::Atomic => {
                if is_atomic(h) {
                    self.report.checks.push(CheckLine::new(name, Verdict::Pass));
                } else {
                    self.fail_with_history(CheckLine::new(name, Verdict::Fail), &["not a history of the atomic TM".into()])?;
                }
            }
            HistoryCheck::Cons => {
                let vs = cons(h);
                if vs.is_empty() {
                    self.report.checks.push(CheckLine::new(name, Verdict::Pass));
                } else {
                    let why: Vec<String> = vs
                        .iter()
                        .map(|v| format!("read of {} returning {} at [{}] has no justifying write", v.reg, v.value, h[v.response]))
                        .collect();
                    let mut line = CheckLine::new(name, Verdict::Fail);
                    for w in &why {
                        line = line.field("violation", w);
                    }
                    self.fail_with_history(line, &why)?;
                }
            }
            HistoryCheck::Tdrf => match tdrf(h) {
                Err(e) => self.fail_with_history(CheckLine::new(name, Verdict::Fail).field("reason", e), &[e.to_string()])?,
                Ok(r) if r.race_free() => self.report.checks.push(CheckLine::new(name, Verdict::Pass)),
                Ok(r) => {
                    let why: Vec<String> = r.races.iter().map(|c| describe_race(h, c)).collect();
                    let mut line = CheckLine::new(name, Verdict::Fail);
                    for w in &why {
                        line = line.field("race", w);
                    }
                    let why: Vec<String> = why.into_iter().map(|w| format!("race {w}")).collect();
                    self.fail_with_history(line, &why)?;
                }
            },
            HistoryCheck::Cdrf => {
                let r = cdrf(h, self.cap)?;
                self.racy_match(name, r)?;
            }
            HistoryCheck::FencedDrf => {
                let r = drf_fenced(h, self.cap)?;
                self.racy_match(name, r)?;
            }
            HistoryCheck::CdrfGraph => {
                if !consistent {
                    // Inconsistent histories have no graphs; enumeration
                    // decides instead.
                    let r = cdrf(h, self.cap)?;
                    self.racy_match(name, r)?;
                    if let Some(l) = self.report.checks.last_mut() {
                        l.fields.insert(0, ("method".into(), "enumeration".into()));
                    }
                    return Ok(());
                }
                match cdrf_graph(h, CdrfGraphOptions::default()) {
                    Err(GraphError::Cap(c)) => return Err(c.into()),
                    Err(e) => {
                        self.fail_with_history(CheckLine::new(name, Verdict::Fail).field("reason", e), &[e.to_string()])?
                    }
                    Ok(r) => match r.counterexample {
                        None => self
                            .report
                            .checks
                            .push(CheckLine::new(name, Verdict::Pass).field("graphs", r.graphs_checked)),
                        Some((g, a, b)) => {
                            let pair = format!("{} and {} conflict without a connecting path", g.vertices[a].name, g.vertices[b].name);
                            let line = CheckLine::new(name, Verdict::Fail)
                                .field("graphs", r.graphs_checked)
                                .field("unordered", &pair);
                            self.fail_with_history(line, std::slice::from_ref(&pair))?;
                            let graph = format!("# {pair}\n{}", serialize_graph(&g));
                            self.sink.write(&mut self.report, name, "graph", &graph)?;
                        }
                    },
                }
            }
            HistoryCheck::Opacity => match check_opaque_direct(h, self.cap)? {
                Some(s) => {
                    self.report.checks.push(CheckLine::new(name, Verdict::Pass));
                    let text = with_header(&s, &["matching atomic history".into()]);
                    self.sink.write(&mut self.report, name, "hist", &text)?;
                }
                None => self.fail_with_history(
                    CheckLine::new(name, Verdict::Fail),
                    &["no atomic history preserves the required orders".into()],
                )?,
            },
            HistoryCheck::OpacityGraph => {
                if !consistent {
                    let why = "history is not consistent";
                    return self.fail_with_history(CheckLine::new(name, Verdict::Fail).field("reason", why), &[why.into()]);
                }
                match check_opaque_graph(h) {
                    Err(GraphError::Cap(c)) => return Err(c.into()),
                    Err(e) => {
                        self.fail_with_history(CheckLine::new(name, Verdict::Fail).field("reason", e), &[e.to_string()])?
                    }
                    Ok(Some(g)) => {
                        self.report.checks.push(CheckLine::new(name, Verdict::Pass));
                        let graph = format!("# acyclic opacity graph\n{}", serialize_graph(&g));
                        self.sink.write(&mut self.report, name, "graph", &graph)?;
                    }
                    Ok(None) => self.fail_with_history(
                        CheckLine::new(name, Verdict::Fail),
                        &["every opacity graph has a cycle".into()],
                    )?,
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_history(
    file: &Path,
    checks: &[HistoryCheck],
    bounds: &Bounds,
    sink: &WitnessSink,
) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(file).map_err(|e| CliError::Input(format!("cannot read {}: {e}", file.display())))?;
    let h = parse_history(&text).map_err(|e| CliError::Input(format!("{}: {e}", file.display())))?;
    check_parsed(&h, checks, bounds, sink)
}

/// Runs `checks` in dependency order: well-formedness first, and
/// consistency before the graph checks. Both are added when missing.
pub(crate) fn check_parsed(
    h: &History,
    checks: &[HistoryCheck],
    bounds: &Bounds,
    sink: &WitnessSink,
) -> Result<Report, CliError> {
    let mut order: Vec<HistoryCheck> = checks.to_vec();
    order.push(HistoryCheck::Wf);
    if order.iter().any(|c| c.uses_graphs()) {
        order.push(HistoryCheck::Cons);
    }
    order.sort();
    order.dedup();
    let mut ctx = Ctx {
        h,
        cap: bounds.perm_cap,
        sink,
        report: Report::default(),
    };
    if let Err(vs) = validate_wellformed(h.actions()) {
        let why: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
        let mut line = CheckLine::new("wf", Verdict::Fail);
        for w in &why {
            line = line.field("violation", w);
        }
        let skipped: Vec<&str> = order[1..].iter().map(|c| c.name()).collect();
        if !skipped.is_empty() {
            line = line.field("skipped", skipped.join(","));
        }
        ctx.fail_with_history(line, &why)?;
        return Ok(ctx.report);
    }
    let fences = h.actions().iter().any(|a| matches!(a.kind, Kind::FBegin | Kind::FEnd));
    ctx.report
        .checks
        .push(CheckLine::new("wf", Verdict::Pass).field("actions", h.len()).field("fences", fences));
    let consistent = cons(h).is_empty();
    for &c in &order[1..] {
        ctx.run(c, consistent)?;
    }
    Ok(ctx.report)
}
