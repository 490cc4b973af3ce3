//! `run` and `tm-props`: program exploration and bounded TM searches.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use txlab_core::atomic::find_atomic_match;
use txlab_core::model::{ABORTED, COMMITTED};
use txlab_core::opacity::serialize_graph;
use txlab_core::text::serialize_history;
use txlab_core::History;
use txlab_lang::{
    check_postcondition, explore, explore_atomic, observe, parse_program, tdrf_program, Bounds, ExploreResult,
    FinalState, MachineOptions, Observation, Program,
};
use txlab_stm::props::{check_invisible_reads_bounded, check_progressive_bounded, ClientOp, PropReport};
use txlab_stm::{witness_graph, Algorithm};

use crate::history_cmd::describe_race;
use crate::report::{CheckLine, Report, Verdict};
use crate::{CliError, RunCheck, WitnessSink};

/// A path to a program file, or else the name of a corpus program.
pub(crate) fn resolve_program(arg: &str) -> Result<(Program, Option<&Path>), CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {arg}: {e}")))?;
        let p = parse_program(&src).map_err(|e| CliError::Input(format!("{arg}:{e}")))?;
        return Ok((p, Some(path)));
    }
    match txlab_lang::corpus_entry(arg) {
        Some(e) => Ok((e.program(), None)),
        None => Err(CliError::Input(format!("`{arg}` is neither a file nor a corpus program"))),
    }
}

enum Tm {
    Atomic,
    Machine(Algorithm),
}

fn parse_tm(s: &str) -> Result<Tm, CliError> {
    if s == "atomic" {
        return Ok(Tm::Atomic);
    }
    Algorithm::from_str(s)
        .map(Tm::Machine)
        .map_err(|e| CliError::Input(format!("{e}; expected atomic, fencedtl2, tl2, 2pl or globallock")))
}

fn value(v: i64) -> String {
    match v {
        COMMITTED => "committed".into(),
        ABORTED => "aborted".into(),
        v => v.to_string(),
    }
}

pub(crate) fn describe_final(p: &Program, f: &FinalState) -> String {
    let mut parts = Vec::new();
    for (t, th) in p.threads.iter().enumerate() {
        for (slot, name) in th.locals.iter().enumerate() {
            parts.push(format!("{}.{name}={}", th.name, value(f.locals[t][slot])));
        }
    }
    for (x, v) in &f.memory {
        parts.push(format!("{x}={v}"));
    }
    parts.join(" ")
}

fn annotated(h: &History, lines: &[String]) -> String {
    let mut s: String = lines.iter().map(|l| format!("# {l}\n")).collect();
    s.push_str(&serialize_history(h));
    s
}

pub(crate) fn run(
    p: &Program,
    tm: &str,
    checks: &[RunCheck],
    bounds: &Bounds,
    sink: &WitnessSink,
) -> Result<Report, CliError> {
    let tm = parse_tm(tm)?;
    let mut checks = checks.to_vec();
    checks.sort();
    checks.dedup();
    if matches!(tm, Tm::Atomic) && checks.contains(&RunCheck::WitnessGraph) {
        return Err(CliError::Input("witness-graph needs a TM implementation, not `atomic`".into()));
    }
    let mut report = Report::default();
    let tdrf = checks.contains(&RunCheck::Tdrf).then(|| tdrf_program(p, *bounds));
    let result = match tm {
        Tm::Atomic => match &tdrf {
            Some(v) => v.result.clone(),
            None => explore_atomic(p, *bounds),
        },
        Tm::Machine(alg) => {
            let opts = MachineOptions {
                check_invariants: checks.contains(&RunCheck::WitnessGraph),
            };
            explore(p, alg, *bounds, opts)
        }
    };
    report.settings.push(("runs".into(), result.runs.len().to_string()));
    report.settings.push(("states".into(), result.states.to_string()));
    for c in checks {
        let name = c.name();
        match c {
            RunCheck::Post => {
                let v = check_postcondition(&result, p);
                let line = CheckLine::new(name, Verdict::from_holds(v.holds, v.partial)).field("finals", v.finals);
                match v.failing {
                    None => report.checks.push(line),
                    Some((f, run)) => {
                        let fin = describe_final(p, &f);
                        report.checks.push(line.field("failing-final", &fin));
                        let h = result.runs[run].history();
                        let text = annotated(&h, &[format!("final state: {fin}")]);
                        sink.write(&mut report, name, "hist", &text)?;
                    }
                }
            }
            RunCheck::Tdrf => {
                let v = tdrf.as_ref().expect("computed above");
                let line = CheckLine::new(name, Verdict::from_holds(v.holds, v.partial))
                    .field("atomic-runs", v.result.runs.len());
                match &v.witness {
                    None => report.checks.push(line),
                    Some((run, races)) => {
                        let h = v.result.runs[*run].history();
                        let why: Vec<String> = races.iter().map(|c| describe_race(&h, c)).collect();
                        let mut line = line;
                        for w in &why {
                            line = line.field("race", w);
                        }
                        report.checks.push(line);
                        let why: Vec<String> = why.into_iter().map(|w| format!("race {w}")).collect();
                        sink.write(&mut report, name, "hist", &annotated(&h, &why))?;
                    }
                }
            }
            RunCheck::Refinement => {
                let line = match tm {
                    Tm::Atomic => CheckLine::new(name, Verdict::from_holds(true, result.partial)),
                    Tm::Machine(_) => refinement(p, &result, bounds, sink, &mut report)?,
                };
                report.checks.push(line);
            }
            RunCheck::WitnessGraph => {
                let Tm::Machine(alg) = tm else { unreachable!("rejected above") };
                let line = witness_graphs(alg, &result, sink, &mut report)?;
                report.checks.push(line);
            }
        }
    }
    Ok(report)
}

/// Matches every run against the runs of a fresh atomic exploration by
/// observation. Runs without a counterpart there (the atomic exploration
/// keeps one run per merged state) are searched for an atomic history
/// with the same per-thread and client orders.
fn refinement(
    p: &Program,
    result: &ExploreResult,
    bounds: &Bounds,
    sink: &WitnessSink,
    report: &mut Report,
) -> Result<CheckLine, CliError> {
    let atomic = explore_atomic(p, *bounds);
    let seen: HashSet<Observation> = atomic.runs.iter().map(|r| observe(&r.trace)).collect();
    let (mut direct, mut searched) = (0, 0);
    let mut failing = None;
    for (i, r) in result.runs.iter().enumerate() {
        if seen.contains(&observe(&r.trace)) {
            direct += 1;
        } else if find_atomic_match(&r.history(), bounds.perm_cap)?.is_some() {
            searched += 1;
        } else {
            failing = Some(i);
            break;
        }
    }
    let partial = result.partial || atomic.partial;
    let line = CheckLine::new("refinement", Verdict::from_holds(failing.is_none(), partial))
        .field("atomic-runs", atomic.runs.len())
        .field("matched-directly", direct)
        .field("matched-by-search", searched);
    if let Some(i) = failing {
        let h = result.runs[i].history();
        let text = annotated(&h, &["no observationally equivalent atomic trace".into()]);
        sink.write(report, "refinement", "hist", &text)?;
    }
    Ok(line)
}

fn witness_graphs(
    alg: Algorithm,
    result: &ExploreResult,
    sink: &WitnessSink,
    report: &mut Report,
) -> Result<CheckLine, CliError> {
    let mut updates = 0;
    let mut failing = None;
    for (i, r) in result.runs.iter().enumerate() {
        let w = witness_graph(&r.execution(), alg);
        updates += w.updates;
        if failing.is_none() && !w.holds() {
            failing = Some((i, w));
        }
    }
    let holds = failing.is_none() && result.inv_failures.is_empty();
    let mut line = CheckLine::new("witness-graph", Verdict::from_holds(holds, result.partial))
        .field("updates", updates)
        .field("online-failures", result.inv_failures.len());
    if let Some((i, w)) = failing {
        let (at, check) = &w.failures[0];
        line = line.field("failure", format!("{check} at note {at}"));
        let h = result.runs[i].history();
        sink.write(report, "witness-graph", "hist", &annotated(&h, &[format!("{check} at note {at}")]))?;
        if let Some(g) = &w.graph {
            sink.write(report, "witness-graph", "graph", &serialize_graph(g))?;
        }
    } else if let Some(f) = result.inv_failures.first() {
        line = line.field("failure", &f.check);
        let h = History::new(f.trace.iter().copied().filter(|a| a.kind.is_interface()).collect())
            .expect("interface actions only");
        sink.write(report, "witness-graph", "hist", &annotated(&h, &[f.check.to_string()]))?;
    }
    Ok(line)
}

fn schedule(ops: &[ClientOp]) -> String {
    ops.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("; ")
}

fn prop_line(name: &str, r: &PropReport) -> CheckLine {
    let mut line = CheckLine::new(name, Verdict::from_holds(r.holds, false)).field("states", r.states);
    if let Some(w) = &r.witness {
        line = line.field("witness", schedule(w));
    }
    line
}

pub(crate) fn tm_props(tm: &str, depth: usize) -> Result<Report, CliError> {
    let Tm::Machine(alg) = parse_tm(tm)? else {
        return Err(CliError::Input("tm-props needs a TM implementation, not `atomic`".into()));
    };
    let mut report = Report::default();
    report.checks.push(prop_line("progressive", &check_progressive_bounded(alg, depth)));
    report.checks.push(prop_line("invisible-reads", &check_invisible_reads_bounded(alg, depth)));
    Ok(report)
}
