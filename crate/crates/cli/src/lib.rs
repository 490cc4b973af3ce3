//! The `txlab` command line: history checks, program exploration under a
//! chosen TM, bounded TM property searches and the built-in corpus.
//!
//! Exit codes: 0 pass, 1 fail, 2 bad input, 3 permutation cap exceeded,
//! 4 partial (a bound was hit and nothing failed).

mod history_cmd;
pub mod report;
mod run_cmd;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use txlab_core::CapExceeded;
use txlab_lang::{corpus_entry, Bounds, CORPUS};

pub use report::{CheckLine, Report, Verdict};

#[derive(Debug, Parser)]
#[command(name = "txlab", version, about = "Check transactional histories and explore TM clients")]
pub struct Cli {
    /// Exploration and search bounds, e.g. `depth=10,loop=3,perm-cap=12`.
    #[arg(long, global = true, value_parser = parse_bounds, default_value = "depth=10,loop=3,perm-cap=12")]
    pub bounds: Bounds,
    /// Seed for sampled modes. Every current mode is exhaustive, so the
    /// seed is only echoed in reports.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Where witness files go; defaults to the directory of the input, or
    /// the current directory for corpus programs.
    #[arg(long, global = true)]
    pub witness_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    JsonLines,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a history file.
    CheckHistory {
        file: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "wf")]
        checks: Vec<HistoryCheck>,
    },
    /// Explore a program (a file or a corpus name) under a TM.
    Run {
        program: String,
        /// A TM name (fencedtl2, tl2, 2pl, globallock) or `atomic`.
        #[arg(long, default_value = "atomic")]
        tm: String,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "post")]
        check: Vec<RunCheck>,
    },
    /// Bounded searches for progressiveness and invisible reads.
    TmProps {
        #[arg(long)]
        tm: String,
        /// Maximum number of client requests in a schedule.
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// The built-in example programs.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CorpusAction {
    List,
    Show { name: String },
}

/// History checks, declared in the order they run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum HistoryCheck {
    Wf,
    Atomic,
    Cons,
    Tdrf,
    Cdrf,
    CdrfGraph,
    Opacity,
    OpacityGraph,
    FencedDrf,
}

impl HistoryCheck {
    pub fn name(self) -> &'static str {
        match self {
            HistoryCheck::Wf => "wf",
            HistoryCheck::Atomic => "atomic",
            HistoryCheck::Cons => "cons",
            HistoryCheck::Tdrf => "tdrf",
            HistoryCheck::Cdrf => "cdrf",
            HistoryCheck::CdrfGraph => "cdrf-graph",
            HistoryCheck::Opacity => "opacity",
            HistoryCheck::OpacityGraph => "opacity-graph",
            HistoryCheck::FencedDrf => "fenced-drf",
        }
    }

    fn uses_graphs(self) -> bool {
        matches!(self, HistoryCheck::CdrfGraph | HistoryCheck::OpacityGraph)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum RunCheck {
    Post,
    Tdrf,
    Refinement,
    WitnessGraph,
}

impl RunCheck {
    pub fn name(self) -> &'static str {
        match self {
            RunCheck::Post => "post",
            RunCheck::Tdrf => "tdrf",
            RunCheck::Refinement => "refinement",
            RunCheck::WitnessGraph => "witness-graph",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Cap(#[from] CapExceeded),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Cap(_) => 3,
        }
    }
}

pub fn parse_bounds(s: &str) -> Result<Bounds, String> {
    let mut b = Bounds::default();
    for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| format!("expected key=value, got `{item}`"))?;
        let n: usize = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
        match k.trim() {
            "depth" => b.depth = n,
            "loop" => b.loop_bound = n as u32,
            "perm-cap" => b.perm_cap = n,
            other => return Err(format!("unknown bound `{other}`")),
        }
    }
    Ok(b)
}

pub fn format_bounds(b: &Bounds) -> String {
    format!("depth={},loop={},perm-cap={}", b.depth, b.loop_bound, b.perm_cap)
}

/// Writes witness files as `<dir>/<stem>.<check>.witness.<ext>`.
pub(crate) struct WitnessSink {
    dir: PathBuf,
    stem: String,
}

impl WitnessSink {
    fn for_input(cli: &Cli, input: Option<&Path>, stem: &str) -> WitnessSink {
        let dir = cli
            .witness_dir
            .clone()
            .or_else(|| input.and_then(Path::parent).map(Path::to_path_buf))
            .unwrap_or_default();
        WitnessSink {
            dir,
            stem: stem.to_string(),
        }
    }

    pub(crate) fn write(&self, report: &mut Report, check: &str, ext: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(format!("{}.{check}.witness.{ext}", self.stem));
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        report.witnesses.push(path);
        Ok(())
    }
}

pub enum Output {
    Report(Report),
    Text(String),
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::CheckHistory { file, checks } => {
            let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let sink = WitnessSink::for_input(cli, Some(file), &stem);
            let mut r = history_cmd::check_history(file, checks, &cli.bounds, &sink)?;
            r.command = format!("check-history {} --checks {}", file.display(), names(checks.iter().map(|c| c.name())));
            r
        }
        Command::Run { program, tm, check } => {
            let (p, input) = run_cmd::resolve_program(program)?;
            let stem = match input {
                Some(path) => path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                None => program.clone(),
            };
            let sink = WitnessSink::for_input(cli, input, &stem);
            let mut r = run_cmd::run(&p, tm, check, &cli.bounds, &sink)?;
            r.command = format!("run {program} --tm {tm} --check {}", names(check.iter().map(|c| c.name())));
            r
        }
        Command::TmProps { tm, depth } => {
            let mut r = run_cmd::tm_props(tm, *depth)?;
            r.command = format!("tm-props --tm {tm} --depth {depth}");
            r.settings.push(("depth".into(), depth.to_string()));
            r
        }
        Command::Corpus { action } => return corpus(action).map(Output::Text),
    };
    report.settings.insert(0, ("bounds".into(), format_bounds(&cli.bounds)));
    report.settings.insert(1, ("seed".into(), cli.seed.to_string()));
    report.elapsed = start.elapsed();
    Ok(Output::Report(report))
}

fn names<'a>(it: impl Iterator<Item = &'a str>) -> String {
    it.collect::<Vec<_>>().join(",")
}

fn corpus(action: &CorpusAction) -> Result<String, CliError> {
    match action {
        CorpusAction::List => Ok(CORPUS.iter().map(|e| format!("{}: {}\n", e.name, e.summary)).collect()),
        CorpusAction::Show { name } => corpus_entry(name)
            .map(|e| e.source.to_string())
            .ok_or_else(|| CliError::Input(format!("no corpus program named `{name}`"))),
    }
}

/// Parses `args` (without the program name), runs the command and writes
/// its output to `out`. Returns the exit code.
pub fn main_with(args: &[String], out: &mut impl std::io::Write, err: &mut impl std::io::Write) -> i32 {
    let cli = match Cli::try_parse_from(std::iter::once("txlab".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(if code == 0 { out as &mut dyn std::io::Write } else { err }, "{e}");
            return code;
        }
    };
    match execute(&cli) {
        Ok(Output::Text(s)) => {
            let _ = write!(out, "{s}");
            0
        }
        Ok(Output::Report(r)) => {
            let s = match cli.format {
                Format::Text => r.render_text(),
                Format::JsonLines => r.render_json_lines(),
            };
            let _ = write!(out, "{s}");
            r.exit_code()
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_parse_partially() {
        let b = parse_bounds("loop=5").unwrap();
        assert_eq!((b.depth, b.loop_bound, b.perm_cap), (10, 5, 12));
        assert_eq!(format_bounds(&parse_bounds("depth=4,loop=1,perm-cap=8").unwrap()), "depth=4,loop=1,perm-cap=8");
        assert!(parse_bounds("depth").is_err());
        assert!(parse_bounds("width=3").is_err());
    }

    #[test]
    fn corpus_listing_names_every_program() {
        let s = corpus(&CorpusAction::List).unwrap();
        for name in ["fig1", "fig2", "fig3", "fig5", "fig6", "thm25"] {
            assert!(s.contains(&format!("{name}: ")), "{name}");
        }
        assert!(corpus(&CorpusAction::Show { name: "nope".into() }).is_err());
    }

    #[test]
    fn checks_sort_in_dependency_order() {
        let mut cs = vec![HistoryCheck::OpacityGraph, HistoryCheck::Wf, HistoryCheck::Cons];
        cs.sort();
        assert_eq!(cs, [HistoryCheck::Wf, HistoryCheck::Cons, HistoryCheck::OpacityGraph]);
    }
}
