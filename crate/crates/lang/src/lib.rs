//! A small language of transactional client programs: parsing, an
//! interpreter driven either by a step-machine TM or by the strongly
//! atomic TM, and program-level verdicts.

mod ast;
mod check;
mod compile;
mod corpus;
mod explore;
mod interp;
mod parse;

pub use ast::{tags, BinOp, Expr, LocalRef, Program, Stmt, Thread, UnOp, Value};
pub use check::{
    check_cdrf_runs, check_opacity_runs, check_postcondition, check_refinement, obs_equiv, observe, refines,
    tdrf_program, Observation, PostVerdict, RunVerdict, TdrfVerdict,
};
pub use corpus::{corpus_entry, CorpusEntry, CORPUS};
pub use explore::{
    canonical, explore, explore_atomic, explore_exact, Bounds, ExploreResult, FinalState, InvFailure,
    MachineOptions, Run, RunEnd,
};
pub use parse::{parse_program, ParseError};
