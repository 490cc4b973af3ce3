//! Step-machine software transactional memories.
//!
//! Each [`Machine`] is a deterministic state machine driven one micro-step
//! at a time by an external scheduler. Steps report write-backs, responses
//! and graph-update notes that let [`graph`] rebuild an opacity graph
//! alongside the execution.

use std::fmt;
use std::str::FromStr;

use txlab_core::{Kind, Reg, ThreadId};

pub mod graph;
mod machine;
pub mod props;

pub use graph::{check_invariants, witness_graph, Execution, InvCheck, OnlineGraph, WitnessReport};
pub use machine::Machine;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// TL2 with a transactional fence after every transaction.
    FencedTl2,
    Tl2,
    TwoPl,
    GlobalLock,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::FencedTl2, Algorithm::Tl2, Algorithm::TwoPl, Algorithm::GlobalLock];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FencedTl2 => "fencedtl2",
            Algorithm::Tl2 => "tl2",
            Algorithm::TwoPl => "2pl",
            Algorithm::GlobalLock => "globallock",
        }
    }

    /// Whether the algorithm blocks on locks instead of aborting.
    pub fn is_lock_based(self) -> bool {
        matches!(self, Algorithm::TwoPl | Algorithm::GlobalLock)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown TM `{0}` (expected fencedtl2, tl2, 2pl or globallock)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;
    fn from_str(s: &str) -> Result<Algorithm, UnknownAlgorithm> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

/// A transactional request from a client thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Request {
    Begin,
    Read(Reg),
    Write(Reg, i64),
    Commit,
}

impl Request {
    pub fn kind(self) -> Kind {
        match self {
            Request::Begin => Kind::BeginTx,
            Request::Read(x) => Kind::Read(x),
            Request::Write(x, v) => Kind::Write(x, v),
            Request::Commit => Kind::TryCommit,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Response {
    Ok,
    Ret(i64),
    RetUnit,
    Committed,
    Aborted,
}

impl Response {
    pub fn kind(self) -> Kind {
        match self {
            Response::Ok => Kind::Ok,
            Response::Ret(v) => Kind::Ret(v),
            Response::RetUnit => Kind::RetUnit,
            Response::Committed => Kind::Committed,
            Response::Aborted => Kind::Aborted,
        }
    }
}

/// Identifies a vertex (transaction or non-transactional access) by its
/// thread and its position among that thread's vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexKey {
    pub thread: ThreadId,
    pub seq: u32,
}

/// Graph updates reported by the machines at the points where the
/// algorithm fixes an ordering.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Note {
    TxInit { tx: VertexKey },
    /// `src` is the vertex whose write the read returned, `None` for the
    /// initial value.
    TxRead { tx: VertexKey, reg: Reg, src: Option<VertexKey> },
    TxWrite { tx: VertexKey, regs: Vec<Reg> },
    NtxRead { access: VertexKey, reg: Reg, src: Option<VertexKey> },
    NtxWrite { access: VertexKey, reg: Reg },
}

impl Note {
    pub fn vertex(&self) -> VertexKey {
        match *self {
            Note::TxInit { tx } | Note::TxRead { tx, .. } | Note::TxWrite { tx, .. } => tx,
            Note::NtxRead { access, .. } | Note::NtxWrite { access, .. } => access,
        }
    }

    pub fn is_read(&self) -> bool {
        matches!(self, Note::TxRead { .. } | Note::NtxRead { .. })
    }
}

/// What one micro-step produced, in order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Effect {
    Wb(Reg, i64),
    Respond(Response),
    Note(Note),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    /// No request pending and nothing left to do.
    Idle,
    /// Some micro-step can be taken.
    Ready,
    /// Waiting for a lock or for a fence.
    Blocked,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum IllegalRequest {
    #[error("thread {0} already has a pending request")]
    Pending(ThreadId),
    #[error("thread {0} is waiting on a fence")]
    Fenced(ThreadId),
    #[error("thread {thread}: {request:?} is not legal {where_}")]
    Phase {
        thread: ThreadId,
        request: Request,
        where_: &'static str,
    },
    #[error("thread {0} is out of range")]
    NoSuchThread(ThreadId),
}
