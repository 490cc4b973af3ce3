//! Actions, traces, histories and their structural views.
//!
//! A trace is a sequence of actions produced by a program running against a
//! TM. Interface actions (requests and responses) make up its history; the
//! remaining actions are primitive program commands (`prim`) and internal TM
//! write-backs (`wb`).

use std::fmt;

use crate::sym::{Reg, Sym};

pub type ActionId = u64;
pub type ThreadId = u32;

/// Initial value of every register.
pub const V_INIT: i64 = 0;

/// Result value stored by `l = atomic { .. }` when the block commits.
pub const COMMITTED: i64 = i64::MIN;
/// Result value stored by `l = atomic { .. }` when the block aborts.
pub const ABORTED: i64 = i64::MIN + 1;

/// True for the two result sentinels, which lie outside the data range.
pub fn is_sentinel(v: i64) -> bool {
    v == COMMITTED || v == ABORTED
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    BeginTx,
    Ok,
    TryCommit,
    Committed,
    Aborted,
    Write(Reg, i64),
    Read(Reg),
    Ret(i64),
    RetUnit,
    FBegin,
    FEnd,
    Prim(Sym),
    Wb(Reg, i64),
}

impl Kind {
    pub fn is_request(&self) -> bool {
        matches!(
            self,
            Kind::BeginTx | Kind::TryCommit | Kind::Write(..) | Kind::Read(_) | Kind::FBegin
        )
    }

    pub fn is_response(&self) -> bool {
        matches!(
            self,
            Kind::Ok | Kind::Committed | Kind::Aborted | Kind::Ret(_) | Kind::RetUnit | Kind::FEnd
        )
    }

    /// Requests and responses; everything a history may contain.
    pub fn is_interface(&self) -> bool {
        self.is_request() || self.is_response()
    }

    /// Whether this response may answer `req`.
    pub fn answers(&self, req: &Kind) -> bool {
        match (self, req) {
            (Kind::Ok, Kind::BeginTx) => true,
            (Kind::Committed, Kind::TryCommit) => true,
            (Kind::Ret(_), Kind::Read(_)) => true,
            (Kind::RetUnit, Kind::Write(..)) => true,
            (Kind::FEnd, Kind::FBegin) => true,
            (Kind::Aborted, Kind::BeginTx | Kind::Read(_) | Kind::Write(..) | Kind::TryCommit) => {
                true
            }
            _ => false,
        }
    }

    /// Read or write request.
    pub fn is_access(&self) -> bool {
        matches!(self, Kind::Read(_) | Kind::Write(..))
    }

    pub fn reg(&self) -> Option<Reg> {
        match *self {
            Kind::Read(x) | Kind::Write(x, _) | Kind::Wb(x, _) => Some(x),
            _ => None,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::BeginTx => f.write_str("begintx"),
            Kind::Ok => f.write_str("ok"),
            Kind::TryCommit => f.write_str("trycommit"),
            Kind::Committed => f.write_str("committed"),
            Kind::Aborted => f.write_str("aborted"),
            Kind::Write(x, v) => write!(f, "write {x} {v}"),
            Kind::Read(x) => write!(f, "read {x}"),
            Kind::Ret(v) => write!(f, "ret {v}"),
            Kind::RetUnit => f.write_str("retu"),
            Kind::FBegin => f.write_str("fbegin"),
            Kind::FEnd => f.write_str("fend"),
            Kind::Prim(tag) => write!(f, "prim {tag}"),
            Kind::Wb(x, v) => write!(f, "wb {x} {v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Action {
    pub id: ActionId,
    pub thread: ThreadId,
    pub kind: Kind,
}

impl Action {
    pub fn new(id: ActionId, thread: ThreadId, kind: Kind) -> Action {
        Action { id, thread, kind }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.id, self.thread, self.kind)
    }
}

/// A sequence of interface actions.
///
/// Construction only guarantees that no internal action (`prim`, `wb`) is
/// present; well-formedness is checked separately by [`validate_wellformed`]
/// so that malformed input can still be loaded and diagnosed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct History {
    actions: Vec<Action>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("action at index {index} ({kind}) is internal and cannot appear in a history")]
pub struct InternalActionError {
    pub index: usize,
    pub kind: Kind,
}

impl History {
    pub fn new(actions: Vec<Action>) -> Result<History, InternalActionError> {
        if let Some((index, a)) = actions.iter().enumerate().find(|(_, a)| !a.kind.is_interface()) {
            return Err(InternalActionError { index, kind: a.kind });
        }
        Ok(History { actions })
    }

    pub fn empty() -> History {
        History::default()
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn into_actions(self) -> Vec<Action> {
        self.actions
    }

    pub fn max_id(&self) -> ActionId {
        self.actions.iter().map(|a| a.id).max().unwrap_or(0)
    }

    pub(crate) fn from_interface(actions: Vec<Action>) -> History {
        debug_assert!(actions.iter().all(|a| a.kind.is_interface()));
        History { actions }
    }
}

impl std::ops::Index<usize> for History {
    type Output = Action;
    fn index(&self, i: usize) -> &Action {
        &self.actions[i]
    }
}

/// A well-formed action sequence, as returned by [`validate_wellformed`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Trace {
    actions: Vec<Action>,
}

impl Trace {
    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn into_actions(self) -> Vec<Action> {
        self.actions
    }

    /// Wraps a sequence the caller already knows to be well-formed.
    pub fn from_wellformed(actions: Vec<Action>) -> Trace {
        debug_assert!(validate_wellformed(&actions).is_ok());
        Trace { actions }
    }
}

/// One violated well-formedness condition, located at an action index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Condition 1: the identifier was already used earlier in the trace.
    DuplicateId { index: usize, id: ActionId },
    /// Condition 3: a primitive action directly follows a request of the same thread.
    PrimAfterRequest { index: usize },
    /// Condition 4: a response without a pending request, a request while
    /// another is pending, or a response of the wrong kind.
    Unmatched { index: usize, detail: String },
    /// Condition 5: `begintx` inside an open transaction, or a terminal
    /// marker outside of one.
    TxNesting { index: usize },
    /// Condition 6: the action at `index` separates a non-transactional
    /// request from its response.
    NontxInterleaved { index: usize, request: usize },
    /// Condition 7: a non-transactional request answered by `aborted`.
    NontxAborted { index: usize },
}

impl Violation {
    /// Number of the violated condition.
    pub fn condition(&self) -> u8 {
        match self {
            Violation::DuplicateId { .. } => 1,
            Violation::PrimAfterRequest { .. } => 3,
            Violation::Unmatched { .. } => 4,
            Violation::TxNesting { .. } => 5,
            Violation::NontxInterleaved { .. } => 6,
            Violation::NontxAborted { .. } => 7,
        }
    }

    pub fn index(&self) -> usize {
        match *self {
            Violation::DuplicateId { index, .. }
            | Violation::PrimAfterRequest { index }
            | Violation::Unmatched { index, .. }
            | Violation::TxNesting { index }
            | Violation::NontxInterleaved { index, .. }
            | Violation::NontxAborted { index } => index,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId { index, id } => {
                write!(f, "condition 1 at index {index}: duplicate action id {id}")
            }
            Violation::PrimAfterRequest { index } => write!(
                f,
                "condition 3 at index {index}: primitive action directly after a request"
            ),
            Violation::Unmatched { index, detail } => {
                write!(f, "condition 4 at index {index}: {detail}")
            }
            Violation::TxNesting { index } => write!(
                f,
                "condition 5 at index {index}: begintx and committed/aborted do not alternate"
            ),
            Violation::NontxInterleaved { index, request } => write!(
                f,
                "condition 6 at index {index}: interleaves the non-transactional request at index {request}"
            ),
            Violation::NontxAborted { index } => write!(
                f,
                "condition 7 at index {index}: non-transactional request answered by aborted"
            ),
        }
    }
}

#[derive(Clone, Copy, Default)]
struct ThreadCursor {
    pending: Option<(usize, Kind)>,
    in_tx: bool,
    last_was_request: bool,
}

/// Checks every well-formedness condition and reports all violations.
///
/// Condition 2 (threads only touch their own locals) concerns program
/// commands and is enforced when programs are parsed; at this level
/// primitive actions are opaque tags.
pub fn validate_wellformed(seq: &[Action]) -> Result<Trace, Vec<Violation>> {
    let mut violations = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut cursors: std::collections::HashMap<ThreadId, ThreadCursor> = Default::default();
    // Open non-transactional request: (index, thread).
    let mut open_nontx: Option<(usize, ThreadId)> = None;

    for (i, a) in seq.iter().enumerate() {
        if !seen.insert(a.id) {
            violations.push(Violation::DuplicateId { index: i, id: a.id });
        }
        let cur = cursors.entry(a.thread).or_default();

        if let Some((req, t)) = open_nontx {
            let answers = t == a.thread && a.kind.is_response();
            if !answers {
                violations.push(Violation::NontxInterleaved { index: i, request: req });
            }
            open_nontx = None;
        }

        match a.kind {
            Kind::Prim(_) => {
                if cur.last_was_request {
                    violations.push(Violation::PrimAfterRequest { index: i });
                }
                cur.last_was_request = false;
            }
            Kind::Wb(..) => {}
            k if k.is_request() => {
                if let Some((p, pk)) = cur.pending {
                    violations.push(Violation::Unmatched {
                        index: i,
                        detail: format!("request `{k}` while `{pk}` at index {p} is pending"),
                    });
                }
                cur.pending = Some((i, k));
                cur.last_was_request = true;
                if k == Kind::BeginTx {
                    if cur.in_tx {
                        violations.push(Violation::TxNesting { index: i });
                    }
                    cur.in_tx = true;
                } else if k.is_access() && !cur.in_tx {
                    open_nontx = Some((i, a.thread));
                }
            }
            k => {
                // Responses.
                cur.last_was_request = false;
                match cur.pending.take() {
                    None => violations.push(Violation::Unmatched {
                        index: i,
                        detail: format!("response `{k}` without a pending request"),
                    }),
                    Some((p, req)) => {
                        if !k.answers(&req) {
                            let nontx_abort =
                                k == Kind::Aborted && req.is_access() && !cur.in_tx;
                            if !nontx_abort {
                                violations.push(Violation::Unmatched {
                                    index: i,
                                    detail: format!(
                                        "`{k}` does not answer `{req}` at index {p}"
                                    ),
                                });
                            }
                        }
                        if k == Kind::Aborted && req.is_access() && !cur.in_tx {
                            violations.push(Violation::NontxAborted { index: i });
                        }
                    }
                }
                if matches!(k, Kind::Committed | Kind::Aborted) {
                    if cur.in_tx {
                        cur.in_tx = false;
                    } else if !violations
                        .last()
                        .is_some_and(|v| matches!(v, Violation::NontxAborted { index } if *index == i))
                    {
                        violations.push(Violation::TxNesting { index: i });
                    }
                }
            }
        }
    }

    if violations.is_empty() {
        Ok(Trace { actions: seq.to_vec() })
    } else {
        Err(violations)
    }
}

/// Checks that `h` is a well-formed history.
pub fn is_wellformed(h: &History) -> bool {
    validate_wellformed(h.actions()).is_ok()
}

/// Projects a trace to its interface actions.
pub fn history_of(tr: &Trace) -> History {
    History::from_interface(
        tr.actions().iter().copied().filter(|a| a.kind.is_interface()).collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TxStatus {
    Committed,
    Aborted,
    CommitPending,
    Live,
}

/// A transaction: the actions of one thread from a `begintx` up to the
/// matching terminal marker (or the end of the history).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransactionView {
    pub thread: ThreadId,
    /// Positions of the transaction's actions, in order.
    pub actions: Vec<usize>,
    pub status: TxStatus,
}

impl TransactionView {
    pub fn first(&self) -> usize {
        self.actions[0]
    }

    pub fn last(&self) -> usize {
        *self.actions.last().expect("transactions are never empty")
    }

    /// Index range from the `begintx` to the last action, inclusive.
    pub fn span(&self) -> std::ops::RangeInclusive<usize> {
        self.first()..=self.last()
    }

    pub fn is_completed(&self) -> bool {
        matches!(self.status, TxStatus::Committed | TxStatus::Aborted)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

/// A non-transactional access: a read or write request outside any
/// transaction together with its response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NontxAccess {
    pub thread: ThreadId,
    pub request: usize,
    /// Missing only when the request is the last action of the history.
    pub response: Option<usize>,
    pub reg: Reg,
    pub kind: AccessKind,
    /// Written value for writes, returned value for answered reads.
    pub value: Option<i64>,
}

impl NontxAccess {
    pub fn positions(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.request).chain(self.response)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Owner {
    Tx(usize),
    Nontx(usize),
    /// `fbegin`/`fend` actions, which belong to neither kind of vertex.
    Fence,
    /// Internal or unmatched actions.
    Other,
}

/// Transactions, non-transactional accesses and request/response matching
/// of an action sequence. Internal actions are skipped.
#[derive(Clone, Debug)]
pub struct Layout {
    pub txs: Vec<TransactionView>,
    pub nontx: Vec<NontxAccess>,
    pub owner: Vec<Owner>,
    /// For a request, the position of its response; for a response, the
    /// position of its request.
    pub partner: Vec<Option<usize>>,
}

impl Layout {
    /// Builds the layout of a well-formed sequence. Malformed input yields
    /// a best-effort layout.
    pub fn of(actions: &[Action]) -> Layout {
        let n = actions.len();
        let mut owner = vec![Owner::Other; n];
        let mut partner = vec![None; n];
        let mut txs: Vec<TransactionView> = Vec::new();
        let mut nontx: Vec<NontxAccess> = Vec::new();
        let mut open_tx: std::collections::HashMap<ThreadId, usize> = Default::default();
        let mut pending: std::collections::HashMap<ThreadId, usize> = Default::default();

        for (i, a) in actions.iter().enumerate() {
            if !a.kind.is_interface() {
                continue;
            }
            let t = a.thread;
            if a.kind.is_request() {
                pending.insert(t, i);
                if a.kind == Kind::BeginTx && !open_tx.contains_key(&t) {
                    open_tx.insert(t, txs.len());
                    txs.push(TransactionView {
                        thread: t,
                        actions: Vec::new(),
                        status: TxStatus::Live,
                    });
                }
                if let Some(&k) = open_tx.get(&t) {
                    txs[k].actions.push(i);
                    owner[i] = Owner::Tx(k);
                } else if let Kind::Read(x) | Kind::Write(x, _) = a.kind {
                    let (kind, value) = match a.kind {
                        Kind::Write(_, v) => (AccessKind::Write, Some(v)),
                        _ => (AccessKind::Read, None),
                    };
                    owner[i] = Owner::Nontx(nontx.len());
                    nontx.push(NontxAccess {
                        thread: t,
                        request: i,
                        response: None,
                        reg: x,
                        kind,
                        value,
                    });
                } else if a.kind == Kind::FBegin {
                    owner[i] = Owner::Fence;
                }
            } else {
                let req = pending.remove(&t);
                if let Some(r) = req {
                    partner[r] = Some(i);
                    partner[i] = Some(r);
                }
                match owner_of_request(&owner, req) {
                    Some(Owner::Tx(k)) => {
                        txs[k].actions.push(i);
                        owner[i] = Owner::Tx(k);
                        if matches!(a.kind, Kind::Committed | Kind::Aborted) {
                            txs[k].status = if a.kind == Kind::Committed {
                                TxStatus::Committed
                            } else {
                                TxStatus::Aborted
                            };
                            open_tx.remove(&t);
                        }
                    }
                    Some(Owner::Nontx(k)) => {
                        owner[i] = Owner::Nontx(k);
                        nontx[k].response = Some(i);
                        if let Kind::Ret(v) = a.kind {
                            nontx[k].value = Some(v);
                        }
                    }
                    Some(Owner::Fence) => owner[i] = Owner::Fence,
                    _ => {}
                }
            }
        }
        for tx in &mut txs {
            if tx.status == TxStatus::Live
                && actions[tx.last()].kind == Kind::TryCommit
            {
                tx.status = TxStatus::CommitPending;
            }
        }
        Layout {
            txs,
            nontx,
            owner,
            partner,
        }
    }

    /// Transaction index containing position `i`, if any.
    pub fn tx_of(&self, i: usize) -> Option<usize> {
        match self.owner[i] {
            Owner::Tx(k) => Some(k),
            _ => None,
        }
    }

    pub fn is_nontx(&self, i: usize) -> bool {
        matches!(self.owner[i], Owner::Nontx(_))
    }
}

fn owner_of_request(owner: &[Owner], req: Option<usize>) -> Option<Owner> {
    req.map(|r| owner[r])
}

/// Transactions of a well-formed history, in order of their `begintx`.
pub fn transactions_of(h: &History) -> Vec<TransactionView> {
    Layout::of(h.actions()).txs
}

/// Non-transactional accesses of a well-formed history, in history order.
pub fn nontx_accesses_of(h: &History) -> Vec<NontxAccess> {
    Layout::of(h.actions()).nontx
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selector {
    Thread(ThreadId),
    Nontx,
}

/// Order-preserving sub-trace selected by thread or by non-transactional
/// access membership.
pub fn project(tr: &Trace, selector: Selector) -> Trace {
    Trace {
        actions: project_actions(tr.actions(), selector),
    }
}

pub fn project_actions(actions: &[Action], selector: Selector) -> Vec<Action> {
    match selector {
        Selector::Thread(t) => actions.iter().copied().filter(|a| a.thread == t).collect(),
        Selector::Nontx => {
            let layout = Layout::of(actions);
            actions
                .iter()
                .enumerate()
                .filter(|(i, _)| layout.is_nontx(*i))
                .map(|(_, a)| *a)
                .collect()
        }
    }
}

/// Threads appearing in the sequence, ascending.
pub fn threads_of(actions: &[Action]) -> Vec<ThreadId> {
    let mut ts: Vec<ThreadId> = actions.iter().map(|a| a.thread).collect();
    ts.sort_unstable();
    ts.dedup();
    ts
}

/// Convenience constructor used throughout tests and generators: builds a
/// history from `(thread, kind)` pairs, numbering ids from 1.
pub fn history_from_kinds(items: &[(ThreadId, Kind)]) -> History {
    let actions = items
        .iter()
        .enumerate()
        .map(|(i, &(t, k))| Action::new(i as ActionId + 1, t, k))
        .collect();
    History::new(actions).expect("interface actions only")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Reg {
        Reg::new("x")
    }

    fn acts(items: &[(ThreadId, Kind)]) -> Vec<Action> {
        history_from_kinds(items).into_actions()
    }

    #[test]
    fn empty_sequence_is_wellformed() {
        assert!(validate_wellformed(&[]).unwrap().is_empty());
    }

    #[test]
    fn lone_nontx_read_is_wellformed() {
        let seq = acts(&[(1, Kind::Read(x())), (1, Kind::Ret(0))]);
        assert!(validate_wellformed(&seq).is_ok());
    }

    #[test]
    fn interleaved_nontx_access_violates_condition_6() {
        let y = Reg::new("y");
        let seq = acts(&[
            (1, Kind::Read(x())),
            (2, Kind::Write(y, 1)),
            (1, Kind::Ret(0)),
            (2, Kind::RetUnit),
        ]);
        let errs = validate_wellformed(&seq).unwrap_err();
        assert!(errs
            .iter()
            .any(|v| v.condition() == 6 && v.index() == 1));
    }

    #[test]
    fn reports_every_violation() {
        let mut seq = acts(&[
            (1, Kind::Ok),
            (1, Kind::Read(x())),
            (1, Kind::Aborted),
        ]);
        seq.push(Action::new(1, 2, Kind::Committed));
        let errs = validate_wellformed(&seq).unwrap_err();
        let conds: Vec<u8> = errs.iter().map(Violation::condition).collect();
        assert!(conds.contains(&1));
        assert!(conds.contains(&4));
        assert!(conds.contains(&5));
        assert!(conds.contains(&7));
    }

    #[test]
    fn prim_after_request_violates_condition_3() {
        let seq = vec![
            Action::new(1, 1, Kind::Read(x())),
            Action::new(2, 1, Kind::Prim(Sym::new("skip"))),
        ];
        let errs = validate_wellformed(&seq).unwrap_err();
        assert!(errs.iter().any(|v| v.condition() == 3 && v.index() == 1));
    }

    #[test]
    fn aborted_may_answer_begintx() {
        let seq = acts(&[(1, Kind::BeginTx), (1, Kind::Aborted)]);
        assert!(validate_wellformed(&seq).is_ok());
    }

    #[test]
    fn history_of_drops_internal_actions() {
        let tr = Trace::from_wellformed(vec![
            Action::new(1, 1, Kind::BeginTx),
            Action::new(2, 1, Kind::Ok),
            Action::new(3, 1, Kind::Write(x(), 42)),
            Action::new(4, 1, Kind::RetUnit),
            Action::new(5, 1, Kind::Prim(Sym::new("assume"))),
            Action::new(6, 1, Kind::TryCommit),
            Action::new(7, 1, Kind::Wb(x(), 42)),
            Action::new(8, 1, Kind::Committed),
        ]);
        let h = history_of(&tr);
        let ids: Vec<u64> = h.actions().iter().map(|a| a.id).collect();
        assert_eq!(ids, vec![1, 2, 3, 4, 6, 8]);
    }

    #[test]
    fn transaction_statuses() {
        let committed = history_from_kinds(&[
            (1, Kind::BeginTx),
            (1, Kind::Ok),
            (1, Kind::TryCommit),
            (1, Kind::Committed),
        ]);
        assert_eq!(transactions_of(&committed)[0].status, TxStatus::Committed);

        let pending = history_from_kinds(&[(1, Kind::BeginTx), (1, Kind::Ok), (1, Kind::TryCommit)]);
        assert_eq!(transactions_of(&pending)[0].status, TxStatus::CommitPending);

        let aborted = history_from_kinds(&[(1, Kind::BeginTx), (1, Kind::Aborted)]);
        assert_eq!(transactions_of(&aborted)[0].status, TxStatus::Aborted);

        let live = history_from_kinds(&[(1, Kind::BeginTx), (1, Kind::Ok), (1, Kind::Read(x()))]);
        assert_eq!(transactions_of(&live)[0].status, TxStatus::Live);
    }

    #[test]
    fn projections() {
        let priv_ = Reg::new("priv");
        let tr = validate_wellformed(&acts(&[
            (2, Kind::BeginTx),
            (2, Kind::Ok),
            (2, Kind::Read(priv_)),
            (2, Kind::Ret(0)),
            (2, Kind::Write(x(), 42)),
            (2, Kind::RetUnit),
            (2, Kind::TryCommit),
            (2, Kind::Committed),
            (1, Kind::BeginTx),
            (1, Kind::Ok),
            (1, Kind::Write(priv_, 1)),
            (1, Kind::RetUnit),
            (1, Kind::TryCommit),
            (1, Kind::Committed),
            (1, Kind::Write(x(), 1)),
            (1, Kind::RetUnit),
        ]))
        .unwrap();
        let n = project(&tr, Selector::Nontx);
        let kinds: Vec<Kind> = n.actions().iter().map(|a| a.kind).collect();
        assert_eq!(kinds, vec![Kind::Write(x(), 1), Kind::RetUnit]);
        assert!(project(&tr, Selector::Thread(9)).is_empty());
        assert_eq!(project(&tr, Selector::Thread(2)).len(), 8);
    }
}
