//! Histories of transactional-memory clients and the checks built on them:
//! well-formedness, the strongly atomic reference TM, data-race analysis
//! and opacity graphs.

pub mod atomic;
pub mod model;
pub mod opacity;
pub mod race;
pub mod relation;
pub mod sym;
pub mod text;

pub use model::{
    history_of, project, transactions_of, validate_wellformed, Action, ActionId, History, Kind,
    Layout, NontxAccess, Selector, ThreadId, Trace, TransactionView, TxStatus, Violation,
};
pub use sym::{Reg, Sym};

/// Returned when an exhaustive search would exceed its configured size cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{units} reorderable units exceed the permutation cap of {cap}; use the graph-based checks instead")]
pub struct CapExceeded {
    pub units: usize,
    pub cap: usize,
}

/// Default cap on the number of reorderable units (transactions,
/// non-transactional accesses and fence actions) in enumeration searches.
pub const DEFAULT_PERM_CAP: usize = 12;
