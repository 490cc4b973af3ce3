//! The strongly atomic reference TM: histories where transactions never
//! overlap with other transactions or non-transactional accesses, and
//! reads see the latest write that has taken effect.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use crate::model::{Action, History, Kind, Layout, Owner, TxStatus, V_INIT};
use crate::sym::Reg;
use crate::CapExceeded;

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("history is not non-interleaved: action at index {index} falls inside another transaction")]
pub struct InterleavedError {
    pub index: usize,
}

/// First index that breaks non-interleaving, if any.
fn interleaving_witness(layout: &Layout) -> Option<usize> {
    for (k, tx) in layout.txs.iter().enumerate() {
        for i in tx.span() {
            if layout.owner[i] != Owner::Tx(k) {
                return Some(i);
            }
        }
    }
    None
}

/// True iff every transaction's actions form a contiguous block.
///
/// Any foreign action inside a transaction's span breaks this, including
/// `fbegin`/`fend`.
pub fn is_non_interleaved(h: &History) -> bool {
    interleaving_witness(&Layout::of(h.actions())).is_none()
}

/// All completions of a non-interleaved history: each commit-pending
/// transaction gets a `committed` or `aborted` marker right after its
/// `trycommit`. Markers take fresh ids above the history's maximum.
pub fn completions(h: &History) -> Result<Vec<History>, InterleavedError> {
    let layout = Layout::of(h.actions());
    if let Some(index) = interleaving_witness(&layout) {
        return Err(InterleavedError { index });
    }
    let pending: Vec<(usize, u32)> = layout
        .txs
        .iter()
        .filter(|t| t.status == TxStatus::CommitPending)
        .map(|t| (t.last(), t.thread))
        .collect();
    let base = h.max_id();
    let mut out = Vec::with_capacity(1 << pending.len());
    for mask in 0u64..(1 << pending.len()) {
        let mut actions = Vec::with_capacity(h.len() + pending.len());
        let mut next = 0;
        for (i, a) in h.actions().iter().enumerate() {
            actions.push(*a);
            if next < pending.len() && pending[next].0 == i {
                let kind = if mask >> next & 1 == 1 {
                    Kind::Committed
                } else {
                    Kind::Aborted
                };
                actions.push(Action::new(base + 1 + next as u64, pending[next].1, kind));
                next += 1;
            }
        }
        out.push(History::from_interface(actions));
    }
    Ok(out)
}

/// Value a read response at `idx` must return under the atomic TM: the
/// last preceding write to the register outside aborted or live
/// transactions other than the reader's own, or the initial value.
pub fn atomic_read_value(h: &History, idx: usize) -> i64 {
    let layout = Layout::of(h.actions());
    let req = layout.partner[idx].expect("read response must be matched");
    let Kind::Read(x) = h[req].kind else {
        panic!("index {idx} is not a read response");
    };
    let reader_tx = layout.tx_of(idx);
    for j in (0..req).rev() {
        if let Kind::Write(y, v) = h[j].kind {
            if y != x {
                continue;
            }
            let hidden = match layout.tx_of(j) {
                Some(k) if Some(k) != reader_tx => {
                    matches!(layout.txs[k].status, TxStatus::Aborted | TxStatus::Live)
                }
                _ => false,
            };
            if !hidden {
                return v;
            }
        }
    }
    V_INIT
}

/// Register contents; registers holding the initial value are absent so
/// that equal memories compare equal.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Memory(BTreeMap<Reg, i64>);

impl Memory {
    pub fn get(&self, x: Reg) -> i64 {
        self.0.get(&x).copied().unwrap_or(V_INIT)
    }

    pub fn set(&mut self, x: Reg, v: i64) {
        if v == V_INIT {
            self.0.remove(&x);
        } else {
            self.0.insert(x, v);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Reg, i64)> + '_ {
        self.0.iter().map(|(&x, &v)| (x, v))
    }
}

/// The set of memories reachable by a prefix of a non-interleaved history
/// across all choices for its commit-pending transactions. Empty when some
/// read cannot be justified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicState {
    mems: Vec<Memory>,
}

impl Default for AtomicState {
    fn default() -> Self {
        AtomicState {
            mems: vec![Memory::default()],
        }
    }
}

impl AtomicState {
    pub fn is_dead(&self) -> bool {
        self.mems.is_empty()
    }

    pub fn memories(&self) -> &[Memory] {
        &self.mems
    }

    fn normalize(&mut self) {
        self.mems.sort();
        self.mems.dedup();
    }

    /// Runs one transaction, given as its actions in order.
    pub fn apply_tx(&self, actions: &[Action], status: TxStatus) -> AtomicState {
        let mut out = Vec::new();
        'mem: for mem in &self.mems {
            let mut overlay: BTreeMap<Reg, i64> = BTreeMap::new();
            let mut pending_read: Option<Reg> = None;
            for a in actions {
                match a.kind {
                    Kind::Write(x, v) => {
                        overlay.insert(x, v);
                    }
                    Kind::Read(x) => pending_read = Some(x),
                    Kind::Ret(v) => {
                        if let Some(x) = pending_read.take() {
                            let seen = overlay.get(&x).copied().unwrap_or_else(|| mem.get(x));
                            if seen != v {
                                continue 'mem;
                            }
                        }
                    }
                    _ => pending_read = None,
                }
            }
            let committed = || {
                let mut m = mem.clone();
                for (&x, &v) in &overlay {
                    m.set(x, v);
                }
                m
            };
            match status {
                TxStatus::Committed => out.push(committed()),
                TxStatus::Aborted | TxStatus::Live => out.push(mem.clone()),
                TxStatus::CommitPending => {
                    out.push(committed());
                    out.push(mem.clone());
                }
            }
        }
        let mut st = AtomicState { mems: out };
        st.normalize();
        st
    }

    /// Runs one non-transactional access. `value` is the written value or
    /// the value returned by the read (`None` for an unanswered read).
    pub fn apply_nontx(&self, reg: Reg, write: bool, value: Option<i64>) -> AtomicState {
        let mut mems: Vec<Memory> = if write {
            self.mems
                .iter()
                .map(|m| {
                    let mut m = m.clone();
                    m.set(reg, value.expect("writes carry a value"));
                    m
                })
                .collect()
        } else {
            match value {
                Some(v) => self.mems.iter().filter(|m| m.get(reg) == v).cloned().collect(),
                None => self.mems.clone(),
            }
        };
        mems.sort();
        mems.dedup();
        AtomicState { mems }
    }
}

/// Reorderable blocks of a history: transactions, non-transactional
/// accesses and individual fence actions, each with the positions of its
/// actions.
#[derive(Clone, Debug)]
pub struct Unit {
    pub positions: Vec<usize>,
    pub kind: UnitKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitKind {
    Tx(usize),
    Nontx(usize),
    Fence,
}

pub fn units_of(layout: &Layout, len: usize) -> Vec<Unit> {
    let mut units = Vec::new();
    let mut seen_tx = vec![false; layout.txs.len()];
    let mut seen_nontx = vec![false; layout.nontx.len()];
    for i in 0..len {
        match layout.owner[i] {
            Owner::Tx(k) if !seen_tx[k] => {
                seen_tx[k] = true;
                units.push(Unit {
                    positions: layout.txs[k].actions.clone(),
                    kind: UnitKind::Tx(k),
                });
            }
            Owner::Nontx(k) if !seen_nontx[k] => {
                seen_nontx[k] = true;
                units.push(Unit {
                    positions: layout.nontx[k].positions().collect(),
                    kind: UnitKind::Nontx(k),
                });
            }
            Owner::Fence | Owner::Other => units.push(Unit {
                positions: vec![i],
                kind: UnitKind::Fence,
            }),
            _ => {}
        }
    }
    units
}

fn apply_unit(st: &AtomicState, h: &History, layout: &Layout, unit: &Unit) -> AtomicState {
    match unit.kind {
        UnitKind::Tx(k) => {
            let acts: Vec<Action> = unit.positions.iter().map(|&i| h[i]).collect();
            st.apply_tx(&acts, layout.txs[k].status)
        }
        UnitKind::Nontx(k) => {
            let n = &layout.nontx[k];
            st.apply_nontx(n.reg, n.kind == crate::model::AccessKind::Write, n.value)
        }
        UnitKind::Fence => st.clone(),
    }
}

/// Membership in the atomic TM.
pub fn is_atomic(h: &History) -> bool {
    let layout = Layout::of(h.actions());
    if interleaving_witness(&layout).is_some() {
        return false;
    }
    let mut st = AtomicState::default();
    for unit in units_of(&layout, h.len()) {
        st = apply_unit(&st, h, &layout, &unit);
        if st.is_dead() {
            return false;
        }
    }
    true
}

/// Precomputed search space for atomic histories matching `h`.
pub struct MatchSearch<'a> {
    h: &'a History,
    layout: Layout,
    units: Vec<Unit>,
    preds: Vec<u64>,
}

impl<'a> MatchSearch<'a> {
    pub fn new(h: &'a History, cap: usize) -> Result<MatchSearch<'a>, CapExceeded> {
        let layout = Layout::of(h.actions());
        let units = units_of(&layout, h.len());
        if units.len() > cap.min(64) {
            return Err(CapExceeded {
                units: units.len(),
                cap,
            });
        }
        let mut unit_of = vec![usize::MAX; h.len()];
        for (u, unit) in units.iter().enumerate() {
            for &i in &unit.positions {
                unit_of[i] = u;
            }
        }
        // Unit u must precede unit v when some action of u precedes some
        // action of v in per-thread or client order.
        let mut preds = vec![0u64; units.len()];
        for i in 0..h.len() {
            for j in i + 1..h.len() {
                let (u, v) = (unit_of[i], unit_of[j]);
                if u == v {
                    continue;
                }
                let ordered = h[i].thread == h[j].thread
                    || (layout.is_nontx(i) && layout.is_nontx(j));
                if ordered {
                    preds[v] |= 1 << u;
                }
            }
        }
        Ok(MatchSearch {
            h,
            layout,
            units,
            preds,
        })
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    /// Builds the history obtained by placing units in `order`.
    pub fn materialize(&self, order: &[usize]) -> History {
        let actions = order
            .iter()
            .flat_map(|&u| self.units[u].positions.iter().map(|&i| self.h[i]))
            .collect();
        History::from_interface(actions)
    }

    /// Calls `visit` with the unit order of every atomic history matching
    /// the input, stopping early on `Break`.
    pub fn visit<B>(&self, mut visit: impl FnMut(&[usize]) -> ControlFlow<B>) -> Option<B> {
        let mut order = Vec::with_capacity(self.units.len());
        match self.dfs(0, &AtomicState::default(), &mut order, &mut visit) {
            ControlFlow::Break(b) => Some(b),
            ControlFlow::Continue(()) => None,
        }
    }

    fn dfs<B>(
        &self,
        placed: u64,
        st: &AtomicState,
        order: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        if order.len() == self.units.len() {
            return visit(order);
        }
        for u in 0..self.units.len() {
            if placed >> u & 1 == 1 || self.preds[u] & !placed != 0 {
                continue;
            }
            let next = apply_unit(st, self.h, &self.layout, &self.units[u]);
            if next.is_dead() {
                continue;
            }
            order.push(u);
            self.dfs(placed | 1 << u, &next, order, visit)?;
            order.pop();
        }
        ControlFlow::Continue(())
    }
}

/// Every atomic history `S` with `h ⊑ S`.
pub fn enumerate_atomic_matches(h: &History, cap: usize) -> Result<Vec<History>, CapExceeded> {
    let search = MatchSearch::new(h, cap)?;
    let mut out = Vec::new();
    search.visit::<()>(|order| {
        out.push(search.materialize(order));
        ControlFlow::Continue(())
    });
    Ok(out)
}

/// Some atomic history `S` with `h ⊑ S`, if one exists.
pub fn find_atomic_match(h: &History, cap: usize) -> Result<Option<History>, CapExceeded> {
    let search = MatchSearch::new(h, cap)?;
    Ok(search.visit(|order| ControlFlow::Break(search.materialize(order))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::history_from_kinds;

    fn x() -> Reg {
        Reg::new("x")
    }

    fn y() -> Reg {
        Reg::new("y")
    }

    /// Commit-pending t1 writing 1, live t2 writing 2, then t3 reads 1.
    fn h0() -> History {
        history_from_kinds(&[
            (1, Kind::BeginTx),
            (1, Kind::Ok),
            (1, Kind::Write(x(), 1)),
            (1, Kind::RetUnit),
            (1, Kind::TryCommit),
            (2, Kind::BeginTx),
            (2, Kind::Ok),
            (2, Kind::Write(x(), 2)),
            (3, Kind::Read(x())),
            (3, Kind::Ret(1)),
        ])
    }

    #[test]
    fn non_interleaving() {
        assert!(is_non_interleaved(&History::empty()));
        assert!(is_non_interleaved(&h0()));
        let h = history_from_kinds(&[
            (1, Kind::BeginTx),
            (1, Kind::Ok),
            (2, Kind::Read(x())),
            (2, Kind::Ret(0)),
            (1, Kind::TryCommit),
        ]);
        assert!(!is_non_interleaved(&h));
    }

    #[test]
    fn completion_counts() {
        let committed = history_from_kinds(&[
            (1, Kind::BeginTx),
            (1, Kind::Ok),
            (1, Kind::TryCommit),
            (1, Kind::Committed),
        ]);
        assert_eq!(completions(&committed).unwrap(), vec![committed.clone()]);

        let cs = completions(&h0()).unwrap();
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().any(|c| c[5].kind == Kind::Committed && c[5].thread == 1));

        let two = history_from_kinds(&[
            (1, Kind::BeginTx),
            (1, Kind::Ok),
            (1, Kind::TryCommit),
            (2, Kind::BeginTx),
            (2, Kind::Ok),
            (2, Kind::TryCommit),
        ]);
        assert_eq!(completions(&two).unwrap().len(), 4);
    }

    #[test]
    fn read_values() {
        let h = history_from_kinds(&[(1, Kind::Read(x())), (1, Kind::Ret(5))]);
        assert_eq!(atomic_read_value(&h, 1), 0);

        let own = history_from_kinds(&[
            (1, Kind::BeginTx),
            (1, Kind::Ok),
            (1, Kind::Write(x(), 7)),
            (1, Kind::RetUnit),
            (1, Kind::Read(x())),
            (1, Kind::Ret(7)),
        ]);
        assert_eq!(atomic_read_value(&own, 5), 7);

        let aborted = history_from_kinds(&[
            (1, Kind::BeginTx),
            (1, Kind::Ok),
            (1, Kind::Write(x(), 7)),
            (1, Kind::RetUnit),
            (1, Kind::TryCommit),
            (1, Kind::Aborted),
            (2, Kind::Read(x())),
            (2, Kind::Ret(0)),
        ]);
        assert_eq!(atomic_read_value(&aborted, 7), 0);
    }

    #[test]
    fn membership() {
        assert!(is_atomic(&h0()));
        assert!(is_atomic(&history_from_kinds(&[(1, Kind::Read(x())), (1, Kind::Ret(0))])));
        let bad = history_from_kinds(&[
            (1, Kind::BeginTx),
            (1, Kind::Ok),
            (1, Kind::Write(x(), 1)),
            (1, Kind::RetUnit),
            (1, Kind::TryCommit),
            (1, Kind::Committed),
            (2, Kind::Read(x())),
            (2, Kind::Ret(2)),
        ]);
        assert!(!is_atomic(&bad));
    }

    /// T writes x=1, y=2 under a weak TM while n1 reads x=1 and n2 reads
    /// y=0 between the two write-backs.
    fn fig3_weak() -> History {
        history_from_kinds(&[
            (1, Kind::BeginTx),
            (1, Kind::Ok),
            (1, Kind::Write(x(), 1)),
            (1, Kind::RetUnit),
            (1, Kind::Write(y(), 2)),
            (1, Kind::RetUnit),
            (1, Kind::TryCommit),
            (2, Kind::Read(x())),
            (2, Kind::Ret(1)),
            (2, Kind::Read(y())),
            (2, Kind::Ret(0)),
            (1, Kind::Committed),
        ])
    }

    #[test]
    fn fig3_weak_history_has_no_atomic_match() {
        assert!(enumerate_atomic_matches(&fig3_weak(), 12).unwrap().is_empty());
    }

    #[test]
    fn fig3_matches_filtered_by_values() {
        // Same shape with n1, n2 reading the initial values: only n1 n2 T.
        let mut acts = fig3_weak().into_actions();
        acts[8].kind = Kind::Ret(0);
        let h = History::new(acts).unwrap();
        let ms = enumerate_atomic_matches(&h, 12).unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0][0].thread, 2);
    }

    #[test]
    fn concurrent_committed_transactions_yield_both_orders() {
        let h = history_from_kinds(&[
            (1, Kind::BeginTx),
            (2, Kind::BeginTx),
            (1, Kind::Ok),
            (2, Kind::Ok),
            (1, Kind::Write(x(), 1)),
            (2, Kind::Write(y(), 1)),
            (1, Kind::RetUnit),
            (2, Kind::RetUnit),
            (1, Kind::TryCommit),
            (2, Kind::TryCommit),
            (1, Kind::Committed),
            (2, Kind::Committed),
        ]);
        assert_eq!(enumerate_atomic_matches(&h, 12).unwrap().len(), 2);
    }

    #[test]
    fn cap_is_enforced() {
        let items: Vec<(u32, Kind)> = (0..5)
            .flat_map(|i| [(i, Kind::Read(x())), (i, Kind::Ret(0))])
            .collect();
        let h = history_from_kinds(&items);
        assert_eq!(
            MatchSearch::new(&h, 4).err(),
            Some(CapExceeded { units: 5, cap: 4 })
        );
    }
}
