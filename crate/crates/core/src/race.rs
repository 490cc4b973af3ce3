//! Conflicts, happens-before, transactional data-race freedom and the
//! correspondence between concurrent and atomic histories.

use std::ops::ControlFlow;

use crate::atomic::{is_atomic, MatchSearch};
use crate::model::{History, Kind, Layout};
use crate::relation::BitRel;
use crate::sym::Reg;
use crate::CapExceeded;

/// A non-transactional request and a transactional request of another
/// thread accessing the same register, at least one of them a write.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConflictPair {
    pub nontx: usize,
    pub tx: usize,
    pub reg: Reg,
    pub nontx_writes: bool,
    pub tx_writes: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("history is not produced by the atomic TM")]
pub struct NotAtomic;

fn access(kind: Kind) -> Option<(Reg, bool)> {
    match kind {
        Kind::Read(x) => Some((x, false)),
        Kind::Write(x, _) => Some((x, true)),
        _ => None,
    }
}

pub fn conflicts(h: &History) -> Vec<ConflictPair> {
    conflicts_in(h, &Layout::of(h.actions()))
}

pub(crate) fn conflicts_in(h: &History, layout: &Layout) -> Vec<ConflictPair> {
    let mut out = Vec::new();
    for n in &layout.nontx {
        let i = n.request;
        let Some((x, nw)) = access(h[i].kind) else { continue };
        for tx in &layout.txs {
            if tx.thread == h[i].thread {
                continue;
            }
            for &j in &tx.actions {
                if let Some((y, tw)) = access(h[j].kind) {
                    if x == y && (nw || tw) {
                        out.push(ConflictPair {
                            nontx: i,
                            tx: j,
                            reg: x,
                            nontx_writes: nw,
                            tx_writes: tw,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Per-thread order over action positions.
pub fn po(h: &History) -> BitRel {
    let mut r = BitRel::new(h.len());
    for i in 0..h.len() {
        for j in i + 1..h.len() {
            if h[i].thread == h[j].thread {
                r.add(i, j);
            }
        }
    }
    r
}

/// Effect order: execution order between actions of different transactions.
pub fn ef(h: &History) -> BitRel {
    ef_in(h, &Layout::of(h.actions()))
}

fn ef_in(h: &History, layout: &Layout) -> BitRel {
    let mut r = BitRel::new(h.len());
    for i in 0..h.len() {
        let Some(a) = layout.tx_of(i) else { continue };
        for j in i + 1..h.len() {
            if matches!(layout.tx_of(j), Some(b) if b != a) {
                r.add(i, j);
            }
        }
    }
    r
}

/// Client order: execution order between non-transactional actions.
pub fn cl(h: &History) -> BitRel {
    cl_in(h, &Layout::of(h.actions()))
}

fn cl_in(h: &History, layout: &Layout) -> BitRel {
    let mut r = BitRel::new(h.len());
    for i in 0..h.len() {
        if !layout.is_nontx(i) {
            continue;
        }
        for j in i + 1..h.len() {
            if layout.is_nontx(j) {
                r.add(i, j);
            }
        }
    }
    r
}

/// `(po ∪ ef ∪ cl)⁺` without checking atomicity.
pub fn hb_unchecked(h: &History) -> BitRel {
    let layout = Layout::of(h.actions());
    let mut r = po(h);
    r.union_with(&ef_in(h, &layout));
    r.union_with(&cl_in(h, &layout));
    r.closure()
}

/// Happens-before of an atomic history.
pub fn happens_before(h: &History) -> Result<BitRel, NotAtomic> {
    if !is_atomic(h) {
        return Err(NotAtomic);
    }
    Ok(hb_unchecked(h))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TdrfReport {
    /// Conflicts not ordered by happens-before.
    pub races: Vec<ConflictPair>,
}

impl TdrfReport {
    pub fn race_free(&self) -> bool {
        self.races.is_empty()
    }
}

fn unordered(h: &History, rel: &BitRel) -> Vec<ConflictPair> {
    conflicts(h)
        .into_iter()
        .filter(|c| !rel.contains(c.nontx, c.tx) && !rel.contains(c.tx, c.nontx))
        .collect()
}

/// Transactional data-race freedom of an atomic history.
pub fn tdrf(h: &History) -> Result<TdrfReport, NotAtomic> {
    let hb = happens_before(h)?;
    Ok(TdrfReport {
        races: unordered(h, &hb),
    })
}

/// Finds a bijection `θ` with `h1[i] = h2[θ(i)]` that preserves the
/// per-thread and client orders of `h1`.
pub fn corresponds(h1: &History, h2: &History) -> Option<Vec<usize>> {
    if h1.len() != h2.len() {
        return None;
    }
    let mut pos2 = std::collections::HashMap::with_capacity(h2.len());
    for (j, a) in h2.actions().iter().enumerate() {
        if pos2.insert(a.id, j).is_some() {
            return None;
        }
    }
    let mut theta = Vec::with_capacity(h1.len());
    for a in h1.actions() {
        let &j = pos2.get(&a.id)?;
        if h2[j] != *a {
            return None;
        }
        theta.push(j);
    }
    let mut seen = vec![false; h2.len()];
    for &j in &theta {
        if std::mem::replace(&mut seen[j], true) {
            return None;
        }
    }
    // po and cl are each total on their domains, so checking that θ is
    // monotone along each chain suffices.
    let layout = Layout::of(h1.actions());
    let mut last_thread: std::collections::HashMap<u32, usize> = Default::default();
    let mut last_nontx: Option<usize> = None;
    for (i, a) in h1.actions().iter().enumerate() {
        if let Some(prev) = last_thread.insert(a.thread, theta[i]) {
            if prev > theta[i] {
                return None;
            }
        }
        if layout.is_nontx(i) {
            if let Some(prev) = last_nontx.replace(theta[i]) {
                if prev > theta[i] {
                    return None;
                }
            }
        }
    }
    Some(theta)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CdrfReport {
    /// An atomic history matching the input that is not race free.
    pub racy_match: Option<(History, Vec<ConflictPair>)>,
    /// Number of matching atomic histories examined.
    pub matches: usize,
}

impl CdrfReport {
    pub fn holds(&self) -> bool {
        self.racy_match.is_none()
    }
}

/// Concurrent data-race freedom by enumerating the matching atomic
/// histories.
pub fn cdrf(h: &History, cap: usize) -> Result<CdrfReport, CapExceeded> {
    check_all_matches(h, cap, |s| unordered(s, &hb_unchecked(s)))
}

fn check_all_matches(
    h: &History,
    cap: usize,
    races: impl Fn(&History) -> Vec<ConflictPair>,
) -> Result<CdrfReport, CapExceeded> {
    let search = MatchSearch::new(h, cap)?;
    let mut matches = 0;
    let racy_match = search.visit(|order| {
        matches += 1;
        let s = search.materialize(order);
        let r = races(&s);
        if r.is_empty() {
            ControlFlow::Continue(())
        } else {
            ControlFlow::Break((s, r))
        }
    });
    Ok(CdrfReport {
        racy_match,
        matches,
    })
}

/// Restricted per-thread order: same thread with a `begintx` of that
/// thread strictly in between.
pub fn xpo(h: &History) -> BitRel {
    let mut r = BitRel::new(h.len());
    for i in 0..h.len() {
        let t = h[i].thread;
        let mut seen_begin = false;
        for j in i + 1..h.len() {
            if h[j].thread != t {
                continue;
            }
            if seen_begin {
                r.add(i, j);
            }
            if h[j].kind == Kind::BeginTx {
                seen_begin = true;
            }
        }
    }
    r
}

/// Fenced happens-before `(po ∪ cl ∪ afs ∪ bfe ∪ xpo;ef)⁺`.
pub fn fhb(h: &History) -> BitRel {
    let layout = Layout::of(h.actions());
    let n = h.len();
    let mut r = po(h);
    r.union_with(&cl_in(h, &layout));
    for i in 0..n {
        for j in i + 1..n {
            let afs = h[i].kind == Kind::FBegin && h[j].kind == Kind::BeginTx;
            let bfe = matches!(h[i].kind, Kind::Committed | Kind::Aborted) && h[j].kind == Kind::FEnd;
            if afs || bfe {
                r.add(i, j);
            }
        }
    }
    r.union_with(&xpo(h).compose(&ef_in(h, &layout)));
    r.closure()
}

/// Data-race freedom for histories with fences: every matching atomic
/// history orders all its conflicts by fenced happens-before.
pub fn drf_fenced(h: &History, cap: usize) -> Result<CdrfReport, CapExceeded> {
    check_all_matches(h, cap, |s| unordered(s, &fhb(s)))
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
    fn pv() -> Reg {
        Reg::new("priv")
    }

    fn tx(t: u32, body: &[Kind], end: Kind) -> Vec<(u32, Kind)> {
        let mut v = vec![(t, Kind::BeginTx), (t, Kind::Ok)];
        v.extend(body.iter().map(|&k| (t, k)));
        v.push((t, Kind::TryCommit));
        v.push((t, end));
        v
    }

    /// T2 reads priv=0 and writes x=42, then T1 sets priv, then n writes x=1.
    fn fig1_t2_t1_n() -> History {
        let mut items = tx(
            2,
            &[Kind::Read(pv()), Kind::Ret(0), Kind::Write(x(), 42), Kind::RetUnit],
            Kind::Committed,
        );
        items.extend(tx(1, &[Kind::Write(pv(), 1), Kind::RetUnit], Kind::Committed));
        items.extend([(1, Kind::Write(x(), 1)), (1, Kind::RetUnit)]);
        history_from_kinds(&items)
    }

    /// T writes x and y, then n1 reads x=1 and n2 reads y=2.
    fn fig3_serial() -> History {
        let mut items = tx(
            1,
            &[Kind::Write(x(), 1), Kind::RetUnit, Kind::Write(y(), 2), Kind::RetUnit],
            Kind::Committed,
        );
        items.extend([
            (2, Kind::Read(x())),
            (2, Kind::Ret(1)),
            (2, Kind::Read(y())),
            (2, Kind::Ret(2)),
        ]);
        history_from_kinds(&items)
    }

    #[test]
    fn conflict_sets() {
        let no_nontx = history_from_kinds(&tx(1, &[Kind::Write(x(), 1), Kind::RetUnit], Kind::Committed));
        assert!(conflicts(&no_nontx).is_empty());

        let cs = conflicts(&fig3_serial());
        assert_eq!(cs.len(), 2);
        assert!(cs.iter().any(|c| c.reg == x() && c.nontx == 8 && c.tx == 2));
        assert!(cs.iter().any(|c| c.reg == y() && c.nontx == 10 && c.tx == 4));

        let mut reads = tx(1, &[Kind::Read(x()), Kind::Ret(0)], Kind::Committed);
        reads.extend([(2, Kind::Read(x())), (2, Kind::Ret(0))]);
        assert!(conflicts(&history_from_kinds(&reads)).is_empty());
    }

    #[test]
    fn hb_single_thread_is_po() {
        let h = history_from_kinds(&[
            (1, Kind::Write(x(), 1)),
            (1, Kind::RetUnit),
            (1, Kind::Read(x())),
            (1, Kind::Ret(1)),
        ]);
        assert_eq!(happens_before(&h).unwrap(), po(&h));
    }

    #[test]
    fn fig1_conflict_is_ordered() {
        let h = fig1_t2_t1_n();
        let hb = happens_before(&h).unwrap();
        // T2's write of x (index 4) happens before n's write (index 14).
        assert!(hb.contains(4, 14));
        assert!(tdrf(&h).unwrap().race_free());
    }

    #[test]
    fn fig3_is_racy() {
        let r = tdrf(&fig3_serial()).unwrap();
        assert_eq!(r.races.len(), 2);
    }

    #[test]
    fn nontx_accesses_ordered_by_client_order() {
        let h = history_from_kinds(&[
            (1, Kind::Write(x(), 1)),
            (1, Kind::RetUnit),
            (2, Kind::Read(x())),
            (2, Kind::Ret(1)),
        ]);
        assert!(happens_before(&h).unwrap().contains(0, 3));
    }

    #[test]
    fn tdrf_requires_atomic_input() {
        let h = history_from_kinds(&[(1, Kind::Read(x())), (1, Kind::Ret(3))]);
        assert_eq!(tdrf(&h), Err(NotAtomic));
    }

    #[test]
    fn correspondence() {
        let h = fig1_t2_t1_n();
        assert_eq!(corresponds(&h, &h), Some((0..h.len()).collect()));

        // Swapping two committed transactions of different threads.
        let a = tx(1, &[Kind::Write(x(), 1), Kind::RetUnit], Kind::Committed);
        let b = tx(2, &[Kind::Write(y(), 1), Kind::RetUnit], Kind::Committed);
        let h1 = history_from_kinds(&[a.clone(), b.clone()].concat());
        let mut swapped = h1.actions()[6..].to_vec();
        swapped.extend_from_slice(&h1.actions()[..6]);
        assert!(corresponds(&h1, &History::new(swapped).unwrap()).is_some());

        // Reordering non-transactional accesses breaks client order.
        let n = history_from_kinds(&[
            (1, Kind::Write(x(), 1)),
            (1, Kind::RetUnit),
            (2, Kind::Write(y(), 1)),
            (2, Kind::RetUnit),
        ]);
        let mut rev = n.actions()[2..].to_vec();
        rev.extend_from_slice(&n.actions()[..2]);
        assert!(corresponds(&n, &History::new(rev).unwrap()).is_none());
    }

    #[test]
    fn cdrf_by_enumeration() {
        let quiet = history_from_kinds(&tx(1, &[Kind::Write(x(), 1), Kind::RetUnit], Kind::Committed));
        assert!(cdrf(&quiet, 12).unwrap().holds());
        assert!(cdrf(&fig1_t2_t1_n(), 12).unwrap().holds());
        assert!(!cdrf(&fig3_serial(), 12).unwrap().holds());
    }

    #[test]
    fn fhb_without_fences_is_po_on_one_thread() {
        let h = history_from_kinds(&tx(1, &[Kind::Read(x()), Kind::Ret(0)], Kind::Committed));
        assert_eq!(fhb(&h), po(&h).closure());
    }

    #[test]
    fn fence_orders_privatization() {
        // T2 T1 α1 α2 n, with the fence by t1.
        let mut items = tx(
            2,
            &[Kind::Read(pv()), Kind::Ret(0), Kind::Write(x(), 42), Kind::RetUnit],
            Kind::Committed,
        );
        items.extend(tx(1, &[Kind::Write(pv(), 1), Kind::RetUnit], Kind::Committed));
        items.extend([
            (1, Kind::FBegin),
            (1, Kind::FEnd),
            (1, Kind::Write(x(), 1)),
            (1, Kind::RetUnit),
        ]);
        let h = history_from_kinds(&items);
        let f = fhb(&h);
        assert!(f.contains(7, 15), "T2 ends before the fence ends");
        assert!(f.contains(4, 16));
        assert!(drf_fenced(&h, 12).unwrap().holds());
    }

    #[test]
    fn publication_via_xpo_ef() {
        // n writes x, T1 clears priv, T2 reads priv then x.
        let mut items = vec![(1, Kind::Write(x(), 42)), (1, Kind::RetUnit)];
        items.extend(tx(1, &[Kind::Write(pv(), 0), Kind::RetUnit], Kind::Committed));
        items.extend(tx(
            2,
            &[Kind::Read(pv()), Kind::Ret(0), Kind::Read(x()), Kind::Ret(42)],
            Kind::Committed,
        ));
        let h = history_from_kinds(&items);
        let f = fhb(&h);
        assert!(f.contains(0, 12), "write in n precedes read in T2");
        assert!(xpo(&h).contains(0, 4));
    }
}
