//! Reference implementations of atomic-TM membership and of the search for
//! atomic histories matching a concurrent one.

use txlab_core::{Action, History, Kind, ThreadId};

/// A transaction or non-transactional access: its positions in the
/// history and, for transactions, whether it ended.
#[derive(Clone, Debug)]
struct Block {
    thread: ThreadId,
    positions: Vec<usize>,
    tx: bool,
    closed: bool,
}

fn blocks(actions: &[Action]) -> Vec<Block> {
    let mut out: Vec<Block> = Vec::new();
    // Index of the open block per thread.
    let mut open: Vec<(ThreadId, usize)> = Vec::new();
    for (i, a) in actions.iter().enumerate() {
        let cur = open.iter().position(|&(t, _)| t == a.thread);
        match cur {
            Some(k) => {
                let b = open[k].1;
                out[b].positions.push(i);
                let ends = if out[b].tx {
                    matches!(a.kind, Kind::Committed | Kind::Aborted)
                } else {
                    a.kind.is_response()
                };
                if ends {
                    out[b].closed = true;
                    open.remove(k);
                }
            }
            None => {
                out.push(Block {
                    thread: a.thread,
                    positions: vec![i],
                    tx: a.kind == Kind::BeginTx,
                    closed: false,
                });
                open.push((a.thread, out.len() - 1));
            }
        }
    }
    out
}

fn non_interleaved(bs: &[Block]) -> bool {
    let span = |b: &Block| (b.positions[0], *b.positions.last().unwrap());
    bs.iter().enumerate().all(|(i, a)| {
        bs[i + 1..].iter().all(|b| {
            let ((a0, a1), (b0, b1)) = (span(a), span(b));
            a1 < b0 || b1 < a0
        })
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Fate {
    Committed,
    Aborted,
    Live,
    NotTx,
}

/// Membership in the atomic TM, checked literally: the history is
/// non-interleaved and some completion of its commit-pending transactions
/// has every read return the last preceding write to the register that is
/// not in an aborted or live transaction other than the reader's.
pub fn is_atomic_oracle(h: &History) -> bool {
    let acts = h.actions();
    let bs = blocks(acts);
    if !non_interleaved(&bs) {
        return false;
    }
    let mut block_of = vec![0; acts.len()];
    for (k, b) in bs.iter().enumerate() {
        for &p in &b.positions {
            block_of[p] = k;
        }
    }
    let pending: Vec<usize> = (0..bs.len())
        .filter(|&k| bs[k].tx && !bs[k].closed && acts[*bs[k].positions.last().unwrap()].kind == Kind::TryCommit)
        .collect();
    'completion: for mask in 0u32..(1 << pending.len()) {
        let fate: Vec<Fate> = (0..bs.len())
            .map(|k| {
                if !bs[k].tx {
                    return Fate::NotTx;
                }
                if let Some(j) = pending.iter().position(|&p| p == k) {
                    return if mask & (1 << j) != 0 { Fate::Committed } else { Fate::Aborted };
                }
                match acts[*bs[k].positions.last().unwrap()].kind {
                    Kind::Committed => Fate::Committed,
                    Kind::Aborted => Fate::Aborted,
                    _ => Fate::Live,
                }
            })
            .collect();
        for (i, a) in acts.iter().enumerate() {
            let Kind::Ret(v) = a.kind else { continue };
            let req = (0..i).rev().find(|&j| acts[j].thread == a.thread).expect("request");
            let Kind::Read(x) = acts[req].kind else { continue };
            let reader = block_of[i];
            let last = (0..i).rev().find_map(|j| match acts[j].kind {
                Kind::Write(y, w) if y == x => {
                    let b = block_of[j];
                    let hidden = matches!(fate[b], Fate::Aborted | Fate::Live) && b != reader;
                    (!hidden).then_some(w)
                }
                _ => None,
            });
            if last.unwrap_or(0) != v {
                continue 'completion;
            }
        }
        return true;
    }
    false
}

/// Every atomic history obtained by reordering the transactions and
/// non-transactional accesses of `h` while keeping each thread's order and
/// the order of non-transactional accesses.
pub fn atomic_matches_oracle(h: &History) -> Vec<History> {
    let acts = h.actions();
    let bs = blocks(acts);
    let mut out = Vec::new();
    let mut used = vec![false; bs.len()];
    let mut order = Vec::new();
    permute(acts, &bs, &mut used, &mut order, &mut out);
    out
}

fn permute(acts: &[Action], bs: &[Block], used: &mut [bool], order: &mut Vec<usize>, out: &mut Vec<History>) {
    if order.len() == bs.len() {
        let seq: Vec<Action> = order.iter().flat_map(|&k| bs[k].positions.iter().map(|&p| acts[p])).collect();
        let s = History::new(seq).expect("interface actions");
        if is_atomic_oracle(&s) {
            out.push(s);
        }
        return;
    }
    for k in 0..bs.len() {
        if used[k] {
            continue;
        }
        // Earlier blocks of the same thread, and earlier accesses when `k`
        // is an access, must already be placed.
        let blocked = (0..k).any(|j| !used[j] && (bs[j].thread == bs[k].thread || (!bs[j].tx && !bs[k].tx)));
        if blocked {
            continue;
        }
        used[k] = true;
        order.push(k);
        permute(acts, bs, used, order, out);
        order.pop();
        used[k] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use txlab_core::model::history_from_kinds;
    use txlab_core::Reg;

    #[test]
    fn commit_pending_writers_may_be_seen() {
        let x = Reg::new("x");
        let h = history_from_kinds(&[
            (1, Kind::BeginTx),
            (1, Kind::Ok),
            (1, Kind::Write(x, 1)),
            (1, Kind::RetUnit),
            (1, Kind::TryCommit),
            (2, Kind::Read(x)),
            (2, Kind::Ret(1)),
        ]);
        assert!(is_atomic_oracle(&h));
        let mut acts = h.into_actions();
        acts[6].kind = Kind::Ret(2);
        assert!(!is_atomic_oracle(&History::new(acts).unwrap()));
    }

    #[test]
    fn interleaved_transactions_are_rejected() {
        let h = history_from_kinds(&[
            (1, Kind::BeginTx),
            (2, Kind::BeginTx),
            (1, Kind::Ok),
            (2, Kind::Ok),
        ]);
        assert!(!is_atomic_oracle(&h));
        assert_eq!(atomic_matches_oracle(&h).len(), 2);
    }
}
