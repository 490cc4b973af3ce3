//! Random histories over a few threads and registers.
//!
//! A history starts as a serial run of the atomic TM: transactions and
//! non-transactional accesses executed one at a time against a memory.
//! Depending on the mode it is then kept as is, interleaved at action
//! granularity, or interleaved with some read values replaced.

use rand::seq::SliceRandom;
use rand::Rng;
use txlab_core::model::validate_wellformed;
use txlab_core::{Action, History, Kind, Reg, ThreadId};

#[derive(Clone, Debug)]
pub struct HistoryParams {
    pub threads: std::ops::RangeInclusive<u32>,
    /// Upper bound on transactions plus non-transactional accesses.
    pub max_vertices: usize,
    pub registers: Vec<Reg>,
    /// Written values are drawn from `1..=max_value`.
    pub max_value: i64,
}

impl Default for HistoryParams {
    fn default() -> Self {
        HistoryParams {
            threads: 2..=3,
            max_vertices: 8,
            registers: vec![Reg::new("x"), Reg::new("y")],
            max_value: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Serial,
    Interleaved,
    Perturbed,
}

/// One unit of the serial run: its thread and its actions.
type Chunk = (ThreadId, Vec<Kind>);

fn serial_run(rng: &mut impl Rng, p: &HistoryParams) -> Vec<Chunk> {
    let threads = rng.gen_range(p.threads.clone());
    let units = rng.gen_range(1..=p.max_vertices);
    let mut mem: Vec<i64> = vec![0; p.registers.len()];
    let mut ended = vec![false; threads as usize + 1];
    let mut out = Vec::new();
    for _ in 0..units {
        let live: Vec<ThreadId> = (1..=threads).filter(|&t| !ended[t as usize]).collect();
        let Some(&t) = live.choose(rng) else { break };
        let r = rng.gen_range(0..p.registers.len());
        let x = p.registers[r];
        if rng.gen_bool(0.35) {
            // A non-transactional access; its request and response stay
            // adjacent in every mode.
            if rng.gen_bool(0.5) {
                out.push((t, vec![Kind::Read(x), Kind::Ret(mem[r])]));
            } else {
                let v = rng.gen_range(1..=p.max_value);
                mem[r] = v;
                out.push((t, vec![Kind::Write(x, v), Kind::RetUnit]));
            }
            continue;
        }
        let ops = rng.gen_range(0..=3);
        let fate = rng.gen_range(0..10);
        let (aborts, pending, live_tx) = ((6..8).contains(&fate), fate == 8, fate == 9);
        if pending || live_tx {
            ended[t as usize] = true;
        }
        let mut ks = vec![Kind::BeginTx];
        // Where an abort happens: 0 = at begin, 1..=ops at an access,
        // ops + 1 at commit.
        let abort_at = rng.gen_range(0..=ops + 1);
        let stop_at = rng.gen_range(0..=ops);
        if aborts && abort_at == 0 {
            ks.push(Kind::Aborted);
            out.push((t, ks));
            continue;
        }
        ks.push(Kind::Ok);
        let mut overlay: Vec<Option<i64>> = vec![None; p.registers.len()];
        let mut cut = false;
        for op in 1..=ops {
            let r = rng.gen_range(0..p.registers.len());
            let x = p.registers[r];
            let write = rng.gen_bool(0.5);
            let v = rng.gen_range(1..=p.max_value);
            ks.push(if write { Kind::Write(x, v) } else { Kind::Read(x) });
            if live_tx && op == stop_at + 1 && rng.gen_bool(0.5) {
                // Ends with a pending request.
                cut = true;
                break;
            }
            if aborts && abort_at == op {
                ks.push(Kind::Aborted);
                cut = true;
                break;
            }
            if write {
                overlay[r] = Some(v);
                ks.push(Kind::RetUnit);
            } else {
                ks.push(Kind::Ret(overlay[r].unwrap_or(mem[r])));
            }
            if live_tx && op == stop_at {
                cut = true;
                break;
            }
        }
        if !cut && !(live_tx) {
            ks.push(Kind::TryCommit);
            if aborts {
                ks.push(Kind::Aborted);
            } else if !pending {
                ks.push(Kind::Committed);
            }
            let visible = !aborts && (!pending || rng.gen_bool(0.5));
            if visible {
                for (r, v) in overlay.iter().enumerate() {
                    if let Some(v) = v {
                        mem[r] = *v;
                    }
                }
            }
        }
        out.push((t, ks));
    }
    out
}

fn interleave(rng: &mut impl Rng, chunks: Vec<Chunk>) -> Vec<(ThreadId, Kind)> {
    // Per-thread queues of pieces; a non-transactional access is one piece.
    let mut queues: Vec<(ThreadId, std::collections::VecDeque<Vec<Kind>>)> = Vec::new();
    for (t, ks) in chunks {
        let pieces: Vec<Vec<Kind>> = if ks[0] == Kind::BeginTx {
            ks.into_iter().map(|k| vec![k]).collect()
        } else {
            vec![ks]
        };
        match queues.iter_mut().find(|(u, _)| *u == t) {
            Some((_, q)) => q.extend(pieces),
            None => queues.push((t, pieces.into())),
        }
    }
    let mut out = Vec::new();
    loop {
        let open: Vec<usize> = (0..queues.len()).filter(|&i| !queues[i].1.is_empty()).collect();
        let Some(&i) = open.choose(rng) else { break };
        let t = queues[i].0;
        out.extend(queues[i].1.pop_front().unwrap().into_iter().map(|k| (t, k)));
    }
    out
}

fn to_history(items: &[(ThreadId, Kind)]) -> History {
    let actions: Vec<Action> = items
        .iter()
        .enumerate()
        .map(|(i, &(t, k))| Action::new(i as u64 + 1, t, k))
        .collect();
    validate_wellformed(&actions).expect("generated histories are well-formed");
    History::new(actions).expect("interface actions only")
}

/// A random well-formed, fence-free history in the given mode.
pub fn gen_history_in(rng: &mut impl Rng, p: &HistoryParams, mode: Mode) -> History {
    let chunks = serial_run(rng, p);
    let mut items: Vec<(ThreadId, Kind)> = match mode {
        Mode::Serial => chunks.into_iter().flat_map(|(t, ks)| ks.into_iter().map(move |k| (t, k))).collect(),
        Mode::Interleaved | Mode::Perturbed => interleave(rng, chunks),
    };
    if mode == Mode::Perturbed {
        let written: Vec<i64> = std::iter::once(0)
            .chain(items.iter().filter_map(|(_, k)| match k {
                Kind::Write(_, v) => Some(*v),
                _ => None,
            }))
            .collect();
        for (_, k) in items.iter_mut() {
            if let Kind::Ret(v) = k {
                if rng.gen_bool(0.3) {
                    *v = *written.choose(rng).unwrap();
                }
            }
        }
    }
    to_history(&items)
}

/// A random history; mostly interleaved, sometimes serial or perturbed.
pub fn gen_history(rng: &mut impl Rng, p: &HistoryParams) -> History {
    let mode = match rng.gen_range(0..10) {
        0..=2 => Mode::Serial,
        3..=7 => Mode::Interleaved,
        _ => Mode::Perturbed,
    };
    gen_history_in(rng, p, mode)
}

/// `n` consistent histories from a seeded generator.
pub fn consistent_histories(seed: u64, n: usize) -> Vec<History> {
    let mut rng = crate::rng(seed);
    let p = HistoryParams::default();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let h = gen_history(&mut rng, &p);
        if txlab_core::opacity::is_consistent(&h) {
            out.push(h);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::is_atomic_oracle;
    use crate::rng;

    #[test]
    fn serial_histories_are_atomic() {
        let mut r = rng(7);
        for _ in 0..300 {
            let h = gen_history_in(&mut r, &HistoryParams::default(), Mode::Serial);
            assert!(is_atomic_oracle(&h), "{h:?}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_history(&mut rng(3), &HistoryParams::default());
        let b = gen_history(&mut rng(3), &HistoryParams::default());
        assert_eq!(a, b);
    }
}
