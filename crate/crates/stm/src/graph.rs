//! Opacity graphs built alongside an execution from the machines' notes.
//!
//! The graph keeps only the choices the algorithm makes (read sources,
//! write order, which commit-pending transactions already took effect);
//! vertices, `RW`, `PO`, `CL` and `RT` are recomputed from the history
//! whenever the graph is materialized.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use txlab_core::opacity::{cons, vertices_of, GraphError, OpacityGraph};
use txlab_core::relation::BitRel;
use txlab_core::{Action, History, Kind, Layout, Reg, TxStatus};

use crate::{Algorithm, Note, VertexKey};

/// Read sources, write orders and write-visible transactions chosen so far.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct OnlineGraph {
    /// `(writer, reader)` per register. Reads of the initial value have no
    /// entry.
    wr: BTreeMap<Reg, Vec<(VertexKey, VertexKey)>>,
    ww: BTreeMap<Reg, Vec<VertexKey>>,
    /// Transactions whose writes were ordered, visible even while
    /// commit-pending.
    writing: BTreeSet<VertexKey>,
}

/// A failed check after one graph update.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvCheck {
    /// The graph could not be built from the history.
    Graph(GraphError),
    /// A note names a vertex the history does not contain.
    UnknownVertex(VertexKey),
    Cyclic,
    /// The history is not consistent.
    Inconsistent,
    /// Dependencies between transactions plus real-time order form a cycle.
    TxCycle,
    /// An uncompleted transaction has a dependency path to a transaction
    /// followed by more work in its thread (fenced form), or a direct
    /// dependency while waiting for nothing (lock form).
    UncompletedDependency { tx: VertexKey },
    /// A read update added an anti-dependency out of the reader.
    ReadAddedRw { vertex: VertexKey },
}

impl fmt::Display for InvCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvCheck::Graph(e) => write!(f, "graph: {e}"),
            InvCheck::UnknownVertex(k) => write!(f, "note for unknown vertex {}.{}", k.thread, k.seq),
            InvCheck::Cyclic => f.write_str("graph is cyclic"),
            InvCheck::Inconsistent => f.write_str("history is inconsistent"),
            InvCheck::TxCycle => f.write_str("txDEP ∪ RT has a cycle"),
            InvCheck::UncompletedDependency { tx } => {
                write!(f, "uncompleted transaction {}.{} has outgoing dependencies", tx.thread, tx.seq)
            }
            InvCheck::ReadAddedRw { vertex } => {
                write!(f, "read update added RW edges out of {}.{}", vertex.thread, vertex.seq)
            }
        }
    }
}

/// Keys of the vertices of `h`: thread plus ordinal within the thread.
fn vertex_keys(h: &History) -> Result<(OpacityGraphParts, BTreeMap<VertexKey, usize>), GraphError> {
    let layout = Layout::of(h.actions());
    let (vertices, _) = vertices_of(h, &layout)?;
    let mut next: BTreeMap<u32, u32> = BTreeMap::new();
    let mut index = BTreeMap::new();
    let mut keys = Vec::with_capacity(vertices.len());
    for (i, v) in vertices.iter().enumerate() {
        let seq = next.entry(v.thread).or_insert(0);
        let k = VertexKey { thread: v.thread, seq: *seq };
        *seq += 1;
        index.insert(k, i);
        keys.push(k);
    }
    Ok((OpacityGraphParts { vertices, keys }, index))
}

struct OpacityGraphParts {
    vertices: Vec<txlab_core::opacity::Vertex>,
    keys: Vec<VertexKey>,
}

impl OnlineGraph {
    pub fn new() -> OnlineGraph {
        OnlineGraph::default()
    }

    pub fn apply(&mut self, note: &Note) {
        match note {
            Note::TxInit { .. } => {}
            Note::TxRead { tx: r, reg, src } | Note::NtxRead { access: r, reg, src } => {
                if let Some(w) = src {
                    let es = self.wr.entry(*reg).or_default();
                    if !es.contains(&(*w, *r)) {
                        es.push((*w, *r));
                    }
                }
            }
            Note::TxWrite { tx, regs } => {
                for x in regs {
                    self.ww.entry(*x).or_default().push(*tx);
                }
                self.writing.insert(*tx);
            }
            Note::NtxWrite { access, reg } => self.ww.entry(*reg).or_default().push(*access),
        }
    }

    /// The graph over the vertices of `h`, which must contain every vertex
    /// named by the applied notes.
    pub fn materialize(&self, h: &History) -> Result<OpacityGraph, InvCheck> {
        self.materialize_keyed(h).map(|(g, _)| g)
    }

    fn materialize_keyed(&self, h: &History) -> Result<(OpacityGraph, Vec<VertexKey>), InvCheck> {
        let (parts, index) = vertex_keys(h).map_err(InvCheck::Graph)?;
        let at = |k: &VertexKey| index.get(k).copied().ok_or(InvCheck::UnknownVertex(*k));
        let mut wr: BTreeMap<Reg, Vec<(usize, usize)>> = BTreeMap::new();
        for (&x, es) in &self.wr {
            let mut mapped = Vec::with_capacity(es.len());
            for (w, r) in es {
                mapped.push((at(w)?, at(r)?));
            }
            wr.insert(x, mapped);
        }
        let mut ww: BTreeMap<Reg, Vec<usize>> = BTreeMap::new();
        for (&x, order) in &self.ww {
            ww.insert(x, order.iter().map(at).collect::<Result<_, _>>()?);
        }
        let vis = parts
            .vertices
            .iter()
            .zip(&parts.keys)
            .map(|(v, k)| v.fixed_vis().unwrap_or_else(|| self.writing.contains(k)))
            .collect();
        Ok((OpacityGraph::assemble(h, parts.vertices, vis, wr, ww), parts.keys))
    }

    /// Applies `note` to the graph of `h` and checks the invariants the
    /// algorithm is expected to maintain. Returns the failed checks.
    pub fn update(&mut self, h: &History, note: &Note, algorithm: Algorithm) -> Vec<InvCheck> {
        let before = if note.is_read() {
            self.materialize_keyed(h).ok()
        } else {
            None
        };
        self.apply(note);
        let (g, keys) = match self.materialize_keyed(h) {
            Ok(x) => x,
            Err(e) => return vec![e],
        };
        let mut out = check_invariants(h, &g, &keys, algorithm);
        if let Some((g0, _)) = before {
            let k = note.vertex();
            if let Some(r) = keys.iter().position(|&x| x == k) {
                let old = rw_out(&g0, r);
                if rw_out(&g, r).iter().any(|e| !old.contains(e)) {
                    out.push(InvCheck::ReadAddedRw { vertex: k });
                }
            }
        }
        out
    }
}

fn rw_out(g: &OpacityGraph, r: usize) -> BTreeSet<(Reg, usize)> {
    g.rw
        .iter()
        .flat_map(|(&x, es)| es.iter().filter(|&&(a, _)| a == r).map(move |&(_, b)| (x, b)))
        .collect()
}

/// Acyclicity plus both invariants for `(h, g)`.
pub fn check_invariants(h: &History, g: &OpacityGraph, keys: &[VertexKey], algorithm: Algorithm) -> Vec<InvCheck> {
    let mut out = Vec::new();
    if !g.is_acyclic() {
        out.push(InvCheck::Cyclic);
    }
    if !cons(h).is_empty() {
        out.push(InvCheck::Inconsistent);
    }
    let tx_dep = g.tx_dep();
    let mut with_rt = tx_dep.clone();
    with_rt.union_with(&g.rt);
    if !with_rt.is_acyclic() {
        out.push(InvCheck::TxCycle);
    }
    let uncompleted = |v: usize| {
        matches!(g.vertices[v].status, Some(TxStatus::Live | TxStatus::CommitPending))
    };
    if algorithm.is_lock_based() {
        for t in (0..g.len()).filter(|&t| uncompleted(t)) {
            let last = *g.vertices[t].actions.last().expect("nonempty");
            if h[last].kind.is_response() && tx_dep.successors(t).next().is_some() {
                out.push(InvCheck::UncompletedDependency { tx: keys[t] });
            }
        }
    } else {
        let reach: BitRel = tx_dep.star();
        for t in (0..g.len()).filter(|&t| uncompleted(t)) {
            if reach
                .successors(t)
                .any(|u| g.vertices[u].is_tx() && g.po.successors(u).next().is_some())
            {
                out.push(InvCheck::UncompletedDependency { tx: keys[t] });
            }
        }
    }
    out
}

/// An execution: a trace including write-backs, plus the notes the machine
/// reported. Each note records how many actions preceded it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Execution {
    pub actions: Vec<Action>,
    pub notes: Vec<(usize, Note)>,
}

impl Execution {
    /// The interface actions among the first `upto` actions.
    pub fn history_at(&self, upto: usize) -> History {
        History::new(
            self.actions[..upto]
                .iter()
                .copied()
                .filter(|a| a.kind.is_interface())
                .collect(),
        )
        .expect("interface actions only")
    }

    pub fn history(&self) -> History {
        self.history_at(self.actions.len())
    }

    /// Write-backs that fall outside a transaction of the emitting thread.
    pub fn stray_write_backs(&self) -> Vec<usize> {
        let mut open: BTreeSet<u32> = BTreeSet::new();
        let mut out = Vec::new();
        for (i, a) in self.actions.iter().enumerate() {
            match a.kind {
                Kind::BeginTx => {
                    open.insert(a.thread);
                }
                Kind::Committed | Kind::Aborted => {
                    open.remove(&a.thread);
                }
                Kind::Wb(..) if !open.contains(&a.thread) => out.push(i),
                _ => {}
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct WitnessReport {
    /// The graph after the last update.
    pub graph: Option<OpacityGraph>,
    /// Failed checks as `(note index, check)`.
    pub failures: Vec<(usize, InvCheck)>,
    pub updates: usize,
}

impl WitnessReport {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Replays the notes of `execution` and checks the invariants after every
/// update.
pub fn witness_graph(execution: &Execution, algorithm: Algorithm) -> WitnessReport {
    let mut g = OnlineGraph::new();
    let mut failures = Vec::new();
    for (i, (pos, note)) in execution.notes.iter().enumerate() {
        let h = execution.history_at(*pos);
        failures.extend(g.update(&h, note, algorithm).into_iter().map(|f| (i, f)));
    }
    let graph = g.materialize(&execution.history()).ok();
    WitnessReport {
        graph,
        failures,
        updates: execution.notes.len(),
    }
}
