//! Consistency, opacity graphs and the checks built on them.
//!
//! Vertices are the transactions and non-transactional accesses of a
//! history, numbered by their first action. A graph fixes which
//! commit-pending transactions took effect (`vis`), who each read reads
//! from (`WR`), and a total write order per register (`WW`); anti
//! dependencies (`RW`) follow from those. `PO`, `CL` and `RT` are lifted
//! from the history.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::ControlFlow;

use crate::atomic::find_atomic_match;
use crate::model::{Action, History, Kind, Layout, Owner, ThreadId, TxStatus, V_INIT};
use crate::race::{conflicts_in, hb_unchecked};
use crate::relation::BitRel;
use crate::sym::Reg;
use crate::CapExceeded;

// ---------------------------------------------------------------------------
// Consistency

/// A read response whose value no write can justify.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsViolation {
    pub response: usize,
    pub reg: Reg,
    pub value: i64,
    pub local: bool,
}

/// Whether the write request at `i` is overwritten later by its own
/// transaction, which makes it local.
fn is_local_write(h: &History, layout: &Layout, i: usize) -> bool {
    let (Some(k), Kind::Write(x, _)) = (layout.tx_of(i), h[i].kind) else {
        return false;
    };
    layout.txs[k]
        .actions
        .iter()
        .any(|&j| j > i && matches!(h[j].kind, Kind::Write(y, _) if y == x))
}

/// Reads that fail consistency; empty iff the history is consistent.
pub fn cons(h: &History) -> Vec<ConsViolation> {
    let layout = Layout::of(h.actions());
    let mut out = Vec::new();
    for (j, a) in h.actions().iter().enumerate() {
        let Kind::Ret(v) = a.kind else { continue };
        let Some(i) = layout.partner[j] else { continue };
        let Kind::Read(x) = h[i].kind else { continue };
        let own_tx = layout.tx_of(i);
        let last_own_write = own_tx.and_then(|k| {
            layout.txs[k]
                .actions
                .iter()
                .rev()
                .filter(|&&p| p < i)
                .find_map(|&p| match h[p].kind {
                    Kind::Write(y, w) if y == x => Some(w),
                    _ => None,
                })
        });
        let ok = match last_own_write {
            Some(w) => w == v,
            None => {
                v == V_INIT
                    || (0..h.len()).any(|p| {
                        matches!(h[p].kind, Kind::Write(y, w) if y == x && w == v)
                            && !is_local_write(h, &layout, p)
                            && !matches!(
                                layout.tx_of(p).map(|k| layout.txs[k].status),
                                Some(TxStatus::Aborted | TxStatus::Live)
                            )
                    })
            }
        };
        if !ok {
            out.push(ConsViolation {
                response: j,
                reg: x,
                value: v,
                local: last_own_write.is_some(),
            });
        }
    }
    out
}

pub fn is_consistent(h: &History) -> bool {
    cons(h).is_empty()
}

// ---------------------------------------------------------------------------
// Vertices

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VertexKind {
    /// Index into the layout's transactions.
    Tx(usize),
    /// Index into the layout's non-transactional accesses.
    Nontx(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub kind: VertexKind,
    pub thread: ThreadId,
    /// `None` for non-transactional accesses.
    pub status: Option<TxStatus>,
    /// Positions of the vertex's actions in the history.
    pub actions: Vec<usize>,
    /// Values returned by non-local reads, per register.
    pub reads: BTreeMap<Reg, BTreeSet<i64>>,
    /// Last value written, per register.
    pub writes: BTreeMap<Reg, i64>,
    /// Display name, `T<k>` or `n<k>` in history order.
    pub name: String,
}

impl Vertex {
    pub fn is_tx(&self) -> bool {
        matches!(self.kind, VertexKind::Tx(_))
    }

    /// Visibility forced by the status: `Some` unless commit-pending.
    pub fn fixed_vis(&self) -> Option<bool> {
        match self.status {
            None | Some(TxStatus::Committed) => Some(true),
            Some(TxStatus::Aborted | TxStatus::Live) => Some(false),
            Some(TxStatus::CommitPending) => None,
        }
    }

    /// The single value all non-local reads of `x` return, if they agree.
    pub fn read_value(&self, x: Reg) -> Option<i64> {
        let vs = self.reads.get(&x)?;
        (vs.len() == 1).then(|| *vs.iter().next().expect("one value"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("opacity graphs are defined for fence-free histories only")]
    Fences,
    #[error("history is not consistent")]
    Inconsistent,
    #[error(transparent)]
    Cap(#[from] CapExceeded),
}

/// Vertices of a history in order of their first action, plus a map from
/// positions to vertex indices.
pub fn vertices_of(h: &History, layout: &Layout) -> Result<(Vec<Vertex>, Vec<Option<usize>>), GraphError> {
    if h.actions().iter().any(|a| matches!(a.kind, Kind::FBegin | Kind::FEnd)) {
        return Err(GraphError::Fences);
    }
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut of_tx = vec![usize::MAX; layout.txs.len()];
    let mut of_nontx = vec![usize::MAX; layout.nontx.len()];
    let mut vertex_at = vec![None; h.len()];
    let (mut tn, mut nn) = (0, 0);
    for i in 0..h.len() {
        let v = match layout.owner[i] {
            Owner::Tx(k) => {
                if of_tx[k] == usize::MAX {
                    tn += 1;
                    of_tx[k] = vertices.len();
                    vertices.push(Vertex {
                        kind: VertexKind::Tx(k),
                        thread: layout.txs[k].thread,
                        status: Some(layout.txs[k].status),
                        actions: layout.txs[k].actions.clone(),
                        reads: BTreeMap::new(),
                        writes: BTreeMap::new(),
                        name: format!("T{tn}"),
                    });
                }
                of_tx[k]
            }
            Owner::Nontx(k) => {
                if of_nontx[k] == usize::MAX {
                    nn += 1;
                    of_nontx[k] = vertices.len();
                    vertices.push(Vertex {
                        kind: VertexKind::Nontx(k),
                        thread: layout.nontx[k].thread,
                        status: None,
                        actions: layout.nontx[k].positions().collect(),
                        reads: BTreeMap::new(),
                        writes: BTreeMap::new(),
                        name: format!("n{nn}"),
                    });
                }
                of_nontx[k]
            }
            _ => continue,
        };
        vertex_at[i] = Some(v);
    }
    for vx in &mut vertices {
        let mut written: BTreeSet<Reg> = BTreeSet::new();
        for &i in &vx.actions {
            match h[i].kind {
                Kind::Write(x, v) => {
                    written.insert(x);
                    vx.writes.insert(x, v);
                }
                Kind::Ret(v) => {
                    if let Some(Kind::Read(x)) = layout.partner[i].map(|r| h[r].kind) {
                        if !written.contains(&x) {
                            vx.reads.entry(x).or_default().insert(v);
                        }
                    }
                }
                _ => {}
            }
        }
    }
    Ok((vertices, vertex_at))
}

// ---------------------------------------------------------------------------
// Graphs

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    WR,
    WW,
    RW,
    PO,
    CL,
    RT,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: usize,
    pub kind: EdgeKind,
    pub reg: Option<Reg>,
    pub dst: usize,
}

/// Lifted per-thread, client and real-time orders over vertices.
pub fn lifted_orders(h: &History, vertices: &[Vertex]) -> (BitRel, BitRel, BitRel) {
    let n = vertices.len();
    let (mut po, mut cl, mut rt) = (BitRel::new(n), BitRel::new(n), BitRel::new(n));
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let (va, vb) = (&vertices[a], &vertices[b]);
            if va.thread == vb.thread && va.actions[0] < vb.actions[0] {
                po.add(a, b);
            }
            if !va.is_tx() && !vb.is_tx() && va.actions[0] < vb.actions[0] {
                cl.add(a, b);
            }
            if va.is_tx() && vb.is_tx() {
                let end = *va.actions.last().expect("nonempty");
                if matches!(h[end].kind, Kind::Committed | Kind::Aborted) && end < vb.actions[0] {
                    rt.add(a, b);
                }
            }
        }
    }
    (po, cl, rt)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpacityGraph {
    pub vertices: Vec<Vertex>,
    pub vis: Vec<bool>,
    /// Read dependencies per register as `(writer, reader)`.
    pub wr: BTreeMap<Reg, Vec<(usize, usize)>>,
    /// Write order per register, earliest first.
    pub ww: BTreeMap<Reg, Vec<usize>>,
    /// Anti-dependencies per register, derived from `wr` and `ww`.
    pub rw: BTreeMap<Reg, Vec<(usize, usize)>>,
    pub po: BitRel,
    pub cl: BitRel,
    pub rt: BitRel,
}

/// Anti-dependencies: a reader precedes every writer ordered after its
/// source, and a reader of the initial value (with no source) precedes
/// every visible writer.
pub fn derive_rw(
    vertices: &[Vertex],
    wr: &BTreeMap<Reg, Vec<(usize, usize)>>,
    ww: &BTreeMap<Reg, Vec<usize>>,
) -> BTreeMap<Reg, Vec<(usize, usize)>> {
    let mut out: BTreeMap<Reg, Vec<(usize, usize)>> = BTreeMap::new();
    for (&x, order) in ww {
        let sources = wr.get(&x);
        let mut edges = Vec::new();
        for (r, vx) in vertices.iter().enumerate() {
            let Some(values) = vx.reads.get(&x) else { continue };
            let src = sources.and_then(|s| s.iter().find(|&&(_, d)| d == r).map(|&(s, _)| s));
            let after: &[usize] = match src {
                Some(s) => match order.iter().position(|&w| w == s) {
                    Some(p) => &order[p + 1..],
                    None => &[],
                },
                None if values.contains(&V_INIT) => order,
                None => &[],
            };
            edges.extend(after.iter().filter(|&&w| w != r).map(|&w| (r, w)));
        }
        if !edges.is_empty() {
            out.insert(x, edges);
        }
    }
    out
}

impl OpacityGraph {
    /// Builds a graph from its choice components, deriving `rw` and the
    /// lifted orders.
    pub fn assemble(
        h: &History,
        vertices: Vec<Vertex>,
        vis: Vec<bool>,
        wr: BTreeMap<Reg, Vec<(usize, usize)>>,
        ww: BTreeMap<Reg, Vec<usize>>,
    ) -> OpacityGraph {
        let rw = derive_rw(&vertices, &wr, &ww);
        let (po, cl, rt) = lifted_orders(h, &vertices);
        OpacityGraph {
            vertices,
            vis,
            wr,
            ww,
            rw,
            po,
            cl,
            rt,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn data_edges(&self) -> impl Iterator<Item = (EdgeKind, Reg, usize, usize)> + '_ {
        let wr = self.wr.iter().flat_map(|(&x, es)| es.iter().map(move |&(a, b)| (EdgeKind::WR, x, a, b)));
        let ww = self.ww.iter().flat_map(|(&x, order)| {
            order.iter().enumerate().flat_map(move |(i, &a)| {
                order[i + 1..].iter().map(move |&b| (EdgeKind::WW, x, a, b))
            })
        });
        let rw = self.rw.iter().flat_map(|(&x, es)| es.iter().map(move |&(a, b)| (EdgeKind::RW, x, a, b)));
        wr.chain(ww).chain(rw)
    }

    /// `WR ∪ WW ∪ RW` over all registers.
    pub fn data_deps(&self) -> BitRel {
        let mut r = BitRel::new(self.len());
        for (_, _, a, b) in self.data_edges() {
            r.add(a, b);
        }
        r
    }

    /// All edges, `WR ∪ WW ∪ RW ∪ PO ∪ CL`, plus `RT` when requested.
    pub fn dep(&self, include_rt: bool) -> BitRel {
        let mut r = self.data_deps();
        r.union_with(&self.po);
        r.union_with(&self.cl);
        if include_rt {
            r.union_with(&self.rt);
        }
        r
    }

    /// Data dependencies between two transactions.
    pub fn tx_dep(&self) -> BitRel {
        self.data_deps()
            .restrict(|v| self.vertices[v].is_tx())
    }

    pub fn is_acyclic(&self) -> bool {
        self.dep(false).is_acyclic()
    }

    /// Edges in a stable order, with `WW` reported as its full order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self
            .data_edges()
            .map(|(kind, x, src, dst)| Edge {
                src,
                kind,
                reg: Some(x),
                dst,
            })
            .collect();
        for (kind, rel) in [(EdgeKind::PO, &self.po), (EdgeKind::CL, &self.cl), (EdgeKind::RT, &self.rt)] {
            out.extend(rel.pairs().map(|(src, dst)| Edge {
                src,
                kind,
                reg: None,
                dst,
            }));
        }
        out.sort();
        out
    }

    /// Violations of the structural graph conditions, described in words.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (v, vx) in self.vertices.iter().enumerate() {
            if let Some(f) = vx.fixed_vis() {
                if self.vis[v] != f {
                    out.push(format!("{} has the wrong visibility", vx.name));
                }
            }
        }
        for (&x, es) in &self.wr {
            let mut readers = BTreeSet::new();
            for &(s, r) in es {
                let (sv, rv) = (&self.vertices[s], &self.vertices[r]);
                if s == r {
                    out.push(format!("{} reads {x} from itself", sv.name));
                }
                if !self.vis[s] {
                    out.push(format!("{} is read from but not visible", sv.name));
                }
                match (sv.writes.get(&x), rv.read_value(x)) {
                    (Some(w), Some(v)) if *w == v => {}
                    _ => out.push(format!("{} does not read {x} from {}", rv.name, sv.name)),
                }
                if !readers.insert(r) {
                    out.push(format!("{} has two read dependencies on {x}", rv.name));
                }
            }
        }
        for (v, vx) in self.vertices.iter().enumerate() {
            for (&x, vals) in &vx.reads {
                let has_src = self.wr.get(&x).is_some_and(|es| es.iter().any(|&(_, r)| r == v));
                if !has_src && (vals.len() != 1 || !vals.contains(&V_INIT)) {
                    out.push(format!("{} reads {x} without a source", vx.name));
                }
            }
        }
        for (&x, order) in &self.ww {
            let expected: BTreeSet<usize> = (0..self.len())
                .filter(|&v| self.vis[v] && self.vertices[v].writes.contains_key(&x))
                .collect();
            let got: BTreeSet<usize> = order.iter().copied().collect();
            if got != expected || got.len() != order.len() {
                out.push(format!("WW on {x} is not a total order on visible writers"));
            }
        }
        for (v, vx) in self.vertices.iter().enumerate() {
            for &x in vx.writes.keys() {
                if self.vis[v] && !self.ww.get(&x).is_some_and(|o| o.contains(&v)) {
                    out.push(format!("{} is missing from WW on {x}", vx.name));
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Graph enumeration

struct Space<'a> {
    h: &'a History,
    vertices: Vec<Vertex>,
    base: BitRel,
    pending: Vec<usize>,
    /// `(reader, register, value)` for every non-local read slot.
    slots: Vec<(usize, Reg, Option<i64>)>,
    regs: Vec<Reg>,
}

impl<'a> Space<'a> {
    fn new(h: &'a History) -> Result<Space<'a>, GraphError> {
        let layout = Layout::of(h.actions());
        let (vertices, _) = vertices_of(h, &layout)?;
        let (po, cl, _) = lifted_orders(h, &vertices);
        let pending = (0..vertices.len()).filter(|&v| vertices[v].fixed_vis().is_none()).collect();
        let mut slots = Vec::new();
        let mut regs = BTreeSet::new();
        for (v, vx) in vertices.iter().enumerate() {
            for &x in vx.reads.keys() {
                slots.push((v, x, vx.read_value(x)));
            }
            regs.extend(vx.writes.keys().copied());
        }
        Ok(Space {
            h,
            vertices,
            base: po.union(&cl),
            pending,
            slots,
            regs: regs.into_iter().collect(),
        })
    }

    fn vis_for(&self, mask: u64) -> Vec<bool> {
        let mut vis: Vec<bool> = self.vertices.iter().map(|v| v.fixed_vis().unwrap_or(false)).collect();
        for (i, &v) in self.pending.iter().enumerate() {
            vis[v] = mask >> i & 1 == 1;
        }
        vis
    }

    /// Candidate sources for a read slot; `None` stands for the initial value.
    fn sources(&self, vis: &[bool], slot: usize) -> Vec<Option<usize>> {
        let (r, x, value) = self.slots[slot];
        let Some(v) = value else {
            return Vec::new();
        };
        let mut out: Vec<Option<usize>> = (0..self.vertices.len())
            .filter(|&w| w != r && vis[w] && self.vertices[w].writes.get(&x) == Some(&v))
            .map(Some)
            .collect();
        if v == V_INIT {
            out.push(None);
        }
        out
    }

    fn writers(&self, vis: &[bool], x: Reg) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&w| vis[w] && self.vertices[w].writes.contains_key(&x))
            .collect()
    }

    fn build(&self, vis: &[bool], wr_choice: &[Option<usize>], ww: BTreeMap<Reg, Vec<usize>>) -> OpacityGraph {
        let mut wr: BTreeMap<Reg, Vec<(usize, usize)>> = BTreeMap::new();
        for (slot, src) in wr_choice.iter().enumerate() {
            if let Some(s) = *src {
                let (r, x, _) = self.slots[slot];
                wr.entry(x).or_default().push((s, r));
            }
        }
        OpacityGraph::assemble(self.h, self.vertices.clone(), vis.to_vec(), wr, ww)
    }

    /// Full enumeration, cyclic graphs included.
    fn visit_all<B>(&self, visit: &mut impl FnMut(OpacityGraph) -> ControlFlow<B>) -> ControlFlow<B> {
        for mask in 0u64..(1 << self.pending.len()) {
            let vis = self.vis_for(mask);
            let choices: Vec<Vec<Option<usize>>> = (0..self.slots.len()).map(|s| self.sources(&vis, s)).collect();
            let orders: Vec<(Reg, Vec<Vec<usize>>)> = self
                .regs
                .iter()
                .map(|&x| (x, permutations(&self.writers(&vis, x))))
                .filter(|(_, p)| !p[0].is_empty())
                .collect();
            let mut wr_pick = vec![None; self.slots.len()];
            self.product_wr(&choices, 0, &mut wr_pick, &mut |wr_pick| {
                product_orders(&orders, 0, &mut BTreeMap::new(), &mut |ww| {
                    visit(self.build(&vis, wr_pick, ww.clone()))
                })
            })?;
        }
        ControlFlow::Continue(())
    }

    fn product_wr<B>(
        &self,
        choices: &[Vec<Option<usize>>],
        i: usize,
        pick: &mut Vec<Option<usize>>,
        f: &mut impl FnMut(&[Option<usize>]) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        if i == choices.len() {
            return f(pick);
        }
        for &c in &choices[i] {
            pick[i] = c;
            self.product_wr(choices, i + 1, pick, f)?;
        }
        ControlFlow::Continue(())
    }

    /// Enumeration of acyclic graphs only, pruning as soon as a partial
    /// choice closes a cycle.
    fn visit_acyclic<B>(&self, visit: &mut impl FnMut(OpacityGraph) -> ControlFlow<B>) -> ControlFlow<B> {
        let base = self.base.closure();
        for mask in 0u64..(1 << self.pending.len()) {
            let vis = self.vis_for(mask);
            let choices: Vec<Vec<Option<usize>>> = (0..self.slots.len()).map(|s| self.sources(&vis, s)).collect();
            let mut pick = vec![None; self.slots.len()];
            self.acyclic_wr(&vis, &choices, 0, &base, &mut pick, visit)?;
        }
        ControlFlow::Continue(())
    }

    fn acyclic_wr<B>(
        &self,
        vis: &[bool],
        choices: &[Vec<Option<usize>>],
        i: usize,
        closed: &BitRel,
        pick: &mut Vec<Option<usize>>,
        visit: &mut impl FnMut(OpacityGraph) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        if i == choices.len() {
            let mut ww = BTreeMap::new();
            return self.acyclic_ww(vis, pick, 0, closed, &mut ww, visit);
        }
        for &c in &choices[i] {
            let mut next = closed.clone();
            if let Some(s) = c {
                if !next.insert_closed(s, self.slots[i].0) {
                    continue;
                }
            }
            pick[i] = c;
            self.acyclic_wr(vis, choices, i + 1, &next, pick, visit)?;
        }
        ControlFlow::Continue(())
    }

    fn acyclic_ww<B>(
        &self,
        vis: &[bool],
        pick: &[Option<usize>],
        reg_i: usize,
        closed: &BitRel,
        ww: &mut BTreeMap<Reg, Vec<usize>>,
        visit: &mut impl FnMut(OpacityGraph) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        if reg_i == self.regs.len() {
            return visit(self.build(vis, pick, ww.clone()));
        }
        let x = self.regs[reg_i];
        let writers = self.writers(vis, x);
        if writers.is_empty() {
            return self.acyclic_ww(vis, pick, reg_i + 1, closed, ww, visit);
        }
        // Readers of x with their chosen source (None: initial value).
        let readers: Vec<(usize, Option<usize>)> = self
            .slots
            .iter()
            .enumerate()
            .filter(|(_, (_, y, _))| *y == x)
            .map(|(s, &(r, _, _))| (r, pick[s]))
            .collect();
        let mut order = Vec::with_capacity(writers.len());
        self.place_writer(vis, pick, reg_i, &writers, &readers, &mut order, closed, ww, visit)
    }

    #[allow(clippy::too_many_arguments)]
    fn place_writer<B>(
        &self,
        vis: &[bool],
        pick: &[Option<usize>],
        reg_i: usize,
        writers: &[usize],
        readers: &[(usize, Option<usize>)],
        order: &mut Vec<usize>,
        closed: &BitRel,
        ww: &mut BTreeMap<Reg, Vec<usize>>,
        visit: &mut impl FnMut(OpacityGraph) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        let x = self.regs[reg_i];
        if order.len() == writers.len() {
            ww.insert(x, order.clone());
            self.acyclic_ww(vis, pick, reg_i + 1, closed, ww, visit)?;
            ww.remove(&x);
            return ControlFlow::Continue(());
        }
        'next: for &w in writers {
            if order.contains(&w) {
                continue;
            }
            let mut next = closed.clone();
            for &p in order.iter() {
                if !next.insert_closed(p, w) {
                    continue 'next;
                }
            }
            for &(r, src) in readers {
                if r == w {
                    continue;
                }
                let before = match src {
                    None => self.vertices[r].reads[&x].contains(&V_INIT),
                    Some(s) => order.contains(&s),
                };
                if before && !next.insert_closed(r, w) {
                    continue 'next;
                }
            }
            order.push(w);
            self.place_writer(vis, pick, reg_i, writers, readers, order, &next, ww, visit)?;
            order.pop();
        }
        ControlFlow::Continue(())
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, first);
            out.push(p);
        }
    }
    out
}

fn product_orders<B>(
    orders: &[(Reg, Vec<Vec<usize>>)],
    i: usize,
    acc: &mut BTreeMap<Reg, Vec<usize>>,
    f: &mut impl FnMut(&BTreeMap<Reg, Vec<usize>>) -> ControlFlow<B>,
) -> ControlFlow<B> {
    if i == orders.len() {
        return f(acc);
    }
    let (x, perms) = &orders[i];
    for p in perms {
        acc.insert(*x, p.clone());
        product_orders(orders, i + 1, acc, f)?;
    }
    acc.remove(x);
    ControlFlow::Continue(())
}

/// Visits every graph of a consistent history.
pub fn visit_graphs<B>(h: &History, mut visit: impl FnMut(OpacityGraph) -> ControlFlow<B>) -> Result<Option<B>, GraphError> {
    if !is_consistent(h) {
        return Err(GraphError::Inconsistent);
    }
    let space = Space::new(h)?;
    Ok(match space.visit_all(&mut visit) {
        ControlFlow::Break(b) => Some(b),
        ControlFlow::Continue(()) => None,
    })
}

/// Every graph of a consistent history.
pub fn enumerate_graphs(h: &History) -> Result<Vec<OpacityGraph>, GraphError> {
    let mut out = Vec::new();
    visit_graphs::<()>(h, |g| {
        out.push(g);
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Visits every acyclic graph of a consistent history.
pub fn visit_acyclic_graphs<B>(
    h: &History,
    mut visit: impl FnMut(OpacityGraph) -> ControlFlow<B>,
) -> Result<Option<B>, GraphError> {
    if !is_consistent(h) {
        return Err(GraphError::Inconsistent);
    }
    let space = Space::new(h)?;
    Ok(match space.visit_acyclic(&mut visit) {
        ControlFlow::Break(b) => Some(b),
        ControlFlow::Continue(()) => None,
    })
}

// ---------------------------------------------------------------------------
// Linearizations

/// Renders a vertex order as a history. Commit-pending transactions get a
/// `committed` marker when visible and an `aborted` marker otherwise;
/// markers take fresh ids above the history's maximum.
pub fn render_linearization(h: &History, g: &OpacityGraph, order: &[usize]) -> History {
    let mut next_id = h.max_id();
    let mut actions = Vec::with_capacity(h.len());
    for &v in order {
        let vx = &g.vertices[v];
        actions.extend(vx.actions.iter().map(|&i| h[i]));
        if vx.status == Some(TxStatus::CommitPending) {
            next_id += 1;
            let kind = if g.vis[v] { Kind::Committed } else { Kind::Aborted };
            actions.push(Action::new(next_id, vx.thread, kind));
        }
    }
    History::from_interface(actions)
}

/// The permutation of `h` placing vertices in `order`, without markers.
pub fn permute_by_vertices(h: &History, g: &OpacityGraph, order: &[usize]) -> History {
    History::from_interface(
        order
            .iter()
            .flat_map(|&v| g.vertices[v].actions.iter().map(|&i| h[i]))
            .collect(),
    )
}

/// Visits every topological order of the graph's edges (`RT` excluded).
pub fn visit_linearizations<B>(g: &OpacityGraph, mut visit: impl FnMut(&[usize]) -> ControlFlow<B>) -> Option<B> {
    let dep = g.dep(false);
    let n = g.len();
    let mut indeg = vec![0usize; n];
    for (_, b) in dep.pairs() {
        indeg[b] += 1;
    }
    fn go<B>(
        dep: &BitRel,
        indeg: &mut Vec<usize>,
        used: &mut Vec<bool>,
        order: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        if order.len() == indeg.len() {
            return visit(order);
        }
        for v in 0..indeg.len() {
            if used[v] || indeg[v] != 0 {
                continue;
            }
            used[v] = true;
            order.push(v);
            let succ: Vec<usize> = dep.successors(v).collect();
            for &s in &succ {
                indeg[s] -= 1;
            }
            go(dep, indeg, used, order, visit)?;
            for &s in &succ {
                indeg[s] += 1;
            }
            order.pop();
            used[v] = false;
        }
        ControlFlow::Continue(())
    }
    let mut used = vec![false; n];
    let mut order = Vec::with_capacity(n);
    match go(&dep, &mut indeg, &mut used, &mut order, &mut visit) {
        ControlFlow::Break(b) => Some(b),
        ControlFlow::Continue(()) => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("graph has a cycle")]
pub struct Cyclic;

/// All linearizations, rendered as histories.
pub fn linearizations(h: &History, g: &OpacityGraph) -> Result<Vec<History>, Cyclic> {
    if !g.is_acyclic() {
        return Err(Cyclic);
    }
    let mut out = Vec::new();
    visit_linearizations::<()>(g, |order| {
        out.push(render_linearization(h, g, order));
        ControlFlow::Continue(())
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Opacity checks

/// Some acyclic graph of `h`, or `None` if `h` is inconsistent or has none.
pub fn check_opaque_graph(h: &History) -> Result<Option<OpacityGraph>, GraphError> {
    if !is_consistent(h) {
        return Ok(None);
    }
    visit_acyclic_graphs(h, ControlFlow::Break)
}

/// An atomic history `S` with `h ⊑ S`, found by enumeration.
pub fn check_opaque_direct(h: &History, cap: usize) -> Result<Option<History>, CapExceeded> {
    find_atomic_match(h, cap)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CdrfGraphOptions {
    /// Also allow real-time edges on connecting paths.
    pub include_rt: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CdrfGraphReport {
    /// An acyclic graph with a conflicting vertex pair that no path
    /// connects, and that pair.
    pub counterexample: Option<(OpacityGraph, usize, usize)>,
    pub graphs_checked: usize,
}

impl CdrfGraphReport {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Vertex pairs `(transaction, access)` that contain conflicting actions.
pub fn conflicting_vertex_pairs(h: &History) -> Result<Vec<(usize, usize)>, GraphError> {
    let layout = Layout::of(h.actions());
    let (_, at) = vertices_of(h, &layout)?;
    let mut pairs: Vec<(usize, usize)> = conflicts_in(h, &layout)
        .into_iter()
        .map(|c| (at[c.tx].expect("tx vertex"), at[c.nontx].expect("access vertex")))
        .collect();
    pairs.sort();
    pairs.dedup();
    Ok(pairs)
}

/// Concurrent data-race freedom through graphs: in every acyclic graph
/// every conflicting vertex pair is connected by a path of `PO`, `CL` and
/// transaction-to-transaction dependencies.
///
/// Real-time edges are left out by default. With them, histories such as
/// a committed writer followed in real time by an empty transaction whose
/// thread then writes the same register non-transactionally would pass,
/// although the atomic history placing the empty transaction and the
/// write before the writer is racy.
pub fn cdrf_graph(h: &History, opts: CdrfGraphOptions) -> Result<CdrfGraphReport, GraphError> {
    let pairs = conflicting_vertex_pairs(h)?;
    let mut graphs_checked = 0;
    let counterexample = visit_acyclic_graphs(h, |g| {
        graphs_checked += 1;
        let mut path = g.po.union(&g.cl);
        path.union_with(&g.tx_dep());
        if opts.include_rt {
            path.union_with(&g.rt);
        }
        let reach = path.closure();
        match pairs.iter().find(|&&(t, n)| !reach.contains(t, n) && !reach.contains(n, t)) {
            Some(&(t, n)) => ControlFlow::Break((g, t, n)),
            None => ControlFlow::Continue(()),
        }
    })?;
    Ok(CdrfGraphReport {
        counterexample,
        graphs_checked,
    })
}

// ---------------------------------------------------------------------------
// Path reductions

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionViolation {
    /// A dependency path between transactions with no path of real-time
    /// and transaction-to-transaction edges.
    TxToTx { from: usize, to: usize },
    /// A path from a transaction to an access not of the form
    /// `(RT ∪ txDEP)*; PO; CL*`.
    TxToAccess { tx: usize, access: usize },
    /// A path from an access to a transaction not of the form
    /// `CL*; PO; (RT ∪ txDEP)*`.
    AccessToTx { access: usize, tx: usize },
}

/// Checks the path shapes that hold in acyclic graphs of consistent CDRF
/// histories; returns every pair that lacks the required path.
pub fn assert_path_reductions(g: &OpacityGraph) -> Vec<ReductionViolation> {
    let n = g.len();
    let is_tx = |v: usize| g.vertices[v].is_tx();
    let dep_star = g.dep(false).star();
    let mut tx_paths = g.tx_dep();
    tx_paths.union_with(&g.rt);
    let tx_star = tx_paths.star().restrict(is_tx);
    let po_tn = g.po.restrict(|_| true);
    let cl_star = g.cl.star().restrict(|v| !is_tx(v));
    let forward = tx_star.compose(&po_tn).compose(&cl_star);
    let backward = cl_star.compose(&po_tn).compose(&tx_star);

    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == b || !dep_star.contains(a, b) {
                continue;
            }
            match (is_tx(a), is_tx(b)) {
                (true, true) if !tx_star.contains(a, b) => out.push(ReductionViolation::TxToTx { from: a, to: b }),
                (true, false) if !forward.contains(a, b) => {
                    out.push(ReductionViolation::TxToAccess { tx: a, access: b })
                }
                (false, true) if !backward.contains(a, b) => {
                    out.push(ReductionViolation::AccessToTx { access: a, tx: b })
                }
                _ => {}
            }
        }
    }
    out
}

/// In an atomic race-free history, every happens-before path from a
/// transaction to an access factors as `EF*; PO; CL*` at vertex level, and
/// symmetrically. Returns the `(from, to)` vertex pairs that do not.
pub fn hb_factorization_failures(h: &History) -> Result<Vec<(usize, usize)>, GraphError> {
    let layout = Layout::of(h.actions());
    let (vertices, at) = vertices_of(h, &layout)?;
    let n = vertices.len();
    let hb = hb_unchecked(h);
    let mut hb_v = BitRel::new(n);
    for (i, j) in hb.pairs() {
        if let (Some(a), Some(b)) = (at[i], at[j]) {
            if a != b {
                hb_v.add(a, b);
            }
        }
    }
    let (po, cl, _) = lifted_orders(h, &vertices);
    let is_tx = |v: usize| vertices[v].is_tx();
    let mut ef_star = BitRel::new(n);
    for a in 0..n {
        ef_star.add(a, a);
        for b in 0..n {
            if is_tx(a) && is_tx(b) && a != b && vertices[a].actions[0] < vertices[b].actions[0] {
                ef_star.add(a, b);
            }
        }
    }
    let ef_star = ef_star.restrict(is_tx);
    let cl_star = cl.star().restrict(|v| !is_tx(v));
    let forward = ef_star.compose(&po).compose(&cl_star);
    let backward = cl_star.compose(&po).compose(&ef_star);
    let mut out = Vec::new();
    for (a, b) in hb_v.pairs() {
        let ok = match (is_tx(a), is_tx(b)) {
            (true, false) => forward.contains(a, b),
            (false, true) => backward.contains(a, b),
            _ => true,
        };
        if !ok {
            out.push((a, b));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Text format

/// One line per edge: `<src> <kind> [<reg>] <dst>`.
pub fn serialize_graph(g: &OpacityGraph) -> String {
    let mut s = String::new();
    for e in g.edges() {
        let src = &g.vertices[e.src].name;
        let dst = &g.vertices[e.dst].name;
        match e.reg {
            Some(x) => s.push_str(&format!("{src} {} {x} {dst}\n", e.kind)),
            None => s.push_str(&format!("{src} {} {dst}\n", e.kind)),
        }
    }
    s
}

/// Parses the edge format against the vertex names of `g`.
pub fn parse_graph_edges(text: &str, names: &[String]) -> Result<Vec<Edge>, crate::text::ParseError> {
    let err = |line: usize, message: String| crate::text::ParseError { line, message };
    let find = |line: usize, s: &str| {
        names
            .iter()
            .position(|n| n == s)
            .ok_or_else(|| err(line, format!("unknown vertex `{s}`")))
    };
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parts: Vec<&str> = content.split_whitespace().collect();
        let kind = match parts.get(1).copied() {
            Some("WR") => EdgeKind::WR,
            Some("WW") => EdgeKind::WW,
            Some("RW") => EdgeKind::RW,
            Some("PO") => EdgeKind::PO,
            Some("CL") => EdgeKind::CL,
            Some("RT") => EdgeKind::RT,
            other => return Err(err(line, format!("unknown edge kind {other:?}"))),
        };
        let with_reg = matches!(kind, EdgeKind::WR | EdgeKind::WW | EdgeKind::RW);
        let expected = if with_reg { 4 } else { 3 };
        if parts.len() != expected {
            return Err(err(line, format!("expected {expected} fields")));
        }
        out.push(Edge {
            src: find(line, parts[0])?,
            kind,
            reg: with_reg.then(|| Reg::new(parts[2])),
            dst: find(line, parts[expected - 1])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::is_atomic;
    use crate::model::history_from_kinds;
    use crate::race::cdrf;

    fn x() -> Reg {
        Reg::new("x")
    }
    fn y() -> Reg {
        Reg::new("y")
    }
    fn pv() -> Reg {
        Reg::new("priv")
    }

    fn tx(t: u32, body: &[Kind], end: Option<Kind>) -> Vec<(u32, Kind)> {
        let mut v = vec![(t, Kind::BeginTx), (t, Kind::Ok)];
        v.extend(body.iter().map(|&k| (t, k)));
        if let Some(e) = end {
            v.push((t, Kind::TryCommit));
            v.push((t, e));
        }
        v
    }

    fn w(r: Reg, v: i64) -> [Kind; 2] {
        [Kind::Write(r, v), Kind::RetUnit]
    }

    fn rd(r: Reg, v: i64) -> [Kind; 2] {
        [Kind::Read(r), Kind::Ret(v)]
    }

    fn nontx(t: u32, k: [Kind; 2]) -> Vec<(u32, Kind)> {
        vec![(t, k[0]), (t, k[1])]
    }

    #[test]
    fn local_reads_return_own_write() {
        let ok = history_from_kinds(&tx(1, &[w(x(), 3), rd(x(), 3)].concat(), Some(Kind::Committed)));
        assert!(is_consistent(&ok));
        let bad = history_from_kinds(&tx(1, &[w(x(), 3), rd(x(), 4)].concat(), Some(Kind::Committed)));
        assert_eq!(cons(&bad).len(), 1);
        assert!(cons(&bad)[0].local);
    }

    #[test]
    fn nonlocal_reads_need_a_visible_writer() {
        assert!(is_consistent(&history_from_kinds(&nontx(1, rd(x(), 0)))));
        let mut live = tx(1, &w(x(), 5), None);
        live.extend(nontx(2, rd(x(), 5)));
        assert!(!is_consistent(&history_from_kinds(&live)));
        let mut overwritten = tx(1, &[w(x(), 5), w(x(), 6)].concat(), Some(Kind::Committed));
        overwritten.extend(nontx(2, rd(x(), 5)));
        assert!(!is_consistent(&history_from_kinds(&overwritten)));
    }

    #[test]
    fn single_writer_single_reader_has_one_graph() {
        let mut items = tx(1, &w(x(), 1), Some(Kind::Committed));
        items.extend(nontx(2, rd(x(), 1)));
        let gs = enumerate_graphs(&history_from_kinds(&items)).unwrap();
        assert_eq!(gs.len(), 1);
        assert_eq!(gs[0].wr[&x()], vec![(0, 1)]);
        assert_eq!(gs[0].ww[&x()], vec![0]);
        assert!(gs[0].violations().is_empty());
    }

    #[test]
    fn commit_pending_writer_has_two_visibilities() {
        let mut items = tx(1, &w(x(), 1), None);
        items.push((1, Kind::TryCommit));
        let gs = enumerate_graphs(&history_from_kinds(&items)).unwrap();
        assert_eq!(gs.len(), 2);
    }

    #[test]
    fn two_writers_have_two_orders() {
        let mut items = tx(1, &w(x(), 1), Some(Kind::Committed));
        items.extend(nontx(2, w(x(), 2)));
        let gs = enumerate_graphs(&history_from_kinds(&items)).unwrap();
        assert_eq!(gs.len(), 2);
    }

    #[test]
    fn anti_dependencies() {
        // Reader of the initial value precedes the one visible writer.
        let mut items = nontx(2, rd(x(), 0));
        items.extend(tx(1, &w(x(), 1), Some(Kind::Committed)));
        let g = &enumerate_graphs(&history_from_kinds(&items)).unwrap()[0];
        assert_eq!(g.rw[&x()], vec![(0, 1)]);

        let g = &enumerate_graphs(&history_from_kinds(&nontx(1, rd(x(), 0)))).unwrap()[0];
        assert!(g.rw.is_empty());

        // w1 -> w2 in WW and w1 -> r in WR give r -> w2.
        let mut items = nontx(1, w(x(), 1));
        items.extend(nontx(2, rd(x(), 1)));
        items.extend(nontx(3, w(x(), 2)));
        let h = history_from_kinds(&items);
        let g = enumerate_graphs(&h)
            .unwrap()
            .into_iter()
            .find(|g| g.ww[&x()] == vec![0, 2])
            .unwrap();
        assert_eq!(g.rw[&x()], vec![(1, 2)]);
        assert_eq!(derive_rw(&g.vertices, &g.wr, &g.ww), g.rw);
    }

    #[test]
    fn linearization_counts() {
        let single = history_from_kinds(&tx(1, &[], Some(Kind::Committed)));
        let g = check_opaque_graph(&single).unwrap().unwrap();
        assert_eq!(linearizations(&single, &g).unwrap().len(), 1);

        let mut three = Vec::new();
        for t in 1..=3 {
            three.extend(tx(t, &[], Some(Kind::Committed)));
        }
        let h = history_from_kinds(&three);
        let g = check_opaque_graph(&h).unwrap().unwrap();
        let lins = linearizations(&h, &g).unwrap();
        assert_eq!(lins.len(), 6);
        assert!(lins.iter().all(is_atomic));
    }

    #[test]
    fn ww_cycle_is_cyclic() {
        let mut items = tx(1, &[w(x(), 1), w(y(), 1)].concat(), Some(Kind::Committed));
        items.extend(tx(2, &[w(x(), 2), w(y(), 2)].concat(), Some(Kind::Committed)));
        let h = history_from_kinds(&items);
        let cyclic = enumerate_graphs(&h)
            .unwrap()
            .into_iter()
            .filter(|g| !g.is_acyclic())
            .count();
        assert_eq!(cyclic, 2);
    }

    /// T writes x then y; n1 reads x=1 and n2 reads y=0 before T commits.
    fn fig3_weak() -> History {
        let mut items = tx(1, &[w(x(), 1), w(y(), 2)].concat(), None);
        items.push((1, Kind::TryCommit));
        items.extend(nontx(2, rd(x(), 1)));
        items.extend(nontx(2, rd(y(), 0)));
        items.push((1, Kind::Committed));
        history_from_kinds(&items)
    }

    #[test]
    fn opacity_checks() {
        assert!(check_opaque_graph(&History::empty()).unwrap().is_some());
        assert!(check_opaque_graph(&fig3_weak()).unwrap().is_none());
        assert!(check_opaque_direct(&fig3_weak(), 12).unwrap().is_none());
        let mut ok = tx(1, &w(x(), 1), Some(Kind::Committed));
        ok.extend(nontx(2, rd(x(), 1)));
        let h = history_from_kinds(&ok);
        assert_eq!(check_opaque_direct(&h, 12).unwrap(), Some(h.clone()));
    }

    /// T2 reads priv=0 and writes x; T1 sets priv; n writes x.
    fn fig1_history() -> History {
        let mut items = tx(2, &[rd(pv(), 0), w(x(), 42)].concat(), Some(Kind::Committed));
        items.extend(tx(1, &w(pv(), 1), Some(Kind::Committed)));
        items.extend(nontx(1, w(x(), 1)));
        history_from_kinds(&items)
    }

    #[test]
    fn fig1_graph_and_reductions() {
        let h = fig1_history();
        assert!(cdrf_graph(&h, CdrfGraphOptions::default()).unwrap().holds());
        let g = check_opaque_graph(&h).unwrap().unwrap();
        // T2 -WW_x-> n and T2 -RW_priv-> T1 -PO-> n.
        let (t2, t1, n) = (0, 1, 2);
        assert_eq!(g.ww[&x()], vec![t2, n]);
        assert_eq!(g.rw[&pv()], vec![(t2, t1)]);
        assert!(g.po.contains(t1, n));
        assert!(assert_path_reductions(&g).is_empty());
    }

    #[test]
    fn racy_graph_fails_cdrf_graph() {
        let mut items = tx(1, &[w(x(), 1), w(y(), 2)].concat(), Some(Kind::Committed));
        items.extend(nontx(2, rd(x(), 1)));
        items.extend(nontx(2, rd(y(), 2)));
        let h = history_from_kinds(&items);
        assert!(!cdrf_graph(&h, CdrfGraphOptions::default()).unwrap().holds());
        assert!(!cdrf(&h, 12).unwrap().holds());
    }

    /// Real-time edges would connect T1 and n through the empty T2, while
    /// the atomic history T2 n T1 matches and races.
    #[test]
    fn real_time_edges_hide_a_race() {
        let mut items = tx(1, &w(x(), 1), Some(Kind::Committed));
        items.extend(tx(2, &[], Some(Kind::Committed)));
        items.extend(nontx(2, w(x(), 2)));
        let h = history_from_kinds(&items);
        assert!(!cdrf(&h, 12).unwrap().holds());
        assert!(!cdrf_graph(&h, CdrfGraphOptions::default()).unwrap().holds());
        assert!(cdrf_graph(&h, CdrfGraphOptions { include_rt: true }).unwrap().holds());
    }

    #[test]
    fn graph_text_round_trip() {
        let h = fig1_history();
        let g = check_opaque_graph(&h).unwrap().unwrap();
        let text = serialize_graph(&g);
        assert!(text.contains("T1 WW x n1"));
        let names: Vec<String> = g.vertices.iter().map(|v| v.name.clone()).collect();
        assert_eq!(parse_graph_edges(&text, &names).unwrap(), g.edges());
    }

    #[test]
    fn factorization_on_fig1() {
        assert!(hb_factorization_failures(&fig1_history()).unwrap().is_empty());
    }
}
