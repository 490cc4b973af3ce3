//! Dense binary relations over `0..n`, stored as bit rows.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitRel {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitRel {
    pub fn new(n: usize) -> BitRel {
        let words = n.div_ceil(64).max(1);
        BitRel {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn add(&mut self, a: usize, b: usize) {
        let w = self.words;
        self.bits[a * w + b / 64] |= 1 << (b % 64);
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        let w = self.words;
        self.bits[a * w + b / 64] &= !(1 << (b % 64));
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union_with(&mut self, other: &BitRel) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn union(&self, other: &BitRel) -> BitRel {
        let mut r = self.clone();
        r.union_with(other);
        r
    }

    pub fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        self.row(a).iter().enumerate().flat_map(move |(wi, &w)| {
            (0..64)
                .filter(move |b| w >> b & 1 == 1)
                .map(move |b| wi * 64 + b)
                .filter(move |&j| j < n)
        })
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |a| self.successors(a).map(move |b| (a, b)))
    }

    /// Relational composition `self ; other`.
    pub fn compose(&self, other: &BitRel) -> BitRel {
        assert_eq!(self.n, other.n);
        let mut r = BitRel::new(self.n);
        for a in 0..self.n {
            for b in self.successors(a).collect::<Vec<_>>() {
                let (lo, hi) = (a * self.words, (a + 1) * self.words);
                for (dst, src) in r.bits[lo..hi].iter_mut().zip(other.row(b)) {
                    *dst |= src;
                }
            }
        }
        r
    }

    /// Transitive closure (Warshall).
    pub fn closure(&self) -> BitRel {
        let mut r = self.clone();
        for k in 0..self.n {
            let rk: Vec<u64> = r.row(k).to_vec();
            for i in 0..self.n {
                if r.contains(i, k) {
                    for (dst, src) in r.row_mut(i).iter_mut().zip(&rk) {
                        *dst |= src;
                    }
                }
            }
        }
        r
    }

    /// Reflexive-transitive closure.
    pub fn star(&self) -> BitRel {
        let mut r = self.closure();
        for i in 0..self.n {
            r.add(i, i);
        }
        r
    }

    pub fn is_irreflexive(&self) -> bool {
        (0..self.n).all(|i| !self.contains(i, i))
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo_order().is_some()
    }

    /// A topological order of `0..n`, or `None` if the relation has a cycle.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; self.n];
        for (_, b) in self.pairs() {
            indeg[b] += 1;
        }
        let mut ready: Vec<usize> = (0..self.n).filter(|&i| indeg[i] == 0).rev().collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(i) = ready.pop() {
            order.push(i);
            for j in self.successors(i).collect::<Vec<_>>().into_iter().rev() {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.push(j);
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    /// Restriction to pairs whose endpoints both satisfy `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> BitRel {
        let mut r = BitRel::new(self.n);
        for (a, b) in self.pairs() {
            if keep(a) && keep(b) {
                r.add(a, b);
            }
        }
        r
    }

    /// Adds `(a, b)` to a transitively closed relation and re-closes it.
    /// Returns `false`, leaving the relation unchanged, if the edge would
    /// create a cycle.
    pub fn insert_closed(&mut self, a: usize, b: usize) -> bool {
        if a == b || self.contains(b, a) {
            return false;
        }
        if self.contains(a, b) {
            return true;
        }
        let mut add: Vec<u64> = self.row(b).to_vec();
        add[b / 64] |= 1 << (b % 64);
        for i in 0..self.n {
            if i == a || self.contains(i, a) {
                for (dst, src) in self.row_mut(i).iter_mut().zip(&add) {
                    *dst |= src;
                }
            }
        }
        true
    }

    /// Nodes reachable from `a` in one or more steps.
    pub fn reachable_from(&self, a: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack: Vec<usize> = self.successors(a).collect();
        while let Some(i) = stack.pop() {
            if !seen[i] {
                seen[i] = true;
                stack.extend(self.successors(i));
            }
        }
        seen
    }
}

impl fmt::Debug for BitRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> BitRel {
        let mut r = BitRel::new(n);
        for &(a, b) in pairs {
            r.add(a, b);
        }
        r
    }

    #[test]
    fn closure_of_chain() {
        let r = from_pairs(4, &[(0, 1), (1, 2), (2, 3)]).closure();
        assert!(r.contains(0, 3));
        assert!(!r.contains(3, 0));
        assert_eq!(r.len(), 6);
    }

    #[test]
    fn cycles() {
        assert!(!from_pairs(2, &[(0, 1), (1, 0)]).is_acyclic());
        assert!(from_pairs(3, &[(0, 2), (1, 2)]).is_acyclic());
        assert!(BitRel::new(0).is_acyclic());
    }

    #[test]
    fn wide_relations() {
        let mut r = BitRel::new(130);
        r.add(0, 129);
        r.add(129, 70);
        assert!(r.closure().contains(0, 70));
        assert_eq!(r.successors(0).collect::<Vec<_>>(), vec![129]);
    }

    fn naive_closure(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; n]; n];
        for &(a, b) in pairs {
            m[a][b] = true;
        }
        loop {
            let mut changed = false;
            for i in 0..n {
                for j in 0..n {
                    if m[i][j] {
                        for k in 0..n {
                            if m[j][k] && !m[i][k] {
                                m[i][k] = true;
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                return m;
            }
        }
    }

    proptest! {
        #[test]
        fn closure_matches_fixpoint(pairs in proptest::collection::vec((0usize..9, 0usize..9), 0..20)) {
            let r = from_pairs(9, &pairs).closure();
            let m = naive_closure(9, &pairs);
            for i in 0..9 {
                for j in 0..9 {
                    prop_assert_eq!(r.contains(i, j), m[i][j]);
                }
            }
        }

        #[test]
        fn acyclic_iff_closure_irreflexive(pairs in proptest::collection::vec((0usize..7, 0usize..7), 0..12)) {
            let r = from_pairs(7, &pairs);
            prop_assert_eq!(r.is_acyclic(), r.closure().is_irreflexive());
            if let Some(order) = r.topo_order() {
                let pos: Vec<usize> = (0..7).map(|i| order.iter().position(|&o| o == i).unwrap()).collect();
                for (a, b) in r.pairs() {
                    prop_assert!(pos[a] < pos[b]);
                }
            }
        }
    }
}
