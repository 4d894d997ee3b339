//! Traces over atoms of a graph product.
//!
//! A trace is stored as a `Vec<Atom>` in canonical form: the lexicographically
//! least linearization of its dependence order, comparing atoms by vertex and
//! then by element. Two atoms are independent exactly when their vertices are
//! adjacent in the independence graph.
//!
//! The events of a trace are its positions; position `i` precedes `j` in the
//! dependence order when `i < j` and the two atoms are dependent, closed
//! transitively. Prefixes of a trace are the downward-closed sets (ideals) of
//! this order, represented as `u128` masks, so ideal-based operations accept
//! traces of at most 128 atoms.

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::bounds::{self, Bound};
use crate::groups::{Atom, Group};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("trace too long for ideal enumeration ({0} atoms, limit 128)")]
    TooLong(usize),
    #[error("budget exhausted: more than {0} ideals")]
    Budget(usize),
}

/// The independence graph `(Γ, E)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Independence {
    adj: Vec<Vec<bool>>,
}

impl Independence {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![vec![false; n]; n];
        for &(a, b) in edges {
            if a != b {
                adj[a][b] = true;
                adj[b][a] = true;
            }
        }
        Independence { adj }
    }

    /// No edges: the free product.
    pub fn free(n: usize) -> Self {
        Independence::new(n, &[])
    }

    pub fn size(&self) -> usize {
        self.adj.len()
    }

    pub fn independent(&self, a: u32, b: u32) -> bool {
        self.adj[a as usize][b as usize]
    }

    pub fn has_edges(&self) -> bool {
        self.adj.iter().flatten().any(|&x| x)
    }

    /// Size of a largest clique of the graph (at least 1 for a nonempty graph).
    pub fn alpha(&self) -> usize {
        let n = self.size();
        let mut best = if n > 0 { 1 } else { 0 };
        fn extend(adj: &[Vec<bool>], clique: &mut Vec<usize>, from: usize, best: &mut usize) {
            *best = (*best).max(clique.len());
            for v in from..adj.len() {
                if clique.iter().all(|&c| adj[c][v]) {
                    clique.push(v);
                    extend(adj, clique, v + 1, best);
                    clique.pop();
                }
            }
        }
        extend(&self.adj, &mut Vec::new(), 0, &mut best);
        best
    }
}

/// Direct dependence predecessors of every position.
#[derive(Clone, Debug)]
pub struct Events {
    pub pred: Vec<u128>,
}

impl Events {
    pub fn new(dep: impl Fn(usize, usize) -> bool, n: usize) -> Result<Events, TraceError> {
        if n > 128 {
            return Err(TraceError::TooLong(n));
        }
        let pred = (0..n).map(|j| (0..j).filter(|&i| dep(i, j)).fold(0u128, |m, i| m | (1u128 << i))).collect();
        Ok(Events { pred })
    }

    pub fn len(&self) -> usize {
        self.pred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pred.is_empty()
    }

    pub fn full(&self) -> u128 {
        if self.len() == 128 {
            u128::MAX
        } else {
            (1u128 << self.len()) - 1
        }
    }

    pub fn is_ideal(&self, mask: u128) -> bool {
        (0..self.len()).all(|j| mask & (1 << j) == 0 || self.pred[j] & !mask == 0)
    }

    /// Positions that can be added to the ideal `mask`.
    pub fn addable(&self, mask: u128) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&j| mask & (1 << j) == 0 && self.pred[j] & !mask == 0)
    }

    /// All ideals, breadth-first from the empty one.
    pub fn ideals(&self, budget: usize) -> Result<Vec<u128>, TraceError> {
        let mut seen = HashSet::from([0u128]);
        let mut order = vec![0u128];
        let mut queue = VecDeque::from([0u128]);
        while let Some(m) = queue.pop_front() {
            for j in self.addable(m) {
                let m2 = m | (1 << j);
                if seen.insert(m2) {
                    if seen.len() > budget {
                        return Err(TraceError::Budget(budget));
                    }
                    order.push(m2);
                    queue.push_back(m2);
                }
            }
        }
        Ok(order)
    }

    /// Minimal positions (no predecessor at all).
    pub fn minimal(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.pred[j] == 0).collect()
    }

    /// Maximal positions (no successor at all).
    pub fn maximal(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| (0..self.len()).all(|j| self.pred[j] & (1 << i) == 0)).collect()
    }
}

/// Atoms at the positions of `mask`, in position order.
pub fn select(atoms: &[Atom], mask: u128) -> Vec<Atom> {
    atoms.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, a)| a.clone()).collect()
}

/// One decomposition from Levi's lemma: `t = u_1⋯u_m = v_1⋯v_n` with
/// `u_i = w_{i,1}⋯w_{i,n}` and `v_j = w_{1,j}⋯w_{m,j}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeviGrid {
    pub rows: Vec<Vec<Atom>>,
    pub cols: Vec<Vec<Atom>>,
    pub cells: Vec<Vec<Vec<Atom>>>,
}

/// `u^m =_G s·v_1^m⋯v_k^m·t` with each `v_i` atomic or well-behaved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerPresentation {
    pub s: Vec<Atom>,
    pub v: Vec<Vec<Atom>>,
    pub t: Vec<Atom>,
}

/// `(p, s)` with `t = p·s`.
pub type Factorization = (Vec<Atom>, Vec<Atom>);

/// Trace operations over a fixed graph of vertex groups.
#[derive(Clone, Copy, Debug)]
pub struct TraceCtx<'a> {
    pub indep: &'a Independence,
    pub groups: &'a [Arc<dyn Group>],
}

impl<'a> TraceCtx<'a> {
    pub fn new(indep: &'a Independence, groups: &'a [Arc<dyn Group>]) -> Self {
        TraceCtx { indep, groups }
    }

    fn group(&self, v: u32) -> &dyn Group {
        self.groups[v as usize].as_ref()
    }

    pub fn dependent(&self, a: &Atom, b: &Atom) -> bool {
        !self.indep.independent(a.vertex, b.vertex)
    }

    pub fn events(&self, atoms: &[Atom]) -> Result<Events, TraceError> {
        Events::new(|i, j| self.dependent(&atoms[i], &atoms[j]), atoms.len())
    }

    /// Lexicographically least linearization.
    pub fn canon(&self, atoms: &[Atom]) -> Vec<Atom> {
        let n = atoms.len();
        let mut used = vec![false; n];
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut best: Option<usize> = None;
            for j in 0..n {
                if used[j] {
                    continue;
                }
                // j is available if no unused earlier position depends on it
                let blocked = (0..j).any(|i| !used[i] && self.dependent(&atoms[i], &atoms[j]));
                if !blocked && best.is_none_or(|b| atoms[j] < atoms[b]) {
                    best = Some(j);
                }
            }
            let b = best.expect("some position is always available");
            used[b] = true;
            out.push(atoms[b].clone());
        }
        out
    }

    pub fn equal(&self, a: &[Atom], b: &[Atom]) -> bool {
        a.len() == b.len() && self.canon(a) == self.canon(b)
    }

    /// Appends `a` to an irreducible linearization, merging it into the last
    /// dependent atom when that atom lies in the same vertex group.
    fn push_reduce(&self, out: &mut Vec<Atom>, a: Atom) {
        if self.group(a.vertex).is_identity(&a.elem) {
            return;
        }
        for k in (0..out.len()).rev() {
            if !self.dependent(&out[k], &a) {
                continue;
            }
            if out[k].vertex == a.vertex {
                let g = self.group(a.vertex);
                let p = g.mul(&out[k].elem, &a.elem);
                if g.is_identity(&p) {
                    out.remove(k);
                } else {
                    out[k].elem = p;
                }
                return;
            }
            break;
        }
        out.push(a);
    }

    /// The normal form with respect to `R`, in canonical linearization.
    pub fn nf(&self, atoms: &[Atom]) -> Vec<Atom> {
        let mut out = Vec::with_capacity(atoms.len());
        for a in atoms {
            self.push_reduce(&mut out, a.clone());
        }
        self.canon(&out)
    }

    pub fn mul(&self, a: &[Atom], b: &[Atom]) -> Vec<Atom> {
        let mut v = a.to_vec();
        v.extend_from_slice(b);
        self.nf(&v)
    }

    pub fn inverse(&self, atoms: &[Atom]) -> Vec<Atom> {
        let r: Vec<Atom> = atoms.iter().rev().map(|a| Atom::new(a.vertex, self.group(a.vertex).inv(&a.elem))).collect();
        self.canon(&r)
    }

    pub fn is_irreducible(&self, atoms: &[Atom]) -> bool {
        atoms.iter().all(|a| !self.group(a.vertex).is_identity(&a.elem)) && self.nf(atoms).len() == atoms.len()
    }

    /// Pairs `(i, j)` of same-vertex positions that some linearization puts
    /// next to each other, i.e. the places where a rule of `R` applies.
    pub fn redexes(&self, atoms: &[Atom]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if atoms[i].vertex != atoms[j].vertex {
                    continue;
                }
                // positions in (i, j) that must stay after i
                let mut after: Vec<usize> = Vec::new();
                let mut blocked = false;
                for k in i + 1..j {
                    let forced = self.dependent(&atoms[i], &atoms[k])
                        || after.iter().any(|&l| self.dependent(&atoms[l], &atoms[k]));
                    if forced {
                        if self.dependent(&atoms[k], &atoms[j]) {
                            blocked = true;
                            break;
                        }
                        after.push(k);
                    }
                }
                if !blocked {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Rewrites with `R` until irreducible, letting `choose(n)` pick which of
    /// the `n` applicable redexes to apply next. Returns the canonical result.
    pub fn rewrite_with(&self, atoms: &[Atom], mut choose: impl FnMut(usize) -> usize) -> Vec<Atom> {
        let mut cur: Vec<Atom> = atoms.iter().filter(|a| !self.group(a.vertex).is_identity(&a.elem)).cloned().collect();
        loop {
            let rs = self.redexes(&cur);
            if rs.is_empty() {
                return self.canon(&cur);
            }
            let (i, j) = rs[choose(rs.len()) % rs.len()];
            let g = self.group(cur[i].vertex);
            let p = g.mul(&cur[i].elem, &cur[j].elem);
            // the merged atom may sit at either end of the swept interval
            cur.remove(j);
            if g.is_identity(&p) {
                cur.remove(i);
            } else {
                cur[i].elem = p;
            }
        }
    }

    /// Number of prefixes `ρ(t)`.
    pub fn prefix_count(&self, atoms: &[Atom], budget: usize) -> Result<u64, TraceError> {
        Ok(self.events(atoms)?.ideals(budget)?.len() as u64)
    }

    /// All factorizations `t = p·s`, as `(p, s)` pairs of canonical traces.
    pub fn factorizations2(&self, atoms: &[Atom], budget: usize) -> Result<Vec<Factorization>, TraceError> {
        let ev = self.events(atoms)?;
        let full = ev.full();
        Ok(ev
            .ideals(budget)?
            .into_iter()
            .map(|m| (self.canon(&select(atoms, m)), self.canon(&select(atoms, full & !m))))
            .collect())
    }

    /// Chains `I_1 ⊆ ⋯ ⊆ I_{m-1}` of ideals, i.e. `m`-fold factorizations.
    fn chains(ideals: &[u128], m: usize) -> Vec<Vec<u128>> {
        let mut out = vec![vec![]];
        for _ in 1..m {
            let mut next = Vec::new();
            for c in &out {
                let last = c.last().copied().unwrap_or(0);
                for &i in ideals {
                    if i & last == last {
                        let mut c2 = c.clone();
                        c2.push(i);
                        next.push(c2);
                    }
                }
            }
            out = next;
        }
        out
    }

    /// Every pair of an `m`-fold and an `n`-fold factorization of `t` with
    /// its Levi grid.
    pub fn levi_decompositions(
        &self,
        atoms: &[Atom],
        m: usize,
        n: usize,
        budget: usize,
    ) -> Result<Vec<LeviGrid>, TraceError> {
        let ev = self.events(atoms)?;
        let full = ev.full();
        let ideals = ev.ideals(budget)?;
        let slices = |chain: &[u128]| -> Vec<u128> {
            let mut prev = 0u128;
            let mut out = Vec::new();
            for &c in chain.iter().chain(std::iter::once(&full)) {
                out.push(c & !prev);
                prev = c;
            }
            out
        };
        let rows = Self::chains(&ideals, m);
        let cols = Self::chains(&ideals, n);
        if rows.len().saturating_mul(cols.len()) > budget {
            return Err(TraceError::Budget(budget));
        }
        let mut out = Vec::new();
        for r in &rows {
            let rs = slices(r);
            for c in &cols {
                let cs = slices(c);
                out.push(LeviGrid {
                    rows: rs.iter().map(|&x| self.canon(&select(atoms, x))).collect(),
                    cols: cs.iter().map(|&x| self.canon(&select(atoms, x))).collect(),
                    cells: rs
                        .iter()
                        .map(|&x| cs.iter().map(|&y| self.canon(&select(atoms, x & y))).collect())
                        .collect(),
                });
            }
        }
        Ok(out)
    }

    /// Connected components of the dependence graph on positions.
    pub fn connected_components(&self, atoms: &[Atom]) -> Vec<Vec<Atom>> {
        let n = atoms.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let nx = p[y];
                p[y] = r;
                y = nx;
            }
            r
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.dependent(&atoms[i], &atoms[j]) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut comps: Vec<(usize, Vec<Atom>)> = Vec::new();
        for (i, a) in atoms.iter().enumerate().take(n) {
            let r = find(&mut parent, i);
            match comps.iter_mut().find(|(root, _)| *root == r) {
                Some((_, v)) => v.push(a.clone()),
                None => comps.push((r, vec![a.clone()])),
            }
        }
        comps.into_iter().map(|(_, v)| self.canon(&v)).collect()
    }

    pub fn is_connected(&self, atoms: &[Atom]) -> bool {
        self.connected_components(atoms).len() == 1
    }

    /// A minimal and a distinct maximal position in the same vertex group.
    fn same_vertex_ends(&self, atoms: &[Atom]) -> Option<(usize, usize)> {
        let ev = Events::new(|i, j| self.dependent(&atoms[i], &atoms[j]), atoms.len()).ok()?;
        let (mins, maxs) = (ev.minimal(), ev.maximal());
        for &a in &mins {
            for &b in &maxs {
                if a != b && atoms[a].vertex == atoms[b].vertex {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn is_well_behaved(&self, atoms: &[Atom]) -> bool {
        atoms.len() >= 2
            && self.is_irreducible(atoms)
            && self.is_connected(atoms)
            && self.same_vertex_ends(atoms).is_none()
    }

    /// Geodesic length: the sum of the atoms' norms in their vertex groups.
    pub fn norm(&self, atoms: &[Atom]) -> u64 {
        atoms.iter().map(|a| self.group(a.vertex).norm(&a.elem)).sum()
    }

    /// Repeatedly peels `u = a·v·b` with `a, b` in one vertex group into
    /// `a·(v·ba)^m·a⁻¹`, then splits the remainder into connected components.
    pub fn power_presentation(&self, u: &[Atom]) -> PowerPresentation {
        let u0 = self.nf(u);
        let (mut s, mut t) = (Vec::new(), Vec::new());
        let mut cur = u0.clone();
        while let Some((ia, ib)) = self.same_vertex_ends(&cur) {
            let (a, b) = (cur[ia].clone(), cur[ib].clone());
            let g = self.group(a.vertex);
            let c = Atom::new(a.vertex, g.mul(&b.elem, &a.elem));
            let mut v: Vec<Atom> =
                cur.iter().enumerate().filter(|(i, _)| *i != ia && *i != ib).map(|(_, x)| x.clone()).collect();
            v.push(c);
            cur = self.nf(&v);
            s = self.mul(&s, std::slice::from_ref(&a));
            t = self.mul(&[Atom::new(a.vertex, g.inv(&a.elem))], &t);
        }
        let v = if cur.is_empty() { Vec::new() } else { self.connected_components(&cur) };
        let total = self.norm(&s) + self.norm(&t) + v.iter().map(|x| self.norm(x)).sum::<u64>();
        bounds::check(Bound::PowerPresentation, total <= 3 * self.norm(&u0) && v.len() <= self.indep.alpha());
        PowerPresentation { s, v, t }
    }

    /// Subsequence of atoms whose vertex is `i` or `j`.
    pub fn project_pair(&self, atoms: &[Atom], i: u32, j: u32) -> Vec<Atom> {
        atoms.iter().filter(|a| a.vertex == i || a.vertex == j).cloned().collect()
    }

    /// Trace equality through projections onto dependent vertex pairs.
    pub fn equal_by_projections(&self, a: &[Atom], b: &[Atom]) -> bool {
        let n = self.indep.size() as u32;
        for i in 0..n {
            for j in i..n {
                if (i == j || !self.indep.independent(i, j)) && self.project_pair(a, i, j) != self.project_pair(b, i, j)
                {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{Elem, FiniteGroup};

    fn z(n: u32, name: &str) -> Arc<dyn Group> {
        Arc::new(FiniteGroup::cyclic(n, name))
    }

    fn at(v: u32, e: u32) -> Atom {
        Atom::new(v, Elem::Fin(e))
    }

    #[test]
    fn canon_and_equality() {
        let groups = vec![z(2, "a"), z(2, "b"), z(2, "c")];
        let comm = Independence::new(2, &[(0, 1)]);
        let ctx = TraceCtx::new(&comm, &groups[..2]);
        assert_eq!(ctx.canon(&[at(1, 1), at(0, 1)]), ctx.canon(&[at(0, 1), at(1, 1)]));
        let free = Independence::free(2);
        let ctx = TraceCtx::new(&free, &groups[..2]);
        assert!(!ctx.equal(&[at(0, 1), at(1, 1)], &[at(1, 1), at(0, 1)]));
        let path = Independence::new(3, &[(0, 1), (1, 2)]);
        let ctx = TraceCtx::new(&path, &groups);
        assert!(!ctx.equal(&[at(0, 1), at(2, 1)], &[at(2, 1), at(0, 1)]));
    }

    #[test]
    fn nf_examples() {
        let groups = vec![z(2, "a"), z(2, "b")];
        let comm = Independence::new(2, &[(0, 1)]);
        let ctx = TraceCtx::new(&comm, &groups);
        assert_eq!(ctx.nf(&[at(0, 1), at(1, 1), at(0, 1)]), vec![at(1, 1)]);
        assert_eq!(ctx.nf(&[at(0, 1), at(0, 1)]), vec![]);
        let groups = vec![z(2, "a"), z(3, "b")];
        let free = Independence::free(2);
        let ctx = TraceCtx::new(&free, &groups);
        assert_eq!(ctx.nf(&[at(0, 1), at(1, 1)]), vec![at(0, 1), at(1, 1)]);
    }

    #[test]
    fn prefix_counts_and_factorizations() {
        let groups = vec![z(2, "a"), z(2, "b")];
        let comm = Independence::new(2, &[(0, 1)]);
        let ctx = TraceCtx::new(&comm, &groups);
        let ab = [at(0, 1), at(1, 1)];
        assert_eq!(ctx.prefix_count(&ab, 1000).unwrap(), 4);
        assert_eq!(ctx.levi_decompositions(&ab, 2, 1, 1000).unwrap().len(), 4);
        let free = Independence::free(2);
        let ctx = TraceCtx::new(&free, &groups);
        assert_eq!(ctx.prefix_count(&ab, 1000).unwrap(), 3);
        assert_eq!(ctx.levi_decompositions(&ab, 2, 1, 1000).unwrap().len(), 3);
        assert_eq!(ctx.levi_decompositions(&[], 2, 2, 1000).unwrap().len(), 1);
    }

    #[test]
    fn components() {
        let groups = vec![z(2, "a"), z(2, "b")];
        let comm = Independence::new(2, &[(0, 1)]);
        let ctx = TraceCtx::new(&comm, &groups);
        assert_eq!(ctx.connected_components(&[at(0, 1), at(1, 1)]).len(), 2);
        assert!(ctx.connected_components(&[]).is_empty());
        let free = Independence::free(2);
        let ctx = TraceCtx::new(&free, &groups);
        assert!(ctx.is_connected(&[at(0, 1), at(1, 1)]));
    }

    #[test]
    fn well_behaved_and_power_presentation() {
        let groups = vec![z(2, "a"), z(3, "b")];
        let free = Independence::free(2);
        let ctx = TraceCtx::new(&free, &groups);
        let ab = vec![at(0, 1), at(1, 1)];
        assert!(ctx.is_well_behaved(&ab));
        assert!(!ctx.is_well_behaved(&[at(0, 1), at(1, 1), at(0, 1)]));
        assert!(!ctx.is_well_behaved(&[at(0, 1)]));
        let pp = ctx.power_presentation(&[at(0, 1), at(1, 1), at(0, 1)]);
        assert_eq!(pp, PowerPresentation { s: vec![at(0, 1)], v: vec![vec![at(1, 1)]], t: vec![at(0, 1)] });
        let pp = ctx.power_presentation(&ab);
        assert_eq!(pp, PowerPresentation { s: vec![], v: vec![ab.clone()], t: vec![] });
    }

    #[test]
    fn projections() {
        let groups = vec![z(2, "a"), z(2, "b"), z(2, "c")];
        let path = Independence::new(3, &[(0, 1), (1, 2)]);
        let ctx = TraceCtx::new(&path, &groups);
        let t = [at(0, 1), at(1, 1), at(2, 1)];
        assert_eq!(ctx.project_pair(&t, 0, 1), vec![at(0, 1), at(1, 1)]);
        assert!(ctx.project_pair(&[at(2, 1)], 0, 1).is_empty());
    }

    #[test]
    fn alpha_of_graphs() {
        assert_eq!(Independence::free(3).alpha(), 1);
        assert_eq!(Independence::new(3, &[(0, 1), (1, 2)]).alpha(), 2);
        assert_eq!(Independence::new(3, &[(0, 1), (1, 2), (0, 2)]).alpha(), 3);
    }
}
