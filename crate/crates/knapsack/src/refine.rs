//! Depth-first search for reduction scripts of a tuple of items.
//!
//! A tuple mixes concrete pieces, symbolic atoms (a product of constants and
//! atomic powers inside one vertex group) and symbolic powers `v^x` of a
//! well-behaved period `v`. A script removes every item through three moves:
//!
//! * cancel: a final segment of one item against an initial segment of a
//!   later one, possibly across a middle atom (HNN pinches);
//! * merge: two single atoms of one vertex group become one atom, or vanish
//!   under a recorded identity;
//! * resolve: a symbolic power with a small exponent becomes concrete (only
//!   needed when items may commute).
//!
//! Each move records exponent counts, vertex-group identities and
//! two-variable constraints from long-against-long cancellations. The search
//! is memoized per state, and a state's value is already a semilinear set over
//! the active powers: the union, over its moves, of the move's own set plus
//! (Minkowski sum) the value of the state it leads to. Scripts that only
//! differ in how they reach the same exponents therefore never multiply.

use std::collections::HashMap;
use std::rc::Rc;
use std::sync::atomic::Ordering;

use crate::bounds::{self, Bound};
use crate::groups::{knapsack_of, Atom, Diagnostics, Elem, Group, Seg, SolveCtx, SolveError};
use crate::semilinear::SemilinearSet;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Part {
    Const(Elem),
    Pow(usize),
}

/// `pre · u^n · suf`, `n ≥ 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Shape {
    pub pre: Vec<Atom>,
    pub u: Vec<Atom>,
    pub suf: Vec<Atom>,
}

/// What the search needs to know about the ambient group.
pub(crate) trait Theory: Sync {
    /// Items never commute.
    fn literal(&self) -> bool;
    fn dependent(&self, a: u32, b: u32) -> bool;
    fn group(&self, v: u32) -> &dyn Group;
    fn can_merge(&self, v: u32) -> bool;
    fn canon(&self, atoms: Vec<Atom>) -> Vec<Atom>;
    fn measure(&self, atoms: &[Atom]) -> usize;
    fn cancellable(&self, atoms: &[Atom]) -> bool;
    /// Elements allowed as a middle atom or as the result of a cancellation.
    fn connectors(&self) -> &[Elem];
    /// `Some(b)` when `s·mid·p = b` with `b` trivial (`None`) or a connector.
    fn cancel(&self, s: &[Atom], mid: Option<&Elem>, p: &[Atom]) -> Option<Option<Elem>>;
    /// For each possible `b`, the pairs `(m, n)` with `S(m)·mid·P(n) = b`.
    fn solve_pair(
        &self,
        s: &Shape,
        mid: Option<&Elem>,
        p: &Shape,
        ctx: &SolveCtx,
    ) -> Result<Vec<(Option<Elem>, SemilinearSet)>, SolveError>;
    fn piece_bound(&self, m: usize) -> usize;
    fn creation_bound(&self, m: usize) -> usize;
    fn creation_slot(&self, v: u32) -> usize;
    fn creation_slots(&self) -> usize;
    /// Vertex of the connector atoms.
    fn connector_vertex(&self) -> u32 {
        0
    }
}

/// A period together with the offsets of the ideals of `u^ω` modulo whole copies.
#[derive(Clone, Debug)]
pub(crate) struct Period {
    pub u: Vec<Atom>,
    pub offsets: Vec<Vec<u32>>,
}

impl Period {
    pub fn new(u: Vec<Atom>, dep: impl Fn(u32, u32) -> bool) -> Period {
        let n = u.len();
        let mut cons: Vec<Vec<usize>> = vec![Vec::new(); n];
        for j in 0..n {
            for i in 0..j {
                if dep(u[i].vertex, u[j].vertex) {
                    cons[j].push(i);
                }
            }
        }
        fn rec(k: usize, n: usize, cons: &[Vec<usize>], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if k == n {
                if cur.iter().min() == Some(&0) {
                    out.push(cur.clone());
                }
                return;
            }
            for val in 0..n as u32 {
                cur[k] = val;
                if cons[k].iter().all(|&i| cur[k] <= cur[i] && cur[i] <= cur[k] + 1) {
                    rec(k + 1, n, cons, cur, out);
                }
            }
        }
        let mut offsets = Vec::new();
        rec(0, n, &cons, &mut vec![0; n], &mut offsets);
        offsets.sort();
        Period { u, offsets }
    }

    fn dmax(&self, o: usize) -> u32 {
        self.offsets[o].iter().copied().max().unwrap_or(0)
    }

    /// Events `(k, j)` with `lo_j ≤ k < n + hi_j`, in copy-major order.
    fn piece(&self, lo: usize, hi: usize, n: u32) -> Vec<Atom> {
        let (lo, hi) = (&self.offsets[lo], &self.offsets[hi]);
        let top = n + hi.iter().copied().max().unwrap_or(0);
        let mut out = Vec::new();
        for k in 0..top {
            for (j, a) in self.u.iter().enumerate() {
                if lo[j] <= k && k < n + hi[j] {
                    out.push(a.clone());
                }
            }
        }
        out
    }

    fn nmin(&self, lo: usize, hi: usize) -> u32 {
        let (l, h) = (&self.offsets[lo], &self.offsets[hi]);
        let n0 = l.iter().zip(h).map(|(a, b)| a.saturating_sub(*b)).max().unwrap_or(0);
        if l.iter().zip(h).any(|(a, b)| n0 + b > *a) {
            n0
        } else {
            n0 + 1
        }
    }

    fn shape(&self, lo: usize, hi: usize) -> Shape {
        Shape { pre: self.piece(lo, 0, self.dmax(lo) + 1), u: self.u.clone(), suf: self.piece(0, hi, 0) }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Power {
    Atomic { vertex: u32, period: Elem },
    Sym(Period),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Item {
    Conc(Vec<Atom>),
    Term(u32, Vec<Part>),
    Sym { power: usize, lo: usize, hi: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Count {
    Fixed(u32),
    /// `base + z` where `z` is side `side` of recorded pair `pair`.
    Long {
        pair: usize,
        side: u8,
        base: u32,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub(crate) struct Script {
    pub counts: Vec<(usize, Count)>,
    pub identities: Vec<(u32, Vec<Part>)>,
    /// `(solved pair, outcome index)`; `Count::Long` points into this list.
    pub pairs: Vec<(usize, usize)>,
}

/// Pieces and per-slot atom creations used so far.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Tally {
    pieces: usize,
    creations: Vec<usize>,
}

#[derive(Clone, Debug)]
enum Piece {
    Conc { atoms: Vec<Atom>, count: Option<(usize, u32)> },
    Long { shape: Shape, power: usize, base: u32 },
    Term { vertex: u32, parts: Vec<Part> },
}

#[derive(Clone, Debug)]
struct Carve {
    piece: Piece,
    rest: Option<Item>,
    alph: u64,
}

struct Move {
    counts: Vec<(usize, Count)>,
    identities: Vec<(u32, Vec<Part>)>,
    pair: Option<(usize, usize)>,
    insert: Option<Item>,
    creations: Option<u32>,
    close: bool,
}

type State = (Vec<Item>, Vec<bool>, Tally);

/// Vertex, parts and optional `(power, count)` of a single-atom piece.
type AtomParts = (u32, Vec<Part>, Option<(usize, u32)>);

/// A connector carved from a middle item, with the counts and identities
/// that carving it records.
type Middle = (Elem, Vec<(usize, Count)>, Vec<(u32, Vec<Part>)>);

pub(crate) type TraceMul<'a> = dyn Fn(&[Atom], &[Atom]) -> Vec<Atom> + Sync + 'a;

pub(crate) struct Engine<'a, T: Theory> {
    th: &'a T,
    powers: &'a [Option<Power>],
    ctx: &'a SolveCtx,
    piece_budget: usize,
    piece_bound: usize,
    creation_bound: usize,
    depmask: Vec<u64>,
    memo: HashMap<State, Rc<SemilinearSet>>,
    steps: HashMap<Script, Rc<SemilinearSet>>,
    names: Vec<String>,
    active: Vec<usize>,
    nodes: usize,
    stopped: bool,
    cut: bool,
    pairs: Vec<Vec<(Option<Elem>, SemilinearSet)>>,
    pair_index: HashMap<(Shape, Option<Elem>, Shape), usize>,
}

impl<'a, T: Theory> Engine<'a, T> {
    pub fn new(th: &'a T, powers: &'a [Option<Power>], ctx: &'a SolveCtx, vertices: usize) -> Self {
        let depmask = (0..vertices as u32)
            .map(|a| (0..vertices as u32).filter(|&b| th.dependent(a, b)).fold(0u64, |m, b| m | 1 << b))
            .collect();
        Engine {
            th,
            powers,
            ctx,
            piece_budget: 0,
            piece_bound: 0,
            creation_bound: 0,
            depmask,
            memo: HashMap::new(),
            steps: HashMap::new(),
            names: Vec::new(),
            active: Vec::new(),
            nodes: 0,
            stopped: false,
            cut: false,
            pairs: Vec::new(),
            pair_index: HashMap::new(),
        }
    }

    /// Union, over all reductions of `items` to the empty tuple within the
    /// bounds, of their solution sets over `names[active]`.
    pub fn run(&mut self, items: Vec<Item>, names: &[String], active: &[usize]) -> Result<SemilinearSet, SolveError> {
        self.names = active.iter().map(|&k| names[k].clone()).collect();
        self.active = active.to_vec();
        let m = items.len();
        self.piece_bound = self.th.piece_bound(m);
        self.creation_bound = self.th.creation_bound(m);
        self.piece_budget = self.ctx.budget.refinement.map_or(self.piece_bound, |r| r.min(self.piece_bound));
        let items = if self.th.literal() { items } else { self.canon_order(items) };
        let closed = vec![false; items.len()];
        let tally = Tally { pieces: m, creations: vec![0; self.th.creation_slots()] };
        let found = self.dfs(items, closed, tally)?;
        Diagnostics::bump(&self.ctx.diag.search_states, self.nodes as u64);
        if self.cut && self.piece_budget < self.piece_bound {
            if self.ctx.budget.fast {
                self.ctx.diag.truncated.store(true, Ordering::Relaxed);
            } else {
                return Err(SolveError::BudgetExhausted(format!(
                    "refinement budget {} is below the bound {}",
                    self.piece_budget, self.piece_bound
                )));
            }
        }
        Diagnostics::bump(&self.ctx.diag.reduction_components, found.components.len() as u64);
        Ok((*found).clone())
    }

    fn dep(&self, a: u64, b: u64) -> bool {
        let mut a = a;
        while a != 0 {
            let v = a.trailing_zeros() as usize;
            if self.depmask[v] & b != 0 {
                return true;
            }
            a &= a - 1;
        }
        false
    }

    fn mask(atoms: &[Atom]) -> u64 {
        atoms.iter().fold(0, |m, a| m | 1 << a.vertex)
    }

    fn period(&self, power: usize) -> &Period {
        match &self.powers[power] {
            Some(Power::Sym(p)) => p,
            _ => unreachable!("symbolic item without a period"),
        }
    }

    fn alph(&self, it: &Item) -> u64 {
        match it {
            Item::Conc(a) => Self::mask(a),
            Item::Term(v, _) => 1 << v,
            Item::Sym { power, .. } => Self::mask(&self.period(*power).u),
        }
    }

    fn canon_order(&self, items: Vec<Item>) -> Vec<Item> {
        let n = items.len();
        let alph: Vec<u64> = items.iter().map(|i| self.alph(i)).collect();
        let mut used = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for _ in 0..n {
            let mut best: Option<usize> = None;
            for j in 0..n {
                if used[j] || (0..j).any(|i| !used[i] && self.dep(alph[i], alph[j])) {
                    continue;
                }
                if best.is_none_or(|b| items[j] < items[b]) {
                    best = Some(j);
                }
            }
            let b = best.expect("an available item");
            used[b] = true;
            order.push(b);
        }
        let mut slots: Vec<Option<Item>> = items.into_iter().map(Some).collect();
        order.into_iter().map(|i| slots[i].take().unwrap()).collect()
    }

    /// Final (`initial == false`) or initial segments of an item.
    fn carves(&self, it: &Item, initial: bool) -> Result<Vec<Carve>, SolveError> {
        let mut out = Vec::new();
        match it {
            Item::Term(v, parts) => {
                out.push(Carve { piece: Piece::Term { vertex: *v, parts: parts.clone() }, rest: None, alph: 1 << v })
            }
            Item::Conc(atoms) => {
                let splits: Vec<(Vec<Atom>, Vec<Atom>)> = if self.th.literal() {
                    (0..=atoms.len()).map(|k| (atoms[..k].to_vec(), atoms[k..].to_vec())).collect()
                } else {
                    let ev = crate::trace::Events::new(
                        |i, j| self.th.dependent(atoms[i].vertex, atoms[j].vertex),
                        atoms.len(),
                    )
                    .map_err(|e| SolveError::BudgetExhausted(e.to_string()))?;
                    let full = ev.full();
                    ev.ideals(self.ctx.budget.search_nodes)
                        .map_err(|e| SolveError::BudgetExhausted(e.to_string()))?
                        .into_iter()
                        .map(|m| {
                            (
                                self.th.canon(crate::trace::select(atoms, m)),
                                self.th.canon(crate::trace::select(atoms, full & !m)),
                            )
                        })
                        .collect()
                };
                for (head, tail) in splits {
                    let (piece, rest) = if initial { (head, tail) } else { (tail, head) };
                    if piece.is_empty() {
                        continue;
                    }
                    out.push(Carve {
                        alph: Self::mask(&piece),
                        piece: Piece::Conc { atoms: piece, count: None },
                        rest: (!rest.is_empty()).then_some(Item::Conc(rest)),
                    });
                }
            }
            Item::Sym { power, lo, hi } => {
                let (power, lo, hi) = (*power, *lo, *hi);
                let per = self.period(power);
                let alph = Self::mask(&per.u);
                for m in 0..per.offsets.len() {
                    let (plo, phi) = if initial { (lo, m) } else { (m, hi) };
                    let whole = if initial { m == hi } else { m == lo };
                    let rest_item =
                        if initial { Item::Sym { power, lo: m, hi } } else { Item::Sym { power, lo, hi: m } };
                    let mut rests = vec![Some(rest_item)];
                    if whole {
                        rests.push(None);
                    }
                    for rest in rests {
                        for n in per.nmin(plo, phi)..=per.dmax(plo) {
                            let atoms = self.th.canon(per.piece(plo, phi, n));
                            out.push(Carve {
                                alph: Self::mask(&atoms),
                                piece: Piece::Conc { atoms, count: Some((power, n)) },
                                rest: rest.clone(),
                            });
                        }
                        let sh = per.shape(plo, phi);
                        let shape = Shape { pre: self.th.canon(sh.pre), u: sh.u, suf: self.th.canon(sh.suf) };
                        out.push(Carve { piece: Piece::Long { shape, power, base: per.dmax(plo) + 1 }, rest, alph });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Items between `i` and `j` that must stay after the final segment of
    /// item `i`; `None` when one of them blocks the initial segment of `j`.
    fn between(&self, items: &[Item], i: usize, j: usize, sa: u64, pa: u64) -> Option<(Vec<usize>, Vec<usize>)> {
        let (mut non_u, mut u) = (Vec::new(), Vec::new());
        let mut u_alph = 0u64;
        for (k, it) in items.iter().enumerate().take(j).skip(i + 1) {
            let a = self.alph(it);
            if self.dep(a, sa) || self.dep(a, u_alph) {
                if self.dep(a, pa) {
                    return None;
                }
                u.push(k);
                u_alph |= a;
            } else {
                non_u.push(k);
            }
        }
        Some((non_u, u))
    }

    fn pair(&mut self, s: &Shape, mid: Option<&Elem>, p: &Shape) -> Result<usize, SolveError> {
        let key = (s.clone(), mid.cloned(), p.clone());
        if let Some(&i) = self.pair_index.get(&key) {
            return Ok(i);
        }
        let mut sols = self.th.solve_pair(s, mid, p, self.ctx)?;
        for (_, set) in &mut sols {
            set.simplify();
        }
        self.pairs.push(sols);
        self.pair_index.insert(key, self.pairs.len() - 1);
        Ok(self.pairs.len() - 1)
    }

    fn concrete_long(&self, sh: &Shape, target: usize) -> Option<(Vec<Atom>, u32)> {
        let fixed = self.th.measure(&sh.pre) + self.th.measure(&sh.suf);
        let mu = self.th.measure(&sh.u);
        if target < fixed || mu == 0 || !(target - fixed).is_multiple_of(mu) {
            return None;
        }
        let n = (target - fixed) / mu;
        let mut w = sh.pre.clone();
        for _ in 0..n {
            w.extend_from_slice(&sh.u);
        }
        w.extend_from_slice(&sh.suf);
        Some((self.th.canon(w), n as u32))
    }

    fn cancel_moves(&mut self, s: &Carve, mid: Option<&Elem>, p: &Carve) -> Result<Vec<Move>, SolveError> {
        let th = self.th;
        let mk = |b: Option<Elem>, counts: Vec<(usize, Count)>, pair: Option<(usize, usize)>| Move {
            counts,
            identities: Vec::new(),
            pair,
            insert: b.map(|b| Item::Conc(vec![Atom::new(th.connector_vertex(), b)])),
            creations: None,
            close: true,
        };
        let short = |c: &Option<(usize, u32)>| c.iter().map(|&(p, n)| (p, Count::Fixed(n))).collect::<Vec<_>>();
        let mut out = Vec::new();
        match (&s.piece, &p.piece) {
            (Piece::Term { .. }, _) | (_, Piece::Term { .. }) => {}
            (Piece::Conc { atoms: a1, count: c1 }, Piece::Conc { atoms: a2, count: c2 }) => {
                if th.measure(a1) == th.measure(a2) && th.cancellable(a1) && th.cancellable(a2) {
                    if let Some(b) = th.cancel(a1, mid, a2) {
                        let mut counts = short(c1);
                        counts.extend(short(c2));
                        out.push(mk(b, counts, None));
                    }
                }
            }
            (Piece::Long { shape, power, base }, Piece::Conc { atoms, count })
            | (Piece::Conc { atoms, count }, Piece::Long { shape, power, base }) => {
                let long_left = matches!(s.piece, Piece::Long { .. });
                if !th.cancellable(atoms) {
                    return Ok(out);
                }
                if let Some((w, n)) = self.concrete_long(shape, th.measure(atoms)) {
                    let b = if long_left { th.cancel(&w, mid, atoms) } else { th.cancel(atoms, mid, &w) };
                    if let Some(b) = b {
                        let mut counts = vec![(*power, Count::Fixed(base + n))];
                        counts.extend(short(count));
                        out.push(mk(b, counts, None));
                    }
                }
            }
            (Piece::Long { shape: sh1, power: p1, base: b1 }, Piece::Long { shape: sh2, power: p2, base: b2 }) => {
                let idx = self.pair(sh1, mid, sh2)?;
                for (oi, (b, set)) in self.pairs[idx].iter().enumerate() {
                    if set.is_empty() {
                        continue;
                    }
                    let counts = vec![
                        (*p1, Count::Long { pair: 0, side: 0, base: *b1 }),
                        (*p2, Count::Long { pair: 0, side: 1, base: *b2 }),
                    ];
                    out.push(mk(b.clone(), counts, Some((idx, oi))));
                }
            }
        }
        Ok(out)
    }

    fn atom_parts(pc: &Piece) -> Option<AtomParts> {
        match pc {
            Piece::Conc { atoms, count } if atoms.len() == 1 => {
                Some((atoms[0].vertex, vec![Part::Const(atoms[0].elem.clone())], *count))
            }
            Piece::Term { vertex, parts } => Some((*vertex, parts.clone(), None)),
            _ => None,
        }
    }

    fn normalize_parts(&self, v: u32, parts: Vec<Part>) -> Vec<Part> {
        let g = self.th.group(v);
        let mut out: Vec<Part> = Vec::new();
        for p in parts {
            match (out.last_mut(), p) {
                (Some(Part::Const(c)), Part::Const(d)) => *c = g.mul(c, &d),
                (_, p) => out.push(p),
            }
            if let Some(Part::Const(c)) = out.last() {
                if g.is_identity(c) {
                    out.pop();
                }
            }
        }
        out
    }

    fn merge_moves(&self, s: &Carve, p: &Carve) -> Vec<Move> {
        let (Some((v1, parts1, c1)), Some((v2, parts2, c2))) = (Self::atom_parts(&s.piece), Self::atom_parts(&p.piece))
        else {
            return Vec::new();
        };
        if v1 != v2 || !self.th.can_merge(v1) {
            return Vec::new();
        }
        let mut parts = parts1;
        parts.extend(parts2);
        let parts = self.normalize_parts(v1, parts);
        let counts: Vec<(usize, Count)> = c1.iter().chain(c2.iter()).map(|&(pw, n)| (pw, Count::Fixed(n))).collect();
        let base = |insert: Option<Item>, identities: Vec<(u32, Vec<Part>)>| Move {
            counts: counts.clone(),
            identities,
            pair: None,
            creations: insert.as_ref().map(|_| v1),
            insert,
            close: false,
        };
        let has_pow = parts.iter().any(|p| matches!(p, Part::Pow(_)));
        if !has_pow {
            match parts.first() {
                None => {
                    // GP deletions of two concrete atoms are ordinary cancellations
                    let probe = match &s.piece {
                        Piece::Conc { atoms, .. } => atoms.clone(),
                        _ => Vec::new(),
                    };
                    if matches!(s.piece, Piece::Conc { .. })
                        && matches!(p.piece, Piece::Conc { .. })
                        && self.th.cancellable(&probe)
                    {
                        return Vec::new();
                    }
                    vec![base(None, Vec::new())]
                }
                Some(Part::Const(e)) => vec![base(Some(Item::Conc(vec![Atom::new(v1, e.clone())])), Vec::new())],
                Some(Part::Pow(_)) => unreachable!(),
            }
        } else {
            vec![base(None, vec![(v1, parts.clone())]), base(Some(Item::Term(v1, parts)), Vec::new())]
        }
    }

    /// Whole single-atom carves of a middle item usable in a pinch.
    fn middles(&self, it: &Item) -> Result<Vec<Middle>, SolveError> {
        let mut out = Vec::new();
        let cv = self.th.connector_vertex();
        for c in self.carves(it, true)? {
            if c.rest.is_some() {
                continue;
            }
            match c.piece {
                Piece::Conc { atoms, count } if atoms.len() == 1 && atoms[0].vertex == cv => {
                    if self.th.connectors().contains(&atoms[0].elem) {
                        let counts = count.iter().map(|&(p, n)| (p, Count::Fixed(n))).collect();
                        out.push((atoms[0].elem.clone(), counts, Vec::new()));
                    }
                }
                Piece::Term { vertex, parts } if vertex == cv => {
                    let g = self.th.group(cv);
                    for e in self.th.connectors() {
                        let mut ps = parts.clone();
                        ps.push(Part::Const(g.inv(e)));
                        out.push((e.clone(), Vec::new(), vec![(cv, self.normalize_parts(cv, ps))]));
                    }
                }
                _ => {}
            }
        }
        Ok(out)
    }

    /// The script step of a move and the updated tally, unless a bound cuts it.
    fn apply(&mut self, tally: &Tally, s: &Carve, p: &Carve, mv: Move) -> Option<(Script, Tally)> {
        let mut t = tally.clone();
        t.pieces += s.rest.is_some() as usize + p.rest.is_some() as usize;
        if t.pieces > self.piece_budget {
            self.cut = true;
            return None;
        }
        if let Some(v) = mv.creations {
            let slot = self.th.creation_slot(v);
            t.creations[slot] += 1;
            if t.creations[slot] > self.creation_bound {
                return None;
            }
        }
        let mut step = Script::default();
        for (v, parts) in mv.identities {
            if parts.iter().any(|q| matches!(q, Part::Pow(_))) {
                step.identities.push((v, parts));
            } else if !parts.is_empty() {
                return None;
            }
        }
        step.identities.sort();
        step.counts = mv.counts;
        step.counts.sort();
        step.pairs.extend(mv.pair);
        Some((step, t))
    }

    #[allow(clippy::too_many_arguments)]
    fn successor(
        &self,
        items: &[Item],
        closed: &[bool],
        i: usize,
        j: usize,
        s: &Carve,
        p: &Carve,
        insert: Option<Item>,
        close: bool,
        split: Option<&(Vec<usize>, Vec<usize>)>,
    ) -> (Vec<Item>, Vec<bool>) {
        if let Some((non_u, u)) = split {
            let mut out: Vec<Item> = items[..i].to_vec();
            out.extend(s.rest.clone());
            out.extend(non_u.iter().map(|&k| items[k].clone()));
            out.extend(insert);
            out.extend(u.iter().map(|&k| items[k].clone()));
            out.extend(p.rest.clone());
            out.extend(items[j + 1..].iter().cloned());
            let out = self.canon_order(out);
            let n = out.len();
            return (out, vec![false; n]);
        }
        let mut out = Vec::with_capacity(items.len() + 1);
        let mut fl = Vec::with_capacity(items.len() + 1);
        for k in 0..i {
            out.push(items[k].clone());
            fl.push(closed[k] && (k + 1 < i || s.rest.is_some()));
        }
        if let Some(r) = &s.rest {
            out.push(r.clone());
            fl.push(close && insert.is_none() && p.rest.is_some());
        }
        if let Some(ins) = insert {
            out.push(ins);
            fl.push(false);
        }
        if let Some(r) = &p.rest {
            out.push(r.clone());
            fl.push(closed[j]);
        }
        for k in j + 1..items.len() {
            out.push(items[k].clone());
            fl.push(closed[k]);
        }
        (out, fl)
    }

    fn emit(&self, t: &Tally) {
        let ok_pieces = t.pieces <= self.piece_bound;
        let ok_creations = t.creations.iter().all(|&c| c <= self.creation_bound);
        bounds::check(Bound::RefinementLength, ok_pieces);
        bounds::check(Bound::AtomCreations, ok_creations);
        self.ctx.diag.check_bound(ok_pieces);
        self.ctx.diag.check_bound(ok_creations);
    }

    /// Exponents of every script suffix that empties `items` from this state.
    #[allow(clippy::needless_range_loop)]
    fn dfs(&mut self, items: Vec<Item>, closed: Vec<bool>, tally: Tally) -> Result<Rc<SemilinearSet>, SolveError> {
        if self.stopped {
            return Ok(Rc::new(SemilinearSet::empty(self.names.clone())));
        }
        if items.is_empty() {
            self.emit(&tally);
            return Ok(Rc::new(SemilinearSet::point(self.names.clone(), vec![0; self.names.len()])));
        }
        let key = (items, closed, tally);
        if let Some(done) = self.memo.get(&key) {
            return Ok(done.clone());
        }
        self.nodes += 1;
        if self.nodes > self.ctx.budget.search_nodes {
            if self.ctx.budget.fast {
                self.ctx.diag.truncated.store(true, Ordering::Relaxed);
                self.stopped = true;
                return Ok(Rc::new(SemilinearSet::empty(self.names.clone())));
            }
            return Err(SolveError::BudgetExhausted(format!(
                "reduction search exceeded {} states",
                self.ctx.budget.search_nodes
            )));
        }
        let (items, closed, tally) = key.clone();
        let literal = self.th.literal();
        let n = items.len();
        let finals: Vec<Vec<Carve>> = items.iter().map(|it| self.carves(it, false)).collect::<Result<_, _>>()?;
        let initials: Vec<Vec<Carve>> = items.iter().map(|it| self.carves(it, true)).collect::<Result<_, _>>()?;
        let mut next: Vec<(Script, Vec<Item>, Vec<bool>, Tally)> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if literal && j > i + 2 {
                    break;
                }
                let mids: Vec<Option<Middle>> = if !literal || j == i + 1 {
                    vec![None]
                } else if self.th.connectors().is_empty() {
                    Vec::new()
                } else {
                    self.middles(&items[i + 1])?.into_iter().map(Some).collect()
                };
                if mids.is_empty() {
                    continue;
                }
                for s in &finals[i] {
                    for p in &initials[j] {
                        let split = if literal {
                            None
                        } else {
                            match self.between(&items, i, j, s.alph, p.alph) {
                                Some(x) => Some(x),
                                None => continue,
                            }
                        };
                        let junction_closed = literal && j == i + 1 && closed[i];
                        for mid in &mids {
                            if junction_closed {
                                break;
                            }
                            let moves = self.cancel_moves(s, mid.as_ref().map(|m| &m.0), p)?;
                            for mut mv in moves {
                                if let Some((_, counts, ids)) = mid {
                                    mv.counts.extend(counts.iter().cloned());
                                    mv.identities.extend(ids.iter().cloned());
                                }
                                let close = mv.close && mid.is_none();
                                let insert = mv.insert.take();
                                if let Some((step, t2)) = self.apply(&tally, s, p, mv) {
                                    let (it2, fl2) =
                                        self.successor(&items, &closed, i, j, s, p, insert, close, split.as_ref());
                                    next.push((step, it2, fl2, t2));
                                }
                            }
                        }
                        if literal && j != i + 1 {
                            continue;
                        }
                        for mut mv in self.merge_moves(s, p) {
                            let insert = mv.insert.take();
                            if let Some((step, t2)) = self.apply(&tally, s, p, mv) {
                                let (it2, fl2) =
                                    self.successor(&items, &closed, i, j, s, p, insert, false, split.as_ref());
                                next.push((step, it2, fl2, t2));
                            }
                        }
                    }
                }
            }
        }
        if !literal {
            for (k, it) in items.iter().enumerate() {
                if let Item::Sym { power, lo, hi } = *it {
                    let per = self.period(power);
                    for nn in per.nmin(lo, hi)..=per.dmax(lo) {
                        let atoms = self.th.canon(per.piece(lo, hi, nn));
                        let mut it2 = items.clone();
                        it2[k] = Item::Conc(atoms);
                        let it2 = self.canon_order(it2);
                        let step = Script { counts: vec![(power, Count::Fixed(nn))], ..Script::default() };
                        let n2 = it2.len();
                        next.push((step, it2, vec![false; n2], tally.clone()));
                    }
                }
            }
        }
        let mut out = SemilinearSet::empty(self.names.clone());
        for (step, it2, fl2, t2) in next {
            let rest = self.dfs(it2, fl2, t2)?;
            if self.stopped {
                break;
            }
            if rest.is_empty() {
                continue;
            }
            let head = self.step_set(&step)?;
            out = out.union(&head.minkowski_sum(&rest)?)?;
        }
        out.simplify();
        let out = Rc::new(out);
        self.memo.insert(key, out.clone());
        Ok(out)
    }

    /// Contribution of one move to the exponents of the active powers;
    /// powers the move does not touch stay at 0.
    fn step_set(&mut self, step: &Script) -> Result<Rc<SemilinearSet>, SolveError> {
        if let Some(s) = self.steps.get(step) {
            return Ok(s.clone());
        }
        let mut acc = SemilinearSet::point(vec![], vec![]);
        for (v, parts) in &step.identities {
            let g = self.th.group(*v);
            let mut segs = Vec::with_capacity(parts.len());
            for p in parts {
                segs.push(match p {
                    Part::Const(c) => Seg::Const(c.clone()),
                    Part::Pow(k) => {
                        let Some(Power::Atomic { period, .. }) = &self.powers[*k] else {
                            return Err(SolveError::Invalid("identity over a non-atomic power".into()));
                        };
                        Seg::Pow(period.clone(), self.names[self.row(*k)?].clone())
                    }
                });
            }
            let ks = knapsack_of(g, &segs).expect("identities carry a power");
            acc = acc.direct_sum(&g.solve_knapsack(&ks, self.ctx)?)?;
        }
        let rest: Vec<String> = self.names.iter().filter(|n| !acc.vars.contains(n)).cloned().collect();
        let ident = acc.extend_zero(&rest)?.reorder(&self.names)?;
        // pair variables, two per recorded pair
        let mut pair_set = SemilinearSet::point(vec![], vec![]);
        for (k, &(idx, oi)) in step.pairs.iter().enumerate() {
            let set = self.pairs[idx][oi].1.rename(vec![format!("#{k}a"), format!("#{k}b")])?;
            pair_set = pair_set.direct_sum(&set)?;
        }
        let mut offset = vec![0i64; self.names.len()];
        let mut matrix = vec![vec![0i64; pair_set.dim()]; self.names.len()];
        for (pw, c) in &step.counts {
            let row = self.row(*pw)?;
            match c {
                Count::Fixed(n) => offset[row] += *n as i64,
                Count::Long { pair, side, base } => {
                    offset[row] += *base as i64;
                    matrix[row][2 * pair + *side as usize] += 1;
                }
            }
        }
        let counted = pair_set.linear_image(self.names.clone(), &offset, &matrix)?;
        let out = Rc::new(ident.minkowski_sum(&counted)?);
        self.steps.insert(step.clone(), out.clone());
        Ok(out)
    }

    fn row(&self, power: usize) -> Result<usize, SolveError> {
        self.active
            .iter()
            .position(|&k| k == power)
            .ok_or_else(|| SolveError::Invalid(format!("move touches inactive power {power}")))
    }
}

/// A product of constants and powers that should equal 1.
pub(crate) enum Slot {
    Const(Vec<Atom>),
    Pow(usize),
}

pub(crate) struct Problem {
    pub slots: Vec<Slot>,
    pub powers: Vec<Option<Power>>,
    pub names: Vec<String>,
}

const MAX_GUESS_POWERS: usize = 16;

/// Solution set over `prob.names`: guesses which powers vanish (atomic
/// powers equal to 1, symbolic powers with exponent 0), searches scripts for
/// the remaining tuple, and takes the union.
pub(crate) fn solve_problem<T: Theory>(
    th: &T,
    prob: &Problem,
    vertices: usize,
    mul: &TraceMul<'_>,
    ctx: &SolveCtx,
) -> Result<SemilinearSet, SolveError> {
    let np = prob.powers.len();
    if np > MAX_GUESS_POWERS {
        return Err(SolveError::BudgetExhausted(format!("{np} powers exceed the guess limit {MAX_GUESS_POWERS}")));
    }
    let results = ctx.exec.map_range(1usize << np, |mask| -> Result<Option<SemilinearSet>, SolveError> {
        Diagnostics::bump(&ctx.diag.guesses_explored, 1);
        let mut removed = SemilinearSet::point(vec![], vec![]);
        for k in (0..np).filter(|k| mask >> k & 1 == 1) {
            let name = prob.names[k].clone();
            let part = match &prob.powers[k] {
                Some(Power::Atomic { vertex, period }) => {
                    let g = th.group(*vertex);
                    let ks = knapsack_of(g, &[Seg::Pow(period.clone(), name)]).expect("one power");
                    g.solve_knapsack(&ks, ctx)?
                }
                Some(Power::Sym(_)) => SemilinearSet::point(vec![name], vec![0]),
                None => unreachable!("every power has a description"),
            };
            if part.is_empty() {
                Diagnostics::bump(&ctx.diag.guesses_pruned, 1);
                return Ok(None);
            }
            removed = removed.direct_sum(&part)?;
        }
        let mut items: Vec<Item> = Vec::new();
        let mut acc: Vec<Atom> = Vec::new();
        let mut lead: Option<Vec<Atom>> = None;
        let mut active = Vec::new();
        for slot in &prob.slots {
            match slot {
                Slot::Const(c) => acc = mul(&acc, c),
                Slot::Pow(k) if mask >> k & 1 == 1 => {}
                Slot::Pow(k) => {
                    let c = std::mem::take(&mut acc);
                    if lead.is_none() {
                        lead = Some(c);
                    } else if !c.is_empty() {
                        items.push(Item::Conc(c));
                    }
                    active.push(*k);
                    items.push(match &prob.powers[*k] {
                        Some(Power::Atomic { vertex, .. }) => Item::Term(*vertex, vec![Part::Pow(*k)]),
                        _ => Item::Sym { power: *k, lo: 0, hi: 0 },
                    });
                }
            }
        }
        let tail = mul(&acc, &lead.unwrap_or_default());
        if !tail.is_empty() {
            items.push(Item::Conc(tail));
        }
        active.sort();
        let active_names: Vec<String> = active.iter().map(|&k| prob.names[k].clone()).collect();
        let mut found = SemilinearSet::empty(active_names.clone());
        if items.iter().all(|it| matches!(it, Item::Conc(_))) {
            if items.is_empty() {
                found = SemilinearSet::point(vec![], vec![]);
            }
        } else {
            let mut eng = Engine::new(th, &prob.powers, ctx, vertices);
            found = eng.run(items, &prob.names, &active)?;
        }
        if found.is_empty() {
            Diagnostics::bump(&ctx.diag.guesses_pruned, 1);
            return Ok(None);
        }
        let full = found.direct_sum(&removed)?;
        Ok(Some(full.reorder(&prob.names)?))
    });
    let mut out = SemilinearSet::empty(prob.names.clone());
    for r in results {
        if let Some(s) = r? {
            out = out.union(&s)?;
        }
    }
    out.simplify();
    Ok(out)
}
