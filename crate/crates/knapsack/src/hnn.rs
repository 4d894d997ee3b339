//! HNN-extensions `⟨G, t | t⁻¹at = φ(a), a ∈ A⟩` with finite associated
//! subgroups, and amalgamated products over a finite subgroup embedded into
//! such an extension of `G₁ * G₂`.
//!
//! A word is a sequence of atoms: vertex 0 carries a base-group element,
//! vertex 1 carries `Int(±1)` for `t^{±1}`. Elements are stored reduced (no
//! pin `t^{-e} g t^{e}` with `g ∈ A(e)`) and normalized by pushing each base
//! letter to the least representative of its coset `g·A(e)` in front of the
//! following `t^{e}`, so that structural equality is group equality.

use std::collections::HashMap;
use std::sync::Arc;

use crate::bounds::{self, Bound};
use crate::expr::{Letter, Word};
use crate::gp_solver::GraphProductGroup;
use crate::groups::{Atom, Elem, Group, IntegerGroup, Knapsack, SolveCtx, SolveError};
use crate::refine::{self, Period, Power, Problem, Shape, Slot, Theory};
use crate::semilinear::SemilinearSet;
use crate::trace::Independence;
use crate::unary_automata::{lengths_to_xy, lines_to_set, loop_language_nfa, unary_length_set, Label, Nfa, XyLine};

const BASE: u32 = 0;
const STABLE: u32 = 1;

pub fn t_letter(e: i64) -> Atom {
    Atom::new(STABLE, Elem::Int(e))
}

fn t_exp(a: &Atom) -> Option<i64> {
    match (a.vertex, &a.elem) {
        (STABLE, Elem::Int(e)) => Some(*e),
        _ => None,
    }
}

/// Number of stable letters.
pub fn t_count(w: &[Atom]) -> usize {
    w.iter().filter(|a| a.vertex == STABLE).count()
}

pub(crate) fn letters(e: &Elem) -> &[Atom] {
    match e {
        Elem::Hnn(w) => w,
        other => panic!("not an HNN element: {other:?}"),
    }
}

/// `(base prefix, stable exponent, target state)` of one lasso block.
type Block = (Elem, i64, usize);

#[derive(Clone, Debug)]
pub struct HnnGroup {
    base: Arc<dyn Group>,
    a: Vec<Elem>,
    b: Vec<Elem>,
    phi: HashMap<Elem, Elem>,
    phi_inv: HashMap<Elem, Elem>,
    stable: String,
    connectors: Vec<Elem>,
    stable_group: IntegerGroup,
}

impl HnnGroup {
    /// `a[i] ↦ b[i]` must list all of `A` and `B` (checked by the description layer).
    pub fn new(base: Arc<dyn Group>, a: Vec<Elem>, b: Vec<Elem>, stable: &str) -> Self {
        let phi = a.iter().cloned().zip(b.iter().cloned()).collect();
        let phi_inv = b.iter().cloned().zip(a.iter().cloned()).collect();
        let mut connectors: Vec<Elem> = a.iter().chain(&b).cloned().collect();
        connectors.sort();
        connectors.dedup();
        HnnGroup {
            base,
            a,
            b,
            phi,
            phi_inv,
            stable: stable.to_string(),
            connectors,
            stable_group: IntegerGroup::new(stable),
        }
    }

    pub fn base(&self) -> &Arc<dyn Group> {
        &self.base
    }

    /// `A ∪ B`, sorted.
    pub fn connectors(&self) -> &[Elem] {
        &self.connectors
    }

    fn sub(&self, e: i64) -> &[Elem] {
        if e > 0 {
            &self.a
        } else {
            &self.b
        }
    }

    fn in_sub(&self, g: &Elem, e: i64) -> bool {
        if e > 0 {
            self.phi.contains_key(g)
        } else {
            self.phi_inv.contains_key(g)
        }
    }

    /// `φ^e(g)` for `g ∈ A(e)`.
    fn phi_e(&self, g: &Elem, e: i64) -> Elem {
        if e > 0 {
            self.phi[g].clone()
        } else {
            self.phi_inv[g].clone()
        }
    }

    fn push(&self, out: &mut Vec<Atom>, a: Atom) {
        match t_exp(&a) {
            None => {
                if self.base.is_identity(&a.elem) {
                    return;
                }
                match out.last_mut() {
                    Some(last) if last.vertex == BASE => {
                        let p = self.base.mul(&last.elem, &a.elem);
                        if self.base.is_identity(&p) {
                            out.pop();
                        } else {
                            last.elem = p;
                        }
                    }
                    _ => out.push(a),
                }
            }
            Some(e) => {
                let n = out.len();
                if n >= 1 && t_exp(&out[n - 1]) == Some(-e) {
                    out.pop();
                    return;
                }
                if n >= 2
                    && out[n - 1].vertex == BASE
                    && t_exp(&out[n - 2]) == Some(-e)
                    && self.in_sub(&out[n - 1].elem, e)
                {
                    let g = out.pop().unwrap().elem;
                    out.pop();
                    self.push(out, Atom::new(BASE, self.phi_e(&g, e)));
                    return;
                }
                out.push(a);
            }
        }
    }

    /// Removes all pins and merges adjacent base letters.
    pub fn britton_reduce(&self, w: &[Atom]) -> Vec<Atom> {
        let mut out = Vec::with_capacity(w.len());
        for a in w {
            self.push(&mut out, a.clone());
        }
        out
    }

    /// Least element of the coset `g·A(e)`, the identity when `g ∈ A(e)`.
    fn coset_rep(&self, g: &Elem, e: i64) -> Elem {
        if self.in_sub(g, e) {
            return self.base.identity();
        }
        self.sub(e).iter().map(|s| self.base.mul(g, s)).min().expect("subgroups contain 1")
    }

    /// Normal form of a reduced word.
    pub fn normalize(&self, w: &[Atom]) -> Vec<Atom> {
        let mut out = Vec::with_capacity(w.len());
        let mut cur = self.base.identity();
        for a in w {
            match t_exp(a) {
                None => cur = self.base.mul(&cur, &a.elem),
                Some(e) => {
                    let r = self.coset_rep(&cur, e);
                    let s = self.base.mul(&self.base.inv(&r), &cur);
                    if !self.base.is_identity(&r) {
                        out.push(Atom::new(BASE, r));
                    }
                    out.push(a.clone());
                    cur = self.phi_e(&s, e);
                }
            }
        }
        if !self.base.is_identity(&cur) {
            out.push(Atom::new(BASE, cur));
        }
        out
    }

    pub fn reduce(&self, w: &[Atom]) -> Vec<Atom> {
        self.normalize(&self.britton_reduce(w))
    }

    pub fn inverse_word(&self, w: &[Atom]) -> Vec<Atom> {
        w.iter()
            .rev()
            .map(|a| match t_exp(a) {
                Some(e) => t_letter(-e),
                None => Atom::new(BASE, self.base.inv(&a.elem)),
            })
            .collect()
    }

    fn cat(parts: &[&[Atom]]) -> Vec<Atom> {
        parts.iter().flat_map(|p| p.iter().cloned()).collect()
    }

    /// Equality of reduced words by chaining connecting elements.
    pub fn hnn_equal(&self, u: &[Atom], v: &[Atom]) -> bool {
        let split = |w: &[Atom]| -> (Vec<Elem>, Vec<i64>) {
            let mut bases = vec![self.base.identity()];
            let mut ts = Vec::new();
            for a in w {
                match t_exp(a) {
                    Some(e) => {
                        ts.push(e);
                        bases.push(self.base.identity());
                    }
                    None => {
                        let last = bases.last_mut().unwrap();
                        *last = self.base.mul(last, &a.elem);
                    }
                }
            }
            (bases, ts)
        };
        let ((gu, tu), (gv, tv)) = (split(u), split(v));
        if tu != tv {
            return false;
        }
        // c·g_i·t^e = h_i·t^e·c'
        let mut c = self.base.identity();
        for (i, &e) in tu.iter().enumerate() {
            let d = self.base.mul(&self.base.mul(&self.base.inv(&gv[i]), &c), &gu[i]);
            if !self.in_sub(&d, e) {
                return false;
            }
            c = self.phi_e(&d, e);
        }
        let k = tu.len();
        let last = self.base.mul(&self.base.mul(&self.base.inv(&gv[k]), &c), &gu[k]);
        self.base.is_identity(&last)
    }

    /// The reduced product of reduced `u`, `v`, the number `m` of stable
    /// letters cancelled from each side and the connecting element `c` of
    /// the cancelled parts (`1` when `m = 0`).
    pub fn reduce_product(&self, u: &[Atom], v: &[Atom]) -> (Vec<Atom>, usize, Elem) {
        let w = self.britton_reduce(&Self::cat(&[u, v]));
        let m = (t_count(u) + t_count(v) - t_count(&w)) / 2;
        if m == 0 {
            return (w, 0, self.base.identity());
        }
        let upos: Vec<usize> = u.iter().enumerate().filter(|(_, a)| a.vertex == STABLE).map(|(i, _)| i).collect();
        let vpos: Vec<usize> = v.iter().enumerate().filter(|(_, a)| a.vertex == STABLE).map(|(i, _)| i).collect();
        let tail = &u[upos[upos.len() - m]..];
        let head = &v[..=vpos[m - 1]];
        let mid = self.britton_reduce(&Self::cat(&[tail, head]));
        let c = match mid.as_slice() {
            [] => self.base.identity(),
            [a] if a.vertex == BASE => a.elem.clone(),
            _ => unreachable!("cancelled parts reduce to a base element"),
        };
        (w, m, c)
    }

    /// `true` when `w` and `w·w` are reduced and `w` contains `t`.
    pub fn is_well_behaved(&self, w: &[Atom]) -> bool {
        t_count(w) > 0
            && self.britton_reduce(w).len() == w.len()
            && t_count(&self.britton_reduce(&Self::cat(&[w, w]))) == 2 * t_count(w)
    }

    fn word_norm(&self, w: &[Atom]) -> u64 {
        w.iter().map(|a| if a.vertex == STABLE { 1 } else { self.base.norm(&a.elem) }).sum()
    }

    /// `u^m = s·v^m·p` for all `m ≥ 0`, with `v` a base element or a
    /// well-behaved word starting with `t^{±1}`.
    pub fn hnn_power_presentation(&self, u: &[Atom]) -> (Vec<Atom>, Vec<Atom>, Vec<Atom>) {
        let u0 = self.britton_reduce(u);
        let (mut s, mut v, mut p) = (Vec::new(), u0.clone(), Vec::new());
        loop {
            let k = t_count(&v);
            if k == 0 || self.is_well_behaved(&v) && t_exp(&v[0]).is_some() {
                break;
            }
            let tpos: Vec<usize> = v.iter().enumerate().filter(|(_, a)| a.vertex == STABLE).map(|(i, _)| i).collect();
            let mut best = (0usize, self.base.identity());
            for m in 1..=k / 2 {
                let x = &v[..=tpos[m - 1]];
                let z = &v[tpos[k - m]..];
                match self.britton_reduce(&Self::cat(&[z, x])).as_slice() {
                    [] => best = (m, self.base.identity()),
                    [g] if g.vertex == BASE => best = (m, g.elem.clone()),
                    _ => {}
                }
            }
            let (m, c) = best;
            let (xe, zs) = if m == 0 { (0, v.len()) } else { (tpos[m - 1] + 1, tpos[k - m]) };
            let (x, y, z) = (v[..xe].to_vec(), v[xe..zs].to_vec(), v[zs..].to_vec());
            let catom = Atom::new(BASE, c.clone());
            let (s2, v2, p2) = if t_count(&y) == 0 {
                // u^n = x·(yc)^n·c⁻¹z
                let yc = self.britton_reduce(&Self::cat(&[&y, std::slice::from_ref(&catom)]));
                let cinv = Atom::new(BASE, self.base.inv(&c));
                (x, yc, self.britton_reduce(&Self::cat(&[&[cinv], &z])))
            } else {
                // y = g·y'·g' and u^n = xg·(y'·g'cg)^n·(cg)⁻¹z
                let g = if y[0].vertex == BASE { y[0].elem.clone() } else { self.base.identity() };
                let gp = if y[y.len() - 1].vertex == BASE { y[y.len() - 1].elem.clone() } else { self.base.identity() };
                let lo = usize::from(y[0].vertex == BASE);
                let hi = y.len() - usize::from(y[y.len() - 1].vertex == BASE);
                let inner = &y[lo..hi];
                let cg = self.base.mul(&c, &g);
                let h = self.base.mul(&gp, &cg);
                let s2 = self.britton_reduce(&Self::cat(&[&x, &[Atom::new(BASE, g)]]));
                let v2 = self.britton_reduce(&Self::cat(&[inner, &[Atom::new(BASE, h)]]));
                let p2 = self.britton_reduce(&Self::cat(&[&[Atom::new(BASE, self.base.inv(&cg))], &z]));
                (s2, v2, p2)
            };
            if m == 0 && t_count(&y) > 0 && y == v2 {
                // cannot peel further; the word is used as is
                break;
            }
            s = self.britton_reduce(&Self::cat(&[&s, &s2]));
            p = self.britton_reduce(&Self::cat(&[&p2, &p]));
            v = v2;
        }
        let total = self.word_norm(&s) + self.word_norm(&p) + self.word_norm(&v);
        bounds::check(Bound::HnnPowerPresentation, total <= 3 * self.word_norm(&u0));
        (s, v, p)
    }

    /// `{(x, y) : a·u'·u^x·u'' = v'·v^y·v''·b}` for well-behaved `u`, `v`,
    /// suffixes `u'`, `v'` and prefixes `u''`, `v''` of the respective
    /// periods, and `a, b ∈ A ∪ B`. The result is over `x`, `y`.
    #[allow(clippy::too_many_arguments)]
    pub fn two_dim_hnn_solve(
        &self,
        a: &Elem,
        u1: &[Atom],
        u: &[Atom],
        u2: &[Atom],
        v1: &[Atom],
        v: &[Atom],
        v2: &[Atom],
        b: &Elem,
        ctx: &SolveCtx,
    ) -> Result<SemilinearSet, SolveError> {
        for w in [u, v] {
            if !self.is_well_behaved(w) {
                return Err(SolveError::Invalid("period is not well-behaved".into()));
            }
        }
        let s1 = Shape { pre: u1.to_vec(), u: u.to_vec(), suf: u2.to_vec() };
        let s2 = Shape { pre: v1.to_vec(), u: v.to_vec(), suf: v2.to_vec() };
        let lines = self.lasso_lines(a, &s1, &s2, b, ctx.budget.automata_cap)?;
        Ok(lines_to_set(&lines, "x", "y"))
    }

    /// Lines `(x, y)` with `c0·W1(x) = W2(y)·c1` for reduced lasso words
    /// `W_i(n) = pre_i·u_i^n·suf_i` and `c0, c1 ∈ A ∪ B`.
    fn lasso_lines(&self, c0: &Elem, w1: &Shape, w2: &Shape, c1: &Elem, cap: usize) -> Result<Vec<XyLine>, SolveError> {
        let mut table: Vec<Atom> = Vec::new();
        let mut id = |a: &Atom| -> u32 {
            match table.iter().position(|b| b == a) {
                Some(i) => i as u32,
                None => {
                    table.push(a.clone());
                    (table.len() - 1) as u32
                }
            }
        };
        let mut ids = |w: &[Atom]| -> Vec<u32> { w.iter().map(&mut id).collect() };
        let n1 = loop_language_nfa(&ids(&w1.pre), &ids(&w1.u), &ids(&w1.suf));
        let n2 = loop_language_nfa(&ids(&w2.pre), &ids(&w2.u), &ids(&w2.suf));
        let sym = |l: Label| match l {
            Label::Sym(i) => &table[i as usize],
            _ => unreachable!("side automata only read symbols"),
        };
        let blocks = |n: &Nfa| -> (Vec<Vec<Block>>, Vec<Vec<Elem>>) {
            let mut out = vec![Vec::new(); n.states];
            let mut ends = vec![Vec::new(); n.states];
            for q in 0..n.states {
                let mut stack = vec![(q, self.base.identity())];
                while let Some((r, g)) = stack.pop() {
                    if n.finals.contains(&r) && !ends[q].contains(&g) {
                        ends[q].push(g.clone());
                    }
                    for &(from, l, to) in &n.trans {
                        if from != r {
                            continue;
                        }
                        let a = sym(l);
                        match t_exp(a) {
                            Some(e) => out[q].push((g.clone(), e, to)),
                            None => stack.push((to, self.base.mul(&g, &a.elem))),
                        }
                    }
                }
            }
            (out, ends)
        };
        let (b1, e1) = blocks(&n1);
        let (b2, e2) = blocks(&n2);
        let mut index: HashMap<(Elem, usize, usize), usize> = HashMap::new();
        let mut queue: Vec<(Elem, usize, usize)> = Vec::new();
        let mut trans: Vec<(usize, Label, usize)> = Vec::new();
        const FINAL: usize = 0;
        let mut state = |key: (Elem, usize, usize), queue: &mut Vec<(Elem, usize, usize)>| -> usize {
            let next = index.len() + 1;
            *index.entry(key.clone()).or_insert_with(|| {
                queue.push(key);
                next
            })
        };
        let start = state((c0.clone(), n1.initial[0], n2.initial[0]), &mut queue);
        let mut head = 0;
        while head < queue.len() {
            let (c, q1, q2) = queue[head].clone();
            head += 1;
            let from = state((c.clone(), q1, q2), &mut queue);
            for (g1, x1, t1) in &b1[q1] {
                for (g2, x2, t2) in &b2[q2] {
                    if x1 != x2 {
                        continue;
                    }
                    let d = self.base.mul(&self.base.mul(&self.base.inv(g2), &c), g1);
                    if self.in_sub(&d, *x1) {
                        let to = state((self.phi_e(&d, *x1), *t1, *t2), &mut queue);
                        trans.push((from, Label::Tick, to));
                    }
                }
            }
            let closes = e1[q1]
                .iter()
                .any(|g1| e2[q2].iter().any(|g2| self.base.mul(&self.base.mul(&self.base.inv(g2), &c), g1) == *c1));
            if closes {
                trans.push((from, Label::Eps, FINAL));
            }
        }
        let nfa = Nfa { states: index.len() + 1, trans, initial: vec![start], finals: vec![FINAL] };
        let lens = unary_length_set(&nfa, cap).map_err(|e| SolveError::BudgetExhausted(e.to_string()))?;
        Ok(lengths_to_xy(
            &lens,
            (t_count(&w1.pre) + t_count(&w1.suf)) as u64,
            t_count(&w1.u) as u64,
            (t_count(&w2.pre) + t_count(&w2.suf)) as u64,
            t_count(&w2.u) as u64,
        ))
    }

    pub(crate) fn elem(&self, w: &[Atom]) -> Elem {
        Elem::Hnn(self.reduce(w))
    }
}

impl Group for HnnGroup {
    fn identity(&self) -> Elem {
        Elem::Hnn(Vec::new())
    }

    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        self.elem(&Self::cat(&[letters(a), letters(b)]))
    }

    fn inv(&self, a: &Elem) -> Elem {
        self.elem(&self.inverse_word(letters(a)))
    }

    fn generators(&self) -> Vec<String> {
        let mut g = self.base.generators();
        g.push(self.stable.clone());
        g
    }

    fn gen_elem(&self, name: &str) -> Option<Elem> {
        if name == self.stable {
            return Some(Elem::Hnn(vec![t_letter(1)]));
        }
        let g = self.base.gen_elem(name)?;
        Some(self.elem(&[Atom::new(BASE, g)]))
    }

    fn word_of(&self, e: &Elem) -> Word {
        let mut out = Vec::new();
        for a in letters(e) {
            match t_exp(a) {
                Some(x) => out.push(Letter { name: self.stable.clone(), inv: x < 0 }),
                None => out.extend(self.base.word_of(&a.elem)),
            }
        }
        out
    }

    fn solve_knapsack(&self, k: &Knapsack, ctx: &SolveCtx) -> Result<SemilinearSet, SolveError> {
        solve(self, k, ctx)
    }
}

struct HnnTheory<'a> {
    h: &'a HnnGroup,
}

impl Theory for HnnTheory<'_> {
    fn literal(&self) -> bool {
        true
    }

    fn dependent(&self, _a: u32, _b: u32) -> bool {
        true
    }

    fn group(&self, v: u32) -> &dyn Group {
        if v == BASE {
            self.h.base.as_ref()
        } else {
            &self.h.stable_group
        }
    }

    fn can_merge(&self, v: u32) -> bool {
        v == BASE
    }

    fn canon(&self, atoms: Vec<Atom>) -> Vec<Atom> {
        atoms
    }

    fn measure(&self, atoms: &[Atom]) -> usize {
        t_count(atoms)
    }

    fn cancellable(&self, atoms: &[Atom]) -> bool {
        t_count(atoms) > 0
    }

    fn connectors(&self) -> &[Elem] {
        &self.h.connectors
    }

    fn cancel(&self, s: &[Atom], mid: Option<&Elem>, p: &[Atom]) -> Option<Option<Elem>> {
        let mut w = s.to_vec();
        w.extend(mid.map(|m| Atom::new(BASE, m.clone())));
        w.extend_from_slice(p);
        match self.h.britton_reduce(&w).as_slice() {
            [] => Some(None),
            [g] if g.vertex == BASE && self.h.connectors.contains(&g.elem) => Some(Some(g.elem.clone())),
            _ => None,
        }
    }

    fn solve_pair(
        &self,
        s: &Shape,
        mid: Option<&Elem>,
        p: &Shape,
        ctx: &SolveCtx,
    ) -> Result<Vec<(Option<Elem>, SemilinearSet)>, SolveError> {
        // S·a·P = b  ⇔  b⁻¹·S = P⁻¹·a⁻¹
        let h = self.h;
        let pinv = Shape { pre: h.inverse_word(&p.suf), u: h.inverse_word(&p.u), suf: h.inverse_word(&p.pre) };
        let a_inv = mid.map_or_else(|| h.base.identity(), |m| h.base.inv(m));
        let mut out = Vec::new();
        for b in &h.connectors {
            let lines = h.lasso_lines(&h.base.inv(b), s, &pinv, &a_inv, ctx.budget.automata_cap)?;
            if lines.is_empty() {
                continue;
            }
            let b = (!h.base.is_identity(b)).then(|| b.clone());
            out.push((b, lines_to_set(&lines, "x", "y")));
        }
        Ok(out)
    }

    fn piece_bound(&self, m: usize) -> usize {
        m.max((7 * m).saturating_sub(12))
    }

    fn creation_bound(&self, m: usize) -> usize {
        (4 * m).saturating_sub(8)
    }

    fn creation_slot(&self, _v: u32) -> usize {
        0
    }

    fn creation_slots(&self) -> usize {
        1
    }
}

fn solve(h: &HnnGroup, k: &Knapsack, ctx: &SolveCtx) -> Result<SemilinearSet, SolveError> {
    let th = HnnTheory { h };
    let mut prob = Problem { slots: Vec::new(), powers: Vec::new(), names: Vec::new() };
    let mut free = Vec::new();
    for f in &k.factors {
        let u = letters(&f.period);
        if u.is_empty() {
            free.push(f.var.clone());
        } else {
            let (s, v, p) = h.hnn_power_presentation(u);
            if v.is_empty() {
                free.push(f.var.clone());
                prob.slots.push(Slot::Const(h.britton_reduce(&HnnGroup::cat(&[&s, &p]))));
                prob.slots.push(Slot::Const(letters(&f.tail).to_vec()));
                continue;
            }
            let id = prob.powers.len();
            prob.names.push(f.var.clone());
            prob.powers.push(Some(if t_count(&v) == 0 {
                Power::Atomic { vertex: BASE, period: v[0].elem.clone() }
            } else {
                Power::Sym(Period::new(v, |_, _| true))
            }));
            prob.slots.extend([Slot::Const(s), Slot::Pow(id), Slot::Const(p)]);
        }
        prob.slots.push(Slot::Const(letters(&f.tail).to_vec()));
    }
    let mul = |a: &[Atom], b: &[Atom]| h.reduce(&HnnGroup::cat(&[a, b]));
    let sol = refine::solve_problem(&th, &prob, 2, &mul, ctx)?;
    let sol = sol.direct_sum(&SemilinearSet::full(free))?;
    let mut sol = sol.reorder(&k.vars())?;
    sol.simplify();
    Ok(sol)
}

/// Brute-force counterpart of [`HnnGroup::two_dim_hnn_solve`] on `[0, n]²`.
#[allow(clippy::too_many_arguments)]
pub fn two_dim_hnn_brute(
    h: &HnnGroup,
    a: &Elem,
    u1: &[Atom],
    u: &[Atom],
    u2: &[Atom],
    v1: &[Atom],
    v: &[Atom],
    v2: &[Atom],
    b: &Elem,
    n: usize,
) -> Vec<(i64, i64)> {
    let side = |pre: &[Atom], per: &[Atom], suf: &[Atom], k: usize, c: Option<&Elem>, left: bool| {
        let mut w: Vec<Atom> = Vec::new();
        if left {
            w.extend(c.map(|c| Atom::new(BASE, c.clone())));
        }
        w.extend_from_slice(pre);
        for _ in 0..k {
            w.extend_from_slice(per);
        }
        w.extend_from_slice(suf);
        if !left {
            w.extend(c.map(|c| Atom::new(BASE, c.clone())));
        }
        h.reduce(&w)
    };
    let lefts: Vec<Vec<Atom>> = (0..=n).map(|x| side(u1, u, u2, x, Some(a), true)).collect();
    let rights: Vec<Vec<Atom>> = (0..=n).map(|y| side(v1, v, v2, y, Some(b), false)).collect();
    let mut out = Vec::new();
    for (x, l) in lefts.iter().enumerate() {
        for (y, r) in rights.iter().enumerate() {
            if l == r {
                out.push((x as i64, y as i64));
            }
        }
    }
    out
}

/// `G₁ *_A G₂` realized as the subgroup `⟨t⁻¹G₁t, G₂⟩` of the HNN-extension
/// of `G₁ * G₂` that conjugates the copy of `A` in `G₁` onto its image in `G₂`.
#[derive(Clone, Debug)]
pub struct AmalgamGroup {
    inner: HnnGroup,
    free: Arc<GraphProductGroup>,
    left: Vec<String>,
}

impl AmalgamGroup {
    pub fn new(g1: Arc<dyn Group>, g2: Arc<dyn Group>, e1: &[Elem], e2: &[Elem]) -> Self {
        let left = g1.generators();
        let free = Arc::new(GraphProductGroup::new(vec![g1, g2], Independence::free(2)));
        let a = e1.iter().map(|e| free.atom(0, e.clone())).collect();
        let b = e2.iter().map(|e| free.atom(1, e.clone())).collect();
        let inner = HnnGroup::new(free.clone(), a, b, "t#");
        AmalgamGroup { inner, free, left }
    }

    pub fn hnn(&self) -> &HnnGroup {
        &self.inner
    }

    /// The image of an element of `G₁` (`left`) or `G₂`.
    pub fn embed(&self, left: bool, g: &Elem) -> Elem {
        let base = Atom::new(BASE, self.free.atom(if left { 0 } else { 1 }, g.clone()));
        if left {
            self.inner.elem(&[t_letter(-1), base, t_letter(1)])
        } else {
            self.inner.elem(&[base])
        }
    }

    /// Rewrites a word over the generators of both factors as a word over
    /// the generators of the HNN-extension.
    pub fn amalgam_embed(&self, w: &[Letter]) -> Word {
        let t = |inv: bool| Letter { name: "t#".into(), inv };
        let mut out = Vec::new();
        for l in w {
            if self.left.contains(&l.name) {
                out.extend([t(true), l.clone(), t(false)]);
            } else {
                out.push(l.clone());
            }
        }
        out
    }
}

impl Group for AmalgamGroup {
    fn identity(&self) -> Elem {
        self.inner.identity()
    }

    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        self.inner.mul(a, b)
    }

    fn inv(&self, a: &Elem) -> Elem {
        self.inner.inv(a)
    }

    fn generators(&self) -> Vec<String> {
        self.free.generators()
    }

    fn gen_elem(&self, name: &str) -> Option<Elem> {
        let left = self.left.iter().any(|n| n == name);
        let g = self.free.vertex_groups()[if left { 0 } else { 1 }].gen_elem(name)?;
        Some(self.embed(left, &g))
    }

    /// Drops the stable letters: `t ↦ 1` maps the embedded copy back onto the
    /// amalgam identically.
    fn word_of(&self, e: &Elem) -> Word {
        letters(e).iter().filter(|a| a.vertex == BASE).flat_map(|a| self.free.word_of(&a.elem)).collect()
    }

    fn solve_knapsack(&self, k: &Knapsack, ctx: &SolveCtx) -> Result<SemilinearSet, SolveError> {
        self.inner.solve_knapsack(k, ctx)
    }
}
