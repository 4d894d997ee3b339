//! Graph products of groups and their knapsack solver.
//!
//! Elements are irreducible traces over atoms `(vertex, element)` kept in
//! canonical linearization. The solver splits every period into a power
//! presentation, guesses which of the resulting powers vanish, and searches
//! reduction scripts of the remaining tuple; vertex-group identities go to the
//! vertex solvers, long cancellations to [`two_dim_trace_solve`].

use std::sync::Arc;

use crate::expr::Word;
use crate::groups::{Atom, Elem, Group, Knapsack, SolveCtx, SolveError};
use crate::refine::{self, Period, Power, Problem, Shape, Slot, Theory};
use crate::semilinear::{LinearSet, SemilinearSet};
use crate::trace::{Independence, TraceCtx};
use crate::unary_automata::{lines_to_set, word_two_dim};

#[derive(Clone, Debug)]
pub struct GraphProductGroup {
    groups: Vec<Arc<dyn Group>>,
    indep: Independence,
    owner: Vec<(String, u32)>,
}

impl GraphProductGroup {
    pub fn new(groups: Vec<Arc<dyn Group>>, indep: Independence) -> Self {
        assert_eq!(groups.len(), indep.size(), "one group per vertex");
        assert!(groups.len() <= 64, "at most 64 vertices");
        let owner = groups
            .iter()
            .enumerate()
            .flat_map(|(v, g)| g.generators().into_iter().map(move |n| (n, v as u32)))
            .collect();
        GraphProductGroup { groups, indep, owner }
    }

    pub fn vertex_groups(&self) -> &[Arc<dyn Group>] {
        &self.groups
    }

    pub fn independence(&self) -> &Independence {
        &self.indep
    }

    pub fn trace_ctx(&self) -> TraceCtx<'_> {
        TraceCtx::new(&self.indep, &self.groups)
    }

    /// The element of a single atom.
    pub fn atom(&self, vertex: u32, e: Elem) -> Elem {
        Elem::Trace(self.trace_ctx().nf(&[Atom::new(vertex, e)]))
    }
}

pub(crate) fn atoms(e: &Elem) -> &[Atom] {
    match e {
        Elem::Trace(a) => a,
        other => panic!("not a trace element: {other:?}"),
    }
}

impl Group for GraphProductGroup {
    fn identity(&self) -> Elem {
        Elem::Trace(Vec::new())
    }

    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        Elem::Trace(self.trace_ctx().mul(atoms(a), atoms(b)))
    }

    fn inv(&self, a: &Elem) -> Elem {
        Elem::Trace(self.trace_ctx().inverse(atoms(a)))
    }

    fn generators(&self) -> Vec<String> {
        self.owner.iter().map(|(n, _)| n.clone()).collect()
    }

    fn gen_elem(&self, name: &str) -> Option<Elem> {
        let &(_, v) = self.owner.iter().find(|(n, _)| n == name)?;
        Some(self.atom(v, self.groups[v as usize].gen_elem(name)?))
    }

    fn word_of(&self, e: &Elem) -> Word {
        atoms(e).iter().flat_map(|a| self.groups[a.vertex as usize].word_of(&a.elem)).collect()
    }

    fn norm(&self, e: &Elem) -> u64 {
        self.trace_ctx().norm(atoms(e))
    }

    fn solve_knapsack(&self, k: &Knapsack, ctx: &SolveCtx) -> Result<SemilinearSet, SolveError> {
        solve(self, k, ctx)
    }
}

struct GpTheory<'a> {
    tc: TraceCtx<'a>,
    literal: bool,
    alpha: usize,
}

impl Theory for GpTheory<'_> {
    fn literal(&self) -> bool {
        self.literal
    }

    fn dependent(&self, a: u32, b: u32) -> bool {
        !self.tc.indep.independent(a, b)
    }

    fn group(&self, v: u32) -> &dyn Group {
        self.tc.groups[v as usize].as_ref()
    }

    fn can_merge(&self, _v: u32) -> bool {
        true
    }

    fn canon(&self, atoms: Vec<Atom>) -> Vec<Atom> {
        if self.literal {
            atoms
        } else {
            self.tc.canon(&atoms)
        }
    }

    fn measure(&self, atoms: &[Atom]) -> usize {
        atoms.len()
    }

    fn cancellable(&self, atoms: &[Atom]) -> bool {
        !atoms.is_empty()
    }

    fn connectors(&self) -> &[Elem] {
        &[]
    }

    fn cancel(&self, s: &[Atom], mid: Option<&Elem>, p: &[Atom]) -> Option<Option<Elem>> {
        (mid.is_none() && s.len() == p.len() && self.tc.canon(s) == self.tc.inverse(p)).then_some(None)
    }

    fn solve_pair(
        &self,
        s: &Shape,
        _mid: Option<&Elem>,
        p: &Shape,
        ctx: &SolveCtx,
    ) -> Result<Vec<(Option<Elem>, SemilinearSet)>, SolveError> {
        let inv = |w: &[Atom]| self.tc.inverse(w);
        let set = two_dim_trace_solve(&self.tc, &s.pre, &s.u, &s.suf, &inv(&p.suf), &inv(&p.u), &inv(&p.pre), ctx)?;
        Ok(vec![(None, set)])
    }

    fn piece_bound(&self, m: usize) -> usize {
        if self.literal {
            m.max((7 * m).saturating_sub(12))
        } else {
            (3 * self.alpha + 4) * m * m
        }
    }

    fn creation_bound(&self, m: usize) -> usize {
        m.saturating_sub(2)
    }

    fn creation_slot(&self, v: u32) -> usize {
        v as usize
    }

    fn creation_slots(&self) -> usize {
        self.tc.indep.size()
    }
}

/// `{(x, y) : p·u^x·s = q·v^y·t}` for traces, through the projections onto
/// pairs of dependent vertices. The result is over the variables `x`, `y`.
#[allow(clippy::too_many_arguments)]
pub fn two_dim_trace_solve(
    tc: &TraceCtx<'_>,
    p: &[Atom],
    u: &[Atom],
    s: &[Atom],
    q: &[Atom],
    v: &[Atom],
    t: &[Atom],
    ctx: &SolveCtx,
) -> Result<SemilinearSet, SolveError> {
    let xy = vec!["x".to_string(), "y".to_string()];
    let mut result = SemilinearSet::full(xy.clone());
    let words = [p, u, s, q, v, t];
    let mut seen: Vec<u32> = words.iter().flat_map(|w| w.iter().map(|a| a.vertex)).collect();
    seen.sort();
    seen.dedup();
    let mut symbols: Vec<Atom> = Vec::new();
    let mut sym = |a: &Atom| -> u32 {
        match symbols.iter().position(|b| b == a) {
            Some(i) => i as u32,
            None => {
                symbols.push(a.clone());
                (symbols.len() - 1) as u32
            }
        }
    };
    for (ii, &i) in seen.iter().enumerate() {
        for &j in &seen[ii..] {
            if i != j && tc.indep.independent(i, j) {
                continue;
            }
            let pr: Vec<Vec<u32>> =
                words.iter().map(|w| tc.project_pair(w, i, j).iter().map(&mut sym).collect()).collect();
            let set = two_dim_words(&pr[0], &pr[1], &pr[2], &pr[3], &pr[4], &pr[5], ctx)?;
            result = result.intersect_with_cap(&set, ctx.budget.dioph_cap)?;
            if result.is_empty() {
                return Ok(result);
            }
        }
    }
    Ok(result)
}

/// Word version of [`two_dim_trace_solve`], allowing empty periods.
fn two_dim_words(
    p: &[u32],
    u: &[u32],
    s: &[u32],
    q: &[u32],
    v: &[u32],
    t: &[u32],
    ctx: &SolveCtx,
) -> Result<SemilinearSet, SolveError> {
    let xy = vec!["x".to_string(), "y".to_string()];
    let cat = |a: &[u32], w: &[u32], n: usize, b: &[u32]| -> Vec<u32> {
        let mut out = a.to_vec();
        for _ in 0..n {
            out.extend_from_slice(w);
        }
        out.extend_from_slice(b);
        out
    };
    // the side with an empty period is a fixed word; solve for the other exponent
    let fixed = |a: &[u32], w: &[u32], b: &[u32], target: Vec<u32>| -> Option<i64> {
        let rest = target.len().checked_sub(a.len() + b.len())?;
        if rest % w.len() != 0 {
            return None;
        }
        let n = rest / w.len();
        (cat(a, w, n, b) == target).then_some(n as i64)
    };
    let line = |base: Vec<i64>, period: Vec<i64>| SemilinearSet {
        vars: xy.clone(),
        components: vec![LinearSet::new(base, vec![period])],
    };
    Ok(match (u.is_empty(), v.is_empty()) {
        (false, false) => {
            let lines = word_two_dim(p, u, s, q, v, t, ctx.budget.automata_cap)
                .map_err(|e| SolveError::BudgetExhausted(e.to_string()))?;
            lines_to_set(&lines, "x", "y")
        }
        (true, false) => match fixed(q, v, t, cat(p, &[], 0, s)) {
            Some(y) => line(vec![0, y], vec![1, 0]),
            None => SemilinearSet::empty(xy),
        },
        (false, true) => match fixed(p, u, s, cat(q, &[], 0, t)) {
            Some(x) => line(vec![x, 0], vec![0, 1]),
            None => SemilinearSet::empty(xy),
        },
        (true, true) => {
            if cat(p, &[], 0, s) == cat(q, &[], 0, t) {
                SemilinearSet::full(xy)
            } else {
                SemilinearSet::empty(xy)
            }
        }
    })
}

fn solve(g: &GraphProductGroup, k: &Knapsack, ctx: &SolveCtx) -> Result<SemilinearSet, SolveError> {
    let tc = g.trace_ctx();
    let dependent = |a: u32, b: u32| !g.indep.independent(a, b);
    let mut prob = Problem { slots: Vec::new(), powers: Vec::new(), names: Vec::new() };
    let mut free: Vec<String> = Vec::new();
    // per original variable: the power indices it was split into
    let mut split: Vec<(String, Vec<usize>)> = Vec::new();
    for f in &k.factors {
        let u = atoms(&f.period);
        if u.is_empty() {
            free.push(f.var.clone());
        } else {
            let pp = tc.power_presentation(u);
            prob.slots.push(Slot::Const(pp.s));
            let mut ids = Vec::new();
            for (j, v) in pp.v.into_iter().enumerate() {
                let id = prob.powers.len();
                prob.names.push(if j == 0 { f.var.clone() } else { format!("{}#{j}", f.var) });
                prob.powers.push(Some(if v.len() == 1 {
                    Power::Atomic { vertex: v[0].vertex, period: v[0].elem.clone() }
                } else {
                    Power::Sym(Period::new(v, dependent))
                }));
                prob.slots.push(Slot::Pow(id));
                ids.push(id);
            }
            prob.slots.push(Slot::Const(pp.t));
            split.push((f.var.clone(), ids));
        }
        prob.slots.push(Slot::Const(atoms(&f.tail).to_vec()));
    }
    let mut sol = solve_by_components(g, &prob, ctx)?;
    // all parts of one split variable share its exponent
    if split.iter().any(|(_, ids)| ids.len() > 1) {
        let periods = split
            .iter()
            .map(|(_, ids)| {
                let mut p = vec![0; prob.names.len()];
                for &i in ids {
                    p[i] = 1;
                }
                p
            })
            .collect();
        let kset = SemilinearSet {
            vars: prob.names.clone(),
            components: vec![LinearSet::new(vec![0; prob.names.len()], periods)],
        };
        sol = sol.intersect_with_cap(&kset, ctx.budget.dioph_cap)?;
        let firsts: Vec<String> = split.iter().map(|(v, _)| v.clone()).collect();
        sol = sol.restrict(&firsts)?;
    }
    let sol = sol.direct_sum(&SemilinearSet::full(free))?;
    let mut sol = sol.reorder(&k.vars())?;
    sol.simplify();
    Ok(sol)
}

/// The graph product restricted to the used vertices is the direct product
/// of the graph products over the connected components of the dependency
/// graph. Each power lives in one component, so every component is solved on
/// its own (with the projected constants) and the results are summed.
fn solve_by_components(g: &GraphProductGroup, prob: &Problem, ctx: &SolveCtx) -> Result<SemilinearSet, SolveError> {
    let tc = g.trace_ctx();
    let n = g.groups.len();
    let power_mask = |p: &Option<Power>| -> u64 {
        match p {
            Some(Power::Atomic { vertex, .. }) => 1 << vertex,
            Some(Power::Sym(per)) => per.u.iter().fold(0, |m, a| m | 1 << a.vertex),
            None => 0,
        }
    };
    let mut used = prob.powers.iter().fold(0u64, |m, p| m | power_mask(p));
    for slot in &prob.slots {
        if let Slot::Const(c) = slot {
            used |= c.iter().fold(0, |m, a| m | 1 << a.vertex);
        }
    }
    // connected components of the dependency graph on the used vertices
    let mut comps: Vec<u64> = Vec::new();
    let mut left = used;
    while left != 0 {
        let mut comp = 1u64 << left.trailing_zeros();
        loop {
            let grown = (0..n as u32)
                .filter(|&v| left >> v & 1 == 1)
                .filter(|&v| (0..n as u32).any(|w| comp >> w & 1 == 1 && !g.indep.independent(v, w)))
                .fold(comp, |m, v| m | 1 << v);
            if grown == comp {
                break;
            }
            comp = grown;
        }
        comps.push(comp);
        left &= !comp;
    }
    let mut out = SemilinearSet::point(vec![], vec![]);
    for comp in comps {
        let ids: Vec<usize> = (0..prob.powers.len()).filter(|&k| power_mask(&prob.powers[k]) & !comp == 0).collect();
        let sub = Problem {
            slots: prob
                .slots
                .iter()
                .filter_map(|slot| match slot {
                    Slot::Const(c) => {
                        let kept: Vec<Atom> = c.iter().filter(|a| comp >> a.vertex & 1 == 1).cloned().collect();
                        Some(Slot::Const(tc.nf(&kept)))
                    }
                    Slot::Pow(k) => ids.iter().position(|i| i == k).map(Slot::Pow),
                })
                .collect(),
            powers: ids.iter().map(|&k| prob.powers[k].clone()).collect(),
            names: ids.iter().map(|&k| prob.names[k].clone()).collect(),
        };
        let verts: Vec<u32> = (0..n as u32).filter(|&v| comp >> v & 1 == 1).collect();
        let literal = verts.iter().all(|&a| verts.iter().all(|&b| a == b || !g.indep.independent(a, b)));
        let th = GpTheory { tc: g.trace_ctx(), literal, alpha: g.indep.alpha() };
        let mul = |a: &[Atom], b: &[Atom]| tc.mul(a, b);
        let part = refine::solve_problem(&th, &sub, n, &mul, ctx)?;
        if part.is_empty() {
            return Ok(SemilinearSet::empty(prob.names.clone()));
        }
        out = out.direct_sum(&part)?;
    }
    Ok(out.reorder(&prob.names)?)
}
