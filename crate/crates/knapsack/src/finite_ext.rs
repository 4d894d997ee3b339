//! Groups `H` containing a solvable group `G` with finite index, given by a
//! rewriting table `c·a = w_{c,a}·d_{c,a}` over coset representatives `C`.
//!
//! An element is stored as `g·c` (`Elem::Ext(g, c)`) with `g ∈ G` and `c`
//! the index of a representative; index 0 is the identity coset.

use std::sync::Arc;

use crate::expr::{ExponentExpression, Letter, Word};
use crate::groups::{knapsack_of, Elem, Group, GroupError, KFactor, Knapsack, Seg, SolveCtx, SolveError};
use crate::semilinear::SemilinearSet;

#[derive(Clone, Debug)]
pub struct FiniteExtGroup {
    base: Arc<dyn Group>,
    cosets: Vec<String>,
    gens: Vec<String>,
    n_base: usize,
    /// `table[c][a] = (w_{c,a} ∈ G, d_{c,a})`
    table: Vec<Vec<(Elem, usize)>>,
    /// `inv_table[c][a] = (w_{d,a}⁻¹, d)` where `d_{d,a} = c`, so `c·a⁻¹ = w_{d,a}⁻¹·d`.
    inv_table: Vec<Vec<(Elem, usize)>>,
}

/// The orbit `d, f(d), f²(d), …` of the coset map `f(c) = coset of c·u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetOrbit {
    /// `f^z(d)` for `0 ≤ z < l + k`.
    pub values: Vec<usize>,
    /// Number of cosets.
    pub l: usize,
    /// Least `k ≥ 1` with `f^{l+k}(d) = f^l(d)`.
    pub k: usize,
    /// `f^l(d)`.
    pub e: usize,
}

impl CosetOrbit {
    /// Residues `r ∈ [0, k)` with `f^{l+r}(d) = target`.
    pub fn residues(&self, target: usize) -> Vec<usize> {
        (0..self.k).filter(|&r| self.values[self.l + r] == target).collect()
    }
}

impl FiniteExtGroup {
    /// `gens` lists the base generators followed by `cosets[1..]`; `full` is
    /// indexed by coset, then generator.
    pub fn new(base: Arc<dyn Group>, cosets: Vec<String>, gens: Vec<String>, full: Vec<Vec<(Word, usize)>>) -> Self {
        let n_base = gens.len() + 1 - cosets.len();
        let table: Vec<Vec<(Elem, usize)>> = full
            .iter()
            .map(|row| {
                row.iter().map(|(w, d)| (base.eval_word(w).expect("rule words use base generators"), *d)).collect()
            })
            .collect();
        let mut inv_table = vec![vec![(base.identity(), 0); gens.len()]; cosets.len()];
        for (d, row) in table.iter().enumerate() {
            for (a, (w, c)) in row.iter().enumerate() {
                inv_table[*c][a] = (base.inv(w), d);
            }
        }
        FiniteExtGroup { base, cosets, gens, n_base, table, inv_table }
    }

    pub fn base(&self) -> &Arc<dyn Group> {
        &self.base
    }

    /// Number of cosets `l`.
    pub fn index(&self) -> usize {
        self.cosets.len()
    }

    fn parts<'a>(&self, e: &'a Elem) -> (&'a Elem, usize) {
        match e {
            Elem::Ext(g, c) => (g, *c as usize),
            other => panic!("not a finite-extension element: {other:?}"),
        }
    }

    fn make(&self, g: Elem, c: usize) -> Elem {
        Elem::Ext(Box::new(g), c as u32)
    }

    /// `c·l = g·d` for one letter.
    fn push_letter(&self, c: usize, a: usize, inv: bool) -> (Elem, usize) {
        if inv {
            self.inv_table[c][a].clone()
        } else {
            self.table[c][a].clone()
        }
    }

    fn gen_index(&self, l: &Letter) -> Result<usize, GroupError> {
        self.gens.iter().position(|g| *g == l.name).ok_or_else(|| GroupError::UnknownGenerator(l.name.clone()))
    }

    /// `c·w` as `g·d` for a word over the extension's generators.
    fn push_word(&self, c: usize, w: &[Letter]) -> Result<(Elem, usize), GroupError> {
        let mut acc = self.base.identity();
        let mut cur = c;
        for l in w {
            let (g, d) = self.push_letter(cur, self.gen_index(l)?, l.inv);
            acc = self.base.mul(&acc, &g);
            cur = d;
        }
        Ok((acc, cur))
    }

    /// `c·h` for `h ∈ G`.
    fn push_base(&self, c: usize, h: &Elem) -> (Elem, usize) {
        if c == 0 {
            return (h.clone(), 0);
        }
        self.push_word(c, &self.base.word_of(h)).expect("base words use base generators")
    }

    /// The coset `d` with `g·c = g'·d` after right-multiplying by `u`.
    fn coset_after(&self, c: usize, u: &Elem) -> usize {
        let rep = self.make(self.base.identity(), c);
        self.parts(&self.mul(&rep, u)).1
    }

    /// The representative `c` as an element of `H`.
    fn rep(&self, c: usize) -> Elem {
        self.make(self.base.identity(), c)
    }
}

impl Group for FiniteExtGroup {
    fn identity(&self) -> Elem {
        self.make(self.base.identity(), 0)
    }

    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        let ((g, c), (h, d)) = (self.parts(a), self.parts(b));
        let (h1, c1) = self.push_base(c, h);
        let mut acc = self.base.mul(g, &h1);
        let mut cur = c1;
        if d != 0 {
            let (w, e) = self.push_letter(cur, self.n_base + d - 1, false);
            acc = self.base.mul(&acc, &w);
            cur = e;
        }
        self.make(acc, cur)
    }

    fn inv(&self, a: &Elem) -> Elem {
        let (g, c) = self.parts(a);
        // (g·c)⁻¹ = c⁻¹·g⁻¹ with 1·c⁻¹ = w⁻¹·d
        let cinv = if c == 0 {
            self.identity()
        } else {
            let (w, d) = self.push_letter(0, self.n_base + c - 1, true);
            self.make(w, d)
        };
        self.mul(&cinv, &self.make(self.base.inv(g), 0))
    }

    fn generators(&self) -> Vec<String> {
        self.gens.clone()
    }

    fn gen_elem(&self, name: &str) -> Option<Elem> {
        let i = self.gens.iter().position(|g| g == name)?;
        Some(if i < self.n_base { self.make(self.base.gen_elem(name)?, 0) } else { self.rep(i + 1 - self.n_base) })
    }

    fn word_of(&self, e: &Elem) -> Word {
        let (g, c) = self.parts(e);
        let mut w = self.base.word_of(g);
        if c != 0 {
            w.push(Letter::new(&self.cosets[c]));
        }
        w
    }

    fn solve_knapsack(&self, k: &Knapsack, ctx: &SolveCtx) -> Result<SemilinearSet, SolveError> {
        Ok(solve(self, k, ctx)?.set)
    }
}

/// Pushes cosets through `w` with the table and checks that the collected
/// `G`-element is trivial and the final coset is the identity coset.
pub fn fe_word_problem(h: &FiniteExtGroup, w: &[Letter]) -> Result<bool, GroupError> {
    let (g, c) = h.push_word(0, w)?;
    Ok(c == 0 && h.base.is_identity(&g))
}

pub fn coset_orbit(h: &FiniteExtGroup, d: usize, u: &Elem) -> CosetOrbit {
    let l = h.index();
    let mut values = vec![d];
    for _ in 0..2 * l {
        let next = h.coset_after(*values.last().unwrap(), u);
        values.push(next);
    }
    let e = values[l];
    let k = (1..=l).find(|&k| values[l + k] == e).expect("a map on l points has period at most l");
    values.truncate(l + k);
    CosetOrbit { values, l, k, e }
}

/// One way of handling a factor: a fixed small exponent, or
/// `x = l + k·y + r` with `y` solved in `G`.
#[derive(Clone, Copy, Debug)]
enum Branch {
    Small(usize),
    Large { k: usize, r: usize },
}

/// One consistent choice of small and large exponents, with the `G`-solution
/// it was derived from.
#[derive(Clone, Debug)]
pub struct ExtBranch {
    /// Variables of the large factors, in factor order.
    pub large: Vec<String>,
    /// `(k, l + r)` per large variable: `x = k·y + (l + r)`.
    pub coeffs: Vec<(i64, i64)>,
    /// Solution of the collected `G`-instance over `large` (values of `y`).
    pub raw: SemilinearSet,
    /// Variables with a fixed small exponent.
    pub fixed: Vec<(String, i64)>,
    /// The branch's share of the answer, over all variables.
    pub set: SemilinearSet,
}

#[derive(Clone, Debug)]
pub struct ExtSolution {
    pub set: SemilinearSet,
    pub branches: Vec<ExtBranch>,
}

/// Solves a knapsack expression (each variable at most once) over `h` and
/// keeps every nonempty branch for inspection.
pub fn solve_exponent_finite_ext(
    h: &FiniteExtGroup,
    e: &ExponentExpression,
    ctx: &SolveCtx,
) -> Result<ExtSolution, SolveError> {
    if !e.is_knapsack() {
        return Err(SolveError::Invalid("a variable occurs twice".into()));
    }
    let e = e.normalize();
    if e.factors.is_empty() {
        let ok = h.word_problem(&e.head)?;
        let set = if ok { SemilinearSet::point(vec![], vec![]) } else { SemilinearSet::empty(vec![]) };
        return Ok(ExtSolution { set, branches: Vec::new() });
    }
    let mut factors = Vec::with_capacity(e.factors.len());
    for f in &e.factors {
        factors.push(KFactor { period: h.eval_word(&f.period)?, var: f.var.clone(), tail: h.eval_word(&f.tail)? });
    }
    solve(h, &Knapsack { factors }, ctx)
}

fn solve(h: &FiniteExtGroup, ks: &Knapsack, ctx: &SolveCtx) -> Result<ExtSolution, SolveError> {
    let vars = ks.vars();
    let l = h.index();
    // `Some(s)`: the exponent is the small value `s`; `None`: it is at least `l`
    let mut plans: Vec<Vec<Option<usize>>> = vec![Vec::new()];
    for _ in &ks.factors {
        plans = plans
            .into_iter()
            .flat_map(|p| {
                (0..l).map(Some).chain([None]).map(move |b| {
                    let mut q = p.clone();
                    q.push(b);
                    q
                })
            })
            .collect();
    }
    let results = ctx.exec.map(plans, |p| solve_branch(h, ks, &p, ctx));
    let mut out = SemilinearSet::empty(vars);
    let mut branches = Vec::new();
    for r in results {
        for b in r? {
            out = out.union(&b.set)?;
            branches.push(b);
        }
    }
    out.simplify();
    Ok(ExtSolution { set: out, branches })
}

/// Solves every residue choice of the large slots in `plan`.
fn solve_branch(
    h: &FiniteExtGroup,
    ks: &Knapsack,
    plan: &[Option<usize>],
    ctx: &SolveCtx,
) -> Result<Vec<ExtBranch>, SolveError> {
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Elem, Vec<Seg>, Vec<Branch>)> = vec![(0, h.identity(), Vec::new(), Vec::new())];
    let l = h.index();
    while let Some((i, acc, segs, chosen)) = stack.pop() {
        if i == ks.factors.len() {
            let (g, c) = h.parts(&acc);
            if c != 0 {
                continue;
            }
            let mut segs = segs;
            segs.push(Seg::Const(g.clone()));
            if let Some(s) = finish(h, ks, &segs, &chosen, ctx)? {
                out.push(s);
            }
            continue;
        }
        let f = &ks.factors[i];
        match plan[i] {
            Some(s) => {
                let next = h.mul(&h.mul(&acc, &h.pow(&f.period, s as u64)), &f.tail);
                let mut ch = chosen.clone();
                ch.push(Branch::Small(s));
                stack.push((i + 1, next, segs, ch));
            }
            None => {
                let d = h.parts(&acc).1;
                let orbit = coset_orbit(h, d, &f.period);
                let e = h.rep(orbit.e);
                let einv = h.inv(&e);
                // acc·u^l·e⁻¹ and e·u^k·e⁻¹ lie in G
                let head = h.mul(&h.mul(&acc, &h.pow(&f.period, l as u64)), &einv);
                let per = h.mul(&h.mul(&e, &h.pow(&f.period, orbit.k as u64)), &einv);
                let (hg, hc) = h.parts(&head);
                let (pg, pc) = h.parts(&per);
                if hc != 0 || pc != 0 {
                    unreachable!("coset orbit arithmetic is closed");
                }
                for r in 0..orbit.k {
                    let mut segs2 = segs.clone();
                    segs2.push(Seg::Const(hg.clone()));
                    segs2.push(Seg::Pow(pg.clone(), f.var.clone()));
                    let next = h.mul(&h.mul(&e, &h.pow(&f.period, r as u64)), &f.tail);
                    let mut ch = chosen.clone();
                    ch.push(Branch::Large { k: orbit.k, r });
                    stack.push((i + 1, next, segs2, ch));
                }
            }
        }
    }
    Ok(out)
}

/// Solves the collected `G`-instance and maps it back with
/// `x = k·y + (l + r)`; small variables are fixed points.
fn finish(
    h: &FiniteExtGroup,
    ks: &Knapsack,
    segs: &[Seg],
    plan: &[Branch],
    ctx: &SolveCtx,
) -> Result<Option<ExtBranch>, SolveError> {
    let l = h.index() as i64;
    let g = h.base.as_ref();
    let mut large = Vec::new();
    let mut coeffs = Vec::new();
    let mut small_names = Vec::new();
    let mut small_vals = Vec::new();
    for (f, b) in ks.factors.iter().zip(plan) {
        match *b {
            Branch::Small(s) => {
                small_names.push(f.var.clone());
                small_vals.push(s as i64);
            }
            Branch::Large { k, r } => {
                large.push(f.var.clone());
                coeffs.push((k as i64, l + r as i64));
            }
        }
    }
    let raw = match knapsack_of(g, segs) {
        Some(kg) => g.solve_knapsack(&kg, ctx)?.reorder(&large)?,
        None => {
            let c = segs.iter().fold(g.identity(), |acc, s| match s {
                Seg::Const(c) => g.mul(&acc, c),
                Seg::Pow(..) => unreachable!(),
            });
            if !g.is_identity(&c) {
                return Ok(None);
            }
            SemilinearSet::point(vec![], vec![])
        }
    };
    if raw.is_empty() {
        return Ok(None);
    }
    let inner = raw.affine_substitute(&coeffs)?;
    let all = inner.direct_sum(&SemilinearSet::point(small_names.clone(), small_vals.clone()))?;
    Ok(Some(ExtBranch {
        large,
        coeffs,
        raw,
        fixed: small_names.into_iter().zip(small_vals).collect(),
        set: all.reorder(&ks.vars())?,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_word;
    use crate::groups::IntegerGroup;

    /// `ℤ = ⟨t⟩` over `G = ⟨s⟩` with `s = t²`, cosets `{1, t}`.
    pub(crate) fn z_over_2z() -> FiniteExtGroup {
        let g: Arc<dyn Group> = Arc::new(IntegerGroup::new("s"));
        let gens = vec!["s".to_string(), "t".to_string()];
        let w = |s: &str| parse_word(s);
        let full = vec![vec![(w("s"), 0), (w(""), 1)], vec![(w("s"), 1), (w("s"), 0)]];
        FiniteExtGroup::new(g, vec!["1".into(), "t".into()], gens, full)
    }

    #[test]
    fn word_problem_examples() {
        let h = z_over_2z();
        assert!(fe_word_problem(&h, &parse_word("t t s'")).unwrap());
        assert!(!fe_word_problem(&h, &parse_word("t")).unwrap());
        assert!(fe_word_problem(&h, &[]).unwrap());
        assert!(fe_word_problem(&h, &parse_word("t' s t'")).unwrap());
    }

    #[test]
    fn inverse_and_product() {
        let h = z_over_2z();
        let t = h.gen_elem("t").unwrap();
        let ti = h.inv(&t);
        assert_eq!(h.mul(&t, &ti), h.identity());
        assert_eq!(h.mul(&ti, &t), h.identity());
        assert_eq!(h.mul(&t, &t), h.gen_elem("s").unwrap());
    }

    #[test]
    fn orbit_of_t() {
        let h = z_over_2z();
        let o = coset_orbit(&h, 0, &h.gen_elem("t").unwrap());
        assert_eq!((o.l, o.k, o.e), (2, 2, 0));
        assert_eq!(o.residues(1), vec![1]);
        let s = coset_orbit(&h, 1, &h.gen_elem("s").unwrap());
        assert_eq!(s.k, 1);
    }
}
