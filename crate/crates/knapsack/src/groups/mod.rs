//! The group abstraction and the generic exponent-equation driver.
//!
//! Every constructor in a [`desc::GroupDesc`] tree becomes an
//! `Arc<dyn Group>`. Elements are values of the closed enum [`Elem`], kept in a
//! canonical form by their owning group so that structural equality is group
//! equality.

pub mod desc;
mod finite;
mod integer;

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{ExponentExpression, Letter, Word};
use crate::par::Exec;
use crate::semilinear::{SemilinearError, SemilinearSet, DEFAULT_DIOPH_CAP};

pub use finite::FiniteGroup;
pub use integer::IntegerGroup;

/// A group element in the canonical form of its owning group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Elem {
    /// ℤ, additively.
    Int(i64),
    /// Index into a finite group's element list.
    Fin(u32),
    /// Graph-product element: canonical linearization of an irreducible trace.
    Trace(Vec<Atom>),
    /// HNN element: canonical Britton-reduced word (vertex 0 base letters,
    /// vertex 1 stable letters `Int(±1)`).
    Hnn(Vec<Atom>),
    /// Finite-extension element `g·c` with `c` a coset index.
    Ext(Box<Elem>, u32),
}

/// One letter of a trace or Britton word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub vertex: u32,
    pub elem: Elem,
}

impl Atom {
    pub fn new(vertex: u32, elem: Elem) -> Self {
        Atom { vertex, elem }
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Elem::Int(n) => write!(f, "{n}"),
            Elem::Fin(i) => write!(f, "#{i}"),
            Elem::Trace(a) | Elem::Hnn(a) => {
                write!(f, "[")?;
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{}:{}", x.vertex, x.elem)?;
                }
                write!(f, "]")
            }
            Elem::Ext(g, c) => write!(f, "{g}·c{c}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error(transparent)]
    Semilinear(#[from] SemilinearError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl SolveError {
    pub fn is_budget(&self) -> bool {
        matches!(self, SolveError::BudgetExhausted(_) | SolveError::Semilinear(SemilinearError::BudgetExhausted { .. }))
    }
}

/// One power `period^var` followed by a constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KFactor {
    pub period: Elem,
    pub var: String,
    pub tail: Elem,
}

/// `∏ period_i^{var_i} tail_i = 1` with pairwise distinct variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Knapsack {
    pub factors: Vec<KFactor>,
}

impl Knapsack {
    pub fn vars(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.var.clone()).collect()
    }

    /// Builds `head · ∏ period_i^{x_i} tail_i` and rotates `head` to the end.
    pub fn with_head(g: &dyn Group, head: &Elem, factors: Vec<KFactor>) -> Knapsack {
        let mut factors = factors;
        if let Some(last) = factors.last_mut() {
            last.tail = g.mul(&last.tail, head);
        }
        Knapsack { factors }
    }

    /// Value of the left-hand side under `vals` (in factor order).
    pub fn evaluate(&self, g: &dyn Group, vals: &[u64]) -> Elem {
        let mut acc = g.identity();
        for (f, &n) in self.factors.iter().zip(vals) {
            acc = g.mul(&acc, &g.pow(&f.period, n));
            acc = g.mul(&acc, &f.tail);
        }
        acc
    }
}

/// A constant or a named power in a product that should equal 1.
#[derive(Clone, Debug)]
pub(crate) enum Seg {
    Const(Elem),
    Pow(Elem, String),
}

/// Turns a product of segments into a knapsack instance by rotating the
/// leading constant to the end. `None` when there is no power.
pub(crate) fn knapsack_of(g: &dyn Group, segs: &[Seg]) -> Option<Knapsack> {
    let mut head = g.identity();
    let mut factors: Vec<KFactor> = Vec::new();
    for s in segs {
        match s {
            Seg::Const(c) => match factors.last_mut() {
                Some(f) => f.tail = g.mul(&f.tail, c),
                None => head = g.mul(&head, c),
            },
            Seg::Pow(p, var) => factors.push(KFactor { period: p.clone(), var: var.clone(), tail: g.identity() }),
        }
    }
    if factors.is_empty() {
        return None;
    }
    Some(Knapsack::with_head(g, &head, factors))
}

/// Search limits. `None` for the refinement budget means the proven piece
/// bound of the group class is used.
#[derive(Clone, Debug)]
pub struct Budget {
    pub refinement: Option<usize>,
    pub automata_cap: usize,
    pub dioph_cap: usize,
    /// Cap on DFS states visited by one reduction search.
    pub search_nodes: usize,
    /// Accept truncated searches and return an under-approximation.
    pub fast: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            refinement: None,
            automata_cap: crate::unary_automata::DEFAULT_TRAJECTORY_CAP,
            dioph_cap: DEFAULT_DIOPH_CAP,
            search_nodes: 2_000_000,
            fast: false,
        }
    }
}

impl Budget {
    /// Reduced limits for quick, possibly incomplete runs.
    pub fn fast() -> Self {
        Budget { refinement: None, search_nodes: 20_000, fast: true, ..Budget::default() }
    }
}

/// Counters shared by all solver calls of one top-level solve.
#[derive(Debug, Default)]
pub struct Diagnostics {
    pub guesses_explored: AtomicU64,
    pub guesses_pruned: AtomicU64,
    pub search_states: AtomicU64,
    /// Linear components produced by reduction searches.
    pub reduction_components: AtomicU64,
    pub bound_checks: AtomicU64,
    pub bound_violations: AtomicU64,
    pub truncated: AtomicBool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DiagnosticsReport {
    pub guesses_explored: u64,
    pub guesses_pruned: u64,
    pub search_states: u64,
    pub reduction_components: u64,
    pub bound_checks: u64,
    pub bound_violations: u64,
    pub budget_status: String,
}

impl Diagnostics {
    pub fn bump(c: &AtomicU64, n: u64) {
        c.fetch_add(n, Ordering::Relaxed);
    }

    pub fn report(&self) -> DiagnosticsReport {
        let r = |c: &AtomicU64| c.load(Ordering::Relaxed);
        DiagnosticsReport {
            guesses_explored: r(&self.guesses_explored),
            guesses_pruned: r(&self.guesses_pruned),
            search_states: r(&self.search_states),
            reduction_components: r(&self.reduction_components),
            bound_checks: r(&self.bound_checks),
            bound_violations: r(&self.bound_violations),
            budget_status: if self.truncated.load(Ordering::Relaxed) { "truncated".into() } else { "complete".into() },
        }
    }

    /// Records one check of a proven size bound.
    pub fn check_bound(&self, ok: bool) {
        Self::bump(&self.bound_checks, 1);
        if !ok {
            Self::bump(&self.bound_violations, 1);
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveCtx {
    pub budget: Budget,
    pub exec: Exec,
    pub diag: Arc<Diagnostics>,
}

impl SolveCtx {
    pub fn new(budget: Budget, exec: Exec) -> Self {
        SolveCtx { budget, exec, diag: Arc::new(Diagnostics::default()) }
    }

    pub fn sequential() -> Self {
        SolveCtx::new(Budget::default(), Exec::Sequential)
    }
}

pub trait Group: Send + Sync + fmt::Debug {
    fn identity(&self) -> Elem;
    fn mul(&self, a: &Elem, b: &Elem) -> Elem;
    fn inv(&self, a: &Elem) -> Elem;
    /// Generator names; the inverse of `a` is written `a'`.
    fn generators(&self) -> Vec<String>;
    fn gen_elem(&self, name: &str) -> Option<Elem>;
    /// A word over the generators representing `e`.
    fn word_of(&self, e: &Elem) -> Word;
    /// Word length used for the size bounds (geodesic where computable).
    fn norm(&self, e: &Elem) -> u64 {
        self.word_of(e).len() as u64
    }
    /// Order of `e` when known to be finite.
    fn order(&self, _e: &Elem) -> Option<u64> {
        None
    }
    /// Solution set of `k` over `k.vars()`.
    fn solve_knapsack(&self, k: &Knapsack, ctx: &SolveCtx) -> Result<SemilinearSet, SolveError>;

    fn is_identity(&self, e: &Elem) -> bool {
        *e == self.identity()
    }

    fn letter(&self, l: &Letter) -> Result<Elem, GroupError> {
        let g = self.gen_elem(&l.name).ok_or_else(|| GroupError::UnknownGenerator(l.name.clone()))?;
        Ok(if l.inv { self.inv(&g) } else { g })
    }

    fn eval_word(&self, w: &[Letter]) -> Result<Elem, GroupError> {
        let mut acc = self.identity();
        for l in w {
            acc = self.mul(&acc, &self.letter(l)?);
        }
        Ok(acc)
    }

    fn pow(&self, e: &Elem, n: u64) -> Elem {
        let mut result = self.identity();
        let mut base = e.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = self.mul(&result, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.mul(&base, &base);
            }
        }
        result
    }

    fn word_problem(&self, w: &[Letter]) -> Result<bool, GroupError> {
        Ok(self.is_identity(&self.eval_word(w)?))
    }
}

/// Solution set of `e = 1` over the variables of `e` (first-occurrence order).
///
/// The expression is normalized, repeated variables are renamed apart, the
/// resulting knapsack instance goes to the group's own solver, and the answer
/// is intersected with the renaming constraint and projected back.
pub fn solve_exponent(g: &dyn Group, e: &ExponentExpression, ctx: &SolveCtx) -> Result<SemilinearSet, SolveError> {
    let vars = e.vars();
    let e = e.normalize();
    if e.factors.is_empty() {
        let ok = g.word_problem(&e.head)?;
        return Ok(if ok { SemilinearSet::point(vec![], vec![]) } else { SemilinearSet::empty(vec![]) });
    }
    let (e2, k) = e.knapsackify();
    let mut factors = Vec::with_capacity(e2.factors.len());
    for f in &e2.factors {
        factors.push(KFactor { period: g.eval_word(&f.period)?, var: f.var.clone(), tail: g.eval_word(&f.tail)? });
    }
    let ks = Knapsack { factors };
    let sol = g.solve_knapsack(&ks, ctx)?;
    let sol = if e2.is_knapsack() && e2.vars() == vars {
        sol
    } else {
        sol.intersect_with_cap(&k, ctx.budget.dioph_cap)?.restrict(&vars)?
    };
    let mut sol = sol.reorder(&vars)?;
    sol.simplify();
    Ok(sol)
}

/// Breadth-first shortest words for every element of a finite group given by
/// `mul`/`inv` closures over indices `0..n`, starting from `id`.
pub(crate) fn bfs_words(
    n: usize,
    id: usize,
    gens: &[(String, usize)],
    mul: impl Fn(usize, usize) -> usize,
    inv: impl Fn(usize) -> usize,
) -> Vec<Option<Word>> {
    let mut words: Vec<Option<Word>> = vec![None; n];
    words[id] = Some(Word::new());
    let mut queue = std::collections::VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        let w = words[x].clone().unwrap();
        for (name, gi) in gens {
            for (elem, inv_flag) in [(*gi, false), (inv(*gi), true)] {
                let y = mul(x, elem);
                if words[y].is_none() {
                    let mut w2 = w.clone();
                    w2.push(Letter { name: name.clone(), inv: inv_flag });
                    words[y] = Some(w2);
                    queue.push_back(y);
                }
            }
        }
    }
    words
}
