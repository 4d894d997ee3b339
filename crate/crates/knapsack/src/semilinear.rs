//! Semilinear subsets of ℕ^d over named variables.
//!
//! A [`LinearSet`] is `b + P·ℕ^k`; a [`SemilinearSet`] is a finite union of
//! linear sets sharing one ordered tuple of variable names. Binary operations
//! align their operands by variable name, so two sets over `(x, y)` and
//! `(y, x)` can be intersected directly.
//!
//! Intersection and exact Diophantine solving go through
//! [`dioph_basis`], a breadth-first completion procedure that returns the
//! minimal solutions of `A·x = rhs` together with the Hilbert basis of the
//! homogeneous system.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

type Basis = Vec<Vec<i64>>;

/// Default cap on the number of vectors explored by [`dioph_basis`].
pub const DEFAULT_DIOPH_CAP: usize = 500_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemilinearError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("variable sets differ: {left:?} vs {right:?}")]
    VarMismatch { left: Vec<String>, right: Vec<String> },
    #[error("variables overlap in direct sum: {0:?}")]
    Overlap(Vec<String>),
    #[error("unknown variable `{0}`")]
    UnknownVar(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVar(String),
    #[error("budget exhausted: Diophantine frontier exceeded {cap} entries")]
    BudgetExhausted { cap: usize },
    #[error("negative entry in {0}")]
    Negative(&'static str),
}

/// `base + periods·ℕ^k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinearSet {
    pub base: Vec<i64>,
    #[serde(default)]
    pub periods: Vec<Vec<i64>>,
}

impl LinearSet {
    pub fn new(base: Vec<i64>, periods: Vec<Vec<i64>>) -> Self {
        let mut l = LinearSet { base, periods };
        l.tidy();
        l
    }

    pub fn point(base: Vec<i64>) -> Self {
        LinearSet { base, periods: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    /// Drops zero periods, sorts and deduplicates the rest.
    pub fn tidy(&mut self) {
        self.periods.retain(|p| p.iter().any(|&c| c != 0));
        self.periods.sort();
        self.periods.dedup();
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        if v.len() != self.base.len() {
            return false;
        }
        let rest: Vec<i64> = v.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        if rest.iter().any(|&r| r < 0) {
            return false;
        }
        monoid_contains(&self.periods, &rest, &mut HashMap::new(), 0)
    }

    fn magnitude(&self) -> i64 {
        self.base.iter().chain(self.periods.iter().flatten()).map(|c| c.abs()).max().unwrap_or(0)
    }

    /// All points of this set inside `[0, bound]^d`.
    pub fn points_in_box(&self, bound: i64) -> HashSet<Vec<i64>> {
        let mut seen = HashSet::new();
        if self.base.iter().any(|&c| c > bound) {
            return seen;
        }
        let mut stack = vec![self.base.clone()];
        seen.insert(self.base.clone());
        while let Some(v) = stack.pop() {
            for p in &self.periods {
                let w: Vec<i64> = v.iter().zip(p).map(|(a, b)| a + b).collect();
                if w.iter().all(|&c| c <= bound) && seen.insert(w.clone()) {
                    stack.push(w);
                }
            }
        }
        seen
    }
}

/// Decides `target ∈ periods[from..]·ℕ^k` by bounded search.
fn monoid_contains(
    periods: &[Vec<i64>],
    target: &[i64],
    memo: &mut HashMap<(usize, Vec<i64>), bool>,
    from: usize,
) -> bool {
    if target.iter().all(|&c| c == 0) {
        return true;
    }
    if from == periods.len() {
        return false;
    }
    let key = (from, target.to_vec());
    if let Some(&r) = memo.get(&key) {
        return r;
    }
    let p = &periods[from];
    let mut res = false;
    let mut cur = target.to_vec();
    loop {
        if monoid_contains(periods, &cur, memo, from + 1) {
            res = true;
            break;
        }
        let mut ok = true;
        for (c, d) in cur.iter_mut().zip(p) {
            *c -= d;
            if *c < 0 {
                ok = false;
            }
        }
        if !ok {
            break;
        }
    }
    memo.insert(key, res);
    res
}

/// A finite union of linear sets over a named variable tuple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemilinearSet {
    pub vars: Vec<String>,
    pub components: Vec<LinearSet>,
}

impl fmt::Display for SemilinearSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.vars.join(","))?;
        if self.components.is_empty() {
            return write!(f, " ∅");
        }
        for (i, c) in self.components.iter().enumerate() {
            write!(f, "{} {:?}+{:?}", if i == 0 { "" } else { " ∪" }, c.base, c.periods)?;
        }
        Ok(())
    }
}

fn check_vars(vars: &[String]) -> Result<(), SemilinearError> {
    let mut seen = HashSet::new();
    for v in vars {
        if !seen.insert(v) {
            return Err(SemilinearError::DuplicateVar(v.clone()));
        }
    }
    Ok(())
}

impl SemilinearSet {
    pub fn empty(vars: Vec<String>) -> Self {
        SemilinearSet { vars, components: Vec::new() }
    }

    /// The whole of ℕ^vars.
    pub fn full(vars: Vec<String>) -> Self {
        let d = vars.len();
        let periods = (0..d).map(|i| unit(d, i)).collect();
        SemilinearSet { vars, components: vec![LinearSet::new(vec![0; d], periods)] }
    }

    /// The single point `values` (in `vars` order).
    pub fn point(vars: Vec<String>, values: Vec<i64>) -> Self {
        SemilinearSet { vars, components: vec![LinearSet::point(values)] }
    }

    /// Builds and validates a set.
    pub fn from_components(vars: Vec<String>, components: Vec<LinearSet>) -> Result<Self, SemilinearError> {
        check_vars(&vars)?;
        let d = vars.len();
        for c in &components {
            if c.base.len() != d {
                return Err(SemilinearError::Dimension { expected: d, found: c.base.len() });
            }
            for p in &c.periods {
                if p.len() != d {
                    return Err(SemilinearError::Dimension { expected: d, found: p.len() });
                }
                if p.iter().any(|&x| x < 0) {
                    return Err(SemilinearError::Negative("period"));
                }
            }
            if c.base.iter().any(|&x| x < 0) {
                return Err(SemilinearError::Negative("base"));
            }
        }
        let mut s = SemilinearSet { vars, components };
        for c in &mut s.components {
            c.tidy();
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Largest absolute entry of this representation; 0 when empty.
    pub fn magnitude(&self) -> i64 {
        self.components.iter().map(LinearSet::magnitude).max().unwrap_or(0)
    }

    pub fn membership(&self, v: &[i64]) -> Result<bool, SemilinearError> {
        if v.len() != self.dim() {
            return Err(SemilinearError::Dimension { expected: self.dim(), found: v.len() });
        }
        Ok(self.components.iter().any(|c| c.contains(v)))
    }

    /// Membership of a valuation given as `(name, value)` pairs.
    pub fn contains_valuation(&self, val: &HashMap<String, i64>) -> Result<bool, SemilinearError> {
        let v: Result<Vec<i64>, _> = self
            .vars
            .iter()
            .map(|x| val.get(x).copied().ok_or_else(|| SemilinearError::UnknownVar(x.clone())))
            .collect();
        self.membership(&v?)
    }

    /// All members inside `[0, bound]^d`.
    pub fn points_in_box(&self, bound: i64) -> HashSet<Vec<i64>> {
        let mut out = HashSet::new();
        for c in &self.components {
            out.extend(c.points_in_box(bound));
        }
        out
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    /// Re-expresses `self` over `order`, which must be a permutation of `self.vars`.
    pub fn reorder(&self, order: &[String]) -> Result<SemilinearSet, SemilinearError> {
        if order.len() != self.vars.len() {
            return Err(SemilinearError::VarMismatch { left: self.vars.clone(), right: order.to_vec() });
        }
        let mut perm = Vec::with_capacity(order.len());
        for name in order {
            match self.index_of(name) {
                Some(i) => perm.push(i),
                None => return Err(SemilinearError::VarMismatch { left: self.vars.clone(), right: order.to_vec() }),
            }
        }
        let map = |v: &Vec<i64>| perm.iter().map(|&i| v[i]).collect::<Vec<i64>>();
        Ok(SemilinearSet {
            vars: order.to_vec(),
            components: self
                .components
                .iter()
                .map(|c| LinearSet::new(map(&c.base), c.periods.iter().map(map).collect()))
                .collect(),
        })
    }

    pub fn union(&self, other: &SemilinearSet) -> Result<SemilinearSet, SemilinearError> {
        let other = other.reorder(&self.vars)?;
        let mut components = self.components.clone();
        for c in other.components {
            if !components.contains(&c) {
                components.push(c);
            }
        }
        Ok(SemilinearSet { vars: self.vars.clone(), components })
    }

    pub fn intersect(&self, other: &SemilinearSet) -> Result<SemilinearSet, SemilinearError> {
        self.intersect_with_cap(other, DEFAULT_DIOPH_CAP)
    }

    pub fn intersect_with_cap(&self, other: &SemilinearSet, cap: usize) -> Result<SemilinearSet, SemilinearError> {
        let other = other.reorder(&self.vars)?;
        let mut components = Vec::new();
        for l1 in &self.components {
            for l2 in &other.components {
                for c in intersect_linear(l1, l2, cap)? {
                    if !components.contains(&c) {
                        components.push(c);
                    }
                }
            }
        }
        let mut s = SemilinearSet { vars: self.vars.clone(), components };
        s.simplify();
        Ok(s)
    }

    /// `{σ₁ ⊕ σ₂}` over the concatenated (disjoint) variable tuple.
    pub fn direct_sum(&self, other: &SemilinearSet) -> Result<SemilinearSet, SemilinearError> {
        let overlap: Vec<String> = self.vars.iter().filter(|v| other.vars.contains(v)).cloned().collect();
        if !overlap.is_empty() {
            return Err(SemilinearError::Overlap(overlap));
        }
        let (d1, d2) = (self.dim(), other.dim());
        let mut vars = self.vars.clone();
        vars.extend(other.vars.iter().cloned());
        let mut components = Vec::new();
        for a in &self.components {
            for b in &other.components {
                let mut base = a.base.clone();
                base.extend(&b.base);
                let mut periods: Vec<Vec<i64>> = a
                    .periods
                    .iter()
                    .map(|p| {
                        let mut q = p.clone();
                        q.extend(std::iter::repeat_n(0, d2));
                        q
                    })
                    .collect();
                periods.extend(b.periods.iter().map(|p| {
                    let mut q = vec![0; d1];
                    q.extend(p);
                    q
                }));
                components.push(LinearSet::new(base, periods));
            }
        }
        Ok(SemilinearSet { vars, components })
    }

    /// Pointwise sums `{σ₁ + σ₂}` over the shared variable tuple.
    pub fn minkowski_sum(&self, other: &SemilinearSet) -> Result<SemilinearSet, SemilinearError> {
        let other = other.reorder(&self.vars)?;
        let mut components = Vec::with_capacity(self.components.len() * other.components.len());
        for a in &self.components {
            for b in &other.components {
                let base = a.base.iter().zip(&b.base).map(|(x, y)| x + y).collect();
                let mut periods = a.periods.clone();
                periods.extend(b.periods.iter().cloned());
                components.push(LinearSet::new(base, periods));
            }
        }
        let mut s = SemilinearSet { vars: self.vars.clone(), components };
        s.simplify();
        Ok(s)
    }

    /// Projection onto the variables in `keep` (in `keep` order).
    pub fn restrict(&self, keep: &[String]) -> Result<SemilinearSet, SemilinearError> {
        check_vars(keep)?;
        let idx: Vec<usize> = keep
            .iter()
            .map(|k| self.index_of(k).ok_or_else(|| SemilinearError::UnknownVar(k.clone())))
            .collect::<Result<_, _>>()?;
        let map = |v: &Vec<i64>| idx.iter().map(|&i| v[i]).collect::<Vec<i64>>();
        let mut components: Vec<LinearSet> = Vec::new();
        for c in &self.components {
            let l = LinearSet::new(map(&c.base), c.periods.iter().map(map).collect());
            if !components.contains(&l) {
                components.push(l);
            }
        }
        Ok(SemilinearSet { vars: keep.to_vec(), components })
    }

    /// `{x : x_i = k_i·x'_i + off_i, x' ∈ self}`, one `(k_i, off_i)` per variable.
    pub fn affine_substitute(&self, coeffs: &[(i64, i64)]) -> Result<SemilinearSet, SemilinearError> {
        if coeffs.len() != self.dim() {
            return Err(SemilinearError::Dimension { expected: self.dim(), found: coeffs.len() });
        }
        if coeffs.iter().any(|&(k, off)| k < 1 || off < 0) {
            return Err(SemilinearError::Negative("affine coefficients"));
        }
        let components = self
            .components
            .iter()
            .map(|c| {
                let base = c.base.iter().zip(coeffs).map(|(b, (k, off))| k * b + off).collect();
                let periods =
                    c.periods.iter().map(|p| p.iter().zip(coeffs).map(|(x, (k, _))| k * x).collect()).collect();
                LinearSet::new(base, periods)
            })
            .collect();
        Ok(SemilinearSet { vars: self.vars.clone(), components })
    }

    /// Image under `y_j = offset_j + Σ_i matrix[j][i]·x_i` with nonnegative
    /// coefficients, over the new variables `out`.
    pub fn linear_image(
        &self,
        out: Vec<String>,
        offset: &[i64],
        matrix: &[Vec<i64>],
    ) -> Result<SemilinearSet, SemilinearError> {
        check_vars(&out)?;
        if offset.len() != out.len() || matrix.len() != out.len() {
            return Err(SemilinearError::Dimension { expected: out.len(), found: matrix.len() });
        }
        if let Some(row) = matrix.iter().find(|r| r.len() != self.dim()) {
            return Err(SemilinearError::Dimension { expected: self.dim(), found: row.len() });
        }
        if offset.iter().chain(matrix.iter().flatten()).any(|&c| c < 0) {
            return Err(SemilinearError::Negative("linear image coefficients"));
        }
        let apply = |v: &[i64], off: bool| -> Vec<i64> {
            matrix
                .iter()
                .enumerate()
                .map(|(j, row)| row.iter().zip(v).map(|(a, x)| a * x).sum::<i64>() + if off { offset[j] } else { 0 })
                .collect()
        };
        let mut components = Vec::new();
        for c in &self.components {
            let l = LinearSet::new(apply(&c.base, true), c.periods.iter().map(|p| apply(p, false)).collect());
            if !components.contains(&l) {
                components.push(l);
            }
        }
        Ok(SemilinearSet { vars: out, components })
    }

    /// Renames variables positionally.
    pub fn rename(&self, names: Vec<String>) -> Result<SemilinearSet, SemilinearError> {
        if names.len() != self.dim() {
            return Err(SemilinearError::Dimension { expected: self.dim(), found: names.len() });
        }
        check_vars(&names)?;
        Ok(SemilinearSet { vars: names, components: self.components.clone() })
    }

    /// Adds unconstrained-free coordinates fixed to zero.
    pub fn extend_zero(&self, extra: &[String]) -> Result<SemilinearSet, SemilinearError> {
        self.direct_sum(&SemilinearSet::point(extra.to_vec(), vec![0; extra.len()]))
    }

    /// Sorts components, removes duplicates and components contained in others.
    pub fn simplify(&mut self) {
        for c in &mut self.components {
            c.tidy();
        }
        self.components.sort();
        self.components.dedup();
        let n = self.components.len();
        if !(2..=400).contains(&n) {
            return;
        }
        let mut keep = vec![true; n];
        for i in 0..n {
            for j in 0..n {
                if i != j && keep[j] && keep[i] && linear_subset(&self.components[i], &self.components[j]) {
                    keep[i] = false;
                }
            }
        }
        let mut it = keep.iter();
        self.components.retain(|_| *it.next().unwrap());
    }

    /// Deterministic presentation: components sorted lexicographically.
    pub fn sorted(&self) -> SemilinearSet {
        let mut s = self.clone();
        for c in &mut s.components {
            c.tidy();
        }
        s.components.sort();
        s.components.dedup();
        s
    }
}

/// Sufficient test for `a ⊆ b`: base of `a` in `b` and every period of `a`
/// in the monoid of periods of `b`.
fn linear_subset(a: &LinearSet, b: &LinearSet) -> bool {
    if !b.contains(&a.base) {
        return false;
    }
    let mut memo = HashMap::new();
    a.periods.iter().all(|p| monoid_contains(&b.periods, p, &mut memo, 0))
}

fn unit(d: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; d];
    v[i] = 1;
    v
}

fn intersect_linear(l1: &LinearSet, l2: &LinearSet, cap: usize) -> Result<Vec<LinearSet>, SemilinearError> {
    let d = l1.dim();
    let (k1, k2) = (l1.periods.len(), l2.periods.len());
    // b1 + P1·λ = b2 + P2·μ  ⇔  [P1 | -P2]·(λ, μ) = b2 - b1
    let a: Vec<Vec<i64>> = (0..d)
        .map(|r| {
            let mut row: Vec<i64> = l1.periods.iter().map(|p| p[r]).collect();
            row.extend(l2.periods.iter().map(|p| -p[r]));
            row
        })
        .collect();
    let rhs: Vec<i64> = (0..d).map(|r| l2.base[r] - l1.base[r]).collect();
    let (mins, hilbert) = dioph_basis(&a, &rhs, k1 + k2, cap)?;
    let image = |lam: &[i64]| -> Vec<i64> {
        (0..d).map(|r| l1.base[r] + (0..k1).map(|j| l1.periods[j][r] * lam[j]).sum::<i64>()).collect()
    };
    let periods: Vec<Vec<i64>> = hilbert
        .iter()
        .map(|h| (0..d).map(|r| (0..k1).map(|j| l1.periods[j][r] * h[j]).sum::<i64>()).collect())
        .collect();
    Ok(mins.iter().map(|m| LinearSet::new(image(m), periods.clone())).collect())
}

/// A system `A·x = rhs` over ℕ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiophSystem {
    pub a: Vec<Vec<i64>>,
    pub rhs: Vec<i64>,
}

impl DiophSystem {
    pub fn new(a: Vec<Vec<i64>>, rhs: Vec<i64>) -> Result<Self, SemilinearError> {
        if a.len() != rhs.len() {
            return Err(SemilinearError::Dimension { expected: a.len(), found: rhs.len() });
        }
        if let Some(first) = a.first() {
            for row in &a {
                if row.len() != first.len() {
                    return Err(SemilinearError::Dimension { expected: first.len(), found: row.len() });
                }
            }
        }
        Ok(DiophSystem { a, rhs })
    }

    pub fn num_vars(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }
}

/// Solution set of a Diophantine system over variables `x1, …, xd`.
pub fn solve_dioph_nonneg(sys: &DiophSystem) -> Result<SemilinearSet, SemilinearError> {
    solve_dioph_nonneg_with_cap(sys, DEFAULT_DIOPH_CAP)
}

pub fn solve_dioph_nonneg_with_cap(sys: &DiophSystem, cap: usize) -> Result<SemilinearSet, SemilinearError> {
    let d = sys.num_vars();
    let vars = (1..=d).map(|i| format!("x{i}")).collect();
    let (mins, hilbert) = dioph_basis(&sys.a, &sys.rhs, d, cap)?;
    let components = mins.into_iter().map(|m| LinearSet::new(m, hilbert.clone())).collect();
    Ok(SemilinearSet { vars, components })
}

/// Minimal solutions of `A·x = rhs` and the Hilbert basis of `A·x = 0`, both over ℕ^d.
///
/// The inhomogeneous system is homogenised with an extra coordinate `t`
/// (column `-rhs`), and the Contejean–Devie completion is run with `t ≤ 1`:
/// basis elements with `t = 1` are the minimal solutions, those with `t = 0`
/// form the Hilbert basis. `cap` bounds the total number of vectors explored.
pub fn dioph_basis(a: &[Vec<i64>], rhs: &[i64], d: usize, cap: usize) -> Result<(Basis, Basis), SemilinearError> {
    let rows = rhs.len();
    let n = d + 1;
    let col = |j: usize| -> Vec<i64> { (0..rows).map(|r| if j < d { a[r][j] } else { -rhs[r] }).collect() };
    let cols: Vec<Vec<i64>> = (0..n).map(col).collect();
    let mut found: Vec<Vec<i64>> = Vec::new();
    let mut explored = 0usize;
    let mut frontier: Vec<(Vec<i64>, Vec<i64>)> = (0..n).map(|j| (unit(n, j), cols[j].clone())).collect();
    while !frontier.is_empty() {
        let mut fresh_solutions = Vec::new();
        let mut open = Vec::new();
        for (x, ax) in frontier {
            if ax.iter().all(|&c| c == 0) {
                fresh_solutions.push(x);
            } else {
                open.push((x, ax));
            }
        }
        found.extend(fresh_solutions);
        let mut next: BTreeSet<Vec<i64>> = BTreeSet::new();
        let mut next_items = Vec::new();
        for (x, ax) in &open {
            for (j, cj) in cols.iter().enumerate() {
                let dot: i64 = ax.iter().zip(cj).map(|(p, q)| p * q).sum();
                if dot >= 0 {
                    continue;
                }
                if j == d && x[d] >= 1 {
                    continue;
                }
                let mut y = x.clone();
                y[j] += 1;
                if found.iter().any(|f| f.iter().zip(&y).all(|(p, q)| p <= q)) {
                    continue;
                }
                if next.insert(y.clone()) {
                    let ay: Vec<i64> = ax.iter().zip(cj).map(|(p, q)| p + q).collect();
                    next_items.push((y, ay));
                    explored += 1;
                    if explored > cap {
                        return Err(SemilinearError::BudgetExhausted { cap });
                    }
                }
            }
        }
        frontier = next_items;
    }
    let mut mins = Vec::new();
    let mut hilbert = Vec::new();
    for mut f in found {
        let t = f.pop().unwrap_or(0);
        if t == 1 {
            mins.push(f);
        } else if f.iter().any(|&c| c != 0) {
            hilbert.push(f);
        }
    }
    mins.sort();
    mins.dedup();
    hilbert.sort();
    hilbert.dedup();
    Ok((mins, hilbert))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn brute(a: &[Vec<i64>], rhs: &[i64], d: usize, n: i64) -> HashSet<Vec<i64>> {
        let mut out = HashSet::new();
        let total = (n + 1).pow(d as u32);
        for code in 0..total {
            let mut x = Vec::with_capacity(d);
            let mut c = code;
            for _ in 0..d {
                x.push(c % (n + 1));
                c /= n + 1;
            }
            if a.iter().zip(rhs).all(|(row, r)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<i64>() == *r) {
                out.insert(x);
            }
        }
        out
    }

    #[test]
    fn membership_examples() {
        let s = SemilinearSet::from_components(
            v(&["x", "y"]),
            vec![LinearSet::new(vec![0, 0], vec![vec![2, 0], vec![0, 3]])],
        )
        .unwrap();
        assert!(!s.membership(&[1, 1]).unwrap());
        assert!(s.membership(&[4, 3]).unwrap());
        let p = SemilinearSet::point(v(&["x", "y"]), vec![2, 1]);
        assert!(p.membership(&[2, 1]).unwrap());
        assert!(p.membership(&[2]).is_err());
    }

    #[test]
    fn dioph_examples() {
        let s = solve_dioph_nonneg(&DiophSystem::new(vec![vec![2, 3]], vec![7]).unwrap()).unwrap();
        assert_eq!(s.components, vec![LinearSet::point(vec![2, 1])]);
        let s = solve_dioph_nonneg(&DiophSystem::new(vec![vec![2, -3]], vec![0]).unwrap()).unwrap();
        assert_eq!(s.components, vec![LinearSet::new(vec![0, 0], vec![vec![3, 2]])]);
        let s = solve_dioph_nonneg(&DiophSystem::new(vec![vec![0]], vec![1]).unwrap()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn dioph_matches_enumeration() {
        let systems: Vec<(Vec<Vec<i64>>, Vec<i64>)> = vec![
            (vec![vec![1, -1, 2]], vec![3]),
            (vec![vec![3, -2, 0], vec![0, 1, -1]], vec![1, 0]),
            (vec![vec![2, 2, -4]], vec![2]),
            (vec![vec![1, 1, 1]], vec![5]),
            (vec![vec![5, -3]], vec![1]),
        ];
        for (a, rhs) in systems {
            let d = a[0].len();
            let s = solve_dioph_nonneg(&DiophSystem::new(a.clone(), rhs.clone()).unwrap()).unwrap();
            assert_eq!(s.points_in_box(20), brute(&a, &rhs, d, 20), "system {a:?} = {rhs:?}");
        }
    }

    #[test]
    fn dioph_cap_is_reported() {
        let err = dioph_basis(&[vec![97, -89]], &[1], 2, 5).unwrap_err();
        assert_eq!(err, SemilinearError::BudgetExhausted { cap: 5 });
    }

    #[test]
    fn intersection_examples() {
        let l = |b: i64, p: i64| {
            SemilinearSet::from_components(v(&["x"]), vec![LinearSet::new(vec![b], vec![vec![p]])]).unwrap()
        };
        let i = l(0, 2).intersect(&l(0, 3)).unwrap();
        let six = l(0, 6);
        for x in 0..=30 {
            assert_eq!(i.membership(&[x]).unwrap(), six.membership(&[x]).unwrap());
        }
        assert!(l(0, 2).intersect(&l(1, 2)).unwrap().is_empty());
    }

    #[test]
    fn intersection_aligns_by_name() {
        let a =
            SemilinearSet::from_components(v(&["x", "y"]), vec![LinearSet::new(vec![1, 0], vec![vec![1, 1]])]).unwrap();
        let b = SemilinearSet::from_components(v(&["y", "x"]), vec![LinearSet::point(vec![2, 3])]).unwrap();
        let i = a.intersect(&b).unwrap();
        assert_eq!(i.vars, v(&["x", "y"]));
        assert_eq!(i.components, vec![LinearSet::point(vec![3, 2])]);
        let c = SemilinearSet::point(v(&["z"]), vec![0]);
        assert!(a.intersect(&c).is_err());
    }

    #[test]
    fn direct_sum_restrict_affine() {
        let a = SemilinearSet::from_components(v(&["x"]), vec![LinearSet::new(vec![1], vec![vec![2]])]).unwrap();
        let b = SemilinearSet::from_components(v(&["y"]), vec![LinearSet::new(vec![0], vec![vec![3]])]).unwrap();
        let s = a.direct_sum(&b).unwrap();
        assert_eq!(s.components, vec![LinearSet::new(vec![1, 0], vec![vec![0, 3], vec![2, 0]])]);
        assert!(a.direct_sum(&a).is_err());
        assert!(a.direct_sum(&SemilinearSet::empty(v(&["z"]))).unwrap().is_empty());

        let p = SemilinearSet::point(v(&["x", "y"]), vec![2, 1]);
        assert_eq!(p.restrict(&v(&["x"])).unwrap().components, vec![LinearSet::point(vec![2])]);
        let diag =
            SemilinearSet::from_components(v(&["x", "y"]), vec![LinearSet::new(vec![0, 0], vec![vec![1, 1]])]).unwrap();
        assert_eq!(diag.restrict(&v(&["y"])).unwrap().components, vec![LinearSet::new(vec![0], vec![vec![1]])]);
        assert!(SemilinearSet::empty(v(&["x"])).restrict(&v(&["x"])).unwrap().is_empty());
        assert!(p.restrict(&v(&["w"])).is_err());

        let one = SemilinearSet::from_components(v(&["x"]), vec![LinearSet::new(vec![0], vec![vec![1]])]).unwrap();
        assert_eq!(one.affine_substitute(&[(2, 3)]).unwrap().components, vec![LinearSet::new(vec![3], vec![vec![2]])]);
        assert_eq!(a.affine_substitute(&[(3, 1)]).unwrap().components, vec![LinearSet::new(vec![4], vec![vec![6]])]);
        let four = SemilinearSet::point(v(&["x"]), vec![4]);
        assert_eq!(four.affine_substitute(&[(1, 0)]).unwrap(), four);
    }

    #[test]
    fn magnitude_examples() {
        let s =
            SemilinearSet::from_components(v(&["x", "y"]), vec![LinearSet::new(vec![2, 1], vec![vec![0, 3]])]).unwrap();
        assert_eq!(s.magnitude(), 3);
        assert_eq!(SemilinearSet::empty(v(&["x"])).magnitude(), 0);
        let u = SemilinearSet::point(v(&["x"]), vec![5])
            .union(&SemilinearSet::from_components(v(&["x"]), vec![LinearSet::new(vec![0], vec![vec![7]])]).unwrap())
            .unwrap();
        assert_eq!(u.magnitude(), 7);
    }

    #[test]
    fn json_shape() {
        let s = SemilinearSet::from_components(v(&["x"]), vec![LinearSet::new(vec![1], vec![vec![2]])]).unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"vars":["x"],"components":[{"base":[1],"periods":[[2]]}]}"#);
        let back: SemilinearSet = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
}
