//! Ground truth by enumeration: every valuation in the box `[0, N]^X` is
//! evaluated with the group's own multiplication and checked for identity.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::expr::ExponentExpression;
use crate::groups::{Elem, Group, GroupError};
use crate::par::Exec;
use crate::semilinear::{SemilinearError, SemilinearSet};

/// All `σ ∈ [0, n]^X` (variables in first-occurrence order) with `σ(e) = 1`,
/// in mixed-radix order.
pub fn brute_force_solutions(
    g: &dyn Group,
    e: &ExponentExpression,
    n: u64,
    exec: Exec,
) -> Result<Vec<Vec<i64>>, GroupError> {
    let vars = e.vars();
    let head = g.eval_word(&e.head)?;
    let mut factors = Vec::with_capacity(e.factors.len());
    for f in &e.factors {
        let u = g.eval_word(&f.period)?;
        let mut pows = vec![g.identity()];
        for i in 0..n as usize {
            pows.push(g.mul(&pows[i], &u));
        }
        let slot = vars.iter().position(|v| *v == f.var).expect("variable listed");
        factors.push((slot, pows, g.eval_word(&f.tail)?));
    }
    let side = n as usize + 1;
    let total = side.checked_pow(vars.len() as u32).expect("box too large");
    let point = |mut idx: usize| -> Vec<i64> {
        let mut p = vec![0; vars.len()];
        for c in p.iter_mut().rev() {
            *c = (idx % side) as i64;
            idx /= side;
        }
        p
    };
    let hits = exec.map_range(total, |idx| {
        let p = point(idx);
        let mut acc: Elem = head.clone();
        for (slot, pows, tail) in &factors {
            acc = g.mul(&acc, &pows[p[*slot] as usize]);
            acc = g.mul(&acc, tail);
        }
        g.is_identity(&acc).then_some(p)
    });
    Ok(hits.into_iter().flatten().collect())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareReport {
    pub vars: Vec<String>,
    pub box_bound: u64,
    pub points_checked: u64,
    /// Solutions found by enumeration that the set does not contain.
    pub missing: Vec<Vec<i64>>,
    /// Points of the set that are not solutions.
    pub spurious: Vec<Vec<i64>>,
}

impl CompareReport {
    pub fn pass(&self) -> bool {
        self.missing.is_empty() && self.spurious.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Semilinear(#[from] SemilinearError),
}

/// Mismatches in both directions between `set` and the enumerated solutions
/// on `[0, n]^X`. `set` may list its variables in any order.
pub fn compare(
    g: &dyn Group,
    e: &ExponentExpression,
    set: &SemilinearSet,
    n: u64,
    exec: Exec,
) -> Result<CompareReport, CompareError> {
    let vars = e.vars();
    let set = set.reorder(&vars)?;
    let truth: BTreeSet<Vec<i64>> = brute_force_solutions(g, e, n, exec)?.into_iter().collect();
    let claimed: BTreeSet<Vec<i64>> = set.points_in_box(n as i64).into_iter().collect();
    Ok(CompareReport {
        points_checked: (n + 1).pow(vars.len() as u32),
        vars,
        box_bound: n,
        missing: truth.difference(&claimed).cloned().collect(),
        spurious: claimed.difference(&truth).cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{FiniteGroup, IntegerGroup};
    use crate::semilinear::LinearSet;

    #[test]
    fn integer_example() {
        let g = IntegerGroup::new("t");
        let e = ExponentExpression::parse("(t)^x t' t' t' t'").unwrap();
        assert_eq!(brute_force_solutions(&g, &e, 6, Exec::Sequential).unwrap(), vec![vec![4]]);
    }

    #[test]
    fn cyclic_example() {
        let g = FiniteGroup::cyclic(2, "a");
        let e = ExponentExpression::parse("(a)^x").unwrap();
        assert_eq!(brute_force_solutions(&g, &e, 5, Exec::Parallel).unwrap(), vec![vec![0], vec![2], vec![4]]);
    }

    #[test]
    fn unsatisfiable_is_empty() {
        let g = FiniteGroup::cyclic(2, "a");
        let e = ExponentExpression::parse("(a a)^x a").unwrap();
        assert!(brute_force_solutions(&g, &e, 8, Exec::Sequential).unwrap().is_empty());
    }

    #[test]
    fn perturbed_set_fails_with_witnesses() {
        let g = FiniteGroup::cyclic(2, "a");
        let e = ExponentExpression::parse("(a)^x").unwrap();
        let good =
            SemilinearSet::from_components(vec!["x".into()], vec![LinearSet::new(vec![0], vec![vec![2]])]).unwrap();
        assert!(compare(&g, &e, &good, 12, Exec::Sequential).unwrap().pass());
        let bad =
            SemilinearSet::from_components(vec!["x".into()], vec![LinearSet::new(vec![1], vec![vec![2]])]).unwrap();
        let r = compare(&g, &e, &bad, 4, Exec::Sequential).unwrap();
        assert_eq!(r.missing, vec![vec![0], vec![2], vec![4]]);
        assert_eq!(r.spurious, vec![vec![1], vec![3]]);
    }

    #[test]
    fn empty_against_empty() {
        let g = FiniteGroup::cyclic(2, "a");
        let e = ExponentExpression::parse("(a a)^x a").unwrap();
        assert!(compare(&g, &e, &SemilinearSet::empty(vec!["x".into()]), 6, Exec::Sequential).unwrap().pass());
    }
}
