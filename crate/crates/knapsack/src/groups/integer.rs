use crate::expr::{Letter, Word};
use crate::semilinear::{solve_dioph_nonneg_with_cap, DiophSystem};

use super::{Elem, Group, Knapsack, SemilinearSet, SolveCtx, SolveError};

/// ℤ on one generator.
#[derive(Clone, Debug)]
pub struct IntegerGroup {
    pub generator: String,
}

impl IntegerGroup {
    pub fn new(generator: &str) -> Self {
        IntegerGroup { generator: generator.to_string() }
    }
}

fn int(e: &Elem) -> i64 {
    match e {
        Elem::Int(n) => *n,
        other => panic!("not an integer element: {other:?}"),
    }
}

impl Group for IntegerGroup {
    fn identity(&self) -> Elem {
        Elem::Int(0)
    }

    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        Elem::Int(int(a) + int(b))
    }

    fn inv(&self, a: &Elem) -> Elem {
        Elem::Int(-int(a))
    }

    fn generators(&self) -> Vec<String> {
        vec![self.generator.clone()]
    }

    fn gen_elem(&self, name: &str) -> Option<Elem> {
        (name == self.generator).then_some(Elem::Int(1))
    }

    fn word_of(&self, e: &Elem) -> Word {
        let n = int(e);
        vec![Letter { name: self.generator.clone(), inv: n < 0 }; n.unsigned_abs() as usize]
    }

    fn norm(&self, e: &Elem) -> u64 {
        int(e).unsigned_abs()
    }

    fn order(&self, e: &Elem) -> Option<u64> {
        (int(e) == 0).then_some(1)
    }

    fn pow(&self, e: &Elem, n: u64) -> Elem {
        Elem::Int(int(e) * n as i64)
    }

    /// One linear equation `Σ p_i·x_i = −Σ t_i` over ℕ.
    fn solve_knapsack(&self, k: &Knapsack, ctx: &SolveCtx) -> Result<SemilinearSet, SolveError> {
        let row: Vec<i64> = k.factors.iter().map(|f| int(&f.period)).collect();
        let rhs = -k.factors.iter().map(|f| int(&f.tail)).sum::<i64>();
        let sys = DiophSystem::new(vec![row], vec![rhs])?;
        let sol = solve_dioph_nonneg_with_cap(&sys, ctx.budget.dioph_cap)?;
        Ok(sol.rename(k.vars())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ExponentExpression;
    use crate::groups::solve_exponent;
    use crate::semilinear::LinearSet;

    fn solve(text: &str) -> SemilinearSet {
        let g = IntegerGroup::new("t");
        let e = ExponentExpression::parse(text).unwrap();
        solve_exponent(&g, &e, &SolveCtx::sequential()).unwrap()
    }

    #[test]
    fn word_problem_examples() {
        let g = IntegerGroup::new("t");
        assert!(g.word_problem(&crate::expr::parse_word("t t t' t'")).unwrap());
        assert!(!g.word_problem(&crate::expr::parse_word("t t")).unwrap());
    }

    #[test]
    fn single_equation_examples() {
        assert_eq!(solve("t^x (t')^4").components, vec![LinearSet::point(vec![4])]);
        assert_eq!(solve("(t t)^x (t t t)^y (t')^7").components, vec![LinearSet::point(vec![2, 1])]);
        assert_eq!(solve("(t t)^x (t' t')^y").components, vec![LinearSet::new(vec![0, 0], vec![vec![1, 1]])]);
    }

    #[test]
    fn repeated_variable_and_head() {
        assert_eq!(solve("t^x t^x (t')^6").components, vec![LinearSet::point(vec![3])]);
        assert_eq!(solve("t t^x (t')^3").components, vec![LinearSet::point(vec![2])]);
    }
}
