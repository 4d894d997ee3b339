use std::collections::HashMap;

use crate::expr::Word;
use crate::semilinear::LinearSet;

use super::{bfs_words, Elem, Group, Knapsack, SemilinearSet, SolveCtx, SolveError};

/// A finite group given by its Cayley table. Elements are indices.
#[derive(Clone, Debug)]
pub struct FiniteGroup {
    pub names: Vec<String>,
    pub table: Vec<Vec<u32>>,
    pub identity: u32,
    pub inverses: Vec<u32>,
    pub generators: Vec<(String, u32)>,
    words: Vec<Word>,
    orders: Vec<u64>,
}

fn idx(e: &Elem) -> u32 {
    match e {
        Elem::Fin(i) => *i,
        other => panic!("not a finite-group element: {other:?}"),
    }
}

impl FiniteGroup {
    /// Assumes the table has already been validated (see `desc`).
    pub fn from_table(
        names: Vec<String>,
        table: Vec<Vec<u32>>,
        identity: u32,
        inverses: Vec<u32>,
        generators: Vec<(String, u32)>,
    ) -> Self {
        let n = names.len();
        let gens: Vec<(String, usize)> = generators.iter().map(|(s, i)| (s.clone(), *i as usize)).collect();
        let words = bfs_words(n, identity as usize, &gens, |a, b| table[a][b] as usize, |a| inverses[a] as usize)
            .into_iter()
            .map(|w| w.expect("generators span the group"))
            .collect();
        let orders = (0..n as u32)
            .map(|g| {
                let (mut acc, mut k) = (g, 1u64);
                while acc != identity {
                    acc = table[acc as usize][g as usize];
                    k += 1;
                }
                k
            })
            .collect();
        FiniteGroup { names, table, identity, inverses, generators, words, orders }
    }

    /// Cyclic group `ℤ/n` on one generator named `gen`.
    pub fn cyclic(n: u32, gen: &str) -> Self {
        let names = (0..n).map(|i| if i == 0 { "1".to_string() } else { format!("{gen}{i}") }).collect();
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let inverses = (0..n).map(|a| (n - a) % n).collect();
        FiniteGroup::from_table(names, table, 0, inverses, vec![(gen.to_string(), 1 % n)])
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }
}

impl Group for FiniteGroup {
    fn identity(&self) -> Elem {
        Elem::Fin(self.identity)
    }

    fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        Elem::Fin(self.table[idx(a) as usize][idx(b) as usize])
    }

    fn inv(&self, a: &Elem) -> Elem {
        Elem::Fin(self.inverses[idx(a) as usize])
    }

    fn generators(&self) -> Vec<String> {
        self.generators.iter().map(|(s, _)| s.clone()).collect()
    }

    fn gen_elem(&self, name: &str) -> Option<Elem> {
        self.generators.iter().find(|(s, _)| s == name).map(|(_, i)| Elem::Fin(*i))
    }

    fn word_of(&self, e: &Elem) -> Word {
        self.words[idx(e) as usize].clone()
    }

    fn order(&self, e: &Elem) -> Option<u64> {
        Some(self.orders[idx(e) as usize])
    }

    /// `g^x` depends only on `x mod ord(g)`: enumerate residue tuples and
    /// keep those whose product is 1, each with periods `ord(g_i)·e_i`.
    fn solve_knapsack(&self, k: &Knapsack, _ctx: &SolveCtx) -> Result<SemilinearSet, SolveError> {
        let d = k.factors.len();
        let ords: Vec<u64> = k.factors.iter().map(|f| self.orders[idx(&f.period) as usize]).collect();
        let periods: Vec<Vec<i64>> = (0..d)
            .map(|i| {
                let mut p = vec![0; d];
                p[i] = ords[i] as i64;
                p
            })
            .collect();
        // powers[i][r] = period_i^r · tail_i
        let step: Vec<Vec<u32>> = k
            .factors
            .iter()
            .zip(&ords)
            .map(|(f, &o)| {
                let g = idx(&f.period);
                let t = idx(&f.tail);
                let mut acc = self.identity;
                (0..o)
                    .map(|_| {
                        let v = self.table[acc as usize][t as usize];
                        acc = self.table[acc as usize][g as usize];
                        v
                    })
                    .collect()
            })
            .collect();
        // Dynamic programme over prefixes: state = product so far.
        let mut states: HashMap<u32, Vec<Vec<i64>>> = HashMap::from([(self.identity, vec![vec![]])]);
        for s in &step {
            let mut next: HashMap<u32, Vec<Vec<i64>>> = HashMap::new();
            for (acc, residues) in &states {
                for (r, v) in s.iter().enumerate() {
                    let prod = self.table[*acc as usize][*v as usize];
                    let entry = next.entry(prod).or_default();
                    for res in residues {
                        let mut res2 = res.clone();
                        res2.push(r as i64);
                        entry.push(res2);
                    }
                }
            }
            states = next;
        }
        let mut components: Vec<LinearSet> = states
            .remove(&self.identity)
            .unwrap_or_default()
            .into_iter()
            .map(|base| LinearSet::new(base, periods.clone()))
            .collect();
        components.sort();
        Ok(SemilinearSet { vars: k.vars(), components })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_word, ExponentExpression};
    use crate::groups::solve_exponent;

    fn solve(g: &FiniteGroup, text: &str) -> SemilinearSet {
        let e = ExponentExpression::parse(text).unwrap();
        solve_exponent(g, &e, &SolveCtx::sequential()).unwrap()
    }

    #[test]
    fn cyclic_examples() {
        let z2 = FiniteGroup::cyclic(2, "a");
        assert!(!z2.word_problem(&parse_word("a a a")).unwrap());
        assert_eq!(solve(&z2, "a^x a").components, vec![LinearSet::new(vec![1], vec![vec![2]])]);
        assert_eq!(solve(&z2, "a^x").components, vec![LinearSet::new(vec![0], vec![vec![2]])]);
        let z3 = FiniteGroup::cyclic(3, "b");
        assert_eq!(solve(&z3, "b^x").components, vec![LinearSet::new(vec![0], vec![vec![3]])]);
        let s = solve(&z2, "a^x a^y a");
        let bases: Vec<Vec<i64>> = s.components.iter().map(|c| c.base.clone()).collect();
        assert_eq!(bases, vec![vec![0, 1], vec![1, 0]]);
        assert!(s.components.iter().all(|c| c.periods == vec![vec![0, 2], vec![2, 0]]));
    }

    #[test]
    fn magnitude_bounded_by_order() {
        let z3 = FiniteGroup::cyclic(3, "b");
        let s = solve(&z3, "b^x (b b)^y b");
        assert!(s.magnitude() <= 3);
    }

    #[test]
    fn geodesic_words() {
        let z4 = FiniteGroup::cyclic(4, "a");
        assert_eq!(z4.word_of(&Elem::Fin(3)).len(), 1);
        assert_eq!(z4.word_of(&Elem::Fin(2)).len(), 2);
        assert_eq!(z4.order(&Elem::Fin(2)), Some(2));
    }
}
