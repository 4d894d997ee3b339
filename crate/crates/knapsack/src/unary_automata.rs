//! Finite automata for loop languages `p·u*·s`, their products, and the set
//! of accepted lengths of an automaton read as a unary one.

use std::collections::HashMap;

use thiserror::Error;

use crate::semilinear::{LinearSet, SemilinearSet};

/// Default cap on the number of distinct state subsets visited by
/// [`unary_length_set`].
pub const DEFAULT_TRAJECTORY_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomataError {
    #[error("budget exhausted: unary trajectory exceeded {0} subsets")]
    TrajectoryCap(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Sym(u32),
    Tick,
    Eps,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Nfa {
    pub states: usize,
    pub trans: Vec<(usize, Label, usize)>,
    pub initial: Vec<usize>,
    pub finals: Vec<usize>,
}

type Bits = Vec<u64>;

fn bits_new(n: usize) -> Bits {
    vec![0; n.div_ceil(64).max(1)]
}

fn bit_set(b: &mut Bits, i: usize) -> bool {
    let (w, m) = (i / 64, 1u64 << (i % 64));
    let fresh = b[w] & m == 0;
    b[w] |= m;
    fresh
}

fn bit_get(b: &Bits, i: usize) -> bool {
    b[i / 64] & (1u64 << (i % 64)) != 0
}

impl Nfa {
    fn outgoing(&self) -> Vec<Vec<(Label, usize)>> {
        let mut out = vec![Vec::new(); self.states];
        for &(p, l, q) in &self.trans {
            out[p].push((l, q));
        }
        out
    }

    fn closure(out: &[Vec<(Label, usize)>], set: &mut Bits) {
        let mut stack: Vec<usize> = (0..out.len()).filter(|&i| bit_get(set, i)).collect();
        while let Some(p) = stack.pop() {
            for &(l, q) in &out[p] {
                if l == Label::Eps && bit_set(set, q) {
                    stack.push(q);
                }
            }
        }
    }

    fn start(&self, out: &[Vec<(Label, usize)>]) -> Bits {
        let mut s = bits_new(self.states);
        for &i in &self.initial {
            bit_set(&mut s, i);
        }
        Self::closure(out, &mut s);
        s
    }

    fn step(&self, out: &[Vec<(Label, usize)>], s: &Bits, pred: impl Fn(Label) -> bool) -> Bits {
        let mut n = bits_new(self.states);
        for (p, edges) in out.iter().enumerate().take(self.states) {
            if bit_get(s, p) {
                for &(l, q) in edges {
                    if l != Label::Eps && pred(l) {
                        bit_set(&mut n, q);
                    }
                }
            }
        }
        Self::closure(out, &mut n);
        n
    }

    fn accepting(&self, s: &Bits) -> bool {
        self.finals.iter().any(|&f| bit_get(s, f))
    }

    /// Acceptance of a word over symbol labels.
    pub fn accepts(&self, word: &[u32]) -> bool {
        let out = self.outgoing();
        let mut s = self.start(&out);
        for &a in word {
            s = self.step(&out, &s, |l| l == Label::Sym(a));
        }
        self.accepting(&s)
    }

    /// `acc[ℓ]` is true iff some accepted word has length `ℓ` (`ℓ ≤ max`),
    /// computed by direct simulation with every non-ε label as one step.
    pub fn accepted_lengths_naive(&self, max: usize) -> Vec<bool> {
        let out = self.outgoing();
        let mut s = self.start(&out);
        let mut acc = Vec::with_capacity(max + 1);
        for _ in 0..=max {
            acc.push(self.accepting(&s));
            s = self.step(&out, &s, |_| true);
        }
        acc
    }

    /// Synchronous product: symbols must agree, ticks pair with ticks, and
    /// ε-moves of either side happen alone.
    pub fn product(&self, other: &Nfa) -> Nfa {
        let m = other.states;
        let id = |p: usize, q: usize| p * m + q;
        let mut trans = Vec::new();
        for &(p, l, p2) in &self.trans {
            if l == Label::Eps {
                for q in 0..m {
                    trans.push((id(p, q), Label::Eps, id(p2, q)));
                }
                continue;
            }
            for &(q, l2, q2) in &other.trans {
                if l2 == l {
                    trans.push((id(p, q), l, id(p2, q2)));
                }
            }
        }
        for &(q, l, q2) in &other.trans {
            if l == Label::Eps {
                for p in 0..self.states {
                    trans.push((id(p, q), Label::Eps, id(p, q2)));
                }
            }
        }
        let pairs = |a: &[usize], b: &[usize]| -> Vec<usize> {
            a.iter().flat_map(|&p| b.iter().map(move |&q| id(p, q))).collect()
        };
        Nfa {
            states: self.states * m,
            trans,
            initial: pairs(&self.initial, &other.initial),
            finals: pairs(&self.finals, &other.finals),
        }
    }
}

/// Accepts exactly `{p·u^x·s : x ≥ 0}` with `|p|+|u|+|s|` states.
pub fn loop_language_nfa(p: &[u32], u: &[u32], s: &[u32]) -> Nfa {
    assert!(!u.is_empty(), "loop period must be nonempty");
    // states: p-chain 0..|p|, hub = |p|, cycle interior, s-chain
    let hub = p.len();
    let mut trans = Vec::new();
    for (i, &a) in p.iter().enumerate() {
        trans.push((i, Label::Sym(a), i + 1));
    }
    let mut next = hub + 1;
    let mut prev = hub;
    for (i, &a) in u.iter().enumerate() {
        let to = if i + 1 == u.len() { hub } else { next };
        trans.push((prev, Label::Sym(a), to));
        if to != hub {
            prev = to;
            next += 1;
        }
    }
    let mut prev = hub;
    for &a in s {
        trans.push((prev, Label::Sym(a), next));
        prev = next;
        next += 1;
    }
    Nfa { states: next, trans, initial: vec![0], finals: vec![prev] }
}

/// A union of arithmetic progressions `{b + c·z : z ≥ 0}`; `c = 0` is a singleton.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProgressionSet {
    pub progs: Vec<(u64, u64)>,
}

impl ProgressionSet {
    pub fn contains(&self, l: u64) -> bool {
        self.progs.iter().any(|&(b, c)| l == b || (c > 0 && l > b && (l - b).is_multiple_of(c)))
    }
}

/// Accepted lengths of `n`, reading every non-ε label as the same letter.
///
/// Follows the trajectory of reachable state subsets until a subset repeats
/// (tail `τ`, cycle `π`): accepted lengths below `τ` become singletons, and
/// accepted lengths in `[τ, τ+π)` become progressions of period `π`.
pub fn unary_length_set(n: &Nfa, cap: usize) -> Result<ProgressionSet, AutomataError> {
    let out = n.outgoing();
    let mut seen: HashMap<Bits, usize> = HashMap::new();
    let mut traj: Vec<bool> = Vec::new();
    let mut s = n.start(&out);
    let (tau, pi) = loop {
        if let Some(&first) = seen.get(&s) {
            break (first, traj.len() - first);
        }
        if seen.len() >= cap {
            return Err(AutomataError::TrajectoryCap(cap));
        }
        seen.insert(s.clone(), traj.len());
        traj.push(n.accepting(&s));
        s = n.step(&out, &s, |_| true);
    };
    let mut progs = Vec::new();
    for (l, &acc) in traj.iter().enumerate() {
        if acc {
            progs.push((l as u64, if l < tau { 0 } else { pi as u64 }));
        }
    }
    Ok(ProgressionSet { progs })
}

/// `(x, y) = (x0 + dx·z, y0 + dy·z)`, `z ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XyLine {
    pub x0: u64,
    pub dx: u64,
    pub y0: u64,
    pub dy: u64,
}

/// Converts accepted lengths `ℓ = |ps| + x|u| = |qt| + y|v|` into `(x, y)` lines.
pub fn lengths_to_xy(p: &ProgressionSet, ps: u64, u: u64, qt: u64, v: u64) -> Vec<XyLine> {
    assert!(u >= 1 && v >= 1);
    let mut out = Vec::new();
    for &(b, c) in &p.progs {
        if b < ps || b < qt || !(b - ps).is_multiple_of(u) || !(b - qt).is_multiple_of(v) || c % u != 0 || c % v != 0 {
            continue;
        }
        let line = XyLine { x0: (b - ps) / u, dx: c / u, y0: (b - qt) / v, dy: c / v };
        if !out.contains(&line) {
            out.push(line);
        }
    }
    out
}

pub fn lines_to_set(lines: &[XyLine], x: &str, y: &str) -> SemilinearSet {
    let components = lines
        .iter()
        .map(|l| LinearSet::new(vec![l.x0 as i64, l.y0 as i64], vec![vec![l.dx as i64, l.dy as i64]]))
        .collect();
    let mut s = SemilinearSet { vars: vec![x.to_string(), y.to_string()], components };
    s.simplify();
    s
}

/// `{(x, y) : p·u^x·s = q·v^y·t}` as words.
pub fn word_two_dim(
    p: &[u32],
    u: &[u32],
    s: &[u32],
    q: &[u32],
    v: &[u32],
    t: &[u32],
    cap: usize,
) -> Result<Vec<XyLine>, AutomataError> {
    let prod = loop_language_nfa(p, u, s).product(&loop_language_nfa(q, v, t));
    let lens = unary_length_set(&prod, cap)?;
    Ok(lengths_to_xy(&lens, (p.len() + s.len()) as u64, u.len() as u64, (q.len() + t.len()) as u64, v.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_nfa_examples() {
        let n = loop_language_nfa(&[], &[0], &[]);
        assert_eq!(n.states, 1);
        assert!(n.accepts(&[]) && n.accepts(&[0, 0, 0]));
        let n = loop_language_nfa(&[0], &[1], &[]);
        assert!(n.accepts(&[0]) && n.accepts(&[0, 1, 1]) && !n.accepts(&[1]));
        let n = loop_language_nfa(&[0, 1], &[1, 0, 0], &[1]);
        assert!(n.states <= 6);
        for x in 0..10 {
            let mut w = vec![0, 1];
            for _ in 0..x {
                w.extend([1, 0, 0]);
            }
            w.push(1);
            assert!(n.accepts(&w));
            w.pop();
            assert!(!n.accepts(&w));
        }
    }

    #[test]
    fn unary_examples() {
        let star = Nfa { states: 1, trans: vec![(0, Label::Tick, 0)], initial: vec![0], finals: vec![0] };
        assert_eq!(unary_length_set(&star, 100).unwrap().progs, vec![(0, 1)]);
        let three = Nfa {
            states: 4,
            trans: (0..3).map(|i| (i, Label::Tick, i + 1)).collect(),
            initial: vec![0],
            finals: vec![3],
        };
        assert_eq!(unary_length_set(&three, 100).unwrap().progs, vec![(3, 0)]);
        let stem = Nfa {
            states: 3,
            trans: vec![(0, Label::Tick, 1), (1, Label::Tick, 2), (2, Label::Tick, 1)],
            initial: vec![0],
            finals: vec![1],
        };
        assert_eq!(unary_length_set(&stem, 100).unwrap().progs, vec![(1, 2)]);
        assert_eq!(unary_length_set(&stem, 1), Err(AutomataError::TrajectoryCap(1)));
    }

    #[test]
    fn lengths_to_xy_examples() {
        let all = ProgressionSet { progs: vec![(0, 1)] };
        assert_eq!(lengths_to_xy(&all, 0, 1, 0, 1), vec![XyLine { x0: 0, dx: 1, y0: 0, dy: 1 }]);
        let low = ProgressionSet { progs: vec![(1, 0)] };
        assert!(lengths_to_xy(&low, 2, 1, 0, 1).is_empty());
        let six = ProgressionSet { progs: vec![(0, 6)] };
        assert_eq!(lengths_to_xy(&six, 0, 2, 0, 3), vec![XyLine { x0: 0, dx: 3, y0: 0, dy: 2 }]);
    }

    #[test]
    fn word_pipeline_small() {
        // a(ba)^x = (ab)^y a
        let lines = word_two_dim(&[0], &[1, 0], &[], &[], &[0, 1], &[0], 1000).unwrap();
        let s = lines_to_set(&lines, "x", "y");
        for x in 0..8 {
            for y in 0..8 {
                assert_eq!(s.membership(&[x, y]).unwrap(), x == y);
            }
        }
    }
}
