//! JSON descriptions of groups and their validation.
//!
//! ```json
//! {"type": "graph_product",
//!  "vertices": [{"type": "cyclic", "order": 2, "generator": "a"},
//!               {"type": "cyclic", "order": 2, "generator": "b"}],
//!  "edges": [[0, 1]]}
//! ```

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Letter, Word};
use crate::finite_ext::FiniteExtGroup;
use crate::gp_solver::GraphProductGroup;
use crate::hnn::{AmalgamGroup, HnnGroup};
use crate::trace::Independence;

use super::{Elem, FiniteGroup, Group, IntegerGroup};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDesc {
    /// Coset representative on the left.
    pub c: String,
    /// Generator of the extension.
    pub a: String,
    /// Word over the subgroup's generators.
    #[serde(default)]
    pub w: Word,
    /// Resulting coset representative.
    pub d: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GroupDesc {
    Integer {
        #[serde(default = "default_int_gen")]
        generator: String,
    },
    /// `ℤ/order` on one generator.
    Cyclic {
        order: u32,
        generator: String,
    },
    Finite {
        elements: Vec<String>,
        table: Vec<Vec<u32>>,
        generators: Vec<String>,
        #[serde(default)]
        inverses: Option<Vec<u32>>,
    },
    GraphProduct {
        vertices: Vec<GroupDesc>,
        #[serde(default)]
        edges: Vec<(usize, usize)>,
    },
    FreeProduct {
        factors: Vec<GroupDesc>,
    },
    /// `⟨base, t ∣ t⁻¹·a[i]·t = b[i]⟩`; the lists are words over the base.
    Hnn {
        base: Box<GroupDesc>,
        a: Vec<Word>,
        b: Vec<Word>,
        #[serde(default = "default_stable")]
        stable: String,
    },
    /// `left *_A right`, identifying `left_sub[i]` with `right_sub[i]`.
    Amalgam {
        left: Box<GroupDesc>,
        right: Box<GroupDesc>,
        left_sub: Vec<Word>,
        right_sub: Vec<Word>,
    },
    FiniteExt {
        base: Box<GroupDesc>,
        cosets: Vec<String>,
        rules: Vec<RuleDesc>,
    },
}

fn default_int_gen() -> String {
    "t".into()
}

fn default_stable() -> String {
    "t".into()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DescError {
    #[error("JSON: {0}")]
    Json(String),
    #[error("not a finite_ext description")]
    NotFiniteExt,
    #[error("finite group table row {row} has {len} entries, expected {expected}")]
    TableShape { row: usize, len: usize, expected: usize },
    #[error("finite group table cell ({row}, {col}) = {value} is out of range")]
    TableEntry { row: usize, col: usize, value: u32 },
    #[error("finite group table has no identity element")]
    NoIdentity,
    #[error("associativity fails at ({a}·{b})·{c}")]
    NotAssociative { a: usize, b: usize, c: usize },
    #[error("element {0} has no inverse in the table")]
    NoInverse(usize),
    #[error("given inverse of element {elem} is {given}, table says {actual}")]
    BadInverse { elem: usize, given: u32, actual: u32 },
    #[error("generators do not generate all {0} elements")]
    NotGenerating(usize),
    #[error("unknown element name `{0}`")]
    UnknownElement(String),
    #[error("generator `{0}` occurs in more than one factor")]
    DuplicateGenerator(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("edge ({0}, {1}) refers to a missing vertex")]
    BadEdge(usize, usize),
    #[error("{what}: lists have lengths {left} and {right}")]
    LengthMismatch { what: &'static str, left: usize, right: usize },
    #[error("{what}: entry {index} repeats an earlier element")]
    Repeated { what: &'static str, index: usize },
    #[error("{what}: product of entries {i} and {j} leaves the subgroup")]
    NotClosed { what: &'static str, i: usize, j: usize },
    #[error("{what}: map is not a homomorphism at entries ({i}, {j})")]
    NotHomomorphism { what: &'static str, i: usize, j: usize },
    #[error("at least one factor is required")]
    Empty,
    #[error("coset list must start with `1`")]
    CosetIdentity,
    #[error("missing rule for coset `{c}` and generator `{a}`")]
    MissingRule { c: String, a: String },
    #[error("duplicate rule for coset `{c}` and generator `{a}`")]
    DuplicateRule { c: String, a: String },
    #[error("generator `{0}` does not permute the cosets")]
    NotPermutation(String),
    #[error("identity coset rule for base generator `{0}` must map back to `1`")]
    BaseRule(String),
}

fn index_of(names: &[String], s: &str) -> Result<u32, DescError> {
    names.iter().position(|n| n == s).map(|i| i as u32).ok_or_else(|| DescError::UnknownElement(s.into()))
}

fn build_finite(
    elements: &[String],
    table: &[Vec<u32>],
    generators: &[String],
    inverses: Option<&[u32]>,
) -> Result<FiniteGroup, DescError> {
    let n = elements.len();
    if table.len() != n {
        return Err(DescError::TableShape { row: table.len(), len: 0, expected: n });
    }
    for (r, row) in table.iter().enumerate() {
        if row.len() != n {
            return Err(DescError::TableShape { row: r, len: row.len(), expected: n });
        }
        for (c, &v) in row.iter().enumerate() {
            if v as usize >= n {
                return Err(DescError::TableEntry { row: r, col: c, value: v });
            }
        }
    }
    let id = (0..n)
        .find(|&e| (0..n).all(|x| table[e][x] as usize == x && table[x][e] as usize == x))
        .ok_or(DescError::NoIdentity)?;
    for a in 0..n {
        for b in 0..n {
            let ab = table[a][b] as usize;
            for c in 0..n {
                if table[ab][c] != table[a][table[b][c] as usize] {
                    return Err(DescError::NotAssociative { a, b, c });
                }
            }
        }
    }
    let mut inv = Vec::with_capacity(n);
    for (a, row) in table.iter().enumerate().take(n) {
        let i = (0..n).find(|&b| row[b] as usize == id).ok_or(DescError::NoInverse(a))?;
        inv.push(i as u32);
    }
    if let Some(given) = inverses {
        for (a, (&g, &actual)) in given.iter().zip(&inv).enumerate() {
            if g != actual {
                return Err(DescError::BadInverse { elem: a, given: g, actual });
            }
        }
    }
    let gens: Vec<(String, u32)> =
        generators.iter().map(|g| index_of(elements, g).map(|i| (g.clone(), i))).collect::<Result<_, _>>()?;
    let mut reached = HashSet::from([id as u32]);
    let mut stack = vec![id as u32];
    while let Some(x) = stack.pop() {
        for (_, gi) in &gens {
            for y in [table[x as usize][*gi as usize], table[x as usize][inv[*gi as usize] as usize]] {
                if reached.insert(y) {
                    stack.push(y);
                }
            }
        }
    }
    if reached.len() != n {
        return Err(DescError::NotGenerating(n));
    }
    Ok(FiniteGroup::from_table(elements.to_vec(), table.to_vec(), id as u32, inv, gens))
}

fn check_disjoint(groups: &[Arc<dyn Group>], extra: &[&str]) -> Result<(), DescError> {
    let mut seen: HashSet<String> = extra.iter().map(|s| s.to_string()).collect();
    for g in groups {
        for name in g.generators() {
            if !seen.insert(name.clone()) {
                return Err(DescError::DuplicateGenerator(name));
            }
        }
    }
    Ok(())
}

fn eval_words(g: &dyn Group, ws: &[Word]) -> Result<Vec<Elem>, DescError> {
    ws.iter().map(|w| g.eval_word(w).map_err(|e| DescError::UnknownGenerator(e.to_string()))).collect()
}

/// Checks that `a` is a subgroup and `a[i] ↦ b[i]` an isomorphism onto the
/// subgroup `b`; adds `1 ↦ 1` when missing.
pub(crate) fn check_iso(
    ga: &dyn Group,
    gb: &dyn Group,
    a: &mut Vec<Elem>,
    b: &mut Vec<Elem>,
    what: &'static str,
) -> Result<(), DescError> {
    if a.len() != b.len() {
        return Err(DescError::LengthMismatch { what, left: a.len(), right: b.len() });
    }
    let (ia, ib) = (ga.identity(), gb.identity());
    match (a.iter().position(|x| *x == ia), b.iter().position(|x| *x == ib)) {
        (None, None) => {
            a.insert(0, ia);
            b.insert(0, ib);
        }
        (Some(i), Some(j)) if i == j => {}
        (Some(i), _) | (_, Some(i)) => return Err(DescError::NotHomomorphism { what, i, j: i }),
    }
    for (list, w) in [(&*a, "first subgroup"), (&*b, "second subgroup")] {
        let mut seen = HashSet::new();
        for (i, x) in list.iter().enumerate() {
            if !seen.insert(x.clone()) {
                return Err(DescError::Repeated { what: w, index: i });
            }
        }
    }
    let pos_a: HashMap<&Elem, usize> = a.iter().enumerate().map(|(i, x)| (x, i)).collect();
    for i in 0..a.len() {
        for j in 0..a.len() {
            let k = *pos_a.get(&ga.mul(&a[i], &a[j])).ok_or(DescError::NotClosed { what, i, j })?;
            if gb.mul(&b[i], &b[j]) != b[k] {
                return Err(DescError::NotHomomorphism { what, i, j });
            }
        }
    }
    Ok(())
}

impl GroupDesc {
    pub fn from_json(text: &str) -> Result<GroupDesc, DescError> {
        serde_json::from_str(text).map_err(|e| DescError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptions serialize")
    }

    /// Builds a `finite_ext` description as its concrete type.
    pub fn build_finite_ext(&self) -> Result<FiniteExtGroup, DescError> {
        match self {
            GroupDesc::FiniteExt { base, cosets, rules } => build_finite_ext(base.build()?, cosets, rules),
            _ => Err(DescError::NotFiniteExt),
        }
    }

    /// Validates the description and builds the group.
    pub fn build(&self) -> Result<Arc<dyn Group>, DescError> {
        Ok(match self {
            GroupDesc::Integer { generator } => Arc::new(IntegerGroup::new(generator)),
            GroupDesc::Cyclic { order, generator } => {
                if *order == 0 {
                    return Err(DescError::NoIdentity);
                }
                Arc::new(FiniteGroup::cyclic(*order, generator))
            }
            GroupDesc::Finite { elements, table, generators, inverses } => {
                Arc::new(build_finite(elements, table, generators, inverses.as_deref())?)
            }
            GroupDesc::GraphProduct { vertices, edges } => {
                if vertices.is_empty() {
                    return Err(DescError::Empty);
                }
                let groups: Vec<Arc<dyn Group>> = vertices.iter().map(|v| v.build()).collect::<Result<_, _>>()?;
                check_disjoint(&groups, &[])?;
                for &(a, b) in edges {
                    if a >= groups.len() || b >= groups.len() {
                        return Err(DescError::BadEdge(a, b));
                    }
                }
                let indep = Independence::new(groups.len(), edges);
                Arc::new(GraphProductGroup::new(groups, indep))
            }
            GroupDesc::FreeProduct { factors } => {
                GroupDesc::GraphProduct { vertices: factors.clone(), edges: vec![] }.build()?
            }
            GroupDesc::Hnn { base, a, b, stable } => {
                let g = base.build()?;
                check_disjoint(std::slice::from_ref(&g), &[stable.as_str()])?;
                let (mut ea, mut eb) = (eval_words(g.as_ref(), a)?, eval_words(g.as_ref(), b)?);
                check_iso(g.as_ref(), g.as_ref(), &mut ea, &mut eb, "associated subgroups")?;
                Arc::new(HnnGroup::new(g, ea, eb, stable))
            }
            GroupDesc::Amalgam { left, right, left_sub, right_sub } => {
                let (g1, g2) = (left.build()?, right.build()?);
                check_disjoint(&[g1.clone(), g2.clone()], &[])?;
                let (mut e1, mut e2) = (eval_words(g1.as_ref(), left_sub)?, eval_words(g2.as_ref(), right_sub)?);
                check_iso(g1.as_ref(), g2.as_ref(), &mut e1, &mut e2, "amalgamated subgroup")?;
                Arc::new(AmalgamGroup::new(g1, g2, &e1, &e2))
            }
            GroupDesc::FiniteExt { base, cosets, rules } => {
                let g = base.build()?;
                Arc::new(build_finite_ext(g, cosets, rules)?)
            }
        })
    }
}

fn build_finite_ext(g: Arc<dyn Group>, cosets: &[String], rules: &[RuleDesc]) -> Result<FiniteExtGroup, DescError> {
    if cosets.first().map(String::as_str) != Some("1") {
        return Err(DescError::CosetIdentity);
    }
    let extra: Vec<&str> = cosets[1..].iter().map(String::as_str).collect();
    check_disjoint(std::slice::from_ref(&g), &extra)?;
    let base_gens = g.generators();
    let mut gens: Vec<String> = base_gens.clone();
    gens.extend(cosets[1..].iter().cloned());
    let l = cosets.len();
    // table[c][a] = (w, d) for generator index a
    let mut table: Vec<Vec<Option<(Word, usize)>>> = vec![vec![None; gens.len()]; l];
    for r in rules {
        let c = index_of(cosets, &r.c)? as usize;
        let d = index_of(cosets, &r.d)? as usize;
        let a = gens.iter().position(|x| *x == r.a).ok_or_else(|| DescError::UnknownGenerator(r.a.clone()))?;
        for letter in &r.w {
            if !base_gens.contains(&letter.name) {
                return Err(DescError::UnknownGenerator(letter.name.clone()));
            }
        }
        if table[c][a].is_some() {
            return Err(DescError::DuplicateRule { c: r.c.clone(), a: r.a.clone() });
        }
        if c == 0 && a < base_gens.len() && d != 0 {
            return Err(DescError::BaseRule(r.a.clone()));
        }
        table[c][a] = Some((r.w.clone(), d));
    }
    for (a, name) in gens.iter().enumerate() {
        if table[0][a].is_none() {
            table[0][a] = Some(if a < base_gens.len() {
                (vec![Letter::new(name)], 0)
            } else {
                (Word::new(), a - base_gens.len() + 1)
            });
        }
    }
    let mut full: Vec<Vec<(Word, usize)>> = Vec::with_capacity(l);
    for (c, row) in table.into_iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (a, cell) in row.into_iter().enumerate() {
            out.push(cell.ok_or_else(|| DescError::MissingRule { c: cosets[c].clone(), a: gens[a].clone() })?);
        }
        full.push(out);
    }
    for (a, name) in gens.iter().enumerate() {
        let targets: HashSet<usize> = full.iter().map(|row| row[a].1).collect();
        if targets.len() != l {
            return Err(DescError::NotPermutation(name.clone()));
        }
    }
    Ok(FiniteExtGroup::new(g, cosets.to_vec(), gens, full))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z2_table_round_trip() {
        let j = r#"{"type":"finite","elements":["1","a"],"table":[[0,1],[1,0]],"generators":["a"]}"#;
        let d = GroupDesc::from_json(j).unwrap();
        let g = d.build().unwrap();
        assert_eq!(g.generators(), vec!["a".to_string()]);
        let back = GroupDesc::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn structured_errors() {
        let bad = r#"{"type":"finite","elements":["1","a"],"table":[[0,1],[1,1]],"generators":["a"]}"#;
        assert!(matches!(
            GroupDesc::from_json(bad).unwrap().build(),
            Err(DescError::NoIdentity) | Err(DescError::NoInverse(_)) | Err(DescError::NotAssociative { .. })
        ));
        let bad = r#"{"type":"finite","elements":["1","a"],"table":[[0,1],[1,5]],"generators":["a"]}"#;
        assert_eq!(
            GroupDesc::from_json(bad).unwrap().build().unwrap_err(),
            DescError::TableEntry { row: 1, col: 1, value: 5 }
        );
        let dup = r#"{"type":"free_product","factors":[{"type":"cyclic","order":2,"generator":"a"},{"type":"cyclic","order":3,"generator":"a"}]}"#;
        assert_eq!(GroupDesc::from_json(dup).unwrap().build().unwrap_err(), DescError::DuplicateGenerator("a".into()));
        let hnn = r#"{"type":"hnn","base":{"type":"cyclic","order":4,"generator":"a"},"a":[["a"]],"b":[["a"]]}"#;
        assert!(matches!(GroupDesc::from_json(hnn).unwrap().build(), Err(DescError::NotClosed { .. })));
        assert!(matches!(GroupDesc::from_json("{"), Err(DescError::Json(_))));
    }

    #[test]
    fn missing_extension_rule() {
        let j = r#"{"type":"finite_ext","base":{"type":"integer","generator":"s"},"cosets":["1","t"],
                   "rules":[{"c":"t","a":"t","w":["s"],"d":"1"}]}"#;
        assert_eq!(
            GroupDesc::from_json(j).unwrap().build().unwrap_err(),
            DescError::MissingRule { c: "t".into(), a: "s".into() }
        );
    }
}
