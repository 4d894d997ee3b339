//! Exponent expressions `v₀ u₁^{x₁}v₁⋯u_k^{x_k}v_k` over a generator alphabet.
//!
//! Text syntax: letters are identifiers separated by whitespace, `a'` is the
//! inverse of `a`, `(a b)^x` is a power with variable `x`, `(a b)^3` or `a^3`
//! repeats a constant, and a bare `t^x` is a single-letter power. When a
//! generator alphabet is supplied, an identifier that is not a generator but
//! spells a string of one-character generators is split, so `(ab)^x` reads as
//! `(a b)^x`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semilinear::{LinearSet, SemilinearSet};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub name: String,
    pub inv: bool,
}

impl Letter {
    pub fn new(name: &str) -> Self {
        Letter { name: name.to_string(), inv: false }
    }

    pub fn inverse(&self) -> Self {
        Letter { name: self.name.clone(), inv: !self.inv }
    }

    /// Parses `a` or `a'`.
    pub fn from_token(tok: &str) -> Self {
        match tok.strip_suffix('\'') {
            Some(n) => Letter { name: n.to_string(), inv: true },
            None => Letter::new(tok),
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.name, if self.inv { "'" } else { "" })
    }
}

impl Serialize for Letter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Letter {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(Letter::from_token(&s))
    }
}

pub type Word = Vec<Letter>;

pub fn word_inverse(w: &[Letter]) -> Word {
    w.iter().rev().map(Letter::inverse).collect()
}

pub fn word_to_string(w: &[Letter]) -> String {
    w.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
}

/// Parses a whitespace-separated word such as `a b' c`.
pub fn parse_word(text: &str) -> Word {
    text.split_whitespace().map(Letter::from_token).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub period: Word,
    pub var: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tail: Word,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentExpression {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub head: Word,
    pub factors: Vec<Factor>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("no value for variable `{0}`")]
    MissingVar(String),
    #[error("empty period for variable `{0}`")]
    EmptyPeriod(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String, bool),
    Num(u64),
    LParen,
    RParen,
    Caret,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            out.push((i, Tok::LParen));
            i += 1;
        } else if c == ')' {
            out.push((i, Tok::RParen));
            i += 1;
        } else if c == '^' {
            out.push((i, Tok::Caret));
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n =
                text[start..i].parse().map_err(|_| ExprError::Parse { pos: start, msg: "number too large".into() })?;
            out.push((start, Tok::Num(n)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let name = text[start..i].to_string();
            let mut inv = false;
            if i < bytes.len() && bytes[i] == b'\'' {
                inv = true;
                i += 1;
            }
            out.push((start, Tok::Ident(name, inv)));
        } else {
            return Err(ExprError::Parse { pos: i, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

fn expand_ident(name: &str, inv: bool, gens: Option<&[String]>) -> Word {
    if let Some(gens) = gens {
        let known = |s: &str| gens.iter().any(|g| g == s);
        if !known(name) && name.chars().count() > 1 && name.chars().all(|c| known(&c.to_string())) {
            let mut w: Word = name.chars().map(|c| Letter::new(&c.to_string())).collect();
            if inv {
                w.last_mut().unwrap().inv = true;
            }
            return w;
        }
    }
    vec![Letter { name: name.to_string(), inv }]
}

impl ExponentExpression {
    /// Parses without knowledge of the alphabet: every identifier is one letter.
    pub fn parse(text: &str) -> Result<Self, ExprError> {
        Self::parse_impl(text, None)
    }

    /// Parses, splitting identifiers into one-character generators where needed.
    pub fn parse_with_alphabet(text: &str, gens: &[String]) -> Result<Self, ExprError> {
        Self::parse_impl(text, Some(gens))
    }

    fn parse_impl(text: &str, gens: Option<&[String]>) -> Result<Self, ExprError> {
        let toks = lex(text)?;
        let mut e = ExponentExpression::default();
        let mut i = 0;
        let end = text.len();
        let pos_of = |i: usize| toks.get(i).map(|t| t.0).unwrap_or(end);
        while i < toks.len() {
            let (pos, tok) = &toks[i];
            // A group: either `(word)` or a single identifier.
            let group: Word = match tok {
                Tok::LParen => {
                    let mut w = Word::new();
                    i += 1;
                    loop {
                        match toks.get(i) {
                            Some((_, Tok::Ident(n, inv))) => {
                                w.extend(expand_ident(n, *inv, gens));
                                i += 1;
                            }
                            Some((_, Tok::RParen)) => {
                                i += 1;
                                break;
                            }
                            Some((p, _)) => {
                                return Err(ExprError::Parse { pos: *p, msg: "expected a letter or `)`".into() })
                            }
                            None => return Err(ExprError::Parse { pos: end, msg: "unclosed `(`".into() }),
                        }
                    }
                    w
                }
                Tok::Ident(n, inv) => {
                    i += 1;
                    expand_ident(n, *inv, gens)
                }
                _ => return Err(ExprError::Parse { pos: *pos, msg: "expected a letter or `(`".into() }),
            };
            let powered = matches!(toks.get(i), Some((_, Tok::Caret)));
            if !powered {
                if matches!(tok, Tok::LParen) {
                    return Err(ExprError::Parse { pos: pos_of(i), msg: "expected `^` after `)`".into() });
                }
                e.push_constant(&group);
                continue;
            }
            i += 1;
            match toks.get(i) {
                Some((_, Tok::Num(n))) => {
                    i += 1;
                    for _ in 0..*n {
                        e.push_constant(&group);
                    }
                }
                Some((p, Tok::Ident(v, false))) => {
                    i += 1;
                    if group.is_empty() {
                        return Err(ExprError::Parse { pos: *p, msg: "empty period".into() });
                    }
                    e.factors.push(Factor { period: group, var: v.clone(), tail: Word::new() });
                }
                _ => {
                    return Err(ExprError::Parse {
                        pos: pos_of(i),
                        msg: "expected a variable or a number after `^`".into(),
                    })
                }
            }
        }
        Ok(e)
    }

    fn push_constant(&mut self, w: &[Letter]) {
        match self.factors.last_mut() {
            Some(f) => f.tail.extend_from_slice(w),
            None => self.head.extend_from_slice(w),
        }
    }

    /// `Σ |u_i| + |v_i|` (the leading constant counts too).
    pub fn length(&self) -> usize {
        self.head.len() + self.factors.iter().map(|f| f.period.len() + f.tail.len()).sum::<usize>()
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    /// Variables in order of first occurrence.
    pub fn vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in &self.factors {
            if !out.contains(&f.var) {
                out.push(f.var.clone());
            }
        }
        out
    }

    pub fn is_knapsack(&self) -> bool {
        self.vars().len() == self.factors.len()
    }

    pub fn letters(&self) -> impl Iterator<Item = &Letter> {
        self.head.iter().chain(self.factors.iter().flat_map(|f| f.period.iter().chain(f.tail.iter())))
    }

    /// Moves the leading constant `v₀` to the end: `v₀·e = 1 ⇔ e·v₀ = 1`.
    pub fn normalize(&self) -> ExponentExpression {
        let mut e = self.clone();
        if e.head.is_empty() {
            return e;
        }
        let head = std::mem::take(&mut e.head);
        match e.factors.last_mut() {
            Some(f) => f.tail.extend(head),
            None => e.head = head,
        }
        e
    }

    /// Renames repeated variables apart. Returns the new expression and the
    /// magnitude-one set `K` over its variables that forces renamed copies to
    /// agree with the original.
    pub fn knapsackify(&self) -> (ExponentExpression, SemilinearSet) {
        let mut e = self.clone();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut group_of: HashMap<String, usize> = HashMap::new();
        for (i, f) in e.factors.iter_mut().enumerate() {
            let count = seen.entry(f.var.clone()).or_insert(0);
            *count += 1;
            let g = *group_of.entry(f.var.clone()).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i);
            if *count > 1 {
                f.var = format!("{}#{}", f.var, count);
            }
        }
        let vars: Vec<String> = e.factors.iter().map(|f| f.var.clone()).collect();
        let d = vars.len();
        let periods = groups
            .iter()
            .map(|g| {
                let mut p = vec![0; d];
                for &i in g {
                    p[i] = 1;
                }
                p
            })
            .collect();
        let k = SemilinearSet { vars, components: vec![LinearSet::new(vec![0; d], periods)] };
        (e, k)
    }

    /// `σ(e)` as a concrete word.
    pub fn evaluate(&self, val: &HashMap<String, u64>) -> Result<Word, ExprError> {
        let mut w = self.head.clone();
        for f in &self.factors {
            let n = *val.get(&f.var).ok_or_else(|| ExprError::MissingVar(f.var.clone()))?;
            for _ in 0..n {
                w.extend_from_slice(&f.period);
            }
            w.extend_from_slice(&f.tail);
        }
        Ok(w)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("expression serializes")
    }
}

impl fmt::Display for ExponentExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if !self.head.is_empty() {
            parts.push(word_to_string(&self.head));
        }
        for fac in &self.factors {
            parts.push(format!("({})^{}", word_to_string(&fac.period), fac.var));
            if !fac.tail.is_empty() {
                parts.push(word_to_string(&fac.tail));
            }
        }
        write!(f, "{}", parts.join(" "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gens(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn length_and_degree() {
        let e = ExponentExpression::parse("t^x").unwrap();
        assert_eq!((e.length(), e.degree()), (1, 1));
        let e = ExponentExpression::parse("(a b)^x c (a b)^y").unwrap();
        assert_eq!((e.length(), e.degree()), (5, 2));
        let e = ExponentExpression::parse("a^x b a^x").unwrap();
        assert_eq!(e.degree(), 2);
        assert_eq!(e.vars(), vec!["x".to_string()]);
    }

    #[test]
    fn split_identifiers_with_alphabet() {
        let e = ExponentExpression::parse_with_alphabet("(ab)^x (b'a)^y", &gens(&["a", "b"])).unwrap();
        assert_eq!(word_to_string(&e.factors[0].period), "a b");
        assert_eq!(word_to_string(&e.factors[1].period), "b' a");
    }

    #[test]
    fn numeric_exponent_repeats_constant() {
        let e = ExponentExpression::parse("t^x (t')^4").unwrap();
        assert_eq!(e.factors[0].tail.len(), 4);
        assert!(e.factors[0].tail.iter().all(|l| l.inv));
    }

    #[test]
    fn parse_errors_carry_position() {
        match ExponentExpression::parse("(a b ^x") {
            Err(ExprError::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        match ExponentExpression::parse("a ^ ") {
            Err(ExprError::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(ExponentExpression::parse("a $"), Err(ExprError::Parse { pos: 2, .. })));
    }

    #[test]
    fn evaluate_examples() {
        let val = |x: u64| HashMap::from([("x".to_string(), x)]);
        let e = ExponentExpression::parse("t^x").unwrap();
        assert_eq!(word_to_string(&e.evaluate(&val(3)).unwrap()), "t t t");
        let e = ExponentExpression::parse("(a b)^x c").unwrap();
        assert_eq!(word_to_string(&e.evaluate(&val(0)).unwrap()), "c");
        let e = ExponentExpression::parse("a^x b a^x").unwrap();
        assert_eq!(word_to_string(&e.evaluate(&val(2)).unwrap()), "a a b a a");
        assert!(matches!(e.evaluate(&HashMap::new()), Err(ExprError::MissingVar(_))));
    }

    #[test]
    fn knapsackify_repeated_variable() {
        let e = ExponentExpression::parse("a^x b a^x").unwrap();
        let (k, set) = e.knapsackify();
        assert_eq!(k.vars(), vec!["x".to_string(), "x#2".to_string()]);
        assert_eq!(set.components, vec![LinearSet::new(vec![0, 0], vec![vec![1, 1]])]);
        assert_eq!(k.length(), e.length());
        let e = ExponentExpression::parse("a^x a^x a^x").unwrap();
        let (k, set) = e.knapsackify();
        assert_eq!(k.vars().len(), 3);
        assert_eq!(set.magnitude(), 1);
        assert!(set.membership(&[2, 2, 2]).unwrap());
        assert!(!set.membership(&[2, 1, 2]).unwrap());
    }

    #[test]
    fn knapsack_input_unchanged() {
        let e = ExponentExpression::parse("a^x b^y").unwrap();
        let (k, set) = e.knapsackify();
        assert_eq!(k, e);
        assert_eq!(set, SemilinearSet::full(e.vars()));
    }

    #[test]
    fn normalize_moves_head() {
        let e = ExponentExpression::parse("c t^x").unwrap();
        let n = e.normalize();
        assert!(n.head.is_empty());
        assert_eq!(word_to_string(&n.factors[0].tail), "c");
        assert_eq!(n.normalize(), n);
    }

    #[test]
    fn json_mirror() {
        let e = ExponentExpression::parse("(a b)^x c").unwrap();
        let j = e.to_json();
        assert_eq!(j, serde_json::json!({"factors":[{"period":["a","b"],"var":"x","tail":["c"]}]}));
        let back: ExponentExpression = serde_json::from_value(j).unwrap();
        assert_eq!(back, e);
    }
}
