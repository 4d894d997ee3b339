#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use knapsack::{ExponentExpression, Group, GroupDesc};

pub fn data(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../knapsack/tests/data").join(file)
}

pub fn load(file: &str) -> Arc<dyn Group> {
    let text = std::fs::read_to_string(data(file)).unwrap();
    GroupDesc::from_json(&text).unwrap().build().unwrap()
}

pub fn expr(text: &str) -> ExponentExpression {
    ExponentExpression::parse(text).unwrap()
}

/// `(group file, expression)` pairs of degree at most 2 and length at most 8.
pub const CORPUS: &[(&str, &str)] = &[
    ("z.json", "(t)^x t' t' t' t'"),
    ("z.json", "(t)^x (t')^y"),
    ("z.json", "(t t)^x (t')^y t'"),
    ("z.json", "(t)^x (t)^y t' t' t' t' t'"),
    ("z.json", "(t t)^x t' t' t'"),
    ("z.json", "(t)^x (t)^x t' t' t' t' t' t'"),
    ("z.json", "(t t t)^x (t' t')^y"),
    ("z.json", "(t)^x t"),
    ("z2.json", "(a)^x"),
    ("z2.json", "(a)^x a"),
    ("z2.json", "(a)^x (a)^y"),
    ("z2.json", "(a a)^x a"),
    ("z2.json", "(a)^x (a)^y a"),
    ("z2.json", "(a a a)^x"),
    ("z3.json", "(a)^x"),
    ("z3.json", "(a)^x a"),
    ("z3.json", "(a)^x (a')^y"),
    ("z3.json", "(a a)^x (a)^y a"),
    ("z3.json", "(a)^x (a)^x"),
    ("z3.json", "(a')^x a a"),
    ("z2xz2.json", "(a)^x (b)^y a b"),
    ("z2xz2.json", "(a b)^x"),
    ("z2xz2.json", "(a b)^x (a)^y b"),
    ("z2xz2.json", "(a)^x (b)^y"),
    ("z2xz2.json", "(a b)^x a"),
    ("z2xz2.json", "(a)^x b"),
    ("z2_free_z3.json", "(a b)^x (b' a)^y"),
    ("z2_free_z3.json", "(a)^x b"),
    ("z2_free_z3.json", "(a b)^x"),
    ("z2_free_z3.json", "(a b)^x (a b)^y b' a"),
    ("z2_free_z3.json", "(b)^x (b)^y"),
    ("z2_free_z3.json", "(a b)^x a b' a"),
    ("z2_free_z3.json", "(a b b)^x (a b)^y"),
    ("z2_free_z3.json", "(b a)^x (a b')^y"),
    ("p3_z2.json", "(a c)^x (a)^y c"),
    ("p3_z2.json", "(a b c)^x"),
    ("p3_z2.json", "(a b)^x (c)^y"),
    ("p3_z2.json", "(a)^x (c)^y a c"),
    ("p3_z2.json", "(a c b)^x (b c a)^y"),
    ("p3_z2.json", "(a b c b)^x"),
    ("hnn_z2_id.json", "(t a)^x (a t')^y"),
    ("hnn_z2_id.json", "(t)^x t' t' t'"),
    ("hnn_z2_id.json", "(t a)^x"),
    ("hnn_z2_id.json", "(a t)^x (t' a)^y"),
    ("hnn_z2_id.json", "(t)^x (t')^y a"),
    ("hnn_z2_id.json", "(t a t)^x (t')^y"),
    ("hnn_z2_id.json", "(a)^x (t a t')^y a"),
    ("hnn_z2_id.json", "(t)^x (a t' a)^y"),
    ("amalgam_z4_z2_z4.json", "(a)^x a a"),
    ("amalgam_z4_z2_z4.json", "(a)^x b b"),
    ("amalgam_z4_z2_z4.json", "(a b)^x (b' a')^y"),
    ("amalgam_z4_z2_z4.json", "(a)^x (b)^y"),
    ("amalgam_z4_z2_z4.json", "(a b)^x"),
    ("amalgam_z4_z2_z4.json", "(a)^x (b)^y a a"),
    ("amalgam_z4_z2_z4.json", "(a b a)^x (a' b' a')^y"),
    ("z_index2.json", "(t)^x t' t' t' t'"),
    ("z_index2.json", "(t)^x t' t' t'"),
    ("z_index2.json", "(t t)^x"),
    ("z_index2.json", "(t)^x (s)^y t' t' t' t'"),
    ("z_index2.json", "(s)^x t' t'"),
    ("z_index2.json", "(t)^x s'"),
    ("z_index2.json", "(t)^x (t)^y s' s'"),
];

/// Instances over the three finite extensions.
pub const EXTENSIONS: &[(&str, &str)] = &[
    ("z_index2.json", "(t)^x t' t' t' t'"),
    ("z_index2.json", "(t)^x t' t' t'"),
    ("z_index2.json", "(t t)^x"),
    ("z_index2.json", "(t)^x (s)^y t' t' t' t'"),
    ("z_index2.json", "(t)^x (t)^y s' s'"),
    ("z_index2.json", "(t)^x (t')^y t"),
    ("z2_in_z4.json", "(a)^x"),
    ("z2_in_z4.json", "(a)^x s"),
    ("z2_in_z4.json", "(a)^x (a)^y a"),
    ("z2_in_z4.json", "(s)^x a a"),
    ("z2_in_z4.json", "(a s)^x (a)^y"),
    ("z3_in_s3.json", "(f)^x"),
    ("z3_in_s3.json", "(r f)^x"),
    ("z3_in_s3.json", "(r)^x (f)^y"),
    ("z3_in_s3.json", "(r)^x f r f"),
    ("z3_in_s3.json", "(f r)^x (r)^y r"),
];
