//! Exponent equations `u₁^{x₁}v₁⋯u_k^{x_k}v_k = 1` over groups built from ℤ and
//! finite groups by graph products, HNN-extensions with finite associated
//! subgroups, amalgamated products over finite subgroups, and finite
//! extensions. Every solver returns the full solution set as a
//! [`semilinear::SemilinearSet`].
//!
//! The usual entry point is [`groups::desc::GroupDesc`] (parsed from JSON),
//! built into a [`groups::Group`], together with an
//! [`expr::ExponentExpression`] handed to [`groups::solve_exponent`].

pub mod bounds;
pub mod expr;
pub mod finite_ext;
pub mod gp_solver;
pub mod groups;
pub mod hnn;
pub mod oracle;
pub mod par;
mod refine;
pub mod semilinear;
pub mod trace;
pub mod unary_automata;

pub use expr::{ExponentExpression, Letter, Word};
pub use groups::desc::GroupDesc;
pub use groups::{solve_exponent, Elem, Group, SolveCtx, SolveError};
pub use semilinear::{LinearSet, SemilinearSet};
