//! Process-wide counters for the proven size bounds that the solvers check on
//! every call. A violation is counted, never silently ignored; the acceptance
//! suite reads these counters after running the corpus.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    /// `‖s‖+‖t‖+Σ‖v_i‖ ≤ 3‖u‖` and `k ≤ α` for trace power presentations.
    PowerPresentation,
    /// `‖s‖+‖p‖+‖v‖ ≤ 3‖u‖` for Britton-word power presentations.
    HnnPowerPresentation,
    /// Number of pieces in a reduction script.
    RefinementLength,
    /// Number of atom creations in a reduction script.
    AtomCreations,
}

const KINDS: usize = 4;

static CHECKS: [AtomicU64; KINDS] = [const { AtomicU64::new(0) }; KINDS];
static VIOLATIONS: [AtomicU64; KINDS] = [const { AtomicU64::new(0) }; KINDS];

fn slot(b: Bound) -> usize {
    match b {
        Bound::PowerPresentation => 0,
        Bound::HnnPowerPresentation => 1,
        Bound::RefinementLength => 2,
        Bound::AtomCreations => 3,
    }
}

/// Records one evaluation of bound `b`; returns `ok` for chaining.
pub fn check(b: Bound, ok: bool) -> bool {
    CHECKS[slot(b)].fetch_add(1, Ordering::Relaxed);
    if !ok {
        VIOLATIONS[slot(b)].fetch_add(1, Ordering::Relaxed);
    }
    ok
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub checks: u64,
    pub violations: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub power_presentation: Tally,
    pub hnn_power_presentation: Tally,
    pub refinement_length: Tally,
    pub atom_creations: Tally,
}

impl Snapshot {
    pub fn total_violations(&self) -> u64 {
        self.power_presentation.violations
            + self.hnn_power_presentation.violations
            + self.refinement_length.violations
            + self.atom_creations.violations
    }
}

pub fn snapshot() -> Snapshot {
    let t = |b: Bound| Tally {
        checks: CHECKS[slot(b)].load(Ordering::Relaxed),
        violations: VIOLATIONS[slot(b)].load(Ordering::Relaxed),
    };
    Snapshot {
        power_presentation: t(Bound::PowerPresentation),
        hnn_power_presentation: t(Bound::HnnPowerPresentation),
        refinement_length: t(Bound::RefinementLength),
        atom_creations: t(Bound::AtomCreations),
    }
}
