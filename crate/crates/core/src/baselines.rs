//! Exact and greedy comparators for desk-scale instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matroid::PMatchoid;
use crate::oracle::{ElementId, SubmodularOracle};

pub const MAX_BRUTE_FORCE_ELEMENTS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub opt_set: Vec<ElementId>,
    pub opt_value: f64,
    pub subsets_examined: u64,
}

/// Maximum of `f` over all feasible subsets of the ground set (`n <= 16`).
pub fn brute_force_opt(oracle: &SubmodularOracle, mp: &PMatchoid) -> Result<ExactResult> {
    let n = oracle.ground_size();
    if n > MAX_BRUTE_FORCE_ELEMENTS {
        return Err(Error::Size {
            what: "ground set",
            size: n,
            limit: MAX_BRUTE_FORCE_ELEMENTS,
        });
    }
    best_feasible_subset(oracle, mp, &oracle.ground())
}

/// Maximum of `f` over the feasible subsets of `candidates`.
///
/// Subsets are grown in ascending candidate order and a branch is cut as soon
/// as it becomes infeasible (supersets of dependent sets are dependent). Every
/// feasible subset is evaluated, since a non-monotone `f` may peak below the
/// maximal ones. Ties keep the subset found first, which makes `∅` win over
/// any set of equal value.
pub fn best_feasible_subset(
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    candidates: &[ElementId],
) -> Result<ExactResult> {
    let mut best = ExactResult {
        opt_set: Vec::new(),
        opt_value: f64::NEG_INFINITY,
        subsets_examined: 0,
    };
    let mut current = Vec::with_capacity(candidates.len());
    search(oracle, mp, candidates, 0, &mut current, &mut best)?;
    Ok(best)
}

fn search(
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    candidates: &[ElementId],
    next: usize,
    current: &mut Vec<ElementId>,
    best: &mut ExactResult,
) -> Result<()> {
    let v = oracle.value(current)?;
    best.subsets_examined += 1;
    if v > best.opt_value {
        best.opt_value = v;
        best.opt_set = current.clone();
    }
    for j in next..candidates.len() {
        current.push(candidates[j]);
        if mp.feasible(current) {
            search(oracle, mp, candidates, j + 1, current, best)?;
        }
        current.pop();
    }
    Ok(())
}

/// Standard greedy: repeatedly add the feasible element with the largest
/// strictly positive marginal, ties to the smallest id.
pub fn offline_greedy(oracle: &SubmodularOracle, mp: &PMatchoid) -> Result<Vec<ElementId>> {
    let mut chosen: Vec<ElementId> = Vec::new();
    let mut value = oracle.value(&chosen)?;
    loop {
        let mut best: Option<(f64, f64, ElementId)> = None;
        for e in oracle.ground() {
            if chosen.contains(&e) {
                continue;
            }
            chosen.push(e);
            if mp.feasible(&chosen) {
                let v = oracle.value(&chosen)?;
                let gain = v - value;
                if gain > 0.0 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, v, e));
                }
            }
            chosen.pop();
        }
        match best {
            Some((_, v, e)) => {
                chosen.push(e);
                value = v;
            }
            None => return Ok(chosen),
        }
    }
}
