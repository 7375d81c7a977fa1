//! Submodular set-function oracles.
//!
//! Every algorithm in this crate talks to the objective through
//! [`SubmodularOracle::value`] and [`SubmodularOracle::marginal`]. The oracle
//! counts logical evaluations in an atomic counter so that parallel copies of
//! an algorithm can share one instance. Algorithms that report per-run call
//! counts wrap the oracle in a [`CallMeter`], which keeps a private tally so
//! that traces do not depend on what other threads are doing.

use std::cell::Cell;
use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a ground-set element. Ids of an instance are `0..n`.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ElementId(pub u32);

impl ElementId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for ElementId {
    fn from(i: usize) -> Self {
        ElementId(i as u32)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Largest ground set accepted by the explicit value table.
pub const MAX_TABLE_ELEMENTS: usize = 20;
/// Largest ground set accepted by [`SubmodularOracle::brute_force_check_submodular`].
pub const MAX_CHECK_ELEMENTS: usize = 12;

/// Concrete objective families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    /// `f(A)` is the total weight of items covered by the sets of `A`.
    #[serde(rename = "weighted-coverage", alias = "coverage")]
    Coverage {
        sets: Vec<Vec<usize>>,
        item_weights: Vec<f64>,
    },
    /// Elements are vertices; `f(A)` is the weight of arcs leaving `A`.
    #[serde(rename = "directed-cut", alias = "cut")]
    DirectedCut { arcs: Vec<(usize, usize, f64)> },
    /// Additive weights.
    Modular { weights: Vec<f64> },
    /// Explicit table indexed by the bitmask of the set.
    #[serde(rename = "custom-table", alias = "table")]
    Table { values: Vec<f64> },
}

impl Objective {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Objective::Coverage { .. } => "weighted-coverage",
            Objective::DirectedCut { .. } => "directed-cut",
            Objective::Modular { .. } => "modular",
            Objective::Table { .. } => "custom-table",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleStats {
    /// Logical evaluations, memoized or not.
    pub calls: u64,
    /// Evaluations answered from the memo table.
    pub cache_hits: u64,
}

pub struct SubmodularOracle {
    n: usize,
    objective: Objective,
    monotone: bool,
    calls: AtomicU64,
    cache_hits: AtomicU64,
    memo: Option<Mutex<HashMap<Vec<u32>, f64>>>,
}

impl fmt::Debug for SubmodularOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubmodularOracle")
            .field("n", &self.n)
            .field("kind", &self.objective.kind_name())
            .field("monotone", &self.monotone)
            .field("stats", &self.stats())
            .finish()
    }
}

impl SubmodularOracle {
    pub fn new(n: usize, objective: Objective, monotone: bool) -> Result<Self> {
        validate_objective(n, &objective)?;
        Ok(SubmodularOracle {
            n,
            objective,
            monotone,
            calls: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
            memo: None,
        })
    }

    pub fn coverage(sets: Vec<Vec<usize>>, item_weights: Vec<f64>) -> Result<Self> {
        let n = sets.len();
        Self::new(n, Objective::Coverage { sets, item_weights }, true)
    }

    pub fn modular(weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        Self::new(n, Objective::Modular { weights }, true)
    }

    pub fn directed_cut(n: usize, arcs: Vec<(usize, usize, f64)>) -> Result<Self> {
        Self::new(n, Objective::DirectedCut { arcs }, false)
    }

    pub fn table(n: usize, values: Vec<f64>, monotone: bool) -> Result<Self> {
        Self::new(n, Objective::Table { values }, monotone)
    }

    /// Turns on memoization of set values. Call counts are unaffected; hits
    /// are reported separately in [`OracleStats::cache_hits`].
    pub fn with_memo(mut self) -> Self {
        self.memo = Some(Mutex::new(HashMap::new()));
        self
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn ground(&self) -> Vec<ElementId> {
        (0..self.n).map(ElementId::from).collect()
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn stats(&self) -> OracleStats {
        OracleStats {
            calls: self.calls.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
        }
    }

    pub fn reset_stats(&self) {
        self.calls.store(0, Ordering::Relaxed);
        self.cache_hits.store(0, Ordering::Relaxed);
    }

    pub fn contains(&self, e: ElementId) -> bool {
        e.index() < self.n
    }

    pub fn check_element(&self, e: ElementId) -> Result<()> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(Error::Domain {
                element: e,
                n: self.n,
            })
        }
    }

    /// `f(A)`. Duplicate ids in `set` are treated as one element.
    pub fn value(&self, set: &[ElementId]) -> Result<f64> {
        for &e in set {
            self.check_element(e)?;
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(self.lookup(set))
    }

    /// `f(A + e) - f(A)`; zero without any evaluation when `e` is already in `A`.
    pub fn marginal(&self, e: ElementId, set: &[ElementId]) -> Result<f64> {
        self.check_element(e)?;
        if set.contains(&e) {
            for &a in set {
                self.check_element(a)?;
            }
            return Ok(0.0);
        }
        let mut extended = Vec::with_capacity(set.len() + 1);
        extended.extend_from_slice(set);
        extended.push(e);
        let with = self.value(&extended)?;
        let without = self.value(set)?;
        Ok(with - without)
    }

    fn lookup(&self, set: &[ElementId]) -> f64 {
        match &self.memo {
            None => self.evaluate(set),
            Some(memo) => {
                let mut key: Vec<u32> = set.iter().map(|e| e.0).collect();
                key.sort_unstable();
                key.dedup();
                let mut table = memo.lock().expect("memo lock poisoned");
                if let Some(&v) = table.get(&key) {
                    self.cache_hits.fetch_add(1, Ordering::Relaxed);
                    return v;
                }
                let v = self.evaluate(set);
                table.insert(key, v);
                v
            }
        }
    }

    /// Evaluation that bypasses counting and the memo. Used by audits and
    /// brute-force checks so that they do not perturb reported call counts.
    pub(crate) fn value_unmetered(&self, set: &[ElementId]) -> f64 {
        self.evaluate(set)
    }

    fn evaluate(&self, set: &[ElementId]) -> f64 {
        match &self.objective {
            Objective::Coverage { sets, item_weights } => {
                let mut covered = vec![false; item_weights.len()];
                let mut total = 0.0;
                for &e in set {
                    for &item in &sets[e.index()] {
                        if !covered[item] {
                            covered[item] = true;
                            total += item_weights[item];
                        }
                    }
                }
                total
            }
            Objective::DirectedCut { arcs } => {
                let mut inside = vec![false; self.n];
                for &e in set {
                    inside[e.index()] = true;
                }
                arcs.iter()
                    .filter(|&&(u, v, _)| inside[u] && !inside[v])
                    .fold(0.0, |acc, &(_, _, w)| acc + w)
            }
            Objective::Modular { weights } => {
                let mut seen = vec![false; self.n];
                let mut total = 0.0;
                for &e in set {
                    if !seen[e.index()] {
                        seen[e.index()] = true;
                        total += weights[e.index()];
                    }
                }
                total
            }
            Objective::Table { values } => values[mask_of(set)],
        }
    }

    /// Checks `f(A) + f(B) >= f(A ∪ B) + f(A ∩ B)` for every pair of subsets,
    /// with absolute tolerance `1e-9`. Evaluations are not counted.
    pub fn brute_force_check_submodular(&self) -> Result<bool> {
        let table = self.full_table(MAX_CHECK_ELEMENTS)?;
        let full = table.len();
        for a in 0..full {
            for b in (a + 1)..full {
                if table[a] + table[b] < table[a | b] + table[a & b] - 1e-9 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Checks `f(e | A) >= -1e-12` for every `A` and `e ∉ A`.
    pub fn brute_force_check_monotone(&self) -> Result<bool> {
        let table = self.full_table(MAX_CHECK_ELEMENTS)?;
        for (mask, &v) in table.iter().enumerate() {
            for e in 0..self.n {
                if mask & (1 << e) == 0 && table[mask | (1 << e)] - v < -1e-12 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn full_table(&self, limit: usize) -> Result<Vec<f64>> {
        if self.n > limit {
            return Err(Error::Size {
                what: "ground set",
                size: self.n,
                limit,
            });
        }
        Ok((0..1usize << self.n)
            .map(|mask| self.evaluate(&subset_from_mask(mask as u64, self.n)))
            .collect())
    }
}

fn validate_objective(n: usize, objective: &Objective) -> Result<()> {
    let bad = |msg: String| Err(Error::Instance(msg));
    match objective {
        Objective::Coverage { sets, item_weights } => {
            if sets.len() != n {
                return bad(format!("coverage lists {} sets for n = {n}", sets.len()));
            }
            if item_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return bad("coverage item weights must be finite and non-negative".into());
            }
            for (e, items) in sets.iter().enumerate() {
                if let Some(&item) = items.iter().find(|&&i| i >= item_weights.len()) {
                    return bad(format!("set {e} covers unknown item {item}"));
                }
            }
        }
        Objective::DirectedCut { arcs } => {
            for &(u, v, w) in arcs {
                if u >= n || v >= n {
                    return bad(format!("arc ({u}, {v}) leaves the vertex range 0..{n}"));
                }
                if !w.is_finite() || w < 0.0 {
                    return bad(format!("arc ({u}, {v}) has invalid weight {w}"));
                }
            }
        }
        Objective::Modular { weights } => {
            if weights.len() != n {
                return bad(format!("modular lists {} weights for n = {n}", weights.len()));
            }
            if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return bad("modular weights must be finite and non-negative".into());
            }
        }
        Objective::Table { values } => {
            if n > MAX_TABLE_ELEMENTS {
                return Err(Error::Size {
                    what: "custom table ground set",
                    size: n,
                    limit: MAX_TABLE_ELEMENTS,
                });
            }
            if values.len() != 1usize << n {
                return bad(format!("custom table needs {} entries", 1usize << n));
            }
            if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return bad("custom table values must be finite and non-negative".into());
            }
        }
    }
    Ok(())
}

pub(crate) fn mask_of(set: &[ElementId]) -> usize {
    set.iter().fold(0usize, |m, e| m | (1usize << e.index()))
}

/// Elements whose bits are set in `mask`, ascending.
pub fn subset_from_mask(mask: u64, n: usize) -> Vec<ElementId> {
    (0..n)
        .filter(|&i| mask & (1u64 << i) != 0)
        .map(ElementId::from)
        .collect()
}

/// Per-run view of an oracle that tallies its own calls.
pub struct CallMeter<'a> {
    oracle: &'a SubmodularOracle,
    calls: Cell<u64>,
}

impl<'a> CallMeter<'a> {
    pub fn new(oracle: &'a SubmodularOracle) -> Self {
        CallMeter {
            oracle,
            calls: Cell::new(0),
        }
    }

    pub fn oracle(&self) -> &'a SubmodularOracle {
        self.oracle
    }

    pub fn calls(&self) -> u64 {
        self.calls.get()
    }

    pub fn value(&self, set: &[ElementId]) -> Result<f64> {
        let v = self.oracle.value(set)?;
        self.calls.set(self.calls.get() + 1);
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: u32) -> ElementId {
        ElementId(i)
    }

    // a -> {1,2}, b -> {2,3}, c -> {3}; items renumbered 0..3
    fn small_coverage() -> SubmodularOracle {
        SubmodularOracle::coverage(vec![vec![0, 1], vec![1, 2], vec![2]], vec![1.0; 3]).unwrap()
    }

    fn two_vertex_cut() -> SubmodularOracle {
        SubmodularOracle::directed_cut(2, vec![(0, 1, 2.0), (1, 0, 1.0)]).unwrap()
    }

    #[test]
    fn coverage_values() {
        let f = small_coverage();
        assert_eq!(f.value(&[e(0)]).unwrap(), 2.0);
        assert_eq!(f.value(&[]).unwrap(), 0.0);
        assert_eq!(f.value(&[e(0), e(1), e(2)]).unwrap(), 3.0);
    }

    #[test]
    fn coverage_marginals() {
        let f = small_coverage();
        assert_eq!(f.marginal(e(1), &[e(0)]).unwrap(), 1.0);
        assert_eq!(f.marginal(e(0), &[e(0), e(2)]).unwrap(), 0.0);
    }

    #[test]
    fn cut_is_not_monotone() {
        // arcs a->b (2), b->a (1): f({a}) = 2, f({a,b}) = 0
        let f = two_vertex_cut();
        assert_eq!(f.value(&[e(0)]).unwrap(), 2.0);
        assert_eq!(f.value(&[e(0), e(1)]).unwrap(), 0.0);
        assert_eq!(f.marginal(e(1), &[e(0)]).unwrap(), -2.0);
        // arcs a->b (1), b->a (2): f({a}) = 1, f(b | {a}) = -1
        let g = SubmodularOracle::directed_cut(2, vec![(0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        assert_eq!(g.value(&[e(0)]).unwrap(), 1.0);
        assert_eq!(g.marginal(e(1), &[e(0)]).unwrap(), -1.0);
        assert!(!g.brute_force_check_monotone().unwrap());
        assert!(g.brute_force_check_submodular().unwrap());
    }

    #[test]
    fn domain_errors() {
        let f = small_coverage();
        assert!(matches!(f.value(&[e(3)]), Err(Error::Domain { .. })));
        assert!(matches!(f.marginal(e(7), &[]), Err(Error::Domain { .. })));
    }

    #[test]
    fn submodularity_checks() {
        assert!(small_coverage().brute_force_check_submodular().unwrap());
        let modular = SubmodularOracle::modular(vec![3.0, 1.0, 4.0]).unwrap();
        assert!(modular.brute_force_check_submodular().unwrap());
        // f({a}) = f({b}) = 0, f({a,b}) = 1
        let bad = SubmodularOracle::table(2, vec![0.0, 0.0, 0.0, 1.0], true).unwrap();
        assert!(!bad.brute_force_check_submodular().unwrap());
        let big = SubmodularOracle::modular(vec![1.0; 13]).unwrap();
        assert!(matches!(
            big.brute_force_check_submodular(),
            Err(Error::Size { .. })
        ));
    }

    #[test]
    fn call_counting() {
        let f = small_coverage();
        f.value(&[e(0)]).unwrap();
        assert_eq!(f.stats().calls, 1);
        f.marginal(e(1), &[e(0)]).unwrap();
        assert_eq!(f.stats().calls, 3);
        f.marginal(e(0), &[e(0)]).unwrap();
        assert_eq!(f.stats().calls, 3);
    }

    #[test]
    fn memo_keeps_logical_counts() {
        let f = small_coverage().with_memo();
        f.value(&[e(0), e(1)]).unwrap();
        f.value(&[e(1), e(0)]).unwrap();
        let s = f.stats();
        assert_eq!(s.calls, 2);
        assert_eq!(s.cache_hits, 1);
    }

    #[test]
    fn table_validation() {
        assert!(SubmodularOracle::table(2, vec![0.0; 3], true).is_err());
        assert!(SubmodularOracle::table(1, vec![1.0, -1.0], true).is_err());
        assert!(matches!(
            SubmodularOracle::table(21, vec![], true),
            Err(Error::Size { .. })
        ));
    }

    #[test]
    fn objective_json_kinds() {
        let o: Objective =
            serde_json::from_str(r#"{"kind":"directed-cut","arcs":[[0,1,2.5]]}"#).unwrap();
        assert_eq!(o, Objective::DirectedCut { arcs: vec![(0, 1, 2.5)] });
        let o: Objective =
            serde_json::from_str(r#"{"kind":"coverage","sets":[[0]],"item_weights":[1]}"#)
                .unwrap();
        assert_eq!(o.kind_name(), "weighted-coverage");
    }
}
