//! Current solution with its pretend arrival order and cached incremental values.
//!
//! The incremental value of `e ∈ S` is `ν(e, S) = f(e | {t ∈ S : t ≺ e})`,
//! where `≺` is the arrival order. Arrival indices come from one counter per
//! multi-pass run: elements carried over from the previous pass keep their
//! indices, newly accepted elements get fresh, larger ones. Entries are kept
//! sorted by arrival, so a prefix of `entries` is exactly the set of elements
//! preceding an entry.

use crate::error::Result;
use crate::oracle::{CallMeter, ElementId, SubmodularOracle};

/// Absolute tolerance for audited identities.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub id: ElementId,
    pub arrival: u64,
    pub nu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionState {
    entries: Vec<Entry>,
    value: f64,
    empty_value: f64,
    next_arrival: u64,
}

impl SolutionState {
    pub fn empty(meter: &CallMeter<'_>) -> Result<Self> {
        let empty_value = meter.value(&[])?;
        Ok(SolutionState {
            entries: Vec::new(),
            value: empty_value,
            empty_value,
            next_arrival: 0,
        })
    }

    /// Builds a state whose arrival order is the order of `elements`.
    pub fn from_elements(oracle: &SubmodularOracle, elements: &[ElementId]) -> Result<Self> {
        let meter = CallMeter::new(oracle);
        let mut state = Self::empty(&meter)?;
        for &e in elements {
            let (_, with_e) = state.gain(&meter, e)?;
            state.apply_exchange(&meter, e, &[], with_e)?;
        }
        Ok(state)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Members in arrival order.
    pub fn elements(&self) -> Vec<ElementId> {
        self.entries.iter().map(|e| e.id).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, e: ElementId) -> bool {
        self.entries.iter().any(|en| en.id == e)
    }

    pub fn nu(&self, e: ElementId) -> Option<f64> {
        self.entries.iter().find(|en| en.id == e).map(|en| en.nu)
    }

    pub fn arrival(&self, e: ElementId) -> Option<u64> {
        self.entries.iter().find(|en| en.id == e).map(|en| en.arrival)
    }

    /// Cached `f(S)`.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// `f(∅)`, read once when the state was created.
    pub fn empty_value(&self) -> f64 {
        self.empty_value
    }

    pub fn sum_nu(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, e| acc + e.nu)
    }

    pub fn sum_nu_of(&self, set: &[ElementId]) -> f64 {
        set.iter().filter_map(|&c| self.nu(c)).fold(0.0, |acc, v| acc + v)
    }

    /// `(f(x | S), f(S + x))`, one oracle call.
    pub fn gain(&self, meter: &CallMeter<'_>, x: ElementId) -> Result<(f64, f64)> {
        if self.contains(x) {
            meter.oracle().check_element(x)?;
            return Ok((0.0, self.value));
        }
        let mut with_x = self.elements();
        with_x.push(x);
        let v = meter.value(&with_x)?;
        Ok((v - self.value, v))
    }

    /// Performs `S <- S \ evict + x` and refreshes the cache.
    ///
    /// `value_with_x` must be `f(S + x)` for the state before the exchange;
    /// it is reused when nothing is evicted. Returns the evicted elements with
    /// their incremental values at the moment of removal.
    pub fn apply_exchange(
        &mut self,
        meter: &CallMeter<'_>,
        x: ElementId,
        evict: &[ElementId],
        value_with_x: f64,
    ) -> Result<Vec<(ElementId, f64)>> {
        let mut removed = Vec::with_capacity(evict.len());
        let mut min_arrival = u64::MAX;
        for &c in evict {
            if let Some(pos) = self.entries.iter().position(|en| en.id == c) {
                let en = self.entries.remove(pos);
                min_arrival = min_arrival.min(en.arrival);
                removed.push((c, en.nu));
            }
        }
        let arrival = self.next_arrival;
        self.next_arrival += 1;
        self.entries.push(Entry {
            id: x,
            arrival,
            nu: 0.0,
        });
        if removed.is_empty() {
            let last = self.entries.len() - 1;
            self.entries[last].nu = value_with_x - self.value;
            self.value = value_with_x;
        } else {
            let from = self
                .entries
                .iter()
                .position(|en| en.arrival > min_arrival)
                .unwrap_or(self.entries.len() - 1);
            self.recompute_nu(meter, from)?;
        }
        Ok(removed)
    }

    /// Recomputes `ν` for every entry at position `from` or later by walking
    /// the prefix chain, and refreshes the cached `f(S)`.
    pub fn recompute_nu(&mut self, meter: &CallMeter<'_>, from: usize) -> Result<()> {
        if from >= self.entries.len() {
            return Ok(());
        }
        let mut prefix: Vec<ElementId> = self.entries[..from].iter().map(|e| e.id).collect();
        let mut prev = if from == 0 {
            self.empty_value
        } else {
            meter.value(&prefix)?
        };
        for j in from..self.entries.len() {
            prefix.push(self.entries[j].id);
            let v = meter.value(&prefix)?;
            self.entries[j].nu = v - prev;
            prev = v;
        }
        self.value = prev;
        Ok(())
    }

    /// `ν(e, S)` evaluated from scratch, without touching any counter.
    pub fn naive_nu(&self, oracle: &SubmodularOracle, e: ElementId) -> Option<f64> {
        let pos = self.entries.iter().position(|en| en.id == e)?;
        let mut prefix: Vec<ElementId> = self.entries[..pos].iter().map(|en| en.id).collect();
        let before = oracle.value_unmetered(&prefix);
        prefix.push(e);
        Some(oracle.value_unmetered(&prefix) - before)
    }

    /// Checks the cache against direct evaluation, `Σ ν = f(S) - f(∅)`, and
    /// `ν ≥ alpha` for every member. Returns one message per violation.
    pub fn audit(&self, oracle: &SubmodularOracle, alpha: f64) -> Vec<String> {
        let mut violations = Vec::new();
        let direct = oracle.value_unmetered(&self.elements());
        if (direct - self.value).abs() > AUDIT_TOLERANCE {
            violations.push(format!("cached f(S) = {} but f(S) = {direct}", self.value));
        }
        let sum = self.sum_nu();
        if (sum - (direct - self.empty_value)).abs() > AUDIT_TOLERANCE {
            violations.push(format!(
                "sum of incremental values {sum} != f(S) - f(empty) = {}",
                direct - self.empty_value
            ));
        }
        for en in &self.entries {
            let fresh = self.naive_nu(oracle, en.id).unwrap_or(f64::NAN);
            if (fresh - en.nu).abs() > AUDIT_TOLERANCE {
                violations.push(format!("cached nu({}) = {} but direct = {fresh}", en.id, en.nu));
            }
            if en.nu < alpha - AUDIT_TOLERANCE {
                violations.push(format!("nu({}) = {} below alpha = {alpha}", en.id, en.nu));
            }
        }
        violations
    }
}
