//! One pass of streaming local search.
//!
//! Each arriving `x` that was not part of the initial solution is offered the
//! exchange `S <- S \ C_x + x`, which is taken iff
//! `f(x | S) >= alpha + (1 + beta) * Σ_{c ∈ C_x} ν(c, S)`.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matroid::PMatchoid;
use crate::oracle::{CallMeter, ElementId, SubmodularOracle};
use crate::state::{SolutionState, AUDIT_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassParams {
    pub alpha: f64,
    pub beta: f64,
}

/// Debug switches. `audit` re-derives the incremental-value identities after
/// every processed element; `trace` keeps one record per element.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PassOptions {
    pub audit: bool,
    pub trace: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Accept,
    Reject,
    Discard,
    /// Randomized pass only: stored in the candidate buffer.
    Buffer,
    /// Randomized pass only: removed from the buffer by a re-evaluation sweep.
    Drop,
}

/// One line of the per-element JSON-lines trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub elem: ElementId,
    pub action: Action,
    #[serde(rename = "C_x")]
    pub c_x: Vec<ElementId>,
    #[serde(rename = "f_S")]
    pub f_s: f64,
    pub sum_nu: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AuditReport {
    pub checks: u64,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn record(&mut self, found: Vec<String>) {
        self.checks += 1;
        self.violations.extend(found);
    }

    pub fn merge(&mut self, other: &AuditReport) {
        self.checks += other.checks;
        self.violations.extend(other.violations.iter().cloned());
    }
}

#[derive(Clone, Debug)]
pub struct PassResult {
    pub s_tilde: SolutionState,
    /// Every element accepted during the pass, starting with the initial solution.
    pub accepted: Vec<ElementId>,
    /// Evicted elements with `χ(e)`, the incremental value at removal.
    pub evicted: Vec<(ElementId, f64)>,
    pub f_init: f64,
    pub f_final: f64,
    pub params: PassParams,
    pub accept_count: usize,
    pub reject_count: usize,
    pub discard_count: usize,
    pub oracle_calls: u64,
    pub peak_stored: usize,
    pub audit: AuditReport,
    pub trace: Vec<TraceRecord>,
}

impl PassResult {
    pub fn eviction_sum(&self) -> f64 {
        self.evicted.iter().fold(0.0, |acc, &(_, chi)| acc + chi)
    }
}

pub(crate) fn threshold(state: &SolutionState, c_x: &[ElementId], params: PassParams) -> f64 {
    params.alpha + (1.0 + params.beta) * state.sum_nu_of(c_x)
}

/// Checks done around a single exchange: the exchange bound
/// `f(C | S \ C) <= Σ_{c∈C} ν(c, S)` before it, monotonicity of surviving
/// incremental values across it, and feasibility after it.
pub(crate) fn audit_exchange(
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    before: &SolutionState,
    after: &SolutionState,
    c_x: &[ElementId],
) -> Vec<String> {
    let mut found = Vec::new();
    if !c_x.is_empty() {
        let rest: Vec<ElementId> = before.elements().into_iter().filter(|e| !c_x.contains(e)).collect();
        let base = oracle.value_unmetered(&rest);
        let joint = oracle.value_unmetered(&before.elements());
        let bound = before.sum_nu_of(c_x);
        if joint - base > bound + AUDIT_TOLERANCE {
            found.push(format!("f(C | S \\ C) = {} exceeds sum of nu over C = {bound}", joint - base));
        }
    }
    for en in before.entries() {
        if let Some(now) = after.nu(en.id) {
            if c_x.is_empty() {
                if (now - en.nu).abs() > AUDIT_TOLERANCE {
                    found.push(format!("nu({}) changed from {} to {now} without eviction", en.id, en.nu));
                }
            } else if now < en.nu - AUDIT_TOLERANCE {
                found.push(format!("nu({}) decreased from {} to {now} after eviction", en.id, en.nu));
            }
        }
    }
    if !mp.feasible(&after.elements()) {
        found.push("solution infeasible after exchange".to_string());
    }
    found
}

/// Incremental driver for a single pass; [`streaming_pass`] feeds it a whole stream.
pub struct PassRunner<'a> {
    oracle: &'a SubmodularOracle,
    mp: &'a PMatchoid,
    meter: CallMeter<'a>,
    init: HashSet<ElementId>,
    seen: HashSet<ElementId>,
    state: SolutionState,
    params: PassParams,
    options: PassOptions,
    accepted: Vec<ElementId>,
    evicted: Vec<(ElementId, f64)>,
    f_init: f64,
    accept_count: usize,
    reject_count: usize,
    discard_count: usize,
    peak_stored: usize,
    audit: AuditReport,
    trace: Vec<TraceRecord>,
}

impl<'a> PassRunner<'a> {
    pub fn new(
        oracle: &'a SubmodularOracle,
        mp: &'a PMatchoid,
        s_init: SolutionState,
        params: PassParams,
        options: PassOptions,
    ) -> Result<Self> {
        if !(params.alpha >= 0.0 && params.beta >= 0.0) {
            return Err(Error::Config(format!(
                "alpha and beta must be non-negative, got {} and {}",
                params.alpha, params.beta
            )));
        }
        let members = s_init.elements();
        for &e in &members {
            oracle.check_element(e)?;
        }
        if !mp.feasible(&members) {
            return Err(Error::InfeasibleInit);
        }
        let mut audit = AuditReport::default();
        if options.audit {
            audit.record(s_init.audit(oracle, params.alpha));
        }
        Ok(PassRunner {
            oracle,
            mp,
            meter: CallMeter::new(oracle),
            init: members.iter().copied().collect(),
            seen: HashSet::new(),
            f_init: s_init.value(),
            peak_stored: 2 * members.len(),
            state: s_init,
            params,
            options,
            accepted: members,
            evicted: Vec::new(),
            accept_count: 0,
            reject_count: 0,
            discard_count: 0,
            audit,
            trace: Vec::new(),
        })
    }

    pub fn state(&self) -> &SolutionState {
        &self.state
    }

    pub fn process(&mut self, x: ElementId) -> Result<Action> {
        self.oracle.check_element(x)?;
        if !self.seen.insert(x) {
            return Err(Error::DuplicateArrival(x));
        }
        self.peak_stored = self.peak_stored.max(self.init.len() + self.state.len() + 1);
        if self.init.contains(&x) {
            self.discard_count += 1;
            self.log(x, Action::Discard, Vec::new());
            return Ok(Action::Discard);
        }
        let c_x = self.mp.exchange_set(x, &self.state)?;
        let (gain, with_x) = self.state.gain(&self.meter, x)?;
        let action = if gain >= threshold(&self.state, &c_x, self.params) {
            let before = self.options.audit.then(|| self.state.clone());
            let removed = self.state.apply_exchange(&self.meter, x, &c_x, with_x)?;
            self.evicted.extend(removed);
            self.accepted.push(x);
            self.accept_count += 1;
            if let Some(before) = before {
                let found = audit_exchange(self.oracle, self.mp, &before, &self.state, &c_x);
                self.audit.record(found);
            }
            Action::Accept
        } else {
            self.reject_count += 1;
            Action::Reject
        };
        if self.options.audit {
            self.audit.record(self.state.audit(self.oracle, self.params.alpha));
        }
        self.log(x, action, c_x);
        Ok(action)
    }

    fn log(&mut self, x: ElementId, action: Action, c_x: Vec<ElementId>) {
        if self.options.trace {
            self.trace.push(TraceRecord {
                elem: x,
                action,
                c_x,
                f_s: self.state.value(),
                sum_nu: self.state.sum_nu(),
            });
        }
    }

    pub fn finish(self) -> PassResult {
        PassResult {
            f_final: self.state.value(),
            s_tilde: self.state,
            accepted: self.accepted,
            evicted: self.evicted,
            f_init: self.f_init,
            params: self.params,
            accept_count: self.accept_count,
            reject_count: self.reject_count,
            discard_count: self.discard_count,
            oracle_calls: self.meter.calls(),
            peak_stored: self.peak_stored,
            audit: self.audit,
            trace: self.trace,
        }
    }
}

/// Runs one pass over `stream` starting from `s_init`.
pub fn streaming_pass(
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    stream: &[ElementId],
    s_init: SolutionState,
    params: PassParams,
    options: PassOptions,
) -> Result<PassResult> {
    let mut runner = PassRunner::new(oracle, mp, s_init, params, options)?;
    for &x in stream {
        runner.process(x)?;
    }
    Ok(runner.finish())
}
