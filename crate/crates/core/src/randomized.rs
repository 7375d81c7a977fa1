//! Randomized buffered local search for non-negative, possibly non-monotone
//! objectives.
//!
//! Threshold-passing arrivals are parked in a buffer of capacity `m`. When the
//! buffer fills, one element is drawn uniformly and exchanged into `S`, then
//! the remaining candidates are re-tested against the new `S`. At the end of a
//! pass an offline solver is run on what is left in the buffer, giving a
//! second solution `S'`. `f(OPT)` is guessed on a grid of powers of two, with
//! one independent copy of the whole procedure per guess.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::best_feasible_subset;
use crate::error::{Error, Result};
use crate::matroid::PMatchoid;
use crate::multipass::{Schedule, ScheduleKind};
use crate::oracle::{CallMeter, ElementId, SubmodularOracle};
use crate::pass::{
    audit_exchange, streaming_pass, threshold, Action, AuditReport, PassOptions, PassParams, PassResult,
    TraceRecord,
};
use crate::state::SolutionState;

/// Largest buffer the exact offline solver accepts.
pub const MAX_EXACT_OFFLINE: usize = 22;

#[derive(Clone, Debug, PartialEq)]
pub struct BufferState {
    /// Candidates with their stream positions, in ascending position.
    pub items: Vec<(ElementId, usize)>,
    pub m: usize,
    pub rng_seed: u64,
}

impl BufferState {
    pub fn new(m: usize, rng_seed: u64) -> Self {
        BufferState {
            items: Vec::new(),
            m,
            rng_seed,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() >= self.m
    }

    pub fn elements(&self) -> Vec<ElementId> {
        self.items.iter().map(|&(e, _)| e).collect()
    }

    /// Uniform position in the buffer.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.items.len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuessGrid {
    pub tau: f64,
    pub lambdas: Vec<f64>,
}

impl GuessGrid {
    /// Powers of two in `[tau, k * tau]`. When `tau` sits just above a power of
    /// two and `k = 1` the interval holds none; the next power up is used.
    /// A non-positive `tau` or `k = 0` gives the single guess `0`.
    pub fn from_tau(tau: f64, k: usize) -> Self {
        if tau.is_nan() || tau <= 0.0 || k == 0 {
            return GuessGrid {
                tau: tau.max(0.0),
                lambdas: vec![0.0],
            };
        }
        let upper = k as f64 * tau;
        let mut exp = tau.log2().ceil() as i32;
        // log2 rounding can land one step off in either direction
        while 2f64.powi(exp - 1) >= tau {
            exp -= 1;
        }
        while 2f64.powi(exp) < tau {
            exp += 1;
        }
        let mut lambdas = Vec::new();
        while 2f64.powi(exp) <= upper {
            lambdas.push(2f64.powi(exp));
            exp += 1;
        }
        if lambdas.is_empty() {
            lambdas.push(2f64.powi(exp));
        }
        GuessGrid { tau, lambdas }
    }

    pub fn is_degenerate(&self) -> bool {
        self.lambdas == [0.0]
    }
}

/// Dedicated pass computing `τ = max_e f({e})` (one call per element).
pub fn guess_grid(oracle: &SubmodularOracle, stream: &[ElementId], k: usize) -> Result<(GuessGrid, u64)> {
    let meter = CallMeter::new(oracle);
    let mut tau = 0.0f64;
    for &e in stream {
        tau = tau.max(meter.value(&[e])?);
    }
    Ok((GuessGrid::from_tau(tau, k), meter.calls()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum OfflineMode {
    /// Best feasible subset of the buffer; factor 1.
    Exact,
    /// Repeated streaming passes over the buffer. The factor is whatever the
    /// caller configured; it is reported, not established.
    Heuristic { assumed_gamma: Option<f64> },
}

impl OfflineMode {
    /// Offline factor used in reports, if known.
    pub fn gamma_off(&self) -> Option<f64> {
        match self {
            OfflineMode::Exact => Some(1.0),
            OfflineMode::Heuristic { assumed_gamma } => *assumed_gamma,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OfflineMode::Exact => "exact",
            OfflineMode::Heuristic { .. } => "heuristic",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OfflineSolution {
    pub set: Vec<ElementId>,
    pub value: f64,
    pub oracle_calls: u64,
}

/// Solves the residual buffer offline.
pub fn offline_solve(
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    buffer: &[ElementId],
    mode: OfflineMode,
) -> Result<OfflineSolution> {
    match mode {
        OfflineMode::Exact => {
            if buffer.len() > MAX_EXACT_OFFLINE {
                return Err(Error::Size {
                    what: "offline buffer",
                    size: buffer.len(),
                    limit: MAX_EXACT_OFFLINE,
                });
            }
            let r = best_feasible_subset(oracle, mp, buffer)?;
            Ok(OfflineSolution {
                set: r.opt_set,
                value: r.opt_value,
                oracle_calls: r.subsets_examined,
            })
        }
        OfflineMode::Heuristic { .. } => {
            let meter = CallMeter::new(oracle);
            let mut current = SolutionState::empty(&meter)?;
            let mut calls = meter.calls();
            let mut best = (current.elements(), current.value());
            for i in 1..=2 * mp.p() {
                let params = PassParams {
                    alpha: 0.0,
                    beta: 1.0 / i as f64,
                };
                let r = streaming_pass(oracle, mp, buffer, current, params, PassOptions::default())?;
                calls += r.oracle_calls;
                if r.f_final > best.1 {
                    best = (r.s_tilde.elements(), r.f_final);
                }
                current = r.s_tilde;
            }
            Ok(OfflineSolution {
                set: best.0,
                value: best.1,
                oracle_calls: calls,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct RandomizedPassResult {
    /// Streaming-side result: `S̃`, acceptances, evictions, counters, audit.
    pub pass: PassResult,
    pub s_prime: OfflineSolution,
    /// Buffer contents at the end of the stream.
    pub buffer: BufferState,
    pub buffer_peak: usize,
    pub selections: usize,
    pub drops: usize,
}

/// Incremental driver for one randomized pass.
pub struct RandomizedRunner<'a, R: Rng> {
    oracle: &'a SubmodularOracle,
    mp: &'a PMatchoid,
    meter: CallMeter<'a>,
    rng: &'a mut R,
    init: HashSet<ElementId>,
    seen: HashSet<ElementId>,
    state: SolutionState,
    params: PassParams,
    options: PassOptions,
    buffer: BufferState,
    position: usize,
    /// Elements held outside this pass (the best offline solution so far).
    carried: usize,
    accepted: Vec<ElementId>,
    evicted: Vec<(ElementId, f64)>,
    f_init: f64,
    reject_count: usize,
    discard_count: usize,
    selections: usize,
    drops: usize,
    buffer_peak: usize,
    peak_stored: usize,
    audit: AuditReport,
    trace: Vec<TraceRecord>,
}

impl<'a, R: Rng> RandomizedRunner<'a, R> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        oracle: &'a SubmodularOracle,
        mp: &'a PMatchoid,
        s_init: SolutionState,
        params: PassParams,
        buffer: BufferState,
        rng: &'a mut R,
        carried: usize,
        options: PassOptions,
    ) -> Result<Self> {
        if buffer.m == 0 {
            return Err(Error::Config("buffer capacity must be at least 1".into()));
        }
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
        Ok(RandomizedRunner {
            oracle,
            mp,
            meter: CallMeter::new(oracle),
            rng,
            init: members.iter().copied().collect(),
            seen: HashSet::new(),
            f_init: s_init.value(),
            peak_stored: 2 * members.len() + carried,
            state: s_init,
            params,
            options,
            buffer,
            position: 0,
            carried,
            accepted: members,
            evicted: Vec::new(),
            reject_count: 0,
            discard_count: 0,
            selections: 0,
            drops: 0,
            buffer_peak: 0,
            audit,
            trace: Vec::new(),
        })
    }

    pub fn state(&self) -> &SolutionState {
        &self.state
    }

    pub fn buffer(&self) -> &BufferState {
        &self.buffer
    }

    fn passes(&self, x: ElementId) -> Result<(bool, Vec<ElementId>, f64, f64)> {
        let c_x = self.mp.exchange_set(x, &self.state)?;
        let (gain, with_x) = self.state.gain(&self.meter, x)?;
        let ok = gain >= threshold(&self.state, &c_x, self.params);
        Ok((ok, c_x, gain, with_x))
    }

    pub fn process(&mut self, x: ElementId) -> Result<Action> {
        self.oracle.check_element(x)?;
        if !self.seen.insert(x) {
            return Err(Error::DuplicateArrival(x));
        }
        let pos = self.position;
        self.position += 1;
        if self.init.contains(&x) {
            self.discard_count += 1;
            self.log(x, Action::Discard, Vec::new());
            self.check_buffer();
            return Ok(Action::Discard);
        }
        let (ok, c_x, _, _) = self.passes(x)?;
        if !ok {
            self.reject_count += 1;
            self.log(x, Action::Reject, c_x);
            self.check_buffer();
            return Ok(Action::Reject);
        }
        self.buffer.items.push((x, pos));
        self.buffer_peak = self.buffer_peak.max(self.buffer.len());
        self.note_storage();
        let mut action = Action::Buffer;
        if self.buffer.is_full() {
            let idx = self.buffer.draw(self.rng);
            let (y, _) = self.buffer.items.remove(idx);
            if y == x {
                action = Action::Accept;
            } else {
                self.log(x, Action::Buffer, Vec::new());
            }
            self.select(y)?;
            self.sweep()?;
        } else {
            self.log(x, Action::Buffer, Vec::new());
        }
        self.check_buffer();
        Ok(action)
    }

    fn select(&mut self, y: ElementId) -> Result<()> {
        let (ok, c_y, _, with_y) = self.passes(y)?;
        if self.options.audit && !ok {
            self.audit.record(vec![format!("selected {y} fails the threshold")]);
        }
        let before = self.options.audit.then(|| self.state.clone());
        let removed = self.state.apply_exchange(&self.meter, y, &c_y, with_y)?;
        self.evicted.extend(removed);
        self.accepted.push(y);
        self.selections += 1;
        if let Some(before) = before {
            let found = audit_exchange(self.oracle, self.mp, &before, &self.state, &c_y);
            self.audit.record(found);
        }
        if self.options.audit {
            self.audit.record(self.state.audit(self.oracle, self.params.alpha));
        }
        self.log(y, Action::Accept, c_y);
        Ok(())
    }

    /// Re-tests every buffered candidate against the current `S`, in
    /// ascending stream position, and drops the failures.
    fn sweep(&mut self) -> Result<()> {
        let items = std::mem::take(&mut self.buffer.items);
        let mut kept = Vec::with_capacity(items.len());
        let mut dropped = Vec::new();
        for (e, pos) in items {
            let (ok, c_e, _, _) = self.passes(e)?;
            if ok {
                kept.push((e, pos));
            } else {
                dropped.push((e, c_e));
            }
        }
        if self.options.audit {
            // survivors must not depend on the sweep order
            let reversed: Vec<ElementId> = kept
                .iter()
                .map(|&(e, _)| e)
                .chain(dropped.iter().map(|(e, _)| *e))
                .rev()
                .filter(|&e| self.passes_unmetered(e))
                .collect();
            let mut a: Vec<ElementId> = kept.iter().map(|&(e, _)| e).collect();
            let mut b = reversed;
            a.sort();
            b.sort();
            self.audit.checks += 1;
            if a != b {
                self.audit.violations.push("sweep survivors depend on order".into());
            }
        }
        self.buffer.items = kept;
        for (e, c_e) in dropped {
            self.drops += 1;
            self.log(e, Action::Drop, c_e);
        }
        Ok(())
    }

    fn passes_unmetered(&self, x: ElementId) -> bool {
        let Ok(c_x) = self.mp.exchange_set(x, &self.state) else {
            return false;
        };
        let mut with_x = self.state.elements();
        with_x.push(x);
        let gain = self.oracle.value_unmetered(&with_x) - self.state.value();
        gain >= threshold(&self.state, &c_x, self.params)
    }

    fn check_buffer(&mut self) {
        if !self.options.audit {
            return;
        }
        let mut found = Vec::new();
        if self.buffer.len() > self.buffer.m {
            found.push(format!("buffer holds {} > m = {}", self.buffer.len(), self.buffer.m));
        }
        for &(e, _) in &self.buffer.items {
            if !self.passes_unmetered(e) {
                found.push(format!("buffered {e} no longer passes the threshold"));
            }
        }
        self.audit.record(found);
    }

    fn note_storage(&mut self) {
        let stored = self.buffer.len() + self.init.len() + self.state.len() + self.carried;
        self.peak_stored = self.peak_stored.max(stored);
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

    /// Ends the pass and solves the residual buffer.
    pub fn finish(mut self, offline: OfflineMode) -> Result<RandomizedPassResult> {
        self.note_storage();
        let s_prime = offline_solve(self.oracle, self.mp, &self.buffer.elements(), offline)?;
        let accept_count = self.accepted.len() - self.init.len();
        let pass = PassResult {
            f_final: self.state.value(),
            s_tilde: self.state,
            accepted: self.accepted,
            evicted: self.evicted,
            f_init: self.f_init,
            params: self.params,
            accept_count,
            reject_count: self.reject_count + self.drops,
            discard_count: self.discard_count,
            oracle_calls: self.meter.calls() + s_prime.oracle_calls,
            peak_stored: self.peak_stored,
            audit: self.audit,
            trace: self.trace,
        };
        Ok(RandomizedPassResult {
            pass,
            s_prime,
            buffer: self.buffer,
            buffer_peak: self.buffer_peak,
            selections: self.selections,
            drops: self.drops,
        })
    }
}

/// Runs one randomized pass over `stream` starting from `s_init`.
#[allow(clippy::too_many_arguments)]
pub fn randomized_pass<R: Rng>(
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    stream: &[ElementId],
    s_init: SolutionState,
    params: PassParams,
    m: usize,
    rng: &mut R,
    offline: OfflineMode,
    options: PassOptions,
) -> Result<RandomizedPassResult> {
    let mut runner = RandomizedRunner::new(oracle, mp, s_init, params, BufferState::new(m, 0), rng, 0, options)?;
    for &x in stream {
        runner.process(x)?;
    }
    runner.finish(offline)
}

/// Per-guess seed: the master seed mixed with the replicate and guess index.
pub fn derive_seed(master: u64, replicate: u64, lambda_index: u64) -> u64 {
    master ^ replicate.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ lambda_index.wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// Buffer capacity `ceil(4 d k / ε'^2)`.
pub fn buffer_capacity(d: usize, k: usize, epsilon_prime: f64) -> usize {
    ((4.0 * d as f64 * k as f64 / (epsilon_prime * epsilon_prime)).ceil() as usize).max(1)
}

#[derive(Clone, Debug)]
pub struct RandomizedConfig {
    pub epsilon: f64,
    /// Pass count; defaults to the schedule's pass count for `epsilon`.
    pub passes: Option<usize>,
    /// Defaults to the harmonic schedule for `p = 1`, the recurrence otherwise.
    pub schedule: Option<Schedule>,
    /// Overrides the computed buffer capacity.
    pub buffer: Option<usize>,
    pub offline: OfflineMode,
    pub seed: u64,
    pub replicate: u64,
    /// Worker threads for the guess copies; `1` runs them in turn.
    pub threads: usize,
    pub options: PassOptions,
}

impl RandomizedConfig {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        RandomizedConfig {
            epsilon,
            passes: None,
            schedule: None,
            buffer: None,
            offline: OfflineMode::Exact,
            seed,
            replicate: 0,
            threads: 1,
            options: PassOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CopyPass {
    pub result: RandomizedPassResult,
    /// Best offline value so far, `f(S'_i)`.
    pub f_s_prime_best: f64,
    /// `max(f(S_i), f(S'_i))`.
    pub f_s_bar: f64,
    pub stored: usize,
}

#[derive(Clone, Debug)]
pub struct GuessCopy {
    pub lambda: f64,
    pub alpha: f64,
    pub seed: u64,
    pub passes: Vec<CopyPass>,
    pub best: Vec<ElementId>,
    pub best_value: f64,
    pub best_is_streaming: bool,
    pub peak_stored: usize,
    pub oracle_calls: u64,
}

#[derive(Clone, Debug)]
pub struct RandomizedOutcome {
    pub solution: Vec<ElementId>,
    pub value: f64,
    pub grid: GuessGrid,
    pub best_copy: usize,
    pub epsilon_prime: f64,
    pub d: usize,
    pub m: usize,
    pub betas: Vec<f64>,
    pub copies: Vec<GuessCopy>,
    /// Sum of per-copy peaks.
    pub peak_stored: usize,
    /// Passes over the stream including the one that finds `τ`.
    pub stream_passes: usize,
    pub oracle_calls: u64,
}

impl RandomizedOutcome {
    pub fn audit(&self) -> AuditReport {
        let mut out = AuditReport::default();
        for c in &self.copies {
            for p in &c.passes {
                out.merge(&p.result.pass.audit);
            }
        }
        out
    }
}

struct Copy {
    lambda: f64,
    alpha: f64,
    seed: u64,
    rng: ChaCha8Rng,
    current: SolutionState,
    best_prime: OfflineSolution,
    passes: Vec<CopyPass>,
    calls: u64,
}

/// Runs the guess copies for `d` passes each and returns the best `S̄`.
pub fn multipass_randomized(
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    stream: &[ElementId],
    config: &RandomizedConfig,
) -> Result<RandomizedOutcome> {
    if !(config.epsilon > 0.0 && config.epsilon <= 0.5) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1/2], got {}", config.epsilon)));
    }
    let p = mp.p();
    let k = mp.rank();
    let schedule = config.schedule.clone().unwrap_or_else(|| {
        if p == 1 {
            Schedule::matroid()
        } else {
            Schedule::new(ScheduleKind::MatchoidRecurrence, p)
        }
    });
    let d = config.passes.unwrap_or_else(|| schedule.default_passes(config.epsilon));
    if d == 0 {
        return Err(Error::Config("at least one pass is required".into()));
    }
    let epsilon_prime = config.epsilon / p as f64;
    let m = config.buffer.unwrap_or_else(|| buffer_capacity(d, k, epsilon_prime));
    let betas: Vec<f64> = schedule.plan(d).iter().map(|r| r.beta).collect();

    let (grid, tau_calls) = guess_grid(oracle, stream, k)?;
    let meter = CallMeter::new(oracle);
    let empty = SolutionState::empty(&meter)?;
    let empty_prime = OfflineSolution {
        set: Vec::new(),
        value: empty.value(),
        oracle_calls: 0,
    };
    let mut copies: Vec<Copy> = grid
        .lambdas
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let seed = derive_seed(config.seed, config.replicate, j as u64);
            Copy {
                lambda,
                alpha: if k == 0 { 0.0 } else { epsilon_prime * lambda / (2.0 * k as f64) },
                seed,
                rng: ChaCha8Rng::seed_from_u64(seed),
                current: empty.clone(),
                best_prime: empty_prime.clone(),
                passes: Vec::with_capacity(d),
                calls: 0,
            }
        })
        .collect();

    let pool = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?,
        )
    } else {
        None
    };

    for &beta in &betas {
        let run = |c: &mut Copy| run_copy_pass(oracle, mp, stream, c, beta, m, config);
        match &pool {
            Some(pool) => pool.install(|| copies.par_iter_mut().map(run).collect::<Result<()>>())?,
            None => run_serial_pass(oracle, mp, stream, &mut copies, beta, m, config)?,
        };
    }

    let mut reports = Vec::with_capacity(copies.len());
    let mut best_copy = 0;
    for (j, c) in copies.into_iter().enumerate() {
        let streaming = c.current.value() >= c.best_prime.value;
        let (best, best_value) = if streaming {
            (c.current.elements(), c.current.value())
        } else {
            (c.best_prime.set.clone(), c.best_prime.value)
        };
        let peak_stored = c.passes.iter().map(|p| p.stored).max().unwrap_or(0);
        reports.push(GuessCopy {
            lambda: c.lambda,
            alpha: c.alpha,
            seed: c.seed,
            passes: c.passes,
            best,
            best_value,
            best_is_streaming: streaming,
            peak_stored,
            oracle_calls: c.calls,
        });
        if best_value > reports[best_copy].best_value {
            best_copy = j;
        }
    }
    let peak_stored = reports.iter().map(|c| c.peak_stored).sum();
    let oracle_calls = tau_calls + meter.calls() + reports.iter().map(|c| c.oracle_calls).sum::<u64>();
    Ok(RandomizedOutcome {
        solution: reports[best_copy].best.clone(),
        value: reports[best_copy].best_value,
        grid,
        best_copy,
        epsilon_prime,
        d,
        m,
        betas,
        copies: reports,
        peak_stored,
        stream_passes: d + 1,
        oracle_calls,
    })
}

fn record_pass(copy: &mut Copy, result: RandomizedPassResult) {
    if result.s_prime.value > copy.best_prime.value {
        copy.best_prime = result.s_prime.clone();
    }
    copy.calls += result.pass.oracle_calls;
    copy.current = result.pass.s_tilde.clone();
    let stored = result.pass.peak_stored;
    copy.passes.push(CopyPass {
        f_s_prime_best: copy.best_prime.value,
        f_s_bar: copy.current.value().max(copy.best_prime.value),
        stored,
        result,
    });
}

fn run_copy_pass(
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    stream: &[ElementId],
    copy: &mut Copy,
    beta: f64,
    m: usize,
    config: &RandomizedConfig,
) -> Result<()> {
    let params = PassParams { alpha: copy.alpha, beta };
    let carried = copy.best_prime.set.len();
    let mut runner = RandomizedRunner::new(
        oracle,
        mp,
        copy.current.clone(),
        params,
        BufferState::new(m, copy.seed),
        &mut copy.rng,
        carried,
        config.options,
    )?;
    for &x in stream {
        runner.process(x)?;
    }
    let result = runner.finish(config.offline)?;
    record_pass(copy, result);
    Ok(())
}

/// One shared read of the stream, each element handed to every copy in turn.
fn run_serial_pass(
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    stream: &[ElementId],
    copies: &mut [Copy],
    beta: f64,
    m: usize,
    config: &RandomizedConfig,
) -> Result<()> {
    let mut runners = Vec::with_capacity(copies.len());
    for c in copies.iter_mut() {
        let params = PassParams { alpha: c.alpha, beta };
        let carried = c.best_prime.set.len();
        runners.push(RandomizedRunner::new(
            oracle,
            mp,
            c.current.clone(),
            params,
            BufferState::new(m, c.seed),
            &mut c.rng,
            carried,
            config.options,
        )?);
    }
    for &x in stream {
        for r in runners.iter_mut() {
            r.process(x)?;
        }
    }
    let results: Vec<RandomizedPassResult> =
        runners.into_iter().map(|r| r.finish(config.offline)).collect::<Result<_>>()?;
    for (c, result) in copies.iter_mut().zip(results) {
        record_pass(c, result);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::Matroid;
    use crate::pass::streaming_pass;

    fn ids(v: &[u32]) -> Vec<ElementId> {
        v.iter().map(|&i| ElementId(i)).collect()
    }

    fn uniform(n: usize, k: usize) -> PMatchoid {
        PMatchoid::new(n, 1, vec![Matroid::uniform((0..n).map(ElementId::from).collect(), k)], None).unwrap()
    }

    #[test]
    fn grid_examples() {
        assert_eq!(GuessGrid::from_tau(5.0, 4).lambdas, vec![8.0, 16.0]);
        assert_eq!(GuessGrid::from_tau(1.0, 1).lambdas, vec![1.0]);
        assert_eq!(GuessGrid::from_tau(3.0, 8).lambdas, vec![4.0, 8.0, 16.0]);
        assert_eq!(GuessGrid::from_tau(0.0, 8).lambdas, vec![0.0]);
        // no power of two in [5, 5]
        assert_eq!(GuessGrid::from_tau(5.0, 1).lambdas, vec![8.0]);
    }

    #[test]
    fn grid_size_bound() {
        for k in 1..=200usize {
            for tau in [0.3, 1.0, 1.7, 5.0, 64.0, 100.0] {
                let g = GuessGrid::from_tau(tau, k);
                let bound = (k as f64).log2().ceil() as usize + 1;
                assert!(g.lambdas.len() <= bound, "k={k} tau={tau}: {:?}", g.lambdas);
            }
        }
        assert!(GuessGrid::from_tau(1.0, 64).lambdas.len() <= 7);
    }

    #[test]
    fn capacity_formula() {
        assert_eq!(buffer_capacity(4, 4, 0.5), 256);
    }

    #[test]
    fn uniform_draws() {
        let mut buf = BufferState::new(8, 7);
        buf.items = (0..8).map(|i| (ElementId(i), i as usize)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 8];
        let draws = 10_000;
        for _ in 0..draws {
            counts[buf.draw(&mut rng)] += 1;
        }
        let expected = draws as f64 / 8.0;
        let mut chi2 = 0.0;
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.125).abs() <= 0.02, "{counts:?}");
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // chi-square with 7 degrees of freedom at 0.001
        assert!(chi2 < 24.322, "chi2 = {chi2}");
    }

    #[test]
    fn unit_buffer_matches_streaming_pass() {
        let f = SubmodularOracle::coverage(
            vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3], vec![4]],
            vec![1.0, 2.0, 3.0, 4.0, 0.5],
        )
        .unwrap();
        let mp = uniform(5, 2);
        let stream = f.ground();
        let opts = PassOptions { audit: true, trace: true };
        let params = PassParams { alpha: 0.1, beta: 0.5 };
        let det = streaming_pass(&f, &mp, &stream, SolutionState::from_elements(&f, &[]).unwrap(), params, opts).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init = SolutionState::from_elements(&f, &[]).unwrap();
            let r = randomized_pass(&f, &mp, &stream, init, params, 1, &mut rng, OfflineMode::Exact, opts).unwrap();
            assert_eq!(r.pass.trace, det.trace);
            assert_eq!(r.pass.s_tilde, det.s_tilde);
            assert_eq!(r.pass.evicted, det.evicted);
            assert!(r.buffer.is_empty());
            assert!(r.pass.audit.is_clean(), "{:?}", r.pass.audit.violations);
        }
    }

    #[test]
    fn large_buffer_never_fills() {
        let f = SubmodularOracle::modular(vec![1.0, 2.0, 3.0]).unwrap();
        let mp = uniform(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let init = SolutionState::from_elements(&f, &[]).unwrap();
        let params = PassParams { alpha: 0.0, beta: 1.0 };
        let r = randomized_pass(&f, &mp, &f.ground(), init, params, 10, &mut rng, OfflineMode::Exact, PassOptions::default())
            .unwrap();
        assert_eq!(r.selections, 0);
        assert!(r.pass.s_tilde.is_empty());
        assert_eq!(r.s_prime.value, 5.0);
        assert_eq!(r.buffer.elements(), ids(&[0, 1, 2]));
    }

    #[test]
    fn offline_tiny_buffers() {
        let f = SubmodularOracle::table(1, vec![1.0, 3.0], true).unwrap();
        let mp = uniform(1, 1);
        let none = offline_solve(&f, &mp, &[], OfflineMode::Exact).unwrap();
        assert!(none.set.is_empty());
        let one = offline_solve(&f, &mp, &ids(&[0]), OfflineMode::Exact).unwrap();
        assert_eq!(one.set, ids(&[0]));
        let g = SubmodularOracle::table(1, vec![3.0, 3.0], true).unwrap();
        assert!(offline_solve(&g, &mp, &ids(&[0]), OfflineMode::Exact).unwrap().set.is_empty());
        let h = offline_solve(&f, &mp, &ids(&[0]), OfflineMode::Heuristic { assumed_gamma: None }).unwrap();
        assert_eq!(h.set, ids(&[0]));
    }

    #[test]
    fn exact_offline_size_limit() {
        let f = SubmodularOracle::modular(vec![1.0; 23]).unwrap();
        let mp = PMatchoid::new(23, 1, vec![], Some(23)).unwrap();
        let r = offline_solve(&f, &mp, &f.ground(), OfflineMode::Exact);
        assert!(matches!(r, Err(Error::Size { .. })));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let f = SubmodularOracle::directed_cut(
            6,
            vec![(0, 1, 2.0), (1, 2, 1.0), (2, 0, 1.5), (3, 4, 1.0), (4, 5, 2.0), (5, 3, 0.5), (0, 5, 1.0)],
        )
        .unwrap();
        let mp = uniform(6, 3);
        let mut cfg = RandomizedConfig::new(0.5, 11);
        cfg.buffer = Some(2);
        cfg.options = PassOptions { audit: true, trace: true };
        let a = multipass_randomized(&f, &mp, &f.ground(), &cfg).unwrap();
        cfg.threads = 3;
        let b = multipass_randomized(&f, &mp, &f.ground(), &cfg).unwrap();
        assert_eq!(a.solution, b.solution);
        assert_eq!(a.copies.len(), b.copies.len());
        for (x, y) in a.copies.iter().zip(&b.copies) {
            for (p, q) in x.passes.iter().zip(&y.passes) {
                assert_eq!(p.result.pass.trace, q.result.pass.trace);
            }
        }
        assert!(a.audit().is_clean(), "{:?}", a.audit().violations);
        assert!(mp.feasible(&a.solution));
        assert_eq!(a.stream_passes, a.d + 1);
    }

    #[test]
    fn offline_best_is_non_decreasing() {
        let f = SubmodularOracle::directed_cut(5, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 0, 1.0)])
            .unwrap();
        let mp = uniform(5, 2);
        let mut cfg = RandomizedConfig::new(0.5, 3);
        cfg.passes = Some(4);
        cfg.buffer = Some(3);
        let out = multipass_randomized(&f, &mp, &f.ground(), &cfg).unwrap();
        for c in &out.copies {
            for w in c.passes.windows(2) {
                assert!(w[1].f_s_prime_best >= w[0].f_s_prime_best);
            }
        }
    }
}
