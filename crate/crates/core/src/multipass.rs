//! Multi-pass driver for monotone objectives.
//!
//! Pass `i` runs [`streaming_pass`] from the previous solution with threshold
//! weight `β_i`. After each pass the driver measures `δ_i = f(S_{i-1}) / f(S_i)`
//! and certifies
//!
//! ```text
//! f(OPT) <= min{ γ_{i-1} δ_i,  (p/β_i + p - 1)(1 - δ_i) + p + β_i p + 1 } · f(S_i) + kα
//! ```
//!
//! Pass 1 starts from the empty set, so only the second branch applies; with
//! `β_1 = 1` and `f(∅) = 0` it evaluates to `4p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matroid::PMatchoid;
use crate::oracle::{CallMeter, ElementId, SubmodularOracle};
use crate::pass::{streaming_pass, PassOptions, PassParams, PassResult};
use crate::state::SolutionState;

/// Replacement for a non-positive recurrence step.
pub const BETA_MIN: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `β_i = 1/i`.
    MatroidHarmonic,
    /// `β_1 = 1`, `β_i = (γ_{i-1} - 1 - p) / (γ_{i-1} - 1 + p)` along the
    /// worst-case recurrence `γ_1 = 4p`, `γ_i = 4p γ_{i-1}(γ_{i-1} - 1) / (γ_{i-1} - 1 + p)²`.
    MatchoidRecurrence,
    Fixed(f64),
    /// Explicit list; the last entry repeats past its end.
    Custom(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub p: usize,
}

/// One row of an oblivious schedule: the threshold weight and the worst-case
/// guarantee it delivers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlannedPass {
    pub beta: f64,
    pub gamma: f64,
    pub clamped: bool,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, p: usize) -> Self {
        Schedule { kind, p }
    }

    pub fn matroid() -> Self {
        Schedule::new(ScheduleKind::MatroidHarmonic, 1)
    }

    pub fn matchoid(p: usize) -> Self {
        Schedule::new(ScheduleKind::MatchoidRecurrence, p)
    }

    /// Parses `matroid`, `matchoid`, `fixed:B` or `custom:B1,B2,...`.
    pub fn parse(text: &str, p: usize) -> Result<Self> {
        let kind = match text {
            "matroid" | "matroid-harmonic" => ScheduleKind::MatroidHarmonic,
            "matchoid" | "matchoid-recurrence" => ScheduleKind::MatchoidRecurrence,
            other => {
                let parse_beta = |s: &str| -> Result<f64> {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|b| b.is_finite() && *b > 0.0)
                        .ok_or_else(|| Error::Config(format!("invalid beta '{s}'")))
                };
                if let Some(b) = other.strip_prefix("fixed:") {
                    ScheduleKind::Fixed(parse_beta(b)?)
                } else if let Some(list) = other.strip_prefix("custom:") {
                    let betas = list.split(',').map(parse_beta).collect::<Result<Vec<_>>>()?;
                    ScheduleKind::Custom(betas)
                } else {
                    return Err(Error::Config(format!("unknown schedule '{other}'")));
                }
            }
        };
        Ok(Schedule::new(kind, p))
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ScheduleKind::MatroidHarmonic => "matroid".into(),
            ScheduleKind::MatchoidRecurrence => "matchoid".into(),
            ScheduleKind::Fixed(b) => format!("fixed:{b}"),
            ScheduleKind::Custom(bs) => {
                let parts: Vec<String> = bs.iter().map(|b| b.to_string()).collect();
                format!("custom:{}", parts.join(","))
            }
        }
    }

    /// `β_i` given the previous worst-case guarantee (ignored except by the
    /// matchoid recurrence).
    pub fn beta(&self, i: usize, gamma_prev: f64) -> f64 {
        assert!(i >= 1, "passes are numbered from 1");
        match &self.kind {
            ScheduleKind::MatroidHarmonic => 1.0 / i as f64,
            ScheduleKind::MatchoidRecurrence => {
                if i == 1 {
                    return 1.0;
                }
                let p = self.p as f64;
                let beta = (gamma_prev - 1.0 - p) / (gamma_prev - 1.0 + p);
                if beta > 0.0 {
                    beta
                } else {
                    BETA_MIN
                }
            }
            ScheduleKind::Fixed(b) => *b,
            ScheduleKind::Custom(bs) => *bs.get(i - 1).or(bs.last()).unwrap_or(&1.0),
        }
    }

    /// The first `d` passes of the schedule with their worst-case guarantees.
    ///
    /// The matchoid recurrence uses its closed form; other schedules take the
    /// value at the balance point of the two certificate branches, which is the
    /// largest certificate any `δ ∈ [0, 1]` can produce.
    pub fn plan(&self, d: usize) -> Vec<PlannedPass> {
        let p = self.p as f64;
        let mut out: Vec<PlannedPass> = Vec::with_capacity(d);
        for i in 1..=d {
            let gamma_prev = out.last().map_or(f64::INFINITY, |r| r.gamma);
            let beta = self.beta(i, gamma_prev);
            let row = if i == 1 {
                PlannedPass {
                    beta,
                    gamma: progress_branch(beta, 0.0, self.p),
                    clamped: false,
                }
            } else if self.kind == ScheduleKind::MatchoidRecurrence {
                if gamma_prev <= 1.0 + p {
                    PlannedPass {
                        beta,
                        gamma: gamma_prev,
                        clamped: true,
                    }
                } else {
                    let g = gamma_prev;
                    PlannedPass {
                        beta,
                        gamma: 4.0 * p * g * (g - 1.0) / ((g - 1.0 + p) * (g - 1.0 + p)),
                        clamped: false,
                    }
                }
            } else {
                let delta = balance_delta(gamma_prev, beta, self.p);
                PlannedPass {
                    beta,
                    gamma: if delta < 1.0 { gamma_prev * delta } else { gamma_prev },
                    clamped: false,
                }
            };
            out.push(row);
        }
        out
    }

    /// Pass count reaching the advertised `p + 1 + ε` (or `2 + ε`) guarantee.
    pub fn default_passes(&self, epsilon: f64) -> usize {
        let p = self.p as f64;
        let d = match self.kind {
            ScheduleKind::MatroidHarmonic => (2.0 / epsilon).ceil(),
            _ => (4.0 * p / epsilon).ceil(),
        };
        (d as usize).max(1)
    }
}

/// Second certificate branch: `(p/β + p - 1)(1 - δ) + p + βp + 1`.
pub fn progress_branch(beta: f64, delta: f64, p: usize) -> f64 {
    let p = p as f64;
    (p / beta + p - 1.0) * (1.0 - delta) + p + beta * p + 1.0
}

/// The `δ` at which `γ_{i-1} δ` equals [`progress_branch`]:
/// `p(1 + β)² / (p + β(γ_{i-1} - 1 + p))`.
pub fn balance_delta(gamma_prev: f64, beta: f64, p: usize) -> f64 {
    let p = p as f64;
    p * (1.0 + beta) * (1.0 + beta) / (p + beta * (gamma_prev - 1.0 + p))
}

/// Minimum of the two certificate branches. Pass `f64::INFINITY` as
/// `gamma_prev` for the first pass.
pub fn certified_gamma(gamma_prev: f64, beta: f64, delta: f64, p: usize) -> f64 {
    let previous = if gamma_prev.is_finite() {
        gamma_prev * delta
    } else {
        f64::INFINITY
    };
    previous.min(progress_branch(beta, delta, p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeCertificate {
    pub pass: usize,
    pub beta: f64,
    pub delta: f64,
    /// Certified factor; infinite when `f(S_i) = 0`.
    pub gamma_certified: f64,
    /// Worst-case factor promised by the schedule for this pass.
    pub gamma_schedule: f64,
    /// Additive `k·α` term of the certificate.
    pub k_alpha_slack: f64,
}

impl GuaranteeCertificate {
    /// Whether `gamma_certified · f(S_i) + kα >= opt_value` (within `tol`).
    pub fn covers(&self, f_s: f64, opt_value: f64, tol: f64) -> bool {
        if opt_value <= tol {
            return true;
        }
        self.gamma_certified * f_s + self.k_alpha_slack + tol >= opt_value
    }
}

/// `f(S_{i-1}) / f(S_i)`, with the degenerate cases resolved as documented:
/// `0` when only the previous value is zero, `1` when both are.
pub fn measured_delta(f_prev: f64, f_cur: f64) -> f64 {
    if f_cur > 0.0 {
        f_prev.max(0.0) / f_cur
    } else if f_prev <= 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

#[allow(clippy::too_many_arguments)]
pub fn certify(
    pass: usize,
    gamma_prev: f64,
    beta: f64,
    f_prev: f64,
    f_cur: f64,
    p: usize,
    k_alpha: f64,
    gamma_schedule: f64,
) -> GuaranteeCertificate {
    let delta = measured_delta(f_prev, f_cur);
    let gamma_certified = if f_cur > 0.0 {
        certified_gamma(gamma_prev, beta, delta, p)
    } else {
        f64::INFINITY
    };
    GuaranteeCertificate {
        pass,
        beta,
        delta,
        gamma_certified,
        gamma_schedule,
        k_alpha_slack: k_alpha,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MultipassOptions {
    /// Stop after the first pass whose certificate is at most this factor.
    pub target_gamma: Option<f64>,
    pub pass: PassOptions,
}

#[derive(Clone, Debug)]
pub struct MultipassOutcome {
    pub solution: SolutionState,
    pub passes: Vec<PassResult>,
    pub certificates: Vec<GuaranteeCertificate>,
    /// Largest number of elements held at once (previous solution, current
    /// solution and the element being processed).
    pub peak_stored: usize,
    pub oracle_calls: u64,
}

impl MultipassOutcome {
    pub fn value(&self) -> f64 {
        self.solution.value()
    }
}

pub fn multipass_run(
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    stream: &[ElementId],
    schedule: &Schedule,
    d: usize,
    alpha: f64,
    options: MultipassOptions,
) -> Result<MultipassOutcome> {
    if d == 0 {
        return Err(Error::Config("at least one pass is required".into()));
    }
    let meter = CallMeter::new(oracle);
    let mut current = SolutionState::empty(&meter)?;
    let mut oracle_calls = meter.calls();
    let plan = schedule.plan(d);
    let k_alpha = mp.rank() as f64 * alpha;
    let mut passes = Vec::with_capacity(d);
    let mut certificates = Vec::with_capacity(d);
    let mut gamma_prev = f64::INFINITY;
    let mut peak_stored = 0;
    for (idx, planned) in plan.iter().enumerate() {
        let f_prev = current.value();
        let params = PassParams {
            alpha,
            beta: planned.beta,
        };
        let result = streaming_pass(oracle, mp, stream, current, params, options.pass)?;
        let cert = certify(
            idx + 1,
            gamma_prev,
            planned.beta,
            f_prev,
            result.f_final,
            mp.p(),
            k_alpha,
            planned.gamma,
        );
        gamma_prev = cert.gamma_certified;
        peak_stored = peak_stored.max(result.peak_stored);
        oracle_calls += result.oracle_calls;
        current = result.s_tilde.clone();
        passes.push(result);
        let stop = options.target_gamma.is_some_and(|t| cert.gamma_certified <= t);
        certificates.push(cert);
        if stop {
            break;
        }
    }
    Ok(MultipassOutcome {
        solution: current,
        passes,
        certificates,
        peak_stored,
        oracle_calls,
    })
}
