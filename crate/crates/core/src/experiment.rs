//! Experiment orchestration: configs, per-pass CSV traces, JSON summaries.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{brute_force_opt, offline_greedy, MAX_BRUTE_FORCE_ELEMENTS};
use crate::error::{Error, Result};
use crate::generate::{generate_instance, GeneratorSpec};
use crate::instance::{check_permutation, stream_order, Instance};
use crate::matroid::PMatchoid;
use crate::multipass::{multipass_run, measured_delta, MultipassOptions, Schedule};
use crate::oracle::{ElementId, SubmodularOracle};
use crate::pass::{PassOptions, TraceRecord};
use crate::randomized::{multipass_randomized, OfflineMode, RandomizedConfig, RandomizedOutcome};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "MATCHOID_STREAM_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    MonotoneMultipass,
    NonmonotoneRandomized,
    Greedy,
    Exact,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OfflineChoice {
    #[default]
    Exact,
    Heuristic,
}

fn default_epsilon() -> f64 {
    0.5
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    pub algorithm: Algorithm,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub passes: Option<usize>,
    /// `matroid`, `matchoid`, `fixed:B` or `custom:b1,b2,...`; defaults by `p`.
    #[serde(default)]
    pub schedule: Option<String>,
    #[serde(default)]
    pub target_gamma: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub offline: OfflineChoice,
    /// Offline factor reported for heuristic mode.
    #[serde(default)]
    pub gamma_off: Option<f64>,
    /// Overrides the randomized buffer capacity.
    #[serde(default)]
    pub buffer: Option<usize>,
    #[serde(default)]
    pub shuffle_seed: Option<u64>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub audit: bool,
    #[serde(default)]
    pub memo: bool,
    #[serde(default)]
    pub trace: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
    #[serde(default)]
    pub element_trace: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        ExperimentConfig {
            instance: None,
            generator: None,
            algorithm,
            epsilon: default_epsilon(),
            passes: None,
            schedule: None,
            target_gamma: None,
            seed: 0,
            replicates: 1,
            offline: OfflineChoice::Exact,
            gamma_off: None,
            buffer: None,
            shuffle_seed: None,
            threads: None,
            audit: false,
            memo: false,
            trace: None,
            summary: None,
            element_trace: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path.as_ref(), self)
    }

    fn load_instance(&self) -> Result<(Instance, String)> {
        match (&self.instance, &self.generator) {
            (Some(path), None) => Ok((Instance::load(path)?, path.display().to_string())),
            (None, Some(spec)) => Ok((generate_instance(spec)?, spec.family().to_string())),
            _ => Err(Error::Config("exactly one of instance and generator must be given".into())),
        }
    }

    fn offline_mode(&self) -> OfflineMode {
        match self.offline {
            OfflineChoice::Exact => OfflineMode::Exact,
            OfflineChoice::Heuristic => OfflineMode::Heuristic {
                assumed_gamma: self.gamma_off,
            },
        }
    }
}

/// Worker count: the requested number (or the machine's parallelism), capped
/// by `MATCHOID_STREAM_THREADS` when set.
pub fn worker_threads(requested: Option<usize>) -> usize {
    let base = requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    match cap {
        Some(c) if c >= 1 => base.min(c),
        _ => base,
    }
    .max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneRow {
    pub schema_version: u32,
    pub pass: usize,
    pub beta: f64,
    #[serde(rename = "f_S")]
    pub f_s: f64,
    pub delta: f64,
    pub gamma_certified: f64,
    pub accepts: usize,
    pub evictions: usize,
    pub oracle_calls: u64,
    pub stored_elements: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomizedRow {
    pub schema_version: u32,
    pub replicate: usize,
    pub seed: u64,
    pub lambda: f64,
    pub pass: usize,
    pub beta: f64,
    #[serde(rename = "f_S")]
    pub f_s: f64,
    pub delta: f64,
    pub accepts: usize,
    pub evictions: usize,
    pub oracle_calls: u64,
    pub stored_elements: usize,
    pub m: usize,
    pub buffer_peak: usize,
    #[serde(rename = "f_S_prime")]
    pub f_s_prime: f64,
    #[serde(rename = "f_S_bar")]
    pub f_s_bar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassSummary {
    pub pass: usize,
    pub beta: f64,
    #[serde(rename = "f_S")]
    pub f_s: f64,
    pub gamma_certified: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub algorithm: Algorithm,
    pub instance: String,
    pub n: usize,
    pub p: usize,
    pub rank: usize,
    pub epsilon: f64,
    pub passes: usize,
    pub seed: u64,
    pub replicates: usize,
    pub f_final: f64,
    pub gamma_certified_final: Option<f64>,
    pub opt_value: Option<f64>,
    pub ratio: Option<f64>,
    pub oracle_calls: u64,
    pub cache_hits: u64,
    pub peak_storage: usize,
    pub wall_time: f64,
    pub gamma_off: Option<f64>,
    pub solution: Vec<ElementId>,
    pub per_pass: Vec<PassSummary>,
    pub replicate_values: Vec<f64>,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
}

#[derive(Serialize)]
struct ElementTraceLine<'a> {
    pass: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(flatten)]
    record: &'a TraceRecord,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn ratio(opt: f64, value: f64) -> Option<f64> {
    if value > 0.0 {
        Some(opt / value)
    } else if opt <= 0.0 {
        Some(1.0)
    } else {
        None
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for l in lines {
        writeln!(f, "{l}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn element_line(pass: usize, lambda: Option<f64>, record: &TraceRecord) -> String {
    serde_json::to_string(&ElementTraceLine { pass, lambda, record }).expect("trace records serialize")
}

fn exact_opt(instance: &Instance) -> Result<Option<f64>> {
    if instance.n > MAX_BRUTE_FORCE_ELEMENTS {
        return Ok(None);
    }
    // separate oracle so the run's call statistics stay clean
    let (f, mp) = instance.build()?;
    Ok(Some(brute_force_opt(&f, &mp)?.opt_value))
}

fn mean_stddev(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.len() < 2 {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

/// Runs the configured algorithm and writes any requested output files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Summary> {
    let start = Instant::now();
    let (instance, label) = config.load_instance()?;
    let (mut oracle, mp) = instance.build()?;
    if config.memo {
        oracle = oracle.with_memo();
    }
    let stream = stream_order(instance.n, config.shuffle_seed);
    check_permutation(&stream, instance.n)?;
    let opt_value = exact_opt(&instance)?;
    let mut summary = Summary {
        schema_version: SCHEMA_VERSION,
        algorithm: config.algorithm,
        instance: label,
        n: instance.n,
        p: mp.p(),
        rank: mp.rank(),
        epsilon: config.epsilon,
        passes: 0,
        seed: config.seed,
        replicates: config.replicates,
        f_final: 0.0,
        gamma_certified_final: None,
        opt_value,
        ratio: None,
        oracle_calls: 0,
        cache_hits: 0,
        peak_storage: 0,
        wall_time: 0.0,
        gamma_off: None,
        solution: Vec::new(),
        per_pass: Vec::new(),
        replicate_values: Vec::new(),
        mean: None,
        stddev: None,
    };
    match config.algorithm {
        Algorithm::MonotoneMultipass => run_monotone(config, &oracle, &mp, &stream, &mut summary)?,
        Algorithm::NonmonotoneRandomized => run_randomized(config, &oracle, &mp, &stream, &mut summary)?,
        Algorithm::Greedy => {
            let set = offline_greedy(&oracle, &mp)?;
            summary.f_final = oracle.value_unmetered(&set);
            summary.oracle_calls = oracle.stats().calls;
            summary.solution = set;
        }
        Algorithm::Exact => {
            let r = brute_force_opt(&oracle, &mp)?;
            summary.f_final = r.opt_value;
            summary.oracle_calls = r.subsets_examined;
            summary.solution = r.opt_set;
        }
    }
    summary.cache_hits = oracle.stats().cache_hits;
    summary.ratio = opt_value.and_then(|opt| ratio(opt, summary.f_final));
    summary.wall_time = start.elapsed().as_secs_f64();
    if let Some(path) = &config.summary {
        write_json(path, &summary)?;
    }
    Ok(summary)
}

fn schedule_for(config: &ExperimentConfig, p: usize) -> Result<Schedule> {
    match &config.schedule {
        Some(text) => Schedule::parse(text, p),
        None if p == 1 => Ok(Schedule::matroid()),
        None => Ok(Schedule::matchoid(p)),
    }
}

fn run_monotone(
    config: &ExperimentConfig,
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    stream: &[ElementId],
    summary: &mut Summary,
) -> Result<()> {
    let schedule = schedule_for(config, mp.p())?;
    let d = config.passes.unwrap_or_else(|| schedule.default_passes(config.epsilon));
    let options = MultipassOptions {
        target_gamma: config.target_gamma,
        pass: PassOptions {
            audit: config.audit,
            trace: config.element_trace.is_some(),
        },
    };
    let out = multipass_run(oracle, mp, stream, &schedule, d, 0.0, options)?;
    if config.audit {
        let violations: Vec<&String> = out.passes.iter().flat_map(|p| &p.audit.violations).collect();
        if !violations.is_empty() {
            return Err(Error::Config(format!("audit failed: {}", violations[0])));
        }
    }
    let rows: Vec<MonotoneRow> = out
        .passes
        .iter()
        .zip(&out.certificates)
        .map(|(r, c)| MonotoneRow {
            schema_version: SCHEMA_VERSION,
            pass: c.pass,
            beta: c.beta,
            f_s: r.f_final,
            delta: c.delta,
            gamma_certified: c.gamma_certified,
            accepts: r.accept_count,
            evictions: r.evicted.len(),
            oracle_calls: r.oracle_calls,
            stored_elements: r.peak_stored,
        })
        .collect();
    if let Some(path) = &config.trace {
        write_csv(path, &rows)?;
    }
    if let Some(path) = &config.element_trace {
        let lines: Vec<String> = out
            .passes
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.trace.iter().map(move |t| element_line(i + 1, None, t)))
            .collect();
        write_lines(path, &lines)?;
    }
    summary.passes = out.passes.len();
    summary.f_final = out.value();
    summary.gamma_certified_final = out.certificates.last().and_then(|c| finite(c.gamma_certified));
    summary.oracle_calls = out.oracle_calls;
    summary.peak_storage = out.peak_stored;
    summary.solution = out.solution.elements();
    summary.per_pass = rows
        .iter()
        .map(|r| PassSummary {
            pass: r.pass,
            beta: r.beta,
            f_s: r.f_s,
            gamma_certified: finite(r.gamma_certified),
        })
        .collect();
    summary.replicate_values = vec![summary.f_final; config.replicates.max(1)];
    let (mean, stddev) = mean_stddev(&summary.replicate_values);
    summary.mean = mean;
    summary.stddev = stddev;
    Ok(())
}

fn randomized_rows(replicate: usize, out: &RandomizedOutcome) -> Vec<RandomizedRow> {
    let mut rows = Vec::new();
    for copy in &out.copies {
        let mut f_prev = copy.passes.first().map_or(0.0, |p| p.result.pass.f_init);
        for (i, cp) in copy.passes.iter().enumerate() {
            let r = &cp.result.pass;
            rows.push(RandomizedRow {
                schema_version: SCHEMA_VERSION,
                replicate,
                seed: copy.seed,
                lambda: copy.lambda,
                pass: i + 1,
                beta: r.params.beta,
                f_s: r.f_final,
                delta: measured_delta(f_prev, r.f_final),
                accepts: r.accept_count,
                evictions: r.evicted.len(),
                oracle_calls: r.oracle_calls,
                stored_elements: cp.stored,
                m: out.m,
                buffer_peak: cp.result.buffer_peak,
                f_s_prime: cp.f_s_prime_best,
                f_s_bar: cp.f_s_bar,
            });
            f_prev = r.f_final;
        }
    }
    rows
}

fn run_randomized(
    config: &ExperimentConfig,
    oracle: &SubmodularOracle,
    mp: &PMatchoid,
    stream: &[ElementId],
    summary: &mut Summary,
) -> Result<()> {
    let replicates = config.replicates.max(1);
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    let mut values = Vec::with_capacity(replicates);
    let schedule = config.schedule.as_deref().map(|s| Schedule::parse(s, mp.p())).transpose()?;
    for rep in 0..replicates {
        let rc = RandomizedConfig {
            epsilon: config.epsilon,
            passes: config.passes,
            schedule: schedule.clone(),
            buffer: config.buffer,
            offline: config.offline_mode(),
            seed: config.seed,
            replicate: rep as u64,
            threads: worker_threads(config.threads),
            options: PassOptions {
                audit: config.audit,
                trace: config.element_trace.is_some(),
            },
        };
        let out = multipass_randomized(oracle, mp, stream, &rc)?;
        if config.audit {
            if let Some(v) = out.audit().violations.first() {
                return Err(Error::Config(format!("audit failed: {v}")));
            }
        }
        rows.extend(randomized_rows(rep, &out));
        if config.element_trace.is_some() {
            for copy in &out.copies {
                for (i, cp) in copy.passes.iter().enumerate() {
                    lines.extend(cp.result.pass.trace.iter().map(|t| element_line(i + 1, Some(copy.lambda), t)));
                }
            }
        }
        values.push(out.value);
        summary.oracle_calls += out.oracle_calls;
        summary.peak_storage = summary.peak_storage.max(out.peak_stored);
        if rep == 0 {
            summary.passes = out.d;
            summary.f_final = out.value;
            summary.solution = out.solution.clone();
            summary.gamma_off = rc.offline.gamma_off();
            let best = &out.copies[out.best_copy];
            summary.per_pass = best
                .passes
                .iter()
                .enumerate()
                .map(|(i, cp)| PassSummary {
                    pass: i + 1,
                    beta: cp.result.pass.params.beta,
                    f_s: cp.result.pass.f_final,
                    gamma_certified: None,
                })
                .collect();
        }
    }
    if let Some(path) = &config.trace {
        write_csv(path, &rows)?;
    }
    if let Some(path) = &config.element_trace {
        write_lines(path, &lines)?;
    }
    let (mean, stddev) = mean_stddev(&values);
    summary.mean = mean;
    summary.stddev = stddev;
    summary.replicate_values = values;
    Ok(())
}

pub fn load_summary(path: impl AsRef<Path>) -> Result<Summary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// One row of the ratio-vs-pass table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub pass: usize,
    pub runs: usize,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    pub mean_gamma_certified: Option<f64>,
}

/// Aggregates `opt / f(S_i)` per pass across summaries that carry an optimum.
pub fn report(summaries: &[Summary]) -> Vec<ReportRow> {
    let passes = summaries.iter().map(|s| s.per_pass.len()).max().unwrap_or(0);
    let mut rows = Vec::new();
    for i in 0..passes {
        let mut ratios = Vec::new();
        let mut gammas = Vec::new();
        for s in summaries {
            let (Some(opt), Some(row)) = (s.opt_value, s.per_pass.get(i)) else {
                continue;
            };
            if let Some(r) = ratio(opt, row.f_s) {
                ratios.push(r);
            }
            if let Some(g) = row.gamma_certified {
                gammas.push(g);
            }
        }
        if ratios.is_empty() {
            continue;
        }
        rows.push(ReportRow {
            pass: i + 1,
            runs: ratios.len(),
            mean_ratio: ratios.iter().sum::<f64>() / ratios.len() as f64,
            max_ratio: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            mean_gamma_certified: (!gammas.is_empty()).then(|| gammas.iter().sum::<f64>() / gammas.len() as f64),
        });
    }
    rows
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    write_csv(path, rows)
}
