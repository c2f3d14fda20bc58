//! Monte-Carlo experiments: empirical success probabilities, the minimal-N
//! search and per-trial first-passage sample counts.
//!
//! Trial `t` always draws its probes from `spawn_substream(master_seed, t)`,
//! so results are independent of scheduling and of how many workers run.
//! Within a trial, the estimate at `N` is the running mean of the first `N`
//! probes of that trial's stream; the same numbers come out whether `N` is
//! evaluated alone or as part of a scan.

mod figures;
pub mod svg;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::TolerancePair;
use crate::error::{Error, Result};
use crate::estimator::{estimate_trace, RunningEstimate};
use crate::linop::{exact_trace, ImplicitOperator};
use crate::sampler::{spawn_substream, ProbeDistribution};

pub use figures::{run_figure, FigureConfig, FigureId, FigureOutput};

pub const DEFAULT_TRIALS: u64 = 500;
pub const CSV_HEADER: &str = "figure,method,n,rank,theta_or_param,N,trials,successes,success_prob,eps,delta,seed";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub method: ProbeDistribution,
    pub n: usize,
    pub samples: u64,
    pub trials: u64,
    pub successes: u64,
    pub success_prob: f64,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub wall_time_ms: u64,
}

impl ExperimentRecord {
    /// Wilson score interval for `success_prob`.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.successes, self.trials, z)
    }

    pub fn meets(&self, delta: f64) -> bool {
        meets_target(self.successes, self.trials, delta)
    }
}

fn meets_target(successes: u64, trials: u64, delta: f64) -> bool {
    successes as f64 >= (1.0 - delta) * trials as f64 - 1e-9
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = z * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn nonzero_trace(op: &ImplicitOperator) -> Result<f64> {
    let tr = exact_trace(op);
    if tr == 0.0 || !tr.is_finite() {
        return Err(Error::ZeroTrace);
    }
    Ok(tr)
}

#[inline]
fn within(value: f64, truth: f64, eps: f64) -> bool {
    (value - truth).abs() <= eps * truth.abs()
}

/// Count trials whose estimate lands within `eps · |truth|` of `truth`.
/// `trial` maps a trial index to that trial's estimate.
pub fn count_successes<F>(truth: f64, eps: f64, trials: u64, trial: F) -> Result<u64>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| trial(t).map(|v| u64::from(within(v, truth, eps))))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Empirical `Pr(|tr_D^N(A) - tr(A)| <= ε tr(A))` over `trials` seeded trials.
pub fn success_probability(
    op: &ImplicitOperator,
    method: ProbeDistribution,
    samples: u64,
    tol: TolerancePair,
    trials: u64,
    master_seed: u64,
) -> Result<ExperimentRecord> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let tr = nonzero_trace(op)?;
    let start = Instant::now();
    let successes = count_successes(tr, tol.eps(), trials, |t| {
        estimate_trace(op, method, samples as usize, spawn_substream(master_seed, t)).map(|e| e.value)
    })?;
    Ok(ExperimentRecord {
        method,
        n: op.dim(),
        samples,
        trials,
        successes,
        success_prob: successes as f64 / trials as f64,
        eps: tol.eps(),
        delta: tol.delta(),
        seed: master_seed,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinSampleResult {
    pub method: ProbeDistribution,
    /// Smallest `N` with success probability `>= 1 - δ`; `None` when censored.
    pub n_star: Option<u64>,
    pub n_max: u64,
    pub probe_history: Vec<ExperimentRecord>,
}

impl MinSampleResult {
    pub fn censored(&self) -> bool {
        self.n_star.is_none()
    }

    pub fn record_at(&self, samples: u64) -> Option<&ExperimentRecord> {
        self.probe_history.iter().find(|r| r.samples == samples)
    }
}

/// How many samples to add per synchronisation step of the scan, and which
/// `N` land in the history.
fn stride(n: u64) -> u64 {
    if n <= 100 {
        1
    } else {
        (n as f64 * 0.05).ceil() as u64
    }
}

/// Scan `N = 1, 2, ...` until the success probability reaches `1 - δ`.
///
/// Every `N` is checked (the running estimates make that free); the history
/// keeps every `N <= 100`, then one record per 5% step, plus `N*` and `N* - 1`.
pub fn min_sample_size(
    op: &ImplicitOperator,
    method: ProbeDistribution,
    tol: TolerancePair,
    trials: u64,
    master_seed: u64,
    n_max: u64,
) -> Result<MinSampleResult> {
    if n_max == 0 || trials == 0 {
        return Err(Error::InvalidArgument("n_max and trials must be >= 1".into()));
    }
    let tr = nonzero_trace(op)?;
    let n_max = if method == ProbeDistribution::UnitWithoutReplacement { n_max.min(op.dim() as u64) } else { n_max };
    let eps = tol.eps();
    let start = Instant::now();
    let mut states: Vec<RunningEstimate> =
        (0..trials).map(|t| RunningEstimate::new(op, method, spawn_substream(master_seed, t))).collect();

    let record = |samples: u64, successes: u64| ExperimentRecord {
        method,
        n: op.dim(),
        samples,
        trials,
        successes,
        success_prob: successes as f64 / trials as f64,
        eps,
        delta: tol.delta(),
        seed: master_seed,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };

    let mut history = Vec::new();
    let mut done = 0u64;
    let mut next_recorded = 1u64;
    let mut prev: Option<(u64, u64)> = None;
    while done < n_max {
        let block = (if done < 100 { 16 } else { stride(done) }).min(n_max - done) as usize;
        let hits: Vec<Vec<bool>> = states
            .par_iter_mut()
            .map(|s| {
                (0..block)
                    .map(|_| s.step().map(|_| within(s.value(), tr, eps)))
                    .collect::<Result<Vec<bool>>>()
            })
            .collect::<Result<_>>()?;
        for k in 0..block {
            let samples = done + k as u64 + 1;
            let successes = hits.iter().filter(|h| h[k]).count() as u64;
            if meets_target(successes, trials, tol.delta()) {
                if let Some((pn, ps)) = prev {
                    if history.last().map(|r: &ExperimentRecord| r.samples) != Some(pn) {
                        history.push(record(pn, ps));
                    }
                }
                history.push(record(samples, successes));
                return Ok(MinSampleResult { method, n_star: Some(samples), n_max, probe_history: history });
            }
            if samples == next_recorded {
                history.push(record(samples, successes));
                next_recorded += stride(samples);
            }
            prev = Some((samples, successes));
        }
        done += block as u64;
    }
    if let Some((pn, ps)) = prev {
        if history.last().map(|r| r.samples) != Some(pn) {
            history.push(record(pn, ps));
        }
    }
    Ok(MinSampleResult { method, n_star: None, n_max, probe_history: history })
}

/// Success records for every `N = 1..=n_hi`, from one running scan.
pub fn success_curve(
    op: &ImplicitOperator,
    method: ProbeDistribution,
    tol: TolerancePair,
    trials: u64,
    master_seed: u64,
    n_hi: u64,
) -> Result<Vec<ExperimentRecord>> {
    if n_hi == 0 || trials == 0 {
        return Err(Error::InvalidArgument("n_hi and trials must be >= 1".into()));
    }
    if method == ProbeDistribution::UnitWithoutReplacement && n_hi > op.dim() as u64 {
        return Err(Error::Exhausted { n: op.dim() });
    }
    let tr = nonzero_trace(op)?;
    let eps = tol.eps();
    let start = Instant::now();
    let hits: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut run = RunningEstimate::new(op, method, spawn_substream(master_seed, t));
            (0..n_hi).map(|_| run.step().map(|_| within(run.value(), tr, eps))).collect()
        })
        .collect::<Result<_>>()?;
    let elapsed = start.elapsed().as_millis() as u64;
    Ok((0..n_hi as usize)
        .map(|k| {
            let successes = hits.iter().filter(|h| h[k]).count() as u64;
            ExperimentRecord {
                method,
                n: op.dim(),
                samples: k as u64 + 1,
                trials,
                successes,
                success_prob: successes as f64 / trials as f64,
                eps,
                delta: tol.delta(),
                seed: master_seed,
                wall_time_ms: elapsed,
            }
        })
        .collect())
}

/// Per-trial number of probes after which the running estimate first lies
/// within `eps · |tr|`; `None` for trials that do not get there by `n_max`.
pub fn first_passage_samples(
    op: &ImplicitOperator,
    method: ProbeDistribution,
    eps: f64,
    trials: u64,
    master_seed: u64,
    n_max: u64,
) -> Result<Vec<Option<u64>>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Tolerance(format!("eps = {eps} must lie in (0, 1)")));
    }
    let tr = nonzero_trace(op)?;
    let n_max = if method == ProbeDistribution::UnitWithoutReplacement { n_max.min(op.dim() as u64) } else { n_max };
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut run = RunningEstimate::new(op, method, spawn_substream(master_seed, t));
            for k in 1..=n_max {
                run.step()?;
                if within(run.value(), tr, eps) {
                    return Ok(Some(k));
                }
            }
            Ok(None)
        })
        .collect()
}

/// One output line in the shared CSV schema; empty fields are not applicable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub figure: String,
    pub method: String,
    pub n: usize,
    pub rank: Option<u64>,
    pub param: Option<f64>,
    pub samples: Option<u64>,
    pub trials: Option<u64>,
    pub successes: Option<u64>,
    pub success_prob: Option<f64>,
    pub eps: f64,
    pub delta: f64,
    pub seed: Option<u64>,
}

fn field<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, ToString::to_string)
}

impl CsvRow {
    pub fn from_record(figure: &str, rec: &ExperimentRecord, rank: Option<u64>, param: Option<f64>) -> Self {
        Self {
            figure: figure.to_string(),
            method: rec.method.name().to_string(),
            n: rec.n,
            rank,
            param,
            samples: Some(rec.samples),
            trials: Some(rec.trials),
            successes: Some(rec.successes),
            success_prob: Some(rec.success_prob),
            eps: rec.eps,
            delta: rec.delta,
            seed: Some(rec.seed),
        }
    }

    pub fn to_csv_line(&self) -> String {
        [
            self.figure.clone(),
            self.method.clone(),
            self.n.to_string(),
            field(&self.rank),
            field(&self.param),
            field(&self.samples),
            field(&self.trials),
            field(&self.successes),
            field(&self.success_prob),
            self.eps.to_string(),
            self.delta.to_string(),
            field(&self.seed),
        ]
        .join(",")
    }
}

/// Full CSV document (header plus rows), newline-terminated.
pub fn render_csv(rows: &[CsvRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}
