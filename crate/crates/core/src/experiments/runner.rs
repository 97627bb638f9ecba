//! Replicated simulation of the edge count, single experiments and sweeps.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distribution::EmpiricalDistribution;
use super::persist::JsonlSink;
use super::tv::{bootstrap_tv, DEFAULT_BOOTSTRAP_LEVEL, DEFAULT_BOOTSTRAP_RESAMPLES};
use crate::analytics::bounds::{calibrated_params, mean_edges, BoundEngine, BoundOptions, BoundReport};
use crate::error::{invalid, Error, Result};
use crate::graph::{BackendChoice, EdgeCounter};
use crate::sampling::{ln_expected_count, sample_process, ModelParams, RandomStream, DEFAULT_POINT_BUDGET};

/// Stream reserved for bootstrap resampling; replicate `i` uses stream `i`.
pub const BOOTSTRAP_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Worker threads; 0 uses the ambient rayon pool.
    pub workers: usize,
    /// Largest expected point count accepted per replicate.
    pub point_budget: f64,
    pub backend: BackendChoice,
    pub bootstrap_resamples: usize,
    pub bootstrap_level: f64,
    pub bounds: BoundOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: 0,
            point_budget: DEFAULT_POINT_BUDGET,
            backend: BackendChoice::Auto,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            bootstrap_level: DEFAULT_BOOTSTRAP_LEVEL,
            bounds: BoundOptions::default(),
        }
    }
}

/// Simulates `replicates` independent copies of the edge count with default
/// options.
pub fn run_replications(params: &ModelParams, replicates: u64, seed: u64) -> Result<EmpiricalDistribution> {
    run_replications_with(params, replicates, seed, &RunOptions::default())
}

/// Replicate `i` draws from stream `(seed, i)`, so the result does not
/// depend on how replicates are scheduled across workers.
pub fn run_replications_with(
    params: &ModelParams,
    replicates: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<EmpiricalDistribution> {
    if replicates == 0 {
        return Err(invalid("replicates", "must be positive"));
    }
    let window = params.edge_window();
    let ln_mean = ln_expected_count(params, &window);
    if ln_mean > options.point_budget.ln() {
        return Err(Error::Infeasible {
            expected: ln_mean.exp(),
            budget: options.point_budget,
        });
    }
    let counter = EdgeCounter::new(params).backend(options.backend);
    let run = || {
        (0..replicates)
            .into_par_iter()
            .map(|i| -> Result<u64> {
                let config = sample_process(params, &window, RandomStream::new(seed, i), options.point_budget)?;
                Ok(counter.count(&config)?.count)
            })
            .try_fold(EmpiricalDistribution::new, |mut acc, k| {
                acc.record(k?);
                Ok::<_, Error>(acc)
            })
            .try_reduce(EmpiricalDistribution::new, |a, b| Ok(a.merge(&b)))
    };
    if options.workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| invalid("workers", e.to_string()))?
            .install(run)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    #[serde(flatten)]
    pub params: ModelParams,
    pub seed: u64,
    pub replicates: u64,
    pub emp_mean: f64,
    pub emp_mean_se: f64,
    pub emp_var: f64,
    pub emp_var_se: f64,
    pub emp_tv: f64,
    pub tv_lo: f64,
    pub tv_hi: f64,
    pub tv_level: f64,
    pub bounds: BoundReport,
    pub runtime_s: f64,
    pub distribution: EmpiricalDistribution,
}

impl ExperimentRecord {
    pub fn theta(&self) -> f64 {
        self.bounds.theta
    }

    pub fn tv_half_width(&self) -> f64 {
        0.5 * (self.tv_hi - self.tv_lo)
    }
}

/// Replications, empirical TV to Poisson(θ) with a bootstrap interval, and
/// the assembled bounds. `θ` defaults to the mean when `params` carries none.
pub fn simulate(params: &ModelParams, replicates: u64, seed: u64, options: &RunOptions) -> Result<ExperimentRecord> {
    let start = Instant::now();
    let theta = params.theta().unwrap_or_else(|| mean_edges(params));
    if !(theta > 0.0) {
        return Err(invalid("theta", "the mean edge count is zero; supply a positive theta"));
    }
    let params = params.with_theta(theta)?;
    let dist = run_replications_with(&params, replicates, seed, options)?;
    let tv = bootstrap_tv(
        &dist,
        theta,
        options.bootstrap_resamples,
        options.bootstrap_level,
        RandomStream::new(seed, BOOTSTRAP_STREAM),
    )?;
    let bounds = BoundEngine::new(&params, options.bounds).tv_bound(theta)?;
    let (emp_mean, emp_mean_se) = dist.mean_of(|k| k)?;
    Ok(ExperimentRecord {
        params,
        seed,
        replicates,
        emp_mean,
        emp_mean_se,
        emp_var: dist.variance()?,
        emp_var_se: dist.variance_std_error()?,
        emp_tv: tv.value,
        tv_lo: tv.lo,
        tv_hi: tv.hi,
        tv_level: tv.level,
        bounds,
        runtime_s: start.elapsed().as_secs_f64(),
        distribution: dist,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub skipped: bool,
    pub delta: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<ExperimentRecord>,
    pub skipped: Vec<SkippedEntry>,
}

/// One experiment per `δ` at fixed `d`, with `λ` solved so the mean is `θ`.
/// An infeasible entry is recorded as skipped and the sweep continues.
pub fn convergence_sweep(
    deltas: &[f64],
    d: usize,
    theta: f64,
    replicates: u64,
    seed: u64,
    options: &RunOptions,
    mut sink: Option<&mut JsonlSink>,
) -> Result<SweepOutcome> {
    if deltas.is_empty() {
        return Err(invalid("deltas", "need at least one delta"));
    }
    if deltas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("deltas", "must be strictly decreasing"));
    }
    let mut outcome = SweepOutcome::default();
    for &delta in deltas {
        let params = calibrated_params(d, delta, theta)?;
        match simulate(&params, replicates, seed, options) {
            Ok(record) => {
                if let Some(s) = sink.as_deref_mut() {
                    s.append(&record)?;
                }
                outcome.records.push(record);
            }
            Err(e @ Error::Infeasible { .. }) => {
                let skip = SkippedEntry {
                    skipped: true,
                    delta,
                    reason: e.to_string(),
                };
                if let Some(s) = sink.as_deref_mut() {
                    s.append(&skip)?;
                }
                outcome.skipped.push(skip);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(outcome)
}

/// Indices `i` where the empirical TV increased significantly from entry
/// `i` to `i + 1`, i.e. the bootstrap intervals separate upward.
pub fn tv_trend_violations(records: &[ExperimentRecord]) -> Vec<usize> {
    records
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].tv_lo > w[0].tv_hi)
        .map(|(i, _)| i)
        .collect()
}
