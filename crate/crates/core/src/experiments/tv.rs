//! Total-variation distance from an empirical law to Poisson(θ).

use rand_distr::{Distribution, WeightedAliasIndex};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Discrete, DiscreteCDF, Poisson};

use super::distribution::EmpiricalDistribution;
use crate::error::{invalid, Error, Result};
use crate::sampling::RandomStream;

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;
pub const DEFAULT_BOOTSTRAP_LEVEL: f64 = 0.99;

/// Poisson(θ) masses up to `k_max` plus the tail beyond it.
struct PoissonTable {
    pmf: Vec<f64>,
    base_kmax: u64,
    dist: Poisson,
}

impl PoissonTable {
    fn new(theta: f64, max_observed: u64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(invalid("theta", format!("must be positive and finite, got {theta}")));
        }
        let dist = Poisson::new(theta).map_err(|e| invalid("theta", e.to_string()))?;
        let base_kmax = (theta + 10.0 * theta.sqrt()).ceil() as u64;
        let kmax = base_kmax.max(max_observed);
        let pmf = (0..=kmax).map(|k| dist.pmf(k)).collect();
        Ok(PoissonTable { pmf, base_kmax, dist })
    }

    /// `½ Σ_{k ≤ k_max} |p̂_k - p_k| + ½ P(Y > k_max)` with
    /// `k_max = max(max observed, θ + 10√θ)`.
    fn tv(&self, observed: impl Iterator<Item = (u64, f64)>, max_observed: u64) -> f64 {
        let kmax = self.base_kmax.max(max_observed);
        let mut matched_pmf = 0.0;
        let mut l1 = 0.0;
        for (k, p_hat) in observed {
            let p = self.pmf[k as usize];
            l1 += (p_hat - p).abs();
            matched_pmf += p;
        }
        // every k ≤ k_max without observations contributes its full mass
        let head: f64 = self.pmf[..=kmax as usize].iter().sum();
        l1 += (head - matched_pmf).max(0.0);
        let tail = self.dist.sf(kmax);
        (0.5 * (l1 + tail)).clamp(0.0, 1.0)
    }
}

pub fn empirical_tv(dist: &EmpiricalDistribution, theta: f64) -> Result<f64> {
    let max = dist.max_value().ok_or(Error::EmptyDistribution)?;
    let table = PoissonTable::new(theta, max)?;
    let n = dist.replicates() as f64;
    Ok(table.tv(dist.counts().map(|(k, c)| (k, c as f64 / n)), max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub resamples: usize,
}

impl TvEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Empirical TV with a percentile bootstrap interval: each resample draws
/// `replicates` values from the empirical law.
pub fn bootstrap_tv(
    dist: &EmpiricalDistribution,
    theta: f64,
    resamples: usize,
    level: f64,
    stream: RandomStream,
) -> Result<TvEstimate> {
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid("level", format!("must lie in (0, 1), got {level}")));
    }
    if resamples == 0 {
        return Err(invalid("resamples", "must be positive"));
    }
    let max = dist.max_value().ok_or(Error::EmptyDistribution)?;
    let table = PoissonTable::new(theta, max)?;
    let n = dist.replicates();
    let value = table.tv(dist.counts().map(|(k, c)| (k, c as f64 / n as f64)), max);
    let (values, weights): (Vec<u64>, Vec<u64>) = dist.counts().unzip();
    let sampler = WeightedAliasIndex::new(weights).map_err(|e| invalid("distribution", e.to_string()))?;
    let mut rng = stream.rng();
    let mut tally = vec![0u64; values.len()];
    let mut stats = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        tally.iter_mut().for_each(|t| *t = 0);
        for _ in 0..n {
            tally[sampler.sample(&mut rng)] += 1;
        }
        let resample_max = values
            .iter()
            .zip(&tally)
            .filter(|(_, &t)| t > 0)
            .map(|(&v, _)| v)
            .max()
            .unwrap_or(0);
        let observed = values
            .iter()
            .zip(&tally)
            .filter(|(_, &t)| t > 0)
            .map(|(&v, &t)| (v, t as f64 / n as f64));
        stats.push(table.tv(observed, resample_max));
    }
    stats.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    let quantile = |q: f64| {
        let pos = q * (stats.len() - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos.fract());
        let j = (i + 1).min(stats.len() - 1);
        stats[i] + frac * (stats[j] - stats[i])
    };
    Ok(TvEstimate {
        value,
        lo: quantile(0.5 * alpha),
        hi: quantile(1.0 - 0.5 * alpha),
        level,
        resamples,
    })
}
