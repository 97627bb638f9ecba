//! Empirical law of a nonnegative integer statistic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    count_by_value: BTreeMap<u64, u64>,
    replicates: u64,
}

impl EmpiricalDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(samples: &[u64]) -> Self {
        let mut dist = Self::new();
        for &k in samples {
            dist.record(k);
        }
        dist
    }

    /// Builds a distribution from explicit counts; zero counts are dropped.
    pub fn from_counts(counts: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut dist = Self::new();
        for (k, c) in counts {
            dist.record_many(k, c);
        }
        dist
    }

    pub fn record(&mut self, k: u64) {
        self.record_many(k, 1);
    }

    pub fn record_many(&mut self, k: u64, count: u64) {
        if count > 0 {
            *self.count_by_value.entry(k).or_insert(0) += count;
            self.replicates += count;
        }
    }

    pub fn merge(mut self, other: &EmpiricalDistribution) -> Self {
        for (&k, &c) in &other.count_by_value {
            self.record_many(k, c);
        }
        self
    }

    pub fn merge_all<'a>(parts: impl IntoIterator<Item = &'a EmpiricalDistribution>) -> Self {
        parts.into_iter().fold(Self::new(), |acc, p| acc.merge(p))
    }

    pub fn replicates(&self) -> u64 {
        self.replicates
    }

    pub fn is_empty(&self) -> bool {
        self.replicates == 0
    }

    pub fn count(&self, k: u64) -> u64 {
        self.count_by_value.get(&k).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.count_by_value.iter().map(|(&k, &c)| (k, c))
    }

    pub fn max_value(&self) -> Option<u64> {
        self.count_by_value.keys().next_back().copied()
    }

    pub fn pmf(&self, k: u64) -> f64 {
        if self.replicates == 0 {
            0.0
        } else {
            self.count(k) as f64 / self.replicates as f64
        }
    }

    /// Sample mean.
    pub fn mean(&self) -> Result<f64> {
        self.require_nonempty()?;
        let sum: f64 = self.counts().map(|(k, c)| k as f64 * c as f64).sum();
        Ok(sum / self.replicates as f64)
    }

    /// Unbiased sample variance (zero for a single replicate).
    pub fn variance(&self) -> Result<f64> {
        let mean = self.mean()?;
        if self.replicates < 2 {
            return Ok(0.0);
        }
        let ss: f64 = self.counts().map(|(k, c)| c as f64 * (k as f64 - mean).powi(2)).sum();
        Ok(ss / (self.replicates - 1) as f64)
    }

    /// Mean of `f(k)` over the sample and its standard error.
    pub fn mean_of(&self, f: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
        self.require_nonempty()?;
        let n = self.replicates as f64;
        let mean = self.counts().map(|(k, c)| c as f64 * f(k as f64)).sum::<f64>() / n;
        let ss: f64 = self.counts().map(|(k, c)| c as f64 * (f(k as f64) - mean).powi(2)).sum();
        let var = if self.replicates > 1 { ss / (n - 1.0) } else { 0.0 };
        Ok((mean, (var / n).sqrt()))
    }

    /// Standard error of the sample variance, from the fourth central moment.
    pub fn variance_std_error(&self) -> Result<f64> {
        let mean = self.mean()?;
        let n = self.replicates as f64;
        let m2: f64 = self.counts().map(|(k, c)| c as f64 * (k as f64 - mean).powi(2)).sum::<f64>() / n;
        let m4: f64 = self.counts().map(|(k, c)| c as f64 * (k as f64 - mean).powi(4)).sum::<f64>() / n;
        Ok(((m4 - m2 * m2).max(0.0) / n).sqrt())
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.replicates == 0 {
            Err(Error::EmptyDistribution)
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_distribution_rejected() {
        let e = EmpiricalDistribution::new();
        assert_eq!(e.mean(), Err(Error::EmptyDistribution));
        assert_eq!(e.variance(), Err(Error::EmptyDistribution));
        assert_eq!(e.pmf(0), 0.0);
    }

    #[test]
    fn merge_identity() {
        let x = EmpiricalDistribution::from_samples(&[0, 1, 1, 4]);
        assert_eq!(x.clone().merge(&EmpiricalDistribution::new()), x);
        assert_eq!(x.replicates(), 4);
        assert_eq!(x.count(1), 2);
    }

    #[test]
    fn zero_counts_dropped() {
        let x = EmpiricalDistribution::from_counts([(3, 0), (2, 5)]);
        assert_eq!(x.counts().collect::<Vec<_>>(), vec![(2, 5)]);
    }

    proptest! {
        #[test]
        fn merge_commutes_and_associates(
            a in prop::collection::vec(0u64..30, 0..50),
            b in prop::collection::vec(0u64..30, 0..50),
            c in prop::collection::vec(0u64..30, 0..50),
        ) {
            let (da, db, dc) = (
                EmpiricalDistribution::from_samples(&a),
                EmpiricalDistribution::from_samples(&b),
                EmpiricalDistribution::from_samples(&c),
            );
            prop_assert_eq!(da.clone().merge(&db), db.clone().merge(&da));
            prop_assert_eq!(da.clone().merge(&db).merge(&dc), da.clone().merge(&db.clone().merge(&dc)));
        }

        #[test]
        fn merged_moments_equal_pooled(
            a in prop::collection::vec(0u64..100, 1..60),
            b in prop::collection::vec(0u64..100, 1..60),
        ) {
            let merged = EmpiricalDistribution::from_samples(&a).merge(&EmpiricalDistribution::from_samples(&b));
            let pooled: Vec<f64> = a.iter().chain(&b).map(|&k| k as f64).collect();
            let n = pooled.len() as f64;
            let mean = pooled.iter().sum::<f64>() / n;
            let var = pooled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!((merged.mean().unwrap() - mean).abs() <= 1e-12 * mean.max(1.0));
            prop_assert!((merged.variance().unwrap() - var).abs() <= 1e-10 * var.max(1.0));
            prop_assert_eq!(merged.replicates(), pooled.len() as u64);
        }
    }
}
