//! Sample-based checks of the Poisson moment identities and of Poisson laws.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use super::distribution::EmpiricalDistribution;
use crate::analytics::moments::moment_report;
use crate::error::{invalid, Result};
use crate::sampling::{poisson_integer, RandomStream};

/// Allowed deviation, in standard errors, for sample moments.
pub const MOMENT_Z_LIMIT: f64 = 4.0;
const MIN_EXPECTED_PER_BIN: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheckEntry {
    pub name: String,
    pub expected: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub a: f64,
    pub replicates: u64,
    pub seed: u64,
    pub entries: Vec<MomentCheckEntry>,
    pub pass: bool,
}

/// Draws Poisson(a) samples, the law of `D_x E` at an interior point, and
/// compares the sample moments with the closed forms.
pub fn moment_check(a: f64, replicates: u64, seed: u64) -> Result<MomentCheck> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid("a", format!("must be positive and finite, got {a}")));
    }
    if replicates < 2 {
        return Err(invalid("replicates", "need at least two samples"));
    }
    let mut rng = RandomStream::new(seed, 0).rng();
    let mut dist = EmpiricalDistribution::new();
    for _ in 0..replicates {
        dist.record(poisson_integer(a, &mut rng)?);
    }
    let report = moment_report(a);
    let targets: [(&str, f64, fn(f64) -> f64); 4] = [
        ("m2", report.m2, |k| k * k),
        ("m3", report.m3abs, |k| k * k * k),
        ("m4", report.m4, |k| k.powi(4)),
        ("q", report.q, |k| (k * (k - 1.0)).powi(2)),
    ];
    let mut entries = Vec::with_capacity(targets.len());
    for (name, expected, f) in targets {
        let (empirical, std_error) = dist.mean_of(f)?;
        entries.push(MomentCheckEntry {
            name: name.to_string(),
            expected,
            empirical,
            std_error,
            pass: (empirical - expected).abs() <= MOMENT_Z_LIMIT * std_error,
        });
    }
    Ok(MomentCheck {
        a,
        replicates,
        seed,
        pass: entries.iter().all(|e| e.pass),
        entries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of `dist` against Poisson(mean). Cells are
/// pooled left to right until each expects at least five observations; the
/// last cell absorbs the upper tail.
pub fn chi_square_poisson(dist: &EmpiricalDistribution, mean: f64) -> Result<GoodnessOfFit> {
    if dist.is_empty() {
        return Err(crate::Error::EmptyDistribution);
    }
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(invalid("mean", format!("must be positive and finite, got {mean}")));
    }
    let law = Poisson::new(mean).map_err(|e| invalid("mean", e.to_string()))?;
    let n = dist.replicates() as f64;
    // cells as (expected, observed), closed when the expectation is large enough
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut exp_acc, mut obs_acc) = (0.0, 0.0);
    let mut k = 0u64;
    loop {
        exp_acc += n * law.pmf(k);
        obs_acc += dist.count(k) as f64;
        let rest = n * law.sf(k);
        if rest < MIN_EXPECTED_PER_BIN {
            // the remaining tail joins the current cell
            let obs_tail: f64 = dist.counts().filter(|&(v, _)| v > k).map(|(_, c)| c as f64).sum();
            cells.push((exp_acc + rest, obs_acc + obs_tail));
            break;
        }
        if exp_acc >= MIN_EXPECTED_PER_BIN {
            cells.push((exp_acc, obs_acc));
            exp_acc = 0.0;
            obs_acc = 0.0;
        }
        k += 1;
    }
    if cells.len() > 1 && cells[cells.len() - 1].0 < MIN_EXPECTED_PER_BIN {
        let (e, o) = cells.pop().unwrap();
        let last = cells.last_mut().unwrap();
        last.0 += e;
        last.1 += o;
    }
    if cells.len() < 2 {
        return Err(invalid("replicates", "too few samples for a chi-square test"));
    }
    let statistic: f64 = cells.iter().map(|&(e, o)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| invalid("dof", e.to_string()))?;
    Ok(GoodnessOfFit {
        statistic,
        dof,
        p_value: chi.sf(statistic),
    })
}
