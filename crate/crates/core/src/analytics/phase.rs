//! Growth regime of the mean along a parameter schedule.

use serde::{Deserialize, Serialize};

use super::bounds::mean_edges_log;
use crate::error::{invalid, Result};
use crate::sampling::ModelParams;

/// Tail log-ratios within this distance of zero count as stable.
pub const STABLE_LOG_RATIO: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Mean grows without bound; the Gaussian approximation is the relevant one.
    Growing,
    /// Mean settles at a positive value; the Poisson approximation is the relevant one.
    Stabilizing,
    /// Mean tends to zero; there are asymptotically no edges.
    Vanishing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub means: Vec<f64>,
    pub log_means: Vec<f64>,
    /// `ln E_{i+1} - ln E_i`
    pub log_ratios: Vec<f64>,
    pub regime: Regime,
}

/// Classifies the schedule by the last step's log-ratio of means; a
/// vanishing intensity anywhere in the tail makes the schedule vanishing.
pub fn phase_diagnostic(schedule: &[ModelParams]) -> Result<PhaseReport> {
    if schedule.len() < 2 {
        return Err(invalid("schedule", "need at least two parameter sets"));
    }
    let log_means: Vec<f64> = schedule.iter().map(|p| mean_edges_log(p).ln_or_neg_inf()).collect();
    let log_ratios: Vec<f64> = log_means
        .windows(2)
        .map(|w| if w[0] == w[1] { 0.0 } else { w[1] - w[0] })
        .collect();
    let last = *log_means.last().unwrap();
    let tail = *log_ratios.last().unwrap();
    let regime = if last == f64::NEG_INFINITY || tail < -STABLE_LOG_RATIO {
        Regime::Vanishing
    } else if tail > STABLE_LOG_RATIO {
        Regime::Growing
    } else {
        Regime::Stabilizing
    };
    Ok(PhaseReport {
        means: log_means.iter().map(|l| l.exp()).collect(),
        log_means,
        log_ratios,
        regime,
    })
}
