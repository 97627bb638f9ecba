//! Monte Carlo experiments on the law of the edge count.
//!
//! Desk-scale sweeps drive `κ_d λ δ^d → 0` by shrinking `δ` at a fixed small
//! `d` with `λ` solved so the mean stays at `θ`. Letting `d → ∞` with
//! `δ = 1/d` instead needs on the order of `d^{d/2}` points per replicate,
//! which is out of reach beyond `d ≈ 10`.

pub mod checks;
pub mod distribution;
pub mod persist;
pub mod runner;
pub mod tv;

pub use checks::{chi_square_poisson, moment_check, GoodnessOfFit, MomentCheck, MomentCheckEntry};
pub use distribution::EmpiricalDistribution;
pub use persist::{write_csv, write_csv_file, JsonlSink, CSV_COLUMNS};
pub use runner::{
    convergence_sweep, run_replications, run_replications_with, simulate, tv_trend_violations, ExperimentRecord,
    RunOptions, SkippedEntry, SweepOutcome,
};
pub use tv::{bootstrap_tv, empirical_tv, TvEstimate};
