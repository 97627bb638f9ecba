//! Mean, variance, γ-terms and the assembled approximation bounds.
//!
//! Every quantity is produced as a [`LogValue`]. Below the linear cutoff the
//! radial integrals are evaluated with `λ` and `κ_d` materialized; above it,
//! or when those factors are not representable, the log-domain path of
//! [`RadialProfile`] is used. The two paths agree wherever both apply.

use serde::{Deserialize, Serialize};

use super::moments::gamma3p_integrand_expanded;
use super::radial::RadialProfile;
use crate::error::{invalid, Result};
use crate::geometry::{ln_unit_ball_volume, unit_ball_volume, Dimension, LogValue};
use crate::quadrature::Tolerance;
use crate::sampling::{ModelParams, RandomStream};

pub const DEFAULT_LINEAR_CUTOFF: usize = 200;
pub const DEFAULT_MC_BUDGET: u64 = 200_000;
const GAMMA1_STREAM: u64 = 0x6761_6d6d_6131; // "gamma1"
/// Logs beyond this magnitude are treated as unrepresentable in linear
/// arithmetic (f64 overflows near e^709).
const LINEAR_LN_LIMIT: f64 = 230.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMode {
    NumericQuadrature,
    MonteCarlo,
    PaperDominating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// `Var = E + ∫ A² dμ`, by radial quadrature.
    #[default]
    Quadrature,
    /// The end of the closed-form variance bracket farthest from θ.
    BracketWorst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainChoice {
    #[default]
    Auto,
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundOptions {
    pub gamma1_mode: GammaMode,
    pub variance_mode: VarianceMode,
    pub tolerance: Tolerance,
    pub mc_budget: u64,
    pub seed: u64,
    pub domain: DomainChoice,
    pub linear_cutoff: usize,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            gamma1_mode: GammaMode::PaperDominating,
            variance_mode: VarianceMode::Quadrature,
            tolerance: Tolerance::relative(1e-10),
            mc_budget: DEFAULT_MC_BUDGET,
            seed: 0,
            domain: DomainChoice::Auto,
            linear_cutoff: DEFAULT_LINEAR_CUTOFF,
        }
    }
}

/// `ln Σ c_k a^k` from `ln a`, safe when `a` itself overflows.
fn ln_poly(ln_a: f64, coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0.0)
        .map(|(k, c)| LogValue::from_ln(c.ln() + k as f64 * ln_a))
        .fold(LogValue::ZERO, LogValue::add)
        .ln_or_neg_inf()
}

/// Closed-form mean `½ κ_d² λ² δ^d`, in the log domain.
///
/// One printed form of this identity carries `δ^{2d}`; the Mecke integral
/// `(λ/2) ∫ A dx` confirms `δ^d`.
pub fn mean_edges_log(params: &ModelParams) -> LogValue {
    if params.is_zero_intensity() {
        return LogValue::ZERO;
    }
    let ln = 0.5f64.ln()
        + 2.0 * ln_unit_ball_volume(params.dimension())
        + 2.0 * params.ln_lambda()
        + params.d() as f64 * params.delta().ln();
    LogValue::from_ln(ln)
}

pub fn mean_edges(params: &ModelParams) -> f64 {
    mean_edges_log(params).value()
}

/// `κ_d³ λ³ δ^{2d}`, the common factor of the variance and γ₂ brackets.
fn ln_cubic_factor(params: &ModelParams) -> f64 {
    3.0 * (ln_unit_ball_volume(params.dimension()) + params.ln_lambda()) + 2.0 * params.d() as f64 * params.delta().ln()
}

fn ln_one_minus_half_delta_pow(params: &ModelParams) -> f64 {
    let base = 1.0 - 0.5 * params.delta();
    if base <= 0.0 {
        f64::NEG_INFINITY
    } else {
        params.d() as f64 * base.ln()
    }
}

fn ln_one_plus_half_delta_pow(params: &ModelParams) -> f64 {
    params.d() as f64 * (0.5 * params.delta()).ln_1p()
}

/// `[(1 - δ/2)_+^d κ³λ³δ^{2d}, (1 + δ/2)^d κ³λ³δ^{2d}]`, the bracket of
/// `∫ A² dμ` implied by `1{|x| ≤ 1-δ/2} a₀ ≤ A(x) ≤ 1{|x| ≤ 1+δ/2} a₀`.
pub fn gamma2_bracket_log(params: &ModelParams) -> (LogValue, LogValue) {
    if params.is_zero_intensity() {
        return (LogValue::ZERO, LogValue::ZERO);
    }
    let c = ln_cubic_factor(params);
    (
        LogValue::from_ln(c + ln_one_minus_half_delta_pow(params)),
        LogValue::from_ln(c + ln_one_plus_half_delta_pow(params)),
    )
}

/// Closed-form variance bracket: mean plus the γ₂ bracket.
pub fn variance_bracket_log(params: &ModelParams) -> (LogValue, LogValue) {
    let mean = mean_edges_log(params);
    let (lo, hi) = gamma2_bracket_log(params);
    (mean.add(lo), mean.add(hi))
}

pub fn variance_bracket(params: &ModelParams) -> (f64, f64) {
    let (lo, hi) = variance_bracket_log(params);
    (lo.value(), hi.value())
}

/// `λ` with `½ κ_d² λ² δ^d = θ`, i.e. `λ = √(2θ) / (κ_d δ^{d/2})`, as a log.
pub fn solve_lambda(d: Dimension, delta: f64, theta: f64) -> Result<LogValue> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("delta", format!("must be positive and finite, got {delta}")));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(invalid("theta", format!("must be positive and finite, got {theta}")));
    }
    let ln = 0.5 * (2.0 * theta).ln() - ln_unit_ball_volume(d) - 0.5 * d.as_f64() * delta.ln();
    Ok(LogValue::from_ln(ln))
}

/// Parameters with `λ` solved for mean `θ`; `θ` is recorded in the result.
pub fn calibrated_params(d: usize, delta: f64, theta: f64) -> Result<ModelParams> {
    let ln_lambda = solve_lambda(Dimension::new(d)?, delta, theta)?.ln_or_neg_inf();
    ModelParams::from_ln_lambda(d, delta, ln_lambda)?.with_theta(theta)
}

/// `C₁ (κ_d λ δ^d)^{1/2} + C₂ |½ κ_d² λ² δ^d - θ|` for user-supplied constants.
pub fn theorem3_form(params: &ModelParams, theta: f64, c1: f64, c2: f64) -> Result<f64> {
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(invalid("constants", "C1 and C2 must be positive"));
    }
    if !(theta > 0.0) {
        return Err(invalid("theta", "must be positive"));
    }
    let a0 = LogValue::from_ln(params.ln_interior_a());
    Ok(c1 * a0.sqrt().value() + c2 * (mean_edges(params) - theta).abs())
}

/// One observation for [`fit_theorem3_constants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    /// `κ_d λ δ^d`
    pub interior_a: f64,
    /// `|E[E_d] - θ|`
    pub mean_gap: f64,
    pub bound: f64,
}

/// Fits `(C₁, C₂)` so that `C₁ √a₀ + C₂ |E - θ|` sits on or above every
/// sample: nonnegative least squares first, then a uniform inflation by the
/// largest ratio of sample to fitted value. A column that is identically
/// zero (e.g. an exactly calibrated sweep) gets the smallest positive
/// constant.
pub fn fit_theorem3_constants(samples: &[RateSample]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(invalid("samples", "need at least one sample"));
    }
    let cols: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|s| (s.interior_a.sqrt(), s.mean_gap, s.bound))
        .collect();
    let (s11, s12, s22, s1y, s2y) = cols.iter().fold((0.0, 0.0, 0.0, 0.0, 0.0), |acc, &(u, v, y)| {
        (acc.0 + u * u, acc.1 + u * v, acc.2 + v * v, acc.3 + u * y, acc.4 + v * y)
    });
    let single = |sxx: f64, sxy: f64| if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
    let det = s11 * s22 - s12 * s12;
    let (mut c1, mut c2) = if det > 1e-12 * s11 * s22 && det > 0.0 {
        ((s22 * s1y - s12 * s2y) / det, (s11 * s2y - s12 * s1y) / det)
    } else {
        (single(s11, s1y), 0.0)
    };
    if c1 < 0.0 || c2 < 0.0 {
        // NNLS on two columns: the better of the two single-column fits
        let a = single(s11, s1y);
        let b = single(s22, s2y);
        let ra: f64 = cols.iter().map(|&(u, _, y)| (y - a * u).powi(2)).sum();
        let rb: f64 = cols.iter().map(|&(_, v, y)| (y - b * v).powi(2)).sum();
        (c1, c2) = if ra <= rb { (a, 0.0) } else { (0.0, b) };
    }
    c1 = c1.max(f64::MIN_POSITIVE);
    c2 = c2.max(f64::MIN_POSITIVE);
    let inflate = cols
        .iter()
        .map(|&(u, v, y)| {
            let fitted = c1 * u + c2 * v;
            if fitted > 0.0 {
                y / fitted
            } else if y > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(1.0f64, f64::max);
    if !inflate.is_finite() {
        return Err(invalid("samples", "a sample with zero regressors has a positive bound"));
    }
    Ok((c1 * inflate, c2 * inflate))
}

/// Everything needed to assemble the Poisson and normal bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub d: usize,
    pub delta: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub log_lambda: Option<f64>,
    pub theta: f64,
    /// `κ_d λ δ^d`
    pub interior_a: f64,
    #[serde(default)]
    pub log_interior_a: Option<f64>,
    pub mean: f64,
    #[serde(default)]
    pub log_mean: Option<f64>,
    /// `(λ/2) ∫ A dx` by radial quadrature.
    pub mean_quadrature: f64,
    pub var_lower: f64,
    pub var_upper: f64,
    /// `E + ∫ A² dμ` by radial quadrature.
    pub var_quadrature: f64,
    pub variance_mode: VarianceMode,
    /// `|Var - θ|` as used in the TV bound.
    pub var_gap: f64,
    pub gamma1: f64,
    pub gamma1_mode: GammaMode,
    #[serde(default)]
    pub gamma1_std_error: Option<f64>,
    pub gamma2: f64,
    pub gamma2_mode: GammaMode,
    pub gamma3p: f64,
    pub gamma3p_mode: GammaMode,
    pub gamma3n: f64,
    pub gamma3n_mode: GammaMode,
    #[serde(default)]
    pub log_gamma1: Option<f64>,
    #[serde(default)]
    pub log_gamma2: Option<f64>,
    #[serde(default)]
    pub log_gamma3p: Option<f64>,
    #[serde(default)]
    pub log_gamma3n: Option<f64>,
    pub gamma1_dominating: f64,
    pub gamma2_dominating: f64,
    pub gamma3p_dominating: f64,
    /// `(1 - e^{-θ}) / θ`
    pub tv_prefactor: f64,
    pub tv_bound: f64,
    #[serde(default)]
    pub log_tv_bound: Option<f64>,
    #[serde(default)]
    pub wasserstein_bound: Option<f64>,
    /// How each γ is rescaled for the standardized statistic `F / σ`.
    pub wasserstein_scaling: String,
    pub log_domain: bool,
}

impl BoundReport {
    /// Checks the structural invariants of the report.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.var_lower > self.var_upper {
            return Err(format!("var_lower {} > var_upper {}", self.var_lower, self.var_upper));
        }
        for (name, v) in [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3p", self.gamma3p),
            ("gamma3n", self.gamma3n),
            ("tv_bound", self.tv_bound),
        ] {
            if !(v >= 0.0) {
                return Err(format!("{name} = {v} is not nonnegative"));
            }
        }
        Ok(())
    }
}

pub const WASSERSTEIN_SCALING: &str = "2*sqrt(gamma1/sigma^4) + sqrt(gamma2/sigma^4) + gamma3n/sigma^3, sigma^2 = var_quadrature";

/// Bound engine for one parameter set.
#[derive(Debug, Clone)]
pub struct BoundEngine {
    params: ModelParams,
    options: BoundOptions,
    profile: RadialProfile,
    log_domain: bool,
}

impl BoundEngine {
    pub fn new(params: &ModelParams, options: BoundOptions) -> Self {
        let log_domain = match options.domain {
            DomainChoice::Log => true,
            DomainChoice::Linear => false,
            DomainChoice::Auto => params.d() >= options.linear_cutoff || !linear_representable(params),
        };
        BoundEngine {
            params: *params,
            options,
            profile: RadialProfile::new(params, options.tolerance),
            log_domain,
        }
    }

    pub fn is_log_domain(&self) -> bool {
        self.log_domain
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    /// `∫ A^m g(A) dμ` on the selected path.
    fn radial(&self, m: f64, g: impl Fn(f64) -> f64) -> LogValue {
        if self.log_domain {
            self.profile.integrate_log(m, g)
        } else {
            LogValue::from_linear(self.profile.integrate_linear(|a| if a > 0.0 { a.powf(m) * g(a) } else { 0.0 }))
        }
    }

    pub fn mean(&self) -> LogValue {
        if self.log_domain {
            mean_edges_log(&self.params)
        } else {
            let k = unit_ball_volume(self.params.dimension());
            let l = self.params.lambda();
            LogValue::from_linear(0.5 * k * k * l * l * self.params.delta().powi(self.params.d() as i32))
        }
    }

    /// `(λ/2) ∫ A dx`
    pub fn mean_quadrature(&self) -> LogValue {
        self.radial(1.0, |_| 1.0) * LogValue::from_linear(0.5)
    }

    /// `γ₂ = ∫∫ B dμ dμ = ∫ A² dμ`
    pub fn gamma2(&self) -> LogValue {
        self.radial(2.0, |_| 1.0)
    }

    /// `γ_{3,P} = ∫ (Q(A)(A² + A))^{1/2} dμ`, with `A^{3/2}` factored out.
    pub fn gamma3p(&self) -> LogValue {
        if self.log_domain {
            self.radial(1.5, |a| (a * (a * (a + 5.0) + 6.0) + 2.0).sqrt())
        } else {
            LogValue::from_linear(self.profile.integrate_linear(gamma3p_integrand_expanded))
        }
    }

    /// `γ_{3,N} = ∫ E|D_x F|³ dμ = ∫ (A³ + 3A² + A) dμ`
    pub fn gamma3n(&self) -> LogValue {
        self.radial(1.0, |a| a * (a + 3.0) + 1.0)
    }

    pub fn variance_quadrature(&self) -> LogValue {
        self.mean().add(self.gamma2())
    }

    /// `[a₀⁴ + 6a₀³ + 7a₀² + a₀]^{1/2} (1 + δ/2)^d κ³λ³δ^{2d}`
    /// `[a₀³ + 6a₀² + 7a₀ + 1]^{1/2} a₀^{1/2}` times the dominating `γ₂`.
    pub fn gamma1_dominating(&self) -> LogValue {
        if self.params.is_zero_intensity() {
            return LogValue::ZERO;
        }
        let ln_a0 = self.params.ln_interior_a();
        let ln_sqrt_p = 0.5 * (ln_a0 + ln_poly(ln_a0, &[1.0, 7.0, 6.0, 1.0]));
        LogValue::from_ln(ln_sqrt_p) * gamma2_bracket_log(&self.params).1
    }

    pub fn gamma2_dominating(&self) -> LogValue {
        gamma2_bracket_log(&self.params).1
    }

    /// `[a₀⁴ + 4a₀³ + 2a₀²]^{1/2} [a₀² + a₀]^{1/2} (1 + δ/2)^d κ_d λ`
    pub fn gamma3p_dominating(&self) -> LogValue {
        if self.params.is_zero_intensity() {
            return LogValue::ZERO;
        }
        let ln_a0 = self.params.ln_interior_a();
        let ln = 1.5 * ln_a0
            + 0.5 * ln_poly(ln_a0, &[2.0, 4.0, 1.0])
            + 0.5 * ln_poly(ln_a0, &[1.0, 1.0])
            + ln_one_plus_half_delta_pow(&self.params)
            + self.profile.lambda_kappa().ln_or_neg_inf();
        LogValue::from_ln(ln)
    }

    /// Interior-only lower bound `λ κ_d (1 - δ/2)^d (a₀³ + 3a₀² + a₀)`.
    pub fn gamma3n_interior_lower(&self) -> LogValue {
        if self.params.is_zero_intensity() {
            return LogValue::ZERO;
        }
        let ln_a0 = self.params.ln_interior_a();
        let ln = ln_a0
            + ln_poly(ln_a0, &[1.0, 3.0, 1.0])
            + ln_one_minus_half_delta_pow(&self.params)
            + self.profile.lambda_kappa().ln_or_neg_inf();
        LogValue::from_ln(ln)
    }

    /// γ₁ in the configured mode, with a standard error in MC mode.
    pub fn gamma1(&self) -> Result<(LogValue, Option<f64>)> {
        match self.options.gamma1_mode {
            GammaMode::PaperDominating => Ok((self.gamma1_dominating(), None)),
            GammaMode::MonteCarlo => {
                let (v, rel_se) = self
                    .profile
                    .gamma1_monte_carlo(self.options.mc_budget, RandomStream::new(self.options.seed, GAMMA1_STREAM))?;
                Ok((v, Some(v.value() * rel_se)))
            }
            GammaMode::NumericQuadrature => Err(invalid(
                "gamma1_mode",
                "gamma1 supports paper_dominating or monte_carlo",
            )),
        }
    }

    pub fn wasserstein_bound(&self) -> Result<f64> {
        let (g1, _) = self.gamma1()?;
        wasserstein_from_terms(g1, self.gamma2(), self.gamma3n(), self.variance_quadrature())
    }

    pub fn tv_bound(&self, theta: f64) -> Result<BoundReport> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(invalid("theta", format!("must be positive and finite, got {theta}")));
        }
        let p = &self.params;
        let mean = self.mean();
        let (var_lo, var_hi) = variance_bracket_log(p);
        let gamma2 = self.gamma2();
        let gamma3p = self.gamma3p();
        let gamma3n = self.gamma3n();
        let var_quad = mean.add(gamma2);
        let (gamma1, gamma1_se) = self.gamma1()?;
        let theta_log = LogValue::from_linear(theta);
        let var_gap = match self.options.variance_mode {
            VarianceMode::Quadrature => var_quad.abs_diff(theta_log),
            VarianceMode::BracketWorst => var_lo.abs_diff(theta_log).max(var_hi.abs_diff(theta_log)),
        };
        let prefactor = -(-theta).exp_m1() / theta;
        // summed in the log domain so that no term overflows on its own
        let inner = (gamma1.sqrt() * LogValue::from_linear(2.0))
            .add(gamma2.sqrt())
            .add(gamma3p / theta_log)
            .add(mean.abs_diff(theta_log))
            .add(var_gap);
        let log_tv = LogValue::from_linear(prefactor) * inner;
        let tv_bound = log_tv.value();
        let wasserstein = wasserstein_from_terms(gamma1, gamma2, gamma3n, var_quad).ok();
        let lambda = p.lambda();
        Ok(BoundReport {
            d: p.d(),
            delta: p.delta(),
            lambda: lambda.is_finite().then_some(lambda),
            log_lambda: p.ln_lambda().is_finite().then_some(p.ln_lambda()),
            theta,
            interior_a: self.profile.interior_a().value(),
            log_interior_a: self.profile.interior_a().ln(),
            mean: mean.value(),
            log_mean: mean.ln(),
            mean_quadrature: self.mean_quadrature().value(),
            var_lower: var_lo.value(),
            var_upper: var_hi.value(),
            var_quadrature: var_quad.value(),
            variance_mode: self.options.variance_mode,
            var_gap: var_gap.value(),
            gamma1: gamma1.value(),
            gamma1_mode: self.options.gamma1_mode,
            gamma1_std_error: gamma1_se,
            gamma2: gamma2.value(),
            gamma2_mode: GammaMode::NumericQuadrature,
            gamma3p: gamma3p.value(),
            gamma3p_mode: GammaMode::NumericQuadrature,
            gamma3n: gamma3n.value(),
            gamma3n_mode: GammaMode::NumericQuadrature,
            log_gamma1: gamma1.ln(),
            log_gamma2: gamma2.ln(),
            log_gamma3p: gamma3p.ln(),
            log_gamma3n: gamma3n.ln(),
            gamma1_dominating: self.gamma1_dominating().value(),
            gamma2_dominating: self.gamma2_dominating().value(),
            gamma3p_dominating: self.gamma3p_dominating().value(),
            tv_prefactor: prefactor,
            tv_bound,
            log_tv_bound: log_tv.ln(),
            wasserstein_bound: wasserstein,
            wasserstein_scaling: WASSERSTEIN_SCALING.to_string(),
            log_domain: self.log_domain,
        })
    }
}

fn linear_representable(params: &ModelParams) -> bool {
    if params.is_zero_intensity() {
        return true;
    }
    let ln_kappa = ln_unit_ball_volume(params.dimension());
    let ln_delta_d = params.d() as f64 * params.delta().ln();
    [
        params.ln_lambda(),
        ln_kappa,
        ln_delta_d,
        ln_kappa + params.ln_lambda(),
        params.ln_interior_a(),
    ]
    .iter()
    .all(|v| v.abs() < LINEAR_LN_LIMIT)
}

/// The three standardized terms `2√(γ₁/σ⁴)`, `√(γ₂/σ⁴)`, `γ_{3,N}/σ³`.
pub fn wasserstein_terms(gamma1: LogValue, gamma2: LogValue, gamma3n: LogValue, variance: LogValue) -> Result<[f64; 3]> {
    if variance.is_zero() {
        return Err(invalid("variance", "normal approximation needs a positive variance"));
    }
    let sigma2 = variance.ln_or_neg_inf();
    let term = |g: LogValue, power: f64| match g.ln() {
        None => 0.0,
        Some(ln) => (ln - power * sigma2).exp(),
    };
    Ok([
        2.0 * (0.5 * (gamma1.ln_or_neg_inf() - 2.0 * sigma2)).exp(),
        (0.5 * (gamma2.ln_or_neg_inf() - 2.0 * sigma2)).exp(),
        term(gamma3n, 1.5),
    ])
}

pub fn wasserstein_from_terms(gamma1: LogValue, gamma2: LogValue, gamma3n: LogValue, variance: LogValue) -> Result<f64> {
    Ok(wasserstein_terms(gamma1, gamma2, gamma3n, variance)?.iter().sum())
}

/// `2√γ₁ + √γ₂ + γ_{3,N}` for the standardized statistic, with `σ²` the
/// quadrature variance.
pub fn wasserstein_bound(params: &ModelParams) -> Result<f64> {
    BoundEngine::new(params, BoundOptions::default()).wasserstein_bound()
}

/// Assembles the total-variation bound with default options.
pub fn tv_bound(params: &ModelParams, theta: f64) -> Result<BoundReport> {
    BoundEngine::new(params, BoundOptions::default()).tv_bound(theta)
}

pub fn gamma2_numeric(params: &ModelParams) -> f64 {
    BoundEngine::new(params, BoundOptions::default()).gamma2().value()
}

pub fn gamma3p_numeric(params: &ModelParams) -> f64 {
    BoundEngine::new(params, BoundOptions::default()).gamma3p().value()
}

pub fn gamma3n_numeric(params: &ModelParams) -> f64 {
    BoundEngine::new(params, BoundOptions::default()).gamma3n().value()
}

/// γ₁ by the requested mode; the standard error is present in MC mode.
pub fn gamma1_estimate(params: &ModelParams, mode: GammaMode, budget: u64, seed: u64) -> Result<(f64, Option<f64>)> {
    if mode == GammaMode::MonteCarlo && budget == 0 {
        return Err(invalid("budget", "Monte Carlo budget must be positive"));
    }
    let options = BoundOptions {
        gamma1_mode: mode,
        mc_budget: budget,
        seed,
        ..BoundOptions::default()
    };
    let (v, se) = BoundEngine::new(params, options).gamma1()?;
    Ok((v.value(), se))
}

pub fn variance_quadrature(params: &ModelParams) -> f64 {
    BoundEngine::new(params, BoundOptions::default()).variance_quadrature().value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(d: usize, delta: f64, lambda: f64) -> ModelParams {
        ModelParams::new(d, delta, lambda).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    // d = 2, δ = 0.05, θ = 1, from an independent 30-digit lens-area quadrature
    const TV_FIXTURE: f64 = 1.124_462_902_178_096_2;
    const GAMMA2_FIXTURE: f64 = 0.139_383_529_757_784_14;

    fn kappa(d: usize) -> f64 {
        unit_ball_volume(Dimension::new(d).unwrap())
    }

    #[test]
    fn mean_examples() {
        assert!(rel(mean_edges(&params(2, 1.0, 1.0)), PI * PI / 2.0) < 1e-14);
        assert!((mean_edges(&params(2, 1.0, 1.0)) - 4.93480).abs() < 1e-5);
        assert_eq!(mean_edges(&params(2, 1.0, 0.0)), 0.0);
        assert!(rel(mean_edges(&params(2, 0.01, 200.0 / PI)), 2.0) < 1e-13);
    }

    #[test]
    fn variance_bracket_plug_in() {
        let (lo, hi) = variance_bracket(&params(2, 1.0, 1.0));
        let p3 = PI.powi(3);
        assert!(rel(lo, PI * PI / 2.0 + 0.25 * p3) < 1e-13);
        assert!(rel(hi, PI * PI / 2.0 + 2.25 * p3) < 1e-13);
    }

    #[test]
    fn variance_bracket_collapses_onto_theta() {
        let theta = 1.5;
        let mut prev_width = f64::INFINITY;
        for &delta in &[0.4, 0.2, 0.1, 0.05, 0.01, 0.001] {
            let p = calibrated_params(2, delta, theta).unwrap();
            let (lo, hi) = variance_bracket(&p);
            assert!(lo >= theta - 1e-12 && lo <= hi);
            let width = hi - theta;
            assert!(width < prev_width);
            prev_width = width;
        }
        assert!(prev_width < 0.01);
    }

    #[test]
    fn quadrature_variance_inside_bracket() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let d = rng.gen_range(1..=8);
            let delta: f64 = rng.gen_range(0.02..1.0);
            let lambda = rng.gen_range(0.1..50.0) / kappa(d) / delta.powi(d as i32);
            let p = params(d, delta, lambda);
            let (lo, hi) = variance_bracket(&p);
            let v = variance_quadrature(&p);
            assert!(lo <= v * (1.0 + 1e-12) && v <= hi * (1.0 + 1e-12), "d={d} δ={delta}: {lo} {v} {hi}");
        }
    }

    #[test]
    fn solve_lambda_examples() {
        let d2 = Dimension::new(2).unwrap();
        let l = solve_lambda(d2, 0.01, 2.0).unwrap().value();
        assert!(rel(l, 200.0 / PI) < 1e-13);
        assert!((l - 63.6620).abs() < 1e-4);
        assert!(rel(mean_edges(&params(2, 0.01, l)), 2.0) < 1e-10);
        let mut prev = f64::INFINITY;
        for &theta in &[1.0, 0.1, 1e-3, 1e-6, 1e-12] {
            let l = solve_lambda(d2, 0.05, theta).unwrap().value();
            assert!(l < prev && l > 0.0);
            prev = l;
        }
        let p = calibrated_params(50, 1.0 / 50.0, 1.0).unwrap();
        assert!(p.ln_lambda().is_finite());
        assert!(rel(mean_edges_log(&p).value(), 1.0) < 1e-10);
        assert!(solve_lambda(d2, 0.0, 1.0).is_err());
        assert!(solve_lambda(d2, 0.1, -1.0).is_err());
    }

    #[test]
    fn zero_intensity_bounds() {
        let p = params(3, 0.2, 0.0);
        for &theta in &[0.5, 1.0, 4.0] {
            let r = tv_bound(&p, theta).unwrap();
            assert_eq!((r.gamma1, r.gamma2, r.gamma3p, r.gamma3n), (0.0, 0.0, 0.0, 0.0));
            let expected = -(-theta).exp_m1() / theta * 2.0 * theta;
            assert!(rel(r.tv_bound, expected) < 1e-15);
            assert!(r.wasserstein_bound.is_none());
        }
        assert!(wasserstein_bound(&p).is_err());
        let (g1, se) = gamma1_estimate(&p, GammaMode::MonteCarlo, 100, 0).unwrap();
        assert_eq!((g1, se), (0.0, Some(0.0)));
        assert_eq!(gamma1_estimate(&p, GammaMode::PaperDominating, 0, 0).unwrap().0, 0.0);
        assert!(gamma1_estimate(&params(2, 0.1, 1.0), GammaMode::MonteCarlo, 0, 0).is_err());
    }

    #[test]
    fn tv_prefactor_and_theta_validation() {
        let r = tv_bound(&params(2, 0.1, 5.0), 1.0).unwrap();
        assert!((r.tv_prefactor - 0.632121).abs() < 1e-6);
        assert!(tv_bound(&params(2, 0.1, 5.0), 0.0).is_err());
        assert!(tv_bound(&params(2, 0.1, 5.0), -2.0).is_err());
        r.check_invariants().unwrap();
    }

    #[test]
    fn bracket_worst_mode_uses_farther_end() {
        let p = calibrated_params(2, 0.1, 1.0).unwrap();
        let opts = BoundOptions {
            variance_mode: VarianceMode::BracketWorst,
            ..BoundOptions::default()
        };
        let r = BoundEngine::new(&p, opts).tv_bound(1.0).unwrap();
        let expected = (r.var_lower - 1.0).abs().max((r.var_upper - 1.0).abs());
        assert!(rel(r.var_gap, expected) < 1e-12, "{} vs {expected}", r.var_gap);
        assert_eq!(r.variance_mode, VarianceMode::BracketWorst);
        let q = tv_bound(&p, 1.0).unwrap();
        assert!(q.tv_bound <= r.tv_bound);
    }

    #[test]
    fn gamma_orderings() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let d = rng.gen_range(1..=8);
            let delta = rng.gen_range(0.02..1.0);
            let p = calibrated_params(d, delta, rng.gen_range(0.2..3.0)).unwrap();
            let engine = BoundEngine::new(&p, BoundOptions::default());
            let g2 = engine.gamma2().value();
            let (lo, hi) = gamma2_bracket_log(&p);
            assert!(lo.value() <= g2 * (1.0 + 1e-12) && g2 <= hi.value() * (1.0 + 1e-12));
            assert!(engine.gamma3p().value() <= engine.gamma3p_dominating().value() * (1.0 + 1e-12));
            assert!(engine.gamma3n_interior_lower().value() <= engine.gamma3n().value() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn gamma1_monte_carlo_below_dominating() {
        let p = calibrated_params(3, 0.2, 1.0).unwrap();
        let (mc, se) = gamma1_estimate(&p, GammaMode::MonteCarlo, 50_000, 1).unwrap();
        let (dom, _) = gamma1_estimate(&p, GammaMode::PaperDominating, 1, 1).unwrap();
        assert!(mc <= dom + 3.0 * se.unwrap(), "{mc} > {dom}");
        assert!(mc > 0.0);
    }

    #[test]
    fn gamma1_constant_profile_factorization() {
        // δ small: A is constant on all but a thin shell, so
        // γ₁ ≈ P(a₀)^{1/2} γ₂.
        let p = params(2, 0.002, 40_000.0);
        let engine = BoundEngine::new(&p, BoundOptions::default());
        let (mc, se) = gamma1_estimate(&p, GammaMode::MonteCarlo, 200_000, 3).unwrap();
        let a0 = engine.profile().interior_a().value();
        let p_a0 = super::super::moments::fourth_moment(a0);
        let approx = p_a0.sqrt() * engine.gamma2().value();
        assert!(rel(mc, approx) < 0.02, "{mc} ± {} vs {approx}", se.unwrap());
    }

    #[test]
    fn log_and_linear_reports_agree() {
        for d in [1usize, 2, 5, 10, 20, 30] {
            let p = calibrated_params(d, 1.0 / d as f64 + 0.01, 1.0).unwrap();
            let lin = BoundEngine::new(&p, BoundOptions { domain: DomainChoice::Linear, ..Default::default() })
                .tv_bound(1.0)
                .unwrap();
            let log = BoundEngine::new(&p, BoundOptions { domain: DomainChoice::Log, ..Default::default() })
                .tv_bound(1.0)
                .unwrap();
            assert!(!lin.log_domain && log.log_domain);
            for (name, a, b) in [
                ("mean", lin.mean, log.mean),
                ("gamma1", lin.gamma1, log.gamma1),
                ("gamma2", lin.gamma2, log.gamma2),
                ("gamma3p", lin.gamma3p, log.gamma3p),
                ("gamma3n", lin.gamma3n, log.gamma3n),
                ("var", lin.var_quadrature, log.var_quadrature),
            ] {
                assert!(rel(a, b) < 1e-10, "d={d} {name}: {a} vs {b}");
            }
            // the bound contains |E - θ| and |Var - θ|, differences of
            // quantities of size θ, so only an absolute comparison is meaningful
            assert!((lin.tv_bound - log.tv_bound).abs() < 1e-10, "d={d}: {} vs {}", lin.tv_bound, log.tv_bound);
        }
    }

    #[test]
    fn wasserstein_scaling_law() {
        let g = [LogValue::from_linear(0.3), LogValue::from_linear(0.7), LogValue::from_linear(1.1)];
        let base = wasserstein_terms(g[0], g[1], g[2], LogValue::ONE).unwrap();
        let sigma: f64 = 2.0;
        let scaled = wasserstein_terms(g[0], g[1], g[2], LogValue::from_linear(sigma * sigma)).unwrap();
        for (b, (s, factor)) in base.iter().zip(scaled.iter().zip([4.0, 4.0, 8.0])) {
            assert!(rel(*s, b / factor) < 1e-14);
        }
        assert!(wasserstein_terms(g[0], g[1], g[2], LogValue::ZERO).is_err());
    }

    #[test]
    fn wasserstein_vanishes_under_growing_mean() {
        let mut prev = f64::INFINITY;
        for d in 2..=12usize {
            let theta = (d * d * d) as f64;
            let p = calibrated_params(d, 1.0 / d as f64, theta).unwrap();
            let w = wasserstein_bound(&p).unwrap();
            assert!(w < prev, "d={d}: {w} !< {prev}");
            prev = w;
        }
        assert!(prev < 0.1);
    }

    #[test]
    fn theorem3_form_properties() {
        let p = calibrated_params(2, 0.05, 1.0).unwrap();
        let a0 = LogValue::from_ln(p.ln_interior_a()).value();
        let v = theorem3_form(&p, 1.0, 2.0, 5.0).unwrap();
        assert!(rel(v, 2.0 * a0.sqrt()) < 1e-9);
        let q = ModelParams::from_ln_lambda(2, 0.05, p.ln_lambda() + 4f64.ln()).unwrap();
        let v4 = theorem3_form(&q, 1.0, 2.0, 1e-300).unwrap();
        assert!(rel(v4, 2.0 * v) < 1e-9);
        assert!(theorem3_form(&p, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn fitted_constants_dominate_training_points() {
        let samples = [
            RateSample { interior_a: 0.3, mean_gap: 0.1, bound: 1.0 },
            RateSample { interior_a: 0.1, mean_gap: 0.0, bound: 0.4 },
            RateSample { interior_a: 0.01, mean_gap: 0.3, bound: 0.5 },
        ];
        let (c1, c2) = fit_theorem3_constants(&samples).unwrap();
        for s in samples {
            assert!(c1 * s.interior_a.sqrt() + c2 * s.mean_gap >= s.bound * (1.0 - 1e-12));
        }
        assert!(fit_theorem3_constants(&[]).is_err());
    }

    /// Composite 5-point Gauss-Legendre on `[a, b]`.
    fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let nodes = [
            (0.0, 0.568_888_888_888_888_9),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
            (-0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
        ];
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let mid = a + (i as f64 + 0.5) * h;
                nodes.iter().map(|&(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
            })
            .sum()
    }

    #[test]
    fn one_dimensional_exact_profile() {
        // d = 1: A = a₀ on |x| ≤ 1 - δ/2 and A = 2λ s with s = 1 + δ/2 - |x|
        // on the boundary layer, so ∫ g(A) dμ = 2λ[(1 - δ/2) g(a₀) + ∫₀^δ g(2λs) ds].
        for &(delta, lambda) in &[(0.2, 1.0), (0.05, 30.0), (0.5, 4.0), (1.2, 0.7)] {
            let p = params(1, delta, lambda);
            let a0 = 2.0 * lambda * delta;
            let core = 1.0 - delta / 2.0;
            let l = lambda;
            let g2 = 2.0 * l * (core * a0 * a0 + 4.0 * l * l * delta.powi(3) / 3.0);
            let g3n = 2.0
                * l
                * (core * (a0 * a0 * a0 + 3.0 * a0 * a0 + a0)
                    + 2.0 * l.powi(3) * delta.powi(4)
                    + 4.0 * l * l * delta.powi(3)
                    + l * delta * delta);
            // boundary layer of γ_{3,P} with a = t²: ∫₀^{√a₀} t³ (t⁶+5t⁴+6t²+2)^{1/2} t dt / λ
            let layer = gauss_legendre(
                |t: f64| {
                    let a = t * t;
                    t.powi(4) * (a * (a * (a + 5.0) + 6.0) + 2.0).sqrt()
                },
                0.0,
                a0.sqrt(),
                400,
            ) / l;
            let g3p = 2.0 * l * (core * gamma3p_integrand_expanded(a0) + layer);
            let e = BoundEngine::new(&p, BoundOptions::default());
            for (name, got, want) in [
                ("gamma2", e.gamma2().value(), g2),
                ("gamma3n", e.gamma3n().value(), g3n),
                ("gamma3p", e.gamma3p().value(), g3p),
            ] {
                assert!(rel(got, want) < 1e-9, "δ={delta} λ={lambda} {name}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn planar_regression_fixture() {
        let p = calibrated_params(2, 0.05, 1.0).unwrap();
        let r = tv_bound(&p, 1.0).unwrap();
        let a0 = 2f64.sqrt() * 0.05;
        assert!(rel(r.interior_a, a0) < 1e-13);
        assert!((r.mean - 1.0).abs() < 1e-13);
        assert!(rel(r.tv_bound, TV_FIXTURE) < 1e-10, "{:.17e}", r.tv_bound);
        assert!(rel(r.gamma2, GAMMA2_FIXTURE) < 1e-10, "{:.17e}", r.gamma2);
    }

    #[test]
    fn log_assembly_survives_overflow() {
        let p = calibrated_params(300, 5.0, 1.0).unwrap();
        let r = tv_bound(&p, 1.0).unwrap();
        // γ₁ alone overflows f64 but its square root does not
        assert!(r.gamma1.is_infinite());
        let ln_g1 = r.log_gamma1.unwrap();
        assert!(ln_g1 > 709.0 && ln_g1.is_finite());
        let ln = r.log_tv_bound.unwrap();
        assert!(ln > 0.5 * ln_g1 && ln.is_finite());
        assert!(rel(r.tv_bound, ln.exp()) < 1e-12);
    }

    #[test]
    fn high_dimension_is_finite() {
        for d in [100usize, 300] {
            for &delta in &[0.005, 0.01, 0.02] {
                let p = calibrated_params(d, delta, 1.0).unwrap();
                let r = tv_bound(&p, 1.0).unwrap();
                assert!(r.log_domain);
                assert!(r.tv_bound.is_finite() && r.tv_bound > 0.0);
                assert!((r.mean - 1.0).abs() < 1e-10);
                r.check_invariants().unwrap();
            }
        }
    }
}
