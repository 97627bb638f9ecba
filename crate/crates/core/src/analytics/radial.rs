//! The local mean `A(x) = ∫ h(x, y) μ(dy)` and integrals of functions of it.
//!
//! Substituting `y = 2z - x` turns `A(x)` into `λ 2^d Λ_d(B(x, δ/2) ∩ B^d)`,
//! so `A(x) = a₀ φ(|x|)` with `a₀ = κ_d λ δ^d` and `φ` the fraction of the
//! small ball inside the unit ball. `φ` is constant on `[0, |1 - δ/2|]`,
//! changes form at that radius and vanishes beyond `1 + δ/2`; every radial
//! integral is split at those two breakpoints.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{
    ball_intersection_fraction, ball_intersection_volume, ln_unit_ball_volume, unit_ball_volume, LogValue,
};
use crate::quadrature::{integrate_piecewise, Tolerance};
use crate::sampling::{uniform_in_ball, ModelParams, RandomStream, Window};

/// `A(x)` for `|x| = x_norm`, as `λ 2^d Λ_d(B(x, δ/2) ∩ B^d)` in linear
/// arithmetic.
pub fn local_mean_a(x_norm: f64, params: &ModelParams) -> f64 {
    if params.is_zero_intensity() {
        return 0.0;
    }
    let d = params.dimension();
    params.lambda()
        * 2f64.powi(d.get() as i32)
        * ball_intersection_volume(d, 0.5 * params.delta(), 1.0, x_norm)
}

/// `A(x)` in the log domain, `ln a₀ + ln φ(|x|)`.
pub fn local_mean_a_log(x_norm: f64, params: &ModelParams) -> LogValue {
    let phi = ball_intersection_fraction(params.dimension(), 0.5 * params.delta(), 1.0, x_norm);
    LogValue::from_ln(params.ln_interior_a()) * LogValue::from_linear(phi)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// `B(x1, x2) = ∫ h(x1, y) h(x2, y) μ(dy)` by sampling `y` uniformly in
/// `B(x1, δ)`, the support of `h(x1, ·)`.
pub fn copair_b(
    x1: &[f64],
    x2: &[f64],
    params: &ModelParams,
    budget: u64,
    stream: RandomStream,
) -> Result<Estimate> {
    if budget == 0 {
        return Err(invalid("budget", "Monte Carlo budget must be positive"));
    }
    let d = params.d();
    for x in [x1, x2] {
        if x.len() != d {
            return Err(crate::Error::DimensionMismatch {
                expected: d,
                actual: x.len(),
            });
        }
    }
    let delta = params.delta();
    let gap_sq: f64 = x1.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    if gap_sq > 4.0 * delta * delta || params.is_zero_intensity() {
        return Ok(Estimate {
            value: 0.0,
            std_error: 0.0,
        });
    }
    let window = Window {
        center: x1.to_vec(),
        radius: delta,
    };
    let mut rng = stream.rng();
    let mut hits = 0u64;
    for _ in 0..budget {
        let y = uniform_in_ball(&window, &mut rng);
        if crate::graph::kernel(x1, &y, params)? && crate::graph::kernel(x2, &y, params)? {
            hits += 1;
        }
    }
    let p = hits as f64 / budget as f64;
    let volume = params.lambda() * unit_ball_volume(params.dimension()) * delta.powi(d as i32);
    Ok(Estimate {
        value: volume * p,
        std_error: volume * (p * (1.0 - p) / budget as f64).sqrt(),
    })
}

/// Radial description of `A` for one parameter set.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    params: ModelParams,
    /// `ln(λ κ_d)`
    ln_lambda_kappa: f64,
    /// `ln a₀ = ln(κ_d λ δ^d)`
    ln_a0: f64,
    inner: f64,
    outer: f64,
    tol: Tolerance,
}

impl RadialProfile {
    pub fn new(params: &ModelParams, tol: Tolerance) -> Self {
        let half = 0.5 * params.delta();
        RadialProfile {
            params: *params,
            ln_lambda_kappa: params.ln_lambda() + ln_unit_ball_volume(params.dimension()),
            ln_a0: params.ln_interior_a(),
            inner: (1.0 - half).abs(),
            outer: 1.0 + half,
            tol,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// `a₀ = κ_d λ δ^d`, the value of `A` deep inside the unit ball.
    pub fn interior_a(&self) -> LogValue {
        LogValue::from_ln(self.ln_a0)
    }

    pub fn lambda_kappa(&self) -> LogValue {
        LogValue::from_ln(self.ln_lambda_kappa)
    }

    pub fn breakpoints(&self) -> [f64; 3] {
        [0.0, self.inner, self.outer]
    }

    /// `φ(r) = A(x) / a₀` at `|x| = r`.
    pub fn fraction(&self, r: f64) -> f64 {
        ball_intersection_fraction(self.params.dimension(), 0.5 * self.params.delta(), 1.0, r)
    }

    /// `∫ A(x)^m g(A(x)) μ(dx)` in the log domain.
    ///
    /// The factor `λ κ_d a₀^m` is carried as a logarithm, and the remaining
    /// integral `d ∫ r^{d-1} φ(r)^m g(a₀ φ(r)) dr` is bounded by
    /// `(1 + δ/2)^d sup g`, so nothing overflows for any `d`. The inner
    /// segment, where `φ` is constant, is integrated in closed form.
    pub fn integrate_log<G: Fn(f64) -> f64>(&self, m: f64, g: G) -> LogValue {
        if self.params.is_zero_intensity() {
            return LogValue::ZERO;
        }
        let d = self.params.d() as f64;
        let a0 = self.ln_a0.exp();
        let phi0 = self.fraction(0.0);
        let inner_part = self.inner.powf(d) * phi0.powf(m) * g(a0 * phi0);
        let outer_part = integrate_piecewise(
            |r: f64| {
                let phi = self.fraction(r);
                if phi <= 0.0 {
                    return 0.0;
                }
                d * r.powf(d - 1.0) * phi.powf(m) * g(a0 * phi)
            },
            &[self.inner, self.outer],
            self.tol,
        )
        .value;
        let base = LogValue::from_ln(self.ln_lambda_kappa + m * self.ln_a0);
        base * LogValue::from_linear(inner_part + outer_part)
    }

    /// `∫ g(A(x)) μ(dx)` with `A` from [`local_mean_a`] and every factor in
    /// linear arithmetic; integrates `λ d κ_d r^{d-1} g(A(r))` over
    /// `[0, |1 - δ/2|, 1 + δ/2]` directly.
    pub fn integrate_linear<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        if self.params.is_zero_intensity() {
            return 0.0;
        }
        let dim = self.params.dimension();
        let d = dim.get() as f64;
        let scale = self.params.lambda() * d * unit_ball_volume(dim);
        integrate_piecewise(
            |r: f64| scale * r.powf(d - 1.0) * g(local_mean_a(r, &self.params)),
            &self.breakpoints(),
            self.tol,
        )
        .value
    }

    /// Monte Carlo estimate of
    /// `γ₁ = ∫∫ B(x1, x2) (P(x1) P(x2))^{1/4} μ(dx1) μ(dx2)`.
    ///
    /// Writing the triple integral as `∫ G(y)² μ(dy)` with
    /// `G(y) = ∫ h(x, y) P(x)^{1/4} μ(dx)`, each sample draws `y` uniformly
    /// in `B(0, 1 + δ/2)` and two independent `z` uniformly in `B(y, δ/2)`;
    /// `x = 2z - y` then ranges over the common neighborhood of `y`, so
    /// `x1, x2` are always within `2δ` of each other. The product of the two
    /// inner evaluations is unbiased for `G(y)² / a₀²`.
    pub fn gamma1_monte_carlo(&self, budget: u64, stream: RandomStream) -> Result<(LogValue, f64)> {
        if budget == 0 {
            return Err(invalid("budget", "Monte Carlo budget must be positive"));
        }
        if self.params.is_zero_intensity() {
            return Ok((LogValue::ZERO, 0.0));
        }
        let d = self.params.d();
        let a0 = self.ln_a0.exp();
        let half = 0.5 * self.params.delta();
        let outer = Window::centered(d, self.outer);
        let mut rng = stream.rng();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut inner_window = Window::centered(d, half);
        let mut x = vec![0.0; d];
        for _ in 0..budget {
            let y = uniform_in_ball(&outer, &mut rng);
            inner_window.center.copy_from_slice(&y);
            let mut w = 1.0;
            for _ in 0..2 {
                let z = uniform_in_ball(&inner_window, &mut rng);
                let z_sq: f64 = z.iter().map(|v| v * v).sum();
                if z_sq > 1.0 {
                    w = 0.0;
                    break;
                }
                for ((xi, zi), yi) in x.iter_mut().zip(&z).zip(&y) {
                    *xi = 2.0 * zi - yi;
                }
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let phi = self.fraction(r);
                let a = a0 * phi;
                // P(a)^{1/4} / a₀^{1/4}
                w *= (phi * (a * (a * (a + 6.0) + 7.0) + 1.0)).powf(0.25);
            }
            sum += w;
            sum_sq += w * w;
        }
        let n = budget as f64;
        let mean = sum / n;
        let var = ((sum_sq / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
        let ln_prefactor = self.ln_lambda_kappa + d as f64 * self.outer.ln() + 2.5 * self.ln_a0;
        let value = LogValue::from_ln(ln_prefactor) * LogValue::from_linear(mean);
        let rel_se = if mean > 0.0 { (var / n).sqrt() / mean } else { 0.0 };
        Ok((value, rel_se))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Dimension;

    fn params(d: usize, delta: f64, lambda: f64) -> ModelParams {
        ModelParams::new(d, delta, lambda).unwrap()
    }

    fn kappa(d: usize) -> f64 {
        unit_ball_volume(Dimension::new(d).unwrap())
    }

    #[test]
    fn interior_and_exterior_values() {
        for d in [1, 2, 3, 5, 9] {
            let p = params(d, 0.2, 3.0);
            let a0 = kappa(d) * 3.0 * 0.2f64.powi(d as i32);
            for r in [0.0, 0.5, 0.9] {
                let a = local_mean_a(r, &p);
                assert!((a - a0).abs() <= 1e-12 * a0, "d={d} r={r}: {a} vs {a0}");
                assert!((local_mean_a_log(r, &p).value() - a0).abs() <= 1e-12 * a0);
            }
            assert_eq!(local_mean_a(1.1 + 1e-9, &p), 0.0);
            assert_eq!(local_mean_a(3.0, &p), 0.0);
        }
    }

    #[test]
    fn boundary_value_against_hit_counting() {
        let p = params(2, 0.2, 10.0);
        let exact = local_mean_a(1.0, &p);
        let x = [1.0, 0.0];
        let window = Window {
            center: x.to_vec(),
            radius: 0.2,
        };
        let mut rng = RandomStream::new(1234, 0).rng();
        let n = 10_000_000u64;
        let mut hits = 0u64;
        for _ in 0..n {
            let y = uniform_in_ball(&window, &mut rng);
            let mid = ((x[0] + y[0]) / 2.0).powi(2) + ((x[1] + y[1]) / 2.0).powi(2);
            if mid <= 1.0 {
                hits += 1;
            }
        }
        let pr = hits as f64 / n as f64;
        let scale = 10.0 * std::f64::consts::PI * 0.04;
        let est = scale * pr;
        let se = scale * (pr * (1.0 - pr) / n as f64).sqrt();
        assert!((exact - est).abs() <= 3.0 * se + 1e-6, "{exact} vs {est} ± {se}");
    }

    #[test]
    fn copair_special_cases() {
        let p = params(2, 0.1, 50.0);
        let far = copair_b(&[0.0, 0.0], &[0.25, 0.0], &p, 10, RandomStream::new(0, 0)).unwrap();
        assert_eq!(far.value, 0.0);
        assert!(copair_b(&[0.0, 0.0], &[0.0, 0.0], &p, 0, RandomStream::new(0, 0)).is_err());

        // B(x, x) = A(x)
        let x = [0.97, 0.1];
        let b = copair_b(&x, &x, &p, 200_000, RandomStream::new(3, 0)).unwrap();
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let a = local_mean_a(r, &p);
        assert!((b.value - a).abs() < 4.0 * b.std_error, "{} vs {a}", b.value);
    }

    #[test]
    fn copair_one_dimensional_interval_oracle() {
        // y admissible for x1 = 0: [-0.2, 0.2]; for x2 = 0.2: [0, 0.4];
        // the midpoint constraint is slack for both.
        let lo = (-0.2f64).max(0.0);
        let hi = 0.2f64.min(0.4);
        let expected = 1.0 * (hi - lo);
        let p = params(1, 0.2, 1.0);
        let b = copair_b(&[0.0], &[0.2], &p, 1_000_000, RandomStream::new(8, 0)).unwrap();
        assert!((b.value - expected).abs() < 4.0 * b.std_error, "{} vs {expected}", b.value);
    }

    #[test]
    fn log_and_linear_integrals_agree() {
        let tol = Tolerance::relative(1e-12);
        for &(d, delta, lambda) in &[(1, 0.2, 1.0), (2, 0.05, 9.0), (3, 0.3, 4.0), (8, 0.5, 30.0), (20, 0.1, 1e12)] {
            let p = params(d, delta, lambda);
            let prof = RadialProfile::new(&p, tol);
            let log = prof.integrate_log(2.0, |_| 1.0).value();
            let lin = prof.integrate_linear(|a| a * a);
            assert!((log - lin).abs() <= 1e-10 * lin, "d={d}: {log} vs {lin}");
        }
    }

    #[test]
    fn mean_identity_via_quadrature() {
        // (λ/2) ∫ A dx = ½ κ² λ² δ^d
        for &(d, delta, lambda) in &[(1, 0.2, 1.0), (2, 0.05, 9.0), (4, 0.4, 2.0), (7, 1.5, 0.3), (3, 2.5, 1.0)] {
            let p = params(d, delta, lambda);
            let prof = RadialProfile::new(&p, Tolerance::relative(1e-12));
            let quad = 0.5 * prof.integrate_log(1.0, |_| 1.0).value();
            let k = kappa(d);
            let closed = 0.5 * k * k * lambda * lambda * delta.powi(d as i32);
            assert!((quad - closed).abs() <= 1e-8 * closed, "d={d} δ={delta}: {quad} vs {closed}");
        }
    }
}
