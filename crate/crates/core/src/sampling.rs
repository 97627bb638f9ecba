//! Reproducible sampling of stationary Poisson point processes in ball windows.
//!
//! Randomness is addressed by `(seed, stream_id)`: each pair maps to an
//! independent ChaCha8 keystream, so a replicate always sees the same draws no
//! matter which worker runs it or in what order.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{ln_unit_ball_volume, Dimension};
use crate::special::ln_gamma;

pub const DEFAULT_POINT_BUDGET: f64 = 1e7;

/// The tuple `(d, δ, λ, θ)` indexing every formula.
///
/// The intensity is kept as its natural log so that phase-(2) intensities,
/// which grow like `d^{d/2}`, stay representable. `λ = 0` is allowed and
/// stored as `-inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    d: Dimension,
    delta: f64,
    ln_lambda: f64,
    theta: Option<f64>,
}

impl ModelParams {
    pub fn new(d: usize, delta: f64, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", format!("must be finite and nonnegative, got {lambda}")));
        }
        Self::from_ln_lambda(d, delta, lambda.ln())
    }

    pub fn from_ln_lambda(d: usize, delta: f64, ln_lambda: f64) -> Result<Self> {
        let d = Dimension::new(d)?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid("delta", format!("must be positive and finite, got {delta}")));
        }
        if ln_lambda.is_nan() || ln_lambda == f64::INFINITY {
            return Err(invalid("lambda", "log-intensity must be finite or -inf"));
        }
        Ok(ModelParams {
            d,
            delta,
            ln_lambda,
            theta: None,
        })
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(invalid("theta", format!("must be positive and finite, got {theta}")));
        }
        self.theta = Some(theta);
        Ok(self)
    }

    pub fn dimension(&self) -> Dimension {
        self.d
    }

    pub fn d(&self) -> usize {
        self.d.get()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// May be `inf` when the intensity is not representable.
    pub fn lambda(&self) -> f64 {
        self.ln_lambda.exp()
    }

    pub fn ln_lambda(&self) -> f64 {
        self.ln_lambda
    }

    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    pub fn is_zero_intensity(&self) -> bool {
        self.ln_lambda == f64::NEG_INFINITY
    }

    /// `ln(κ_d λ δ^d)`, the log of `A(x)` at interior points.
    pub fn ln_interior_a(&self) -> f64 {
        ln_unit_ball_volume(self.d) + self.ln_lambda + self.d.as_f64() * self.delta.ln()
    }

    /// The edge-count simulation window `B(0, 1 + δ/2)`.
    pub fn edge_window(&self) -> Window {
        Window::centered(self.d(), 1.0 + 0.5 * self.delta)
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    d: usize,
    delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    log_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
}

impl Serialize for ModelParams {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let lambda = self.lambda();
        ParamsRepr {
            d: self.d(),
            delta: self.delta,
            lambda: lambda.is_finite().then_some(lambda),
            log_lambda: self.ln_lambda.is_finite().then_some(self.ln_lambda),
            theta: self.theta,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelParams {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = ParamsRepr::deserialize(de)?;
        let params = match (repr.lambda, repr.log_lambda) {
            (_, Some(ln)) => ModelParams::from_ln_lambda(repr.d, repr.delta, ln),
            (Some(l), None) => ModelParams::new(repr.d, repr.delta, l),
            (None, None) => Err(invalid("lambda", "one of lambda or log_lambda is required")),
        }
        .map_err(D::Error::custom)?;
        match repr.theta {
            Some(t) => params.with_theta(t).map_err(D::Error::custom),
            None => Ok(params),
        }
    }
}

/// A ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Window {
    pub fn centered(d: usize, radius: f64) -> Self {
        Window {
            center: vec![0.0; d],
            radius,
        }
    }

    pub fn d(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(invalid("radius", format!("window radius must be positive, got {}", self.radius)));
        }
        if self.center.is_empty() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("center", "window center must be a finite vector of dimension >= 1"));
        }
        Ok(())
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let r2: f64 = p
            .iter()
            .zip(&self.center)
            .map(|(x, c)| (x - c) * (x - c))
            .sum();
        r2 <= self.radius * self.radius
    }
}

/// Finite point set in a ball window, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    d: usize,
    coords: Vec<f64>,
    window: Window,
}

impl PointConfiguration {
    pub fn empty(window: Window) -> Self {
        PointConfiguration {
            d: window.d(),
            coords: Vec::new(),
            window,
        }
    }

    pub fn from_points<P: AsRef<[f64]>>(window: Window, points: &[P]) -> Result<Self> {
        let mut config = PointConfiguration::empty(window);
        for p in points {
            config.push(p.as_ref())?;
        }
        Ok(config)
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(invalid("point", "coordinates must be finite"));
        }
        if !self.window.contains(p) {
            return Err(invalid("point", "point lies outside the window"));
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.coords.len() / self.d
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.d.max(1))
    }

    /// Copy with extra points appended; the window grows to cover them.
    pub fn with_points(&self, extra: &[&[f64]]) -> Self {
        let mut out = self.clone();
        for p in extra {
            debug_assert_eq!(p.len(), self.d);
            if !out.window.contains(p) {
                let r2: f64 = p
                    .iter()
                    .zip(&out.window.center)
                    .map(|(x, c)| (x - c) * (x - c))
                    .sum();
                out.window.radius = r2.sqrt() * (1.0 + 1e-12);
            }
            out.coords.extend_from_slice(p);
        }
        out
    }

    /// Keeps each point independently with probability `keep`.
    pub fn thin<R: Rng + ?Sized>(&self, keep: f64, rng: &mut R) -> Self {
        let mut out = PointConfiguration::empty(self.window.clone());
        for p in self.iter() {
            if rng.gen::<f64>() < keep {
                out.coords.extend_from_slice(p);
            }
        }
        out
    }
}

/// Address of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RandomStream { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

const INVERSION_CUTOFF: f64 = 30.0;

/// Samples a Poisson variate: sequential inversion below mean 30,
/// Hörmann's PTRS transformed rejection above.
pub fn poisson_integer<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(invalid("mean", format!("Poisson mean must be finite and nonnegative, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    if mean < INVERSION_CUTOFF {
        Ok(poisson_inversion(mean, rng))
    } else {
        Ok(poisson_ptrs(mean, rng))
    }
}

fn poisson_inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.gen();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        if p == 0.0 && k as f64 > mean {
            // rounding left the cdf short of u
            break;
        }
    }
    k
}

fn poisson_ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln() <= -mean + k * loglam - ln_gamma(k + 1.0) {
            return k as u64;
        }
    }
}

/// Uniform point in the window ball: radius `R U^{1/d}` along a normalized
/// isotropic Gaussian direction.
pub fn uniform_in_ball<R: Rng + ?Sized>(window: &Window, rng: &mut R) -> Vec<f64> {
    let d = window.d();
    let mut out = vec![0.0; d];
    uniform_in_ball_into(window, rng, &mut out);
    out
}

fn uniform_in_ball_into<R: Rng + ?Sized>(window: &Window, rng: &mut R, out: &mut [f64]) {
    let d = out.len();
    let norm = loop {
        let mut n2 = 0.0;
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            n2 += *x * *x;
        }
        if n2 > 0.0 {
            break n2.sqrt();
        }
    };
    let radius = window.radius * rng.gen::<f64>().powf(1.0 / d as f64);
    let scale = radius / norm;
    for (x, c) in out.iter_mut().zip(&window.center) {
        *x = c + *x * scale;
    }
    // rounding can push a boundary point just outside
    if !window.contains(out) {
        let shrink = 1.0 - 4.0 * f64::EPSILON;
        for (x, c) in out.iter_mut().zip(&window.center) {
            *x = c + (*x - c) * shrink;
        }
    }
}

/// Expected number of points of the process in the window, as a log.
pub fn ln_expected_count(params: &ModelParams, window: &Window) -> f64 {
    params.ln_lambda() + ln_unit_ball_volume(params.dimension()) + params.d() as f64 * window.radius.ln()
}

/// Draws one realization of the process restricted to `window`.
pub fn sample_process(
    params: &ModelParams,
    window: &Window,
    stream: RandomStream,
    point_budget: f64,
) -> Result<PointConfiguration> {
    let mut rng = stream.rng();
    sample_process_with(params, window, &mut rng, point_budget)
}

pub fn sample_process_with<R: Rng + ?Sized>(
    params: &ModelParams,
    window: &Window,
    rng: &mut R,
    point_budget: f64,
) -> Result<PointConfiguration> {
    window.validate()?;
    if window.d() != params.d() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            actual: window.d(),
        });
    }
    let ln_mean = ln_expected_count(params, window);
    if ln_mean > point_budget.ln() {
        return Err(Error::Infeasible {
            expected: ln_mean.exp(),
            budget: point_budget,
        });
    }
    let n = poisson_integer(ln_mean.exp(), rng)? as usize;
    let d = params.d();
    let mut coords = vec![0.0; n * d];
    for chunk in coords.chunks_exact_mut(d) {
        uniform_in_ball_into(window, rng, chunk);
    }
    Ok(PointConfiguration {
        d,
        coords,
        window: window.clone(),
    })
}
