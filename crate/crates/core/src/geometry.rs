//! Volumes of balls, caps and ball-ball intersections in `d` dimensions.
//!
//! Every quantity that can overflow or underflow at large `d` also has a
//! natural-log variant. Caps are evaluated through the regularized incomplete
//! beta function; [`cap_volume_quadrature`] integrates cross-sections instead
//! and shares no code with the closed form.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature;
use crate::special::{ln_beta_reg, ln_gamma};

/// Ambient dimension, always at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        Ok(Dimension(d))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<usize> for Dimension {
    type Error = crate::Error;
    fn try_from(d: usize) -> Result<Self> {
        Dimension::new(d)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A nonnegative quantity stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    ln: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { ln: f64::NEG_INFINITY };
    pub const ONE: LogValue = LogValue { ln: 0.0 };

    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        LogValue { ln }
    }

    /// Panics in debug builds on negative input.
    pub fn from_linear(x: f64) -> Self {
        debug_assert!(x >= 0.0, "negative value {x}");
        LogValue { ln: x.ln() }
    }

    pub fn is_zero(self) -> bool {
        self.ln == f64::NEG_INFINITY
    }

    /// `None` for zero.
    pub fn ln(self) -> Option<f64> {
        (!self.is_zero()).then_some(self.ln)
    }

    pub fn ln_or_neg_inf(self) -> f64 {
        self.ln
    }

    pub fn value(self) -> f64 {
        self.ln.exp()
    }

    pub fn powf(self, p: f64) -> Self {
        if self.is_zero() {
            return if p == 0.0 { LogValue::ONE } else { LogValue::ZERO };
        }
        LogValue { ln: self.ln * p }
    }

    pub fn sqrt(self) -> Self {
        self.powf(0.5)
    }

    /// Log-sum-exp addition.
    pub fn add(self, other: LogValue) -> Self {
        let (hi, lo) = if self.ln >= other.ln { (self, other) } else { (other, self) };
        if lo.is_zero() {
            return hi;
        }
        LogValue {
            ln: hi.ln + (lo.ln - hi.ln).exp().ln_1p(),
        }
    }

    /// `|a - b|`, computed as `max · (1 - e^{min - max})`.
    pub fn abs_diff(self, other: LogValue) -> Self {
        let (hi, lo) = if self.ln >= other.ln { (self, other) } else { (other, self) };
        if lo.is_zero() {
            return hi;
        }
        if hi.ln == lo.ln {
            return LogValue::ZERO;
        }
        LogValue {
            ln: hi.ln + (-(lo.ln - hi.ln).exp_m1()).ln(),
        }
    }

    pub fn max(self, other: LogValue) -> Self {
        if self.ln >= other.ln {
            self
        } else {
            other
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.is_zero() || rhs.is_zero() {
            return LogValue::ZERO;
        }
        LogValue { ln: self.ln + rhs.ln }
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        if self.is_zero() {
            return LogValue::ZERO;
        }
        LogValue { ln: self.ln - rhs.ln }
    }
}

/// `ln κ_d = (d/2) ln π - ln Γ(1 + d/2)`.
pub fn ln_unit_ball_volume(d: Dimension) -> f64 {
    let half = 0.5 * d.as_f64();
    half * PI.ln() - ln_gamma(1.0 + half)
}

pub fn unit_ball_volume_log(d: Dimension) -> LogValue {
    LogValue::from_ln(ln_unit_ball_volume(d))
}

/// Volume of the unit ball, by the two-step recursion `κ_d = κ_{d-2} 2π/d`.
pub fn unit_ball_volume(d: Dimension) -> f64 {
    let d = d.get();
    let mut kappa = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        kappa *= 2.0 * PI / k as f64;
        k += 2;
    }
    kappa
}

/// `κ_0 = 1` is needed for cross-sections of one-dimensional caps.
fn unit_ball_volume_allow_zero(d: usize) -> f64 {
    match d {
        0 => 1.0,
        d => unit_ball_volume(Dimension(d)),
    }
}

pub fn ball_volume(d: Dimension, radius: f64) -> f64 {
    unit_ball_volume(d) * radius.powi(d.get() as i32)
}

/// `κ_d` divided by its Stirling asymptote `(πd)^{-1/2} (2πe/d)^{d/2}`.
pub fn stirling_volume_ratio(d: Dimension) -> f64 {
    let df = d.as_f64();
    let ln_asymptote = -0.5 * (PI * df).ln() + 0.5 * df * (2.0 * PI * std::f64::consts::E / df).ln();
    (ln_unit_ball_volume(d) - ln_asymptote).exp()
}

fn check_cap(radius: f64, height: f64) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("radius", format!("must be positive and finite, got {radius}")));
    }
    if !(0.0..=2.0 * radius).contains(&height) {
        return Err(invalid(
            "height",
            format!("must lie in [0, 2*radius] = [0, {}], got {height}", 2.0 * radius),
        ));
    }
    Ok(())
}

/// Natural log of the fraction of a `d`-ball of the given radius occupied by
/// a cap of the given height.
pub fn ln_cap_fraction(d: Dimension, radius: f64, height: f64) -> Result<f64> {
    check_cap(radius, height)?;
    Ok(ln_cap_fraction_unchecked(d, radius, height))
}

fn ln_cap_fraction_unchecked(d: Dimension, radius: f64, height: f64) -> f64 {
    if height <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if height >= 2.0 * radius {
        return 0.0;
    }
    let a = 0.5 * (d.as_f64() + 1.0);
    let t = height / radius;
    let x = (t * (2.0 - t)).min(1.0);
    let ln_half_i = ln_beta_reg(x, a, 0.5) - std::f64::consts::LN_2;
    if height <= radius {
        ln_half_i
    } else {
        (-ln_half_i.exp()).ln_1p()
    }
}

/// Volume of the cap of the given height cut from a `d`-ball.
pub fn cap_volume(d: Dimension, radius: f64, height: f64) -> Result<f64> {
    Ok(ball_volume(d, radius) * ln_cap_fraction(d, radius, height)?.exp())
}

/// Cap volume by integrating `(d-1)`-ball cross-sections with adaptive
/// Simpson. Uses the angular substitution `t = R cos φ`, which turns the
/// integrand into `κ_{d-1} R^d sin^d φ`.
pub fn cap_volume_quadrature(d: Dimension, radius: f64, height: f64) -> Result<f64> {
    check_cap(radius, height)?;
    if height == 0.0 {
        return Ok(0.0);
    }
    let dd = d.get();
    let alpha = ((radius - height) / radius).clamp(-1.0, 1.0).acos();
    let prefactor = unit_ball_volume_allow_zero(dd - 1) * radius.powi(dd as i32);
    let integrand = |phi: f64| phi.sin().powi(dd as i32);
    // Tolerance scaled by the smaller of the ball and a one-panel estimate
    // of the cap, so thin caps keep their relative accuracy.
    let coarse = alpha / 6.0 * (4.0 * integrand(0.5 * alpha) + integrand(alpha));
    let tol = 1e-12 * (ball_volume(d, radius) / prefactor).min(coarse);
    let integral = quadrature::simpson(integrand, 0.0, alpha, tol);
    Ok(prefactor * integral)
}

/// Geometry of two overlapping balls split at their radical hyperplane.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Overlap {
    Disjoint,
    /// Ball 1 lies inside ball 2.
    FirstInside,
    /// Ball 2 lies inside ball 1.
    SecondInside,
    Lens { h1: f64, h2: f64 },
}

fn overlap(r1: f64, r2: f64, dist: f64) -> Overlap {
    if dist >= r1 + r2 {
        return Overlap::Disjoint;
    }
    if dist <= r2 - r1 {
        return Overlap::FirstInside;
    }
    if dist <= r1 - r2 {
        return Overlap::SecondInside;
    }
    // Signed distance from center 1 to the radical plane.
    let c1 = ((dist - r2) * (dist + r2) + r1 * r1) / (2.0 * dist);
    let h1 = (r1 - c1).clamp(0.0, 2.0 * r1);
    let h2 = ((r2 - dist) + c1).clamp(0.0, 2.0 * r2);
    Overlap::Lens { h1, h2 }
}

/// Lebesgue volume of the intersection of two `d`-balls.
pub fn ball_intersection_volume(d: Dimension, r1: f64, r2: f64, center_distance: f64) -> f64 {
    match overlap(r1, r2, center_distance) {
        Overlap::Disjoint => 0.0,
        Overlap::FirstInside => ball_volume(d, r1),
        Overlap::SecondInside => ball_volume(d, r2),
        Overlap::Lens { h1, h2 } => {
            ball_volume(d, r1) * ln_cap_fraction_unchecked(d, r1, h1).exp()
                + ball_volume(d, r2) * ln_cap_fraction_unchecked(d, r2, h2).exp()
        }
    }
}

/// Intersection volume divided by the volume of the first ball. Stays
/// representable for any `d` because no absolute volume is formed.
pub fn ball_intersection_fraction(d: Dimension, r1: f64, r2: f64, center_distance: f64) -> f64 {
    let scale_ln = d.as_f64() * (r2 / r1).ln();
    match overlap(r1, r2, center_distance) {
        Overlap::Disjoint => 0.0,
        Overlap::FirstInside => 1.0,
        Overlap::SecondInside => scale_ln.exp(),
        Overlap::Lens { h1, h2 } => {
            let own = ln_cap_fraction_unchecked(d, r1, h1).exp();
            let other = (ln_cap_fraction_unchecked(d, r2, h2) + scale_ln).exp();
            (own + other).min(1.0)
        }
    }
}
