//! Moments of the first difference `D_x E`, a Poisson variable with mean `A(x)`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub a: f64,
    /// `E[(D_x E)^2] = a² + a`
    pub m2: f64,
    /// `E|D_x E|^3 = a³ + 3a² + a`
    pub m3abs: f64,
    /// `P = E[(D_x E)^4] = a⁴ + 6a³ + 7a² + a`
    pub m4: f64,
    /// `Q = E[(D_x E (D_x E - 1))^2] = a⁴ + 4a³ + 2a²`
    pub q: f64,
}

pub fn moment_report(a: f64) -> MomentReport {
    debug_assert!(a >= 0.0);
    MomentReport {
        a,
        m2: a * (a + 1.0),
        m3abs: a * (a * (a + 3.0) + 1.0),
        m4: fourth_moment(a),
        q: factorial_square_moment(a),
    }
}

pub fn fourth_moment(a: f64) -> f64 {
    a * (a * (a * (a + 6.0) + 7.0) + 1.0)
}

pub fn factorial_square_moment(a: f64) -> f64 {
    a * a * (a * (a + 4.0) + 2.0)
}

/// Integrand of `γ_{3,P}` in product form, `(Q(a) (a² + a))^{1/2}`.
pub fn gamma3p_integrand_factored(a: f64) -> f64 {
    (factorial_square_moment(a) * a * (a + 1.0)).sqrt()
}

/// The same integrand expanded, `(a⁶ + 5a⁵ + 6a⁴ + 2a³)^{1/2}`.
pub fn gamma3p_integrand_expanded(a: f64) -> f64 {
    let a3 = a * a * a;
    (a3 * a3 + 5.0 * a3 * a * a + 6.0 * a3 * a + 2.0 * a3).sqrt()
}
