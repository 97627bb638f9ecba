//! Special functions used by the volume formulas.

pub use statrs::function::gamma::ln_gamma;

const BETA_CF_TOL: f64 = 1e-14;
const BETA_CF_MAX_ITER: usize = 20_000;
const TINY: f64 = 1e-300;

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=BETA_CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < BETA_CF_TOL {
            return h;
        }
    }
    h
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Natural log of the regularized incomplete beta function `I_x(a, b)`.
///
/// Returns `-inf` for `x <= 0`. The continued fraction is evaluated on
/// whichever side of `(a+1)/(a+b+2)` converges fastest.
pub fn ln_beta_reg(x: f64, a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x >= 1.0 {
        return 0.0;
    }
    if x < (a + 1.0) / (a + b + 2.0) {
        direct_ln(x, a, b)
    } else {
        let other = direct_ln(1.0 - x, b, a).exp();
        (-other).ln_1p()
    }
}

fn direct_ln(x: f64, a: f64, b: f64) -> f64 {
    a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b) - a.ln() + beta_cf(x, a, b).ln()
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn beta_reg(x: f64, a: f64, b: f64) -> f64 {
    ln_beta_reg(x, a, b).exp()
}
