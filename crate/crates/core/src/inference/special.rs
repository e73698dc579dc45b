//! Special functions behind the F and χ² p-values.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpecialError {
    #[error("argument out of domain")]
    Domain,
    #[error("continued fraction did not converge")]
    NoConvergence,
}

const MAX_ITER: usize = 2000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn regularized_beta(a: f64, b: f64, x: f64) -> Result<f64, SpecialError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(SpecialError::Domain);
    }
    incomplete_beta_pair(a, b, x, 1.0 - x)
}

/// `I_x(a, b)` with `y = 1 - x` supplied separately so callers can pass
/// it without cancellation.
fn incomplete_beta_pair(a: f64, b: f64, x: f64, y: f64) -> Result<f64, SpecialError> {
    if !(a > 0.0 && b > 0.0) || x < 0.0 || y < 0.0 {
        return Err(SpecialError::Domain);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if y == 0.0 {
        return Ok(1.0);
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        Ok(1.0 - beta_cf_term(b, a, y, x)?)
    } else {
        beta_cf_term(a, b, x, y)
    }
}

/// `x^a y^b / (a B(a,b))` times the continued fraction, via modified Lentz.
fn beta_cf_term(a: f64, b: f64, x: f64, y: f64) -> Result<f64, SpecialError> {
    let front = (a * x.ln() + b * y.ln() - ln_beta(a, b)).exp() / a;
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
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + even * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + even / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let odd = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + odd * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + odd / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(front * h);
        }
    }
    Err(SpecialError::NoConvergence)
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64, SpecialError> {
    Ok(gamma_pq(a, x)?.0)
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> Result<f64, SpecialError> {
    Ok(gamma_pq(a, x)?.1)
}

fn gamma_pq(a: f64, x: f64) -> Result<(f64, f64), SpecialError> {
    if a.is_nan() || a <= 0.0 || x.is_nan() || x < 0.0 {
        return Err(SpecialError::Domain);
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let log_front = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // series
        let mut ap = a;
        let mut del = 1.0 / a;
        let mut sum = del;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * EPS {
                let p = sum * log_front.exp();
                return Ok((p, 1.0 - p));
            }
        }
        Err(SpecialError::NoConvergence)
    } else {
        // continued fraction for Q, modified Lentz
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
            let i = i as f64;
            let an = -i * (i - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                let q = log_front.exp() * h;
                return Ok((1.0 - q, q));
            }
        }
        Err(SpecialError::NoConvergence)
    }
}

/// `P(F > x)` for `F ~ F(d1, d2)`.
pub fn f_upper_tail(x: f64, d1: f64, d2: f64) -> Result<f64, SpecialError> {
    if !(d1 > 0.0 && d2 > 0.0) || x.is_nan() || x < 0.0 {
        return Err(SpecialError::Domain);
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    // P(F > x) = I_{d2/(d2 + d1 x)}(d2/2, d1/2)
    let denom = d2 + d1 * x;
    incomplete_beta_pair(0.5 * d2, 0.5 * d1, d2 / denom, d1 * x / denom)
        .map(|p| p.clamp(0.0, 1.0))
}

/// `P(χ² > x)` for `k` degrees of freedom.
pub fn chisq_upper_tail(x: f64, k: f64) -> Result<f64, SpecialError> {
    if k.is_nan() || k <= 0.0 || x.is_nan() || x < 0.0 {
        return Err(SpecialError::Domain);
    }
    regularized_gamma_q(0.5 * k, 0.5 * x).map(|p| p.clamp(0.0, 1.0))
}
