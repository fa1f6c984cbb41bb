//! Regularized incomplete gamma function and the Poisson upper tail.

use crate::{Error, Result};

const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Regularized lower and upper incomplete gamma `(P(a, z), Q(a, z))` for
/// `a > 0`, `z >= 0`.
///
/// Series for `z < a + 1`, modified Lentz continued fraction otherwise, so
/// the smaller of the two is always computed directly.
pub fn gamma_pq(a: f64, z: f64) -> Result<(f64, f64)> {
    if !(a.is_finite() && a > 0.0 && z.is_finite() && z >= 0.0) {
        return Err(Error::InvalidOption(alloc::format!(
            "incomplete gamma domain: a={a}, z={z}"
        )));
    }
    if z == 0.0 {
        return Ok((0.0, 1.0));
    }
    let log_prefactor = -z + a * libm::log(z) - libm::lgamma(a);
    if z < a + 1.0 {
        let p = series(a, z, log_prefactor);
        Ok((p, 1.0 - p))
    } else {
        let q = continued_fraction(a, z, log_prefactor);
        Ok((1.0 - q, q))
    }
}

fn series(a: f64, z: f64, log_prefactor: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= z / ap;
        sum += term;
        if libm::fabs(term) < libm::fabs(sum) * EPS {
            break;
        }
    }
    (libm::exp(log_prefactor) * sum).clamp(0.0, 1.0)
}

fn continued_fraction(a: f64, z: f64, log_prefactor: f64) -> f64 {
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = b + an / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if libm::fabs(delta - 1.0) < EPS {
            break;
        }
    }
    (libm::exp(log_prefactor) * h).clamp(0.0, 1.0)
}

/// `P(X >= x)` for `X ~ Poisson(rate)`, which equals the regularized lower
/// incomplete gamma `P(x, rate)`.
pub fn poisson_tail(x: u64, rate: f64) -> Result<f64> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::InvalidRate(rate));
    }
    if x == 0 {
        return Ok(1.0);
    }
    if x == 1 {
        return Ok(-libm::expm1(-rate));
    }
    gamma_pq(x as f64, rate).map(|(p, _)| p)
}

/// Signed-count variant; negative counts are rejected.
pub fn poisson_tail_signed(x: i64, rate: f64) -> Result<f64> {
    if x < 0 {
        return Err(Error::InvalidCount(x as f64));
    }
    poisson_tail(x as u64, rate)
}
