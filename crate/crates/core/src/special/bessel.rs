//! Bessel functions of the first kind for the order range used by the
//! eigen-spectrum of the limiting covariance operator, and their positive
//! zeros.

use super::gamma::ln_gamma;
use crate::{Error, Result};

/// Bessel order ν = 1/(a+1) ∈ (0, 1] induced by a tuning parameter a >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselOrder {
    nu: f64,
}

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(Error::Domain(format!(
                "Bessel order must lie in (0, 1], got {nu}"
            )));
        }
        Ok(Self { nu })
    }

    /// Order induced by the tuning parameter: ν = 1/(a+1).
    pub fn from_tuning(a: f64) -> Result<Self> {
        if !(a >= 0.0) {
            return Err(Error::Domain(format!(
                "tuning parameter must be nonnegative, got {a}"
            )));
        }
        Self::new(1.0 / (a + 1.0))
    }

    pub fn value(&self) -> f64 {
        self.nu
    }
}

// crossover between ascending series and Hankel asymptotic expansion
const SERIES_CUTOFF: f64 = 12.0;

/// J_ν(x) for any order ν > -1 needed internally (ν-1 and ν+1 appear in the
/// derivative and in the eigenfunction normalisation).
pub(crate) fn bessel_j_any(nu: f64, x: f64) -> f64 {
    debug_assert!(nu > -1.0 && nu <= 2.0, "order {nu} out of supported range");
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        return if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    if x <= SERIES_CUTOFF {
        series(nu, x)
    } else {
        hankel_asymptotic(nu, x)
    }
}

// ascending power series: sum over m of (-1)^m (x/2)^(nu+2m) / (m! Γ(nu+m+1))
fn series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = (nu * half.ln() - ln_gamma(nu + 1.0)).exp();
    let q = -half * half;
    let mut sum = term;
    for m in 0..200 {
        let mf = m as f64;
        term *= q / ((mf + 1.0) * (nu + mf + 1.0));
        sum += term;
        if term.abs() <= sum.abs() * 1e-17 + 1e-300 {
            break;
        }
    }
    sum
}

// Hankel expansion J_ν(x) ~ sqrt(2/(pi x)) (P cos w - Q sin w),
// w = x - (nu/2 + 1/4) pi; truncated at the smallest term.
fn hankel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut c = 1.0;
    let mut prev = f64::INFINITY;
    for j in 1..40u32 {
        let jf = j as f64;
        let odd = 2.0 * jf - 1.0;
        c *= (mu - odd * odd) / (jf * 8.0 * x);
        if c.abs() >= prev {
            break; // asymptotic tail started growing
        }
        prev = c.abs();
        let signed = if (j / 2) % 2 == 0 { c } else { -c };
        if j % 2 == 1 {
            q += signed;
        } else {
            p += signed;
        }
        if c.abs() < 1e-18 {
            break;
        }
    }
    let w = x - (0.5 * nu + 0.25) * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * w.cos() - q * w.sin())
}

/// Bessel function of the first kind J_ν(x) for ν ∈ (0, 1], x >= 0.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("bessel_j requires x >= 0, got {x}")));
    }
    Ok(bessel_j_any(order.value(), x))
}

/// Derivative J'_ν(x) = (J_{ν-1}(x) - J_{ν+1}(x)) / 2.
pub fn bessel_j_prime(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "bessel_j_prime requires x > 0, got {x}"
        )));
    }
    let nu = order.value();
    Ok(0.5 * (bessel_j_any(nu - 1.0, x) - bessel_j_any(nu + 1.0, x)))
}

/// k-th positive zero z_{ν,k} of J_ν, k >= 1.
///
/// Starts from McMahon's asymptotic estimate and polishes with a Newton
/// iteration safeguarded by a sign-change bracket, so the quadratic
/// convergence can never escape the enclosing interval.
pub fn bessel_zero(order: BesselOrder, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("zero index k must be >= 1".into()));
    }
    let nu = order.value();
    let guess = mcmahon_estimate(nu, k);

    // bracket around the estimate; spacing between zeros is close to pi, so
    // +-0.5 already isolates one zero for the orders supported here
    let mut lo = (guess - 0.5).max(1e-8);
    let mut hi = guess + 0.5;
    let mut f_lo = bessel_j_any(nu, lo);
    let mut f_hi = bessel_j_any(nu, hi);
    let mut widen = 0.3;
    while f_lo * f_hi > 0.0 && widen < 3.0 {
        lo = (lo - widen).max(1e-8);
        hi += widen;
        f_lo = bessel_j_any(nu, lo);
        f_hi = bessel_j_any(nu, hi);
        widen += 0.3;
    }
    if f_lo * f_hi > 0.0 {
        return Err(Error::Domain(format!(
            "failed to bracket zero {k} of J_{nu}"
        )));
    }

    let mut x = guess.clamp(lo, hi);
    for _ in 0..100 {
        let f = bessel_j_any(nu, x);
        if f * f_lo > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dfdx = 0.5 * (bessel_j_any(nu - 1.0, x) - bessel_j_any(nu + 1.0, x));
        let newton = x - f / dfdx;
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-13 * x.max(1.0) {
            break;
        }
    }
    Ok(x)
}

// McMahon expansion for the k-th zero (three correction terms).
fn mcmahon_estimate(nu: f64, k: u32) -> f64 {
    let mu = 4.0 * nu * nu;
    let beta = (k as f64 + 0.5 * nu - 0.25) * std::f64::consts::PI;
    let eb = 8.0 * beta;
    beta - (mu - 1.0) / eb - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * eb.powi(3))
        - 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * eb.powi(5))
}
