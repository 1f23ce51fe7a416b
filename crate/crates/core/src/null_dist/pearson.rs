//! Pearson-system fit by the first four moments and numerical quantiles.
//!
//! The fitted density solves f'(x)/f(x) = -(c1 + x) / (c0 + c1 x + c2 x²)
//! with x measured from the mean. Types I, III, IV, V and VI are supported
//! (the regions reachable for this crate's moment vectors); anything else is
//! rejected loudly. Quantiles come from integrating the fitted density and
//! inverting by bisection, which avoids per-type closed-form quantile code.

use crate::special::{integrate, QuadratureSpec};
use crate::{Error, Result};

/// Moment vector (mean, variance, skewness, full kurtosis) for the fit.
#[derive(Debug, Clone, Copy)]
pub struct PearsonMoments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl PearsonMoments {
    fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Pearson fit needs positive variance, got {}",
                self.variance
            )));
        }
        let beta1 = self.skewness * self.skewness;
        if !(self.kurtosis > beta1 + 1.0) {
            return Err(Error::UnsupportedRegion {
                beta1,
                beta2: self.kurtosis,
            });
        }
        Ok(())
    }
}

// fitted density in mean-centered coordinates
#[derive(Debug, Clone)]
enum Fitted {
    Normal {
        sigma: f64,
    },
    // Types I and VI: f ∝ |x-r1|^a1 |x-r2|^a2 on (lo, hi)
    TwoRoots {
        r1: f64,
        r2: f64,
        a1: f64,
        a2: f64,
        lo: f64,
        hi: f64,
    },
    // Type III: f ∝ |c0 + c1 x|^(-e) exp(-x/c1)
    Gamma {
        c0: f64,
        c1: f64,
        e: f64,
        lo: f64,
        hi: f64,
    },
    // Type IV: f ∝ ((x-lam)² + delta²)^(-1/(2 c2)) exp(-m atan((x-lam)/delta))
    Quartic {
        lam: f64,
        delta: f64,
        c2: f64,
        m: f64,
    },
    // Type V: f ∝ |x-r|^(-1/c2) exp((c1+r)/(c2 (x-r)))
    InverseGamma {
        r: f64,
        c1: f64,
        c2: f64,
        lo: f64,
        hi: f64,
    },
}

impl Fitted {
    fn support(&self) -> (f64, f64) {
        match *self {
            Fitted::Normal { .. } | Fitted::Quartic { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            Fitted::TwoRoots { lo, hi, .. } => (lo, hi),
            Fitted::Gamma { lo, hi, .. } => (lo, hi),
            Fitted::InverseGamma { lo, hi, .. } => (lo, hi),
        }
    }

    fn ln_density(&self, x: f64) -> f64 {
        match *self {
            Fitted::Normal { sigma } => -0.5 * (x / sigma) * (x / sigma),
            Fitted::TwoRoots { r1, r2, a1, a2, .. } => {
                a1 * (x - r1).abs().ln() + a2 * (x - r2).abs().ln()
            }
            Fitted::Gamma { c0, c1, e, .. } => -x / c1 - e * (c0 + c1 * x).abs().ln(),
            Fitted::Quartic { lam, delta, c2, m } => {
                let s = x - lam;
                -(s * s + delta * delta).ln() / (2.0 * c2) - m * (s / delta).atan()
            }
            Fitted::InverseGamma { r, c1, c2, .. } => {
                -(x - r).abs().ln() / c2 + (c1 + r) / (c2 * (x - r))
            }
        }
    }
}

fn fit(m: &PearsonMoments) -> Result<Fitted> {
    m.validate()?;
    let sigma = m.variance.sqrt();
    let g1 = m.skewness;
    let beta1 = g1 * g1;
    let beta2 = m.kurtosis;

    if beta1 < 1e-12 && (beta2 - 3.0).abs() < 1e-10 {
        return Ok(Fitted::Normal { sigma });
    }

    let denom = 10.0 * beta2 - 12.0 * beta1 - 18.0;
    if denom.abs() < 1e-10 {
        return Err(Error::UnsupportedRegion { beta1, beta2 });
    }
    let c0 = m.variance * (4.0 * beta2 - 3.0 * beta1) / denom;
    let c1 = sigma * g1 * (beta2 + 3.0) / denom;
    let c2 = (2.0 * beta2 - 3.0 * beta1 - 6.0) / denom;

    if c2.abs() < 1e-12 {
        // linear denominator: gamma shape
        if c1.abs() < 1e-12 {
            return Ok(Fitted::Normal { sigma });
        }
        let e = (c1 * c1 - c0) / (c1 * c1);
        let boundary = -c0 / c1;
        let (lo, hi) = if c1 > 0.0 {
            (boundary, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, boundary)
        };
        // integrability at the finite endpoint and decay at infinity
        if e >= 1.0 {
            return Err(Error::UnsupportedRegion { beta1, beta2 });
        }
        return Ok(Fitted::Gamma { c0, c1, e, lo, hi });
    }

    let disc = c1 * c1 - 4.0 * c0 * c2;
    let scale = (c1 * c1).max((4.0 * c0 * c2).abs());
    if disc.abs() < 1e-12 * scale.max(1e-300) {
        // double root: inverse-gamma shape
        let r = -c1 / (2.0 * c2);
        let (lo, hi) = if r < 0.0 {
            (r, f64::INFINITY)
        } else {
            (f64::NEG_INFINITY, r)
        };
        if 1.0 / c2 <= 1.0 {
            return Err(Error::UnsupportedRegion { beta1, beta2 });
        }
        return Ok(Fitted::InverseGamma { r, c1, c2, lo, hi });
    }

    if disc < 0.0 {
        // complex roots: Type IV
        let lam = -c1 / (2.0 * c2);
        let delta = (c0 / c2 - lam * lam).sqrt();
        let mcoef = (c1 + lam) / (c2 * delta);
        if 1.0 / c2 <= 1.0 {
            return Err(Error::UnsupportedRegion { beta1, beta2 });
        }
        return Ok(Fitted::Quartic {
            lam,
            delta,
            c2,
            m: mcoef,
        });
    }

    // distinct real roots: Types I (opposite signs) and VI (same sign)
    let sq = disc.sqrt();
    // numerically stable root pair
    let q = -0.5 * (c1 + c1.signum() * sq);
    let (mut r1, mut r2) = (q / c2, c0 / q);
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    let a1 = -(c1 + r1) / (c2 * (r1 - r2));
    let a2 = -(c1 + r2) / (c2 * (r2 - r1));

    if r1 < 0.0 && r2 > 0.0 {
        // mean strictly inside (r1, r2): Type I (beta-like)
        if a1 <= -1.0 || a2 <= -1.0 {
            return Err(Error::UnsupportedRegion { beta1, beta2 });
        }
        return Ok(Fitted::TwoRoots {
            r1,
            r2,
            a1,
            a2,
            lo: r1,
            hi: r2,
        });
    }

    // Type VI: support on the side of both roots that contains the mean
    let (lo, hi, edge_exp) = if r2 < 0.0 {
        (r2, f64::INFINITY, a2)
    } else if r1 > 0.0 {
        (f64::NEG_INFINITY, r1, a1)
    } else {
        return Err(Error::UnsupportedRegion { beta1, beta2 });
    };
    if edge_exp <= -1.0 || a1 + a2 >= -1.0 {
        return Err(Error::UnsupportedRegion { beta1, beta2 });
    }
    Ok(Fitted::TwoRoots {
        r1,
        r2,
        a1,
        a2,
        lo,
        hi,
    })
}

// power exponents that absorb an integrable density singularity
// f ~ (x - edge)^e with e in (-1, 0) at each finite support edge
fn edge_powers(fitted: &Fitted) -> (f64, f64) {
    let soften = |e: f64| {
        if e < 0.0 {
            1.0 / (1.0 + e)
        } else {
            1.0
        }
    };
    match *fitted {
        Fitted::Normal { .. } | Fitted::Quartic { .. } | Fitted::InverseGamma { .. } => (1.0, 1.0),
        Fitted::TwoRoots {
            r1, r2, a1, a2, lo, hi, ..
        } => {
            let p_lo = if lo.is_finite() {
                soften(if lo == r1 { a1 } else { a2 })
            } else {
                1.0
            };
            let p_hi = if hi.is_finite() {
                soften(if hi == r2 { a2 } else { a1 })
            } else {
                1.0
            };
            (p_lo, p_hi)
        }
        Fitted::Gamma { e, lo, .. } => {
            let p = soften(-e);
            if lo.is_finite() {
                (p, 1.0)
            } else {
                (1.0, p)
            }
        }
    }
}

// map u in (0,1) to the support, returning (x, dx/du); finite edges with a
// singular density exponent get a power transform so the mapped integrand
// stays bounded
fn map_u(fitted: &Fitted, sigma: f64, u: f64) -> (f64, f64) {
    let (lo, hi) = fitted.support();
    let (p_lo, p_hi) = edge_powers(fitted);
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            let d = hi - lo;
            if p_lo == 1.0 && p_hi == 1.0 {
                (lo + d * u, d)
            } else {
                // double-power map: ~u^p_lo near 0, ~(1-u)^p_hi near 1
                let num = u.powf(p_lo);
                let den = num + (1.0 - u).powf(p_hi);
                let b = num / den;
                let db = (p_lo * u.powf(p_lo - 1.0) * (1.0 - u).powf(p_hi)
                    + p_hi * num * (1.0 - u).powf(p_hi - 1.0))
                    / (den * den);
                (lo + d * b, d * db)
            }
        }
        (true, false) => {
            let s = 4.0 * sigma;
            let w = u / (1.0 - u);
            let wp = w.powf(p_lo);
            let x = lo + s * wp;
            let dw = 1.0 / ((1.0 - u) * (1.0 - u));
            (x, s * p_lo * w.powf(p_lo - 1.0) * dw)
        }
        (false, true) => {
            let s = 4.0 * sigma;
            let w = (1.0 - u) / u;
            let wp = w.powf(p_hi);
            let x = hi - s * wp;
            let dw = 1.0 / (u * u);
            (x, s * p_hi * w.powf(p_hi - 1.0) * dw)
        }
        (false, false) => {
            let s = 2.0 * sigma;
            let t = (std::f64::consts::PI * (u - 0.5)).tan();
            (s * t, s * std::f64::consts::PI * (1.0 + t * t))
        }
    }
}

// inverse of map_u
fn unmap_x(fitted: &Fitted, sigma: f64, x: f64) -> f64 {
    let (lo, hi) = fitted.support();
    let (p_lo, p_hi) = edge_powers(fitted);
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            if p_lo == 1.0 && p_hi == 1.0 {
                (x - lo) / (hi - lo)
            } else {
                // invert the monotone double-power map by bisection
                let target = x;
                let (mut ulo, mut uhi) = (0.0f64, 1.0f64);
                for _ in 0..80 {
                    let mid = 0.5 * (ulo + uhi);
                    if map_u(fitted, sigma, mid).0 < target {
                        ulo = mid;
                    } else {
                        uhi = mid;
                    }
                }
                0.5 * (ulo + uhi)
            }
        }
        (true, false) => {
            let s = 4.0 * sigma;
            let w = ((x - lo) / s).max(0.0).powf(1.0 / p_lo);
            w / (1.0 + w)
        }
        (false, true) => {
            let s = 4.0 * sigma;
            let w = ((hi - x) / s).max(0.0).powf(1.0 / p_hi);
            1.0 / (1.0 + w)
        }
        (false, false) => {
            let s = 2.0 * sigma;
            (x / s).atan() / std::f64::consts::PI + 0.5
        }
    }
}

struct PearsonCdf {
    fitted: Fitted,
    sigma: f64,
    shift: f64,
    norm: f64,
    spec: QuadratureSpec,
}

impl PearsonCdf {
    fn build(m: &PearsonMoments) -> Result<Self> {
        let fitted = fit(m)?;
        let sigma = m.variance.sqrt();
        // stabilising shift: log-density at a point near the bulk of mass
        // (the mean, or the circle center for the unbounded-support type)
        let (lo, hi) = fitted.support();
        let mode = match &fitted {
            Fitted::Gamma { c1, .. } => -c1,
            Fitted::Quartic { lam, .. } => *lam,
            _ => 0.0,
        };
        let interior = mode.clamp(
            if lo.is_finite() { lo + 0.05 * sigma } else { mode - 1.0 },
            if hi.is_finite() { hi - 0.05 * sigma } else { mode + 1.0 },
        );
        let shift = fitted.ln_density(interior);
        let spec = QuadratureSpec {
            abs_tol: 1e-13,
            rel_tol: 1e-10,
            max_subdivisions: 800,
        };
        let mut cdf = Self {
            fitted,
            sigma,
            shift,
            norm: 1.0,
            spec,
        };
        let z = cdf.mass_below_u(1.0)?;
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::NonConvergence {
                context: "Pearson density normalisation",
                err: f64::NAN,
            });
        }
        cdf.norm = z;
        Ok(cdf)
    }

    fn mass_below_u(&self, u_hi: f64) -> Result<f64> {
        if u_hi <= 0.0 {
            return Ok(0.0);
        }
        integrate(
            |u| {
                let (x, jac) = map_u(&self.fitted, self.sigma, u);
                ((self.fitted.ln_density(x) - self.shift).exp()) * jac
            },
            0.0,
            u_hi.min(1.0),
            &self.spec,
        )
    }

    fn cdf_at(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.fitted.support();
        if x <= lo {
            return Ok(0.0);
        }
        if x >= hi {
            return Ok(1.0);
        }
        let u = unmap_x(&self.fitted, self.sigma, x).clamp(0.0, 1.0);
        Ok((self.mass_below_u(u)? / self.norm).clamp(0.0, 1.0))
    }

    fn quantile(&self, q: f64) -> Result<f64> {
        let target = q * self.norm;
        let mut lo_u = 0.0;
        let mut hi_u = 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo_u + hi_u);
            if self.mass_below_u(mid)? < target {
                lo_u = mid;
            } else {
                hi_u = mid;
            }
            let (x_lo, _) = map_u(&self.fitted, self.sigma, lo_u.max(1e-300));
            let (x_hi, _) = map_u(&self.fitted, self.sigma, hi_u.min(1.0 - 1e-16));
            if (x_hi - x_lo).abs() < 1e-9 * x_hi.abs().max(1.0) {
                break;
            }
        }
        let u = 0.5 * (lo_u + hi_u);
        Ok(map_u(&self.fitted, self.sigma, u).0)
    }
}

/// q-quantile of the Pearson distribution fitted to `moments`.
pub fn pearson_quantile_from_moments(moments: &PearsonMoments, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile level {q} outside (0,1)")));
    }
    let cdf = PearsonCdf::build(moments)?;
    Ok(moments.mean + cdf.quantile(q)?)
}

/// Upper-tail probability of the fitted Pearson distribution at `x`.
pub fn pearson_upper_tail(moments: &PearsonMoments, x: f64) -> Result<f64> {
    let cdf = PearsonCdf::build(moments)?;
    Ok(1.0 - cdf.cdf_at(x - moments.mean)?)
}
