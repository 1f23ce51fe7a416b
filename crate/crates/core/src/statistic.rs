//! The test statistic T_{n,a} and its quadrature oracle.
//!
//! `statistic` evaluates the closed pairwise double-sum form; for a = 0 the
//! cubic/min form applies. `statistic_g_oracle` integrates the equivalent
//! integrated-empirical-process definition numerically and serves as an
//! independent consistency check of the closed form.

use crate::special::{integrate, QuadratureSpec};
use crate::{Error, Result};

/// Weight-decay tuning parameter a >= 0 of the L² weight exp(-a y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningParam {
    a: f64,
}

impl TuningParam {
    pub fn new(a: f64) -> Result<Self> {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tuning parameter must be finite and >= 0, got {a}"
            )));
        }
        Ok(Self { a })
    }

    pub fn value(&self) -> f64 {
        self.a
    }
}

/// Validated sample of strictly positive observations with cached mean.
#[derive(Debug, Clone)]
pub struct Sample {
    values: Vec<f64>,
    mean: f64,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSample("sample is empty".into()));
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidSample(format!(
                    "observation {} is not finite: {v}",
                    i + 1
                )));
            }
            if v <= 0.0 {
                return Err(Error::InvalidSample(format!(
                    "observation {} is not strictly positive: {v}",
                    i + 1
                )));
            }
        }
        // sum in sorted order so the cached mean (and everything downstream)
        // is exactly invariant under permutations of the input
        let mut sorted = values.clone();
        sorted.sort_by(|p, q| p.total_cmp(q));
        let mean = sorted.iter().sum::<f64>() / values.len() as f64;
        Ok(Self { values, mean })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Scaled data Y_j = X_j / mean; the statistic depends on the sample only
    /// through these.
    pub fn scaled(&self) -> ScaledSample {
        let y = self.values.iter().map(|&v| v / self.mean).collect();
        ScaledSample { y }
    }
}

/// Sample divided by its mean: strictly positive entries summing to n.
#[derive(Debug, Clone)]
pub struct ScaledSample {
    y: Vec<f64>,
}

impl ScaledSample {
    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

// below this the a > 0 closed form loses digits to the 1/a^3 amplification,
// so each pairwise summand switches to its Taylor expansion around a = 0
const SMALL_A: f64 = 1e-3;

// pair term for sorted arguments lo <= hi
#[inline]
fn pair_term_direct(lo: f64, hi: f64, a: f64) -> f64 {
    let d = hi - lo;
    let e = (-a * lo).exp();
    (d - 1.0) * e / a + (d - 2.0) * e / (a * a) - 2.0 * (-a * lo).exp_m1() / (a * a * a)
}

// orders a^0..a^4 of the pairwise summand; the 1/a^2 and 1/a coefficients of
// the expansion cancel exactly over the full double sum (they are multiples
// of sum(Y_j) - n and of min*max - Y_j*Y_k) and are dropped analytically
#[inline]
fn pair_term_taylor(lo: f64, hi: f64, a: f64) -> f64 {
    let w = lo;
    let u = hi - lo - 1.0;
    let v = hi - lo - 2.0;
    let w2 = w * w;
    let w3 = w2 * w;
    let w4 = w3 * w;
    let w5 = w4 * w;
    let c0 = -u * w + v * w2 / 2.0 + w3 / 3.0;
    let c1 = u * w2 / 2.0 - v * w3 / 6.0 - w4 / 12.0;
    let c2 = -u * w3 / 6.0 + v * w4 / 24.0 + w5 / 60.0;
    let c3 = u * w4 / 24.0 - v * w5 / 120.0 - w5 * w / 360.0;
    let c4 = -u * w5 / 120.0 + v * w5 * w / 720.0 + w5 * w2 / 2520.0;
    c0 + a * (c1 + a * (c2 + a * (c3 + a * c4)))
}

#[inline]
fn pair_term_zero(lo: f64, hi: f64) -> f64 {
    lo * lo * lo / 3.0 - 0.5 * (lo + hi - 2.0) * lo * lo + (lo - 1.0) * (hi - 1.0) * lo
}

#[inline]
fn pair_term(lo: f64, hi: f64, a: f64) -> f64 {
    if a == 0.0 {
        pair_term_zero(lo, hi)
    } else if a < SMALL_A {
        pair_term_taylor(lo, hi, a)
    } else {
        pair_term_direct(lo, hi, a)
    }
}

/// Test statistic T_{n,a} from the closed pairwise form.
///
/// Scale and permutation invariant. The scaled data are sorted first, so the
/// summation order (j <= k row by row, off-diagonal terms doubled) does not
/// depend on the input ordering and results are reproducible bit for bit.
pub fn statistic(sample: &Sample, a: TuningParam) -> f64 {
    let scaled = sample.scaled();
    statistic_scaled(&scaled, a)
}

/// Same as [`statistic`] but starting from already scaled data.
pub fn statistic_scaled(scaled: &ScaledSample, a: TuningParam) -> f64 {
    let mut y = scaled.values().to_vec();
    y.sort_by(|p, q| p.total_cmp(q));
    let n = y.len();
    let a = a.value();
    let mut total = 0.0;
    for j in 0..n {
        let yj = y[j];
        let mut row = pair_term(yj, yj, a);
        let mut off = 0.0;
        for &yk in y.iter().skip(j + 1) {
            off += pair_term(yj, yk, a);
        }
        row += 2.0 * off;
        total += row;
    }
    total / n as f64
}

/// Quadrature oracle: evaluates the integrated-empirical-process definition
///
/// G_{n,a} = n ∫ [ mean_j min(Y_j, z) - mean_j 1{Y_j <= z} ]² exp(-a z) dz
///
/// piecewise between the order statistics (the integrand vanishes beyond the
/// largest one). Identical to T_{n,a} in exact arithmetic; used as an
/// independent numerical cross-check.
pub fn statistic_g_oracle(sample: &Sample, a: TuningParam) -> Result<f64> {
    let scaled = sample.scaled();
    let mut y = scaled.values().to_vec();
    y.sort_by(|p, q| p.total_cmp(q));
    let n = y.len();
    let nf = n as f64;
    let a = a.value();
    let spec = QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_subdivisions: 400,
    };

    let mut total = 0.0;
    let mut prefix = 0.0; // sum of the i smallest scaled values
    for i in 0..n {
        let lo = if i == 0 { 0.0 } else { y[i - 1] };
        let hi = y[i];
        if hi <= lo {
            prefix += y[i];
            continue;
        }
        let below = i as f64;
        let fixed = prefix;
        let seg = integrate(
            |z| {
                let min_mean = (fixed + (nf - below) * z) / nf;
                let cdf = below / nf;
                let g = min_mean - cdf;
                g * g * (-a * z).exp()
            },
            lo,
            hi,
            &spec,
        )?;
        total += seg;
        prefix += y[i];
    }
    Ok(nf * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(a: f64) -> TuningParam {
        TuningParam::new(a).unwrap()
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![1.0, 0.0]).is_err());
        assert!(Sample::new(vec![1.0, -2.0]).is_err());
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
        assert!(Sample::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn scaling_examples() {
        let s = Sample::new(vec![2.0, 4.0]).unwrap();
        let y = s.scaled();
        assert!((y.values()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((y.values()[1] - 4.0 / 3.0).abs() < 1e-15);

        let s = Sample::new(vec![17.3]).unwrap();
        assert!((s.scaled().values()[0] - 1.0).abs() < 1e-15);

        let s = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        let y = s.scaled();
        assert_eq!(y.values(), &[0.5, 1.0, 1.5]);
        let total: f64 = y.values().iter().sum();
        assert!((total - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_observation_closed_forms() {
        // n = 1: Y_1 = 1, so T_{1,0} = 1/3 and
        // T_{1,a} = (2 - exp(-a)(a^2 + 2a + 2)) / a^3
        for &c in &[0.3, 1.0, 57.0] {
            let s = Sample::new(vec![c]).unwrap();
            assert!((statistic(&s, tp(0.0)) - 1.0 / 3.0).abs() < 1e-14);
            let t1 = statistic(&s, tp(1.0));
            let expected = 2.0 - 5.0 / std::f64::consts::E;
            assert!((t1 - expected).abs() < 1e-12, "{t1} vs {expected}");
            assert!((t1 - 0.160_603).abs() < 1e-6);
            for &a in &[0.25, 2.0, 5.0] {
                let t = statistic(&s, tp(a));
                let exact = (2.0 - f64::exp(-a) * (a * a + 2.0 * a + 2.0)) / (a * a * a);
                assert!((t - exact).abs() < 1e-12, "a={a}: {t} vs {exact}");
            }
        }
    }

    #[test]
    fn g_oracle_matches_single_point() {
        let s = Sample::new(vec![4.2]).unwrap();
        let g = statistic_g_oracle(&s, tp(0.0)).unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-10, "{g}");
    }

    #[test]
    fn g_oracle_matches_closed_form_small_sample() {
        let s = Sample::new(vec![0.5, 1.0, 1.5]).unwrap();
        for &a in &[0.0, 0.5, 1.0, 2.0, 5.0] {
            let t = statistic(&s, tp(a));
            let g = statistic_g_oracle(&s, tp(a)).unwrap();
            assert!((t - g).abs() < 1e-8, "a={a}: T={t} G={g}");
        }
    }

    #[test]
    fn taylor_branch_is_continuous_at_zero() {
        let s = Sample::new(vec![0.23, 0.9, 1.7, 2.1, 0.4, 1.2]).unwrap();
        let t0 = statistic(&s, tp(0.0));
        let t_small = statistic(&s, tp(1e-4));
        assert!((t_small - t0).abs() < 1e-3, "{t_small} vs {t0}");
        // both branches track the quadrature oracle at their side of the cut
        for &a in &[SMALL_A * 0.9, SMALL_A * 1.1] {
            let t = statistic(&s, tp(a));
            let g = statistic_g_oracle(&s, tp(a)).unwrap();
            assert!((t - g).abs() < 5e-9, "a={a}: {t} vs {g}");
        }
    }

    #[test]
    fn permutation_invariance_is_exact() {
        let s1 = Sample::new(vec![0.3, 1.4, 2.2, 0.8]).unwrap();
        let s2 = Sample::new(vec![2.2, 0.3, 0.8, 1.4]).unwrap();
        for &a in &[0.0, 1.0, 3.7] {
            // sorting canonicalizes the summation order, so this is bit-exact
            let t1 = statistic(&s1, tp(a));
            let t2 = statistic(&s2, tp(a));
            assert_eq!(t1, t2, "a={a}");
        }
    }

    #[test]
    fn scale_invariance() {
        let base = vec![0.7, 1.3, 0.2, 2.9, 1.1];
        let s = Sample::new(base.clone()).unwrap();
        for &c in &[1e-3, 1.0, 1e3] {
            let scaled: Vec<f64> = base.iter().map(|v| v * c).collect();
            let sc = Sample::new(scaled).unwrap();
            for &a in &[0.0, 0.5, 1.0, 2.0] {
                let t1 = statistic(&s, tp(a));
                let t2 = statistic(&sc, tp(a));
                assert!(
                    ((t1 - t2) / t1).abs() < 1e-10,
                    "c={c} a={a}: {t1} vs {t2}"
                );
            }
        }
    }

    #[test]
    fn tuning_param_validation() {
        assert!(TuningParam::new(-0.1).is_err());
        assert!(TuningParam::new(f64::NAN).is_err());
        assert!(TuningParam::new(0.0).is_ok());
    }
}
