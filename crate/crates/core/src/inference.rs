//! Plug-in inference under fixed alternatives: the variance estimator
//! σ̂²_{n,a} built from the υ integrals, the standardized statistic, the
//! asymptotic confidence interval for Δ_a, and neighbourhood-of-model
//! validation.

use crate::special::normal_quantile;
use crate::statistic::{statistic_scaled, Sample, TuningParam};
use crate::{Error, Result};

/// Closed form of the weighted partial-moment integrals, ℓ = 1, 2, 3:
///
///   υ_{1,a}(x,y) = ∫ (y-t-1) 1{x∧y > t} exp(-a t) dt
///   υ_{2,a}(x,y) = ∫ t (y-t-1) 1{x∧y > t} exp(-a t) dt
///   υ_{3,a}(x,y) = ∫ (y-t-1)(x-t-1) 1{x∧y > t} exp(-a t) dt
///
/// with the polynomial a = 0 limits. The first argument enters υ₁ and υ₂
/// only through the integration range x∧y.
// below this the 1/a³ closed forms lose too many digits; the power series in
// a (entire, alternating, a·m small here) is exact to machine precision and
// collapses to the polynomial limits at a = 0
const UPSILON_SERIES_CUTOFF: f64 = 0.01;

pub fn upsilon(ell: u8, a: TuningParam, x: f64, y: f64) -> f64 {
    assert!((1..=3).contains(&ell), "upsilon index must be 1, 2 or 3");
    let m = x.min(y);
    let a = a.value();
    if a < UPSILON_SERIES_CUTOFF {
        // expand exp(-a t) and integrate term by term:
        // r-th coefficient uses the plain moments M_k = m^k / k
        let p = (y - 1.0) * (x - 1.0);
        let s = x + y - 2.0;
        let mut coef = 1.0; // (-a)^r / r!
        let mut m_pow = m; // m^(r+1)
        let mut acc = 0.0;
        for r in 0..40u32 {
            let rf = r as f64;
            let m1 = m_pow / (rf + 1.0);
            let m2 = m_pow * m / (rf + 2.0);
            let m3 = m_pow * m * m / (rf + 3.0);
            let term = match ell {
                1 => (y - 1.0) * m1 - m2,
                2 => (y - 1.0) * m2 - m3,
                _ => m3 - s * m2 + p * m1,
            } * coef;
            acc += term;
            if r >= 2 && term.abs() <= acc.abs() * 1e-17 + 1e-300 {
                break;
            }
            coef *= -a / (rf + 1.0);
            m_pow *= m;
        }
        acc
    } else {
        let e = (-a * m).exp();
        match ell {
            1 => ((a * m + 1.0 + (1.0 - y) * a) * e - 1.0 + (y - 1.0) * a) / (a * a),
            2 => {
                ((m * m * a * a + ((1.0 - y) * a * a + 2.0 * a) * m + 2.0 + (1.0 - y) * a) * e
                    - 2.0
                    + (y - 1.0) * a)
                    / (a * a * a)
            }
            _ => {
                let p = (y - 1.0) * (x - 1.0);
                let s = x + y - 2.0;
                ((-a * a * m * m + a * (-2.0 + s * a) * m - 2.0 - p * a * a + s * a) * e
                    + 2.0
                    + p * a * a
                    - s * a)
                    / (a * a * a)
            }
        }
    }
}

/// Components of the plug-in variance estimator.
#[derive(Debug, Clone, Copy)]
pub struct VarianceEstimate {
    /// σ̂²_{n,a} = 4 [S₁ + S₂ - S₃ - 2 S₄ S₅ + τ̂² S₅² - S₆²]
    pub sigma2_hat: f64,
    /// S₁..S₆ in order.
    pub s: [f64; 6],
    /// τ̂² = mean of (Y_j - 1)².
    pub tau2_hat: f64,
}

/// Plug-in variance estimator from the scaled data.
///
/// The triple sums S₁..S₃ factor over the repeated index, so everything is
/// assembled in O(n²); the literal O(n³) definitions live in [`reference`]
/// as test oracles. Scaled values are sorted first, making the result
/// invariant under permutations of the input.
pub fn variance_estimate(sample: &Sample, a: TuningParam) -> Result<VarianceEstimate> {
    let n = sample.n();
    if n < 2 {
        return Err(Error::InvalidSample(
            "variance estimation needs at least two observations".into(),
        ));
    }
    let mut y = sample.scaled().values().to_vec();
    y.sort_by(|p, q| p.total_cmp(q));
    Ok(variance_from_scaled(&y, a))
}

fn variance_from_scaled(y: &[f64], a: TuningParam) -> VarianceEstimate {
    let n = y.len();
    let nf = n as f64;
    let mut u1 = vec![0.0f64; n];
    let mut u2 = vec![0.0f64; n];
    let mut s6 = 0.0f64;

    // ordered pairs share exp(-a min) across both orientations
    for j in 0..n {
        let yj = y[j];
        // diagonal
        u1[j] += upsilon(1, a, yj, yj);
        u2[j] += upsilon(2, a, yj, yj);
        s6 += upsilon(3, a, yj, yj);
        for k in (j + 1)..n {
            let yk = y[k];
            u1[j] += upsilon(1, a, yj, yk);
            u1[k] += upsilon(1, a, yk, yj);
            u2[j] += upsilon(2, a, yj, yk);
            u2[k] += upsilon(2, a, yk, yj);
            s6 += 2.0 * upsilon(3, a, yj, yk);
        }
    }

    let (mut s1, mut s2, mut s3, mut s4, mut s5, mut tau2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 0..n {
        let d = y[j] - 1.0;
        s1 += d * d * u1[j] * u1[j];
        s2 += u2[j] * u2[j];
        s3 += d * u2[j] * u1[j];
        s4 += d * d * u1[j] - d * u2[j];
        s5 += u1[j];
        tau2 += d * d;
    }
    let n2 = nf * nf;
    let n3 = n2 * nf;
    let s = [
        s1 / n3,
        s2 / n3,
        2.0 * s3 / n3,
        s4 / n2,
        s5 / n2,
        s6 / n2,
    ];
    let tau2 = tau2 / nf;
    let sigma2_hat =
        4.0 * (s[0] + s[1] - s[2] - 2.0 * s[3] * s[4] + tau2 * s[4] * s[4] - s[5] * s[5]);
    VarianceEstimate {
        sigma2_hat,
        s,
        tau2_hat: tau2,
    }
}

/// σ̂² below this is treated as degenerate: under the null the limiting
/// variance is zero and the normal approximation is vacuous.
pub const DEGENERATE_VARIANCE_FLOOR: f64 = 1e-12;

/// Standardized statistic sqrt(n) (T_{n,a}/n - delta_ref) / σ̂_{n,a}.
pub fn standardized_statistic(sample: &Sample, a: TuningParam, delta_ref: f64) -> Result<f64> {
    let est = variance_estimate(sample, a)?;
    if !(est.sigma2_hat > DEGENERATE_VARIANCE_FLOOR) {
        return Err(Error::DegenerateVariance(est.sigma2_hat));
    }
    let n = sample.n() as f64;
    let t = statistic_scaled(&sample.scaled(), a);
    Ok(n.sqrt() * (t / n - delta_ref) / est.sigma2_hat.sqrt())
}

/// Two-sided asymptotic confidence interval for Δ_a.
#[derive(Debug, Clone, Copy)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Confidence level 1 - α.
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Asymptotic level-(1-α) confidence interval
/// [T/n - u σ̂/√n, T/n + u σ̂/√n] with u = Φ⁻¹(1 - α/2).
pub fn confidence_interval(
    sample: &Sample,
    a: TuningParam,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0,1)")));
    }
    let est = variance_estimate(sample, a)?;
    if !(est.sigma2_hat > DEGENERATE_VARIANCE_FLOOR) {
        return Err(Error::DegenerateVariance(est.sigma2_hat));
    }
    let n = sample.n() as f64;
    let t_over_n = statistic_scaled(&sample.scaled(), a) / n;
    let u = normal_quantile(1.0 - alpha / 2.0)?;
    let margin = u * est.sigma2_hat.sqrt() / n.sqrt();
    Ok(ConfidenceInterval {
        lower: t_over_n - margin,
        upper: t_over_n + margin,
        level: 1.0 - alpha,
    })
}

/// Outcome of the neighbourhood-of-model validation test of
/// H: Δ_a >= Δ̃ against K: Δ_a < Δ̃.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighbourhoodDecision {
    /// The hypothesis Δ_a >= Δ̃ is rejected: the data validate the model
    /// neighbourhood of radius Δ̃.
    Reject,
    /// Not enough evidence that the model lies within the Δ̃-neighbourhood.
    Retain,
}

/// Level-α test rejecting H: Δ_a >= Δ̃ whenever
/// T_{n,a} <= n Δ̃ - sqrt(n) σ̂_{n,a} Φ⁻¹(1-α).
pub fn neighbourhood_test(
    sample: &Sample,
    a: TuningParam,
    delta_tilde: f64,
    alpha: f64,
) -> Result<NeighbourhoodDecision> {
    if !(delta_tilde > 0.0) {
        return Err(Error::Domain(format!(
            "neighbourhood radius must be positive, got {delta_tilde}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0,1)")));
    }
    let est = variance_estimate(sample, a)?;
    if !(est.sigma2_hat > DEGENERATE_VARIANCE_FLOOR) {
        return Err(Error::DegenerateVariance(est.sigma2_hat));
    }
    let n = sample.n() as f64;
    let t = statistic_scaled(&sample.scaled(), a);
    let u = normal_quantile(1.0 - alpha)?;
    let threshold = n * delta_tilde - n.sqrt() * est.sigma2_hat.sqrt() * u;
    Ok(if t <= threshold {
        NeighbourhoodDecision::Reject
    } else {
        NeighbourhoodDecision::Retain
    })
}

/// Literal nested-loop evaluations of the estimator components, kept as slow
/// oracles for tests.
pub mod reference {
    use super::upsilon;
    use crate::statistic::TuningParam;

    /// S₁..S₆ by the displayed triple/double sums, no factoring.
    pub fn s_components(y: &[f64], a: TuningParam) -> [f64; 6] {
        let n = y.len();
        let nf = n as f64;
        let (mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64);
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let d = y[j] - 1.0;
                    s1 += d * d * upsilon(1, a, y[j], y[k]) * upsilon(1, a, y[j], y[l]);
                    s2 += upsilon(2, a, y[j], y[k]) * upsilon(2, a, y[j], y[l]);
                    s3 += d * upsilon(2, a, y[j], y[k]) * upsilon(1, a, y[j], y[l]);
                }
            }
        }
        let (mut s4, mut s5, mut s6) = (0.0f64, 0.0f64, 0.0f64);
        for j in 0..n {
            for k in 0..n {
                let d = y[j] - 1.0;
                s4 += d * d * upsilon(1, a, y[j], y[k]) - d * upsilon(2, a, y[j], y[k]);
                s5 += upsilon(1, a, y[j], y[k]);
                s6 += upsilon(3, a, y[j], y[k]);
            }
        }
        let n2 = nf * nf;
        let n3 = n2 * nf;
        [
            s1 / n3,
            s2 / n3,
            2.0 * s3 / n3,
            s4 / n2,
            s5 / n2,
            s6 / n2,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alternatives::{sample as alt_sample, AlternativeModel};
    use crate::special::{integrate, QuadratureSpec};

    fn tp(a: f64) -> TuningParam {
        TuningParam::new(a).unwrap()
    }

    // quadrature oracle for the defining integral of upsilon
    fn upsilon_oracle(ell: u8, a: f64, x: f64, y: f64) -> f64 {
        let m = x.min(y);
        let spec = QuadratureSpec {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_subdivisions: 400,
        };
        integrate(
            |t| {
                let base = match ell {
                    1 => y - t - 1.0,
                    2 => t * (y - t - 1.0),
                    3 => (y - t - 1.0) * (x - t - 1.0),
                    _ => unreachable!(),
                };
                base * (-a * t).exp()
            },
            0.0,
            m,
            &spec,
        )
        .unwrap()
    }

    #[test]
    fn upsilon_printed_example() {
        // υ_{1,0}(2, 1) = -(1)(-2 + 1 + 2)/2 = -1/2
        assert!((upsilon(1, tp(0.0), 2.0, 1.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn upsilon_vanishes_with_empty_range() {
        for ell in 1..=3u8 {
            for &a in &[0.0, 1.0] {
                let v = upsilon(ell, tp(a), 1e-14, 2.3);
                assert!(v.abs() < 1e-12, "ell={ell} a={a}: {v}");
            }
        }
    }

    #[test]
    fn upsilon_matches_quadrature() {
        assert!(
            (upsilon(3, tp(1.0), 1.7, 0.6) - upsilon_oracle(3, 1.0, 1.7, 0.6)).abs() < 1e-9
        );
        let mut rng = crate::rng::Rng::from_seed(0xABCDEF);
        for _ in 0..200 {
            let ell = 1 + (rng.next_u64() % 3) as u8;
            let a = 5.0 * rng.uniform();
            let x = 0.05 + 3.0 * rng.uniform();
            let y = 0.05 + 3.0 * rng.uniform();
            let c = upsilon(ell, tp(a), x, y);
            let o = upsilon_oracle(ell, a, x, y);
            assert!(
                (c - o).abs() < 1e-8,
                "ell={ell} a={a} x={x} y={y}: {c} vs {o}"
            );
        }
    }

    #[test]
    fn upsilon_continuous_at_a_zero() {
        let mut y = 0.2;
        while y < 3.0 {
            let mut x = 0.2;
            while x < 3.0 {
                for ell in 1..=3u8 {
                    let small = upsilon(ell, tp(1e-5), x, y);
                    let zero = upsilon(ell, tp(0.0), x, y);
                    assert!(
                        (small - zero).abs() < 1e-3,
                        "ell={ell} x={x} y={y}: {small} vs {zero}"
                    );
                }
                x += 0.4;
            }
            y += 0.4;
        }
    }

    #[test]
    fn fast_path_equals_brute_force() {
        let y = [0.5f64, 1.0, 1.5];
        for &a in &[0.0, 1.0] {
            let fast = variance_from_scaled(&y, tp(a));
            let slow = reference::s_components(&y, tp(a));
            for (i, (f, sl)) in fast.s.iter().zip(&slow).enumerate() {
                assert!((f - sl).abs() < 1e-12, "a={a} S{}: {f} vs {sl}", i + 1);
            }
        }
        // a larger scrambled sample
        let sample = Sample::new(vec![0.31, 2.2, 0.87, 1.4, 0.66, 1.9, 0.55, 1.02]).unwrap();
        let mut ysc = sample.scaled().values().to_vec();
        ysc.sort_by(|p, q| p.total_cmp(q));
        for &a in &[0.0, 0.7, 2.5] {
            let fast = variance_from_scaled(&ysc, tp(a));
            let slow = reference::s_components(&ysc, tp(a));
            for (i, (f, sl)) in fast.s.iter().zip(&slow).enumerate() {
                assert!((f - sl).abs() < 1e-12, "a={a} S{}: {f} vs {sl}", i + 1);
            }
        }
    }

    #[test]
    fn s6_equals_statistic_over_n() {
        // ∫ z_n²(t) exp(-a t) dt is both S₆ and T_{n,a}/n
        let sample = Sample::new(vec![0.4, 1.3, 0.9, 2.0, 1.6, 0.3]).unwrap();
        for &a in &[0.0, 0.5, 1.0, 2.0] {
            let est = variance_estimate(&sample, tp(a)).unwrap();
            let t = statistic_scaled(&sample.scaled(), tp(a));
            let n = sample.n() as f64;
            assert!(
                (est.s[5] - t / n).abs() < 1e-12,
                "a={a}: S6 {} vs T/n {}",
                est.s[5],
                t / n
            );
        }
    }

    #[test]
    fn scale_invariance_of_estimator() {
        let base = vec![0.7, 1.3, 0.2, 2.9, 1.1, 0.55];
        let s1 = Sample::new(base.clone()).unwrap();
        let s2 = Sample::new(base.iter().map(|v| v * 273.0).collect()).unwrap();
        for &a in &[0.0, 1.0, 3.0] {
            let v1 = variance_estimate(&s1, tp(a)).unwrap();
            let v2 = variance_estimate(&s2, tp(a)).unwrap();
            assert!(
                (v1.sigma2_hat - v2.sigma2_hat).abs() < 1e-10,
                "a={a}: {} vs {}",
                v1.sigma2_hat,
                v2.sigma2_hat
            );
        }
    }

    #[test]
    fn estimator_small_under_null_large_under_alternative() {
        let exp_data = alt_sample(&AlternativeModel::Exponential, 1000, 7).unwrap();
        let v = variance_estimate(&exp_data, tp(1.0)).unwrap();
        assert!(v.sigma2_hat <= 0.005, "H0 sigma2_hat = {}", v.sigma2_hat);

        let g33 = alt_sample(&AlternativeModel::GammaBetaBeta { beta: 3.0 }, 1000, 8).unwrap();
        let v = variance_estimate(&g33, tp(0.0)).unwrap();
        assert!(
            (v.sigma2_hat - 0.0313).abs() < 0.01,
            "G33 sigma2_hat = {}",
            v.sigma2_hat
        );
    }

    #[test]
    fn standardized_statistic_centering() {
        let g22 = alt_sample(&AlternativeModel::GammaBetaBeta { beta: 2.0 }, 500, 3).unwrap();
        let a = tp(1.0);
        let n = g22.n() as f64;
        let t_over_n = statistic_scaled(&g22.scaled(), a) / n;
        let z = standardized_statistic(&g22, a, t_over_n).unwrap();
        assert_eq!(z, 0.0);
        let z2 = standardized_statistic(&g22, a, 0.016).unwrap();
        assert!(z2.abs() < 6.0, "{z2}");
    }

    #[test]
    fn degenerate_variance_is_flagged() {
        // constant-ish sample: scaled values all 1, z_n ≡ 0 on the grid
        let s = Sample::new(vec![2.0, 2.0, 2.0, 2.0]).unwrap();
        let r = standardized_statistic(&s, tp(1.0), 0.0);
        assert!(matches!(r, Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn confidence_interval_width_scales_as_root_n() {
        let big = alt_sample(&AlternativeModel::GammaBetaBeta { beta: 2.0 }, 400, 42).unwrap();
        let small = Sample::new(big.values()[..100].to_vec()).unwrap();
        let w400 = confidence_interval(&big, tp(0.0), 0.1).unwrap().width();
        let w100 = confidence_interval(&small, tp(0.0), 0.1).unwrap().width();
        let ratio = w400 / w100;
        assert!((ratio - 0.5).abs() < 0.2 * 0.5, "ratio {ratio}");
    }

    #[test]
    fn neighbourhood_validation_examples() {
        let exp_data = alt_sample(&AlternativeModel::Exponential, 1000, 5).unwrap();
        let d = neighbourhood_test(&exp_data, tp(1.0), 0.05, 0.05).unwrap();
        assert_eq!(d, NeighbourhoodDecision::Reject);

        // huge tolerated distance: always rejects
        let g = alt_sample(&AlternativeModel::GammaBetaBeta { beta: 2.0 }, 200, 6).unwrap();
        let d = neighbourhood_test(&g, tp(1.0), 10.0, 0.05).unwrap();
        assert_eq!(d, NeighbourhoodDecision::Reject);

        // tiny tolerated distance under a clear alternative: retained
        let d = neighbourhood_test(&g, tp(1.0), 1e-6, 0.05).unwrap();
        assert_eq!(d, NeighbourhoodDecision::Retain);
    }
}
