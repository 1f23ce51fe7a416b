//! Local approximate Bahadur slopes and efficiencies.
//!
//! For a family g(·;θ) with g(·;0) = Exp(1), the limit in probability of
//! T_{n,a}/n under θ is b(θ) = ∬ h_a(x,y;θ) g(x;θ) g(y;θ) dx dy with
//! b(0) = b'(0) = 0. The approximate local Bahadur slope is
//! b''(0) θ² / λ₁(a), and efficiencies compare it to twice the
//! Kullback-Leibler information: eff = b''(0) / (2 λ₁(a) KL).

use crate::alternatives::AlternativeModel;
use crate::null_dist::eigen_spectrum;
use crate::special::GaussGrid;
use crate::statistic::TuningParam;
use crate::{Error, Result};

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// The five local alternative families of the efficiency comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalFamily {
    Weibull,
    Gamma,
    Lfr,
    Emnw3,
    Makeham,
}

impl LocalFamily {
    pub const ALL: [LocalFamily; 5] = [
        LocalFamily::Weibull,
        LocalFamily::Gamma,
        LocalFamily::Lfr,
        LocalFamily::Emnw3,
        LocalFamily::Makeham,
    ];

    /// The parametric model at local parameter θ.
    pub fn model(&self, theta: f64) -> AlternativeModel {
        match self {
            LocalFamily::Weibull => AlternativeModel::Weibull { theta },
            LocalFamily::Gamma => AlternativeModel::GammaTheta { theta },
            LocalFamily::Lfr => AlternativeModel::Lfr { theta },
            LocalFamily::Emnw3 => AlternativeModel::Emnw { beta: 3.0, theta },
            LocalFamily::Makeham => AlternativeModel::Makeham { theta },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            LocalFamily::Weibull => "weibull",
            LocalFamily::Gamma => "gamma",
            LocalFamily::Lfr => "lfr",
            LocalFamily::Emnw3 => "emnw3",
            LocalFamily::Makeham => "makeham",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weibull" => Ok(LocalFamily::Weibull),
            "gamma" | "gamma_theta" => Ok(LocalFamily::Gamma),
            "lfr" => Ok(LocalFamily::Lfr),
            "emnw" | "emnw3" | "emnw(3)" => Ok(LocalFamily::Emnw3),
            "makeham" => Ok(LocalFamily::Makeham),
            other => Err(Error::InvalidParameter(format!(
                "unknown local family '{other}' (expected weibull, gamma, lfr, emnw3 or makeham)"
            ))),
        }
    }
}

/// Kernel h_a(x,y;θ) of the limit-in-probability representation, with the
/// family mean μ(θ) plugged in:
///
///   a³ h_a = 2 - ((1 - |x-y|/μ)(a² + a) + a + 2) exp(-a (x∧y)/μ),  a > 0,
///
/// and the cubic/min polynomial form at a = 0. The two branches are separate
/// displays: h_a itself has no pointwise a → 0 limit, only its expectation
/// does.
pub fn h_kernel(a: TuningParam, x: f64, y: f64, mu: f64) -> f64 {
    debug_assert!(mu > 0.0);
    let av = a.value();
    if av == 0.0 {
        let xm = x / mu;
        let ym = y / mu;
        let m = xm.min(ym);
        m * (xm - 1.0) * (ym - 1.0) + m * m * (1.0 - 0.5 * (xm + ym)) + m * m * m / 3.0
    } else {
        let m = x.min(y) / mu;
        let d = (x - y).abs() / mu;
        (2.0 - ((1.0 - d) * (av * av + av) + av + 2.0) * (-av * m).exp()) / (av * av * av)
    }
}

// shared tensor grids for the two-dimensional alternative integrals; the
// origin-refined layout keeps x^θ and log-type density singularities at zero
// from polluting the tiny b(θ) values near θ = 0
fn triangle_grids() -> (GaussGrid, GaussGrid) {
    (
        GaussGrid::semi_infinite_geometric(2.0, 12),
        GaussGrid::semi_infinite_geometric(1.0, 12),
    )
}

/// Limit in probability b(θ) of T_{n,a}/n under the family member at θ,
/// evaluated by two-dimensional quadrature of h_a g g over the triangle
/// x <= y (the integrand is symmetric and smooth there).
pub fn b_of_theta(family: LocalFamily, a: TuningParam, theta: f64) -> Result<f64> {
    let model = family.model(theta);
    model.validate()?;
    let mu = model.mean()?;
    let (gu, gv) = triangle_grids();
    let gu_dens: Vec<f64> = gu.nodes.iter().map(|&u| model.density(u)).collect();
    let mut total = 0.0;
    for ((&u, &wu), &du) in gu.nodes.iter().zip(&gu.weights).zip(&gu_dens) {
        if du == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for j in 0..gv.len() {
            let y = u + gv.nodes[j];
            inner += gv.weights[j] * h_kernel(a, u, y, mu) * model.density(y);
        }
        total += wu * du * inner;
    }
    // triangle doubled; the diagonal has measure zero
    Ok(2.0 * total)
}

/// Curvature b''(0) by Richardson extrapolation of 2 b(θ)/θ² over the step
/// ladder θ ∈ {0.02, 0.01, 0.005}, using b(0) = b'(0) = 0.
///
/// The raw ratios carry an O(θ) error from the cubic term of b, so the two
/// step pairs are first extrapolated to first order; those two estimates
/// must agree within 1% (`InconsistentExtrapolation` otherwise) and a second
/// extrapolation removes the remaining O(θ²) error.
pub fn slope_curvature(family: LocalFamily, a: TuningParam) -> Result<f64> {
    let thetas = [0.02, 0.01, 0.005];
    let mut raw = [0.0f64; 3];
    for (i, &th) in thetas.iter().enumerate() {
        raw[i] = 2.0 * b_of_theta(family, a, th)? / (th * th);
    }
    let r1 = 2.0 * raw[1] - raw[0];
    let r2 = 2.0 * raw[2] - raw[1];
    if ((r2 - r1) / r2).abs() > 0.01 {
        return Err(Error::InconsistentExtrapolation {
            fine: r2,
            coarse: r1,
        });
    }
    Ok((4.0 * r2 - r1) / 3.0)
}

/// Kullback-Leibler information numbers of the five families (the constants
/// used to normalize the efficiency comparison).
pub fn kl_number(family: LocalFamily) -> f64 {
    match family {
        // the printed expression simplifies algebraically to pi^2/6
        LocalFamily::Weibull => {
            let g = EULER_GAMMA;
            1.0 - 2.0 * g + std::f64::consts::PI.powi(2) / 6.0 + g * g - (1.0 - g) * (1.0 - g)
        }
        LocalFamily::Gamma => std::f64::consts::PI.powi(2) / 6.0 - 1.0,
        LocalFamily::Lfr => 1.0,
        LocalFamily::Emnw3 => 16.0 / 45.0,
        LocalFamily::Makeham => 1.0 / 12.0,
    }
}

/// Slope curvature, KL number and approximate local Bahadur efficiency.
#[derive(Debug, Clone, Copy)]
pub struct SlopeResult {
    pub a: f64,
    pub family: LocalFamily,
    /// Curvature b''(0) of the limit in probability.
    pub b2: f64,
    /// Kullback-Leibler information number.
    pub kl: f64,
    /// eff = b''(0) / (2 λ₁(a) KL).
    pub eff: f64,
}

/// Approximate local Bahadur efficiency eff = b''(0) / (2 λ₁(a) KL).
pub fn efficiency(family: LocalFamily, a: TuningParam) -> Result<SlopeResult> {
    let b2 = slope_curvature(family, a)?;
    let kl = kl_number(family);
    let lambda1 = eigen_spectrum(a, 1)?.lambdas[0];
    Ok(SlopeResult {
        a: a.value(),
        family,
        b2,
        kl,
        eff: b2 / (2.0 * lambda1 * kl),
    })
}

/// Independent evaluation of b''(0) for the gamma family through the
/// three-integral second-derivative display, with the θ-derivatives of the
/// density and of h taken by central differences. Kept as a cross-check of
/// the finite-difference curvature path.
pub fn gamma_curvature_by_display(a: TuningParam) -> Result<f64> {
    let family = LocalFamily::Gamma;
    let h = 1e-4;
    let m_plus = family.model(h);
    let m_minus = family.model(-h);
    let m_zero = family.model(0.0);
    let mu_plus = m_plus.mean()?;
    let mu_minus = m_minus.mean()?;
    let mu1 = (mu_plus - mu_minus) / (2.0 * h);

    let g0 = |x: f64| m_zero.density(x);
    let g1 = move |x: f64| (m_plus.density(x) - m_minus.density(x)) / (2.0 * h);
    // dh/dθ and d²h/dθ² at 0 via the mean path μ(θ)
    let h_at = |x: f64, y: f64, mu: f64| h_kernel(a, x, y, mu);
    let h1 = move |x: f64, y: f64| (h_at(x, y, mu_plus) - h_at(x, y, mu_minus)) / (2.0 * h);
    let h2 = move |x: f64, y: f64| {
        (h_at(x, y, mu_plus) - 2.0 * h_at(x, y, 1.0) + h_at(x, y, mu_minus)) / (h * h)
    };

    let (gu, gv) = triangle_grids();
    let mut t1 = 0.0;
    let mut t2 = 0.0;
    let mut t3 = 0.0;
    for i in 0..gu.len() {
        let u = gu.nodes[i];
        let wu = gu.weights[i];
        let mut i1 = 0.0;
        let mut i2 = 0.0;
        let mut i2b = 0.0;
        let mut i3 = 0.0;
        for j in 0..gv.len() {
            let y = u + gv.nodes[j];
            let wv = gv.weights[j];
            i1 += wv * h_at(u, y, 1.0) * g1(y);
            i2 += wv * h1(u, y) * g1(y);
            i2b += wv * h1(u, y) * g0(y);
            i3 += wv * h2(u, y) * g0(y);
        }
        // symmetrised triangle contributions of the three displays
        t1 += 2.0 * wu * g1(u) * i1;
        t2 += wu * (g0(u) * i2 + g1(u) * i2b) * 2.0;
        t3 += 2.0 * wu * g0(u) * i3;
    }
    Ok(2.0 * t1 + 4.0 * mu1 * t2 / 2.0 + mu1 * mu1 * t3)
}
