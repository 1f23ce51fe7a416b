//! Parametric alternative families and their population quantities under a
//! fixed alternative: the contrast function z, the drift Δ_a (the limit in
//! probability of T_{n,a}/n), the limit covariance kernel K, and the
//! asymptotic variance σ²_a.
//!
//! All population quantities operate on the mean-1 rescaling of the family;
//! θ = 0 in the θ-indexed families is the standard exponential.

use crate::inference::upsilon;
use crate::rng::Rng;
use crate::special::{
    integrate, integrate_semi_infinite, reg_gamma_upper, GaussGrid, QuadratureSpec,
};
use crate::statistic::{Sample, TuningParam};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Alternative distribution families of the power and efficiency studies.
///
/// `theta = 0` reduces every θ-family to Exp(1); `GammaBetaBeta` is the
/// mean-one gamma family Γ(β, β) used for drift and coverage tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum AlternativeModel {
    #[serde(rename = "exponential")]
    Exponential,
    #[serde(rename = "gamma_bb")]
    GammaBetaBeta { beta: f64 },
    #[serde(rename = "weibull")]
    Weibull { theta: f64 },
    #[serde(rename = "gamma_theta")]
    GammaTheta { theta: f64 },
    #[serde(rename = "lfr")]
    Lfr { theta: f64 },
    #[serde(rename = "emnw")]
    Emnw { beta: f64, theta: f64 },
    #[serde(rename = "makeham")]
    Makeham { theta: f64 },
}

impl AlternativeModel {
    /// Validate the parameter against the family's domain.
    pub fn validate(&self) -> Result<()> {
        match *self {
            AlternativeModel::Exponential => Ok(()),
            AlternativeModel::GammaBetaBeta { beta } => {
                if beta >= 1.0 && beta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "gamma_bb requires beta >= 1, got {beta}"
                    )))
                }
            }
            AlternativeModel::Weibull { theta } | AlternativeModel::GammaTheta { theta } => {
                if theta > -1.0 && theta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "shape offset must exceed -1, got {theta}"
                    )))
                }
            }
            AlternativeModel::Lfr { theta } | AlternativeModel::Makeham { theta } => {
                if theta >= 0.0 && theta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "hazard parameter must be >= 0, got {theta}"
                    )))
                }
            }
            AlternativeModel::Emnw { beta, theta } => {
                if !(beta > 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "emnw requires beta > 1, got {beta}"
                    )));
                }
                // nonnegativity of the mixture density is tightest at x = 0
                if theta >= 0.0 && theta <= 1.0 / (beta - 1.0) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!(
                        "emnw weight must lie in [0, 1/(beta-1)] = [0, {}], got {theta}",
                        1.0 / (beta - 1.0)
                    )))
                }
            }
        }
    }

    /// Short label used in study output.
    pub fn label(&self) -> String {
        match *self {
            AlternativeModel::Exponential => "exponential".into(),
            AlternativeModel::GammaBetaBeta { beta } => format!("gamma_bb({beta})"),
            AlternativeModel::Weibull { theta } => format!("weibull({theta})"),
            AlternativeModel::GammaTheta { theta } => format!("gamma_theta({theta})"),
            AlternativeModel::Lfr { theta } => format!("lfr({theta})"),
            AlternativeModel::Emnw { beta, theta } => format!("emnw({beta},{theta})"),
            AlternativeModel::Makeham { theta } => format!("makeham({theta})"),
        }
    }

    /// Density g(x) on (0, ∞).
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match *self {
            AlternativeModel::Exponential => (-x).exp(),
            AlternativeModel::GammaBetaBeta { beta } => {
                if x == 0.0 {
                    return if beta == 1.0 { 1.0 } else { 0.0 };
                }
                (beta * beta.ln() + (beta - 1.0) * x.ln() - beta * x
                    - crate::special::ln_gamma(beta))
                .exp()
            }
            AlternativeModel::Weibull { theta } => {
                if x == 0.0 {
                    return if theta == 0.0 { 1.0 } else if theta > 0.0 { 0.0 } else { f64::INFINITY };
                }
                (1.0 + theta) * x.powf(theta) * (-x.powf(1.0 + theta)).exp()
            }
            AlternativeModel::GammaTheta { theta } => {
                if x == 0.0 {
                    return if theta == 0.0 { 1.0 } else if theta > 0.0 { 0.0 } else { f64::INFINITY };
                }
                (theta * x.ln() - x - crate::special::ln_gamma(theta + 1.0)).exp()
            }
            AlternativeModel::Lfr { theta } => {
                (1.0 + theta * x) * (-x - 0.5 * theta * x * x).exp()
            }
            AlternativeModel::Emnw { beta, theta } => {
                (1.0 + theta) * (-x).exp() - theta * beta * (-beta * x).exp()
            }
            AlternativeModel::Makeham { theta } => {
                let em = (-x).exp();
                (1.0 + theta * (1.0 - em)) * (-x - theta * (x - 1.0 + em)).exp()
            }
        }
    }

    /// Survival function P(X > x).
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match *self {
            AlternativeModel::Exponential => (-x).exp(),
            AlternativeModel::GammaBetaBeta { beta } => reg_gamma_upper(beta, beta * x),
            AlternativeModel::Weibull { theta } => (-x.powf(1.0 + theta)).exp(),
            AlternativeModel::GammaTheta { theta } => reg_gamma_upper(theta + 1.0, x),
            AlternativeModel::Lfr { theta } => (-x - 0.5 * theta * x * x).exp(),
            AlternativeModel::Emnw { beta, theta } => {
                (1.0 + theta) * (-x).exp() - theta * (-beta * x).exp()
            }
            AlternativeModel::Makeham { theta } => {
                (-x - theta * (x - 1.0 + (-x).exp())).exp()
            }
        }
    }

    /// Distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// Mean by quadrature of the survival function.
    pub fn mean(&self) -> Result<f64> {
        self.validate()?;
        let spec = QuadratureSpec {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 400,
        };
        integrate_semi_infinite(|x| self.survival(x), 1.0, &spec)
    }

    /// Raw second moment by quadrature, E[X²] = ∫ 2 x S(x) dx.
    pub fn second_moment(&self) -> Result<f64> {
        self.validate()?;
        let spec = QuadratureSpec {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 400,
        };
        integrate_semi_infinite(|x| 2.0 * x * self.survival(x), 1.0, &spec)
    }

    /// One draw from the family.
    pub fn sampler(&self) -> Result<Sampler> {
        Sampler::new(*self)
    }
}

/// Reusable per-model sampler.
///
/// Gamma-type and Weibull families use standard transformation samplers;
/// the hazard-shaped families (LFR, EMNW, Makeham) invert a tabulated cdf
/// with monotone cubic Hermite interpolation, which keeps a single code path
/// across parameters and is validated by Kolmogorov-Smirnov checks.
#[derive(Debug, Clone)]
pub struct Sampler {
    model: AlternativeModel,
    inverter: Option<CdfTable>,
}

impl Sampler {
    pub fn new(model: AlternativeModel) -> Result<Self> {
        model.validate()?;
        let inverter = match model {
            AlternativeModel::Lfr { .. }
            | AlternativeModel::Emnw { .. }
            | AlternativeModel::Makeham { .. } => Some(CdfTable::build(&model)?),
            _ => None,
        };
        Ok(Self { model, inverter })
    }

    pub fn model(&self) -> &AlternativeModel {
        &self.model
    }

    pub fn draw(&self, rng: &mut Rng) -> f64 {
        match self.model {
            AlternativeModel::Exponential => rng.exponential(),
            AlternativeModel::GammaBetaBeta { beta } => rng.gamma(beta) / beta,
            AlternativeModel::GammaTheta { theta } => rng.gamma(theta + 1.0),
            AlternativeModel::Weibull { theta } => rng.exponential().powf(1.0 / (1.0 + theta)),
            _ => {
                let table = self.inverter.as_ref().expect("inverter built in new()");
                table.invert(rng.uniform())
            }
        }
    }

    /// n iid draws as a validated [`Sample`].
    pub fn sample_n(&self, n: usize, rng: &mut Rng) -> Result<Sample> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let mut x = self.draw(rng);
            // guard against exact zeros from grid inversion underflow
            if x <= 0.0 {
                x = f64::MIN_POSITIVE;
            }
            v.push(x);
        }
        Sample::new(v)
    }
}

/// n iid draws from the family, deterministic given the seed.
pub fn sample(model: &AlternativeModel, n: usize, seed: u64) -> Result<Sample> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    let sampler = Sampler::new(*model)?;
    let mut rng = Rng::from_seed(seed);
    sampler.sample_n(n, &mut rng)
}

// tabulated cdf with monotone cubic Hermite segments (derivative = density)
#[derive(Debug, Clone)]
struct CdfTable {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
}

impl CdfTable {
    fn build(model: &AlternativeModel) -> Result<Self> {
        // range covering all but ~1e-14 of the mass
        let mut x_max = 8.0;
        while model.survival(x_max) > 1e-14 && x_max < 1e6 {
            x_max *= 1.5;
        }
        let n = 4096;
        let mut xs = Vec::with_capacity(n + 1);
        let mut cdf = Vec::with_capacity(n + 1);
        let mut pdf = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let x = x_max * i as f64 / n as f64;
            xs.push(x);
            cdf.push(model.cdf(x));
            pdf.push(model.density(x));
        }
        Ok(Self { xs, cdf, pdf })
    }

    fn invert(&self, u: f64) -> f64 {
        let last = self.cdf.len() - 1;
        if u <= self.cdf[0] {
            return self.xs[0];
        }
        if u >= self.cdf[last] {
            return self.xs[last];
        }
        let mut lo = 0usize;
        let mut hi = last;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Hermite cubic on [lo, hi] with exact endpoint slopes; solve by
        // safeguarded Newton in the local coordinate
        let h = self.xs[hi] - self.xs[lo];
        let (c0, c1) = (self.cdf[lo], self.cdf[hi]);
        let (d0, d1) = (self.pdf[lo] * h, self.pdf[hi] * h);
        let eval = |s: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
            let h10 = s3 - 2.0 * s2 + s;
            let h01 = -2.0 * s3 + 3.0 * s2;
            let h11 = s3 - s2;
            h00 * c0 + h10 * d0 + h01 * c1 + h11 * d1
        };
        let denom = c1 - c0;
        let mut s = if denom > 0.0 { (u - c0) / denom } else { 0.5 };
        for _ in 0..30 {
            let f = eval(s) - u;
            let slope = {
                let s2 = s * s;
                let dh00 = 6.0 * s2 - 6.0 * s;
                let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
                let dh01 = -6.0 * s2 + 6.0 * s;
                let dh11 = 3.0 * s2 - 2.0 * s;
                dh00 * c0 + dh10 * d0 + dh01 * c1 + dh11 * d1
            };
            if slope > 0.0 {
                let step = f / slope;
                s = (s - step).clamp(0.0, 1.0);
                if step.abs() < 1e-14 {
                    break;
                }
            } else {
                break;
            }
        }
        self.xs[lo] + s * h
    }
}

/// A family rescaled to mean one, with its population functionals.
///
/// Houses the contrast function z(y) = E[(Y - y - 1) 1{Y > y}], the survival
/// moments Ψ_ℓ(s) = E[(Y-1)^ℓ 1{Y > s}], the fixed-alternative covariance
/// kernel K(s,t) and the derived quantities Δ_a and σ²_a.
#[derive(Debug, Clone)]
pub struct ScaledModel {
    model: AlternativeModel,
    mu: f64,
    variance: f64,
}

impl ScaledModel {
    pub fn new(model: AlternativeModel) -> Result<Self> {
        model.validate()?;
        let mu = model.mean()?;
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "model mean must be positive, got {mu}"
            )));
        }
        let ex2 = model.second_moment()?;
        let variance = ex2 / (mu * mu) - 1.0;
        Ok(Self {
            model,
            mu,
            variance,
        })
    }

    pub fn model(&self) -> &AlternativeModel {
        &self.model
    }

    /// Mean of the unscaled family.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Variance of the mean-1 rescaled variable.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Scaled density f_Y(y) = μ g(μ y).
    pub fn density(&self, y: f64) -> f64 {
        self.mu * self.model.density(self.mu * y)
    }

    /// Scaled survival P(Y > y) = S(μ y).
    pub fn survival(&self, y: f64) -> f64 {
        self.model.survival(self.mu * y)
    }

    /// Ψ_ℓ(s) = E[(Y-1)^ℓ 1{Y > s}] by quadrature, ℓ = 1, 2.
    pub fn psi(&self, ell: u8, s: f64) -> Result<f64> {
        let spec = QuadratureSpec {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_subdivisions: 400,
        };
        let pow = ell as i32;
        integrate_semi_infinite(
            |t| {
                let y = s + t;
                (y - 1.0).powi(pow) * self.density(y)
            },
            1.0,
            &spec,
        )
    }

    /// Contrast function z(y) = Ψ₁(y) - y P(Y > y); identically zero iff the
    /// family is exponential.
    pub fn contrast_z(&self, y: f64) -> Result<f64> {
        Ok(self.psi(1, y)? - y * self.survival(y))
    }

    /// Fixed-alternative covariance kernel K(s,t) evaluated pointwise.
    pub fn kernel(&self, s: f64, t: f64) -> Result<f64> {
        let hi = s.max(t);
        let psi1_hi = self.psi(1, hi)?;
        let psi2_hi = self.psi(2, hi)?;
        let (psi1_s, psi2_s) = (self.psi(1, s)?, self.psi(2, s)?);
        let (psi1_t, psi2_t) = (self.psi(1, t)?, self.psi(2, t)?);
        let (ss, st) = (self.survival(s), self.survival(t));
        let zs = psi1_s - s * ss;
        let zt = psi1_t - t * st;
        Ok(psi2_hi + s * t * self.survival(hi) - (s + t) * psi1_hi
            - ss * (psi2_t - t * psi1_t)
            - st * (psi2_s - s * psi1_s)
            + self.variance * ss * st
            - zs * zt)
    }

    // survival moments batch-evaluated at sorted points: one backward sweep
    // of segment integrals instead of one tail quadrature per point
    fn survival_moment_table(&self, pts: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let spec = QuadratureSpec {
            abs_tol: 1e-14,
            rel_tol: 1e-11,
            max_subdivisions: 200,
        };
        let n = pts.len();
        let mut psi1 = vec![0.0; n];
        let mut psi2 = vec![0.0; n];
        if n == 0 {
            return Ok((psi1, psi2));
        }
        let top = pts[n - 1];
        let mut acc1 = integrate_semi_infinite(
            |t| (top + t - 1.0) * self.density(top + t),
            1.0,
            &spec,
        )?;
        let mut acc2 = integrate_semi_infinite(
            |t| {
                let d = top + t - 1.0;
                d * d * self.density(top + t)
            },
            1.0,
            &spec,
        )?;
        psi1[n - 1] = acc1;
        psi2[n - 1] = acc2;
        for i in (0..n - 1).rev() {
            let (lo, hi) = (pts[i], pts[i + 1]);
            if hi > lo {
                acc1 += integrate(|y| (y - 1.0) * self.density(y), lo, hi, &spec)?;
                acc2 += integrate(|y| (y - 1.0) * (y - 1.0) * self.density(y), lo, hi, &spec)?;
            }
            psi1[i] = acc1;
            psi2[i] = acc2;
        }
        Ok((psi1, psi2))
    }

    /// Population drift Δ_a = ∫ z²(y) exp(-a y) dy; zero iff exponential.
    pub fn delta(&self, a: TuningParam) -> Result<f64> {
        let av = a.value();
        let grid = GaussGrid::semi_infinite(av + 2.0, 40, 12);
        // batch-evaluate z on the grid (needs sorted points)
        let mut order: Vec<usize> = (0..grid.len()).collect();
        order.sort_by(|&i, &j| grid.nodes[i].total_cmp(&grid.nodes[j]));
        let sorted: Vec<f64> = order.iter().map(|&i| grid.nodes[i]).collect();
        let (psi1, _) = self.survival_moment_table(&sorted)?;
        let mut z = vec![0.0; grid.len()];
        for (rank, &i) in order.iter().enumerate() {
            z[i] = psi1[rank] - sorted[rank] * self.survival(sorted[rank]);
        }
        let mut total = 0.0;
        for ((&w, &t), &zv) in grid.weights.iter().zip(&grid.nodes).zip(&z) {
            total += w * zv * zv * (-av * t).exp();
        }
        Ok(total)
    }

    /// Δ_a through the double-expectation representation
    /// E[∫_0^{Y1∧Y2} (Y1-t-1)(Y2-t-1) exp(-a t) dt], evaluated as a
    /// two-dimensional integral of the closed-form inner integral against the
    /// scaled density; independent cross-check of [`ScaledModel::delta`].
    pub fn delta_double_expectation(&self, a: TuningParam) -> Result<f64> {
        // triangle x <= y via (u, v) -> (u, u + v); integrand symmetric
        let gu = GaussGrid::semi_infinite(2.0, 40, 12);
        let gv = GaussGrid::semi_infinite(1.0, 40, 12);
        let mut total = 0.0;
        for i in 0..gu.len() {
            let u = gu.nodes[i];
            let fu = self.density(u);
            if fu == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for j in 0..gv.len() {
                let y = u + gv.nodes[j];
                inner += gv.weights[j] * upsilon(3, a, u, y) * self.density(y);
            }
            total += gu.weights[i] * fu * inner;
        }
        Ok(2.0 * total)
    }

    /// Asymptotic variance σ²_a = 4 ∬ K(x,y) z(x) z(y) exp(-a(x+y)) dx dy.
    pub fn sigma2(&self, a: TuningParam) -> Result<f64> {
        let av = a.value();
        let gu = GaussGrid::semi_infinite(2.0 * av + 2.0, 36, 10);
        let gv = GaussGrid::semi_infinite(av + 1.0, 36, 10);
        let nu = gu.len();
        let nv = gv.len();

        // all needed evaluation points: u_i and u_i + v_j
        let mut pts: Vec<f64> = Vec::with_capacity(nu + nu * nv);
        pts.extend_from_slice(&gu.nodes);
        for &u in &gu.nodes {
            for &v in &gv.nodes {
                pts.push(u + v);
            }
        }
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&i, &j| pts[i].total_cmp(&pts[j]));
        let sorted: Vec<f64> = order.iter().map(|&i| pts[i]).collect();
        let (psi1_s, psi2_s) = self.survival_moment_table(&sorted)?;
        let mut psi1 = vec![0.0; pts.len()];
        let mut psi2 = vec![0.0; pts.len()];
        for (rank, &i) in order.iter().enumerate() {
            psi1[i] = psi1_s[rank];
            psi2[i] = psi2_s[rank];
        }
        let surv: Vec<f64> = pts.iter().map(|&p| self.survival(p)).collect();
        let z: Vec<f64> = (0..pts.len())
            .map(|i| psi1[i] - pts[i] * surv[i])
            .collect();

        // triangle split: sigma2 = 4 * 2 * ∬_{v>0} K(u, u+v) z(u) z(u+v) w
        let mut total = 0.0;
        for i in 0..nu {
            let u = gu.nodes[i];
            let (s_u, p1_u, p2_u, z_u) = (surv[i], psi1[i], psi2[i], z[i]);
            if z_u == 0.0 {
                continue;
            }
            let mut inner = 0.0;
            for j in 0..nv {
                let idx = nu + i * nv + j;
                let t = pts[idx];
                let (s_t, p1_t, p2_t, z_t) = (surv[idx], psi1[idx], psi2[idx], z[idx]);
                // max(u, t) = t on this triangle
                let k = p2_t + u * t * s_t - (u + t) * p1_t
                    - s_u * (p2_t - t * p1_t)
                    - s_t * (p2_u - u * p1_u)
                    + self.variance * s_u * s_t
                    - z_u * z_t;
                inner += gv.weights[j] * k * z_t * (-a.value() * (u + t)).exp();
            }
            total += gu.weights[i] * z_u * inner;
        }
        Ok(8.0 * total)
    }
}

/// Closed-form drift Δ_a for the Γ(β,β) family, β ∈ {2, 3, 4}.
pub fn delta_closed_gamma(beta: u32, a: TuningParam) -> Result<f64> {
    let a = a.value();
    match beta {
        2 => Ok(2.0 / (a + 4.0).powi(3)),
        3 => Ok(2.0 * (a * a + 30.0 * a + 252.0) / (a + 6.0).powi(5)),
        4 => Ok(2.0
            * (a.powi(4) + 56.0 * a.powi(3) + 1344.0 * a * a + 16640.0 * a + 94720.0)
            / (a + 8.0).powi(7)),
        _ => Err(Error::InvalidParameter(format!(
            "closed-form drift implemented for beta in {{2,3,4}}, got {beta}"
        ))),
    }
}

// closed-form Weibull mean used as a spot-check against the quadrature path
#[cfg(test)]
pub(crate) fn weibull_mean_closed(theta: f64) -> f64 {
    crate::special::gamma_fn(1.0 + 1.0 / (1.0 + theta))
}
