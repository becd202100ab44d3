//! Gaussian exit laws of a single rectified saddle.
//!
//! Everything here refers to the box `[-R, R] x [-L', L']` with entrance on the
//! line `x2 = L` at `x1 = eps^alpha * x`, and exits through the vertical faces.

use std::cell::RefCell;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};
use crate::network::Saddle;
use crate::quad::{integrate, integrate_split, Tol};

/// Centered Gaussian with variance `c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    variance: f64,
}

impl GaussianLaw {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::Domain(format!("variance must be finite and > 0, got {variance}")));
        }
        Ok(GaussianLaw { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    /// `g_c(x)`.
    pub fn density(&self, x: f64) -> f64 {
        g(self.variance, x)
    }

    /// `psi_c(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        psi(self.variance, x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sd() * rng.sample::<f64, _>(StandardNormal)
    }
}

/// Gaussian density with variance `c`.
pub fn g(c: f64, x: f64) -> f64 {
    (-x * x / (2.0 * c)).exp() / (2.0 * std::f64::consts::PI * c).sqrt()
}

/// Gaussian distribution function with variance `c`, via `erfc` so both tails keep precision.
pub fn psi(c: f64, x: f64) -> f64 {
    0.5 * erfc(-x / (2.0 * c).sqrt())
}

/// Rectangle `[-R, R] x [-L', L']` with entrance height `L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct SaddleBox {
    r: f64,
    l: f64,
    l_prime: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "L_prime")]
    l_prime: f64,
}

impl TryFrom<RawBox> for SaddleBox {
    type Error = Error;
    fn try_from(b: RawBox) -> Result<Self> {
        SaddleBox::new(b.r, b.l, b.l_prime)
    }
}

impl From<SaddleBox> for RawBox {
    fn from(b: SaddleBox) -> Self {
        RawBox {
            r: b.r,
            l: b.l,
            l_prime: b.l_prime,
        }
    }
}

impl Default for SaddleBox {
    fn default() -> Self {
        SaddleBox {
            r: 1.0,
            l: 0.5,
            l_prime: 1.0,
        }
    }
}

impl SaddleBox {
    pub fn new(r: f64, l: f64, l_prime: f64) -> Result<Self> {
        if !(r >= 1.0 && l_prime >= 1.0 && l > 0.0 && l < l_prime && r.is_finite() && l_prime.is_finite()) {
            return Err(Error::Validation(format!(
                "box needs R >= 1, L' >= 1 and 0 < L < L', got R={r}, L={l}, L'={l_prime}"
            )));
        }
        Ok(SaddleBox { r, l, l_prime })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn l_prime(&self) -> f64 {
        self.l_prime
    }
}

/// `(c1, c2) = (1/(2 lambda), 1/(2 mu))` for the linear saddle with unit noise.
pub fn model_variances(saddle: &Saddle) -> (f64, f64) {
    (0.5 / saddle.lambda(), 0.5 / saddle.mu())
}

/// Variances for a position-dependent noise field.
///
/// `f1` and `f2` return the rows of the diffusion matrix; only their squared
/// norms enter. Both integrals are mapped to `[0, 1]` by `u = e^{-2 rate s}`.
pub fn general_variances<F1, F2>(saddle: &Saddle, sbox: &SaddleBox, f1: F1, f2: F2) -> Result<(f64, f64)>
where
    F1: Fn(f64, f64) -> [f64; 2],
    F2: Fn(f64, f64) -> [f64; 2],
{
    let (lambda, mu, rho) = (saddle.lambda(), saddle.mu(), saddle.rho());
    let norm2 = |v: [f64; 2]| v[0] * v[0] + v[1] * v[1];
    let tol = Tol::rel(1e-11);
    // e^{-mu s} = u^{rho/2}
    let c1 = integrate(|u: f64| norm2(f1(0.0, sbox.l * u.powf(0.5 * rho))), 0.0, 1.0, tol)? / (2.0 * lambda);
    // e^{lambda t} = u^{-1/(2 rho)}; the point runs off to infinity as u -> 0
    let c2 = integrate(
        |u: f64| {
            if u == 0.0 {
                0.0
            } else {
                norm2(f2(sbox.r * u.powf(-0.5 / rho), 0.0))
            }
        },
        0.0,
        1.0,
        tol,
    )? / (2.0 * mu);
    Ok((c1, c2))
}

/// Limiting probability of leaving through the `-` face from rescaled entrance `x`.
pub fn exit_direction_prob(x: f64, c1: f64) -> f64 {
    psi(c1, -x)
}

/// Parameters of the exit-time tail `P{zeta >= beta l_eps / lambda + c}`, where
/// `zeta` is the exit time from the strip `|x1| <= r eps^theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailQuery {
    pub x: f64,
    pub alpha: f64,
    pub theta: f64,
    pub beta: f64,
    pub c: f64,
    pub r: f64,
    pub eps: f64,
}

/// Leading-order tail probability of a long stay near the saddle.
pub fn exit_time_tail(q: &TailQuery, saddle: &Saddle) -> Result<f64> {
    if !(q.alpha > 0.0 && q.alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {}", q.alpha)));
    }
    if !(q.theta >= 0.0 && q.theta < q.alpha) {
        return Err(Error::Domain(format!("theta must lie in [0, alpha), got {}", q.theta)));
    }
    if !(q.beta >= 1.0 - q.theta) {
        return Err(Error::Domain(format!("beta must be >= 1 - theta, got {}", q.beta)));
    }
    if !(q.r > 0.0 && q.eps > 0.0 && q.eps < 1.0) {
        return Err(Error::Domain("need r > 0 and eps in (0, 1)".into()));
    }
    let lambda = saddle.lambda();
    let c1 = 0.5 / lambda;
    let centre = q.eps.powf(q.alpha - 1.0) * q.x;
    let half = q.r * (-lambda * q.c).exp();
    let power = q.theta + q.beta - q.alpha;
    if power.abs() <= 1e-12 {
        Ok(psi(c1, centre + half) - psi(c1, centre - half))
    } else {
        Ok(q.eps.powf(power) * 2.0 * half * g(c1, centre))
    }
}

/// Fine-scale exit regime of the measure `nu`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BetaRegime {
    /// Window at scale `eps`; the transverse Gaussian `N(0, c2)` is smeared in.
    EqualsOne(GaussianLaw),
    /// Window at scale `eps^beta` with `rho < beta < 1`.
    BelowOne,
}

/// Limiting intensity of exits at scales finer than typical.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NuMeasure {
    rho: f64,
    r: f64,
    l: f64,
    regime: BetaRegime,
}

impl NuMeasure {
    pub fn new(rho: f64, r: f64, l: f64, regime: BetaRegime) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Domain(format!("nu needs rho in (0, 1), got {rho}")));
        }
        if !(r > 0.0 && l > 0.0) {
            return Err(Error::Domain(format!("nu needs R, L > 0, got R={r}, L={l}")));
        }
        Ok(NuMeasure { rho, r, l, regime })
    }

    /// Model-case measure for `saddle` in `sbox`; `beta = 1` uses `c2 = 1/(2 mu)`.
    pub fn for_saddle(saddle: &Saddle, sbox: &SaddleBox, beta: f64) -> Result<Self> {
        let rho = saddle.rho();
        if !(beta > rho && beta <= 1.0) {
            return Err(Error::Domain(format!("beta must lie in (rho, 1] = ({rho}, 1], got {beta}")));
        }
        let regime = if beta == 1.0 {
            BetaRegime::EqualsOne(GaussianLaw::new(model_variances(saddle).1)?)
        } else {
            BetaRegime::BelowOne
        };
        NuMeasure::new(rho, sbox.r(), sbox.l(), regime)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn regime(&self) -> BetaRegime {
        self.regime
    }

    fn power(&self) -> f64 {
        1.0 / self.rho
    }

    /// `R / L^{1/rho}`.
    pub fn scale(&self) -> f64 {
        self.r / self.l.powf(self.power())
    }

    /// `nu((-inf, z])`.
    pub fn cdf(&self, z: f64) -> Result<f64> {
        if z == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let p = self.power();
        match self.regime {
            BetaRegime::BelowOne => Ok(self.scale() * z.max(0.0).powf(p)),
            BetaRegime::EqualsOne(n) => Ok(self.scale() * positive_part_moment(z, p, n.variance())?),
        }
    }

    /// Density of `nu` at `z`.
    pub fn density(&self, z: f64) -> Result<f64> {
        let p = self.power();
        match self.regime {
            BetaRegime::BelowOne => Ok(if z > 0.0 { self.scale() * p * z.powf(p - 1.0) } else { 0.0 }),
            BetaRegime::EqualsOne(n) => Ok(self.scale() * p * positive_part_moment(z, p - 1.0, n.variance())?),
        }
    }

    /// `nu((a, b])`.
    pub fn window(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(Error::Domain(format!("window [{a}, {b}] is reversed")));
        }
        if a == b {
            return Ok(0.0);
        }
        Ok(self.cdf(b)? - self.cdf(a)?)
    }

    /// `h(a, b; z) = |(b - z) v 0|^{1/rho} - |(a - z) v 0|^{1/rho}`.
    pub fn h(&self, a: f64, b: f64, z: f64) -> f64 {
        let p = self.power();
        (b - z).max(0.0).powf(p) - (a - z).max(0.0).powf(p)
    }

    /// `∫ psi_s(-z) nu(dz)`, by parts equal to `∫ g_s(z) nu((-inf, z]) dz`.
    pub fn psi_integral(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::Domain(format!("direction variance must be > 0, got {s}")));
        }
        let sd = s.sqrt();
        let k = sd * (14.0 + 2.0 * self.power().sqrt());
        let tol = Tol::rel(1e-9);
        match self.regime {
            BetaRegime::BelowOne => {
                let sc = self.scale();
                let p = self.power();
                integrate(|z: f64| g(s, z) * sc * z.powf(p), 0.0, k, tol)
            }
            BetaRegime::EqualsOne(n) => {
                let k = k + 14.0 * n.sd();
                let err = RefCell::new(None);
                let v = integrate(
                    |z| match self.cdf(z) {
                        Ok(c) => g(s, z) * c,
                        Err(e) => {
                            err.borrow_mut().get_or_insert(e);
                            f64::NAN
                        }
                    },
                    -k,
                    k,
                    tol,
                );
                match err.into_inner() {
                    Some(e) => Err(e),
                    None => v,
                }
            }
        }
    }
}

/// `E[((z - N) v 0)^p]` for `N ~ N(0, var)`, integrated on the half line
/// `t = z - N >= 0` so the kink at `N = z` sits on an endpoint.
pub fn positive_part_moment(z: f64, p: f64, var: f64) -> Result<f64> {
    let sd = var.sqrt();
    let upper = z.max(0.0) + sd * (14.0 + 2.0 * p.max(0.0).sqrt());
    if z < -40.0 * sd {
        return Ok(0.0);
    }
    let breaks = if z > 0.0 { vec![z] } else { Vec::new() };
    integrate_split(
        |t: f64| {
            let tp = if p == 0.0 { 1.0 } else { t.powf(p) };
            tp * g(var, z - t)
        },
        0.0,
        upper,
        &breaks,
        Tol::rel(1e-11),
    )
}

/// Coefficient of `eps^{beta/rho - 1}` in the probability of exiting through
/// `{R} x eps^beta [a, b]` from entrance `eps x`.
pub fn local_limit_prediction(x: f64, a: f64, b: f64, beta: f64, saddle: &Saddle, sbox: &SaddleBox) -> Result<f64> {
    if saddle.rho() >= 1.0 {
        return Err(Error::Domain(format!("local limit needs rho < 1, got {}", saddle.rho())));
    }
    let nu = NuMeasure::for_saddle(saddle, sbox, beta)?;
    let (c1, _) = model_variances(saddle);
    Ok(g(c1, x) * nu.window(a, b)?)
}

/// Which of the four typical-exit regimes applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExitCase {
    /// `rho < 1`: one-sided power of the shifted Gaussian.
    PowerOfGaussian,
    /// `rho = 1`: power term plus transverse noise, a convolution.
    Mixture,
    /// `rho > 1`, `alpha rho <= 1`: deterministic image plus small noise.
    ShiftedGaussian,
    /// `alpha rho > 1`: transverse Gaussian only.
    CenteredGaussian,
}

/// Scaling limit of the exit location `x2 / eps^{alpha'}` on the `+` face.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TypicalExitLaw {
    pub case: ExitCase,
    pub alpha: f64,
    pub alpha_prime: f64,
    /// `R^{-rho} L`.
    pub c: f64,
    pub rho: f64,
    pub x: f64,
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Typical exit law from entrance `eps^alpha x`.
pub fn typical_exit_law(alpha: f64, x: f64, eps: f64, saddle: &Saddle, sbox: &SaddleBox) -> Result<TypicalExitLaw> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let rho = saddle.rho();
    let case = if rho < 1.0 {
        ExitCase::PowerOfGaussian
    } else if rho == 1.0 {
        ExitCase::Mixture
    } else if alpha * rho <= 1.0 {
        ExitCase::ShiftedGaussian
    } else {
        ExitCase::CenteredGaussian
    };
    let (c1, c2) = model_variances(saddle);
    Ok(TypicalExitLaw {
        case,
        alpha,
        alpha_prime: (alpha * rho).min(1.0),
        c: sbox.r().powf(-rho) * sbox.l(),
        rho,
        x,
        eps,
        c1,
        c2,
    })
}

impl TypicalExitLaw {
    /// Variance of `eps^{1-alpha} U`.
    fn u_var(&self) -> f64 {
        self.eps.powf(2.0 * (1.0 - self.alpha)) * self.c1
    }

    /// Std of the transverse term in the shifted-Gaussian case.
    fn shifted_sd(&self) -> f64 {
        self.eps.powf(1.0 - self.alpha * self.rho) * self.c2.sqrt()
    }

    /// Probability of leaving through the `+` face, `P{x + eps^{1-alpha} U >= 0}`.
    pub fn mass(&self) -> f64 {
        psi(self.u_var(), self.x)
    }

    /// Distribution function conditional on the `+` face; `None` for the mixture case.
    pub fn conditional_cdf(&self, z: f64) -> Option<f64> {
        match self.case {
            ExitCase::PowerOfGaussian => {
                if z <= 0.0 {
                    return Some(0.0);
                }
                let v = self.u_var();
                let y = (z / self.c).powf(1.0 / self.rho);
                let m = self.mass();
                Some(((psi(v, y - self.x) - psi(v, -self.x)) / m).clamp(0.0, 1.0))
            }
            ExitCase::Mixture => None,
            ExitCase::ShiftedGaussian => {
                let mean = self.c * self.x.abs().powf(self.rho);
                let sd = self.shifted_sd();
                Some(psi(sd * sd, z - mean))
            }
            ExitCase::CenteredGaussian => Some(psi(self.c2, z)),
        }
    }

    /// Density conditional on the `+` face; `None` for the mixture case.
    pub fn conditional_density(&self, z: f64) -> Option<f64> {
        match self.case {
            ExitCase::PowerOfGaussian => {
                if z <= 0.0 {
                    return Some(0.0);
                }
                let v = self.u_var();
                let q = 1.0 / self.rho;
                let y = (z / self.c).powf(q);
                let dy = q * (z / self.c).powf(q - 1.0) / self.c;
                Some(g(v, y - self.x) * dy / self.mass())
            }
            ExitCase::Mixture => None,
            ExitCase::ShiftedGaussian => {
                let mean = self.c * self.x.abs().powf(self.rho);
                let sd = self.shifted_sd();
                Some(g(sd * sd, z - mean))
            }
            ExitCase::CenteredGaussian => Some(g(self.c2, z)),
        }
    }

    /// Limiting `P{exit on + face, x2 / eps^{alpha'} in [a, b]}`.
    pub fn probability(&self, a: f64, b: f64) -> Option<f64> {
        Some(self.mass() * (self.conditional_cdf(b)? - self.conditional_cdf(a)?))
    }

    /// One draw of the limiting location given a `+` exit.
    pub fn sample_conditional<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u_sd = self.u_var().sqrt();
        let positive_u = |rng: &mut R| loop {
            let v = self.x + u_sd * rng.sample::<f64, _>(StandardNormal);
            if v >= 0.0 {
                break v;
            }
        };
        let normal = |rng: &mut R| rng.sample::<f64, _>(StandardNormal);
        match self.case {
            ExitCase::PowerOfGaussian => self.c * positive_u(rng).powf(self.rho),
            ExitCase::Mixture => {
                let v = positive_u(rng);
                self.c * v + self.eps.powf(1.0 - self.alpha) * self.c2.sqrt() * normal(rng)
            }
            ExitCase::ShiftedGaussian => self.c * self.x.abs().powf(self.rho) + self.shifted_sd() * normal(rng),
            ExitCase::CenteredGaussian => self.c2.sqrt() * normal(rng),
        }
    }
}

/// Law of the rescaled entrance coordinate `xi_0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntranceLaw {
    Point { x: f64 },
    Normal { mean: f64, variance: f64 },
    Uniform { low: f64, high: f64 },
}

impl EntranceLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EntranceLaw::Point { x } => x.is_finite(),
            EntranceLaw::Normal { mean, variance } => mean.is_finite() && variance > 0.0 && variance.is_finite(),
            EntranceLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid entrance law {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EntranceLaw::Point { x } => x,
            EntranceLaw::Normal { mean, variance } => mean + variance.sqrt() * rng.sample::<f64, _>(StandardNormal),
            EntranceLaw::Uniform { low, high } => rng.random_range(low..high),
        }
    }

    /// `E[g_c(xi_0)]` by quadrature against the entrance density.
    pub fn expected_density(&self, c: f64) -> Result<f64> {
        let tol = Tol::rel(1e-11);
        match *self {
            EntranceLaw::Point { x } => Ok(g(c, x)),
            EntranceLaw::Normal { mean, variance } => {
                let k = mean.abs() + 14.0 * variance.max(c).sqrt();
                integrate(|t| g(c, t) * g(variance, t - mean), -k, k, tol)
            }
            EntranceLaw::Uniform { low, high } => Ok(integrate(|t| g(c, t), low, high, tol)? / (high - low)),
        }
    }
}

/// Two-saddle prefactor `h = E[g_c(xi_0)] ∫ psi_s(-z) nu(dz)`.
pub fn two_saddle_prefactor(c: f64, s: f64, nu: &NuMeasure, entrance: &EntranceLaw) -> Result<f64> {
    if !matches!(nu.regime(), BetaRegime::EqualsOne(_)) {
        return Err(Error::Domain("prefactor needs nu in the beta = 1 regime".into()));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("entrance variance must be > 0, got {c}")));
    }
    entrance.validate()?;
    Ok(entrance.expected_density(c)? * nu.psi_integral(s)?)
}
