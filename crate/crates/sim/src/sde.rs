//! Planar SDEs in a rectangle: exact stepping for the linear saddle,
//! Euler–Maruyama for general fields, and exit detection.

use std::fmt;
use std::sync::Arc;

use hetlab_core::kernel::SaddleBox;
use hetlab_core::network::Saddle;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub type State = [f64; 2];
pub type Matrix = [[f64; 2]; 2];
pub type VectorField = Arc<dyn Fn(State) -> State + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(State) -> Matrix + Send + Sync>;

const IDENTITY: Matrix = [[1.0, 0.0], [0.0, 1.0]];

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if !(x_min < x_max && y_min < y_max) {
            return Err(SimError::Validation(format!(
                "degenerate rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Rect { x_min, x_max, y_min, y_max })
    }

    /// The saddle box `[-R, R] x [-L', L']`.
    pub fn of_box(b: &SaddleBox) -> Self {
        Rect {
            x_min: -b.r(),
            x_max: b.r(),
            y_min: -b.l_prime(),
            y_max: b.l_prime(),
        }
    }

    pub fn contains(&self, p: State) -> bool {
        p[0] > self.x_min && p[0] < self.x_max && p[1] > self.y_min && p[1] < self.y_max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Top => "top",
            Side::Bottom => "bottom",
        })
    }
}

/// First exit from the rectangle. `location` is the coordinate along the face:
/// `x2` on the left/right faces, `x1` on the top/bottom faces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub side: Side,
    pub location: f64,
    pub time: f64,
    pub steps: u64,
}

/// Anything that can advance a state by one fixed step.
pub trait Stepper {
    fn domain(&self) -> Rect;
    fn step<R: Rng + ?Sized>(&self, x: State, rng: &mut R) -> State;
    fn dt(&self) -> f64;
}

/// Linear saddle `dX = diag(lambda, -mu) X dt + eps sigma dW`, optionally with a
/// drift correction `eps^2 G(X)`.
#[derive(Clone)]
pub struct LinearSaddleSde {
    saddle: Saddle,
    sbox: SaddleBox,
    epsilon: f64,
    sigma: Matrix,
    correction: Option<VectorField>,
}

impl fmt::Debug for LinearSaddleSde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearSaddleSde")
            .field("saddle", &self.saddle)
            .field("sbox", &self.sbox)
            .field("epsilon", &self.epsilon)
            .field("sigma", &self.sigma)
            .field("correction", &self.correction.is_some())
            .finish()
    }
}

impl LinearSaddleSde {
    pub fn new(saddle: Saddle, sbox: SaddleBox, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(SimError::Validation(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        Ok(LinearSaddleSde {
            saddle,
            sbox,
            epsilon,
            sigma: IDENTITY,
            correction: None,
        })
    }

    pub fn with_sigma(mut self, sigma: Matrix) -> Result<Self> {
        let det = sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0];
        if !(det.abs() > 1e-14 && det.is_finite()) {
            return Err(SimError::Validation(format!("sigma must be nonsingular, det = {det}")));
        }
        self.sigma = sigma;
        Ok(self)
    }

    /// Adds `eps^2 G(x) dt` after each exact step. `G = 0` by default.
    pub fn with_correction(mut self, g: VectorField) -> Self {
        self.correction = Some(g);
        self
    }

    pub fn saddle(&self) -> &Saddle {
        &self.saddle
    }

    pub fn sbox(&self) -> &SaddleBox {
        &self.sbox
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Precomputes the transition of one step of length `dt`.
    pub fn kernel(&self, dt: f64) -> Result<LinearKernel> {
        check_dt(dt)?;
        let a = [self.saddle.lambda(), -self.saddle.mu()];
        let s = self.sigma;
        let ss = [
            [s[0][0] * s[0][0] + s[0][1] * s[0][1], s[0][0] * s[1][0] + s[0][1] * s[1][1]],
            [0.0, s[1][0] * s[1][0] + s[1][1] * s[1][1]],
        ];
        let integral = |r: f64| if r == 0.0 { dt } else { (r * dt).exp_m1() / r };
        let e2 = self.epsilon * self.epsilon;
        let v11 = e2 * ss[0][0] * integral(2.0 * a[0]);
        let v12 = e2 * ss[0][1] * integral(a[0] + a[1]);
        let v22 = e2 * ss[1][1] * integral(2.0 * a[1]);
        let l11 = v11.sqrt();
        let l21 = if l11 > 0.0 { v12 / l11 } else { 0.0 };
        let l22 = (v22 - l21 * l21).max(0.0).sqrt();
        Ok(LinearKernel {
            decay: [(a[0] * dt).exp(), (a[1] * dt).exp()],
            chol: [l11, l21, l22],
            dt,
            domain: Rect::of_box(&self.sbox),
            correction: self.correction.clone().map(|g| (g, e2 * dt)),
        })
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::Validation(format!("dt must be finite and > 0, got {dt}")));
    }
    Ok(())
}

/// Exact Gaussian transition of the linear saddle over a fixed step.
#[derive(Clone)]
pub struct LinearKernel {
    decay: [f64; 2],
    chol: [f64; 3],
    dt: f64,
    domain: Rect,
    correction: Option<(VectorField, f64)>,
}

impl Stepper for LinearKernel {
    fn domain(&self) -> Rect {
        self.domain
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    fn step<R: Rng + ?Sized>(&self, x: State, rng: &mut R) -> State {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let [l11, l21, l22] = self.chol;
        let mut y = [self.decay[0] * x[0] + l11 * z1, self.decay[1] * x[1] + l21 * z1 + l22 * z2];
        if let Some((g, h)) = &self.correction {
            let d = g(x);
            y[0] += h * d[0];
            y[1] += h * d[1];
        }
        y
    }
}

/// One exact step of the linear saddle.
pub fn step_linear_exact<R: Rng + ?Sized>(sde: &LinearSaddleSde, state: State, dt: f64, rng: &mut R) -> Result<State> {
    Ok(sde.kernel(dt)?.step(state, rng))
}

/// `dX = b(X) dt + eps sigma(X) dW` on a rectangle.
#[derive(Clone)]
pub struct GeneralSde {
    drift: VectorField,
    diffusion: MatrixField,
    epsilon: f64,
    domain: Rect,
}

impl fmt::Debug for GeneralSde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralSde")
            .field("epsilon", &self.epsilon)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl GeneralSde {
    /// Checks boundedness and uniform ellipticity on a 21 x 21 grid over the domain.
    pub fn new(drift: VectorField, diffusion: MatrixField, epsilon: f64, domain: Rect) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(SimError::Validation(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        const GRID: usize = 21;
        for i in 0..GRID {
            for j in 0..GRID {
                let p = [
                    domain.x_min + (domain.x_max - domain.x_min) * i as f64 / (GRID - 1) as f64,
                    domain.y_min + (domain.y_max - domain.y_min) * j as f64 / (GRID - 1) as f64,
                ];
                let b = drift(p);
                if !(b[0].is_finite() && b[1].is_finite()) {
                    return Err(SimError::Validation(format!("drift is not finite at {p:?}")));
                }
                let s = diffusion(p);
                if !s.iter().flatten().all(|v| v.is_finite()) {
                    return Err(SimError::Validation(format!("diffusion is not finite at {p:?}")));
                }
                // smallest eigenvalue of sigma sigma^T
                let a = s[0][0] * s[0][0] + s[0][1] * s[0][1];
                let c = s[1][0] * s[1][0] + s[1][1] * s[1][1];
                let bb = s[0][0] * s[1][0] + s[0][1] * s[1][1];
                let min_eig = 0.5 * (a + c) - (0.25 * (a - c) * (a - c) + bb * bb).sqrt();
                if !(min_eig > 1e-12) {
                    return Err(SimError::Validation(format!("diffusion is degenerate at {p:?}")));
                }
            }
        }
        Ok(GeneralSde {
            drift,
            diffusion,
            epsilon,
            domain,
        })
    }

    /// The linear saddle written as a general field, for cross-checking backends.
    pub fn linear_saddle(saddle: &Saddle, sbox: &SaddleBox, epsilon: f64) -> Result<Self> {
        let (l, m) = (saddle.lambda(), saddle.mu());
        GeneralSde::new(
            Arc::new(move |x: State| [l * x[0], -m * x[1]]),
            Arc::new(|_| IDENTITY),
            epsilon,
            Rect::of_box(sbox),
        )
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn drift_at(&self, x: State) -> State {
        (self.drift)(x)
    }

    pub fn euler(&self, dt: f64) -> Result<EulerStepper<'_>> {
        check_dt(dt)?;
        Ok(EulerStepper {
            sde: self,
            dt,
            noise: self.epsilon * dt.sqrt(),
        })
    }
}

/// Euler–Maruyama with a fixed step.
pub struct EulerStepper<'a> {
    sde: &'a GeneralSde,
    dt: f64,
    noise: f64,
}

impl Stepper for EulerStepper<'_> {
    fn domain(&self) -> Rect {
        self.sde.domain
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    fn step<R: Rng + ?Sized>(&self, x: State, rng: &mut R) -> State {
        let b = (self.sde.drift)(x);
        let s = (self.sde.diffusion)(x);
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        [
            x[0] + b[0] * self.dt + self.noise * (s[0][0] * z1 + s[0][1] * z2),
            x[1] + b[1] * self.dt + self.noise * (s[1][0] * z1 + s[1][1] * z2),
        ]
    }
}

/// One Euler–Maruyama step.
pub fn step_euler<R: Rng + ?Sized>(sde: &GeneralSde, state: State, dt: f64, rng: &mut R) -> Result<State> {
    Ok(sde.euler(dt)?.step(state, rng))
}

/// Runs until the path leaves the stepper's rectangle.
///
/// The crossing point and time are interpolated linearly between the last
/// inside and the first outside state. A start on or outside the boundary
/// counts as an exit at time 0.
pub fn simulate_exit<S: Stepper, R: Rng + ?Sized>(
    stepper: &S,
    initial: State,
    max_time: f64,
    rng: &mut R,
) -> Result<ExitRecord> {
    let d = stepper.domain();
    if let Some(rec) = boundary_exit(&d, initial, initial, 0.0, 0.0, 0) {
        return Ok(rec);
    }
    let dt = stepper.dt();
    let max_steps = (max_time / dt).ceil().max(1.0) as u64;
    let mut x = initial;
    for k in 1..=max_steps {
        let y = stepper.step(x, rng);
        if !d.contains(y) {
            let t0 = (k - 1) as f64 * dt;
            return Ok(boundary_exit(&d, x, y, t0, dt, k).expect("outside point crosses a face"));
        }
        x = y;
    }
    Err(SimError::Timeout {
        max_time,
        steps: max_steps,
    })
}

/// Face crossed first on the segment `p -> q`, if `q` is not inside.
fn boundary_exit(d: &Rect, p: State, q: State, t0: f64, dt: f64, steps: u64) -> Option<ExitRecord> {
    if d.contains(q) {
        return None;
    }
    let frac = |from: f64, to: f64, bound: f64| {
        let span = to - from;
        if span == 0.0 {
            0.0
        } else {
            ((bound - from) / span).clamp(0.0, 1.0)
        }
    };
    let mut best: Option<(f64, Side)> = None;
    let mut consider = |hit: bool, t: f64, side: Side| {
        if hit && best.is_none_or(|(bt, _)| t < bt) {
            best = Some((t, side));
        }
    };
    consider(q[0] >= d.x_max, frac(p[0], q[0], d.x_max), Side::Right);
    consider(q[0] <= d.x_min, frac(p[0], q[0], d.x_min), Side::Left);
    consider(q[1] >= d.y_max, frac(p[1], q[1], d.y_max), Side::Top);
    consider(q[1] <= d.y_min, frac(p[1], q[1], d.y_min), Side::Bottom);
    let (t, side) = best?;
    let at = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
    let location = match side {
        Side::Left | Side::Right => at[1],
        Side::Top | Side::Bottom => at[0],
    };
    Some(ExitRecord {
        side,
        location,
        time: t0 + t * dt,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::path_rng;

    fn sde(eps: f64) -> LinearSaddleSde {
        LinearSaddleSde::new(Saddle::new(1.0, 0.5).unwrap(), SaddleBox::default(), eps).unwrap()
    }

    #[test]
    fn zero_noise_is_the_flow() {
        let mut rng = path_rng(1, 0);
        let y = step_linear_exact(&sde(0.0), [0.3, 0.4], 0.1, &mut rng).unwrap();
        assert_eq!(y, [0.3 * 0.1f64.exp(), 0.4 * (-0.05f64).exp()]);
        let g = GeneralSde::linear_saddle(&Saddle::new(1.0, 0.5).unwrap(), &SaddleBox::default(), 0.0).unwrap();
        let y = step_euler(&g, [0.3, 0.4], 0.1, &mut rng).unwrap();
        assert_eq!(y, [0.3 + 0.03, 0.4 - 0.02]);
    }

    #[test]
    fn deterministic_exit_on_unstable_axis() {
        let k = sde(0.0).kernel(1e-4).unwrap();
        let mut rng = path_rng(1, 0);
        let e = simulate_exit(&k, [0.1, 0.0], 100.0, &mut rng).unwrap();
        assert_eq!(e.side, Side::Right);
        assert_eq!(e.location, 0.0);
        assert!((e.time - 10f64.ln()).abs() < 2e-4, "{}", e.time);
    }

    #[test]
    fn start_outside_is_immediate_exit() {
        let k = sde(0.1).kernel(1e-3).unwrap();
        let e = simulate_exit(&k, [-1.5, 0.2], 1.0, &mut path_rng(0, 0)).unwrap();
        assert_eq!((e.side, e.time, e.steps), (Side::Left, 0.0, 0));
    }

    #[test]
    fn timeout_reported() {
        let k = sde(0.0).kernel(1e-3).unwrap();
        let e = simulate_exit(&k, [0.0, 0.5], 1.0, &mut path_rng(0, 0)).unwrap_err();
        assert!(matches!(e, SimError::Timeout { .. }));
    }

    #[test]
    fn singular_sigma_rejected() {
        assert!(sde(0.1).with_sigma([[1.0, 2.0], [0.5, 1.0]]).is_err());
        assert!(sde(0.1).with_sigma([[1.0, 0.3], [0.0, 2.0]]).is_ok());
    }

    #[test]
    fn degenerate_general_field_rejected() {
        let r = Rect::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        let e = GeneralSde::new(Arc::new(|x| x), Arc::new(|_| [[1.0, 0.0], [0.0, 0.0]]), 0.1, r);
        assert!(e.is_err());
        let e = GeneralSde::new(Arc::new(|x: State| [1.0 / x[0], 0.0]), Arc::new(|_| IDENTITY), 0.1, r);
        assert!(e.is_err());
    }
}
