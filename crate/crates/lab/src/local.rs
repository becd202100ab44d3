//! Exit-location frequencies on fine scales against the local limit law.

use hetlab_core::kernel::{local_limit_prediction, SaddleBox};
use hetlab_core::network::Saddle;
use hetlab_sim::{simulate_exit, LinearSaddleSde, Side};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::estimate::estimate_event;

/// One saddle entered at `(eps x, L)`; the event is a right exit with
/// `x2 / eps^beta` in `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalLimitSetup {
    pub saddle: Saddle,
    #[serde(default)]
    pub sbox: SaddleBox,
    pub eps: f64,
    pub beta: f64,
    pub x: f64,
    pub a: f64,
    pub b: f64,
    pub samples: u64,
    pub seed: u64,
    #[serde(default)]
    pub dt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalLimitRecord {
    pub hits: u64,
    pub n: u64,
    pub timeouts: u64,
    /// `eps^{-(beta/rho - 1)}`.
    pub scale: f64,
    pub empirical: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub predicted: f64,
    /// `empirical / predicted - 1`, absent when the prediction is 0.
    pub rel_discrepancy: Option<f64>,
}

pub fn local_limit_check(s: &LocalLimitSetup) -> Result<LocalLimitRecord> {
    if s.samples < 100 {
        return Err(LabError::InsufficientData(format!("{} samples, need at least 100", s.samples)));
    }
    if !(s.a <= s.b) {
        return Err(LabError::Validation(format!("window [{}, {}] is reversed", s.a, s.b)));
    }
    let predicted = local_limit_prediction(s.x, s.a, s.b, s.beta, &s.saddle, &s.sbox)?;
    let rho = s.saddle.rho();
    let dt = s.dt.unwrap_or(1e-3 * (1.0 / s.saddle.lambda()).min(1.0 / s.saddle.mu()));
    let kernel = LinearSaddleSde::new(s.saddle.clone(), s.sbox, s.eps)?.kernel(dt)?;
    let max_time = 10.0 * (1.0 / s.eps).ln().max(1.0) / s.saddle.lambda();
    let unit = s.eps.powf(s.beta);
    let start = [s.eps * s.x, s.sbox.l()];
    let row = estimate_event(s.eps, s.samples, s.seed, 0, |rng| {
        let e = simulate_exit(&kernel, start, max_time, rng)?;
        let z = e.location / unit;
        Ok(e.side == Side::Right && s.a <= z && z <= s.b && s.a < s.b)
    })?;
    let scale = s.eps.powf(-(s.beta / rho - 1.0));
    let empirical = scale * row.p_hat;
    Ok(LocalLimitRecord {
        hits: row.hits,
        n: row.n,
        timeouts: row.timeouts,
        scale,
        empirical,
        ci_low: scale * row.ci_low,
        ci_high: scale * row.ci_high,
        predicted,
        rel_discrepancy: (predicted > 0.0).then(|| empirical / predicted - 1.0),
    })
}
