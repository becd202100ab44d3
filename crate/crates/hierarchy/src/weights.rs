//! Limiting fraction of time spent near each saddle of a stable cell cycle.

use hetlab_core::network::CellCycle;
use hetlab_core::{Error, Result};

/// Periodic typical exponents around the cycle: `a[k]` is the exponent on
/// leaving saddle `k`, with `a[k] = min(a[k-1] rho_k, 1)` taken cyclically.
pub fn periodic_alphas(cycle: &CellCycle) -> Result<Vec<f64>> {
    let n = cycle.len();
    if n == 0 {
        return Err(Error::Validation("cell cycle has no saddles".into()));
    }
    // two sweeps from the maximal value 1: after the first clamp the sequence is periodic
    let mut a = vec![0.0; n];
    let mut prev = 1.0;
    let mut clamped = false;
    for sweep in 0..2 {
        for (k, s) in cycle.saddles.iter().enumerate() {
            let v = prev * s.rho();
            if v >= 1.0 {
                clamped = true;
            }
            a[k] = v.min(1.0);
            prev = a[k];
        }
        if sweep == 0 && !clamped {
            return Err(Error::UnstableCycle);
        }
    }
    Ok(a)
}

/// `w_i = (alpha_{i-1} / lambda_i) / Z`, in cycle order.
pub fn cycle_invariant_weights(cycle: &CellCycle) -> Result<Vec<f64>> {
    let a = periodic_alphas(cycle)?;
    let n = a.len();
    let raw: Vec<f64> = cycle
        .saddles
        .iter()
        .enumerate()
        .map(|(i, s)| a[(i + n - 1) % n] / s.lambda())
        .collect();
    let z: f64 = raw.iter().sum();
    Ok(raw.iter().map(|r| r / z).collect())
}
