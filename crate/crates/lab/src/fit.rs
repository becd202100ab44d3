//! Weighted log-log fit `log p = log h + theta log eps`.
//!
//! `theta_hat` is the coefficient on `log eps`, so a positive value means the
//! probability decays as eps shrinks.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::estimate::EstimateRow;

/// Rows with fewer hits than this are left out of the fit.
pub const MIN_HITS: u64 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub theta_hat: f64,
    pub h_hat: f64,
    pub stderr_theta: f64,
    pub r_squared: f64,
    pub rows_used: usize,
    /// eps of rows dropped for having fewer than [`MIN_HITS`] hits.
    pub dropped: Vec<f64>,
}

impl PowerFit {
    pub fn predict(&self, eps: f64) -> f64 {
        self.h_hat * eps.powf(self.theta_hat)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.dropped
            .iter()
            .map(|e| format!("eps = {e}: fewer than {MIN_HITS} hits, row excluded from the fit"))
            .collect()
    }
}

/// Delta-method variance of `log p_hat`, `(1 - p) / (p n)`, with `p` taken
/// from the raw counts so that rescaling `p_hat` leaves the weights alone.
fn log_variance(p: f64, n: u64) -> f64 {
    // p_hat = 1 would get infinite weight; treat it as half a miss
    let p = p.min(1.0 - 0.5 / n as f64);
    (1.0 - p) / (p * n as f64)
}

pub fn fit_power_law(rows: &[EstimateRow]) -> Result<PowerFit> {
    let (used, dropped): (Vec<&EstimateRow>, Vec<&EstimateRow>) = rows.iter().partition(|r| r.hits >= MIN_HITS);
    if used.len() < 3 {
        return Err(LabError::InsufficientData(format!(
            "{} rows with at least {MIN_HITS} hits, need 3",
            used.len()
        )));
    }
    let pts: Vec<(f64, f64, f64)> = used
        .iter()
        .map(|r| (r.eps.ln(), r.p_hat.ln(), 1.0 / log_variance(r.hits as f64 / r.n as f64, r.n)))
        .collect();
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let xm = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ym = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - xm) * (p.1 - ym)).sum();
    let syy: f64 = pts.iter().map(|p| p.2 * (p.1 - ym).powi(2)).sum();
    if !(sxx > 0.0) || !sxx.is_finite() {
        return Err(LabError::InsufficientData("eps values do not vary".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let sse: f64 = pts.iter().map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(PowerFit {
        theta_hat: slope,
        h_hat: intercept.exp(),
        stderr_theta: (1.0 / sxx).sqrt(),
        r_squared: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
        rows_used: used.len(),
        dropped: dropped.iter().map(|r| r.eps).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(eps: f64, p: f64, n: u64) -> EstimateRow {
        EstimateRow {
            p_hat: p,
            ..EstimateRow::from_counts(eps, (p * n as f64).round() as u64, n, 0)
        }
    }

    #[test]
    fn exact_power_law() {
        let rows: Vec<_> = [0.2, 0.1, 0.05, 0.025].iter().map(|&e| exact(e, 0.2 * e, 1_000_000)).collect();
        let f = fit_power_law(&rows).unwrap();
        assert!((f.theta_hat - 1.0).abs() < 1e-12);
        assert!((f.h_hat - 0.2).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_probability() {
        let rows: Vec<_> = [0.2, 0.1, 0.05].iter().map(|&e| exact(e, 0.3, 10_000)).collect();
        let f = fit_power_law(&rows).unwrap();
        assert!(f.theta_hat.abs() < 1e-12);
        assert!((f.h_hat - 0.3).abs() < 1e-12);
    }

    #[test]
    fn sparse_rows_dropped() {
        let mut rows: Vec<_> = [0.2, 0.1, 0.05].iter().map(|&e| exact(e, 0.2 * e, 100_000)).collect();
        rows.push(EstimateRow::from_counts(0.001, 3, 100_000, 0));
        let f = fit_power_law(&rows).unwrap();
        assert_eq!(f.rows_used, 3);
        assert_eq!(f.dropped, vec![0.001]);
        assert_eq!(f.warnings().len(), 1);
        rows.remove(0);
        assert!(matches!(fit_power_law(&rows), Err(LabError::InsufficientData(_))));
    }
}
