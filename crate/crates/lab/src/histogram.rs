//! Empirical exit locations against the typical exit law.

use hetlab_core::kernel::{SaddleBox, TypicalExitLaw};
use hetlab_core::network::Saddle;
use hetlab_sim::batch::map_indexed;
use hetlab_sim::{path_rng, simulate_exit, LinearSaddleSde, Side, SimError};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::stats::{ks_p_value, ks_statistic};

pub const MIN_SAMPLES: usize = 10_000;
/// Size of the reference sample used when the law has no closed form.
const REFERENCE_DRAWS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistanceMetrics {
    pub n: usize,
    pub bins: usize,
    /// `sum |empirical - predicted|` over bins plus predicted mass outside the range.
    pub l1: f64,
    pub ks: Option<f64>,
    pub ks_p_value: Option<f64>,
}

pub fn histogram_vs_density(samples: &[f64], law: &TypicalExitLaw) -> Result<DistanceMetrics> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(LabError::InsufficientData(format!("{n} samples, need at least {MIN_SAMPLES}")));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(LabError::Validation("samples must be finite".into()));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Rice rule
    let bins = (2.0 * (n as f64).cbrt()).ceil() as usize;
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let bin_of = |x: f64| (((x - lo) / width) as usize).min(bins - 1);
    let mut counts = vec![0u64; bins];
    for &x in samples {
        counts[bin_of(x)] += 1;
    }
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let predicted: Vec<f64> = if law.conditional_cdf(0.0).is_some() {
        let cdf: Vec<f64> = edges.iter().map(|&e| law.conditional_cdf(e).unwrap()).collect();
        cdf.windows(2).map(|w| w[1] - w[0]).collect()
    } else {
        let mut rng = path_rng(0, 0);
        let mut ref_counts = vec![0u64; bins];
        for _ in 0..REFERENCE_DRAWS {
            let x = law.sample_conditional(&mut rng);
            if (lo..=hi).contains(&x) {
                ref_counts[bin_of(x)] += 1;
            }
        }
        ref_counts.iter().map(|&c| c as f64 / REFERENCE_DRAWS as f64).collect()
    };
    let inside: f64 = predicted.iter().sum();
    let l1 = counts
        .iter()
        .zip(&predicted)
        .map(|(&c, &p)| (c as f64 / n as f64 - p).abs())
        .sum::<f64>()
        + (1.0 - inside).max(0.0);
    let ks = law
        .conditional_cdf(0.0)
        .map(|_| ks_statistic(samples, |x| law.conditional_cdf(x).unwrap()));
    Ok(DistanceMetrics {
        n,
        bins,
        l1,
        ks,
        ks_p_value: ks.map(|d| ks_p_value(d, n)),
    })
}

/// Rescaled right-face exit heights `x2 / eps^{alpha'}` from entrance `(eps^alpha x, L)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExitSample {
    pub locations: Vec<f64>,
    /// Paths that left through a face other than the right one.
    pub other_side: u64,
    pub timeouts: u64,
}

#[allow(clippy::too_many_arguments)]
pub fn sample_typical_exits(
    saddle: &Saddle,
    sbox: &SaddleBox,
    alpha: f64,
    x: f64,
    eps: f64,
    n: u64,
    seed: u64,
    dt: Option<f64>,
) -> Result<ExitSample> {
    let alpha_prime = (alpha * saddle.rho()).min(1.0);
    let dt = dt.unwrap_or(1e-3 * (1.0 / saddle.lambda()).min(1.0 / saddle.mu()));
    let kernel = LinearSaddleSde::new(saddle.clone(), *sbox, eps)?.kernel(dt)?;
    let max_time = 10.0 * (1.0 / eps).ln().max(1.0) / saddle.lambda();
    let start = [eps.powf(alpha) * x, sbox.l()];
    let unit = eps.powf(alpha_prime);
    let exits = map_indexed(n, |i| simulate_exit(&kernel, start, max_time, &mut path_rng(seed, i)));
    let mut out = ExitSample {
        locations: Vec::new(),
        other_side: 0,
        timeouts: 0,
    };
    for e in exits {
        match e {
            Ok(e) if e.side == Side::Right => out.locations.push(e.location / unit),
            Ok(_) => out.other_side += 1,
            Err(SimError::Timeout { .. }) => out.timeouts += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}
