//! Escape-time concentration on the `l_eps = log(1/eps)` scale.

use hetlab_core::exponents::{ExponentReport, Regime};
use hetlab_core::network::EscapeChainSpec;
use hetlab_sim::{ChainOutcome, ChainSimulator};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::estimate::run_chain_rung;
use crate::stats::summarize;

pub const MIN_ESCAPES: u64 = 200;
const PROBS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Passage time through one saddle of escaped paths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SaddleTiming {
    /// 1-based saddle index.
    pub saddle: usize,
    pub slowdown: bool,
    /// Predicted passage time in units of `l_eps`.
    pub predicted: f64,
    /// Mean passage time over `predicted * l_eps`.
    pub mean_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationSummary {
    pub eps: f64,
    pub escapes: u64,
    pub chi_bar: f64,
    /// Mean of `tau / (chi_bar l_eps)` over escaped paths.
    pub mean_ratio: f64,
    pub std_ratio: f64,
    pub quantiles: Vec<(f64, f64)>,
    pub saddles: Vec<SaddleTiming>,
}

/// Saddle `i` costs `bar_alpha_i / mu_i` on `J` and `bar_alpha_{i-1} / lambda_i` elsewhere.
pub fn saddle_time_constants(spec: &EscapeChainSpec, report: &ExponentReport) -> Option<Vec<(bool, f64)>> {
    let ba = report.bar_alpha.as_ref()?;
    Some(
        spec.saddles()
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let i = k + 1;
                if report.j.contains(&i) {
                    (true, ba[i] / s.mu())
                } else {
                    (false, ba[i - 1] / s.lambda())
                }
            })
            .collect(),
    )
}

/// Statistics of `tau / (chi_bar l_eps)` over escaped paths.
pub fn summarize_escape_times(
    eps: f64,
    spec: &EscapeChainSpec,
    report: &ExponentReport,
    escapes: &[ChainOutcome],
) -> Result<ConcentrationSummary> {
    if report.regime != Regime::PowerLaw {
        return Err(hetlab_core::Error::Regime {
            expected: "power-law",
            actual: report.regime.to_string(),
        }
        .into());
    }
    let found = escapes.iter().filter(|o| o.escaped).count() as u64;
    if found < MIN_ESCAPES {
        return Err(LabError::InsufficientEscapes {
            found,
            needed: MIN_ESCAPES,
        });
    }
    let chi = report.chi_bar.expect("power-law reports carry chi_bar");
    let l_eps = (1.0 / eps).ln();
    let ratios: Vec<f64> = escapes.iter().filter(|o| o.escaped).map(|o| o.total_time / (chi * l_eps)).collect();
    let s = summarize(&ratios, &PROBS);
    let constants = saddle_time_constants(spec, report).expect("power-law reports carry bar_alpha");
    let saddles = constants
        .iter()
        .enumerate()
        .map(|(k, &(slowdown, predicted))| {
            let mean = escapes.iter().filter(|o| o.escaped).map(|o| o.exits[k].time).sum::<f64>() / found as f64;
            SaddleTiming {
                saddle: k + 1,
                slowdown,
                predicted,
                mean_ratio: mean / (predicted * l_eps),
            }
        })
        .collect();
    Ok(ConcentrationSummary {
        eps,
        escapes: found,
        chi_bar: chi,
        mean_ratio: s.mean,
        std_ratio: s.variance.sqrt(),
        quantiles: s.quantiles,
        saddles,
    })
}

/// Runs `n` paths and summarizes the escape times.
pub fn exit_time_concentration(
    sim: &ChainSimulator,
    spec: &EscapeChainSpec,
    report: &ExponentReport,
    n: u64,
    seed: u64,
) -> Result<ConcentrationSummary> {
    let rung = run_chain_rung(sim, n, seed, 0)?;
    summarize_escape_times(sim.config().epsilon, spec, report, &rung.escapes)
}
