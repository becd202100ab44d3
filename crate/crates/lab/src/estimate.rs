//! Event probabilities along an eps ladder.

use hetlab_core::kernel::{EntranceLaw, SaddleBox};
use hetlab_core::network::EscapeChainSpec;
use hetlab_sim::batch::fold_indexed;
use hetlab_sim::chain::{default_dt, default_entrance, default_maps, default_max_time};
use hetlab_sim::{path_rng, ChainConfig, ChainOutcome, ChainSimulator, PathRng, SimError, TransportMap};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fit::{fit_power_law, PowerFit};
use crate::stats::{wilson, Z95};

/// Streams of rung `r` start at `r << RUNG_SHIFT`, so rungs never share paths.
const RUNG_SHIFT: u32 = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    pub eps_values: Vec<f64>,
    /// One count per rung, or a single count used for every rung.
    pub samples_per_eps: Vec<u64>,
    #[serde(default = "default_target")]
    pub target: String,
    pub seed: u64,
    #[serde(default)]
    pub dt: Option<f64>,
}

fn default_target() -> String {
    "escape".into()
}

impl LadderConfig {
    pub fn new(eps_values: Vec<f64>, samples: u64, seed: u64) -> Result<Self> {
        let c = LadderConfig {
            eps_values,
            samples_per_eps: vec![samples],
            target: default_target(),
            seed,
            dt: None,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        self.dt = Some(dt);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Validation(m));
        if self.eps_values.is_empty() {
            return bad("eps ladder is empty".into());
        }
        if let Some(e) = self.eps_values.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return bad(format!("eps values must be > 0, got {e}"));
        }
        if self.eps_values.windows(2).any(|w| w[1] >= w[0]) {
            return bad(format!("eps values must be strictly decreasing: {:?}", self.eps_values));
        }
        let k = self.samples_per_eps.len();
        if k != 1 && k != self.eps_values.len() {
            return bad(format!("{k} sample counts for {} eps values", self.eps_values.len()));
        }
        if let Some(n) = self.samples_per_eps.iter().find(|&&n| n < 100) {
            return bad(format!("need at least 100 samples per eps, got {n}"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt must be > 0, got {dt}"));
            }
        }
        Ok(())
    }

    pub fn samples(&self, rung: usize) -> u64 {
        if self.samples_per_eps.len() == 1 {
            self.samples_per_eps[0]
        } else {
            self.samples_per_eps[rung]
        }
    }
}

/// `n` counts completed paths only; timed-out paths are in `timeouts`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub eps: f64,
    pub hits: u64,
    pub n: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub timeouts: u64,
}

impl EstimateRow {
    pub fn from_counts(eps: f64, hits: u64, n: u64, timeouts: u64) -> Self {
        let (ci_low, ci_high) = wilson(hits, n, Z95);
        EstimateRow {
            eps,
            hits,
            n,
            p_hat: if n == 0 { f64::NAN } else { hits as f64 / n as f64 },
            ci_low,
            ci_high,
            timeouts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateTable {
    pub rows: Vec<EstimateRow>,
    pub fit: Option<PowerFit>,
}

impl EstimateTable {
    pub const CSV_HEADER: &'static str = "eps,hits,n,p_hat,ci_low,ci_high,timeouts";

    /// Rows as CSV, floats with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                sig17(r.eps),
                r.hits,
                r.n,
                sig17(r.p_hat),
                sig17(r.ci_low),
                sig17(r.ci_high),
                r.timeouts
            ));
        }
        out
    }

    /// Fits when enough rows qualify; the error is kept as `None`.
    pub fn with_fit(mut self) -> Self {
        self.fit = fit_power_law(&self.rows).ok();
        self
    }
}

pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Default)]
struct Tally {
    hits: u64,
    done: u64,
    timeouts: u64,
    error: Option<SimError>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.hits += other.hits;
        self.done += other.done;
        self.timeouts += other.timeouts;
        self.error = self.error.or(other.error);
        self
    }
}

/// Estimates `P(event)` from `n` independent paths; path `i` uses stream `stream_base + i`.
pub fn estimate_event<F>(eps: f64, n: u64, seed: u64, stream_base: u64, event: F) -> Result<EstimateRow>
where
    F: Fn(&mut PathRng) -> hetlab_sim::Result<bool> + Sync,
{
    if n == 0 {
        return Err(LabError::Validation("sample count must be positive".into()));
    }
    let t = fold_indexed(
        n,
        Tally::default,
        |mut t, i| {
            if t.error.is_some() {
                return t;
            }
            match event(&mut path_rng(seed, stream_base + i)) {
                Ok(hit) => {
                    t.done += 1;
                    t.hits += hit as u64;
                }
                Err(SimError::Timeout { .. }) => t.timeouts += 1,
                Err(e) => t.error = Some(e),
            }
            t
        },
        Tally::merge,
    );
    if let Some(e) = t.error {
        return Err(e.into());
    }
    if t.done == 0 {
        return Err(LabError::AllTimeout { eps, n });
    }
    Ok(EstimateRow::from_counts(eps, t.hits, t.done, t.timeouts))
}

/// Transport choice for chain experiments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapChoice {
    /// `a = b = T = 1` with the chain's turn signs.
    #[default]
    Default,
    /// `a = 1, b = 0, T = 0` with the chain's turn signs.
    Identity,
    Custom(Vec<TransportMap>),
}

/// How a chain is set up at each eps; unset fields take the simulator defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainSetup {
    #[serde(default)]
    pub sbox: Option<SaddleBox>,
    #[serde(default)]
    pub entrance: Option<EntranceLaw>,
    #[serde(default)]
    pub maps: MapChoice,
    #[serde(default)]
    pub max_time: Option<f64>,
}

impl ChainSetup {
    pub fn config(&self, spec: &EscapeChainSpec, eps: f64, dt: Option<f64>) -> Result<ChainConfig> {
        let turns = default_maps(spec);
        let maps = match &self.maps {
            MapChoice::Default => turns,
            MapChoice::Identity => turns
                .iter()
                .map(|m| TransportMap {
                    flip: m.flip,
                    ..TransportMap::IDENTITY
                })
                .collect(),
            MapChoice::Custom(m) => m.clone(),
        };
        Ok(ChainConfig {
            sbox: self.sbox.unwrap_or_default(),
            epsilon: eps,
            dt: dt.unwrap_or_else(|| default_dt(spec)),
            max_time: match self.max_time {
                Some(t) => t,
                None => default_max_time(spec, eps)?,
            },
            entrance: self.entrance.unwrap_or_else(|| default_entrance(spec)),
            maps,
        })
    }

    pub fn simulator(&self, spec: &EscapeChainSpec, eps: f64, dt: Option<f64>) -> Result<ChainSimulator> {
        Ok(ChainSimulator::new(spec, self.config(spec, eps, dt)?)?)
    }
}

/// One rung of a chain ladder with the escaped paths kept for timing statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainRung {
    pub row: EstimateRow,
    pub escapes: Vec<ChainOutcome>,
}

#[derive(Default)]
struct ChainTally {
    tally: Tally,
    escapes: Vec<ChainOutcome>,
}

/// Runs `n` chain paths, keeping escaped outcomes in path order.
pub fn run_chain_rung(sim: &ChainSimulator, n: u64, seed: u64, stream_base: u64) -> Result<ChainRung> {
    if n == 0 {
        return Err(LabError::Validation("sample count must be positive".into()));
    }
    let eps = sim.config().epsilon;
    let t = fold_indexed(
        n,
        ChainTally::default,
        |mut c, i| {
            if c.tally.error.is_some() {
                return c;
            }
            match sim.run(&mut path_rng(seed, stream_base + i)) {
                Ok(out) => {
                    c.tally.done += 1;
                    if out.escaped {
                        c.tally.hits += 1;
                        c.escapes.push(out);
                    }
                }
                Err(SimError::Timeout { .. }) => c.tally.timeouts += 1,
                Err(e) => c.tally.error = Some(e),
            }
            c
        },
        |mut a, b| {
            a.tally = a.tally.merge(b.tally);
            a.escapes.extend(b.escapes);
            a
        },
    );
    if let Some(e) = t.tally.error {
        return Err(e.into());
    }
    if t.tally.done == 0 {
        return Err(LabError::AllTimeout { eps, n });
    }
    Ok(ChainRung {
        row: EstimateRow::from_counts(eps, t.tally.hits, t.tally.done, t.tally.timeouts),
        escapes: t.escapes,
    })
}

/// Escape probabilities of `spec` at every rung of the ladder, with a power-law fit.
pub fn chain_ladder(spec: &EscapeChainSpec, setup: &ChainSetup, ladder: &LadderConfig) -> Result<(EstimateTable, Vec<ChainRung>)> {
    ladder.validate()?;
    let mut rungs = Vec::with_capacity(ladder.eps_values.len());
    for (r, &eps) in ladder.eps_values.iter().enumerate() {
        let sim = setup.simulator(spec, eps, ladder.dt)?;
        rungs.push(run_chain_rung(&sim, ladder.samples(r), ladder.seed, (r as u64) << RUNG_SHIFT)?);
    }
    let table = EstimateTable {
        rows: rungs.iter().map(|r| r.row).collect(),
        fit: None,
    }
    .with_fit();
    Ok((table, rungs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_validation() {
        assert!(LadderConfig::new(vec![0.2, 0.1], 100, 0).is_ok());
        assert!(LadderConfig::new(vec![0.1, 0.2], 100, 0).is_err());
        assert!(LadderConfig::new(vec![0.2, 0.2], 100, 0).is_err());
        assert!(LadderConfig::new(vec![0.2, 0.1], 0, 0).is_err());
        assert!(LadderConfig::new(vec![0.2, -0.1], 1000, 0).is_err());
        assert!(LadderConfig::new(vec![], 1000, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = EstimateTable {
            rows: vec![EstimateRow::from_counts(0.1, 5, 100, 2)],
            fit: None,
        };
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("eps,hits,n,p_hat,ci_low,ci_high,timeouts"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "1.0000000000000001e-1");
        assert_eq!(row[0].parse::<f64>().unwrap(), 0.1);
        assert_eq!((row[1], row[2], row[6]), ("5", "100", "2"));
    }

    #[test]
    fn all_timeouts_is_an_error() {
        let r = estimate_event(0.1, 100, 0, 0, |_| {
            Err(SimError::Timeout {
                max_time: 1.0,
                steps: 1,
            })
        });
        assert!(matches!(r, Err(LabError::AllTimeout { .. })));
    }
}
