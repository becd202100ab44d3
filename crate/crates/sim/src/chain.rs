//! Composition of saddle passages into a chain.
//!
//! Each saddle is entered on the line `x2 = L` of its box. Leaving `O_k`
//! through the right face at height `y`, the path reaches `O_{k+1}` at
//! `x1 = flip (a y + b eps N)` after `travel_time`.

use hetlab_core::exponents::{alpha_sequence, chi_typical, classify_escape, Regime};
use hetlab_core::kernel::{EntranceLaw, SaddleBox};
use hetlab_core::network::EscapeChainSpec;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::sde::{simulate_exit, ExitRecord, LinearKernel, LinearSaddleSde, Side, Stepper};

/// Passage along a heteroclinic connection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportMap {
    pub a: f64,
    pub b: f64,
    pub flip: f64,
    pub travel_time: f64,
}

impl Default for TransportMap {
    fn default() -> Self {
        TransportMap {
            a: 1.0,
            b: 1.0,
            flip: 1.0,
            travel_time: 1.0,
        }
    }
}

impl TransportMap {
    pub const IDENTITY: TransportMap = TransportMap {
        a: 1.0,
        b: 0.0,
        flip: 1.0,
        travel_time: 0.0,
    };

    pub fn new(a: f64, b: f64, flip: f64, travel_time: f64) -> Result<Self> {
        let m = TransportMap {
            a,
            b,
            flip,
            travel_time,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a != 0.0 && self.a.is_finite()) {
            return Err(SimError::Validation(format!("transport gain a must be finite and nonzero, got {}", self.a)));
        }
        if !self.b.is_finite() {
            return Err(SimError::Validation(format!("transport noise gain b must be finite, got {}", self.b)));
        }
        if self.flip != 1.0 && self.flip != -1.0 {
            return Err(SimError::Validation(format!("flip must be 1 or -1, got {}", self.flip)));
        }
        if !(self.travel_time >= 0.0 && self.travel_time.is_finite()) {
            return Err(SimError::Validation(format!("travel time must be >= 0, got {}", self.travel_time)));
        }
        Ok(())
    }

    /// Entrance position `x1` at the next saddle from exit height `y`.
    #[inline]
    pub fn carry<R: Rng + ?Sized>(&self, y: f64, epsilon: f64, rng: &mut R) -> f64 {
        let kick = if self.b == 0.0 {
            0.0
        } else {
            self.b * epsilon * rng.sample::<f64, _>(StandardNormal)
        };
        self.flip * (self.a * y + kick)
    }
}

/// Rescaled entrance `xi' = flip (a xi + b eps^{1 - alpha_in} N)` with `xi = y / eps^{alpha_in}`.
pub fn apply_transport<R: Rng + ?Sized>(
    map: &TransportMap,
    exit: &ExitRecord,
    alpha_in: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<f64> {
    if exit.side != Side::Right {
        return Err(SimError::Geometry(exit.side.to_string()));
    }
    let scale = epsilon.powf(alpha_in);
    let xi = exit.location / scale;
    let n: f64 = rng.sample(StandardNormal);
    Ok(map.flip * (map.a * xi + map.b * epsilon.powf(1.0 - alpha_in) * n))
}

/// Result of running one path through a chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainOutcome {
    pub escaped: bool,
    pub exits: Vec<ExitRecord>,
    pub total_time: f64,
}

/// Everything except the chain itself that a chain run needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub sbox: SaddleBox,
    pub epsilon: f64,
    pub dt: f64,
    pub max_time: f64,
    pub entrance: EntranceLaw,
    pub maps: Vec<TransportMap>,
}

/// `1e-3 * min(1/lambda, 1/mu)` over the chain.
pub fn default_dt(spec: &EscapeChainSpec) -> f64 {
    let fastest = spec
        .saddles()
        .iter()
        .map(|s| s.lambda().max(s.mu()))
        .fold(0.0, f64::max);
    1e-3 / fastest
}

/// Ten times the predicted passage time: `chi_bar l_eps` for power laws,
/// `sum alpha_{k-1} / lambda_k l_eps` otherwise.
pub fn default_max_time(spec: &EscapeChainSpec, epsilon: f64) -> Result<f64> {
    let l_eps = (1.0 / epsilon).ln().max(1.0);
    let report = classify_escape(spec)?;
    let per_log = match (report.regime, report.chi_bar) {
        (Regime::PowerLaw, Some(chi)) => chi,
        _ => chi_typical(&alpha_sequence(spec.alpha0(), &spec.rhos())?, &spec.lambdas()),
    };
    Ok(10.0 * per_log * l_eps)
}

/// Gaussian entrance for `alpha0 = 1`, a unit point entrance otherwise.
pub fn default_entrance(spec: &EscapeChainSpec) -> EntranceLaw {
    if spec.alpha0() == 1.0 {
        EntranceLaw::Normal {
            mean: 0.0,
            variance: 1.0,
        }
    } else {
        EntranceLaw::Point { x: 1.0 }
    }
}

/// Default transports `a = b = T = 1`, flipped where the chain turns.
pub fn default_maps(spec: &EscapeChainSpec) -> Vec<TransportMap> {
    spec.turns()
        .iter()
        .map(|t| TransportMap {
            flip: t.sign(),
            ..TransportMap::default()
        })
        .collect()
}

impl ChainConfig {
    pub fn new(spec: &EscapeChainSpec, epsilon: f64) -> Result<Self> {
        Ok(ChainConfig {
            sbox: SaddleBox::default(),
            epsilon,
            dt: default_dt(spec),
            max_time: default_max_time(spec, epsilon)?,
            entrance: default_entrance(spec),
            maps: default_maps(spec),
        })
    }

    /// Identity transports, keeping the chain's turn signs.
    pub fn with_identity_maps(mut self, spec: &EscapeChainSpec) -> Self {
        self.maps = spec
            .turns()
            .iter()
            .map(|t| TransportMap {
                flip: t.sign(),
                ..TransportMap::IDENTITY
            })
            .collect();
        self
    }
}

/// A chain with its per-saddle kernels prepared.
#[derive(Clone)]
pub struct ChainSimulator {
    kernels: Vec<LinearKernel>,
    alpha0: f64,
    wrong_turn: bool,
    config: ChainConfig,
}

impl ChainSimulator {
    pub fn new(spec: &EscapeChainSpec, config: ChainConfig) -> Result<Self> {
        if config.maps.len() != spec.len() {
            return Err(SimError::Validation(format!(
                "{} transport maps for {} saddles",
                config.maps.len(),
                spec.len()
            )));
        }
        for m in &config.maps {
            m.validate()?;
        }
        config.entrance.validate()?;
        if !(config.epsilon > 0.0 && config.epsilon.is_finite()) {
            return Err(SimError::Validation(format!("epsilon must be > 0, got {}", config.epsilon)));
        }
        if !(config.max_time > 0.0) {
            return Err(SimError::Validation(format!("max_time must be > 0, got {}", config.max_time)));
        }
        let kernels = spec
            .saddles()
            .iter()
            .map(|s| LinearSaddleSde::new(s.clone(), config.sbox, config.epsilon)?.kernel(config.dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChainSimulator {
            kernels,
            alpha0: spec.alpha0(),
            wrong_turn: spec.wrong_turn(),
            config,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    /// Face through which saddle `k` (0-based) must be left for the chain to continue.
    fn required_side(&self, k: usize) -> Side {
        if k + 1 == self.kernels.len() && self.wrong_turn {
            Side::Left
        } else {
            Side::Right
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChainOutcome> {
        let cfg = &self.config;
        let xi0 = cfg.entrance.sample(rng);
        let mut x1 = cfg.epsilon.powf(self.alpha0) * xi0;
        let mut exits = Vec::with_capacity(self.kernels.len());
        let mut total_time = 0.0;
        for (k, kernel) in self.kernels.iter().enumerate() {
            let budget = cfg.max_time - total_time;
            if budget <= 0.0 {
                return Err(SimError::Timeout {
                    max_time: cfg.max_time,
                    steps: 0,
                });
            }
            let exit = simulate_exit(kernel, [x1, cfg.sbox.l()], budget, rng).map_err(|e| match e {
                SimError::Timeout { steps, .. } => SimError::Timeout {
                    max_time: cfg.max_time,
                    steps,
                },
                other => other,
            })?;
            total_time += exit.time;
            exits.push(exit);
            if exit.side != self.required_side(k) {
                return Ok(ChainOutcome {
                    escaped: false,
                    exits,
                    total_time,
                });
            }
            if k + 1 < self.kernels.len() {
                let map = &cfg.maps[k];
                x1 = map.carry(exit.location, cfg.epsilon, rng);
                total_time += map.travel_time;
            }
        }
        Ok(ChainOutcome {
            escaped: true,
            exits,
            total_time,
        })
    }

    pub fn dt(&self) -> f64 {
        self.kernels[0].dt()
    }
}

/// One path through `spec` with the default box, entrance and time budget.
pub fn simulate_chain<R: Rng + ?Sized>(
    spec: &EscapeChainSpec,
    maps: &[TransportMap],
    epsilon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<ChainOutcome> {
    let config = ChainConfig {
        dt,
        maps: maps.to_vec(),
        ..ChainConfig::new(spec, epsilon)?
    };
    ChainSimulator::new(spec, config)?.run(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::path_rng;

    #[test]
    fn identity_transport() {
        let exit = ExitRecord {
            side: Side::Right,
            location: 0.02,
            time: 1.0,
            steps: 10,
        };
        let xi = apply_transport(&TransportMap::IDENTITY, &exit, 0.5, 1e-4, &mut path_rng(0, 0)).unwrap();
        assert!((xi - 2.0).abs() < 1e-12);
        let left = ExitRecord { side: Side::Left, ..exit };
        assert!(matches!(
            apply_transport(&TransportMap::IDENTITY, &left, 0.5, 1e-4, &mut path_rng(0, 0)),
            Err(SimError::Geometry(_))
        ));
    }

    #[test]
    fn map_validation() {
        assert!(TransportMap::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(TransportMap::new(1.0, 1.0, 0.5, 1.0).is_err());
        assert!(TransportMap::new(2.0, 0.0, -1.0, 0.0).is_ok());
    }

    #[test]
    fn positive_entrance_with_tiny_noise_turns_right() {
        let spec = EscapeChainSpec::from_rhos(1.0, &[0.5, 1.0]).unwrap();
        let mut cfg = ChainConfig::new(&spec, 1e-12).unwrap();
        cfg.entrance = EntranceLaw::Point { x: 1e6 };
        cfg.maps = vec![TransportMap::IDENTITY; 2];
        let sim = ChainSimulator::new(&spec, cfg).unwrap();
        for i in 0..5 {
            let out = sim.run(&mut path_rng(3, i)).unwrap();
            assert!(!out.escaped);
            assert_eq!(out.exits.len(), 2);
            assert_eq!(out.exits[1].side, Side::Right);
        }
    }

    #[test]
    fn travel_time_counted_between_saddles_only() {
        let spec = EscapeChainSpec::from_rhos(1.0, &[2.0, 2.0]).unwrap().with_wrong_turn(false);
        let mut cfg = ChainConfig::new(&spec, 1e-3).unwrap();
        cfg.entrance = EntranceLaw::Point { x: 50.0 };
        cfg.maps = vec![TransportMap::new(1.0, 0.0, 1.0, 2.5).unwrap(); 2];
        let sim = ChainSimulator::new(&spec, cfg).unwrap();
        let out = sim.run(&mut path_rng(0, 0)).unwrap();
        assert!(out.escaped);
        let exits: f64 = out.exits.iter().map(|e| e.time).sum();
        assert!((out.total_time - exits - 2.5).abs() < 1e-12);
    }

    #[test]
    fn wrong_map_count_rejected() {
        let spec = EscapeChainSpec::from_rhos(1.0, &[0.5, 1.0]).unwrap();
        let mut cfg = ChainConfig::new(&spec, 0.1).unwrap();
        cfg.maps.pop();
        assert!(ChainSimulator::new(&spec, cfg).is_err());
    }
}
