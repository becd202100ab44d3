//! Saddles, escape chains, cell cycles and periodic networks.
//!
//! All values are validated on construction and immutable afterwards. The
//! stability index `rho` is always derived from `(lambda, mu)`.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperbolic saddle with expansion rate `lambda` and contraction rate `mu`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSaddle", into = "RawSaddle")]
pub struct Saddle {
    lambda: f64,
    mu: f64,
    name: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSaddle {
    lambda: f64,
    mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

impl TryFrom<RawSaddle> for Saddle {
    type Error = Error;

    fn try_from(raw: RawSaddle) -> Result<Self> {
        let s = Saddle::new(raw.lambda, raw.mu)?;
        Ok(match raw.name {
            Some(n) => s.with_name(n),
            None => s,
        })
    }
}

impl From<Saddle> for RawSaddle {
    fn from(s: Saddle) -> Self {
        RawSaddle {
            lambda: s.lambda,
            mu: s.mu,
            name: s.name,
        }
    }
}

impl Saddle {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Validation(format!("lambda must be finite and > 0, got {lambda}")));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::Validation(format!("mu must be finite and > 0, got {mu}")));
        }
        Ok(Saddle { lambda, mu, name: None })
    }

    /// Saddle with rates `lambda` and `lambda * rho`.
    pub fn from_rho(lambda: f64, rho: f64) -> Result<Self> {
        Saddle::new(lambda, lambda * rho)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Stability index `mu / lambda`.
    pub fn rho(&self) -> f64 {
        self.mu / self.lambda
    }

    /// Same rates, optionally same name: the identity used for network membership.
    fn matches(&self, other: &Saddle) -> bool {
        let rates = self.lambda == other.lambda && self.mu == other.mu;
        match (&self.name, &other.name) {
            (Some(a), Some(b)) => a == b && rates,
            _ => rates,
        }
    }
}

/// Orientation of the connection leaving a saddle relative to the one entering it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Turn {
    #[default]
    Same,
    Opposite,
}

impl Turn {
    pub fn sign(self) -> f64 {
        match self {
            Turn::Same => 1.0,
            Turn::Opposite => -1.0,
        }
    }
}

impl From<Turn> for i8 {
    fn from(t: Turn) -> i8 {
        match t {
            Turn::Same => 1,
            Turn::Opposite => -1,
        }
    }
}

impl TryFrom<i8> for Turn {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Turn::Same),
            -1 => Ok(Turn::Opposite),
            _ => Err(format!("turn must be 1 or -1, got {v}")),
        }
    }
}

/// Ordered chain of saddles `O_1..O_n` entered at scale `eps^alpha0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChain", into = "RawChain")]
pub struct EscapeChainSpec {
    alpha0: f64,
    saddles: Vec<Saddle>,
    turns: Vec<Turn>,
    wrong_turn: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    alpha0: f64,
    saddles: Vec<RawChainSaddle>,
    #[serde(default = "default_wrong_turn")]
    wrong_turn: bool,
}

fn default_wrong_turn() -> bool {
    true
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChainSaddle {
    lambda: f64,
    mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "is_same")]
    turn: Turn,
}

fn is_same(t: &Turn) -> bool {
    *t == Turn::Same
}

impl TryFrom<RawChain> for EscapeChainSpec {
    type Error = Error;

    fn try_from(raw: RawChain) -> Result<Self> {
        let mut saddles = Vec::with_capacity(raw.saddles.len());
        let mut turns = Vec::with_capacity(raw.saddles.len());
        for (k, s) in raw.saddles.into_iter().enumerate() {
            let saddle = Saddle::try_from(RawSaddle {
                lambda: s.lambda,
                mu: s.mu,
                name: s.name,
            })
            .map_err(|e| Error::Validation(format!("saddle {}: {e}", k + 1)))?;
            saddles.push(saddle);
            turns.push(s.turn);
        }
        EscapeChainSpec::with_turns(raw.alpha0, saddles, turns, raw.wrong_turn)
    }
}

impl From<EscapeChainSpec> for RawChain {
    fn from(c: EscapeChainSpec) -> Self {
        RawChain {
            alpha0: c.alpha0,
            saddles: c
                .saddles
                .into_iter()
                .zip(c.turns)
                .map(|(s, turn)| RawChainSaddle {
                    lambda: s.lambda,
                    mu: s.mu,
                    name: s.name,
                    turn,
                })
                .collect(),
            wrong_turn: c.wrong_turn,
        }
    }
}

impl EscapeChainSpec {
    /// Cell-escape chain: every connection keeps its side, the last one exits.
    pub fn new(alpha0: f64, saddles: Vec<Saddle>) -> Result<Self> {
        let n = saddles.len();
        EscapeChainSpec::with_turns(alpha0, saddles, vec![Turn::Same; n], true)
    }

    pub fn with_turns(alpha0: f64, saddles: Vec<Saddle>, turns: Vec<Turn>, wrong_turn: bool) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0 <= 1.0) {
            return Err(Error::Validation(format!("alpha0 must lie in (0, 1], got {alpha0}")));
        }
        if saddles.is_empty() {
            return Err(Error::Validation("chain has no saddles".into()));
        }
        if turns.len() != saddles.len() {
            return Err(Error::Validation(format!(
                "{} turn signs for {} saddles",
                turns.len(),
                saddles.len()
            )));
        }
        Ok(EscapeChainSpec {
            alpha0,
            saddles,
            turns,
            wrong_turn,
        })
    }

    /// Chain with unit expansion rates and the given stability indices.
    pub fn from_rhos(alpha0: f64, rhos: &[f64]) -> Result<Self> {
        let saddles = rhos
            .iter()
            .map(|&r| Saddle::from_rho(1.0, r))
            .collect::<Result<Vec<_>>>()?;
        EscapeChainSpec::new(alpha0, saddles)
    }

    pub fn with_wrong_turn(mut self, wrong_turn: bool) -> Self {
        self.wrong_turn = wrong_turn;
        self
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn saddles(&self) -> &[Saddle] {
        &self.saddles
    }

    /// Turn sign of the connection leaving each saddle.
    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn wrong_turn(&self) -> bool {
        self.wrong_turn
    }

    pub fn len(&self) -> usize {
        self.saddles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.saddles.is_empty()
    }

    pub fn rhos(&self) -> Vec<f64> {
        self.saddles.iter().map(Saddle::rho).collect()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.saddles.iter().map(Saddle::lambda).collect()
    }

    pub fn mus(&self) -> Vec<f64> {
        self.saddles.iter().map(Saddle::mu).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("chain serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| json_error("chain", e))
    }
}

/// Map serde failures caused by our own validation to `Validation`, the rest to `Parse`.
fn json_error(what: &str, e: serde_json::Error) -> Error {
    if e.is_data() {
        Error::Validation(format!("{what}: {e}"))
    } else {
        Error::Parse {
            what: what.to_string(),
            source: e,
        }
    }
}

/// Reads and validates a chain file.
pub fn load_chain_spec(path: impl AsRef<Path>) -> Result<EscapeChainSpec> {
    let path = path.as_ref();
    let text = read(path)?;
    EscapeChainSpec::from_json(&text).map_err(|e| prefix_path(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn prefix_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        Error::Parse { what, source } => Error::Parse {
            what: format!("{what} in {}", path.display()),
            source,
        },
        other => other,
    }
}

/// Saddles met in order along one cell boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellCycle {
    pub saddles: Vec<Saddle>,
}

impl CellCycle {
    pub fn new(saddles: Vec<Saddle>) -> Result<Self> {
        if saddles.is_empty() {
            return Err(Error::Validation("cell cycle has no saddles".into()));
        }
        Ok(CellCycle { saddles })
    }

    pub fn len(&self) -> usize {
        self.saddles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.saddles.is_empty()
    }

    pub fn contains(&self, s: &Saddle) -> bool {
        self.saddles.iter().any(|c| c.matches(s))
    }
}

/// One inter-cell crossing: leave cell `from` along `chain` into cell `to`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Escape {
    pub from: usize,
    pub chain: EscapeChainSpec,
    pub to: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicNetworkSpec {
    pub cells: Vec<CellCycle>,
    #[serde(default)]
    pub escapes: Vec<Escape>,
}

impl PeriodicNetworkSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| json_error("network", e))
    }
}

/// Reads a network file and rejects it if [`validate_network`] reports anything.
pub fn load_network(path: impl AsRef<Path>) -> Result<PeriodicNetworkSpec> {
    let path = path.as_ref();
    let text = read(path)?;
    let spec = PeriodicNetworkSpec::from_json(&text).map_err(|e| prefix_path(path, e))?;
    let diags = validate_network(&spec);
    if diags.is_empty() {
        Ok(spec)
    } else {
        let msgs: Vec<String> = diags.iter().map(ToString::to_string).collect();
        Err(Error::Validation(format!("{}: {}", path.display(), msgs.join("; "))))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    NoCells,
    EmptyCycle,
    IndexOutOfRange,
    SaddleNotOnBoundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Structural checks on a network. An empty result means every invariant holds.
pub fn validate_network(spec: &PeriodicNetworkSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if spec.cells.is_empty() {
        out.push(Diagnostic {
            kind: DiagnosticKind::NoCells,
            location: "cells".into(),
            message: "network has no cells".into(),
        });
    }
    for (i, cell) in spec.cells.iter().enumerate() {
        if cell.is_empty() {
            out.push(Diagnostic {
                kind: DiagnosticKind::EmptyCycle,
                location: format!("cells[{i}]"),
                message: "cell cycle has no saddles".into(),
            });
        }
    }
    let ncells = spec.cells.len();
    for (e, esc) in spec.escapes.iter().enumerate() {
        for (field, idx) in [("from", esc.from), ("to", esc.to)] {
            if idx >= ncells {
                out.push(Diagnostic {
                    kind: DiagnosticKind::IndexOutOfRange,
                    location: format!("escapes[{e}].{field}"),
                    message: format!("cell index {idx} out of range for {ncells} cells"),
                });
            }
        }
        if let Some(cell) = spec.cells.get(esc.from) {
            for (k, s) in esc.chain.saddles().iter().enumerate() {
                if !cell.contains(s) {
                    out.push(Diagnostic {
                        kind: DiagnosticKind::SaddleNotOnBoundary,
                        location: format!("escapes[{e}].chain.saddles[{k}]"),
                        message: format!("saddle {} is not on the boundary of cell {}", describe(s), esc.from),
                    });
                }
            }
        }
    }
    out
}

fn describe(s: &Saddle) -> String {
    match s.name() {
        Some(n) => format!("{n} (lambda={}, mu={})", s.lambda(), s.mu()),
        None => format!("(lambda={}, mu={})", s.lambda(), s.mu()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_saddle_chain() {
        let c = EscapeChainSpec::from_json(r#"{"alpha0":1.0,"saddles":[{"lambda":1.0,"mu":0.5}]}"#).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.rhos(), vec![0.5]);
        assert!(c.wrong_turn());
    }

    #[test]
    fn two_saddle_chain() {
        let c = EscapeChainSpec::from_json(
            r#"{"alpha0":1.0,"saddles":[{"lambda":1.0,"mu":0.5},{"lambda":2.0,"mu":1.0}]}"#,
        )
        .unwrap();
        assert_eq!(c.rhos(), vec![0.5, 0.5]);
    }

    #[test]
    fn alpha0_zero_rejected() {
        let e = EscapeChainSpec::from_json(r#"{"alpha0":0.0,"saddles":[{"lambda":1.0,"mu":0.5}]}"#).unwrap_err();
        assert!(matches!(e, Error::Validation(_)), "{e}");
    }

    #[test]
    fn bad_rates_and_empty_chain_rejected() {
        for text in [
            r#"{"alpha0":1.0,"saddles":[{"lambda":0.0,"mu":0.5}]}"#,
            r#"{"alpha0":1.0,"saddles":[{"lambda":1.0,"mu":-1}]}"#,
            r#"{"alpha0":1.0,"saddles":[]}"#,
            r#"{"alpha0":1.5,"saddles":[{"lambda":1.0,"mu":0.5}]}"#,
        ] {
            assert!(matches!(EscapeChainSpec::from_json(text), Err(Error::Validation(_))), "{text}");
        }
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(EscapeChainSpec::from_json("{alpha0:"), Err(Error::Parse { .. })));
    }

    #[test]
    fn turn_signs_parse() {
        let c = EscapeChainSpec::from_json(
            r#"{"alpha0":1,"saddles":[{"lambda":1,"mu":0.5,"turn":-1},{"lambda":1,"mu":2}],"wrong_turn":false}"#,
        )
        .unwrap();
        assert_eq!(c.turns(), &[Turn::Opposite, Turn::Same]);
        assert!(!c.wrong_turn());
        assert!(EscapeChainSpec::from_json(r#"{"alpha0":1,"saddles":[{"lambda":1,"mu":0.5,"turn":0}]}"#).is_err());
    }

    #[test]
    fn rho_is_derived_not_read() {
        let e = EscapeChainSpec::from_json(r#"{"alpha0":1,"saddles":[{"lambda":1,"mu":0.5,"rho":3}]}"#);
        assert!(e.is_err());
    }

    fn named(name: &str, lambda: f64, rho: f64) -> Saddle {
        Saddle::from_rho(lambda, rho).unwrap().with_name(name)
    }

    #[test]
    fn out_of_range_escape_reported_once() {
        let cell = CellCycle::new(vec![named("A", 1.0, 0.5)]).unwrap();
        let chain = EscapeChainSpec::new(1.0, vec![named("A", 1.0, 0.5)]).unwrap();
        let spec = PeriodicNetworkSpec {
            cells: vec![cell.clone(), cell],
            escapes: vec![Escape { from: 0, chain, to: 99 }],
        };
        let d = validate_network(&spec);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::IndexOutOfRange);
        assert!(d[0].location.contains("escapes[0].to"));
    }

    #[test]
    fn empty_network_reported() {
        let d = validate_network(&PeriodicNetworkSpec::default());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::NoCells);
    }

    #[test]
    fn foreign_saddle_reported() {
        let cell = CellCycle::new(vec![named("A", 1.0, 0.5)]).unwrap();
        let chain = EscapeChainSpec::new(1.0, vec![named("B", 1.0, 0.5)]).unwrap();
        let spec = PeriodicNetworkSpec {
            cells: vec![cell],
            escapes: vec![Escape { from: 0, chain, to: 0 }],
        };
        let d = validate_network(&spec);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::SaddleNotOnBoundary);
    }
}
