//! Escape exponents sorted into a ladder of timescales `eps^{-theta} l_eps`,
//! with the cells merged into clusters as each level switches on.
//!
//! Cluster weights are an equal mixture of the member cells' cycle weights.
//! The whole construction is a heuristic reading of the cell dynamics, not a
//! theorem, and every report says so.

use std::collections::BTreeMap;

use hetlab_core::exponents::{classify_escape, Regime};
use hetlab_core::network::{validate_network, PeriodicNetworkSpec};
use hetlab_core::{Error, Result};
use serde::Serialize;

use crate::weights::cycle_invariant_weights;

/// Exponents closer than this form one level.
pub const LEVEL_TOL: f64 = 1e-9;

pub const HEURISTIC_NOTE: &str =
    "heuristic: cluster weights mix member cycles equally; the ladder is not backed by a limit theorem";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HierarchyReport {
    pub heuristic: bool,
    pub note: &'static str,
    /// `None` for the base level, where no escape is active yet.
    pub levels: Vec<Option<f64>>,
    /// Escape indices whose exponent belongs to each level.
    pub escapes_at_level: Vec<Vec<usize>>,
    /// Sorted cell indices of every cluster, clusters ordered by smallest cell.
    pub clusters_at_level: Vec<Vec<Vec<usize>>>,
    /// For every cluster, the weight of each saddle, keyed by saddle name.
    pub weights: Vec<Vec<BTreeMap<String, f64>>>,
    /// Escape exponent of each escape, in input order.
    pub escape_theta: Vec<f64>,
}

impl HierarchyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so cluster ids do not depend on union order
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }

    fn clusters(&mut self) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..self.parent.len() {
            let r = self.find(x);
            by_root.entry(r).or_default().push(x);
        }
        by_root.into_values().collect()
    }
}

/// Saddle key: its name, or `cell{c}.saddle{k}` for unnamed saddles.
fn saddle_key(network: &PeriodicNetworkSpec, cell: usize, k: usize) -> String {
    match network.cells[cell].saddles[k].name() {
        Some(n) => n.to_string(),
        None => format!("cell{cell}.saddle{k}"),
    }
}

fn cluster_weights(network: &PeriodicNetworkSpec, cell_weights: &[Vec<f64>], cluster: &[usize]) -> BTreeMap<String, f64> {
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    let share = 1.0 / cluster.len() as f64;
    for &c in cluster {
        for (k, w) in cell_weights[c].iter().enumerate() {
            *out.entry(saddle_key(network, c, k)).or_default() += share * w;
        }
    }
    out
}

/// Escape exponent, with positive-limit escapes at `theta = 0`.
fn escape_theta(network: &PeriodicNetworkSpec, e: usize) -> Result<f64> {
    let report = classify_escape(&network.escapes[e].chain)?;
    match report.regime {
        Regime::PowerLaw | Regime::PositiveLimit => Ok(report.theta.expect("polynomial regimes carry theta")),
        Regime::Superpolynomial => Err(Error::Regime {
            expected: "power-law or positive-limit",
            actual: format!("{} for escapes[{e}]", report.regime),
        }),
    }
}

pub fn timescale_ladder(network: &PeriodicNetworkSpec) -> Result<HierarchyReport> {
    let diags = validate_network(network);
    if !diags.is_empty() {
        let msgs: Vec<String> = diags.iter().map(ToString::to_string).collect();
        return Err(Error::Validation(msgs.join("; ")));
    }
    let thetas = (0..network.escapes.len())
        .map(|e| escape_theta(network, e))
        .collect::<Result<Vec<f64>>>()?;
    let cell_weights = network
        .cells
        .iter()
        .map(cycle_invariant_weights)
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = (0..thetas.len()).collect();
    order.sort_by(|&a, &b| thetas[a].total_cmp(&thetas[b]).then(a.cmp(&b)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for e in order {
        match groups.last_mut() {
            Some((level, members)) if thetas[e] - *level <= LEVEL_TOL => members.push(e),
            _ => groups.push((thetas[e], vec![e])),
        }
    }

    let mut uf = UnionFind::new(network.cells.len());
    let mut levels = vec![None];
    let mut escapes_at_level = vec![Vec::new()];
    let mut clusters_at_level = vec![uf.clusters()];
    for (theta, members) in groups {
        for &e in &members {
            uf.union(network.escapes[e].from, network.escapes[e].to);
        }
        levels.push(Some(theta));
        escapes_at_level.push(members);
        clusters_at_level.push(uf.clusters());
    }
    let weights = clusters_at_level
        .iter()
        .map(|cl| cl.iter().map(|c| cluster_weights(network, &cell_weights, c)).collect())
        .collect();
    Ok(HierarchyReport {
        heuristic: true,
        note: HEURISTIC_NOTE,
        levels,
        escapes_at_level,
        clusters_at_level,
        weights,
        escape_theta: thetas,
    })
}
