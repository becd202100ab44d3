//! The mirrored four-saddle cellular flow, tiled on a torus of `cols x rows` cells.
//!
//! Every cell is bounded by the cycle `O0 -> O1 -> O2 -> O3 -> O0`; neighbouring
//! cells are mirror images, so the saddles are shared by name. Cell `(i, j)`
//! has index `j * cols + i`.

use hetlab_core::network::{CellCycle, Escape, EscapeChainSpec, PeriodicNetworkSpec, Saddle};
use hetlab_core::{Error, Result};

use crate::weights::periodic_alphas;

/// Escape from a cell past saddle `O_k`, `k = 0..4`, in the order the
/// crossings become likely: `k = 0` crosses the connection out of `O0`, and
/// `k >= 1` takes the wrong turn after the connection out of `O_k`.
pub fn escape_chain(saddles: &[Saddle; 4], alphas: &[f64], k: usize) -> Result<EscapeChainSpec> {
    match k {
        0 => EscapeChainSpec::new(alphas[3], vec![saddles[0].clone(), saddles[1].clone()]),
        1..=3 => EscapeChainSpec::new(alphas[0], (1..=k + 1).map(|i| saddles[i % 4].clone()).collect()),
        _ => Err(Error::Validation(format!("escape kind {k} out of range 0..4"))),
    }
}

/// `saddles` are `O0..O3`; names `O0`..`O3` are filled in when missing.
pub fn mirrored_torus(saddles: [Saddle; 4], cols: usize, rows: usize) -> Result<PeriodicNetworkSpec> {
    if cols < 2 || rows < 2 || cols % 2 != 0 || rows % 2 != 0 {
        return Err(Error::Validation(format!("torus needs even sizes >= 2, got {cols} x {rows}")));
    }
    let saddles: [Saddle; 4] = std::array::from_fn(|k| match saddles[k].name() {
        Some(_) => saddles[k].clone(),
        None => saddles[k].clone().with_name(format!("O{k}")),
    });
    let cycle = CellCycle::new(saddles.to_vec())?;
    let alphas = periodic_alphas(&cycle)?;
    let chains = (0..4).map(|k| escape_chain(&saddles, &alphas, k)).collect::<Result<Vec<_>>>()?;
    let idx = |i: usize, j: usize| (j % rows) * cols + (i % cols);
    let mut escapes = Vec::new();
    for j in 0..rows {
        for i in 0..cols {
            let (right, left) = ((i + 1) % cols, (i + cols - 1) % cols);
            let (up, down) = ((j + 1) % rows, (j + rows - 1) % rows);
            // odd columns cross the O0 connection to the right, even ones to the left
            let across0 = if i % 2 == 1 { right } else { left };
            let across2 = if i % 2 == 1 { left } else { right };
            let across1 = if j % 2 == 0 { down } else { up };
            let across3 = if j % 2 == 0 { up } else { down };
            for (k, to) in [(0, idx(across0, j)), (1, idx(i, across1)), (2, idx(across2, j)), (3, idx(i, across3))] {
                escapes.push(Escape {
                    from: idx(i, j),
                    chain: chains[k].clone(),
                    to,
                });
            }
        }
    }
    Ok(PeriodicNetworkSpec {
        cells: vec![cycle; cols * rows],
        escapes,
    })
}
