//! Brute-force forms of the binding set and effective exponents, used as
//! independent oracles for the record-scan algorithms in `hetlab-core`.

use hetlab_core::exponents::{alpha_sequence, bar_alpha, binding_set, kappa};
use hetlab_core::Result;

/// `k` binds iff `rho_{kj} < 1` for every later `j`, by direct multiplication.
pub fn binding_by_definition(rhos: &[f64], kappa: usize) -> Vec<usize> {
    let n = rhos.len();
    (kappa + 1..n)
        .filter(|&k| {
            let mut p = 1.0;
            (k + 1..n).all(|j| {
                p *= rhos[j - 1];
                p < 1.0
            })
        })
        .collect()
}

/// `bar_alpha_{n-1} = 1`, then 1 on `H` and `bar_alpha_{i+1} / rho_{i+1}` elsewhere.
pub fn bar_alpha_backward(rhos: &[f64], kappa: usize, h: &[usize], alpha: &[f64]) -> Vec<f64> {
    let n = rhos.len();
    let mut out = alpha[..n].to_vec();
    if kappa + 1 < n {
        out[n - 1] = 1.0;
        for i in (kappa + 1..n - 1).rev() {
            out[i] = if h.contains(&i) { 1.0 } else { out[i + 1] / rhos[i] };
        }
    }
    out
}

/// Clamped recursion `min(bar_alpha_{i+1} / rho_{i+1}, 1)`.
pub fn bar_alpha_clamped(rhos: &[f64], kappa: usize, alpha: &[f64]) -> Vec<f64> {
    let n = rhos.len();
    let mut out = alpha[..n].to_vec();
    if kappa + 1 < n {
        out[n - 1] = 1.0;
        for i in (kappa + 1..n - 1).rev() {
            out[i] = (out[i + 1] / rhos[i]).min(1.0);
        }
    }
    out
}

/// Largest discrepancy between the library and the brute-force forms on one chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Agreement {
    pub binding_equal: bool,
    pub max_rel_backward: f64,
    pub max_rel_clamped: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

/// `None` when kappa is undefined and there is nothing to compare.
pub fn compare_constructions(alpha0: f64, rhos: &[f64]) -> Result<Option<Agreement>> {
    let n = rhos.len();
    let alpha = alpha_sequence(alpha0, rhos)?;
    let Some(k) = kappa(&alpha) else {
        return Ok(None);
    };
    let h = binding_set(rhos, k, n);
    let ba = bar_alpha(rhos, Some(k), &h, &alpha)?;
    let back = bar_alpha_backward(rhos, k, &h, &alpha);
    let clamp = bar_alpha_clamped(rhos, k, &alpha);
    Ok(Some(Agreement {
        binding_equal: h == binding_by_definition(rhos, k),
        max_rel_backward: ba.iter().zip(&back).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max),
        max_rel_clamped: ba.iter().zip(&clamp).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_chain() {
        // rho = (0.5, 4, 0.5): products from k = 1 are 4, 2 so only k = 2 binds
        assert_eq!(binding_by_definition(&[0.5, 4.0, 0.5], 0), vec![2]);
        let a = compare_constructions(1.0, &[0.5, 4.0, 0.5]).unwrap().unwrap();
        assert!(a.binding_equal && a.max_rel_backward == 0.0 && a.max_rel_clamped == 0.0);
    }

    #[test]
    fn undefined_kappa() {
        assert_eq!(compare_constructions(0.5, &[0.5, 0.5]).unwrap(), None);
    }
}
