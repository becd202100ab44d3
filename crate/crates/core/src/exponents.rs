//! Exponent calculus for cell-escape chains.
//!
//! Indexing follows the chain: saddles are `O_1..O_n`, `rhos[k - 1]` is `rho_k`,
//! and `alpha[k]` is the exponent after leaving `O_k` (so `alpha[0] = alpha0`).
//! Index sets `H`, `H'`, `J` hold saddle indices in `0..=n`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::EscapeChainSpec;

/// Typical exponents `alpha_k = min(alpha_{k-1} rho_k, 1)`, length `n + 1`.
pub fn alpha_sequence(alpha0: f64, rhos: &[f64]) -> Result<Vec<f64>> {
    if !(alpha0 > 0.0 && alpha0 <= 1.0) {
        return Err(Error::Domain(format!("alpha0 must lie in (0, 1], got {alpha0}")));
    }
    if let Some(r) = rhos.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::Domain(format!("stability index must be finite and > 0, got {r}")));
    }
    let mut alpha = Vec::with_capacity(rhos.len() + 1);
    alpha.push(alpha0);
    for &r in rhos {
        let prev = *alpha.last().unwrap();
        alpha.push((prev * r).min(1.0));
    }
    Ok(alpha)
}

/// Largest `k <= n - 1` with `alpha_k == 1`, where `alpha` has length `n + 1`.
pub fn kappa(alpha: &[f64]) -> Option<usize> {
    let n = alpha.len().checked_sub(1)?;
    (0..n).rev().find(|&k| alpha[k] == 1.0)
}

/// Products `rho_{kj} = rho_{k+1} ... rho_j`, accumulated in the log domain.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoProducts {
    logs: Vec<f64>,
}

impl RhoProducts {
    pub fn new(rhos: &[f64]) -> Self {
        RhoProducts {
            logs: rhos.iter().map(|r| r.ln()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.logs.len()
    }

    /// `log rho_{kj}`, zero when `j <= k`. Summed from `k + 1` upward so that
    /// exactly reciprocal factors cancel exactly.
    pub fn log_rho(&self, k: usize, j: usize) -> f64 {
        if j <= k {
            return 0.0;
        }
        self.logs[k..j].iter().sum()
    }

    pub fn rho(&self, k: usize, j: usize) -> f64 {
        self.log_rho(k, j).exp()
    }
}

/// Binding set `H` by the record-point scan from `n - 1` downward.
///
/// `k` is binding when `rho_{kj} < 1` for every `j` in `k+1..=n-1`; ties are not binding.
pub fn binding_set(rhos: &[f64], kappa: usize, n: usize) -> Vec<usize> {
    debug_assert_eq!(rhos.len(), n);
    if n == 0 || kappa >= n - 1 {
        return Vec::new();
    }
    let logs: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
    let mut h = vec![n - 1];
    let mut j = n - 1;
    loop {
        // largest i in kappa+1..j with rho_{ij} < 1
        let mut acc = 0.0;
        let mut next = None;
        for i in (kappa + 1..j).rev() {
            acc += logs[i];
            if acc < 0.0 {
                next = Some(i);
                break;
            }
        }
        match next {
            Some(i) => {
                h.push(i);
                j = i;
            }
            None => break,
        }
    }
    h.reverse();
    h
}

/// `H' = H ∪ {kappa} \ {n - 1}`, sorted.
pub fn h_prime(h: &[usize], kappa: usize, n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = h.iter().copied().filter(|&k| k + 1 != n).collect();
    if kappa + 1 != n && !out.contains(&kappa) {
        out.push(kappa);
    }
    out.sort_unstable();
    out
}

/// Slowdown set `J = H' + 1`.
pub fn slowdown_set(h_prime: &[usize]) -> Vec<usize> {
    h_prime.iter().map(|k| k + 1).collect()
}

/// Effective exponents `bar_alpha_0..bar_alpha_{n-1}`.
///
/// Equal to `alpha_i` up to `kappa`, and to `1 / rho_{i,k(i)}` beyond it, with
/// `k(i)` the first binding index at or after `i`.
pub fn bar_alpha(rhos: &[f64], kappa: Option<usize>, h: &[usize], alpha: &[f64]) -> Result<Vec<f64>> {
    let kappa = kappa.ok_or(Error::KappaUndefined)?;
    let n = rhos.len();
    let prod = RhoProducts::new(rhos);
    let mut out = Vec::with_capacity(n);
    out.extend_from_slice(&alpha[..=kappa]);
    for i in kappa + 1..n {
        let k = h
            .iter()
            .copied()
            .find(|&k| k >= i)
            .ok_or_else(|| Error::Domain(format!("no binding index at or after {i}")))?;
        out.push((-prod.log_rho(i, k)).exp());
    }
    Ok(out)
}

fn require_kappa(kappa: Option<usize>) -> Result<usize> {
    kappa.ok_or(Error::KappaUndefined)
}

/// Escape exponent `theta = sum over J of (bar_alpha_i / rho_i - 1)`.
pub fn theta(rhos: &[f64], kappa: Option<usize>, j_set: &[usize], bar_alpha: &[f64]) -> Result<f64> {
    require_kappa(kappa)?;
    // fold from +0.0: an empty float `sum` is -0.0
    Ok(j_set.iter().fold(0.0, |acc, &i| acc + (bar_alpha[i] / rhos[i - 1] - 1.0)))
}

/// Partial sums `theta_k` for `k = 0..=n`.
pub fn theta_partial(rhos: &[f64], kappa: Option<usize>, j_set: &[usize], bar_alpha: &[f64]) -> Result<Vec<f64>> {
    require_kappa(kappa)?;
    let n = rhos.len();
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for k in 0..=n {
        if j_set.contains(&k) {
            acc += bar_alpha[k] / rhos[k - 1] - 1.0;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Time constant of the conditional escape time, in units of `log(1/eps)`.
pub fn chi_bar(
    kappa: Option<usize>,
    j_set: &[usize],
    bar_alpha: &[f64],
    lambdas: &[f64],
    mus: &[f64],
) -> Result<f64> {
    let kappa = require_kappa(kappa)?;
    let n = lambdas.len();
    if kappa + 1 >= n {
        return Err(Error::Regime {
            expected: "PowerLaw",
            actual: "PositiveLimit".into(),
        });
    }
    let mut chi = 0.0;
    for i in 1..=n {
        chi += if j_set.contains(&i) {
            bar_alpha[i] / mus[i - 1]
        } else {
            bar_alpha[i - 1] / lambdas[i - 1]
        };
    }
    Ok(chi)
}

/// Time constant of a typical passage, `sum alpha_{k-1} / lambda_k`.
pub fn chi_typical(alpha: &[f64], lambdas: &[f64]) -> f64 {
    lambdas.iter().zip(alpha).map(|(l, a)| a / l).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    PositiveLimit,
    PowerLaw,
    Superpolynomial,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::PositiveLimit => "PositiveLimit",
            Regime::PowerLaw => "PowerLaw",
            Regime::Superpolynomial => "Superpolynomial",
        };
        f.write_str(s)
    }
}

/// Everything the exponent calculus says about one chain.
///
/// `bar_alpha` covers indices `0..n-1`; `theta`, `theta_partial` and `bar_alpha`
/// are absent when `kappa` is, and `chi_bar` is present only for power laws.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentReport {
    pub alpha: Vec<f64>,
    pub kappa: Option<usize>,
    #[serde(rename = "H")]
    pub h: Vec<usize>,
    #[serde(rename = "H_prime")]
    pub h_prime: Vec<usize>,
    #[serde(rename = "J")]
    pub j: Vec<usize>,
    pub bar_alpha: Option<Vec<f64>>,
    pub theta: Option<f64>,
    pub theta_partial: Option<Vec<f64>>,
    pub chi_bar: Option<f64>,
    pub regime: Regime,
    #[serde(skip)]
    products: RhoProducts,
}

impl ExponentReport {
    pub fn n(&self) -> usize {
        self.alpha.len() - 1
    }

    /// `rho_{kj}` for `0 <= k <= j <= n`.
    pub fn rho_product(&self, k: usize, j: usize) -> f64 {
        self.products.rho(k, j)
    }

    pub fn rho_products(&self) -> &RhoProducts {
        &self.products
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs the full calculus on a chain and classifies its escape regime.
pub fn classify_escape(spec: &EscapeChainSpec) -> Result<ExponentReport> {
    let rhos = spec.rhos();
    let n = rhos.len();
    let alpha = alpha_sequence(spec.alpha0(), &rhos)?;
    let k = kappa(&alpha);
    let products = RhoProducts::new(&rhos);
    let Some(kap) = k else {
        return Ok(ExponentReport {
            alpha,
            kappa: None,
            h: Vec::new(),
            h_prime: Vec::new(),
            j: Vec::new(),
            bar_alpha: None,
            theta: None,
            theta_partial: None,
            chi_bar: None,
            regime: Regime::Superpolynomial,
            products,
        });
    };
    let h = binding_set(&rhos, kap, n);
    let hp = h_prime(&h, kap, n);
    let j = slowdown_set(&hp);
    let ba = bar_alpha(&rhos, k, &h, &alpha)?;
    let th = theta(&rhos, k, &j, &ba)?;
    let tp = theta_partial(&rhos, k, &j, &ba)?;
    let (regime, chi) = if kap + 1 == n {
        (Regime::PositiveLimit, None)
    } else {
        let chi = chi_bar(k, &j, &ba, &spec.lambdas(), &spec.mus())?;
        (Regime::PowerLaw, Some(chi))
    };
    Ok(ExponentReport {
        alpha,
        kappa: k,
        h,
        h_prime: hp,
        j,
        bar_alpha: Some(ba),
        theta: Some(th),
        theta_partial: Some(tp),
        chi_bar: chi,
        regime,
        products,
    })
}

impl fmt::Display for ExponentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.12}"));
        writeln!(f, "regime   {}", self.regime)?;
        writeln!(f, "kappa    {}", self.kappa.map_or_else(|| "-".to_string(), |k| k.to_string()))?;
        writeln!(f, "H        {:?}", self.h)?;
        writeln!(f, "H'       {:?}", self.h_prime)?;
        writeln!(f, "J        {:?}", self.j)?;
        writeln!(f, "theta    {}", opt(self.theta))?;
        writeln!(f, "chi_bar  {}", opt(self.chi_bar))?;
        writeln!(f)?;
        writeln!(f, "{:>3}  {:>16}  {:>16}  {:>16}  {:>5}", "k", "alpha_k", "bar_alpha_k", "theta_k", "in J")?;
        for k in 0..=self.n() {
            let ba = self.bar_alpha.as_ref().and_then(|b| b.get(k).copied());
            let tp = self.theta_partial.as_ref().map(|t| t[k]);
            writeln!(
                f,
                "{:>3}  {:>16.12}  {:>16}  {:>16}  {:>5}",
                k,
                self.alpha[k],
                opt(ba),
                opt(tp),
                if self.j.contains(&k) { "*" } else { "" }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn alpha_examples() {
        let (r1, r2, r3) = (0.5, 0.6, 0.8);
        let a = alpha_sequence(1.0, &[r1, r2, r3]).unwrap();
        assert_eq!(a, vec![1.0, r1, r1 * r2, r1 * r2 * r3]);
        assert_eq!(alpha_sequence(1.0, &[2.0]).unwrap(), vec![1.0, 1.0]);
        let a = alpha_sequence(1.0, &[0.5, 1.5, 0.6]).unwrap();
        assert_eq!(a[..3], [1.0, 0.5, 0.75]);
        assert_relative_eq!(a[3], 0.45, max_relative = 1e-15);
    }

    #[test]
    fn alpha_domain_errors() {
        assert!(matches!(alpha_sequence(0.0, &[0.5]), Err(Error::Domain(_))));
        assert!(matches!(alpha_sequence(1.1, &[0.5]), Err(Error::Domain(_))));
        assert!(matches!(alpha_sequence(1.0, &[0.5, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(&[1.0, 0.5, 0.4]), Some(0));
        assert_eq!(kappa(&[1.0, 1.0, 0.7]), Some(1));
        assert_eq!(kappa(&alpha_sequence(0.5, &[0.9]).unwrap()), None);
        // alpha_n itself never counts
        assert_eq!(kappa(&[0.5, 1.0]), None);
    }

    #[test]
    fn binding_examples() {
        assert_eq!(binding_set(&[0.5, 3.0], 0, 2), vec![1]);
        assert_eq!(binding_set(&[0.5, 1.5, 0.6, 0.7], 0, 4), vec![2, 3]);
        assert!(binding_set(&[2.0, 0.5], 1, 2).is_empty());
    }

    #[test]
    fn exact_tie_is_not_binding() {
        // rho_{13} = 0.5 * 2 = 1 exactly, so 1 is not binding
        assert_eq!(binding_set(&[0.3, 0.5, 2.0, 0.9], 0, 4), vec![3]);
        assert_eq!(binding_set(&[0.3, 0.5, 1.999, 0.9], 0, 4), vec![1, 3]);
        assert_eq!(binding_set(&[0.3, 0.25, 4.0, 0.9], 0, 4), vec![3]);
        // rho_{14} = 0.5 * 0.5 * 4 = 1
        assert_eq!(binding_set(&[0.3, 0.5, 0.5, 4.0, 0.7], 0, 5), vec![4]);
    }

    #[test]
    fn bar_alpha_examples() {
        let a = alpha_sequence(1.0, &[0.5, 3.0]).unwrap();
        assert_eq!(bar_alpha(&[0.5, 3.0], Some(0), &[1], &a).unwrap(), vec![1.0, 1.0]);

        let rhos = [0.5, 1.5, 0.6, 0.7];
        let a = alpha_sequence(1.0, &rhos).unwrap();
        let ba = bar_alpha(&rhos, Some(0), &[2, 3], &a).unwrap();
        assert_eq!(ba.len(), 4);
        assert_eq!(ba[0], 1.0);
        assert_relative_eq!(ba[1], 2.0 / 3.0, max_relative = 1e-15);
        assert_eq!(ba[2], 1.0);
        assert_eq!(ba[3], 1.0);

        let a = alpha_sequence(1.0, &[2.0, 0.5]).unwrap();
        assert_eq!(bar_alpha(&[2.0, 0.5], Some(1), &[], &a).unwrap(), a[..2].to_vec());

        assert!(matches!(bar_alpha(&[0.9], None, &[], &[0.5, 0.45]), Err(Error::KappaUndefined)));
    }

    #[test]
    fn classify_examples() {
        let pos = classify_escape(&EscapeChainSpec::from_rhos(1.0, &[2.0, 0.5]).unwrap()).unwrap();
        assert_eq!(pos.regime, Regime::PositiveLimit);
        assert_eq!(pos.theta, Some(0.0));
        assert_eq!(pos.chi_bar, None);

        let spec = EscapeChainSpec::new(
            1.0,
            vec![
                crate::network::Saddle::new(1.0, 0.5).unwrap(),
                crate::network::Saddle::new(1.0, 1.0).unwrap(),
            ],
        )
        .unwrap();
        let two = classify_escape(&spec).unwrap();
        assert_eq!(two.regime, Regime::PowerLaw);
        assert_eq!(two.theta, Some(1.0));
        assert_eq!(two.chi_bar, Some(1.0 / 0.5 + 1.0 / 1.0));
        assert_eq!((two.h.clone(), two.h_prime.clone(), two.j.clone()), (vec![1], vec![0], vec![1]));

        let sup = classify_escape(&EscapeChainSpec::from_rhos(0.9, &[0.9, 0.9]).unwrap()).unwrap();
        assert_eq!(sup.regime, Regime::Superpolynomial);
        assert_eq!(sup.kappa, None);
        assert_eq!(sup.theta, None);
    }

    #[test]
    fn chi_bar_requires_power_law() {
        let e = chi_bar(Some(1), &[], &[1.0, 1.0], &[1.0, 1.0], &[2.0, 1.0]).unwrap_err();
        assert!(matches!(e, Error::Regime { .. }));
    }

    #[test]
    fn report_json_keys() {
        let r = classify_escape(&EscapeChainSpec::from_rhos(1.0, &[0.5, 1.0]).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "H",
                "H_prime",
                "J",
                "alpha",
                "bar_alpha",
                "chi_bar",
                "kappa",
                "regime",
                "theta",
                "theta_partial"
            ]
        );
        assert_eq!(v["regime"], "PowerLaw");
    }

    #[test]
    fn rho_products_accessor() {
        let r = classify_escape(&EscapeChainSpec::from_rhos(1.0, &[0.5, 1.5, 0.6, 0.7]).unwrap()).unwrap();
        assert_relative_eq!(r.rho_product(1, 2), 1.5, max_relative = 1e-15);
        assert_relative_eq!(r.rho_product(0, 3), 0.5 * 1.5 * 0.6, max_relative = 1e-15);
        assert_eq!(r.rho_product(2, 2), 1.0);
    }
}
