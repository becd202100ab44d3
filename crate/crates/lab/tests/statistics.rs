use hetlab_core::kernel::{typical_exit_law, SaddleBox};
use hetlab_core::network::Saddle;
use hetlab_lab::estimate::{estimate_event, EstimateRow};
use hetlab_lab::fit::fit_power_law;
use hetlab_lab::histogram::histogram_vs_density;
use hetlab_lab::stats::{ks_statistic, wilson, Z95};
use hetlab_sim::path_rng;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

#[test]
fn bernoulli_estimate_and_interval_width() {
    let n = 100_000;
    let row = estimate_event(0.1, n, 7, 0, |rng| Ok(rng.random::<f64>() < 0.3)).unwrap();
    assert!(row.ci_low <= row.p_hat && row.p_hat <= row.ci_high, "{row:?}");
    assert!((row.p_hat - 0.3).abs() < 4.0 * (0.21 / n as f64).sqrt(), "{row:?}");
    let width = row.ci_high - row.ci_low;
    let want = 2.0 * Z95 * (0.3 * 0.7 / n as f64).sqrt();
    assert!((width / want - 1.0).abs() < 0.02, "width {width} want {want}");
    assert_eq!(row.timeouts, 0);
    assert_eq!(row.n, n);
}

#[test]
fn wilson_coverage_is_calibrated() {
    let (p, n) = (0.3, 1000u64);
    let mut rng = path_rng(2024, 0);
    let covered = (0..1000)
        .filter(|_| {
            let hits = Binomial::new(n, p).unwrap().sample(&mut rng);
            let (lo, hi) = wilson(hits, n, Z95);
            lo <= p && p <= hi
        })
        .count();
    assert!((930..=970).contains(&covered), "coverage {covered} / 1000");
}

#[test]
fn noisy_power_law_recovers_exponent() {
    let eps = [0.2, 0.1, 0.05, 0.025];
    let n = 1_000_000u64;
    let seeds = 200;
    let good = (0..seeds)
        .filter(|&s| {
            let mut rng = path_rng(99, s);
            let rows: Vec<_> = eps
                .iter()
                .map(|&e| EstimateRow::from_counts(e, Binomial::new(n, 0.2 * e).unwrap().sample(&mut rng), n, 0))
                .collect();
            (fit_power_law(&rows).unwrap().theta_hat - 1.0).abs() <= 0.1
        })
        .count();
    assert!(good as f64 >= 0.95 * seeds as f64, "{good} of {seeds} fits within 0.1");
}

proptest! {
    #[test]
    fn fit_is_scale_equivariant(
        hits in prop::collection::vec(20u64..50_000, 4),
        k in 0.01f64..100.0,
    ) {
        let eps = [0.3, 0.1, 0.04, 0.01];
        let rows: Vec<_> = eps.iter().zip(&hits).map(|(&e, &h)| EstimateRow::from_counts(e, h, 100_000, 0)).collect();
        let scaled: Vec<_> = rows.iter().map(|r| EstimateRow { p_hat: k * r.p_hat, ..*r }).collect();
        let (a, b) = (fit_power_law(&rows).unwrap(), fit_power_law(&scaled).unwrap());
        prop_assert!((a.theta_hat - b.theta_hat).abs() < 1e-9);
        prop_assert!((b.h_hat.ln() - a.h_hat.ln() - k.ln()).abs() < 1e-9);
    }
}

#[test]
fn ks_null_calibration() {
    // samples from the law itself: p-values over repeated seeds look uniform
    let saddle = Saddle::new(1.0, 2.0).unwrap();
    let law = typical_exit_law(1.0, 0.0, 1e-3, &saddle, &SaddleBox::default()).unwrap();
    let mut pvals: Vec<f64> = (0..100)
        .map(|s| {
            let mut rng = path_rng(5, s);
            let xs: Vec<f64> = (0..10_000).map(|_| law.sample_conditional(&mut rng)).collect();
            histogram_vs_density(&xs, &law).unwrap().ks_p_value.unwrap()
        })
        .collect();
    pvals.sort_by(f64::total_cmp);
    let d = ks_statistic(&pvals, |p| p.clamp(0.0, 1.0));
    // 1% critical value for 100 samples
    assert!(d < 0.163, "p-values deviate from uniform: D = {d}");
}

#[test]
fn histogram_distance_shrinks_with_matching_law() {
    let saddle = Saddle::new(1.0, 0.5).unwrap();
    let sbox = SaddleBox::default();
    let law = typical_exit_law(0.5, 1.0, 1e-3, &saddle, &sbox).unwrap();
    let mut rng = path_rng(6, 0);
    let xs: Vec<f64> = (0..100_000).map(|_| law.sample_conditional(&mut rng)).collect();
    let m = histogram_vs_density(&xs, &law).unwrap();
    assert!(m.l1 < 0.03, "{m:?}");
    assert!(m.ks.unwrap() < 0.01);
    let other = typical_exit_law(0.5, 2.0, 1e-3, &saddle, &sbox).unwrap();
    assert!(histogram_vs_density(&xs, &other).unwrap().l1 > 0.3);
    // rho = 1 has no closed form; the reference sample path is used
    let mixed = typical_exit_law(1.0, 0.5, 1e-2, &Saddle::new(1.0, 1.0).unwrap(), &sbox).unwrap();
    let ys: Vec<f64> = (0..20_000).map(|_| mixed.sample_conditional(&mut rng)).collect();
    let m = histogram_vs_density(&ys, &mixed).unwrap();
    assert!(m.ks.is_none());
    assert!(m.l1 < 0.1, "{m:?}");
    assert!(histogram_vs_density(&ys[..100], &mixed).is_err());
}
