use loadfc::gbdt::{
    fit_gbm, fit_gbm_lss, gaussian_nll, gaussian_nll_derivatives, BoostConfig, Booster, DartConfig, Objective,
};
use loadfc::{FeatureMatrixF64, TimeIndex, TimePoint};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn matrix(cols: Vec<Vec<f64>>) -> FeatureMatrixF64 {
    let n = cols[0].len();
    let idx = TimeIndex::hourly(TimePoint::new(2021, 1, 1, 1).unwrap(), n);
    let names = (0..cols.len()).map(|i| format!("x{i}")).collect();
    let w = vec![0; cols.len()];
    FeatureMatrixF64::new(idx, names, cols, w).unwrap()
}

fn toy(n: usize, seed: u64) -> (FeatureMatrixF64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let y = a.iter().zip(&b).map(|(a, b)| a.sin() * 2.0 + 3.0 * b + rng.gen_range(-0.1..0.1)).collect();
    (matrix(vec![a, b]), y)
}

fn cfg(iters: usize) -> BoostConfig {
    BoostConfig { num_iterations: iters, learning_rate: 0.1, max_leaves: 8, min_samples_leaf: 3, ..Default::default() }
}

#[test]
fn dart_without_drops_is_plain_boosting() {
    let (fm, y) = toy(300, 1);
    let dart = BoostConfig { dart: DartConfig { enabled: true, drop_rate: 0.0, fallback_one: false, rng_seed: 9 }, ..cfg(40) };
    for lss in [false, true] {
        let fit = |c: &BoostConfig| if lss { fit_gbm_lss(&fm, &y, c) } else { fit_gbm(&fm, &y, c) };
        let plain = fit(&cfg(40)).unwrap();
        let dropped = fit(&dart).unwrap();
        assert_eq!(plain.trees, dropped.trees);
        assert_eq!(plain.scales, dropped.scales);
        assert_eq!(plain.train_loss, dropped.train_loss);
        assert_eq!(plain.raw_output(&fm, 0).unwrap(), dropped.raw_output(&fm, 0).unwrap());
    }
}

#[test]
fn single_drop_halves_scales() {
    let (fm, y) = toy(200, 2);
    let c = cfg(0);
    let mut b = Booster::new(&fm, &y, Objective::L2, c).unwrap();
    b.step_with_drop(&[]);
    b.step_with_drop(&[0]);
    assert_eq!(b.scales(), &[0.05, 0.05]);
    b.step_with_drop(&[0, 1]);
    let third = 0.05 * (2.0 / 3.0);
    let s = b.scales();
    assert!((s[0] - third).abs() < 1e-15 && (s[1] - third).abs() < 1e-15);
    assert!((s[2] - 0.1 / 3.0).abs() < 1e-15);
}

#[test]
fn booster_predictions_track_the_ensemble() {
    let (fm, y) = toy(250, 3);
    let mut b = Booster::new(&fm, &y, Objective::GaussianNll, cfg(0)).unwrap();
    for i in 0..12 {
        let drop: Vec<usize> = if i % 3 == 2 { vec![0, i / 2] } else { vec![] };
        let mut drop = drop;
        drop.dedup();
        b.step_with_drop(&drop);
    }
    let loss = b.current_loss();
    let m = b.finish();
    let mu = m.raw_output(&fm, 0).unwrap();
    let s = m.raw_output(&fm, 1).unwrap();
    let direct = y.iter().zip(mu.iter().zip(&s)).map(|(y, (m, s))| gaussian_nll(*y, *m, *s)).sum::<f64>() / y.len() as f64;
    assert!((direct - loss).abs() < 1e-9 * direct.abs().max(1.0));
}

#[test]
fn nll_gradients_match_central_differences_at_100_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-3);
    for _ in 0..100 {
        let y: f64 = rng.gen_range(-5.0..5.0);
        let mu: f64 = rng.gen_range(-5.0..5.0);
        let s: f64 = rng.gen_range(-1.5..1.5);
        let (gm, gs, hm, hs) = gaussian_nll_derivatives(y, mu, s);
        let e = 1e-5;
        let fd_mu = (gaussian_nll(y, mu + e, s) - gaussian_nll(y, mu - e, s)) / (2.0 * e);
        let fd_s = (gaussian_nll(y, mu, s + e) - gaussian_nll(y, mu, s - e)) / (2.0 * e);
        let fd_hm = (gaussian_nll_derivatives(y, mu + e, s).0 - gaussian_nll_derivatives(y, mu - e, s).0) / (2.0 * e);
        let fd_hs = (gaussian_nll_derivatives(y, mu, s + e).1 - gaussian_nll_derivatives(y, mu, s - e).1) / (2.0 * e);
        assert!(rel(gm, fd_mu) < 1e-6, "d/dmu at ({y}, {mu}, {s})");
        assert!(rel(gs, fd_s) < 1e-6, "d/ds at ({y}, {mu}, {s})");
        assert!(rel(hm, fd_hm) < 1e-6, "d2/dmu2 at ({y}, {mu}, {s})");
        assert!(rel(hs, fd_hs) < 1e-6, "d2/ds2 at ({y}, {mu}, {s})");
    }
}

#[test]
fn lss_recovers_gaussian_mle_without_splits() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let normal = Normal::new(12.0, 3.0).unwrap();
    let y: Vec<f64> = (0..2000).map(|_| normal.sample(&mut rng)).collect();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let fm = matrix(vec![vec![1.0; y.len()]]);
    let m = fit_gbm_lss(&fm, &y, &cfg(100)).unwrap();
    let d = m.predict_dist(&fm).unwrap();
    assert!(((d.mean[0] - mean) / mean).abs() < 0.02);
    assert!(((d.stddev[0] - sd) / sd).abs() < 0.02);
}

#[test]
fn row_order_does_not_change_the_model() {
    let (fm, y) = toy(300, 8);
    let mut perm: Vec<usize> = (0..300).collect();
    perm.reverse();
    perm.rotate_left(77);
    let cols: Vec<Vec<f64>> = fm.columns().iter().map(|c| perm.iter().map(|&r| c[r]).collect()).collect();
    let yp: Vec<f64> = perm.iter().map(|&r| y[r]).collect();
    let a = fit_gbm(&fm, &y, &cfg(30)).unwrap();
    let b = fit_gbm(&matrix(cols), &yp, &cfg(30)).unwrap();
    let pa = a.raw_output(&fm, 0).unwrap();
    let pb = b.raw_output(&fm, 0).unwrap();
    for (u, v) in pa.iter().zip(&pb) {
        assert!((u - v).abs() < 1e-9);
    }
}

#[test]
fn log_scale_step_is_capped() {
    let (fm, mut y) = toy(400, 4);
    // a block of near-exact targets invites a huge Newton step on ln sigma
    for v in y.iter_mut().take(200) {
        *v = (*v * 1e3).round() / 1e3;
    }
    let c = BoostConfig { learning_rate: 1.0, max_log_scale_step: 0.5, ..cfg(3) };
    let m = fit_gbm_lss(&fm, &y, &c).unwrap();
    let s = m.raw_output(&fm, 1).unwrap();
    let base = m.base_scores[1];
    assert!(s.iter().all(|v| (v - base).abs() <= 3.0 * 0.5 + 1e-12));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dart_scales_stay_in_unit_interval(seed in 0u64..1000, rate in 0.0f64..0.9, lr in 0.01f64..1.0) {
        let (fm, y) = toy(80, seed);
        let c = BoostConfig {
            learning_rate: lr,
            dart: DartConfig { enabled: true, drop_rate: rate, fallback_one: true, rng_seed: seed },
            ..cfg(15)
        };
        let m = fit_gbm(&fm, &y, &c).unwrap();
        prop_assert_eq!(m.scales.len(), 15);
        prop_assert!(m.scales.iter().all(|&s| s > 0.0 && s <= 1.0));
    }

    #[test]
    fn plain_training_loss_never_increases(seed in 0u64..1000, lss in any::<bool>()) {
        let (fm, y) = toy(120, seed);
        let m = if lss { fit_gbm_lss(&fm, &y, &cfg(20)) } else { fit_gbm(&fm, &y, &cfg(20)) }.unwrap();
        if !lss {
            for w in m.train_loss.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
        }
        prop_assert!(m.predict_dist(&fm).map(|d| d.stddev.iter().all(|&s| s > 0.0)).unwrap_or(!lss));
    }
}
