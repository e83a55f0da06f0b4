use loadfc::metrics::{interval_score, normal_quantile, shape, timing_final, timing_qual};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

proptest! {
    #[test]
    fn shape_ignores_positive_rescaling(
        a in prop::collection::vec(1.0f64..100.0, 48),
        f in prop::collection::vec(1.0f64..100.0, 48),
        ca in 0.01f64..100.0,
        cf in 0.01f64..100.0,
    ) {
        let base = shape(&a, &f).unwrap();
        let sa: Vec<f64> = a.iter().map(|v| v * ca).collect();
        let sf: Vec<f64> = f.iter().map(|v| v * cf).collect();
        prop_assert!((shape(&sa, &sf).unwrap() - base).abs() < 1e-9);
    }

    #[test]
    // the cost saturates at 10, so the bound holds for misses up to 10 hours
    fn weighted_timing_never_below_absolute_error(
        pairs in prop::collection::vec((1u32..=14, 0u32..=10), 1..30),
    ) {
        let (a, f): (Vec<u32>, Vec<u32>) = pairs.into_iter().map(|(a, d)| (a, a + d)).unzip();
        prop_assert!(timing_final::<f64>(&a, &f).unwrap() >= timing_qual::<f64>(&a, &f).unwrap());
    }
}

#[test]
fn true_interval_minimizes_expected_interval_score() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let z = normal_quantile(0.95).unwrap();
    let ys: Vec<f64> = (0..40_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    for scale in [0.7, 0.85, 1.2, 1.5] {
        let d: Vec<f64> = ys
            .iter()
            .map(|&y| interval_score(-scale * z, scale * z, y, 0.1).unwrap() - interval_score(-z, z, y, 0.1).unwrap())
            .collect();
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let se = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
        assert!(mean > 3.0 * se, "scale {scale}: mean gain {mean} with se {se}");
    }
}
