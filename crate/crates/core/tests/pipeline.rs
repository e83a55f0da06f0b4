use std::sync::OnceLock;

use loadfc::features::{FeatureConfig, LagSpec, RollingSpec, RollingStat};
use loadfc::pipeline::{cross_validate, retrend, train_forecaster, CvConfig, FoldLength, PipelineConfig, TrainedPipeline, TrendModel};
use loadfc::series::{extract_daily_peaks, HourlySeries, PointForecast};
use loadfc::synth::{gen_synthetic, SyntheticSpec};
use loadfc::{DatasetF64, TimeIndex, TimePoint};
use proptest::prelude::*;

fn small_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.features = FeatureConfig {
        lags: Some(LagSpec { max_lag: 3 }),
        rolling: vec![RollingSpec { stat: RollingStat::Mean, window_hours: 24 }],
        aggregates: vec![],
        ..FeatureConfig::default()
    };
    cfg.boost.num_iterations = 15;
    cfg.boost.learning_rate = 0.3;
    cfg.cv = CvConfig { n_folds: 1, fold_length: FoldLength::Years(1) };
    cfg
}

fn dataset() -> DatasetF64 {
    gen_synthetic::<f64>(&SyntheticSpec { years: 2, start_year: 2005, rng_seed: 4, ..Default::default() }).unwrap().0
}

fn trained() -> &'static TrainedPipeline<f64> {
    static MODEL: OnceLock<TrainedPipeline<f64>> = OnceLock::new();
    MODEL.get_or_init(|| {
        let ds = dataset();
        let cut = ds.index().slice(0, 24 * 90).unwrap();
        train_forecaster(&ds.restrict(&cut).unwrap(), &small_config()).unwrap()
    })
}

#[test]
fn test_block_load_does_not_reach_the_forecast() {
    let ds = dataset();
    let cfg = small_config();
    let base = cross_validate(&ds, &cfg).unwrap();
    let test = base[0].fold.test;
    let first = ds.index().position(test.start).unwrap();
    let mut values = ds.load.values().to_vec();
    for v in &mut values[first..] {
        *v = *v * 3.0 + 1000.0;
    }
    let mut tampered = ds.clone();
    tampered.load = HourlySeries::new(ds.load.name(), ds.load.start(), values).unwrap();
    let again = cross_validate(&tampered, &cfg).unwrap();
    assert_eq!(base[0].forecast, again[0].forecast);
    assert_ne!(base[0].actual, again[0].actual);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_scale_transform_is_a_bijection(
        offset in 0usize..5000,
        values in prop::collection::vec(50.0f64..5000.0, 1..200),
    ) {
        let model = trained();
        let start = TimePoint::new(2005, 1, 1, 1).unwrap().add_hours(offset as i64);
        let y = HourlySeries::new("load", start, values.clone()).unwrap();
        let back = model.inverse(&y.index(), &model.forward(&y).unwrap());
        for (a, b) in back.iter().zip(&values) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs());
        }
    }

    #[test]
    fn peak_hours_survive_exponentiation(values in prop::collection::vec(-3.0f64..3.0, 72)) {
        let index = TimeIndex::hourly(TimePoint::new(2010, 3, 1, 1).unwrap(), values.len());
        let log = extract_daily_peaks(&PointForecast::new(index, values.clone()).unwrap()).unwrap();
        let exp = extract_daily_peaks(&PointForecast::new(index, values.iter().map(|v| v.exp()).collect()).unwrap()).unwrap();
        for (a, b) in log.iter().zip(&exp) {
            prop_assert_eq!(a.peak_hour, b.peak_hour);
            prop_assert!((a.peak_value.exp() - b.peak_value).abs() <= 1e-12 * b.peak_value);
        }
    }

    #[test]
    fn clear_peaks_survive_retrending(
        values in prop::collection::vec(0.0f64..1.0, 48),
        hours in (0usize..24, 0usize..24),
        beta1 in 0.0f64..0.5,
        extra in 0.001f64..1.0,
    ) {
        let mut values = values;
        for (day, h) in [hours.0, hours.1].into_iter().enumerate() {
            let others = (0..24).filter(|&i| i != h).map(|i| values[day * 24 + i]).fold(f64::MIN, f64::max);
            values[day * 24 + h] = others + 24.0 * beta1 + extra;
        }
        let start = TimePoint::new(2011, 7, 4, 1).unwrap();
        let index = TimeIndex::hourly(start, 48);
        let fc = PointForecast::new(index, values).unwrap();
        let tm = TrendModel { beta0: 2.0, beta1, origin: TimePoint::new(2010, 1, 1, 1).unwrap(), step_hours: 1 };
        let before = extract_daily_peaks(&fc).unwrap();
        let after = extract_daily_peaks(&retrend(&fc, &tm)).unwrap();
        for (a, b) in before.iter().zip(&after) {
            prop_assert_eq!(a.peak_hour, b.peak_hour);
        }
    }
}
