use loadfc::io::{ingest_csv, read_holidays, write_dataset, write_holidays, IngestOptions};
use loadfc::series::{Dataset, HourlySeries};
use loadfc::synth::fixed_holidays;
use loadfc::TimePoint;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL
}

fn dataset(load: Vec<f64>, temp: Vec<f64>, exog: Vec<f64>, offset: i64) -> Dataset<f64> {
    let start = TimePoint::new(2020, 2, 28, 1).unwrap().add_hours(offset);
    Dataset::new(
        HourlySeries::new("load", start, load).unwrap(),
        vec![HourlySeries::new("t1", start, temp).unwrap()],
        vec![HourlySeries::new("price", start, exog).unwrap()],
        fixed_holidays(2020, 2021),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn emitted_datasets_read_back_exactly(
        rows in prop::collection::vec((finite(), finite(), finite()), 1..80),
        offset in 0i64..10_000,
    ) {
        let (load, rest): (Vec<f64>, Vec<(f64, f64)>) = rows.into_iter().map(|(a, b, c)| (a, (b, c))).unzip();
        let (temp, exog): (Vec<f64>, Vec<f64>) = rest.into_iter().unzip();
        let ds = dataset(load, temp, exog, offset);
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data.csv");
        let hol = dir.path().join("holidays.csv");
        write_dataset(&data, &ds).unwrap();
        write_holidays(&hol, &ds.holidays).unwrap();
        let opts = IngestOptions { exogenous: vec!["price".into()], ..Default::default() };
        let back = ingest_csv::<f64>(&data, Some(&hol), &opts).unwrap();
        prop_assert_eq!(&back, &ds);
        let bits = |s: &HourlySeries<f64>| s.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.load), bits(&ds.load));
        prop_assert_eq!(read_holidays(&hol).unwrap(), ds.holidays);
    }
}

#[test]
fn emission_is_deterministic() {
    let ds = dataset(vec![1.0 / 3.0, 1e300, -0.0], vec![2.5, -7.125, 0.1], vec![1e-310, 3.0, 4.0], 5);
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_dataset(&a, &ds).unwrap();
    write_dataset(&b, &ds).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
