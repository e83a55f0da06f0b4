//! Electricity load and daily-peak forecasting.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for callers that do not need the generic form.

pub mod config;
pub mod error;
pub mod features;
pub mod frame;
pub mod gbdt;
pub mod hierarchy;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod scalar;
pub mod selection;
pub mod series;
pub mod synth;
pub mod time;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use time::{TimeIndex, TimePoint};

pub type HourlySeriesF64 = series::HourlySeries<f64>;
pub type HourlySeriesF32 = series::HourlySeries<f32>;
pub type DatasetF64 = series::Dataset<f64>;
pub type DatasetF32 = series::Dataset<f32>;
pub type FeatureMatrixF64 = frame::FeatureMatrix<f64>;
pub type FeatureMatrixF32 = frame::FeatureMatrix<f32>;
pub type PointForecastF64 = series::PointForecast<f64>;
pub type PointForecastF32 = series::PointForecast<f32>;
pub type DistForecastF64 = series::DistForecast<f64>;
pub type DistForecastF32 = series::DistForecast<f32>;
pub type PeakForecastF64 = series::PeakForecast<f64>;
pub type PeakForecastF32 = series::PeakForecast<f32>;
pub type TreeEnsembleF64 = gbdt::TreeEnsemble<f64>;
pub type TreeEnsembleF32 = gbdt::TreeEnsemble<f32>;
pub type ScoreReportF64 = metrics::ScoreReport<f64>;
pub type ScoreReportF32 = metrics::ScoreReport<f32>;
pub type ImportanceReportF64 = selection::ImportanceReport<f64>;
pub type ImportanceReportF32 = selection::ImportanceReport<f32>;
pub type TrainedPipelineF64 = pipeline::TrainedPipeline<f64>;
pub type TrainedPipelineF32 = pipeline::TrainedPipeline<f32>;
