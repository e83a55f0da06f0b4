use std::fs;
use std::path::{Path, PathBuf};

use loadfc::config::Config;
use loadfc::hierarchy::{reconcile_horizon, HierarchyStructure};
use loadfc::io::{
    ingest_csv, read_forecast, read_table, write_dataset, write_dendrogram, write_forecast,
    write_holidays, write_importance, write_json, write_peaks, write_reconcile_report, write_scores_csv, Table,
};
use loadfc::metrics::score_forecast;
use loadfc::pipeline::{predict_multiscale, train_forecaster, train_multiscale, HorizonForecast};
use loadfc::series::{extract_daily_peaks, DistForecast, HourlySeries};
use loadfc::synth::{fixed_holidays, gen_synthetic};
use loadfc::{DatasetF64, TimeIndex};

use crate::error::{CliError, CliResult};

/// Options shared by every command.
pub struct Common {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub ldc: Option<String>,
}

impl Common {
    /// Loads the config and applies `--seed` and `--ldc`.
    pub fn load_config(&self) -> CliResult<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(&require_file(p)?)?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed {
            cfg.synth.rng_seed = seed;
            cfg.pipeline.boost.dart.rng_seed = seed;
            cfg.pipeline.selection.rng_seed = seed;
        }
        if let Some(ldc) = &self.ldc {
            cfg.ingest.load_column = ldc.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self) -> CliResult<&Path> {
        fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", self.out.display())))?;
        Ok(&self.out)
    }

    fn load_column(&self, cfg: &Config) -> String {
        self.ldc.clone().unwrap_or_else(|| cfg.ingest.load_column.clone())
    }
}

fn require_file(p: &Path) -> CliResult<PathBuf> {
    if p.is_file() {
        Ok(p.to_path_buf())
    } else {
        Err(CliError::Usage(format!("file not found: {}", p.display())))
    }
}

fn read_dataset(path: &Path, holidays: Option<&Path>, cfg: &Config) -> CliResult<DatasetF64> {
    let holidays = holidays.map(require_file).transpose()?;
    Ok(ingest_csv(&require_file(path)?, holidays.as_deref(), &cfg.ingest)?)
}

/// Writes `train.csv`, `future.csv` (the trailing `split.test_years` years,
/// actual load included), `holidays.csv` and `synth_spec.json`.
pub fn synth(common: &Common) -> CliResult<Vec<PathBuf>> {
    let cfg = common.load_config()?;
    let out = common.out_dir()?;
    let (mut ds, _) = gen_synthetic::<f64>(&cfg.synth)?;
    ds.load = ds.load.renamed(common.load_column(&cfg));
    let index = ds.index();
    let first_test_year = cfg.synth.start_year + (cfg.synth.years - cfg.split.test_years) as i32;
    let split = (0..index.len)
        .find(|&i| index.at(i).year() >= first_test_year)
        .ok_or_else(|| CliError::Usage("synthetic data has no test years".into()))?;
    let train = ds.restrict(&index.slice(0, split)?)?;
    let future = ds.restrict(&index.slice(split, index.len - split)?)?;
    let paths: Vec<PathBuf> =
        ["train.csv", "future.csv", "holidays.csv", "synth_spec.json"].iter().map(|n| out.join(n)).collect();
    write_dataset(&paths[0], &train)?;
    write_dataset(&paths[1], &future)?;
    let last_year = cfg.synth.start_year + cfg.synth.years as i32 - 1;
    write_holidays(&paths[2], &fixed_holidays(cfg.synth.start_year, last_year))?;
    write_json(&paths[3], &cfg.synth)?;
    Ok(paths)
}

pub struct ForecastArgs {
    pub train: PathBuf,
    pub future: PathBuf,
    pub holidays: Option<PathBuf>,
    pub multiscale: bool,
}

/// Extends each training series with the matching column of the future file.
fn extend_with_future(series: &[HourlySeries<f64>], future: &Table<f64>) -> CliResult<Vec<HourlySeries<f64>>> {
    series.iter().map(|s| Ok(s.concat(&future.series(s.name())?)?)).collect()
}

/// Trains on `train` and forecasts the time span of `future`, whose
/// temperature (and exogenous) columns must continue those of `train`.
pub fn forecast(common: &Common, args: &ForecastArgs) -> CliResult<Vec<PathBuf>> {
    let cfg = common.load_config()?;
    let out = common.out_dir()?;
    let ds = read_dataset(&args.train, args.holidays.as_deref(), &cfg)?;
    let future: Table<f64> = read_table(&require_file(&args.future)?)?;
    let horizon: TimeIndex = future.index;
    let temps = extend_with_future(&ds.temperatures, &future)?;
    let exog = extend_with_future(&ds.exogenous, &future)?;
    let mut written = Vec::new();
    if args.multiscale {
        let models = train_multiscale(&ds, &cfg.pipeline)?;
        let forecasts = predict_multiscale(&models, &temps, &exog, &ds.holidays, &horizon)?;
        for ((k, model), (_, fc)) in models.iter().zip(&forecasts) {
            let p = out.join(format!("forecasts_k{k}.csv"));
            write_forecast(&p, &fc.dist)?;
            written.push(p);
            let p = out.join(format!("model_k{k}.json"));
            write_json(&p, model)?;
            written.push(p);
            if *k == 1 {
                written.extend(write_hourly(out, fc)?);
            }
        }
    } else {
        let model = train_forecaster(&ds, &cfg.pipeline)?;
        let fc = model.predict_horizon(&temps, &exog, &ds.holidays, &horizon)?;
        written.extend(write_hourly(out, &fc)?);
        let p = out.join("model.json");
        write_json(&p, &model)?;
        written.push(p);
    }
    Ok(written)
}

fn write_hourly(out: &Path, fc: &HorizonForecast<f64>) -> CliResult<Vec<PathBuf>> {
    let f = out.join("forecasts.csv");
    write_forecast(&f, &fc.dist)?;
    let p = out.join("peaks.csv");
    write_peaks(&p, &fc.peaks)?;
    Ok(vec![f, p])
}

/// Reconciles `forecasts_k{k}.csv` for every configured scale found in `input`.
pub fn reconcile(common: &Common, input: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg = common.load_config()?;
    let out = common.out_dir()?;
    let hs = HierarchyStructure::new(&cfg.pipeline.hierarchy.scales)?;
    let per_scale: Vec<(usize, DistForecast<f64>)> = hs
        .scales
        .iter()
        .map(|&k| Ok((k, read_forecast(&require_file(&input.join(format!("forecasts_k{k}.csv")))?)?)))
        .collect::<CliResult<_>>()?;
    let rec = reconcile_horizon(&per_scale, &hs)?;
    let mut written = Vec::new();
    let p = out.join("reconciled.csv");
    write_forecast(&p, &rec.bottom)?;
    written.push(p);
    for &k in hs.scales.iter().filter(|&&k| k != 1) {
        let p = out.join(format!("reconciled_k{k}.csv"));
        write_forecast(&p, &rec.at_scale(k)?)?;
        written.push(p);
    }
    let p = out.join("reconciled_peaks.csv");
    write_peaks(&p, &extract_daily_peaks(&rec.bottom.point())?)?;
    written.push(p);
    let p = out.join("reconcile_report.csv");
    write_reconcile_report(&p, &rec)?;
    written.push(p);
    Ok(written)
}

pub struct ScoreArgs {
    pub forecast: PathBuf,
    pub actual: PathBuf,
    pub reference: Option<PathBuf>,
}

/// Actual values over `index`: the load column, else a forecast file's `mean`.
fn actual_values(path: &Path, load_column: &str, index: &TimeIndex) -> CliResult<Vec<f64>> {
    let t: Table<f64> = read_table(&require_file(path)?)?;
    let name = if t.column(load_column).is_ok() { load_column } else { "mean" };
    let s = t.series(name).map_err(|_| {
        CliError::Lib(loadfc::Error::SchemaMismatch { missing: vec![load_column.to_string()] })
    })?;
    Ok(s.restrict(index)?.into_values())
}

/// Writes `scores.csv` and `scores.json`; with a reference forecast the
/// report carries skill scores against it.
pub fn score(common: &Common, args: &ScoreArgs) -> CliResult<Vec<PathBuf>> {
    let cfg = common.load_config()?;
    let out = common.out_dir()?;
    let fc = read_forecast::<f64>(&require_file(&args.forecast)?)?;
    let actual = actual_values(&args.actual, &common.load_column(&cfg), &fc.index)?;
    let mut report = score_forecast(&actual, &fc)?;
    if let Some(r) = &args.reference {
        let reference = read_forecast::<f64>(&require_file(r)?)?;
        if reference.index != fc.index {
            return Err(CliError::Lib(loadfc::Error::Alignment(
                "reference forecast covers a different time span".into(),
            )));
        }
        report = report.with_skill_against(&score_forecast(&actual, &reference)?);
    }
    let csv = out.join("scores.csv");
    write_scores_csv(&csv, &report)?;
    let json = out.join("scores.json");
    write_json(&json, &report)?;
    Ok(vec![csv, json])
}

/// Runs clustered permutation selection on `train` and writes
/// `importance.csv`, `dendrogram.csv` and `selected_features.txt`.
pub fn select_features(common: &Common, train: &Path, holidays: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let mut cfg = common.load_config()?;
    cfg.pipeline.selection.enabled = true;
    let out = common.out_dir()?;
    let ds = read_dataset(train, holidays, &cfg)?;
    let trained = train_forecaster(&ds, &cfg.pipeline)?;
    let sel = trained.selection.as_ref().expect("selection enabled");
    let imp = out.join("importance.csv");
    write_importance(&imp, &sel.report, &sel.kept_clusters)?;
    let dg = out.join("dendrogram.csv");
    write_dendrogram(&dg, &sel.dendrogram)?;
    let kept = out.join("selected_features.txt");
    fs::write(&kept, trained.feature_names.join("\n") + "\n")?;
    Ok(vec![imp, dg, kept])
}

