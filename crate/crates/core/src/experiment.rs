//! End-to-end experiments: fit, convert, reshape and train against a
//! randomly initialized control of identical shape; timing and runtime
//! scaling measurements; report files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::convert::{mars_to_network, parameter_shift_report, reshape_to, ConversionReport, ShiftReport};
use crate::data::{normalize, shuffled_indices, split_shuffle, Dataset, DatasetManifest, Scaler};
use crate::error::{Error, Result};
use crate::net::{random_init, DenseNetwork, TrainConfig, TrainHistory, Trainer};
use crate::spline::{feature_importance, fit_mars, FitConfig, ImportanceReport, MarsModel};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkShape {
    /// Hidden widths of the trained networks; empty keeps the converted
    /// `d -> M -> 1` shape.
    pub hidden: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingConfig {
    /// Timed repetitions after one discarded warm-up; the median is reported.
    pub repeats: usize,
    /// Epochs per timed training run.
    pub epochs: usize,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self { repeats: 5, epochs: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub sizes: Vec<usize>,
    pub repeats: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            sizes: vec![500, 1000, 2000, 4000],
            repeats: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetManifest,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub network: NetworkShape,
    #[serde(default)]
    pub train: TrainConfig,
    /// Seeds for the random arm's initialization and the shared batch order.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Epochs after which test error is recorded; defaults to the final epoch.
    #[serde(default)]
    pub eval_epochs: Vec<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub timing: TimingConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetManifest) -> Self {
        Self {
            dataset,
            fit: FitConfig::default(),
            network: NetworkShape::default(),
            train: TrainConfig::default(),
            seeds: default_seeds(),
            eval_epochs: Vec::new(),
            output_dir: None,
            timing: TimingConfig::default(),
            scaling: ScalingConfig::default(),
        }
    }

    /// Abalone with the incremental fitter and the raw converted shape.
    pub fn abalone(path: impl Into<PathBuf>) -> Self {
        let mut cfg = Self::new(DatasetManifest::abalone(path));
        cfg.fit.incremental = true;
        cfg
    }

    /// Wine Quality with the incremental fitter and the raw converted shape.
    pub fn wine_quality(path: impl Into<PathBuf>) -> Self {
        let mut cfg = Self::new(DatasetManifest::wine_quality(path));
        cfg.fit.incremental = true;
        cfg
    }

    /// Parses TOML; a relative dataset path or output directory is resolved
    /// against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text)?;
        if cfg.dataset.path.is_relative() {
            cfg.dataset.path = base.join(&cfg.dataset.path);
        }
        if let Some(out) = &cfg.output_dir {
            if out.is_relative() {
                cfg.output_dir = Some(base.join(out));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        self.fit.validate()?;
        self.train.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if let Some(&e) = self.eval_epochs.iter().find(|&&e| e > self.train.epochs) {
            return Err(Error::InvalidConfig(format!(
                "evaluation epoch {e} exceeds the {} training epochs",
                self.train.epochs
            )));
        }
        if self.network.hidden.contains(&0) {
            return Err(Error::InvalidConfig("hidden widths must be >= 1".into()));
        }
        if self.timing.repeats == 0 {
            return Err(Error::InvalidConfig("timing.repeats must be >= 1".into()));
        }
        Ok(())
    }

    /// Sorted, deduplicated evaluation epochs.
    pub fn checkpoints(&self) -> Vec<usize> {
        let mut e = if self.eval_epochs.is_empty() {
            vec![self.train.epochs]
        } else {
            self.eval_epochs.clone()
        };
        e.retain(|&k| k > 0);
        e.sort_unstable();
        e.dedup();
        e
    }
}

/// Normalized train/test split of a manifest's dataset.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub train: Dataset<f64>,
    pub test: Dataset<f64>,
    pub scaler: Scaler,
}

/// Loads, shuffles and splits with the manifest seed, then min-max scales
/// both parts with statistics of the training part.
pub fn prepare(manifest: &DatasetManifest) -> Result<Prepared> {
    let data = manifest.load()?;
    let (train, test) = split_shuffle(&data, manifest.split_fraction, manifest.seed)?;
    let (train, scaler) = normalize(&train, None)?;
    let (test, _) = normalize(&test, Some(&scaler))?;
    Ok(Prepared { train, test, scaler })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: usize,
    /// `None` when the arm diverged before this epoch.
    pub test_mse: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    /// Test MSE of the untrained network.
    pub before: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub history: TrainHistory<f64>,
    pub failure: Option<String>,
    #[serde(skip)]
    pub initial: Option<DenseNetwork<f64>>,
    #[serde(skip)]
    pub trained: Option<DenseNetwork<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub converted: ArmReport,
    pub random: ArmReport,
    pub shift: Option<ShiftReport<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    /// 0 for before training.
    pub epoch: usize,
    pub arm: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Seeds contributing (diverged runs are left out).
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub n_train: usize,
    pub n_test: usize,
    pub d: usize,
    pub fit_seconds: f64,
    pub mars_train_mse: f64,
    pub mars_test_mse: f64,
    pub model: MarsModel<f64>,
    pub conversion: ConversionReport<f64>,
    pub widths: Vec<usize>,
    pub importance: ImportanceReport<f64>,
    pub seeds: Vec<SeedReport>,
    pub summary: Vec<SummaryRow>,
    #[serde(skip)]
    pub network: Option<DenseNetwork<f64>>,
}

/// Converted network reshaped to the configured hidden widths.
fn converted_network(model: &MarsModel<f64>, shape: &NetworkShape) -> Result<(DenseNetwork<f64>, ConversionReport<f64>)> {
    let (net, report) = mars_to_network(model)?;
    if shape.hidden.is_empty() {
        return Ok((net, report));
    }
    let mut target = vec![net.input_dim()];
    target.extend(&shape.hidden);
    target.push(net.output_dim());
    Ok((reshape_to(&net, &target)?, report))
}

fn train_arm(
    net: DenseNetwork<f64>,
    train: &Dataset<f64>,
    test: &Dataset<f64>,
    config: &TrainConfig,
    checkpoints: &[usize],
) -> Result<ArmReport> {
    let before = net.mse(test)?;
    let initial = net.clone();
    let mut trainer = Trainer::new(net, config.clone())?;
    let mut points = Vec::new();
    let mut failure = None;
    let mut done = 0;
    for &epoch in checkpoints {
        if failure.is_some() {
            points.push(Checkpoint { epoch, test_mse: None });
            continue;
        }
        match trainer.run(train, epoch - done) {
            Ok(()) => {
                done = epoch;
                points.push(Checkpoint {
                    epoch,
                    test_mse: Some(trainer.network().mse(test)?),
                });
            }
            Err(e @ Error::Diverged { .. }) => {
                failure = Some(e.to_string());
                points.push(Checkpoint { epoch, test_mse: None });
            }
            Err(e) => return Err(e),
        }
    }
    if failure.is_none() && done < config.epochs {
        if let Err(e) = trainer.run(train, config.epochs - done) {
            match e {
                Error::Diverged { .. } => failure = Some(e.to_string()),
                other => return Err(other),
            }
        }
    }
    let (trained, history) = trainer.into_parts();
    Ok(ArmReport {
        before,
        checkpoints: points,
        history,
        trained: failure.is_none().then_some(trained),
        failure,
        initial: Some(initial),
    })
}

/// Fits the spline on the training split, converts and reshapes it, then for
/// every seed trains the converted network and a random network of the same
/// shape on the same batch sequence.
pub fn run_comparison(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let data = prepare(&config.dataset)?;
    run_comparison_on(config, &data)
}

/// [`run_comparison`] on already prepared data.
pub fn run_comparison_on(config: &ExperimentConfig, data: &Prepared) -> Result<ExperimentReport> {
    config.validate()?;
    let fit = fit_mars(&data.train, &config.fit)?;
    let model = fit.model;
    let (net, conversion) = converted_network(&model, &config.network)?;
    let widths = net.widths();
    let checkpoints = config.checkpoints();

    let mut seeds = Vec::new();
    for &seed in &config.seeds {
        let train_cfg = TrainConfig {
            seed,
            ..config.train.clone()
        };
        let converted = train_arm(net.clone(), &data.train, &data.test, &train_cfg, &checkpoints)?;
        let control = random_init(&widths, seed)?;
        let random = train_arm(control, &data.train, &data.test, &train_cfg, &checkpoints)?;
        let shift = match &converted.trained {
            Some(t) if config.train.epochs > 0 => Some(parameter_shift_report(&net, t)?),
            _ => None,
        };
        seeds.push(SeedReport {
            seed,
            converted,
            random,
            shift,
        });
    }
    let summary = summarize(&seeds, &checkpoints);
    Ok(ExperimentReport {
        n_train: data.train.n_samples(),
        n_test: data.test.n_samples(),
        d: data.train.dim(),
        fit_seconds: fit.seconds,
        mars_train_mse: model.mse(&data.train)?,
        mars_test_mse: model.mse(&data.test)?,
        importance: feature_importance(&model, Some(data.train.feature_names())),
        model,
        conversion,
        widths,
        seeds,
        summary,
        network: Some(net),
    })
}

fn summarize(seeds: &[SeedReport], checkpoints: &[usize]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    let stages = std::iter::once(0).chain(checkpoints.iter().copied());
    for epoch in stages {
        for arm in ["converted", "random"] {
            let values: Vec<f64> = seeds
                .iter()
                .filter_map(|s| {
                    let a = if arm == "converted" { &s.converted } else { &s.random };
                    if epoch == 0 {
                        Some(a.before)
                    } else {
                        a.checkpoints.iter().find(|c| c.epoch == epoch).and_then(|c| c.test_mse)
                    }
                })
                .collect();
            if values.is_empty() {
                continue;
            }
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // Rounding can push the sum of equal values just past them.
            let mean = (values.iter().sum::<f64>() / values.len() as f64).clamp(min, max);
            rows.push(SummaryRow {
                epoch,
                arm: arm.into(),
                mean,
                min,
                max,
                runs: values.len(),
            });
        }
    }
    rows
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes the comparison artifacts into `dir` and returns the written paths.
pub fn emit_reports(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();

    for s in &report.seeds {
        let mut csv = String::from("epoch,converted_loss,random_loss\n");
        let (c, r) = (&s.converted.history.losses, &s.random.history.losses);
        for e in 0..c.len().max(r.len()) {
            let cell = |v: Option<&f64>| v.map(|x| x.to_string()).unwrap_or_default();
            csv.push_str(&format!("{},{},{}\n", e + 1, cell(c.get(e)), cell(r.get(e))));
        }
        files.push(write(dir, &format!("loss_curves_seed{}.csv", s.seed), &csv)?);
        if let Some(shift) = &s.shift {
            files.push(write(dir, &format!("shift_seed{}.csv", s.seed), &shift.to_csv())?);
            files.push(write(dir, &format!("shift_seed{}.json", s.seed), &shift.to_json()?)?);
        }
        for (arm, a) in [("converted", &s.converted), ("random", &s.random)] {
            if let Some(net) = &a.trained {
                files.push(write(dir, &format!("network_{arm}_seed{}.json", s.seed), &net.to_json()?)?);
            }
        }
    }

    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut errors = String::from("seed,epoch,converted_test_mse,random_test_mse\n");
    for s in &report.seeds {
        errors.push_str(&format!("{},0,{},{}\n", s.seed, s.converted.before, s.random.before));
        for (c, r) in s.converted.checkpoints.iter().zip(&s.random.checkpoints) {
            errors.push_str(&format!("{},{},{},{}\n", s.seed, c.epoch, cell(c.test_mse), cell(r.test_mse)));
        }
    }
    files.push(write(dir, "errors.csv", &errors)?);

    let mut summary = String::from("epoch,arm,mean,min,max,runs\n");
    for r in &report.summary {
        summary.push_str(&format!("{},{},{},{},{},{}\n", r.epoch, r.arm, r.mean, r.min, r.max, r.runs));
    }
    files.push(write(dir, "errors_summary.csv", &summary)?);

    let mut timing = String::from("seed,arm,fit_seconds,epoch_seconds,total_seconds,epochs\n");
    for s in &report.seeds {
        for (arm, a) in [("converted", &s.converted), ("random", &s.random)] {
            let fit = if arm == "converted" { report.fit_seconds.to_string() } else { String::new() };
            timing.push_str(&format!(
                "{},{arm},{fit},{},{},{}\n",
                s.seed,
                a.history.mean_epoch_seconds(),
                a.history.total_seconds,
                a.history.epochs()
            ));
        }
    }
    files.push(write(dir, "timing.csv", &timing)?);

    files.push(write(dir, "importance.csv", &report.importance.to_csv())?);
    files.push(write(dir, "importance.json", &serde_json::to_string_pretty(&report.importance)?)?);
    files.push(write(dir, "mars_model.json", &report.model.to_json()?)?);
    if let Some(net) = &report.network {
        files.push(write(dir, "converted_network.json", &net.to_json()?)?);
    }
    files.push(write(dir, "report.json", &serde_json::to_string_pretty(report)?)?);
    Ok(files)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median wall-clock seconds of `repeats` spline fits after one discarded
/// warm-up fit.
pub fn time_fit(data: &Dataset<f64>, config: &FitConfig, repeats: usize) -> Result<f64> {
    fit_mars(data, config)?;
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        fit_mars(data, config)?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(median(times))
}

/// Median over `repeats` runs of the mean per-epoch update time, after one
/// discarded warm-up epoch.
fn time_epochs(net: &DenseNetwork<f64>, data: &Dataset<f64>, config: &TrainConfig, epochs: usize, repeats: usize) -> Result<(f64, f64)> {
    let mut warm = Trainer::new(net.clone(), config.clone())?;
    warm.run(data, 1)?;
    let mut per_epoch = Vec::new();
    let mut totals = Vec::new();
    for _ in 0..repeats.max(1) {
        let mut t = Trainer::new(net.clone(), config.clone())?;
        t.run(data, epochs.max(1))?;
        per_epoch.push(t.history().mean_epoch_seconds());
        totals.push(t.history().total_seconds);
    }
    Ok((median(per_epoch), median(totals)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub n_train: usize,
    pub d: usize,
    pub fit_samples: usize,
    pub fit_seconds: f64,
    pub hidden_width: usize,
    pub epochs: usize,
    pub converted_epoch_seconds: f64,
    pub random_epoch_seconds: f64,
    pub converted_total_seconds: f64,
    pub random_total_seconds: f64,
    /// `fit_seconds / converted_epoch_seconds`.
    pub fit_to_epoch_ratio: f64,
    /// `|converted - random| / max(converted, random)` per-epoch time.
    pub arm_gap: f64,
}

impl TimingReport {
    pub fn within_two_epochs(&self) -> bool {
        self.fit_to_epoch_ratio <= 2.0
    }

    pub fn to_csv(&self) -> String {
        format!(
            "arm,fit_seconds,epoch_seconds,total_seconds,epochs\n\
             converted,{},{},{},{}\nrandom,,{},{},{}\n",
            self.fit_seconds,
            self.converted_epoch_seconds,
            self.converted_total_seconds,
            self.epochs,
            self.random_epoch_seconds,
            self.random_total_seconds,
            self.epochs
        )
    }
}

/// Spline fit time against per-epoch training time of both arms.
pub fn run_timing(config: &ExperimentConfig) -> Result<TimingReport> {
    config.validate()?;
    let data = prepare(&config.dataset)?;
    run_timing_on(config, &data)
}

pub fn run_timing_on(config: &ExperimentConfig, data: &Prepared) -> Result<TimingReport> {
    config.validate()?;
    let reps = config.timing.repeats;
    let fit_seconds = time_fit(&data.train, &config.fit, reps)?;
    let model = fit_mars(&data.train, &config.fit)?.model;
    let (net, _) = converted_network(&model, &config.network)?;
    let widths = net.widths();
    let seed = config.seeds[0];
    let train_cfg = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let control = random_init(&widths, seed)?;
    let epochs = config.timing.epochs;
    let (conv_epoch, conv_total) = time_epochs(&net, &data.train, &train_cfg, epochs, reps)?;
    let (rand_epoch, rand_total) = time_epochs(&control, &data.train, &train_cfg, epochs, reps)?;
    let fit_samples = ((config.fit.train_fraction * data.train.n_samples() as f64).floor() as usize).max(1);
    Ok(TimingReport {
        n_train: data.train.n_samples(),
        d: data.train.dim(),
        fit_samples,
        fit_seconds,
        hidden_width: widths[1],
        epochs: epochs.max(1),
        converted_epoch_seconds: conv_epoch,
        random_epoch_seconds: rand_epoch,
        converted_total_seconds: conv_total,
        random_total_seconds: rand_total,
        fit_to_epoch_ratio: fit_seconds / conv_epoch,
        arm_gap: (conv_epoch - rand_epoch).abs() / conv_epoch.max(rand_epoch),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub sizes: Vec<usize>,
    pub seconds: Vec<f64>,
    /// Least-squares slope of `ln(seconds)` on `ln(N)`.
    pub slope: f64,
    pub intercept: f64,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,seconds\n");
        for (n, s) in self.sizes.iter().zip(&self.seconds) {
            out.push_str(&format!("{n},{s}\n"));
        }
        out
    }
}

/// Ordinary least squares `y = a + b x`, returned as `(b, a)`.
pub fn log_log_slope(sizes: &[usize], seconds: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = seconds.iter().map(|s| s.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let b = sxy / sxx;
    (b, my - b * mx)
}

/// Fit time on leading subsamples of the shuffled, normalized dataset.
pub fn run_scaling(config: &ExperimentConfig) -> Result<ScalingReport> {
    config.validate()?;
    let data = config.dataset.load()?;
    let shuffled = data.select(&shuffled_indices(data.n_samples(), config.dataset.seed));
    let (data, _) = normalize(&shuffled, None)?;
    run_scaling_on(&data, &config.fit, &config.scaling)
}

pub fn run_scaling_on(data: &Dataset<f64>, fit: &FitConfig, scaling: &ScalingConfig) -> Result<ScalingReport> {
    let sizes = &scaling.sizes;
    if sizes.len() < 3 {
        return Err(Error::TooFewPoints(sizes.len()));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) || sizes[0] < 2 {
        return Err(Error::InvalidConfig("sizes must be increasing and at least 2".into()));
    }
    let largest = sizes[sizes.len() - 1];
    if largest > data.n_samples() {
        return Err(Error::SubsampleTooLarge {
            requested: largest,
            available: data.n_samples(),
        });
    }
    let fit = FitConfig {
        train_fraction: 1.0,
        ..fit.clone()
    };
    let seconds = sizes
        .iter()
        .map(|&n| time_fit(&data.head(n), &fit, scaling.repeats))
        .collect::<Result<Vec<_>>>()?;
    let (slope, intercept) = log_log_slope(sizes, &seconds);
    Ok(ScalingReport {
        sizes: sizes.clone(),
        seconds,
        slope,
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let sizes = [100, 200, 400, 800];
        let secs: Vec<f64> = sizes.iter().map(|&n| 3e-6 * (n as f64).powf(1.2)).collect();
        let (b, _) = log_log_slope(&sizes, &secs);
        assert!((b - 1.2).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn scaling_needs_three_sizes() {
        let data = Dataset::from_rows(vec![vec![0.0]; 10], vec![0.0; 10]).unwrap();
        let cfg = ScalingConfig {
            sizes: vec![5],
            repeats: 1,
        };
        assert!(matches!(
            run_scaling_on(&data, &FitConfig::default(), &cfg),
            Err(Error::TooFewPoints(1))
        ));
        let cfg = ScalingConfig {
            sizes: vec![2, 4, 20],
            repeats: 1,
        };
        assert!(matches!(
            run_scaling_on(&data, &FitConfig::default(), &cfg),
            Err(Error::SubsampleTooLarge { .. })
        ));
    }

    #[test]
    fn config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "[dataset]\npath = \"x.csv\"\ntarget = \"y\"\n[train]\nepochs = 3\n",
            Path::new("/tmp"),
        )
        .unwrap();
        assert_eq!(cfg.dataset.path, PathBuf::from("/tmp/x.csv"));
        assert_eq!(cfg.seeds.len(), 5);
        assert_eq!(cfg.checkpoints(), vec![3]);
        assert_eq!(cfg.train.batch_size, 32);
        assert!(ExperimentConfig::from_toml("[dataset]\npath = \"x\"\ntarget = \"y\"\nbogus = 1\n", Path::new(".")).is_err());
    }
}
