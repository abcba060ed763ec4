use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use marsnet::experiment::{run_comparison_on, run_timing_on, Prepared};
use marsnet::{
    compile_lattice, emit_reports, feature_importance, fit_mars, mars_to_network, prepare, reshape_to,
    widen_with_jitter, DatasetManifest, ExperimentConfig, Lattice, Model, Network, Trainer,
};

#[derive(Parser)]
#[command(name = "marsnet", version, about = "Fit MARS models, turn them into ReLU networks, and train them")]
struct Cli {
    /// Seed for whatever randomness the subcommand uses.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a spline model to a CSV and write it as JSON.
    Fit(FitArgs),
    /// Convert a spline model into an equivalent ReLU network.
    Convert(ConvertArgs),
    /// Grow a network to the given widths without changing its function.
    Reshape(ReshapeArgs),
    /// Continue training a network on a CSV.
    Train(TrainArgs),
    /// Compile a lattice piecewise-linear function into a ReLU network.
    CompilePwl(CompileArgs),
    /// Converted versus random initialization over several seeds.
    Compare(CompareArgs),
    /// Spline fit time against per-epoch training time.
    Timing(TimingArgs),
    /// Fit time across training-set sizes.
    Scaling(ScalingArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Abalone,
    Wine,
}

/// Dataset, fitting and training options shared by the data-driven
/// subcommands. Each flag overrides the matching config-file entry.
#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in dataset layout; needs --data.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Dataset CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Target column name.
    #[arg(long)]
    target: Option<String>,
    /// The CSV has no header row.
    #[arg(long)]
    no_header: bool,
    /// Column names when the CSV has no header.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Columns to one-hot encode.
    #[arg(long, value_delimiter = ',')]
    categorical: Option<Vec<String>>,
    /// Train share of the train/test split.
    #[arg(long)]
    split_fraction: Option<f64>,
    /// Seed of the train/test split.
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    max_terms: Option<usize>,
    #[arg(long)]
    knot_penalty: Option<f64>,
    #[arg(long)]
    knot_subsample: Option<usize>,
    /// Fraction of the training rows the spline is fitted on.
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Score candidates with orthogonal updates.
    #[arg(long, conflicts_with = "full_refit")]
    incremental: bool,
    /// Score every candidate with a full least-squares refit.
    #[arg(long)]
    full_refit: bool,
    /// Hidden widths to reshape the converted network to.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Comparison seeds; --seed selects a single one.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    eval_epochs: Option<Vec<usize>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Where to write the model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Optional feature-importance CSV.
    #[arg(long)]
    importance: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Optional conversion report JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ReshapeArgs {
    #[arg(long)]
    net: PathBuf,
    /// Full target widths, input and output included, e.g. 11,64,64,1.
    #[arg(long, value_delimiter = ',', required = true)]
    widths: Vec<usize>,
    /// Jitter amplitude for the incoming weights of new units.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long)]
    net: PathBuf,
    /// Where to write the trained network.
    #[arg(long)]
    model_out: PathBuf,
    /// Optional per-epoch history CSV.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long)]
    lattice: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Optional depth report JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Args)]
struct TimingArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long)]
    repeats: Option<usize>,
    /// Epochs per timed training run.
    #[arg(long)]
    timing_epochs: Option<usize>,
}

#[derive(Args)]
struct ScalingArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    repeats: Option<usize>,
}

/// Bad input detected by the CLI itself.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

impl ExperimentArgs {
    fn config(&self, seed: Option<u64>) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match (&self.config, self.preset, &self.data) {
            (Some(path), _, _) => ExperimentConfig::from_file(path)?,
            (None, Some(Preset::Abalone), Some(data)) => ExperimentConfig::abalone(data),
            (None, Some(Preset::Wine), Some(data)) => ExperimentConfig::wine_quality(data),
            (None, None, Some(data)) => {
                let target = self.target.clone().ok_or_else(|| usage("--target is required with --data"))?;
                // A headed CSV without categorical columns.
                let mut cfg = ExperimentConfig::new(DatasetManifest {
                    target,
                    ..DatasetManifest::wine_quality(data)
                });
                cfg.fit.incremental = true;
                cfg
            }
            (None, _, None) => return Err(usage("give --config, or --data with --target or --preset")),
        };
        let m = &mut cfg.dataset;
        if self.config.is_some() {
            if let Some(data) = &self.data {
                m.path = data.clone();
            }
        }
        if let Some(t) = &self.target {
            m.target = t.clone();
        }
        if self.no_header {
            m.header = false;
        }
        if let Some(c) = &self.columns {
            m.columns = Some(c.clone());
        }
        if let Some(c) = &self.categorical {
            m.categorical = c.clone();
        }
        if let Some(f) = self.split_fraction {
            m.split_fraction = f;
        }
        if let Some(s) = self.split_seed {
            m.seed = s;
        }
        let f = &mut cfg.fit;
        if let Some(v) = self.max_terms {
            f.max_terms = v;
        }
        if let Some(v) = self.knot_penalty {
            f.knot_penalty = v;
        }
        if self.knot_subsample.is_some() {
            f.knot_subsample = self.knot_subsample;
        }
        if let Some(v) = self.train_fraction {
            f.train_fraction = v;
        }
        if self.incremental {
            f.incremental = true;
        }
        if self.full_refit {
            f.incremental = false;
        }
        if let Some(h) = &self.hidden {
            cfg.network.hidden = h.clone();
        }
        let t = &mut cfg.train;
        if let Some(v) = self.epochs {
            t.epochs = v;
        }
        if let Some(v) = self.learning_rate {
            t.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            t.batch_size = v;
        }
        if let Some(s) = &self.seeds {
            cfg.seeds = s.clone();
        }
        if let Some(s) = seed {
            cfg.seeds = vec![s];
            cfg.train.seed = s;
        }
        if let Some(e) = &self.eval_epochs {
            cfg.eval_epochs = e.clone();
        }
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => usage(format!("{} not found", path.display())),
        _ => anyhow!(e).context(format!("cannot read {}", path.display())),
    })
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn output_dir(cfg: &ExperimentConfig) -> anyhow::Result<&Path> {
    cfg.output_dir.as_deref().ok_or_else(|| usage("no output directory: pass --out or set output_dir"))
}

fn prepared(cfg: &ExperimentConfig) -> anyhow::Result<Prepared> {
    Ok(prepare(&cfg.dataset)?)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Fit(a) => {
            let mut cfg = a.exp.config(None)?;
            if let Some(s) = seed {
                cfg.dataset.seed = s;
            }
            let data = prepared(&cfg)?;
            let fit = fit_mars(&data.train, &cfg.fit)?;
            write(&a.model, &fit.model.to_json()?)?;
            if let Some(path) = &a.importance {
                write(path, &feature_importance(&fit.model, Some(data.train.feature_names())).to_csv())?;
            }
            println!(
                "terms={} knots={} train_mse={} test_mse={} seconds={}",
                fit.model.n_terms(),
                fit.model.distinct_knots(),
                fit.model.mse(&data.train)?,
                fit.model.mse(&data.test)?,
                fit.seconds
            );
        }
        Command::Convert(a) => {
            let model = Model::from_json(&read(&a.model)?)?;
            let (net, report) = mars_to_network(&model)?;
            write(&a.out, &net.to_json()?)?;
            if let Some(path) = &a.report {
                write(path, &serde_json::to_string_pretty(&report)?)?;
            }
            println!("widths={:?} max_deviation={}", net.widths(), report.max_deviation);
        }
        Command::Reshape(a) => {
            let net = Network::from_json(&read(&a.net)?)?;
            let mut out = reshape_to(&net, &a.widths)?;
            if a.jitter != 0.0 {
                // Deepen only, then widen layer by layer so new units get jitter.
                out = reshape_to(&net, &shallow_target(&net, &a.widths))?;
                for layer in 0..out.depth() - 1 {
                    let extra = a.widths[layer + 1] - out.widths()[layer + 1];
                    if extra > 0 {
                        out = widen_with_jitter(&out, layer, extra, a.jitter, seed.unwrap_or(0))?;
                    }
                }
            }
            write(&a.out, &out.to_json()?)?;
            println!("widths={:?}", out.widths());
        }
        Command::Train(a) => {
            let cfg = a.exp.config(seed)?;
            let data = prepared(&cfg)?;
            let net = Network::from_json(&read(&a.net)?)?;
            let before = net.mse(&data.test)?;
            let mut trainer = Trainer::new(net, cfg.train.clone())?;
            trainer.run(&data.train, cfg.train.epochs)?;
            let (net, history) = trainer.into_parts();
            write(&a.model_out, &net.to_json()?)?;
            if let Some(path) = &a.history {
                write(path, &history.to_csv())?;
            }
            println!("test_mse_before={} test_mse_after={}", before, net.mse(&data.test)?);
        }
        Command::CompilePwl(a) => {
            let lattice = Lattice::from_json(&read(&a.lattice)?)?;
            let (net, report) = compile_lattice(&lattice)?;
            write(&a.out, &net.to_json()?)?;
            if let Some(path) = &a.report {
                write(path, &serde_json::to_string_pretty(&report)?)?;
            }
            println!("relu_layers={} bound={}", report.relu_layers, report.bound);
        }
        Command::Compare(a) => {
            let cfg = a.exp.config(seed)?;
            let dir = output_dir(&cfg)?.to_path_buf();
            let data = prepared(&cfg)?;
            let report = run_comparison_on(&cfg, &data)?;
            emit_reports(&report, &dir)?;
            println!("epoch,arm,mean,min,max,runs");
            for r in &report.summary {
                println!("{},{},{},{},{},{}", r.epoch, r.arm, r.mean, r.min, r.max, r.runs);
            }
            for s in &report.seeds {
                for (arm, rep) in [("converted", &s.converted), ("random", &s.random)] {
                    if let Some(f) = &rep.failure {
                        eprintln!("seed {} {arm}: {f}", s.seed);
                    }
                }
            }
        }
        Command::Timing(a) => {
            let mut cfg = a.exp.config(seed)?;
            if let Some(r) = a.repeats {
                cfg.timing.repeats = r;
            }
            if let Some(e) = a.timing_epochs {
                cfg.timing.epochs = e;
            }
            cfg.validate()?;
            let report = run_timing_on(&cfg, &prepared(&cfg)?)?;
            let csv = report.to_csv();
            if let Some(dir) = &cfg.output_dir {
                write(&dir.join("timing.csv"), &csv)?;
            }
            print!("{csv}");
            println!(
                "fit_to_epoch_ratio={} within_two_epochs={} arm_gap={}",
                report.fit_to_epoch_ratio,
                report.within_two_epochs(),
                report.arm_gap
            );
        }
        Command::Scaling(a) => {
            let mut cfg = a.exp.config(seed)?;
            if let Some(s) = &a.sizes {
                cfg.scaling.sizes = s.clone();
            }
            if let Some(r) = a.repeats {
                cfg.scaling.repeats = r;
            }
            if let Some(s) = seed {
                cfg.dataset.seed = s;
            }
            let report = marsnet::run_scaling(&cfg)?;
            let csv = report.to_csv();
            if let Some(dir) = &cfg.output_dir {
                write(&dir.join("scaling.csv"), &csv)?;
            }
            print!("{csv}");
            println!("slope={}", report.slope);
        }
    }
    Ok(())
}

/// `target` with every hidden width replaced by the current one, so that
/// only the depth changes.
fn shallow_target(net: &Network, target: &[usize]) -> Vec<usize> {
    let current = net.widths();
    let last_hidden = current[current.len() - 2];
    let mut out = target.to_vec();
    let hidden = out.len().saturating_sub(2);
    for (k, w) in out.iter_mut().enumerate().skip(1).take(hidden) {
        *w = current.get(k).filter(|_| k < current.len() - 1).copied().unwrap_or(last_hidden);
    }
    out
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<marsnet::Error>() {
        Some(e) if e.is_validation() => 2,
        _ if err.downcast_ref::<serde_json::Error>().is_some() => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors already embed their cause in the message.
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
